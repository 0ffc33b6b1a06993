#include "aqe/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "aqe/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint records are little-endian; big-endian hosts need a "
              "byte-swapping layer");

namespace aqe {

namespace {

constexpr char kNetMagic[8] = {'A', 'Q', 'E', 'N', 'E', 'T', '0', '1'};
constexpr char kEnsMagic[8] = {'A', 'Q', 'E', 'E', 'N', 'S', '0', '1'};
constexpr char kPolMagic[8] = {'A', 'Q', 'E', 'P', 'O', 'L', '0', '1'};
constexpr char kAgtMagic[8] = {'A', 'Q', 'E', 'A', 'G', 'T', '0', '1'};

void write_bytes(std::ostream& out, const void* data, std::size_t n) {
    out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) throw IoError("checkpoint: write failed");
}

void read_bytes(std::istream& in, void* data, std::size_t n) {
    in.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n)
        throw ParseError("checkpoint: unexpected end of stream");
}

void write_u32(std::ostream& out, std::uint32_t v) { write_bytes(out, &v, 4); }
void write_u64(std::ostream& out, std::uint64_t v) { write_bytes(out, &v, 8); }
void write_f64(std::ostream& out, double v) { write_bytes(out, &v, 8); }

std::uint32_t read_u32(std::istream& in) {
    std::uint32_t v;
    read_bytes(in, &v, 4);
    return v;
}
std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v;
    read_bytes(in, &v, 8);
    return v;
}
double read_f64(std::istream& in) {
    double v;
    read_bytes(in, &v, 8);
    return v;
}

void write_magic(std::ostream& out, const char (&magic)[8]) {
    write_bytes(out, magic, 8);
}

void expect_magic(std::istream& in, const char (&magic)[8],
                  const char* what) {
    char buf[8];
    read_bytes(in, buf, 8);
    if (std::memcmp(buf, magic, 8) != 0)
        throw ParseError(std::string("checkpoint: bad magic for ") + what);
}

void write_matrix(std::ostream& out, const Mat& m) {
    write_bytes(out, m.data(), sizeof(double) * m.size());
}

void read_matrix(std::istream& in, Mat& m) {
    read_bytes(in, m.data(), sizeof(double) * m.size());
}

void write_vector(std::ostream& out, const Vec& v) {
    write_bytes(out, v.data(), sizeof(double) * v.size());
}

void read_vector(std::istream& in, Vec& v) {
    read_bytes(in, v.data(), sizeof(double) * v.size());
}

void write_string(std::ostream& out, const std::string& s) {
    write_u32(out, static_cast<std::uint32_t>(s.size()));
    write_bytes(out, s.data(), s.size());
}

std::string read_string(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    if (n > (1u << 26))
        throw ParseError("checkpoint: implausible string length");
    std::string s(n, '\0');
    if (n) read_bytes(in, s.data(), n);
    return s;
}

void write_eigen_vec_sized(std::ostream& out, const Vec& v) {
    write_u32(out, static_cast<std::uint32_t>(v.size()));
    write_vector(out, v);
}

Vec read_eigen_vec_sized(std::istream& in) {
    const std::uint32_t n = read_u32(in);
    if (n > (1u << 24)) throw ParseError("checkpoint: implausible vector size");
    Vec v(n);
    read_vector(in, v);
    return v;
}

} // namespace

void write_network(std::ostream& out, const NetworkParams& p) {
    write_magic(out, kNetMagic);
    write_u32(out, static_cast<std::uint32_t>(p.layer_sizes.size()));
    for (int s : p.layer_sizes) write_u32(out, static_cast<std::uint32_t>(s));
    for (int l = 0; l < p.num_layers(); ++l) {
        write_matrix(out, p.weights[l]);
        write_vector(out, p.biases[l]);
    }
    for (int l = 0; l < p.num_layers(); ++l) {
        write_matrix(out, p.adam_m_w[l]);
        write_vector(out, p.adam_m_b[l]);
    }
    for (int l = 0; l < p.num_layers(); ++l) {
        write_matrix(out, p.adam_v_w[l]);
        write_vector(out, p.adam_v_b[l]);
    }
    write_u64(out, static_cast<std::uint64_t>(p.adam_t));
}

NetworkParams read_network(std::istream& in) {
    expect_magic(in, kNetMagic, "network record");
    const std::uint32_t count = read_u32(in);
    if (count < 2 || count > 64)
        throw ParseError("checkpoint: implausible layer count");
    std::vector<int> sizes(count);
    for (auto& s : sizes) {
        s = static_cast<int>(read_u32(in));
        if (s <= 0 || s > (1 << 20))
            throw ParseError("checkpoint: implausible layer size");
    }
    // Build with the right shapes, then overwrite every value.
    NetworkParams p = init_network(sizes, 0);
    for (int l = 0; l < p.num_layers(); ++l) {
        read_matrix(in, p.weights[l]);
        read_vector(in, p.biases[l]);
    }
    for (int l = 0; l < p.num_layers(); ++l) {
        read_matrix(in, p.adam_m_w[l]);
        read_vector(in, p.adam_m_b[l]);
    }
    for (int l = 0; l < p.num_layers(); ++l) {
        read_matrix(in, p.adam_v_w[l]);
        read_vector(in, p.adam_v_b[l]);
    }
    p.adam_t = static_cast<std::int64_t>(read_u64(in));
    p.bump_revision();
    return p;
}

void write_ensemble(std::ostream& out, const CriticEnsemble& ens) {
    write_magic(out, kEnsMagic);
    write_u32(out, static_cast<std::uint32_t>(ens.size()));
    write_u32(out, static_cast<std::uint32_t>(ens.heads));
    const auto& sizes = ens.online.front().layer_sizes;
    write_u32(out, static_cast<std::uint32_t>(sizes.size()));
    for (int s : sizes) write_u32(out, static_cast<std::uint32_t>(s));
    for (const auto& net : ens.online) write_network(out, net);
    for (const auto& net : ens.target) write_network(out, net);
}

CriticEnsemble read_ensemble(std::istream& in) {
    expect_magic(in, kEnsMagic, "ensemble record");
    const std::uint32_t n = read_u32(in);
    const std::uint32_t heads = read_u32(in);
    if (n == 0 || n > 4096 || heads == 0 || heads > 4096)
        throw ParseError("checkpoint: implausible ensemble header");
    const std::uint32_t count = read_u32(in);
    std::vector<int> sizes(count);
    for (auto& s : sizes) s = static_cast<int>(read_u32(in));
    CriticEnsemble ens;
    ens.heads = static_cast<int>(heads);
    for (std::uint32_t i = 0; i < n; ++i)
        ens.online.push_back(read_network(in));
    for (std::uint32_t i = 0; i < n; ++i)
        ens.target.push_back(read_network(in));
    for (const auto& net : ens.online)
        if (net.layer_sizes != sizes)
            throw ParseError("checkpoint: ensemble member shape mismatch");
    return ens;
}

void write_policy(std::ostream& out, const PolicyParams& policy) {
    write_magic(out, kPolMagic);
    write_eigen_vec_sized(out, policy.action_low);
    write_eigen_vec_sized(out, policy.action_high);
    write_network(out, policy.net);
}

PolicyParams read_policy(std::istream& in) {
    expect_magic(in, kPolMagic, "policy record");
    PolicyParams p;
    p.action_low = read_eigen_vec_sized(in);
    p.action_high = read_eigen_vec_sized(in);
    p.net = read_network(in);
    if (p.net.output_dim() != 2 * p.action_dim())
        throw ParseError("checkpoint: policy output width mismatch");
    return p;
}

void write_agent_checkpoint(std::ostream& out, const AgentCheckpoint& c) {
    write_magic(out, kAgtMagic);
    write_string(out, c.env_spec);
    write_u64(out, c.env_steps);
    write_policy(out, c.policy);
    write_u32(out, c.temperature.auto_tune ? 1 : 0);
    write_f64(out, c.temperature.log_alpha);
    write_f64(out, c.temperature.target_entropy);
    write_f64(out, c.temperature.adam_m);
    write_f64(out, c.temperature.adam_v);
    write_u64(out, static_cast<std::uint64_t>(c.temperature.adam_t));
    write_ensemble(out, c.critics);
    write_u64(out, c.buffer_capacity);
    write_u64(out, c.buffer_cursor);
    write_u64(out, c.buffer_data.size());
    if (!c.buffer_data.empty()) {
        const auto& first = c.buffer_data.front();
        write_u32(out, static_cast<std::uint32_t>(first.state.size()));
        write_u32(out, static_cast<std::uint32_t>(first.action.size()));
        for (const Transition& t : c.buffer_data) {
            write_vector(out, t.state);
            write_vector(out, t.action);
            write_f64(out, t.reward);
            write_vector(out, t.next_state);
            write_u32(out, t.done ? 1 : 0);
        }
    }
    write_string(out, c.env_rng_state);
    write_string(out, c.act_rng_state);
    write_string(out, c.update_rng_state);
    write_u32(out, c.episode_active ? 1 : 0);
    write_u64(out, c.episode_steps);
    write_eigen_vec_sized(out, c.current_obs);
    write_eigen_vec_sized(out, c.env_snapshot);
}

AgentCheckpoint read_agent_checkpoint(std::istream& in) {
    expect_magic(in, kAgtMagic, "agent checkpoint");
    AgentCheckpoint c;
    c.env_spec = read_string(in);
    c.env_steps = read_u64(in);
    c.policy = read_policy(in);
    c.temperature.auto_tune = read_u32(in) != 0;
    c.temperature.log_alpha = read_f64(in);
    c.temperature.target_entropy = read_f64(in);
    c.temperature.adam_m = read_f64(in);
    c.temperature.adam_v = read_f64(in);
    c.temperature.adam_t = static_cast<std::int64_t>(read_u64(in));
    c.critics = read_ensemble(in);
    c.buffer_capacity = read_u64(in);
    c.buffer_cursor = read_u64(in);
    const std::uint64_t count = read_u64(in);
    if (count > c.buffer_capacity)
        throw ParseError("checkpoint: buffer size exceeds capacity");
    if (count > 0) {
        const std::uint32_t sdim = read_u32(in);
        const std::uint32_t adim = read_u32(in);
        if (sdim == 0 || sdim > (1u << 20) || adim == 0 || adim > (1u << 20))
            throw ParseError("checkpoint: implausible buffer dimensions");
        c.buffer_data.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            Transition t;
            t.state.resize(sdim);
            read_vector(in, t.state);
            t.action.resize(adim);
            read_vector(in, t.action);
            t.reward = read_f64(in);
            t.next_state.resize(sdim);
            read_vector(in, t.next_state);
            t.done = read_u32(in) != 0;
            c.buffer_data.push_back(std::move(t));
        }
    }
    c.env_rng_state = read_string(in);
    c.act_rng_state = read_string(in);
    c.update_rng_state = read_string(in);
    c.episode_active = read_u32(in) != 0;
    c.episode_steps = read_u64(in);
    c.current_obs = read_eigen_vec_sized(in);
    c.env_snapshot = read_eigen_vec_sized(in);
    return c;
}

void save_agent_checkpoint(const std::filesystem::path& path,
                           const AgentCheckpoint& ckpt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open checkpoint for writing: " +
                            path.string());
    write_agent_checkpoint(out, ckpt);
    out.flush();
    if (!out) throw IoError("failed writing checkpoint: " + path.string());
}

AgentCheckpoint load_agent_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path.string());
    return read_agent_checkpoint(in);
}

} // namespace aqe
