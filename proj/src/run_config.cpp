#include "aqe/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "aqe/errors.hpp"

namespace aqe {

const char* const kSeedEnvVar = "AQE_SEED";

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

struct KeyHandler {
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
};

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    T out{};
    if constexpr (std::is_floating_point_v<T>) {
        try {
            std::size_t pos = 0;
            out = static_cast<T>(std::stod(v, &pos));
            if (pos != v.size()) throw std::invalid_argument("");
        } catch (...) {
            throw ParseError("config key '" + key + "': expected a number, got '" +
                             v + "'");
        }
    } else {
        auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || ptr != v.data() + v.size())
            throw ParseError("config key '" + key +
                             "': expected an integer, got '" + v + "'");
    }
    return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
    const std::string v = trim(value);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ParseError("config key '" + key + "': expected true/false, got '" +
                     v + "'");
}

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}

double parse_double_or_nan(const std::string& key, const std::string& value) {
    if (trim(value) == "nan") return std::numeric_limits<double>::quiet_NaN();
    return parse_number<double>(key, value);
}

// Declaration order here is the canonical echo order.
const std::vector<std::pair<std::string, KeyHandler>>& key_table() {
    static const std::vector<std::pair<std::string, KeyHandler>> table = {
        {"env_spec",
         {[](RunConfig& c, const std::string& v) { c.env_spec = trim(v); },
          [](const RunConfig& c) { return c.env_spec; }}},
        {"run_name",
         {[](RunConfig& c, const std::string& v) { c.run_name = trim(v); },
          [](const RunConfig& c) { return c.run_name; }}},
        {"output_dir",
         {[](RunConfig& c, const std::string& v) { c.output_dir = trim(v); },
          [](const RunConfig& c) { return c.output_dir; }}},
        {"seed",
         {[](RunConfig& c, const std::string& v) {
              c.seed = parse_number<std::uint64_t>("seed", v);
          },
          [](const RunConfig& c) { return std::to_string(c.seed); }}},
        {"N",
         {[](RunConfig& c, const std::string& v) {
              c.N = parse_number<int>("N", v);
          },
          [](const RunConfig& c) { return std::to_string(c.N); }}},
        {"h",
         {[](RunConfig& c, const std::string& v) {
              c.h = parse_number<int>("h", v);
          },
          [](const RunConfig& c) { return std::to_string(c.h); }}},
        {"K",
         {[](RunConfig& c, const std::string& v) {
              c.K = parse_number<int>("K", v);
          },
          [](const RunConfig& c) { return std::to_string(c.K); }}},
        {"aggregator",
         {[](RunConfig& c, const std::string& v) { c.aggregator = trim(v); },
          [](const RunConfig& c) { return c.aggregator; }}},
        {"G",
         {[](RunConfig& c, const std::string& v) {
              c.G = parse_number<int>("G", v);
          },
          [](const RunConfig& c) { return std::to_string(c.G); }}},
        {"gamma",
         {[](RunConfig& c, const std::string& v) {
              c.gamma = parse_number<double>("gamma", v);
          },
          [](const RunConfig& c) { return format_double(c.gamma); }}},
        {"polyak_retain",
         {[](RunConfig& c, const std::string& v) {
              c.polyak_retain = parse_number<double>("polyak_retain", v);
          },
          [](const RunConfig& c) { return format_double(c.polyak_retain); }}},
        {"lr",
         {[](RunConfig& c, const std::string& v) {
              c.lr = parse_number<double>("lr", v);
          },
          [](const RunConfig& c) { return format_double(c.lr); }}},
        {"batch_size",
         {[](RunConfig& c, const std::string& v) {
              c.batch_size = parse_number<int>("batch_size", v);
          },
          [](const RunConfig& c) { return std::to_string(c.batch_size); }}},
        {"buffer_size",
         {[](RunConfig& c, const std::string& v) {
              c.buffer_size = parse_number<std::uint64_t>("buffer_size", v);
          },
          [](const RunConfig& c) { return std::to_string(c.buffer_size); }}},
        {"hidden_critic",
         {[](RunConfig& c, const std::string& v) { c.hidden_critic = trim(v); },
          [](const RunConfig& c) { return c.hidden_critic; }}},
        {"hidden_policy",
         {[](RunConfig& c, const std::string& v) { c.hidden_policy = trim(v); },
          [](const RunConfig& c) { return c.hidden_policy; }}},
        {"alpha_mode",
         {[](RunConfig& c, const std::string& v) { c.alpha_mode = trim(v); },
          [](const RunConfig& c) { return c.alpha_mode; }}},
        {"fixed_alpha",
         {[](RunConfig& c, const std::string& v) {
              c.fixed_alpha = parse_number<double>("fixed_alpha", v);
          },
          [](const RunConfig& c) { return format_double(c.fixed_alpha); }}},
        {"target_entropy",
         {[](RunConfig& c, const std::string& v) {
              c.target_entropy = parse_double_or_nan("target_entropy", v);
          },
          [](const RunConfig& c) { return format_double(c.target_entropy); }}},
        {"start_steps",
         {[](RunConfig& c, const std::string& v) {
              c.start_steps = parse_number<long>("start_steps", v);
          },
          [](const RunConfig& c) { return std::to_string(c.start_steps); }}},
        {"total_env_steps",
         {[](RunConfig& c, const std::string& v) {
              c.total_env_steps = parse_number<long>("total_env_steps", v);
          },
          [](const RunConfig& c) {
              return std::to_string(c.total_env_steps);
          }}},
        {"eval_every",
         {[](RunConfig& c, const std::string& v) {
              c.eval_every = parse_number<long>("eval_every", v);
          },
          [](const RunConfig& c) { return std::to_string(c.eval_every); }}},
        {"eval_episodes",
         {[](RunConfig& c, const std::string& v) {
              c.eval_episodes = parse_number<int>("eval_episodes", v);
          },
          [](const RunConfig& c) { return std::to_string(c.eval_episodes); }}},
        {"stop_at_return",
         {[](RunConfig& c, const std::string& v) {
              c.stop_at_return = parse_double_or_nan("stop_at_return", v);
          },
          [](const RunConfig& c) { return format_double(c.stop_at_return); }}},
        {"record_wallclock",
         {[](RunConfig& c, const std::string& v) {
              c.record_wallclock = parse_bool("record_wallclock", v);
          },
          [](const RunConfig& c) {
              return std::string(c.record_wallclock ? "true" : "false");
          }}},
        {"parallel_critics",
         {[](RunConfig& c, const std::string& v) {
              c.parallel_critics = parse_bool("parallel_critics", v);
          },
          [](const RunConfig& c) {
              return std::string(c.parallel_critics ? "true" : "false");
          }}},
    };
    return table;
}

const KeyHandler& find_key(const std::string& key) {
    for (const auto& [name, handler] : key_table())
        if (name == key) return handler;
    throw ParseError("unknown config key '" + key + "'");
}

/// Applies one "key = value" line; returns the key, or "" for blank/comment.
std::string apply_line(RunConfig& config, const std::string& line,
                       int line_number) {
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') return "";
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
        throw ParseError("config line " + std::to_string(line_number) +
                         ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = stripped.substr(eq + 1);
    find_key(key).set(config, value);
    return key;
}

void validate(RunConfig& config) {
    const int nh = config.N * config.h;
    if (config.N < 1) throw ParseError("config key 'N': must be >= 1");
    if (config.h < 1) throw ParseError("config key 'h': must be >= 1");
    if (config.K == -1) config.K = resolved_keep_k(config);
    if (config.aggregator == "keepk" && (config.K < 1 || config.K > nh))
        throw ParseError("config key 'K': " + std::to_string(config.K) +
                         " outside [1, " + std::to_string(nh) +
                         "] for N*h = " + std::to_string(nh));
    Aggregator::parse(config.aggregator, std::max(config.K, 1))
        .validate(nh);
    if (config.G < 1) throw ParseError("config key 'G': must be >= 1");
    if (config.gamma < 0.0 || config.gamma >= 1.0)
        throw ParseError("config key 'gamma': must be in [0, 1)");
    if (config.polyak_retain < 0.0 || config.polyak_retain > 1.0)
        throw ParseError("config key 'polyak_retain': must be in [0, 1]");
    if (config.lr <= 0.0) throw ParseError("config key 'lr': must be > 0");
    if (config.batch_size < 1)
        throw ParseError("config key 'batch_size': must be >= 1");
    if (config.buffer_size == 0)
        throw ParseError("config key 'buffer_size': must be >= 1");
    if (config.alpha_mode != "auto" && config.alpha_mode != "fixed")
        throw ParseError("config key 'alpha_mode': must be auto or fixed");
    if (config.fixed_alpha < 0.0)
        throw ParseError("config key 'fixed_alpha': must be >= 0");
    if (config.start_steps < 0)
        throw ParseError("config key 'start_steps': must be >= 0");
    if (config.total_env_steps < 0)
        throw ParseError("config key 'total_env_steps': must be >= 0");
    if (config.eval_every < 1)
        throw ParseError("config key 'eval_every': must be >= 1");
    if (config.eval_episodes < 1)
        throw ParseError("config key 'eval_episodes': must be >= 1");
    parse_hidden_sizes(config.hidden_critic, "hidden_critic");
    parse_hidden_sizes(config.hidden_policy, "hidden_policy");
    if (config.run_name.empty())
        throw ParseError("config key 'run_name': must not be empty");
}

} // namespace

int resolved_keep_k(const RunConfig& config) {
    if (config.K >= 0) return config.K;
    return static_cast<int>(std::lround(0.8 * config.N * config.h));
}

std::vector<int> parse_hidden_sizes(const std::string& text,
                                    const std::string& key_name) {
    std::vector<int> sizes;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        int v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc() || ptr != item.data() + item.size() || v <= 0)
            throw ParseError("config key '" + key_name +
                             "': bad layer size '" + item + "'");
        sizes.push_back(v);
    }
    if (sizes.empty())
        throw ParseError("config key '" + key_name + "': no layer sizes");
    return sizes;
}

RunConfig parse_config_text(
    const std::string& text,
    const std::vector<std::pair<std::string, std::string>>& flag_overrides) {
    RunConfig config;
    bool seed_given = false;
    std::istringstream in(text);
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (apply_line(config, line, line_number) == "seed") seed_given = true;
    }
    for (const auto& [key, value] : flag_overrides) {
        if (key == "seed") seed_given = true;
        find_key(key).set(config, value);
    }
    if (!seed_given) {
        if (const char* env = std::getenv(kSeedEnvVar))
            config.seed = parse_number<std::uint64_t>("seed (AQE_SEED)", env);
    }
    validate(config);
    return config;
}

RunConfig parse_config(
    const std::string& path,
    const std::vector<std::pair<std::string, std::string>>& flag_overrides) {
    std::string text;
    if (!path.empty()) {
        std::ifstream in(path);
        if (!in) throw IoError("cannot read config file: " + path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        text = buffer.str();
    }
    return parse_config_text(text, flag_overrides);
}

std::string echo_config(const RunConfig& config) {
    std::ostringstream out;
    for (const auto& [name, handler] : key_table())
        out << name << " = " << handler.get(config) << "\n";
    return out.str();
}

AgentConfig to_agent_config(const RunConfig& config) {
    AgentConfig a;
    a.ensemble_size = config.N;
    a.heads = config.h;
    a.aggregator = Aggregator::parse(config.aggregator, resolved_keep_k(config));
    a.updates_per_step = config.G;
    a.gamma = config.gamma;
    a.polyak_retain = config.polyak_retain;
    a.learning_rate = config.lr;
    a.batch_size = config.batch_size;
    a.buffer_capacity = config.buffer_size;
    a.critic_hidden = parse_hidden_sizes(config.hidden_critic, "hidden_critic");
    a.policy_hidden = parse_hidden_sizes(config.hidden_policy, "hidden_policy");
    a.auto_alpha = config.alpha_mode == "auto";
    a.fixed_alpha = config.fixed_alpha;
    a.target_entropy = config.target_entropy;
    a.start_steps = config.start_steps;
    a.seed = config.seed;
    a.total_env_steps = config.total_env_steps;
    a.eval_every = config.eval_every;
    a.eval_episodes = config.eval_episodes;
    a.parallel_critics = config.parallel_critics;
    return a;
}

} // namespace aqe
