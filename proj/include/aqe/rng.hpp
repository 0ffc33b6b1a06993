#pragma once

#include <cstdint>
#include <random>
#include <string>

namespace aqe {

/// Seeded random stream with portable samplers.
///
/// All sampling is built directly on the mt19937_64 output so results do not
/// depend on the standard library's distribution implementations. Stream
/// state round-trips through save_state()/restore_state() exactly, which is
/// what makes checkpoint-resume bit-exact.
class Rng {
public:
    Rng() : engine_(0x9e3779b97f4a7c15ULL) {}

    /// Independent stream derived from (seed, stream_id).
    static Rng stream(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal via Box-Muller; stateless per call.
    double normal();

    /// Uniform index in [0, n); unbiased via rejection.
    std::size_t index(std::size_t n);

    std::string save_state() const;
    void restore_state(const std::string& text);

    bool operator==(const Rng& other) const { return engine_ == other.engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace aqe
