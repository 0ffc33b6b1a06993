#include "aqe/rng.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "aqe/errors.hpp"

namespace aqe {

Rng Rng::stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32)};
    Rng r;
    r.engine_.seed(seq);
    return r;
}

double Rng::normal() {
    const double u1 = 1.0 - uniform01(); // (0, 1], keeps log finite
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

std::size_t Rng::index(std::size_t n) {
    if (n == 0) throw InvalidStateError("Rng::index: n must be positive");
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return static_cast<std::size_t>(x % n);
}

std::string Rng::save_state() const {
    std::ostringstream out;
    out << engine_;
    return out.str();
}

void Rng::restore_state(const std::string& text) {
    std::istringstream in(text);
    in >> engine_;
    if (in.fail()) throw ParseError("Rng::restore_state: malformed state text");
}

} // namespace aqe
