#include "aqe/env.hpp"

#include <charconv>
#include <string>

#include "aqe/errors.hpp"
#include "aqe/pendulum.hpp"

namespace aqe {

Vec Env::snapshot_state() const {
    throw UnsupportedFeatureError("environment does not support state injection");
}

Vec Env::restore_state(const Vec&) {
    throw UnsupportedFeatureError("environment does not support state injection");
}

Vec ChainEnv::action_low() const {
    Vec v(1);
    v(0) = -1.0;
    return v;
}

Vec ChainEnv::action_high() const {
    Vec v(1);
    v(0) = 1.0;
    return v;
}

Vec ChainEnv::reset(Rng&) {
    position_ = 0;
    steps_ = 0;
    Vec obs(1);
    obs(0) = 0.0;
    return obs;
}

StepResult ChainEnv::step(const Vec& action) {
    if (action.size() != 1)
        throw ShapeError("ChainEnv::step: action must be 1-D");
    if (steps_ >= kHorizon)
        throw InvalidStateError("ChainEnv::step: episode already over");
    position_ = std::min(position_ + 1, kHorizon - 1);
    steps_ += 1;
    StepResult r;
    r.obs = Vec(1);
    r.obs(0) = static_cast<double>(position_);
    r.reward = 1.0;
    r.terminal = false;              // the horizon is a time limit, not a
    r.truncated = steps_ >= kHorizon; // terminal state
    return r;
}

Vec ChainEnv::snapshot_state() const {
    Vec s(2);
    s(0) = static_cast<double>(position_);
    s(1) = static_cast<double>(steps_);
    return s;
}

Vec ChainEnv::restore_state(const Vec& snapshot) {
    if (snapshot.size() != 2)
        throw ShapeError("ChainEnv::restore_state: expected 2 values");
    position_ = static_cast<int>(snapshot(0));
    steps_ = static_cast<int>(snapshot(1));
    Vec obs(1);
    obs(0) = static_cast<double>(position_);
    return obs;
}

std::unique_ptr<Env> ChainEnv::clone() const {
    return std::make_unique<ChainEnv>(*this);
}

std::unique_ptr<Env> make_env(const std::string& env_spec) {
    if (env_spec == "pendulum") return std::make_unique<PendulumEnv>();
    if (env_spec == "chain3") return std::make_unique<ChainEnv>();
    if (is_tabular_env_spec(env_spec))
        throw std::invalid_argument(
            "env_spec '" + env_spec +
            "' is a tabular MDP; use the tabular subcommand");
    throw std::invalid_argument("unknown env_spec '" + env_spec +
                                "' (pendulum, chain3, random_mdp:...)");
}

bool is_tabular_env_spec(const std::string& env_spec) {
    return env_spec.rfind("random_mdp:", 0) == 0;
}

namespace {

std::uint64_t parse_spec_number(const std::string& spec,
                                const std::string& field) {
    const std::string key = field + "=";
    auto pos = spec.find(key);
    if (pos == std::string::npos)
        throw ParseError("env_spec '" + spec + "' is missing " + field + "=");
    pos += key.size();
    auto end = spec.find(',', pos);
    if (end == std::string::npos) end = spec.size();
    std::uint64_t value = 0;
    const char* first = spec.data() + pos;
    const char* last = spec.data() + end;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ParseError("env_spec '" + spec + "': bad value for " + field);
    return value;
}

} // namespace

TabularEnvSpec parse_tabular_env_spec(const std::string& env_spec) {
    if (!is_tabular_env_spec(env_spec))
        throw ParseError("not a tabular env_spec: '" + env_spec + "'");
    TabularEnvSpec spec;
    spec.num_states = static_cast<int>(parse_spec_number(env_spec, "S"));
    spec.num_actions = static_cast<int>(parse_spec_number(env_spec, "A"));
    spec.seed = parse_spec_number(env_spec, "seed");
    if (spec.num_states < 1 || spec.num_actions < 1)
        throw ParseError("env_spec '" + env_spec + "': S and A must be >= 1");
    return spec;
}

} // namespace aqe
