#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "aqe/network.hpp"
#include "aqe/rng.hpp"

namespace aqe {

struct StepResult {
    Vec obs;
    double reward = 0.0;
    bool terminal = false;  // genuine terminal state
    bool truncated = false; // time-limit cut; bootstrapping continues
};

/// Continuous-control environment interface. Instances are independent value
/// objects; clone() gives a fresh copy with the same parameters and state.
class Env {
public:
    virtual ~Env() = default;

    virtual int obs_dim() const = 0;
    virtual int action_dim() const = 0;
    virtual Vec action_low() const = 0;
    virtual Vec action_high() const = 0;

    virtual Vec reset(Rng& rng) = 0;
    virtual StepResult step(const Vec& action) = 0;

    /// State injection, for Monte Carlo return evaluation from arbitrary
    /// (s, a). Environments that cannot rewind report false and the
    /// snapshot calls throw UnsupportedFeatureError.
    virtual bool supports_state_injection() const { return false; }
    virtual Vec snapshot_state() const;
    virtual Vec restore_state(const Vec& snapshot); // returns the observation

    virtual std::unique_ptr<Env> clone() const = 0;
};

/// Three-state diagnostic chain: observations are the scalar position
/// {0,1,2}, the 1-D action is ignored, every step pays reward 1, and the
/// episode is truncated (not terminated) after the third step.
class ChainEnv : public Env {
public:
    int obs_dim() const override { return 1; }
    int action_dim() const override { return 1; }
    Vec action_low() const override;
    Vec action_high() const override;
    Vec reset(Rng& rng) override;
    StepResult step(const Vec& action) override;
    bool supports_state_injection() const override { return true; }
    Vec snapshot_state() const override;
    Vec restore_state(const Vec& snapshot) override;
    std::unique_ptr<Env> clone() const override;

    static constexpr int kHorizon = 3;

private:
    int position_ = 0;
    int steps_ = 0;
};

/// Builds "pendulum" or "chain3". Tabular specs ("random_mdp:...") belong to
/// the tabular tooling and are rejected here with a pointer in the message.
std::unique_ptr<Env> make_env(const std::string& env_spec);

/// Parsed "random_mdp:S=..,A=..,seed=.." spec.
struct TabularEnvSpec {
    int num_states = 0;
    int num_actions = 0;
    std::uint64_t seed = 0;
};

bool is_tabular_env_spec(const std::string& env_spec);
TabularEnvSpec parse_tabular_env_spec(const std::string& env_spec);

} // namespace aqe
