#pragma once

#include <memory>

#include "aqe/env.hpp"

namespace aqe {

/// Torque-limited pendulum swing-up. Observation is (cos th, sin th, thdot);
/// reward is -(angle^2 + 0.1*thdot^2 + 0.001*u^2) with the angle normalized
/// to (-pi, pi], so it is always <= 0 and 0 only at the upright rest point
/// with zero torque. Episodes truncate at the horizon; there is no terminal
/// state.
class PendulumEnv : public Env {
public:
    struct Params {
        double gravity = 10.0;
        double mass = 1.0;
        double length = 1.0;
        double dt = 0.05;
        double max_torque = 2.0;
        double max_speed = 8.0;
        int horizon = 200;
    };

    PendulumEnv() = default;
    explicit PendulumEnv(const Params& params) : params_(params) {}

    int obs_dim() const override { return 3; }
    int action_dim() const override { return 1; }
    Vec action_low() const override;
    Vec action_high() const override;

    /// theta uniform in (-pi, pi], thetadot uniform in [-1, 1].
    Vec reset(Rng& rng) override;

    /// Semi-implicit Euler with clamped torque and speed; reward is paid on
    /// the pre-step state and the applied (clamped) torque.
    StepResult step(const Vec& action) override;

    bool supports_state_injection() const override { return true; }
    Vec snapshot_state() const override;   // [theta, theta_dot, step_count]
    Vec restore_state(const Vec& snapshot) override;
    std::unique_ptr<Env> clone() const override;

    double theta() const { return theta_; }
    double theta_dot() const { return theta_dot_; }
    const Params& params() const { return params_; }

    /// Wraps an angle into (-pi, pi].
    static double normalize_angle(double theta);

private:
    Vec observation() const;

    Params params_;
    double theta_ = 0.0;
    double theta_dot_ = 0.0;
    int steps_ = 0;
};

} // namespace aqe
