#include "aqe/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "aqe/errors.hpp"

namespace aqe {

namespace {
constexpr double kPi = std::numbers::pi;
}

double PendulumEnv::normalize_angle(double theta) {
    double y = std::fmod(theta + kPi, 2.0 * kPi);
    if (y <= 0.0) y += 2.0 * kPi;
    return y - kPi; // (-pi, pi]
}

Vec PendulumEnv::action_low() const {
    Vec v(1);
    v(0) = -params_.max_torque;
    return v;
}

Vec PendulumEnv::action_high() const {
    Vec v(1);
    v(0) = params_.max_torque;
    return v;
}

Vec PendulumEnv::observation() const {
    Vec obs(3);
    obs(0) = std::cos(theta_);
    obs(1) = std::sin(theta_);
    obs(2) = theta_dot_;
    return obs;
}

Vec PendulumEnv::reset(Rng& rng) {
    // theta in (-pi, pi]: draw in [-pi, pi) and flip the closed end.
    theta_ = -rng.uniform(-kPi, kPi);
    theta_dot_ = rng.uniform(-1.0, 1.0);
    steps_ = 0;
    return observation();
}

StepResult PendulumEnv::step(const Vec& action) {
    if (action.size() != 1)
        throw ShapeError("PendulumEnv::step: action must be 1-D");
    if (steps_ >= params_.horizon)
        throw InvalidStateError("PendulumEnv::step: episode already over");

    const double u =
        std::clamp(action(0), -params_.max_torque, params_.max_torque);
    const double angle = normalize_angle(theta_);
    const double reward =
        -(angle * angle + 0.1 * theta_dot_ * theta_dot_ + 0.001 * u * u);

    const double g = params_.gravity, m = params_.mass, l = params_.length;
    const double accel = 3.0 * g / (2.0 * l) * std::sin(theta_) +
                         3.0 / (m * l * l) * u;
    // Semi-implicit Euler: velocity first, position with the new velocity.
    theta_dot_ = std::clamp(theta_dot_ + accel * params_.dt,
                            -params_.max_speed, params_.max_speed);
    theta_ += theta_dot_ * params_.dt;
    steps_ += 1;

    StepResult r;
    r.obs = observation();
    r.reward = reward;
    r.terminal = false; // swing-up has no absorbing state
    r.truncated = steps_ >= params_.horizon;
    return r;
}

Vec PendulumEnv::snapshot_state() const {
    Vec s(3);
    s(0) = theta_;
    s(1) = theta_dot_;
    s(2) = static_cast<double>(steps_);
    return s;
}

Vec PendulumEnv::restore_state(const Vec& snapshot) {
    if (snapshot.size() != 3)
        throw ShapeError("PendulumEnv::restore_state: expected 3 values");
    theta_ = snapshot(0);
    theta_dot_ = snapshot(1);
    steps_ = static_cast<int>(snapshot(2));
    return observation();
}

std::unique_ptr<Env> PendulumEnv::clone() const {
    return std::make_unique<PendulumEnv>(*this);
}

} // namespace aqe
