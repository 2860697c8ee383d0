#include "softrl/actuation.hpp"

#include <algorithm>
#include <cmath>

namespace softrl::actuation {

void PidGains::validate() const {
    if (kp < 0 || ki < 0 || kd < 0) throw ConfigError("pid: gains must be >= 0");
    if (!(integral_clamp > 0) || !(output_clamp > 0))
        throw ConfigError("pid: clamps must be positive");
    if (!(deriv_filter > 0) || deriv_filter > 1)
        throw ConfigError("pid: deriv_filter must be in (0, 1]");
}

std::pair<double, PidState> pid_step(const PidGains& gains, const PidState& state, double error,
                                     double dt) {
    if (!(dt > 0)) throw ConfigError("pid: dt must be positive");
    PidState next = state;
    next.integral = std::clamp(state.integral + error * dt, -gains.integral_clamp,
                               gains.integral_clamp);
    double raw_derivative = state.has_prev ? (error - state.prev_error) / dt : 0.0;
    next.deriv_filtered = state.deriv_filtered +
                          gains.deriv_filter * (raw_derivative - state.deriv_filtered);
    next.prev_error = error;
    next.has_prev = true;
    double u = gains.kp * error + gains.ki * next.integral + gains.kd * next.deriv_filtered;
    u = std::clamp(u, -gains.output_clamp, gains.output_clamp);
    return {u, next};
}

double actuator_step(const ActuatorParams& params, double pressure, double u, double dt) {
    if (!(dt > 0)) throw ConfigError("actuator: dt must be positive");
    double rate = std::clamp(params.speed_gain * u, -params.rate_max, params.rate_max);
    return std::clamp(pressure + rate * dt, params.pressure_min, params.pressure_max);
}

PressureLoop::PressureLoop(const PidGains& gains, const ActuatorParams& params,
                           double initial_pressure)
    : gains_(gains), params_(params), pressure_(initial_pressure) {
    gains_.validate();
}

double PressureLoop::tick(double setpoint, double dt) {
    auto [u, next] = pid_step(gains_, pid_, setpoint - pressure_, dt);
    pid_ = next;
    pressure_ = actuator_step(params_, pressure_, u, dt);
    return pressure_;
}

double PressureLoop::run(double setpoint, double dt, std::size_t n_ticks) {
    for (std::size_t i = 0; i < n_ticks; ++i) tick(setpoint, dt);
    return pressure_;
}

void PressureLoop::reset(double pressure) {
    pressure_ = pressure;
    pid_ = PidState{};
}

}  // namespace softrl::actuation
