#pragma once

#include "softrl/util.hpp"

namespace softrl::actuation {

struct PidGains {
    double kp = 0.8;
    double ki = 0.1;
    double kd = 0.2;
    double integral_clamp = 0.5;  // kPa*s
    double output_clamp = 4.0;    // motor speed units
    double deriv_filter = 0.2;    // low-pass coefficient on the derivative, (0, 1]

    void validate() const;
};

struct PidState {
    double integral = 0.0;
    double prev_error = 0.0;
    double deriv_filtered = 0.0;
    bool has_prev = false;
};

/// One PID evaluation: clamped-integral PI-D on the error. The derivative is
/// taken on the error, low-passed by deriv_filter, with the first-step
/// derivative defined as zero.
std::pair<double, PidState> pid_step(const PidGains& gains, const PidState& state, double error,
                                     double dt);

struct ActuatorParams {
    double speed_gain = 8.0;   // kPa/s per motor speed unit
    double rate_max = 10.0;    // kPa/s
    double pressure_min = 0.0;
    double pressure_max = 60.0;
};

/// First-order syringe model: dp/dt = speed_gain * u, rate-limited and clamped
/// to the pressure bounds.
double actuator_step(const ActuatorParams& params, double pressure, double u, double dt);

/// One chamber's closed pressure loop (PID commanding the syringe motor).
class PressureLoop {
public:
    PressureLoop(const PidGains& gains, const ActuatorParams& params, double initial_pressure);

    /// Advances the loop n_ticks * dt seconds toward the setpoint.
    double run(double setpoint, double dt, std::size_t n_ticks);
    /// Single tick; returns the new pressure.
    double tick(double setpoint, double dt);

    double pressure() const { return pressure_; }
    const PidState& pid_state() const { return pid_; }
    void reset(double pressure);

private:
    PidGains gains_;
    ActuatorParams params_;
    PidState pid_;
    double pressure_;
};

}  // namespace softrl::actuation
