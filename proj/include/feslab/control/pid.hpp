#pragma once

#include "feslab/neurosim/plants.hpp"

#include <vector>

namespace feslab::control {

struct PidGains {
  double kp = 1.0;
  double ki = 0.0;
  double kd = 0.0;
};

/// PID with clamped output, derivative on the measurement (no kick on target
/// steps), and conditional-integration anti-windup: the integral freezes
/// whenever the output is saturated and the error would push it deeper.
class PidController {
 public:
  explicit PidController(PidGains gains, double out_lo = 0.0, double out_hi = 1.0,
                         double integral_limit = 10.0);

  void reset();

  /// Full form: derivative taken on the measurement channel.
  double step(double error, double measurement, double dt);

  /// Error-only form; equivalent to a constant-target loop where the
  /// measurement is -error.
  double step(double error, double dt) { return step(error, -error, dt); }

  const PidGains& gains() const { return gains_; }
  double integral() const { return integral_; }

 private:
  PidGains gains_;
  double out_lo_, out_hi_;
  double integral_limit_;
  double integral_ = 0.0;
  bool has_prev_ = false;
  double prev_measurement_ = 0.0;
};

inline double pid_step(PidController& c, double error, double dt) { return c.step(error, dt); }

/// Crank-angle windows gating which muscles receive the PID output during
/// cycling. Windows are half-open [on, off) and wrap at 2 pi.
struct ActiveMusclePattern {
  struct Window {
    double on = 0.0;
    double off = 0.0;
  };
  std::vector<Window> windows;  // one per muscle

  bool active(std::size_t muscle, double phi) const;

  /// Pattern matching each muscle's torque-effectiveness support.
  static ActiveMusclePattern from_lobes(const std::vector<neurosim::MuscleParams>& muscles);
};

}  // namespace feslab::control
