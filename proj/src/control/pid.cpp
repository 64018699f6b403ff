#include "feslab/control/pid.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace feslab::control {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

double wrap_angle(double phi) {
  phi = std::fmod(phi, kTwoPi);
  if (phi < 0.0) phi += kTwoPi;
  return phi;
}
}  // namespace

PidController::PidController(PidGains gains, double out_lo, double out_hi, double integral_limit)
    : gains_(gains), out_lo_(out_lo), out_hi_(out_hi), integral_limit_(integral_limit) {
  if (out_lo >= out_hi) throw std::invalid_argument("pid: output clamp is empty");
}

void PidController::reset() {
  integral_ = 0.0;
  has_prev_ = false;
  prev_measurement_ = 0.0;
}

double PidController::step(double error, double measurement, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("pid: dt must be positive");
  double derivative = 0.0;
  if (has_prev_) derivative = -(measurement - prev_measurement_) / dt;
  prev_measurement_ = measurement;
  has_prev_ = true;

  const double unclamped = gains_.kp * error + gains_.ki * integral_ + gains_.kd * derivative;
  const bool pushing_high = unclamped > out_hi_ && error > 0.0;
  const bool pushing_low = unclamped < out_lo_ && error < 0.0;
  if (!pushing_high && !pushing_low)
    integral_ = std::clamp(integral_ + error * dt, -integral_limit_, integral_limit_);

  const double out = gains_.kp * error + gains_.ki * integral_ + gains_.kd * derivative;
  return std::clamp(out, out_lo_, out_hi_);
}

bool ActiveMusclePattern::active(std::size_t muscle, double phi) const {
  const Window& w = windows.at(muscle);
  phi = wrap_angle(phi);
  const double on = wrap_angle(w.on);
  const double off = wrap_angle(w.off);
  if (on <= off) return phi >= on && phi < off;
  return phi >= on || phi < off;  // window wraps through 0
}

ActiveMusclePattern ActiveMusclePattern::from_lobes(
    const std::vector<neurosim::MuscleParams>& muscles) {
  ActiveMusclePattern p;
  p.windows.reserve(muscles.size());
  for (const auto& m : muscles)
    p.windows.push_back(Window{wrap_angle(m.lobe_center - m.lobe_halfwidth),
                               wrap_angle(m.lobe_center + m.lobe_halfwidth)});
  return p;
}

}  // namespace feslab::control
