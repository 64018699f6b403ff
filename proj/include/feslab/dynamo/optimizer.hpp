#pragma once

#include "feslab/dynamo/tape.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace feslab::dynamo {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  /// Global gradient-norm clip over all tensors in the state; <= 0 disables.
  double clip_norm = 5.0;
};

/// Bias-corrected adaptive-moment optimizer over a fixed set of parameters.
/// Moment accumulators mirror parameter shapes; step_count is monotone.
class AdamState {
 public:
  AdamState(std::vector<Parameter*> params, AdamConfig cfg);

  /// One update from the gradients currently stored on the parameters.
  /// If any gradient is non-finite, no parameter is touched and the name of
  /// the offending tensor is returned.
  std::optional<std::string> step();

  void zero_grads();
  long step_count() const { return step_count_; }
  const AdamConfig& config() const { return cfg_; }
  const std::vector<Parameter*>& params() const { return params_; }

  // Checkpoint plumbing: moments and step count keyed by parameter name.
  std::vector<std::pair<std::string, const Matrix*>> named_tensors() const;
  void restore_tensor(const std::string& name, const Matrix& value);

 private:
  std::vector<Parameter*> params_;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
  long step_count_ = 0;
  AdamConfig cfg_;
  // step count mirrored as a 1x1 tensor for checkpointing
  mutable Matrix step_tensor_;
};

/// Spec-facing alias: applies one optimizer update in place.
inline std::optional<std::string> optimizer_update(AdamState& state) { return state.step(); }

/// Central-difference gradient audit. Expects the analytic gradients already
/// stored in params[i].grad (typically from Tape::backward); f must re-
/// evaluate the same scalar loss from the current parameter values. Returns
///   max over entries of |analytic - central| / max(1, |central|).
double finite_diff_check(const std::function<double()>& f, std::span<Parameter* const> params,
                         double step);

}  // namespace feslab::dynamo
