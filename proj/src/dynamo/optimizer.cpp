#include "feslab/dynamo/optimizer.hpp"

#include <cmath>
#include <stdexcept>

namespace feslab::dynamo {

AdamState::AdamState(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    m_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(Matrix::Zero(p->value.rows(), p->value.cols()));
  }
}

std::optional<std::string> AdamState::step() {
  for (Parameter* p : params_)
    if (!p->grad.allFinite()) return p->name;

  double sq_norm = 0.0;
  for (Parameter* p : params_) sq_norm += p->grad.squaredNorm();
  double scale = 1.0;
  if (cfg_.clip_norm > 0.0) {
    const double norm = std::sqrt(sq_norm);
    if (norm > cfg_.clip_norm) scale = cfg_.clip_norm / norm;
  }

  ++step_count_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    Matrix g = scale * p.grad;
    m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * g;
    v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
    Matrix m_hat = m_[i] / bc1;
    Matrix v_hat = v_[i] / bc2;
    p.value.array() -= cfg_.lr * m_hat.array() / (v_hat.array().sqrt() + cfg_.eps);
  }
  return std::nullopt;
}

void AdamState::zero_grads() {
  for (Parameter* p : params_) p->zero_grad();
}

std::vector<std::pair<std::string, const Matrix*>> AdamState::named_tensors() const {
  std::vector<std::pair<std::string, const Matrix*>> out;
  out.reserve(params_.size() * 2 + 1);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    out.emplace_back("adam." + params_[i]->name + ".m", &m_[i]);
    out.emplace_back("adam." + params_[i]->name + ".v", &v_[i]);
  }
  step_tensor_ = Matrix::Constant(1, 1, static_cast<double>(step_count_));
  out.emplace_back("adam." + params_.front()->name + ".steps", &step_tensor_);
  return out;
}

void AdamState::restore_tensor(const std::string& name, const Matrix& value) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (name == "adam." + params_[i]->name + ".m") {
      m_[i] = value;
      return;
    }
    if (name == "adam." + params_[i]->name + ".v") {
      v_[i] = value;
      return;
    }
  }
  if (!params_.empty() && name == "adam." + params_.front()->name + ".steps") {
    step_count_ = static_cast<long>(value(0, 0));
    return;
  }
  throw std::invalid_argument("adam: unknown tensor " + name);
}

double finite_diff_check(const std::function<double()>& f, std::span<Parameter* const> params,
                         double step) {
  if (step <= 0.0) throw std::invalid_argument("finite_diff_check: step must be positive");
  double worst = 0.0;
  for (Parameter* p : params) {
    for (Eigen::Index r = 0; r < p->value.rows(); ++r) {
      for (Eigen::Index c = 0; c < p->value.cols(); ++c) {
        const double saved = p->value(r, c);
        p->value(r, c) = saved + step;
        const double hi = f();
        p->value(r, c) = saved - step;
        const double lo = f();
        p->value(r, c) = saved;
        const double numeric = (hi - lo) / (2.0 * step);
        const double analytic = p->grad(r, c);
        const double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric));
        worst = std::max(worst, err);
      }
    }
  }
  return worst;
}

}  // namespace feslab::dynamo
