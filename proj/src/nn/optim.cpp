#include "rapid/nn/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace rapid::nn {

Adam::Adam(std::vector<Param*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  slots_.reserve(params_.size());
  for (Param* p : params_)
    slots_.push_back({Tensor::zeros(p->value.shape), Tensor::zeros(p->value.shape)});
}

void Adam::step() {
  for (const Param* p : params_)
    for (double gv : p->grad.data)
      if (!std::isfinite(gv))
        throw std::runtime_error("adam: non-finite gradient in parameter '" + p->name + "'");

  ++step_count_;
  double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_count_));
  double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_count_));
  for (size_t i = 0; i < params_.size(); ++i) {
    Param& p = *params_[i];
    Slot& s = slots_[i];
    for (int64_t j = 0; j < p.value.numel(); ++j) {
      double gv = p.grad[j];
      s.m[j] = cfg_.beta1 * s.m[j] + (1.0 - cfg_.beta1) * gv;
      s.v[j] = cfg_.beta2 * s.v[j] + (1.0 - cfg_.beta2) * gv * gv;
      double mhat = s.m[j] / bc1;
      double vhat = s.v[j] / bc2;
      p.value[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Param* p : params_) p->zero_grad();
}

void polyak_update(Param& target, const Param& online, double rate) {
  if (!(rate > 0.0) || rate > 1.0)
    throw std::invalid_argument("polyak_update: rate must be in (0, 1]");
  if (!target.value.same_shape(online.value))
    throw std::invalid_argument("polyak_update: shape mismatch for '" + target.name + "'");
  for (int64_t i = 0; i < target.value.numel(); ++i)
    target.value[i] = (1.0 - rate) * target.value[i] + rate * online.value[i];
}

void polyak_update(std::vector<Param*> target, std::vector<Param*> online, double rate) {
  if (target.size() != online.size())
    throw std::invalid_argument("polyak_update: parameter list size mismatch");
  for (size_t i = 0; i < target.size(); ++i) polyak_update(*target[i], *online[i], rate);
}

}  // namespace rapid::nn
