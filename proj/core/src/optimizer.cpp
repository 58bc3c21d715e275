#include "vwp/optimizer.hpp"

#include <cmath>

#include "vwp/errors.hpp"

namespace vwp {

void adam_step(ParamStore& store, const AdamConfig& config) {
  for (const auto& [name, _] : store.values()) {
    if (!store.has_grad(name)) fail(ErrorKind::kState, "missing gradient for '" + name + "'");
  }
  store.advance_step();
  const double t = static_cast<double>(store.step());
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (const auto& [name, _] : store.values()) {
    Tensor& w = store.value(name);
    const Tensor& g = store.grad(name);
    Tensor& m = store.first_moment(name);
    Tensor& v = store.second_moment(name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * g[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
    }
  }
}

double grad_norm(const ParamStore& store) {
  double sq = 0.0;
  for (const auto& [_, g] : store.grads()) {
    for (double v : g.data()) sq += v * v;
  }
  return std::sqrt(sq);
}

double clip_grad_norm(ParamStore& store, double max_norm) {
  const double norm = grad_norm(store);
  if (norm > max_norm && norm > 0.0) {
    const double s = max_norm / norm;
    for (const auto& [name, _] : store.values()) {
      if (!store.has_grad(name)) continue;
      for (double& v : store.grad(name).data()) v *= s;
    }
  }
  return norm;
}

}  // namespace vwp
