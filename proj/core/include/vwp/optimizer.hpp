#pragma once

#include "vwp/params.hpp"

namespace vwp {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update over every parameter. Throws kState when a
/// parameter has no gradient slot.
void adam_step(ParamStore& store, const AdamConfig& config);

/// Global L2 norm of all gradients.
double grad_norm(const ParamStore& store);

/// Rescales gradients so their global norm is at most max_norm. Returns the
/// norm before clipping.
double clip_grad_norm(ParamStore& store, double max_norm);

}  // namespace vwp
