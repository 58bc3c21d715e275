#pragma once

#include <functional>

#include "vwp/params.hpp"

namespace vwp {

/// Scalar objective over a parameter store. When `with_grad` is true the
/// objective must also accumulate its analytic gradient into store.grad().
using ScalarObjective = std::function<double(ParamStore& store, bool with_grad)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

/// Compares analytic gradients with central differences on every scalar
/// parameter. Error per element is |analytic - numeric| / max(1, |analytic|).
GradCheckResult grad_check(const ScalarObjective& f, ParamStore& store, double epsilon = 1e-5);

}  // namespace vwp
