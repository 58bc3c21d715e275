#include "vwp/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "vwp/errors.hpp"

namespace vwp {

namespace {

double evaluate(const ScalarObjective& f, ParamStore& store) {
  const double v = f(store, false);
  if (!std::isfinite(v)) fail(ErrorKind::kNumeric, "objective is not finite");
  return v;
}

}  // namespace

GradCheckResult grad_check(const ScalarObjective& f, ParamStore& store, double epsilon) {
  if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) {
    fail(ErrorKind::kConfig, "grad_check epsilon must lie in [1e-7, 1e-3]");
  }
  store.zero_grad();
  const double base = f(store, true);
  if (!std::isfinite(base)) fail(ErrorKind::kNumeric, "objective is not finite");

  std::map<std::string, Tensor> analytic = store.grads();
  GradCheckResult result;
  for (const auto& [name, grad] : analytic) {
    Tensor& value = store.value(name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + epsilon;
      const double plus = evaluate(f, store);
      value[i] = saved - epsilon;
      const double minus = evaluate(f, store);
      value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * epsilon);
      const double err = std::abs(grad[i] - numeric) / std::max(1.0, std::abs(grad[i]));
      if (result.checked == 0 || err > result.max_relative_error) {
        result.max_relative_error = err;
        result.worst_parameter = name;
        result.worst_index = i;
      }
      ++result.checked;
    }
  }
  return result;
}

}  // namespace vwp
