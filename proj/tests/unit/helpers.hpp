#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "vwp/autodiff.hpp"
#include "vwp/params.hpp"
#include "vwp/rng.hpp"
#include "vwp/tensor.hpp"

namespace testing {

inline vwp::Tensor random_tensor(std::vector<std::size_t> shape, vwp::Rng& rng, double scale = 1.0) {
  vwp::Tensor t(std::move(shape));
  for (double& v : t.data()) v = scale * rng.normal();
  return t;
}

// ones(1 x r) * (x .* w) * ones(c x 1): a scalar that touches every element.
inline vwp::Var weighted_sum(vwp::Tape& tape, vwp::Var x, const vwp::Tensor& weights) {
  if (tape.value(x).rank() != 2) return vwp::ad::scale(tape, x, weights[0]);
  const std::size_t rows = tape.value(x).rows(), cols = tape.value(x).cols();
  vwp::Var prod = vwp::ad::mul(tape, x, tape.constant(weights));
  vwp::Var left = tape.constant(vwp::Tensor::matrix(1, rows, 1.0));
  vwp::Var right = tape.constant(vwp::Tensor::matrix(cols, 1, 1.0));
  return vwp::ad::matmul(tape, vwp::ad::matmul(tape, left, prod), right);
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("vwp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace testing
