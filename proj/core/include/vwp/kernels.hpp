#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vwp/tensor.hpp"

// Forward kernels used by the autodiff tape and by inference code.
// All are pure: inputs are never modified.
namespace vwp::kernels {

/// (r x k) * (k x c)
Tensor matmul(const Tensor& a, const Tensor& b);
/// a * b^T, (r x k) * (c x k)^T
Tensor matmul_nt(const Tensor& a, const Tensor& b);
/// a^T * b, (k x r)^T * (k x c)
Tensor matmul_tn(const Tensor& a, const Tensor& b);

/// Softmax over the last axis with max subtraction. Throws kNumeric on
/// non-finite input.
Tensor softmax(const Tensor& logits);

/// Row-wise softmax of a square matrix where column j > row i is masked out.
Tensor causal_softmax(const Tensor& scores);

/// tanh-approximated GELU, as used by GPT-2.
double gelu(double x);
double gelu_derivative(double x);

struct LayerNormResult {
  Tensor out;
  Tensor normalized;           // (x - mean) / sigma
  std::vector<double> inv_sigma;  // one per row
};
LayerNormResult layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           double eps);

/// Mean over positions with mask[t] of -log softmax(logits)[t, targets[t]].
/// Throws kEmptyLoss when no position is masked in, kIndex for a bad target.
double cross_entropy_masked(const Tensor& logits, std::span<const std::int64_t> targets,
                            const std::vector<bool>& mask);

}  // namespace vwp::kernels
