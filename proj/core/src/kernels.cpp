#include "vwp/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "vwp/errors.hpp"

namespace vwp::kernels {

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) fail(ErrorKind::kSize, std::string(what) + " expects a rank-2 tensor");
}

void require_finite(const Tensor& t, const char* what) {
  if (!t.all_finite()) fail(ErrorKind::kNumeric, std::string("non-finite input to ") + what);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t r = a.rows(), k = a.cols(), c = b.cols();
  if (b.rows() != k) fail(ErrorKind::kSize, "matmul inner dimension mismatch");
  Tensor out = Tensor::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    double* o = out.row(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a(i, p);
      if (av == 0.0) continue;
      const double* brow = b.row(p).data();
      for (std::size_t j = 0; j < c; ++j) o[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t r = a.rows(), k = a.cols(), c = b.rows();
  if (b.cols() != k) fail(ErrorKind::kSize, "matmul_nt inner dimension mismatch");
  Tensor out = Tensor::matrix(r, c);
  for (std::size_t i = 0; i < r; ++i) {
    const double* arow = a.row(i).data();
    for (std::size_t j = 0; j < c; ++j) {
      const double* brow = b.row(j).data();
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += arow[p] * brow[p];
      out(i, j) = s;
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  const std::size_t k = a.rows(), r = a.cols(), c = b.cols();
  if (b.rows() != k) fail(ErrorKind::kSize, "matmul_tn inner dimension mismatch");
  Tensor out = Tensor::matrix(r, c);
  for (std::size_t p = 0; p < k; ++p) {
    const double* arow = a.row(p).data();
    const double* brow = b.row(p).data();
    for (std::size_t i = 0; i < r; ++i) {
      const double av = arow[i];
      if (av == 0.0) continue;
      double* o = out.row(i).data();
      for (std::size_t j = 0; j < c; ++j) o[j] += av * brow[j];
    }
  }
  return out;
}

Tensor softmax(const Tensor& logits) {
  require_finite(logits, "softmax");
  Tensor out(logits.shape());
  const std::size_t rows = logits.rows(), cols = logits.cols();
  for (std::size_t i = 0; i < rows; ++i) {
    auto in = logits.row(i);
    auto o = out.row(i);
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      o[j] = std::exp(in[j] - mx);
      sum += o[j];
    }
    for (std::size_t j = 0; j < cols; ++j) o[j] /= sum;
  }
  return out;
}

Tensor causal_softmax(const Tensor& scores) {
  require_matrix(scores, "causal_softmax");
  require_finite(scores, "causal_softmax");
  const std::size_t n = scores.rows();
  if (scores.cols() != n) fail(ErrorKind::kSize, "causal_softmax expects a square matrix");
  Tensor out = Tensor::matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double mx = scores(i, 0);
    for (std::size_t j = 1; j <= i; ++j) mx = std::max(mx, scores(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j <= i; ++j) {
      out(i, j) = std::exp(scores(i, j) - mx);
      sum += out(i, j);
    }
    for (std::size_t j = 0; j <= i; ++j) out(i, j) /= sum;
  }
  return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

double gelu(double x) {
  return 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
}

double gelu_derivative(double x) {
  const double u = kGeluC * (x + kGeluA * x * x * x);
  const double t = std::tanh(u);
  const double du = kGeluC * (1.0 + 3.0 * kGeluA * x * x);
  return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * du;
}

LayerNormResult layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                           double eps) {
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gamma.size() != cols || beta.size() != cols) {
    fail(ErrorKind::kSize, "layer_norm gain/bias width mismatch");
  }
  LayerNormResult r{Tensor(x.shape()), Tensor(x.shape()), std::vector<double>(rows)};
  for (std::size_t i = 0; i < rows; ++i) {
    auto in = x.row(i);
    double mean = 0.0;
    for (double v : in) mean += v;
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (double v : in) var += (v - mean) * (v - mean);
    var /= static_cast<double>(cols);
    const double inv = 1.0 / std::sqrt(var + eps);
    r.inv_sigma[i] = inv;
    auto nrm = r.normalized.row(i);
    auto o = r.out.row(i);
    for (std::size_t j = 0; j < cols; ++j) {
      nrm[j] = (in[j] - mean) * inv;
      o[j] = nrm[j] * gamma[j] + beta[j];
    }
  }
  return r;
}

double cross_entropy_masked(const Tensor& logits, std::span<const std::int64_t> targets,
                            const std::vector<bool>& mask) {
  const std::size_t rows = logits.rows(), vocab = logits.cols();
  if (targets.size() != rows || mask.size() != rows) {
    fail(ErrorKind::kSize, "cross_entropy_masked: targets/mask length must equal logits rows");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    const auto target = targets[t];
    if (target < 0 || static_cast<std::size_t>(target) >= vocab) {
      fail(ErrorKind::kIndex, "target id " + std::to_string(target) + " outside [0, " +
                                  std::to_string(vocab) + ")");
    }
    auto in = logits.row(t);
    for (double v : in) {
      if (!std::isfinite(v)) fail(ErrorKind::kNumeric, "non-finite logits in cross entropy");
    }
    const double mx = *std::max_element(in.begin(), in.end());
    double sum = 0.0;
    for (double v : in) sum += std::exp(v - mx);
    total += (std::log(sum) + mx) - in[static_cast<std::size_t>(target)];
    ++count;
  }
  if (count == 0) fail(ErrorKind::kEmptyLoss, "no masked-in positions");
  return total / static_cast<double>(count);
}

}  // namespace vwp::kernels
