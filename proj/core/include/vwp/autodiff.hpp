#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vwp/params.hpp"
#include "vwp/rng.hpp"
#include "vwp/tensor.hpp"

namespace vwp {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = std::numeric_limits<std::size_t>::max();
};

/// Reverse-mode tape. Ops append nodes in evaluation order; backward() walks
/// them in reverse and accumulates parameter gradients into the bound
/// ParamStore. A tape built with record=false keeps values only.
class Tape {
 public:
  using Backward = std::function<void(Tape&, std::size_t self)>;

  explicit Tape(bool record = true) : record_(record) {}

  Var constant(Tensor value);
  /// Leaf bound to a named parameter. Repeated calls return the same node.
  Var param(ParamStore& store, const std::string& name);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient buffer of a node, zero-initialised on first touch.
  Tensor& grad(Var v) { return grad_at(v.id); }
  Tensor& grad_at(std::size_t id);
  bool has_grad(std::size_t id) const { return !nodes_[id].grad.shape().empty(); }

  bool recording() const noexcept { return record_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// Seeds d(out)/d(out) = 1 for a single-element output and propagates.
  void backward(Var out);

  Var push(Tensor value, Backward backward);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    Backward backward;
  };
  std::vector<Node> nodes_;
  std::unordered_map<std::string, std::size_t> param_nodes_;
  bool record_;
};

// Differentiable ops. Each forward is one of the kernels in kernels.hpp.
namespace ad {

Var matmul(Tape& t, Var a, Var b);
/// a * b^T
Var matmul_nt(Tape& t, Var a, Var b);
Var add(Tape& t, Var a, Var b);
/// Adds a length-cols vector to every row.
Var add_row(Tape& t, Var x, Var bias);
Var mul(Tape& t, Var a, Var b);
Var scale(Tape& t, Var a, double s);
Var softmax(Tape& t, Var logits);
Var causal_softmax(Tape& t, Var scores);
Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps = 1e-5);
Var gelu(Tape& t, Var x);
/// Gathers rows of a (vocab x d) table.
Var embedding(Tape& t, Var table, std::span<const std::int64_t> ids);
/// Inverted dropout; rate 0 is the identity.
Var dropout(Tape& t, Var x, double rate, Rng& rng);
/// Returns a single-element tensor.
Var cross_entropy_masked(Tape& t, Var logits, std::span<const std::int64_t> targets,
                         const std::vector<bool>& mask);
Var slice_cols(Tape& t, Var x, std::size_t start, std::size_t count);
Var concat_cols(Tape& t, std::span<const Var> parts);
Var concat_rows(Tape& t, std::span<const Var> parts);

inline Var linear(Tape& t, Var x, Var weight, Var bias) {
  return add_row(t, matmul(t, x, weight), bias);
}

}  // namespace ad
}  // namespace vwp
