#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "vwp/tensor.hpp"

namespace vwp {

/// Named trainable parameters with their gradients and Adam moments.
/// Names are kept sorted so every traversal order is deterministic.
class ParamStore {
 public:
  void add(const std::string& name, Tensor init);
  bool contains(const std::string& name) const { return values_.count(name) != 0; }

  Tensor& value(const std::string& name);
  const Tensor& value(const std::string& name) const;

  /// Gradient slot, created as zeros on first access.
  Tensor& grad(const std::string& name);
  bool has_grad(const std::string& name) const { return grads_.count(name) != 0; }
  void zero_grad();
  void clear_grad() { grads_.clear(); }

  const std::map<std::string, Tensor>& values() const noexcept { return values_; }
  const std::map<std::string, Tensor>& grads() const noexcept { return grads_; }

  /// Total number of scalar parameters.
  std::size_t count() const;

  // Adam state
  Tensor& first_moment(const std::string& name);
  Tensor& second_moment(const std::string& name);
  std::uint64_t step() const noexcept { return step_; }
  void advance_step() noexcept { ++step_; }

  /// Parameter values only; gradients and optimizer state are not compared.
  bool same_values(const ParamStore& other) const { return values_ == other.values_; }

 private:
  std::map<std::string, Tensor> values_;
  std::map<std::string, Tensor> grads_;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
  std::uint64_t step_ = 0;
};

}  // namespace vwp
