#include "vwp/params.hpp"

#include "vwp/errors.hpp"

namespace vwp {

void ParamStore::add(const std::string& name, Tensor init) {
  if (values_.count(name)) fail(ErrorKind::kState, "duplicate parameter '" + name + "'");
  values_.emplace(name, std::move(init));
}

Tensor& ParamStore::value(const std::string& name) {
  auto it = values_.find(name);
  if (it == values_.end()) fail(ErrorKind::kState, "unknown parameter '" + name + "'");
  return it->second;
}

const Tensor& ParamStore::value(const std::string& name) const {
  auto it = values_.find(name);
  if (it == values_.end()) fail(ErrorKind::kState, "unknown parameter '" + name + "'");
  return it->second;
}

Tensor& ParamStore::grad(const std::string& name) {
  auto it = grads_.find(name);
  if (it != grads_.end()) return it->second;
  return grads_.emplace(name, Tensor(value(name).shape())).first->second;
}

void ParamStore::zero_grad() {
  for (const auto& [name, v] : values_) {
    auto it = grads_.find(name);
    if (it == grads_.end()) {
      grads_.emplace(name, Tensor(v.shape()));
    } else {
      it->second.fill(0.0);
    }
  }
}

std::size_t ParamStore::count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : values_) n += v.size();
  return n;
}

Tensor& ParamStore::first_moment(const std::string& name) {
  auto it = m_.find(name);
  if (it != m_.end()) return it->second;
  return m_.emplace(name, Tensor(value(name).shape())).first->second;
}

Tensor& ParamStore::second_moment(const std::string& name) {
  auto it = v_.find(name);
  if (it != v_.end()) return it->second;
  return v_.emplace(name, Tensor(value(name).shape())).first->second;
}

}  // namespace vwp
