#include "vwp/autodiff.hpp"

#include <cmath>
#include <memory>

#include "vwp/errors.hpp"
#include "vwp/kernels.hpp"

namespace vwp {

Tensor& Tape::grad_at(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.shape().empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Tape::push(Tensor value, Backward backward) {
  nodes_.push_back(Node{std::move(value), Tensor{}, record_ ? std::move(backward) : Backward{}});
  return Var{nodes_.size() - 1};
}

Var Tape::constant(Tensor value) { return push(std::move(value), {}); }

Var Tape::param(ParamStore& store, const std::string& name) {
  if (auto it = param_nodes_.find(name); it != param_nodes_.end()) return Var{it->second};
  ParamStore* s = &store;
  Var v = push(store.value(name), [s, name](Tape& tape, std::size_t self) {
    if (!tape.has_grad(self)) return;
    const Tensor& g = tape.grad_at(self);
    Tensor& dst = s->grad(name);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
  param_nodes_.emplace(name, v.id);
  return v;
}

void Tape::backward(Var out) {
  if (!record_) fail(ErrorKind::kState, "backward on a non-recording tape");
  if (value(out).size() != 1) fail(ErrorKind::kSize, "backward expects a single-element output");
  grad(out)[0] = 1.0;
  for (std::size_t i = out.id + 1; i-- > 0;) {
    if (nodes_[i].backward && has_grad(i)) nodes_[i].backward(*this, i);
  }
}

namespace ad {

namespace {

void accumulate(Tensor& dst, const Tensor& src) {
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] += src[i];
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) fail(ErrorKind::kSize, std::string(what) + ": shape mismatch");
}

}  // namespace

Var matmul(Tape& t, Var a, Var b) {
  return t.push(kernels::matmul(t.value(a), t.value(b)), [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    accumulate(tp.grad(a), kernels::matmul_nt(g, tp.value(b)));
    accumulate(tp.grad(b), kernels::matmul_tn(tp.value(a), g));
  });
}

Var matmul_nt(Tape& t, Var a, Var b) {
  return t.push(kernels::matmul_nt(t.value(a), t.value(b)), [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    accumulate(tp.grad(a), kernels::matmul(g, tp.value(b)));
    accumulate(tp.grad(b), kernels::matmul_tn(g, tp.value(a)));
  });
}

Var add(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "add");
  Tensor out = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return t.push(std::move(out), [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    accumulate(tp.grad(a), g);
    accumulate(tp.grad(b), g);
  });
}

Var add_row(Tape& t, Var x, Var bias) {
  const Tensor& xv = t.value(x);
  const Tensor& bv = t.value(bias);
  if (bv.size() != xv.cols()) fail(ErrorKind::kSize, "add_row: bias width mismatch");
  Tensor out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bv[j];
  }
  return t.push(std::move(out), [x, bias](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    accumulate(tp.grad(x), g);
    Tensor& gb = tp.grad(bias);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto r = g.row(i);
      for (std::size_t j = 0; j < r.size(); ++j) gb[j] += r[j];
    }
  });
}

Var mul(Tape& t, Var a, Var b) {
  require_same_shape(t.value(a), t.value(b), "mul");
  Tensor out = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return t.push(std::move(out), [a, b](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    Tensor& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    Tensor& gb = tp.grad(b);
    for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
  });
}

Var scale(Tape& t, Var a, double s) {
  Tensor out = t.value(a);
  for (double& v : out.data()) v *= s;
  return t.push(std::move(out), [a, s](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    Tensor& ga = tp.grad(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

namespace {

// dx = y * (dy - sum(dy * y)) row by row; masked entries have y = 0.
void softmax_backward(const Tensor& y, const Tensor& g, Tensor& gx) {
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto yr = y.row(i);
    auto gr = g.row(i);
    auto out = gx.row(i);
    double dot = 0.0;
    for (std::size_t j = 0; j < yr.size(); ++j) dot += gr[j] * yr[j];
    for (std::size_t j = 0; j < yr.size(); ++j) out[j] += yr[j] * (gr[j] - dot);
  }
}

}  // namespace

Var softmax(Tape& t, Var logits) {
  return t.push(kernels::softmax(t.value(logits)), [logits](Tape& tp, std::size_t self) {
    softmax_backward(tp.value(Var{self}), tp.grad_at(self), tp.grad(logits));
  });
}

Var causal_softmax(Tape& t, Var scores) {
  return t.push(kernels::causal_softmax(t.value(scores)), [scores](Tape& tp, std::size_t self) {
    softmax_backward(tp.value(Var{self}), tp.grad_at(self), tp.grad(scores));
  });
}

Var layer_norm(Tape& t, Var x, Var gamma, Var beta, double eps) {
  auto r = kernels::layer_norm(t.value(x), t.value(gamma), t.value(beta), eps);
  auto saved = std::make_shared<kernels::LayerNormResult>(
      kernels::LayerNormResult{Tensor{}, std::move(r.normalized), std::move(r.inv_sigma)});
  return t.push(std::move(r.out), [x, gamma, beta, saved](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& nrm = saved->normalized;
    const Tensor& gam = tp.value(gamma);
    Tensor& gx = tp.grad(x);
    Tensor& gg = tp.grad(gamma);
    Tensor& gbeta = tp.grad(beta);
    const std::size_t cols = g.cols();
    const double n = static_cast<double>(cols);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      auto gr = g.row(i);
      auto nr = nrm.row(i);
      double mean_d = 0.0, mean_dn = 0.0;
      for (std::size_t j = 0; j < cols; ++j) {
        const double d = gr[j] * gam[j];
        mean_d += d;
        mean_dn += d * nr[j];
        gg[j] += gr[j] * nr[j];
        gbeta[j] += gr[j];
      }
      mean_d /= n;
      mean_dn /= n;
      auto out = gx.row(i);
      const double inv = saved->inv_sigma[i];
      for (std::size_t j = 0; j < cols; ++j) {
        out[j] += inv * (gr[j] * gam[j] - mean_d - nr[j] * mean_dn);
      }
    }
  });
}

Var gelu(Tape& t, Var x) {
  Tensor out = t.value(x);
  for (double& v : out.data()) v = kernels::gelu(v);
  return t.push(std::move(out), [x](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    const Tensor& xv = tp.value(x);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * kernels::gelu_derivative(xv[i]);
  });
}

Var embedding(Tape& t, Var table, std::span<const std::int64_t> ids) {
  const Tensor& tab = t.value(table);
  const std::size_t d = tab.cols();
  Tensor out = Tensor::matrix(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= tab.rows()) {
      fail(ErrorKind::kIndex, "embedding id " + std::to_string(ids[i]) + " outside table of " +
                                  std::to_string(tab.rows()));
    }
    auto src = tab.row(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  std::vector<std::int64_t> saved(ids.begin(), ids.end());
  return t.push(std::move(out), [table, saved = std::move(saved)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    Tensor& gt = tp.grad(table);
    for (std::size_t i = 0; i < saved.size(); ++i) {
      auto src = g.row(i);
      auto dst = gt.row(static_cast<std::size_t>(saved[i]));
      for (std::size_t j = 0; j < src.size(); ++j) dst[j] += src[j];
    }
  });
}

Var dropout(Tape& t, Var x, double rate, Rng& rng) {
  if (rate <= 0.0) return x;
  if (rate >= 1.0) fail(ErrorKind::kConfig, "dropout rate must be below 1");
  const Tensor& xv = t.value(x);
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  const double keep_scale = 1.0 / (1.0 - rate);
  Tensor out = xv;
  for (std::size_t i = 0; i < out.size(); ++i) {
    (*mask)[i] = rng.uniform() < rate ? 0.0 : keep_scale;
    out[i] *= (*mask)[i];
  }
  return t.push(std::move(out), [x, mask](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * (*mask)[i];
  });
}

Var cross_entropy_masked(Tape& t, Var logits, std::span<const std::int64_t> targets,
                         const std::vector<bool>& mask) {
  const double loss = kernels::cross_entropy_masked(t.value(logits), targets, mask);
  std::vector<std::int64_t> tg(targets.begin(), targets.end());
  std::vector<bool> mk = mask;
  return t.push(Tensor::scalar(loss), [logits, tg = std::move(tg), mk = std::move(mk)](
                                          Tape& tp, std::size_t self) {
    const double upstream = tp.grad_at(self)[0];
    std::size_t count = 0;
    for (bool m : mk) count += m ? 1 : 0;
    const Tensor probs = kernels::softmax(tp.value(logits));
    Tensor& gl = tp.grad(logits);
    const double w = upstream / static_cast<double>(count);
    for (std::size_t r = 0; r < mk.size(); ++r) {
      if (!mk[r]) continue;
      auto p = probs.row(r);
      auto out = gl.row(r);
      for (std::size_t j = 0; j < p.size(); ++j) out[j] += w * p[j];
      out[static_cast<std::size_t>(tg[r])] -= w;
    }
  });
}

Var slice_cols(Tape& t, Var x, std::size_t start, std::size_t count) {
  const Tensor& xv = t.value(x);
  if (start + count > xv.cols()) fail(ErrorKind::kSize, "slice_cols out of range");
  Tensor out = Tensor::matrix(xv.rows(), count);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    for (std::size_t j = 0; j < count; ++j) out(i, j) = xv(i, start + j);
  }
  return t.push(std::move(out), [x, start, count](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    Tensor& gx = tp.grad(x);
    for (std::size_t i = 0; i < g.rows(); ++i) {
      for (std::size_t j = 0; j < count; ++j) gx(i, start + j) += g(i, j);
    }
  });
}

Var concat_cols(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kSize, "concat_cols of nothing");
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  for (Var p : parts) {
    if (t.value(p).rows() != rows) fail(ErrorKind::kSize, "concat_cols row mismatch");
    cols += t.value(p).cols();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = t.value(p);
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < pv.cols(); ++j) out(i, off + j) = pv(i, j);
    }
    off += pv.cols();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.push(std::move(out), [saved = std::move(saved)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    std::size_t o = 0;
    for (Var p : saved) {
      Tensor& gp = tp.grad(p);
      const std::size_t c = gp.cols();
      for (std::size_t i = 0; i < gp.rows(); ++i) {
        for (std::size_t j = 0; j < c; ++j) gp(i, j) += g(i, o + j);
      }
      o += c;
    }
  });
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::kSize, "concat_rows of nothing");
  const std::size_t cols = t.value(parts[0]).cols();
  std::size_t rows = 0;
  for (Var p : parts) {
    if (t.value(p).cols() != cols) fail(ErrorKind::kSize, "concat_rows column mismatch");
    rows += t.value(p).rows();
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = t.value(p);
    std::copy(pv.data().begin(), pv.data().end(), out.data().begin() + off * cols);
    off += pv.rows();
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return t.push(std::move(out), [saved = std::move(saved)](Tape& tp, std::size_t self) {
    const Tensor& g = tp.grad_at(self);
    std::size_t off = 0;
    for (Var p : saved) {
      Tensor& gp = tp.grad(p);
      for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g[off + i];
      off += gp.size();
    }
  });
}

}  // namespace ad
}  // namespace vwp
