#include "threadcast/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "threadcast/kernels.h"
#include "threadcast/rng.h"

namespace threadcast {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) out << (i ? "x" : "") << shape[i];
  out << ']';
  return out.str();
}

template <typename T>
Tensor<T>::Tensor(Shape s, T fill) : shape(std::move(s)), data(shape_numel(shape), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape s, std::vector<T> values) : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != shape_numel(shape)) {
    throw std::invalid_argument("Tensor: " + std::to_string(data.size()) + " values for shape " + shape_str(shape));
  }
}

// ---- Var -------------------------------------------------------------------

template <typename T>
const Shape& Var<T>::shape() const {
  return tape_->shape(id_);
}

template <typename T>
std::size_t Var<T>::rows() const {
  const Shape& s = shape();
  return s.size() >= 2 ? s[0] : 1;
}

template <typename T>
std::size_t Var<T>::cols() const {
  const Shape& s = shape();
  return s.empty() ? 1 : s.back();
}

template <typename T>
std::span<const T> Var<T>::value() const {
  return tape_->value(id_);
}

template <typename T>
std::span<const T> Var<T>::grad() const {
  return tape_->grad(id_);
}

template <typename T>
T Var<T>::item() const {
  auto v = value();
  if (v.size() != 1) throw std::invalid_argument("item: tensor has " + std::to_string(v.size()) + " elements");
  return v[0];
}

template <typename T>
bool Var<T>::requires_grad() const {
  return tape_->requires_grad(id_);
}

// ---- Tape ------------------------------------------------------------------

template <typename T>
Var<T> Tape<T>::constant(Tensor<T> value) {
  return record(std::move(value.shape), std::move(value.data), false, nullptr);
}

template <typename T>
Var<T> Tape<T>::variable(Tensor<T> value) {
  return record(std::move(value.shape), std::move(value.data), true, nullptr);
}

template <typename T>
Var<T> Tape<T>::parameter(const Tensor<T>& value) {
  Node node;
  node.shape = value.shape;
  node.external = value.data.data();
  node.numel = value.data.size();
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename T>
Var<T> Tape<T>::record(Shape shape, std::vector<T> value, bool requires_grad, Backward backward) {
  if (value.size() != shape_numel(shape)) {
    throw std::invalid_argument("Tape::record: value size does not match shape " + shape_str(shape));
  }
  Node node;
  node.shape = std::move(shape);
  node.numel = value.size();
  node.owned = std::move(value);
  node.requires_grad = requires_grad;
  if (requires_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var<T>(this, static_cast<int>(nodes_.size() - 1));
}

template <typename T>
std::span<const T> Tape<T>::value(int id) const {
  const Node& n = nodes_[id];
  return n.external ? std::span<const T>(n.external, n.numel) : std::span<const T>(n.owned);
}

template <typename T>
std::span<T> Tape<T>::grad_accumulator(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.numel, T(0));
  return n.grad;
}

template <typename T>
void Tape<T>::backward(const Var<T>& loss) {
  if (loss.tape() != this) throw std::invalid_argument("backward: loss recorded on another tape");
  if (nodes_[loss.id()].numel != 1) {
    throw std::invalid_argument("backward: loss must be scalar, got shape " + shape_str(nodes_[loss.id()].shape));
  }
  if (!nodes_[loss.id()].requires_grad) return;
  grad_accumulator(loss.id())[0] += T(1);
  for (int id = loss.id(); id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.requires_grad && n.backward && !n.grad.empty()) n.backward(*this, id);
  }
}

// ---- helpers ---------------------------------------------------------------

namespace {

[[noreturn]] void shape_error(const char* op, const Shape& a, const Shape& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " + shape_str(b));
}

[[noreturn]] void shape_error(const char* op, const Shape& a, const std::string& what) {
  throw std::invalid_argument(std::string(op) + ": shape " + shape_str(a) + " " + what);
}

template <typename T>
bool any_grad(std::initializer_list<const Var<T>*> vars) {
  for (const Var<T>* v : vars) {
    if (v->requires_grad()) return true;
  }
  return false;
}

template <typename T>
void check_same_tape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.tape() != b.tape()) throw std::invalid_argument(std::string(op) + ": operands on different tapes");
}

template <typename T>
void require_matrix(const char* op, const Var<T>& x) {
  if (x.shape().size() != 2) shape_error(op, x.shape(), "is not a matrix");
}

// Trailing dims of `a` equal `b` once b's leading 1s are dropped.
bool broadcastable(const Shape& a, const Shape& b) {
  std::size_t first = 0;
  while (first + 1 < b.size() && b[first] == 1) ++first;
  const std::size_t nb = b.size() - first;
  if (nb > a.size()) return shape_numel(b) == 1;
  for (std::size_t i = 0; i < nb; ++i) {
    if (a[a.size() - nb + i] != b[first + i]) return false;
  }
  return true;
}

}  // namespace

// ---- operations ------------------------------------------------------------

template <typename T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  check_same_tape("matmul", a, b);
  if (a.shape().size() != 2 || b.shape().size() != 2 || a.shape()[1] != b.shape()[0]) {
    shape_error("matmul", a.shape(), b.shape());
  }
  const std::size_t m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<T> out(m * n);
  kernels::gemm<T>(m, n, k, a.value(), b.value(), out, false);
  const int ia = a.id(), ib = b.id();
  return a.tape()->record({m, n}, std::move(out), any_grad({&a, &b}), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      std::vector<T> bt(k * n);
      kernels::transpose<T>(k, n, t.value(ib), bt);
      kernels::gemm<T>(m, k, n, g, bt, t.grad_accumulator(ia), true);
    }
    if (t.requires_grad(ib)) {
      std::vector<T> at(m * k);
      kernels::transpose<T>(m, k, t.value(ia), at);
      kernels::gemm<T>(k, n, m, at, g, t.grad_accumulator(ib), true);
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_tape("add", a, b);
  if (!broadcastable(a.shape(), b.shape())) shape_error("add", a.shape(), b.shape());
  const std::size_t na = a.size(), nb = b.size();
  auto va = a.value();
  auto vb = b.value();
  std::vector<T> out(na);
  for (std::size_t i = 0; i < na; ++i) out[i] = va[i] + vb[i % nb];
  const int ia = a.id(), ib = b.id();
  return a.tape()->record(a.shape(), std::move(out), any_grad({&a, &b}), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad_accumulator(ia);
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad_accumulator(ib);
      for (std::size_t i = 0; i < na; ++i) gb[i % nb] += g[i];
    }
  });
}

template <typename T>
Var<T> scale(const Var<T>& a, T factor) {
  auto va = a.value();
  std::vector<T> out(va.size());
  for (std::size_t i = 0; i < va.size(); ++i) out[i] = va[i] * factor;
  const int ia = a.id();
  return a.tape()->record(a.shape(), std::move(out), a.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto ga = t.grad_accumulator(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * factor;
  });
}

template <typename T>
Var<T> softmax(const Var<T>& x, std::span<const std::uint8_t> allowed) {
  const std::size_t cols = x.cols();
  const std::size_t rows = x.size() / cols;
  if (!allowed.empty() && allowed.size() != x.size()) {
    shape_error("softmax", x.shape(), "does not match mask of " + std::to_string(allowed.size()) + " entries");
  }
  auto vx = x.value();
  std::vector<T> out(vx.size(), T(0));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * cols;
    T mx = -std::numeric_limits<T>::infinity();
    for (std::size_t c = 0; c < cols; ++c) {
      if (allowed.empty() || allowed[base + c]) mx = std::max(mx, vx[base + c]);
    }
    if (mx == -std::numeric_limits<T>::infinity()) continue;
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (allowed.empty() || allowed[base + c]) {
        out[base + c] = std::exp(vx[base + c] - mx);
        total += out[base + c];
      }
    }
    for (std::size_t c = 0; c < cols; ++c) out[base + c] /= total;
  }
  const int ix = x.id();
  return x.tape()->record(x.shape(), std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto y = t.value(self);
    auto gx = t.grad_accumulator(ix);
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * cols;
      T dot = 0;
      for (std::size_t c = 0; c < cols; ++c) dot += y[base + c] * g[base + c];
      for (std::size_t c = 0; c < cols; ++c) gx[base + c] += y[base + c] * (g[base + c] - dot);
    }
  });
}

template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps) {
  check_same_tape("layer_norm", x, gamma);
  check_same_tape("layer_norm", x, beta);
  const std::size_t cols = x.cols();
  const std::size_t rows = x.size() / cols;
  if (gamma.size() != cols || beta.size() != cols) shape_error("layer_norm", x.shape(), gamma.shape());
  auto vx = x.value();
  auto vg = gamma.value();
  auto vb = beta.value();
  std::vector<T> out(vx.size()), xhat(vx.size()), rstd(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * cols;
    T mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += vx[base + c];
    mu /= static_cast<T>(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) {
      const T d = vx[base + c] - mu;
      var += d * d;
    }
    var /= static_cast<T>(cols);
    rstd[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      xhat[base + c] = (vx[base + c] - mu) * rstd[r];
      out[base + c] = xhat[base + c] * vg[c] + vb[c];
    }
  }
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  return x.tape()->record(
      x.shape(), std::move(out), any_grad({&x, &gamma, &beta}),
      [=, xhat = std::move(xhat), rstd = std::move(rstd)](Tape<T>& t, int self) {
        auto g = t.grad(self);
        auto vg = t.value(ig);
        if (t.requires_grad(ig) || t.requires_grad(ib)) {
          std::span<T> gg = t.requires_grad(ig) ? t.grad_accumulator(ig) : std::span<T>();
          std::span<T> gb = t.requires_grad(ib) ? t.grad_accumulator(ib) : std::span<T>();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < cols; ++c) {
              if (!gg.empty()) gg[c] += g[r * cols + c] * xhat[r * cols + c];
              if (!gb.empty()) gb[c] += g[r * cols + c];
            }
          }
        }
        if (!t.requires_grad(ix)) return;
        auto gx = t.grad_accumulator(ix);
        const T inv_n = T(1) / static_cast<T>(cols);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t base = r * cols;
          T mean_d = 0, mean_dx = 0;
          for (std::size_t c = 0; c < cols; ++c) {
            const T d = g[base + c] * vg[c];
            mean_d += d;
            mean_dx += d * xhat[base + c];
          }
          mean_d *= inv_n;
          mean_dx *= inv_n;
          for (std::size_t c = 0; c < cols; ++c) {
            const T d = g[base + c] * vg[c];
            gx[base + c] += rstd[r] * (d - mean_d - xhat[base + c] * mean_dx);
          }
        }
      });
}

template <typename T>
Var<T> gelu(const Var<T>& x) {
  auto vx = x.value();
  std::vector<T> out(vx.size());
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  for (std::size_t i = 0; i < vx.size(); ++i) out[i] = T(0.5) * vx[i] * (T(1) + std::erf(vx[i] * inv_sqrt2));
  const int ix = x.id();
  return x.tape()->record(x.shape(), std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto vx = t.value(ix);
    auto gx = t.grad_accumulator(ix);
    const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * std::numbers::pi_v<T>);
    for (std::size_t i = 0; i < vx.size(); ++i) {
      const T cdf = T(0.5) * (T(1) + std::erf(vx[i] * inv_sqrt2));
      const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * vx[i] * vx[i]);
      gx[i] += g[i] * (cdf + vx[i] * pdf);
    }
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return leaky_relu(x, T(0));
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  auto vx = x.value();
  std::vector<T> out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) out[i] = vx[i] > T(0) ? vx[i] : slope * vx[i];
  const int ix = x.id();
  return x.tape()->record(x.shape(), std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto vx = t.value(ix);
    auto gx = t.grad_accumulator(ix);
    for (std::size_t i = 0; i < vx.size(); ++i) gx[i] += vx[i] > T(0) ? g[i] : slope * g[i];
  });
}

template <typename T>
Var<T> elu(const Var<T>& x, T alpha) {
  auto vx = x.value();
  std::vector<T> out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) out[i] = vx[i] > T(0) ? vx[i] : alpha * std::expm1(vx[i]);
  const int ix = x.id();
  return x.tape()->record(x.shape(), std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto vx = t.value(ix);
    auto gx = t.grad_accumulator(ix);
    for (std::size_t i = 0; i < vx.size(); ++i) gx[i] += vx[i] > T(0) ? g[i] : g[i] * alpha * std::exp(vx[i]);
  });
}

template <typename T>
Var<T> embedding_lookup(const Var<T>& table, std::span<const int> indices) {
  require_matrix("embedding_lookup", table);
  const std::size_t vocab = table.shape()[0], dim = table.shape()[1];
  auto vt = table.value();
  std::vector<T> out(indices.size() * dim);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const int idx = indices[r];
    if (idx < 0 || static_cast<std::size_t>(idx) >= vocab) {
      throw std::invalid_argument("embedding_lookup: index " + std::to_string(idx) + " outside table " +
                                  shape_str(table.shape()));
    }
    std::copy_n(vt.begin() + static_cast<long>(idx * dim), dim, out.begin() + static_cast<long>(r * dim));
  }
  const int it = table.id();
  std::vector<int> idx(indices.begin(), indices.end());
  return table.tape()->record({indices.size(), dim}, std::move(out), table.requires_grad(),
                              [=, idx = std::move(idx)](Tape<T>& t, int self) {
                                auto g = t.grad(self);
                                auto gt = t.grad_accumulator(it);
                                for (std::size_t r = 0; r < idx.size(); ++r) {
                                  const std::size_t base = static_cast<std::size_t>(idx[r]) * dim;
                                  for (std::size_t c = 0; c < dim; ++c) gt[base + c] += g[r * dim + c];
                                }
                              });
}

template <typename T>
Var<T> dropout(const Var<T>& x, double p, std::uint64_t seed) {
  if (p < 0.0 || p >= 1.0) throw std::invalid_argument("dropout: p must be in [0, 1)");
  if (p == 0.0) return x;
  Rng rng(seed);
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  auto vx = x.value();
  std::vector<T> mask(vx.size()), out(vx.size());
  for (std::size_t i = 0; i < vx.size(); ++i) {
    mask[i] = rng.uniform() < p ? T(0) : keep_scale;
    out[i] = vx[i] * mask[i];
  }
  const int ix = x.id();
  return x.tape()->record(x.shape(), std::move(out), x.requires_grad(),
                          [=, mask = std::move(mask)](Tape<T>& t, int self) {
                            auto g = t.grad(self);
                            auto gx = t.grad_accumulator(ix);
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * mask[i];
                          });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
  T total = 0;
  for (T v : x.value()) total += v;
  const int ix = x.id();
  return x.tape()->record({1}, {total}, x.requires_grad(), [=](Tape<T>& t, int self) {
    const T g = t.grad(self)[0];
    for (T& v : t.grad_accumulator(ix)) v += g;
  });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("mean: empty tensor");
  T total = 0;
  for (T v : x.value()) total += v;
  const int ix = x.id();
  return x.tape()->record({1}, {total / static_cast<T>(n)}, x.requires_grad(), [=](Tape<T>& t, int self) {
    const T g = t.grad(self)[0] / static_cast<T>(n);
    for (T& v : t.grad_accumulator(ix)) v += g;
  });
}

template <typename T>
Var<T> squared_error(const Var<T>& pred, const Var<T>& target, std::span<const T> weights) {
  check_same_tape("squared_error", pred, target);
  if (pred.size() != target.size()) shape_error("squared_error", pred.shape(), target.shape());
  if (!weights.empty() && weights.size() != pred.size()) {
    shape_error("squared_error", pred.shape(), "does not match " + std::to_string(weights.size()) + " weights");
  }
  auto vp = pred.value();
  auto vt = target.value();
  T total = 0;
  for (std::size_t i = 0; i < vp.size(); ++i) {
    const T d = vp[i] - vt[i];
    total += (weights.empty() ? T(1) : weights[i]) * d * d;
  }
  const int ip = pred.id(), it = target.id();
  std::vector<T> w(weights.begin(), weights.end());
  return pred.tape()->record({1}, {total}, any_grad({&pred, &target}),
                             [=, w = std::move(w)](Tape<T>& t, int self) {
                               const T g = t.grad(self)[0];
                               auto vp = t.value(ip);
                               auto vt = t.value(it);
                               std::span<T> gp = t.requires_grad(ip) ? t.grad_accumulator(ip) : std::span<T>();
                               std::span<T> gt = t.requires_grad(it) ? t.grad_accumulator(it) : std::span<T>();
                               for (std::size_t i = 0; i < vp.size(); ++i) {
                                 const T d = T(2) * (w.empty() ? T(1) : w[i]) * (vp[i] - vt[i]) * g;
                                 if (!gp.empty()) gp[i] += d;
                                 if (!gt.empty()) gt[i] -= d;
                               }
                             });
}

template <typename T>
Var<T> transpose(const Var<T>& x) {
  require_matrix("transpose", x);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  std::vector<T> out(r * c);
  kernels::transpose<T>(r, c, x.value(), out);
  const int ix = x.id();
  return x.tape()->record({c, r}, std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto gx = t.grad_accumulator(ix);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) gx[i * c + j] += g[j * r + i];
    }
  });
}

template <typename T>
Var<T> slice_cols(const Var<T>& x, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", x);
  const std::size_t r = x.shape()[0], c = x.shape()[1];
  if (begin >= end || end > c) {
    shape_error("slice_cols", x.shape(), "cannot be sliced to [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  }
  const std::size_t w = end - begin;
  auto vx = x.value();
  std::vector<T> out(r * w);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < w; ++j) out[i * w + j] = vx[i * c + begin + j];
  }
  const int ix = x.id();
  return x.tape()->record({r, w}, std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto gx = t.grad_accumulator(ix);
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < w; ++j) gx[i * c + begin + j] += g[i * w + j];
    }
  });
}

template <typename T>
Var<T> concat_cols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const std::size_t r = parts[0].rows();
  std::size_t total = 0;
  bool needs_grad = false;
  std::vector<int> ids;
  std::vector<std::size_t> widths;
  for (const Var<T>& p : parts) {
    require_matrix("concat_cols", p);
    check_same_tape("concat_cols", parts[0], p);
    if (p.rows() != r) shape_error("concat_cols", parts[0].shape(), p.shape());
    total += p.cols();
    needs_grad = needs_grad || p.requires_grad();
    ids.push_back(p.id());
    widths.push_back(p.cols());
  }
  std::vector<T> out(r * total);
  std::size_t offset = 0;
  for (const Var<T>& p : parts) {
    auto v = p.value();
    const std::size_t w = p.cols();
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = v[i * w + j];
    }
    offset += w;
  }
  return parts[0].tape()->record({r, total}, std::move(out), needs_grad, [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      const std::size_t w = widths[k];
      if (t.requires_grad(ids[k])) {
        auto gp = t.grad_accumulator(ids[k]);
        for (std::size_t i = 0; i < r; ++i) {
          for (std::size_t j = 0; j < w; ++j) gp[i * w + j] += g[i * total + off + j];
        }
      }
      off += w;
    }
  });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  if (shape_numel(shape) != x.size()) shape_error("reshape", x.shape(), "cannot become " + shape_str(shape));
  auto vx = x.value();
  std::vector<T> out(vx.begin(), vx.end());
  const int ix = x.id();
  return x.tape()->record(std::move(shape), std::move(out), x.requires_grad(), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    auto gx = t.grad_accumulator(ix);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
  });
}

template <typename T>
Var<T> outer_add(const Var<T>& a, const Var<T>& b) {
  check_same_tape("outer_add", a, b);
  if (a.cols() != 1 || b.cols() != 1) shape_error("outer_add", a.shape(), b.shape());
  const std::size_t n = a.size(), m = b.size();
  auto va = a.value();
  auto vb = b.value();
  std::vector<T> out(n * m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = va[i] + vb[j];
  }
  const int ia = a.id(), ib = b.id();
  return a.tape()->record({n, m}, std::move(out), any_grad({&a, &b}), [=](Tape<T>& t, int self) {
    auto g = t.grad(self);
    if (t.requires_grad(ia)) {
      auto ga = t.grad_accumulator(ia);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) ga[i] += g[i * m + j];
      }
    }
    if (t.requires_grad(ib)) {
      auto gb = t.grad_accumulator(ib);
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < m; ++j) gb[j] += g[i * m + j];
      }
    }
  });
}

#define THREADCAST_INSTANTIATE(T)                                                                  \
  template struct Tensor<T>;                                                                       \
  template class Var<T>;                                                                           \
  template class Tape<T>;                                                                          \
  template Var<T> matmul(const Var<T>&, const Var<T>&);                                            \
  template Var<T> add(const Var<T>&, const Var<T>&);                                               \
  template Var<T> scale(const Var<T>&, T);                                                         \
  template Var<T> softmax(const Var<T>&, std::span<const std::uint8_t>);                           \
  template Var<T> layer_norm(const Var<T>&, const Var<T>&, const Var<T>&, T);                      \
  template Var<T> gelu(const Var<T>&);                                                             \
  template Var<T> relu(const Var<T>&);                                                             \
  template Var<T> leaky_relu(const Var<T>&, T);                                                    \
  template Var<T> elu(const Var<T>&, T);                                                           \
  template Var<T> embedding_lookup(const Var<T>&, std::span<const int>);                           \
  template Var<T> dropout(const Var<T>&, double, std::uint64_t);                                   \
  template Var<T> mean(const Var<T>&);                                                             \
  template Var<T> sum(const Var<T>&);                                                              \
  template Var<T> squared_error(const Var<T>&, const Var<T>&, std::span<const T>);                 \
  template Var<T> transpose(const Var<T>&);                                                        \
  template Var<T> slice_cols(const Var<T>&, std::size_t, std::size_t);                             \
  template Var<T> concat_cols(const std::vector<Var<T>>&);                                         \
  template Var<T> reshape(const Var<T>&, Shape);                                                   \
  template Var<T> outer_add(const Var<T>&, const Var<T>&);

THREADCAST_INSTANTIATE(float)
THREADCAST_INSTANTIATE(double)

#undef THREADCAST_INSTANTIATE

}  // namespace threadcast
