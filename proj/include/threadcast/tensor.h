#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace threadcast {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major value. Scalars have shape {1}.
template <typename T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0));
  Tensor(Shape s, std::vector<T> values);

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t rows() const { return shape.size() >= 2 ? shape[0] : 1; }
  std::size_t cols() const { return shape.empty() ? 1 : shape.back(); }
  T& at(std::size_t i, std::size_t j) { return data[i * cols() + j]; }
  const T& at(std::size_t i, std::size_t j) const { return data[i * cols() + j]; }
};

template <typename T>
class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the tape
// lives.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  Tape<T>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Shape& shape() const;
  std::size_t size() const { return value().size(); }
  std::size_t rows() const;
  std::size_t cols() const;
  std::span<const T> value() const;
  std::span<const T> grad() const;
  T item() const;
  bool requires_grad() const;

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

// Records operations in execution order; backward() replays their gradient
// rules in reverse, which is a reverse topological order of the graph. One
// tape per thread; gradients of parallel tapes are reduced by the caller.
template <typename T>
class Tape {
 public:
  using Backward = std::function<void(Tape<T>& tape, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var<T> constant(Tensor<T> value);
  Var<T> variable(Tensor<T> value);
  // Borrows `value.data`; it must stay alive and unchanged while the tape is used.
  Var<T> parameter(const Tensor<T>& value);

  Var<T> record(Shape shape, std::vector<T> value, bool requires_grad, Backward backward);

  // Populates gradients of every node that requires them. `loss` must have a
  // single element.
  void backward(const Var<T>& loss);

  const Shape& shape(int id) const { return nodes_[id].shape; }
  std::span<const T> value(int id) const;
  std::span<const T> grad(int id) const { return nodes_[id].grad; }
  std::span<T> grad_accumulator(int id);
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  // Data pointer passed to parameter(), or nullptr for other nodes.
  const T* borrowed(int id) const { return nodes_[id].external; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Shape shape;
    std::vector<T> owned;
    const T* external = nullptr;
    std::size_t numel = 0;
    std::vector<T> grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::deque<Node> nodes_;
};

// ---- operations ------------------------------------------------------------
// All throw std::invalid_argument naming the op and shapes on mismatch.

template <typename T> Var<T> matmul(const Var<T>& a, const Var<T>& b);
// b broadcasts over the leading dims of a (b's shape is a suffix of a's).
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, T factor);
// Row-wise over the last dim. `allowed` (same size as x, 1 = keep) excludes
// entries: they get exactly zero weight. A row with nothing allowed is zero.
template <typename T> Var<T> softmax(const Var<T>& x, std::span<const std::uint8_t> allowed = {});
template <typename T>
Var<T> layer_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5));
template <typename T> Var<T> gelu(const Var<T>& x);
template <typename T> Var<T> relu(const Var<T>& x);
template <typename T> Var<T> leaky_relu(const Var<T>& x, T slope);
template <typename T> Var<T> elu(const Var<T>& x, T alpha = T(1));
// Rows of table [V x D] selected by `indices`: result [n x D].
template <typename T> Var<T> embedding_lookup(const Var<T>& table, std::span<const int> indices);
// Inverted dropout; identity when p == 0.
template <typename T> Var<T> dropout(const Var<T>& x, double p, std::uint64_t seed);
template <typename T> Var<T> mean(const Var<T>& x);
template <typename T> Var<T> sum(const Var<T>& x);
// sum_i w_i * (pred_i - target_i)^2, with w_i = 1 when `weights` is empty.
template <typename T>
Var<T> squared_error(const Var<T>& pred, const Var<T>& target, std::span<const T> weights = {});
template <typename T> Var<T> transpose(const Var<T>& x);
template <typename T> Var<T> slice_cols(const Var<T>& x, std::size_t begin, std::size_t end);
template <typename T> Var<T> concat_cols(const std::vector<Var<T>>& parts);
template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);
// out[i][j] = a[i] + b[j] for column vectors a [n x 1], b [m x 1].
template <typename T> Var<T> outer_add(const Var<T>& a, const Var<T>& b);

}  // namespace threadcast
