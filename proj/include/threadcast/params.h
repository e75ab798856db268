#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "threadcast/tensor.h"

namespace threadcast {

enum class Init { kZeros, kOnes, kNormal };

// Named tensors in registration order. Addresses are stable, so tapes may
// borrow them.
template <typename T>
class ParameterSet {
 public:
  Tensor<T>& add(const std::string& name, Shape shape, Init init = Init::kZeros);

  std::size_t size() const { return tensors_.size(); }
  std::size_t numel() const;
  const std::string& name(std::size_t i) const { return names_[i]; }
  Init init_kind(std::size_t i) const { return inits_[i]; }
  Tensor<T>& operator[](std::size_t i) { return tensors_[i]; }
  const Tensor<T>& operator[](std::size_t i) const { return tensors_[i]; }
  Tensor<T>& at(const std::string& name);
  const Tensor<T>& at(const std::string& name) const;
  const Tensor<T>* find(const std::string& name) const;

  // Normal(0, stddev) for kNormal entries, each tensor from its own derived
  // stream so adding a parameter does not reshuffle the others.
  void initialize(std::uint64_t seed, double stddev);

  // Copies values from `other` by name; names and shapes must match exactly.
  template <typename U>
  void assign_from(const ParameterSet<U>& other);

 private:
  std::vector<std::string> names_;
  std::vector<Init> inits_;
  std::deque<Tensor<T>> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Checkpoint container, little-endian:
//   "TCCKPT01" u32 version u32 scalar_bytes(4|8) str meta u32 count, then per
//   tensor: str name, u32 rank, u64 dims[rank], scalar data[numel]
// where str is u32 length + bytes and meta is a JSON document.
struct Checkpoint {
  std::string meta;
  int scalar_bytes = 4;
  ParameterSet<double> params;
};

template <typename T>
void save_checkpoint(std::ostream& out, const ParameterSet<T>& params, const std::string& meta);
Checkpoint load_checkpoint(std::istream& in);

}  // namespace threadcast
