#include "threadcast/params.h"

#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "threadcast/binary_io.h"
#include "threadcast/rng.h"

namespace threadcast {

template <typename T>
Tensor<T>& ParameterSet<T>::add(const std::string& name, Shape shape, Init init) {
  if (index_.count(name)) throw std::invalid_argument("parameter '" + name + "' registered twice");
  index_.emplace(name, tensors_.size());
  names_.push_back(name);
  inits_.push_back(init);
  tensors_.emplace_back(std::move(shape), init == Init::kOnes ? T(1) : T(0));
  return tensors_.back();
}

template <typename T>
std::size_t ParameterSet<T>::numel() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

template <typename T>
Tensor<T>& ParameterSet<T>::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return tensors_[it->second];
}

template <typename T>
const Tensor<T>& ParameterSet<T>::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("no parameter named '" + name + "'");
  return tensors_[it->second];
}

template <typename T>
const Tensor<T>* ParameterSet<T>::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &tensors_[it->second];
}

template <typename T>
void ParameterSet<T>::initialize(std::uint64_t seed, double stddev) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    Tensor<T>& t = tensors_[i];
    switch (inits_[i]) {
      case Init::kZeros: std::fill(t.data.begin(), t.data.end(), T(0)); break;
      case Init::kOnes: std::fill(t.data.begin(), t.data.end(), T(1)); break;
      case Init::kNormal: {
        Rng rng(derive_seed(seed, i));
        for (T& v : t.data) v = static_cast<T>(rng.normal(0.0, stddev));
        break;
      }
    }
  }
}

template <typename T>
template <typename U>
void ParameterSet<T>::assign_from(const ParameterSet<U>& other) {
  if (other.size() != size()) throw std::invalid_argument("parameter sets differ in size");
  for (std::size_t i = 0; i < size(); ++i) {
    const Tensor<U>* src = other.find(names_[i]);
    if (!src) throw std::invalid_argument("parameter '" + names_[i] + "' missing from source");
    if (src->shape != tensors_[i].shape) {
      throw std::invalid_argument("parameter '" + names_[i] + "' has shape " + shape_str(src->shape) +
                                  ", expected " + shape_str(tensors_[i].shape));
    }
    for (std::size_t k = 0; k < src->data.size(); ++k) tensors_[i].data[k] = static_cast<T>(src->data[k]);
  }
}

namespace {
constexpr char kCheckpointMagic[8] = {'T', 'C', 'C', 'K', 'P', 'T', '0', '1'};
constexpr std::uint32_t kCheckpointVersion = 1;
}  // namespace

template <typename T>
void save_checkpoint(std::ostream& out, const ParameterSet<T>& params, const std::string& meta) {
  BinaryWriter w(out);
  w.bytes(kCheckpointMagic, 8);
  w.u32(kCheckpointVersion);
  w.u32(sizeof(T));
  w.str(meta);
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor<T>& t = params[i];
    w.str(params.name(i));
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::size_t d : t.shape) w.u64(d);
    for (T v : t.data) {
      if constexpr (sizeof(T) == 4) {
        w.f32(v);
      } else {
        w.f64(v);
      }
    }
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed");
}

Checkpoint load_checkpoint(std::istream& in) {
  BinaryReader r(in);
  char magic[8];
  r.bytes(magic, 8);
  if (std::memcmp(magic, kCheckpointMagic, 8) != 0) throw std::runtime_error("load_checkpoint: bad magic");
  if (r.u32() != kCheckpointVersion) throw std::runtime_error("load_checkpoint: unsupported version");
  Checkpoint ck;
  ck.scalar_bytes = static_cast<int>(r.u32());
  if (ck.scalar_bytes != 4 && ck.scalar_bytes != 8) throw std::runtime_error("load_checkpoint: bad scalar width");
  ck.meta = r.str();
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    const std::string name = r.str();
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw std::runtime_error("load_checkpoint: rank out of range");
    Shape shape(rank);
    for (auto& d : shape) d = r.u64();
    Tensor<double>& t = ck.params.add(name, shape);
    for (double& v : t.data) v = ck.scalar_bytes == 4 ? static_cast<double>(r.f32()) : r.f64();
  }
  return ck;
}

template class ParameterSet<float>;
template class ParameterSet<double>;
template void ParameterSet<float>::assign_from(const ParameterSet<float>&);
template void ParameterSet<float>::assign_from(const ParameterSet<double>&);
template void ParameterSet<double>::assign_from(const ParameterSet<float>&);
template void ParameterSet<double>::assign_from(const ParameterSet<double>&);
template void save_checkpoint<float>(std::ostream&, const ParameterSet<float>&, const std::string&);
template void save_checkpoint<double>(std::ostream&, const ParameterSet<double>&, const std::string&);

}  // namespace threadcast
