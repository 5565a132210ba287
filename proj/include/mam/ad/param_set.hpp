#pragma once

#include <cstddef>
#include <map>
#include <string>

#include "mam/ad/tensor.hpp"

namespace mam::ad {

/// Path-addressed tensors iterated in lexicographic path order.
template <typename T>
class NamedTensors {
 public:
  using Map = std::map<std::string, Tensor<T>>;

  [[nodiscard]] bool contains(const std::string& path) const { return entries_.count(path) != 0; }
  [[nodiscard]] Tensor<T>& at(const std::string& path);
  [[nodiscard]] const Tensor<T>& at(const std::string& path) const;
  [[nodiscard]] std::size_t size() const { return entries_.size(); }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  /// Total scalar count across entries.
  [[nodiscard]] std::size_t scalar_count() const;

  [[nodiscard]] typename Map::const_iterator begin() const { return entries_.begin(); }
  [[nodiscard]] typename Map::const_iterator end() const { return entries_.end(); }
  [[nodiscard]] typename Map::iterator begin() { return entries_.begin(); }
  [[nodiscard]] typename Map::iterator end() { return entries_.end(); }

 protected:
  void insert(const std::string& path, Tensor<T> tensor);
  Map entries_;
};

/// Trainable parameters. Every entry requires grad.
template <typename T>
class ParamSet : public NamedTensors<T> {
 public:
  void add(const std::string& path, Tensor<T> tensor);
  void zero_grad();
  /// Entries whose path starts with `prefix` (storage shared).
  [[nodiscard]] ParamSet subset(const std::string& prefix) const;
};

/// Non-trainable state such as batch-norm running statistics.
template <typename T>
class BufferSet : public NamedTensors<T> {
 public:
  void add(const std::string& path, Tensor<T> tensor);
};

extern template class NamedTensors<float>;
extern template class NamedTensors<double>;
extern template class ParamSet<float>;
extern template class ParamSet<double>;
extern template class BufferSet<float>;
extern template class BufferSet<double>;

}  // namespace mam::ad
