#include "mam/ad/param_set.hpp"

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam::ad {

template <typename T>
Tensor<T>& NamedTensors<T>::at(const std::string& path) {
  auto it = entries_.find(path);
  if (it == entries_.end()) throw ContractError(fmt::format("no tensor at path '{}'", path));
  return it->second;
}

template <typename T>
const Tensor<T>& NamedTensors<T>::at(const std::string& path) const {
  auto it = entries_.find(path);
  if (it == entries_.end()) throw ContractError(fmt::format("no tensor at path '{}'", path));
  return it->second;
}

template <typename T>
std::size_t NamedTensors<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [path, t] : entries_) n += t.numel();
  return n;
}

template <typename T>
void NamedTensors<T>::insert(const std::string& path, Tensor<T> tensor) {
  if (path.empty()) throw ContractError("tensor path must not be empty");
  if (!entries_.emplace(path, std::move(tensor)).second) {
    throw ContractError(fmt::format("duplicate tensor path '{}'", path));
  }
}

template <typename T>
void ParamSet<T>::add(const std::string& path, Tensor<T> tensor) {
  tensor.set_requires_grad(true);
  this->insert(path, std::move(tensor));
}

template <typename T>
void ParamSet<T>::zero_grad() {
  for (auto& [path, t] : this->entries_) t.zero_grad();
}

template <typename T>
ParamSet<T> ParamSet<T>::subset(const std::string& prefix) const {
  ParamSet out;
  for (const auto& [path, t] : this->entries_) {
    if (path.compare(0, prefix.size(), prefix) == 0) out.add(path, t);
  }
  return out;
}

template <typename T>
void BufferSet<T>::add(const std::string& path, Tensor<T> tensor) {
  tensor.set_requires_grad(false);
  this->insert(path, std::move(tensor));
}

template class NamedTensors<float>;
template class NamedTensors<double>;
template class ParamSet<float>;
template class ParamSet<double>;
template class BufferSet<float>;
template class BufferSet<double>;

}  // namespace mam::ad
