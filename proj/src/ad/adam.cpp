#include "mam/ad/adam.hpp"

#include <cmath>

#include <fmt/format.h>

#include "mam/errors.hpp"

namespace mam::ad {

template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state, const AdamOptions& options) {
  for (const auto& [path, p] : params) {
    if (!p.has_grad()) throw ContractError(fmt::format("adam_step: parameter '{}' has no gradient", path));
  }
  state.step += 1;
  const double bc1 = 1.0 - std::pow(options.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(options.beta2, double(state.step));
  const T b1 = T(options.beta1);
  const T b2 = T(options.beta2);
  for (auto& [path, p] : params) {
    auto& m = state.first_moment[path];
    auto& v = state.second_moment[path];
    if (m.size() != p.numel()) m.assign(p.numel(), T(0));
    if (v.size() != p.numel()) v.assign(p.numel(), T(0));
    auto values = p.mutable_values();
    const auto grad = p.grad();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const T g = grad[i];
      m[i] = b1 * m[i] + (T(1) - b1) * g;
      v[i] = b2 * v[i] + (T(1) - b2) * g * g;
      const double mhat = double(m[i]) / bc1;
      const double vhat = double(v[i]) / bc2;
      values[i] = T(double(values[i]) - options.lr * mhat / (std::sqrt(vhat) + options.eps));
    }
  }
}

template void adam_step<float>(ParamSet<float>&, AdamState<float>&, const AdamOptions&);
template void adam_step<double>(ParamSet<double>&, AdamState<double>&, const AdamOptions&);

}  // namespace mam::ad
