#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mam/ad/param_set.hpp"

namespace mam::ad {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.5;
  double beta2 = 0.99;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::map<std::string, std::vector<T>> first_moment;
  std::map<std::string, std::vector<T>> second_moment;
  std::int64_t step = 0;
};

/// One bias-corrected Adam update over every entry of `params`. Gradients are
/// left untouched; the caller zeroes them. Throws ContractError naming the
/// first parameter without a gradient buffer.
template <typename T>
void adam_step(ParamSet<T>& params, AdamState<T>& state, const AdamOptions& options);

extern template void adam_step<float>(ParamSet<float>&, AdamState<float>&, const AdamOptions&);
extern template void adam_step<double>(ParamSet<double>&, AdamState<double>&, const AdamOptions&);

}  // namespace mam::ad
