#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <random>
#include <vector>

#include "mam/ad/ops.hpp"
#include "mam/ad/tensor.hpp"

namespace mam::testing {

template <typename T = double>
std::vector<T> random_values(std::mt19937& rng, std::size_t n, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<T> v(n);
  for (auto& x : v) x = T(dist(rng));
  return v;
}

template <typename T = double>
ad::Tensor<T> random_tensor(std::mt19937& rng, ad::Shape shape, bool requires_grad = false,
                            double lo = -1.0, double hi = 1.0) {
  const auto n = ad::shape_numel(shape);
  return ad::Tensor<T>(std::move(shape), random_values<T>(rng, n, lo, hi), requires_grad);
}

/// Projects an arbitrary output onto a fixed random direction so any op can
/// be checked through a scalar.
inline ad::Tensor<double> project(const ad::Tensor<double>& out, std::mt19937& rng) {
  auto direction = random_tensor<double>(rng, out.shape());
  return ad::sum(ad::mul(out, direction));
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t kinks = 0;
  // Where the worst entry was, for diagnostics.
  std::size_t worst_input = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Central differences against the analytic gradient for every input, or for
/// `max_per_input` randomly chosen entries of each when the input is large.
/// Relative error is |a - n| / max(|a|, |n|, floor). With several steps each
/// entry keeps its best estimate: a step that straddles a kink is wrong, a
/// wrong gradient is wrong at every step.
inline GradCheckResult gradcheck_steps(const std::function<ad::Tensor<double>()>& loss_fn,
                                       std::vector<ad::Tensor<double>> inputs, std::mt19937& rng,
                                       std::size_t max_per_input, const std::vector<double>& steps,
                                       double floor) {
  for (auto& t : inputs) t.zero_grad();
  ad::backward(loss_fn());
  GradCheckResult result;
  for (std::size_t input = 0; input < inputs.size(); ++input) {
    auto& t = inputs[input];
    std::vector<double> analytic(t.grad().begin(), t.grad().end());
    if (analytic.empty()) analytic.assign(t.numel(), 0.0);
    std::vector<std::size_t> indices(t.numel());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    if (max_per_input > 0 && indices.size() > max_per_input) {
      std::shuffle(indices.begin(), indices.end(), rng);
      indices.resize(max_per_input);
    }
    auto values = t.mutable_values();
    for (std::size_t i : indices) {
      const double saved = values[i];
      const double a = analytic[i];
      auto rel_to = [&](double n) {
        return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
      };
      double best = std::numeric_limits<double>::infinity();
      double best_numeric = 0.0;
      for (double h : steps) {
        double plus = 0.0, minus = 0.0, centre = 0.0;
        {
          ad::NoGradGuard guard;
          centre = loss_fn().item();
          values[i] = saved + h;
          plus = loss_fn().item();
          values[i] = saved - h;
          minus = loss_fn().item();
        }
        values[i] = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        double rel = rel_to(numeric);
        // A step that crosses a ReLU-style kink makes the one-sided slopes
        // disagree far beyond h * curvature; the slope on the side away from
        // the kink is still exact.
        const double right = (plus - centre) / h;
        const double left = (centre - minus) / h;
        if (std::abs(right - left) > 1e-3 * std::max({std::abs(right), std::abs(left), floor})) {
          ++result.kinks;
          rel = std::min({rel, rel_to(right), rel_to(left)});
        }
        if (rel < best) best = rel, best_numeric = numeric;
      }
      if (best > result.max_rel_error) {
        result.max_rel_error = best;
        result.worst_input = input;
        result.worst_analytic = a;
        result.worst_numeric = best_numeric;
      }
      ++result.checked;
    }
  }
  return result;
}

inline GradCheckResult gradcheck(const std::function<ad::Tensor<double>()>& loss_fn,
                                 std::vector<ad::Tensor<double>> inputs, std::mt19937& rng,
                                 std::size_t max_per_input = 0, double h = 1e-5, double floor = 1e-5) {
  return gradcheck_steps(loss_fn, std::move(inputs), rng, max_per_input, {h}, floor);
}

/// Fresh directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("mam_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  [[nodiscard]] const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace mam::testing
