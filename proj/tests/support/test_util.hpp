#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "span/gradcheck.hpp"
#include "span/rng.hpp"
#include "span/tensor.hpp"

namespace testutil {

inline span::FeatureMap random_map(span::Rng& rng, int h, int w, int d, double lo = -1.0,
                                   double hi = 1.0) {
  span::FeatureMap m(h, w, d);
  for (double& v : m.values) v = rng.uniform(lo, hi);
  return m;
}

inline span::ParamTensor random_param(span::Rng& rng, const std::string& name,
                                      std::vector<int> shape, double lo = -1.0, double hi = 1.0) {
  span::ParamTensor p = span::ParamTensor::zeros(name, std::move(shape));
  for (double& v : p.value) v = rng.uniform(lo, hi);
  return p;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  return worst;
}

inline double max_abs_diff(const span::FeatureMap& a, const span::FeatureMap& b) {
  return max_abs_diff(a.values, b.values);
}

/// Relative gradient error with an absolute noise floor: max over elements
/// of |a-b| / (max(|a|,|b|) + atol). Central differences on O(1) losses are
/// good to ~1e-10, so atol defaults well above that.
inline double gradient_rel_err(const std::vector<double>& reverse, const std::vector<double>& fd,
                               double atol = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < reverse.size(); ++i) {
    const double diff = std::abs(reverse[i] - fd[i]);
    const double scale = std::max(std::abs(reverse[i]), std::abs(fd[i])) + atol;
    worst = std::max(worst, diff / scale);
  }
  return worst;
}

/// Checks one parameter: runs `forward_backward` once to fill p.grad, then
/// compares against central differences of `forward_only`.
inline double check_gradient(const std::function<void()>& forward_backward,
                             const std::function<double()>& forward_only, span::ParamTensor& p,
                             double step = 1e-5) {
  p.zero_grad();
  forward_backward();
  const std::vector<double> reverse = p.grad;
  const std::vector<double> fd = span::finite_difference_gradient(forward_only, p, step);
  return gradient_rel_err(reverse, fd);
}

}  // namespace testutil
