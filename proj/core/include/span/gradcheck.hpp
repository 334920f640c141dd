#pragma once

#include <functional>
#include <vector>

#include "span/tensor.hpp"

namespace span {

/// Central-difference gradient of a scalar function with respect to every
/// element of `p`: (f(p + step*e_i) - f(p - step*e_i)) / (2*step). The
/// function is evaluated with p.value perturbed in place and restored
/// afterwards. Throws Error(kNumeric) naming the perturbed index if f
/// returns a non-finite value.
std::vector<double> finite_difference_gradient(const std::function<double()>& f, ParamTensor& p,
                                               double step);

}  // namespace span
