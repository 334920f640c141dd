#include "span/gradcheck.hpp"

#include <cmath>
#include <string>

#include "span/error.hpp"

namespace span {

std::vector<double> finite_difference_gradient(const std::function<double()>& f, ParamTensor& p,
                                               double step) {
  if (!(step > 0.0)) {
    throw Error(ErrorKind::kConfig, "finite_difference_gradient: step must be positive");
  }
  std::vector<double> grad(p.value.size(), 0.0);
  for (std::size_t i = 0; i < p.value.size(); ++i) {
    const double saved = p.value[i];
    p.value[i] = saved + step;
    const double hi = f();
    p.value[i] = saved - step;
    const double lo = f();
    p.value[i] = saved;
    if (!std::isfinite(hi) || !std::isfinite(lo)) {
      throw Error(ErrorKind::kNumeric, "finite_difference_gradient: non-finite value of f at " +
                                           p.name + "[" + std::to_string(i) + "]");
    }
    grad[i] = (hi - lo) / (2.0 * step);
  }
  return grad;
}

}  // namespace span
