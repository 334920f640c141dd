#include "span/tensor.hpp"

#include <cmath>
#include <sstream>

#include "span/error.hpp"

namespace span {

FeatureMap::FeatureMap(int h, int w, int d, double fill)
    : height(h), width(w), depth(d) {
  if (h <= 0 || w <= 0 || d <= 0) {
    throw Error(ErrorKind::kShape, "FeatureMap: non-positive dimension " + shape_string());
  }
  values.assign(static_cast<std::size_t>(h) * w * d, fill);
}

bool FeatureMap::all_finite() const {
  for (double v : values) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

std::string FeatureMap::shape_string() const {
  std::ostringstream os;
  os << height << "x" << width << "x" << depth;
  return os.str();
}

FeatureMap FeatureMap::scalar(double v) {
  FeatureMap m(1, 1, 1);
  m.values[0] = v;
  return m;
}

double FeatureMap::as_scalar() const {
  if (height != 1 || width != 1 || depth != 1) {
    throw Error(ErrorKind::kShape, "as_scalar: expected 1x1x1, got " + shape_string());
  }
  return values[0];
}

ParamTensor ParamTensor::zeros(std::string name, std::vector<int> shape) {
  ParamTensor p;
  p.name = std::move(name);
  p.shape = std::move(shape);
  std::int64_t n = 1;
  for (int d : p.shape) {
    if (d <= 0) {
      throw Error(ErrorKind::kShape, "ParamTensor " + p.name + ": non-positive dim in " + p.shape_string());
    }
    n *= d;
  }
  p.value.assign(static_cast<std::size_t>(n), 0.0);
  p.grad.assign(static_cast<std::size_t>(n), 0.0);
  return p;
}

std::int64_t ParamTensor::count() const {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  return n;
}

void ParamTensor::zero_grad() {
  std::fill(grad.begin(), grad.end(), 0.0);
}

std::string ParamTensor::shape_string() const {
  return span::shape_string(shape);
}

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << "x";
    os << shape[i];
  }
  return os.str();
}

void require_same_shape(const char* op, const FeatureMap& a, const FeatureMap& b) {
  if (!a.same_shape(b)) {
    throw Error(ErrorKind::kShape, std::string(op) + ": shape mismatch (" + a.shape_string() +
                                       " vs " + b.shape_string() + ")");
  }
}

}  // namespace span
