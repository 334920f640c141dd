#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace span {

/// Dense H x W x D feature tensor. Values are stored row-major in
/// (row, column, channel) order; this is the carrier for images, feature
/// activations and predicted masks throughout the library.
struct FeatureMap {
  int height = 0;
  int width = 0;
  int depth = 0;
  std::vector<double> values;

  FeatureMap() = default;
  FeatureMap(int h, int w, int d, double fill = 0.0);

  double& at(int r, int c, int ch) {
    return values[static_cast<std::size_t>((r * width + c) * depth + ch)];
  }
  double at(int r, int c, int ch) const {
    return values[static_cast<std::size_t>((r * width + c) * depth + ch)];
  }
  double* pixel(int r, int c) { return values.data() + static_cast<std::size_t>(r * width + c) * depth; }
  const double* pixel(int r, int c) const {
    return values.data() + static_cast<std::size_t>(r * width + c) * depth;
  }

  std::size_t size() const { return values.size(); }
  bool same_shape(const FeatureMap& o) const {
    return height == o.height && width == o.width && depth == o.depth;
  }
  bool all_finite() const;

  std::string shape_string() const;

  static FeatureMap scalar(double v);
  double as_scalar() const;  // requires 1x1x1, throws otherwise
};

/// A learnable tensor: value plus an always-present gradient accumulator of
/// identical shape. `id` is the registration index inside the owning model
/// (-1 while unregistered) and is what thread-local gradient sinks key on.
struct ParamTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> value;
  std::vector<double> grad;
  int id = -1;

  static ParamTensor zeros(std::string name, std::vector<int> shape);

  std::int64_t count() const;
  void zero_grad();
  std::string shape_string() const;
};

std::string shape_string(const std::vector<int>& shape);

/// Throws Error(kShape) naming the operation when the two maps differ in shape.
void require_same_shape(const char* op, const FeatureMap& a, const FeatureMap& b);

}  // namespace span
