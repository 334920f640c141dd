#pragma once

#include <string>
#include <vector>

#include "span/attention.hpp"
#include "span/tape.hpp"

namespace span {

enum class Fusion {
  kResidual,  // x_k = LSA(x_{k-1}) + x_{k-1}
  kNone,      // x_k = LSA(x_{k-1})
};

const char* to_string(Fusion fusion);

/// Stack layout of the multi-scale attention pyramid.
struct PyramidConfig {
  int layers = 3;  // h
  int radius = 1;  // N
  std::vector<int> dilations;  // per layer; defaults to (2N+1)^(k-1)
  Fusion fusion = Fusion::kResidual;
  PositionMode position_mode = PositionMode::kProjection;

  /// 1, 2N+1, (2N+1)^2, ... so each layer widens coverage by a full block.
  static std::vector<int> default_dilations(int layers, int radius);
  void validate() const;
};

/// Independent attention weights per pyramid level.
struct PyramidParams {
  std::vector<AttentionParams> per_layer;

  static PyramidParams init(const PyramidConfig& cfg, int depth, Rng& rng,
                            const std::string& name_prefix);
  std::vector<ParamTensor*> parameters();
  int depth() const;
};

Tape::NodeId pyramid(Tape& t, Tape::NodeId x, PyramidParams& params, const PyramidConfig& cfg);

FeatureMap pyramid_forward(const FeatureMap& x, const PyramidParams& params,
                           const PyramidConfig& cfg);

/// Side length (2N+1)^h of the input region that can influence one
/// top-layer pixel under the default dilation schedule.
long long receptive_field(int layers, int radius);

/// S^2 * M^2 * log_M(S): per-image cost of covering an S x S input with a
/// pyramid of M x M blocks. M must be odd and >= 3, S >= M.
double complexity_estimate(double image_side, int block_side);

}  // namespace span
