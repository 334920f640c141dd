#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "span/ops.hpp"
#include "span/pyramid.hpp"
#include "span/tape.hpp"
#include "span/tensor.hpp"

namespace span {

/// Architecture knobs; everything a checkpoint needs to rebuild the model.
struct ModelConfig {
  int feature_depth = 8;    // extractor output channels
  int attention_depth = 8;  // channel width inside the pyramid
  int layers = 3;
  int radius = 1;
  std::vector<int> dilations = {1, 3, 9};
  Fusion fusion = Fusion::kResidual;
  PositionMode position_mode = PositionMode::kProjection;
  /// When > 0, extractor features are area-resized to this side before the
  /// pyramid and the logits are resized back, so predictions keep the input
  /// resolution. 0 disables resizing.
  int resize_side = 0;

  void validate() const;
  PyramidConfig pyramid_config() const;
};

/// The three fixed 5x5 noise-residual kernels (second-order and third-order
/// horizontal residuals and the square 5x5 kernel, with their usual 1/2,
/// 1/3 and 1/12 normalizations). Applied per input channel and never updated.
const std::vector<ops::FixedKernel>& srm_kernels();

/// Feature extractor: fixed SRM filters, a constrained residual-prediction
/// kernel on the channel mean, the raw channels, then two 3x3 conv layers.
struct ExtractorParams {
  std::vector<ops::FixedKernel> srm = srm_kernels();
  ParamTensor bayar_kernel;  // {5,5,1,1}; center pinned to -1, rest sums to 1
  ParamTensor conv1_w, conv1_b;
  ParamTensor conv2_w, conv2_b;
};

struct SpanModel {
  ModelConfig config;
  ExtractorParams extractor;
  ParamTensor adapt_w, adapt_b;  // 1x1 conv to attention depth
  PyramidParams pyramid_params;
  ParamTensor head1_w, head1_b;  // two 3x3 conv layers
  ParamTensor head2_w, head2_b;
  ParamTensor out_w, out_b;      // 1x1 projection to one logit channel

  static SpanModel create(const ModelConfig& cfg, std::uint64_t seed);

  /// All learnable tensors in registration order (the order checkpoints and
  /// optimizer slots follow). Ids are assigned by create().
  std::vector<ParamTensor*> parameters();
  std::vector<const ParamTensor*> parameters() const;

  void zero_grads();
  /// Re-projects the constrained kernel: center -1, off-center sum 1.
  /// Called after every optimizer step.
  void apply_constraints();
  std::int64_t parameter_count() const;
};

/// Input must be H x W x 3. Returns the H x W x feature_depth activation.
Tape::NodeId extract_features_node(Tape& t, SpanModel& model, Tape::NodeId image);
FeatureMap extract_features(const SpanModel& model, const FeatureMap& image);

/// Full forward pass up to the (H x W x 1) logit map.
Tape::NodeId forward_logits(Tape& t, SpanModel& model, const FeatureMap& image);

/// Soft tampering mask, every value strictly inside (0, 1). Thread-safe on a
/// const model.
FeatureMap predict(const SpanModel& model, const FeatureMap& image);

inline constexpr double kLeakySlope = 0.1;

}  // namespace span
