#pragma once

#include <vector>

#include "span/tape.hpp"
#include "span/tensor.hpp"

namespace span::ops {

enum class Padding {
  kSame,       // zero-padded, spatial size preserved
  kSameClamp,  // border-replicated, spatial size preserved
  kValid,      // no padding, output shrinks by kernel-1
};

/// Fixed (non-learnable) square 2D kernel, e.g. a noise-residual filter.
struct FixedKernel {
  int side = 0;
  std::vector<double> w;  // side*side, row-major
};

Tape::NodeId from_map(Tape& t, FeatureMap x);
/// Exposes a parameter as a leaf node so gradients w.r.t. it flow through
/// any downstream op; count must equal h*w*d.
Tape::NodeId from_param(Tape& t, ParamTensor& p, int h, int w, int d);

Tape::NodeId add(Tape& t, Tape::NodeId a, Tape::NodeId b);
Tape::NodeId mul(Tape& t, Tape::NodeId a, Tape::NodeId b);
Tape::NodeId scale(Tape& t, Tape::NodeId a, double k);

/// Per-pixel channel transform: out(r,c,:) = W * x(r,c,:), W of shape
/// {out_depth, in_depth}.
Tape::NodeId matvec(Tape& t, ParamTensor& w, Tape::NodeId x);

/// 2D convolution, kernel shape {kh, kw, in_depth, out_depth}, optional bias
/// of shape {out_depth}.
Tape::NodeId conv2d(Tape& t, Tape::NodeId x, ParamTensor& kernel, ParamTensor* bias, Padding pad);

/// Applies each fixed kernel to each input channel independently with
/// replicated borders, so a zero-sum kernel yields an exactly-flat zero
/// response on constant inputs. Output channel k*in_depth+ci holds kernel k
/// on channel ci.
Tape::NodeId fixed_depthwise_conv(Tape& t, Tape::NodeId x, const std::vector<FixedKernel>& kernels);

/// H x W x 1 mean over channels.
Tape::NodeId channel_mean(Tape& t, Tape::NodeId x);

Tape::NodeId concat_channels(Tape& t, const std::vector<Tape::NodeId>& xs);

Tape::NodeId leaky_relu(Tape& t, Tape::NodeId x, double negative_slope);
Tape::NodeId sigmoid(Tape& t, Tape::NodeId x);

/// Softmax along one axis (0 = rows, 1 = columns, 2 = channels), computed
/// with max subtraction.
Tape::NodeId softmax(Tape& t, Tape::NodeId x, int axis);

Tape::NodeId area_resize(Tape& t, Tape::NodeId x, int oh, int ow);
Tape::NodeId bilinear_resize(Tape& t, Tape::NodeId x, int oh, int ow);

Tape::NodeId sum_all(Tape& t, Tape::NodeId x);
Tape::NodeId mean_all(Tape& t, Tape::NodeId x);

/// Mean binary cross-entropy of a soft H x W x 1 prediction against a binary
/// mask. Predictions are clamped to [1e-12, 1-1e-12] before the logs; mask
/// values must be exactly 0 or 1.
Tape::NodeId bce(Tape& t, Tape::NodeId pred, const FeatureMap& mask);

/// Clamp applied by bce().
inline constexpr double kBceClamp = 1e-12;

// Non-recording counterparts used on evaluation-only paths.
FeatureMap area_resize_map(const FeatureMap& x, int oh, int ow);
FeatureMap bilinear_resize_map(const FeatureMap& x, int oh, int ow);

}  // namespace span::ops
