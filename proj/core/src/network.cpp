#include "span/network.hpp"

#include <algorithm>
#include <cmath>

#include "span/error.hpp"

namespace span {
namespace {

constexpr int kSrmSide = 5;
constexpr int kBayarSide = 5;
constexpr int kBayarCenter = (kBayarSide * kBayarSide) / 2;

ops::FixedKernel make_kernel(std::initializer_list<double> taps, double norm) {
  ops::FixedKernel k;
  k.side = kSrmSide;
  k.w.assign(taps);
  for (double& v : k.w) v /= norm;
  return k;
}

ParamTensor uniform_init(const std::string& name, std::vector<int> shape, double bound, Rng& rng) {
  ParamTensor p = ParamTensor::zeros(name, std::move(shape));
  for (double& v : p.value) v = rng.uniform(-bound, bound);
  return p;
}

}  // namespace

const std::vector<ops::FixedKernel>& srm_kernels() {
  // Horizontal second-order residual, 1/2 * [1 -2 1].
  // Horizontal third-order residual, 1/3 * [1 -3 3 -1].
  // Square 5x5 residual, 1/12 * the usual +-12 kernel.
  static const std::vector<ops::FixedKernel> kernels = {
      make_kernel({0, 0, 0, 0, 0,
                   0, 0, 0, 0, 0,
                   0, 1, -2, 1, 0,
                   0, 0, 0, 0, 0,
                   0, 0, 0, 0, 0},
                  2.0),
      make_kernel({0, 0, 0, 0, 0,
                   0, 0, 0, 0, 0,
                   0, 1, -3, 3, -1,
                   0, 0, 0, 0, 0,
                   0, 0, 0, 0, 0},
                  3.0),
      make_kernel({-1, 2, -2, 2, -1,
                   2, -6, 8, -6, 2,
                   -2, 8, -12, 8, -2,
                   2, -6, 8, -6, 2,
                   -1, 2, -2, 2, -1},
                  12.0),
  };
  return kernels;
}

void ModelConfig::validate() const {
  if (feature_depth < 1 || attention_depth < 1) {
    throw Error(ErrorKind::kConfig, "model: depths must be positive");
  }
  if (resize_side != 0 && resize_side < 8) {
    throw Error(ErrorKind::kConfig, "model: resize_side must be 0 or >= 8");
  }
  pyramid_config().validate();
}

PyramidConfig ModelConfig::pyramid_config() const {
  PyramidConfig cfg;
  cfg.layers = layers;
  cfg.radius = radius;
  cfg.dilations = dilations;
  cfg.fusion = fusion;
  cfg.position_mode = position_mode;
  return cfg;
}

SpanModel SpanModel::create(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(seed);
  SpanModel m;
  m.config = cfg;

  const int df = cfg.feature_depth;
  const int d = cfg.attention_depth;
  const int in_ch = 3 * static_cast<int>(srm_kernels().size()) + 1 + 3;

  // Constrained kernel starts as the exact local-average predictor.
  m.extractor.bayar_kernel = ParamTensor::zeros("extractor.bayar", {kBayarSide, kBayarSide, 1, 1});
  for (double& v : m.extractor.bayar_kernel.value) v = 1.0 / (kBayarSide * kBayarSide - 1);
  m.extractor.bayar_kernel.value[kBayarCenter] = -1.0;

  m.extractor.conv1_w = uniform_init("extractor.conv1.weight", {3, 3, in_ch, df},
                                     1.0 / std::sqrt(9.0 * in_ch), rng);
  m.extractor.conv1_b = ParamTensor::zeros("extractor.conv1.bias", {df});
  m.extractor.conv2_w =
      uniform_init("extractor.conv2.weight", {3, 3, df, df}, 1.0 / std::sqrt(9.0 * df), rng);
  m.extractor.conv2_b = ParamTensor::zeros("extractor.conv2.bias", {df});

  m.adapt_w = uniform_init("adapt.weight", {1, 1, df, d}, 1.0 / std::sqrt(static_cast<double>(df)),
                           rng);
  m.adapt_b = ParamTensor::zeros("adapt.bias", {d});

  m.pyramid_params = PyramidParams::init(cfg.pyramid_config(), d, rng, "pyramid");

  m.head1_w = uniform_init("head.conv1.weight", {3, 3, d, d}, 1.0 / std::sqrt(9.0 * d), rng);
  m.head1_b = ParamTensor::zeros("head.conv1.bias", {d});
  m.head2_w = uniform_init("head.conv2.weight", {3, 3, d, d}, 1.0 / std::sqrt(9.0 * d), rng);
  m.head2_b = ParamTensor::zeros("head.conv2.bias", {d});
  // Zero-initialized final projection: the untrained model predicts exactly 0.5.
  m.out_w = ParamTensor::zeros("head.out.weight", {1, 1, d, 1});
  m.out_b = ParamTensor::zeros("head.out.bias", {1});

  auto params = m.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->id = static_cast<int>(i);
  return m;
}

std::vector<ParamTensor*> SpanModel::parameters() {
  std::vector<ParamTensor*> out = {
      &extractor.bayar_kernel, &extractor.conv1_w, &extractor.conv1_b,
      &extractor.conv2_w,      &extractor.conv2_b, &adapt_w,
      &adapt_b,
  };
  for (ParamTensor* p : pyramid_params.parameters()) out.push_back(p);
  for (ParamTensor* p : {&head1_w, &head1_b, &head2_w, &head2_b, &out_w, &out_b}) {
    out.push_back(p);
  }
  return out;
}

std::vector<const ParamTensor*> SpanModel::parameters() const {
  auto mut = const_cast<SpanModel*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

void SpanModel::zero_grads() {
  for (ParamTensor* p : parameters()) p->zero_grad();
}

void SpanModel::apply_constraints() {
  auto& v = extractor.bayar_kernel.value;
  v[kBayarCenter] = -1.0;
  double off_sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != kBayarCenter) off_sum += v[i];
  }
  const double shift = (1.0 - off_sum) / (kBayarSide * kBayarSide - 1);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i != kBayarCenter) v[i] += shift;
  }
}

std::int64_t SpanModel::parameter_count() const {
  std::int64_t n = 0;
  for (const ParamTensor* p : parameters()) n += p->count();
  return n;
}

Tape::NodeId extract_features_node(Tape& t, SpanModel& model, Tape::NodeId image) {
  const FeatureMap& in = t.value(image);
  if (in.depth != 3) {
    throw Error(ErrorKind::kShape,
                "extract_features: expected a 3-channel image, got " + in.shape_string());
  }
  Tape::NodeId srm = ops::fixed_depthwise_conv(t, image, model.extractor.srm);
  Tape::NodeId luma = ops::channel_mean(t, image);
  Tape::NodeId bayar =
      ops::conv2d(t, luma, model.extractor.bayar_kernel, nullptr, ops::Padding::kSame);
  Tape::NodeId cat = ops::concat_channels(t, {srm, bayar, image});
  Tape::NodeId h1 = ops::leaky_relu(
      t, ops::conv2d(t, cat, model.extractor.conv1_w, &model.extractor.conv1_b, ops::Padding::kSame),
      kLeakySlope);
  Tape::NodeId h2 = ops::leaky_relu(
      t, ops::conv2d(t, h1, model.extractor.conv2_w, &model.extractor.conv2_b, ops::Padding::kSame),
      kLeakySlope);
  return h2;
}

FeatureMap extract_features(const SpanModel& model, const FeatureMap& image) {
  Tape t(/*record=*/false);
  auto& m = const_cast<SpanModel&>(model);  // non-recording tape never writes grads
  return t.value(extract_features_node(t, m, ops::from_map(t, image)));
}

Tape::NodeId forward_logits(Tape& t, SpanModel& model, const FeatureMap& image) {
  const int in_h = image.height, in_w = image.width;
  Tape::NodeId x = ops::from_map(t, image);
  Tape::NodeId feat = extract_features_node(t, model, x);
  const int side = model.config.resize_side;
  if (side > 0) {
    feat = ops::area_resize(t, feat, side, side);
  }
  Tape::NodeId adapted = ops::conv2d(t, feat, model.adapt_w, &model.adapt_b, ops::Padding::kSame);
  PyramidConfig pcfg = model.config.pyramid_config();
  Tape::NodeId pyr = pyramid(t, adapted, model.pyramid_params, pcfg);
  Tape::NodeId h1 = ops::leaky_relu(
      t, ops::conv2d(t, pyr, model.head1_w, &model.head1_b, ops::Padding::kSame), kLeakySlope);
  Tape::NodeId h2 = ops::leaky_relu(
      t, ops::conv2d(t, h1, model.head2_w, &model.head2_b, ops::Padding::kSame), kLeakySlope);
  Tape::NodeId logits = ops::conv2d(t, h2, model.out_w, &model.out_b, ops::Padding::kSame);
  if (side > 0) {
    logits = ops::bilinear_resize(t, logits, in_h, in_w);  // predictions keep input resolution
  }
  return logits;
}

FeatureMap predict(const SpanModel& model, const FeatureMap& image) {
  Tape t(/*record=*/false);
  auto& m = const_cast<SpanModel&>(model);
  Tape::NodeId p = ops::sigmoid(t, forward_logits(t, m, image));
  FeatureMap out = t.value(p);
  // Keep outputs strictly inside (0,1) even when the sigmoid saturates.
  for (double& v : out.values) {
    v = std::min(std::max(v, ops::kBceClamp), 1.0 - ops::kBceClamp);
  }
  return out;
}

}  // namespace span
