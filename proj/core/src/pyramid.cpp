#include "span/pyramid.hpp"

#include <cmath>

#include "span/error.hpp"
#include "span/ops.hpp"

namespace span {

const char* to_string(Fusion fusion) {
  return fusion == Fusion::kResidual ? "residual" : "none";
}

std::vector<int> PyramidConfig::default_dilations(int layers, int radius) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(layers));
  const long long side = 2LL * radius + 1;
  long long d = 1;
  for (int k = 0; k < layers; ++k) {
    out.push_back(static_cast<int>(d));
    d *= side;
  }
  return out;
}

void PyramidConfig::validate() const {
  if (layers < 1) {
    throw Error(ErrorKind::kConfig, "pyramid: layers must be >= 1");
  }
  if (radius < 0) {
    throw Error(ErrorKind::kConfig, "pyramid: radius must be >= 0");
  }
  if (dilations.size() != static_cast<std::size_t>(layers)) {
    throw Error(ErrorKind::kConfig,
                "pyramid: " + std::to_string(dilations.size()) + " dilations for " +
                    std::to_string(layers) + " layers");
  }
  for (int d : dilations) {
    if (d < 1) throw Error(ErrorKind::kConfig, "pyramid: dilations must be positive");
  }
}

PyramidParams PyramidParams::init(const PyramidConfig& cfg, int depth, Rng& rng,
                                  const std::string& name_prefix) {
  cfg.validate();
  PyramidParams p;
  p.per_layer.reserve(static_cast<std::size_t>(cfg.layers));
  for (int k = 0; k < cfg.layers; ++k) {
    p.per_layer.push_back(AttentionParams::init(depth, cfg.radius, cfg.position_mode, rng,
                                                name_prefix + "." + std::to_string(k)));
  }
  return p;
}

std::vector<ParamTensor*> PyramidParams::parameters() {
  std::vector<ParamTensor*> out;
  for (auto& layer : per_layer) {
    for (ParamTensor* t : layer.parameters()) out.push_back(t);
  }
  return out;
}

int PyramidParams::depth() const {
  return per_layer.empty() ? 0 : per_layer.front().depth;
}

namespace {

void check_params(const PyramidParams& params, const PyramidConfig& cfg) {
  cfg.validate();
  if (params.per_layer.size() != static_cast<std::size_t>(cfg.layers)) {
    throw Error(ErrorKind::kConfig,
                "pyramid: config has " + std::to_string(cfg.layers) + " layers but params have " +
                    std::to_string(params.per_layer.size()));
  }
  for (const auto& layer : params.per_layer) {
    if (layer.depth != params.per_layer.front().depth) {
      throw Error(ErrorKind::kShape, "pyramid: inconsistent layer depths");
    }
  }
}

}  // namespace

Tape::NodeId pyramid(Tape& t, Tape::NodeId x, PyramidParams& params, const PyramidConfig& cfg) {
  check_params(params, cfg);
  Tape::NodeId cur = x;
  for (int k = 0; k < cfg.layers; ++k) {
    NeighborhoodSpec spec{cfg.radius, cfg.dilations[static_cast<std::size_t>(k)]};
    Tape::NodeId attended = lsa(t, cur, params.per_layer[static_cast<std::size_t>(k)], spec);
    cur = cfg.fusion == Fusion::kResidual ? ops::add(t, attended, cur) : attended;
  }
  return cur;
}

FeatureMap pyramid_forward(const FeatureMap& x, const PyramidParams& params,
                           const PyramidConfig& cfg) {
  check_params(params, cfg);
  FeatureMap cur = x;
  for (int k = 0; k < cfg.layers; ++k) {
    NeighborhoodSpec spec{cfg.radius, cfg.dilations[static_cast<std::size_t>(k)]};
    FeatureMap attended = lsa_forward(cur, params.per_layer[static_cast<std::size_t>(k)], spec);
    if (cfg.fusion == Fusion::kResidual) {
      for (std::size_t i = 0; i < attended.values.size(); ++i) {
        attended.values[i] += cur.values[i];
      }
    }
    cur = std::move(attended);
  }
  return cur;
}

long long receptive_field(int layers, int radius) {
  if (layers < 1 || radius < 0) {
    throw Error(ErrorKind::kConfig, "receptive_field: need layers >= 1 and radius >= 0");
  }
  const long long side = 2LL * radius + 1;
  long long field = 1;
  for (int k = 0; k < layers; ++k) {
    if (field > (1LL << 62) / side) {
      throw Error(ErrorKind::kConfig, "receptive_field: value overflows");
    }
    field *= side;
  }
  return field;
}

double complexity_estimate(double image_side, int block_side) {
  if (block_side < 3 || block_side % 2 == 0) {
    throw Error(ErrorKind::kConfig, "complexity_estimate: block side must be odd and >= 3, got " +
                                        std::to_string(block_side));
  }
  if (!(image_side >= block_side)) {
    throw Error(ErrorKind::kConfig, "complexity_estimate: image side must be >= block side");
  }
  const double m = static_cast<double>(block_side);
  return image_side * image_side * m * m * (std::log(image_side) / std::log(m));
}

}  // namespace span
