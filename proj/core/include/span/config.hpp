#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "span/network.hpp"
#include "span/training.hpp"

namespace span {

struct DataConfig {
  int side = 32;
  std::uint64_t train_seed = 1001;
  std::uint64_t val_seed = 2002;
  int val_count = 32;

  void validate() const;
};

struct EvalConfig {
  double threshold = 0.5;
  std::vector<double> sweep;               // defaults to 0.05..0.95 step 0.05
  std::vector<std::string> transforms;     // defaults to the standard battery

  void validate() const;
};

/// Everything a run needs, parsed from a line-oriented
/// "section.key = value" text file ('#' starts a comment). Unknown sections
/// or keys are rejected; omitted keys keep their documented defaults.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DataConfig data;
  EvalConfig eval;

  static RunConfig defaults();
  void validate() const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// The model section as config lines; what checkpoints embed.
std::string serialize_model_section(const ModelConfig& cfg);

}  // namespace span
