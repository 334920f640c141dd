#include "span/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "span/error.hpp"

namespace span {
namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long long parse_ll(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long out = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw Error(ErrorKind::kConfig, "config: bad integer for " + key + ": '" + v + "'");
  }
}

int parse_int(const std::string& key, const std::string& v) {
  return static_cast<int>(parse_ll(key, v));
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const unsigned long long out = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw Error(ErrorKind::kConfig, "config: bad seed for " + key + ": '" + v + "'");
  }
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double out = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing");
    return out;
  } catch (...) {
    throw Error(ErrorKind::kConfig, "config: bad number for " + key + ": '" + v + "'");
  }
}

std::vector<std::string> split(const std::string& v, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(v);
  while (std::getline(is, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  for (const std::string& item : split(v, ',')) out.push_back(parse_int(key, item));
  return out;
}

std::vector<double> parse_double_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const std::string& item : split(v, ',')) out.push_back(parse_double(key, item));
  return out;
}

Fusion parse_fusion(const std::string& v) {
  if (v == "residual") return Fusion::kResidual;
  if (v == "none") return Fusion::kNone;
  throw Error(ErrorKind::kConfig, "config: model.fusion must be residual or none, got '" + v + "'");
}

PositionMode parse_position_mode(const std::string& v) {
  if (v == "pp") return PositionMode::kProjection;
  if (v == "pe") return PositionMode::kEmbedding;
  if (v == "none") return PositionMode::kNone;
  throw Error(ErrorKind::kConfig,
              "config: model.position_mode must be pp, pe or none, got '" + v + "'");
}

}  // namespace

void DataConfig::validate() const {
  if (side < 8) {
    throw Error(ErrorKind::kConfig, "data: side must be >= 8");
  }
  if (val_count < 1) {
    throw Error(ErrorKind::kConfig, "data: val_count must be >= 1");
  }
}

void EvalConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(ErrorKind::kConfig, "eval: threshold must be inside (0,1)");
  }
  for (double t : sweep) {
    if (!(t > 0.0 && t < 1.0)) {
      throw Error(ErrorKind::kConfig, "eval: sweep thresholds must be inside (0,1)");
    }
  }
}

RunConfig RunConfig::defaults() {
  RunConfig cfg;
  for (double t = 0.05; t < 0.951; t += 0.05) cfg.eval.sweep.push_back(t);
  cfg.eval.transforms = {"none",   "resize:0.78", "resize:0.25", "blur:3",
                         "blur:15", "noise:3",     "noise:15"};
  return cfg;
}

void RunConfig::validate() const {
  model.validate();
  train.validate();
  data.validate();
  eval.validate();
}

RunConfig parse_config_text(const std::string& text) {
  RunConfig cfg = RunConfig::defaults();
  bool dilations_given = false;

  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig,
                  "config line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));

    if (key == "model.feature_depth") cfg.model.feature_depth = parse_int(key, value);
    else if (key == "model.attention_depth") cfg.model.attention_depth = parse_int(key, value);
    else if (key == "model.layers") cfg.model.layers = parse_int(key, value);
    else if (key == "model.radius") cfg.model.radius = parse_int(key, value);
    else if (key == "model.dilations") {
      cfg.model.dilations = parse_int_list(key, value);
      dilations_given = true;
    } else if (key == "model.fusion") cfg.model.fusion = parse_fusion(value);
    else if (key == "model.position_mode") cfg.model.position_mode = parse_position_mode(value);
    else if (key == "model.resize_side") cfg.model.resize_side = parse_int(key, value);
    else if (key == "train.batch_size") cfg.train.batch_size = parse_int(key, value);
    else if (key == "train.steps_per_epoch") cfg.train.steps_per_epoch = parse_int(key, value);
    else if (key == "train.initial_lr") cfg.train.initial_lr = parse_double(key, value);
    else if (key == "train.lr_floor") cfg.train.lr_floor = parse_double(key, value);
    else if (key == "train.lr_patience") cfg.train.lr_patience = parse_int(key, value);
    else if (key == "train.stop_patience") cfg.train.stop_patience = parse_int(key, value);
    else if (key == "train.max_epochs") cfg.train.max_epochs = parse_int(key, value);
    else if (key == "train.seed") cfg.train.seed = parse_u64(key, value);
    else if (key == "data.side") cfg.data.side = parse_int(key, value);
    else if (key == "data.train_seed") cfg.data.train_seed = parse_u64(key, value);
    else if (key == "data.val_seed") cfg.data.val_seed = parse_u64(key, value);
    else if (key == "data.val_count") cfg.data.val_count = parse_int(key, value);
    else if (key == "eval.threshold") cfg.eval.threshold = parse_double(key, value);
    else if (key == "eval.sweep") cfg.eval.sweep = parse_double_list(key, value);
    else if (key == "eval.transforms") cfg.eval.transforms = split(value, ',');
    else {
      throw Error(ErrorKind::kConfig, "config: unknown key '" + key + "'");
    }
  }

  if (!dilations_given) {
    cfg.model.dilations = PyramidConfig::default_dilations(cfg.model.layers, cfg.model.radius);
  }
  cfg.validate();
  return cfg;
}

RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open config " + path);
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str());
}

std::string serialize_model_section(const ModelConfig& cfg) {
  std::ostringstream os;
  os << "model.feature_depth = " << cfg.feature_depth << "\n";
  os << "model.attention_depth = " << cfg.attention_depth << "\n";
  os << "model.layers = " << cfg.layers << "\n";
  os << "model.radius = " << cfg.radius << "\n";
  os << "model.dilations = ";
  for (std::size_t i = 0; i < cfg.dilations.size(); ++i) {
    if (i) os << ",";
    os << cfg.dilations[i];
  }
  os << "\n";
  os << "model.fusion = " << to_string(cfg.fusion) << "\n";
  os << "model.position_mode = " << to_string(cfg.position_mode) << "\n";
  os << "model.resize_side = " << cfg.resize_side << "\n";
  return os.str();
}

}  // namespace span
