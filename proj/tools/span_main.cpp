// span: train, run and analyze the pyramid-attention manipulation localizer.
//
// Exit codes: 0 success, 2 usage/config error, 3 numeric failure,
// 4 corrupt artifact.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "span/checkpoint.hpp"
#include "span/config.hpp"
#include "span/datagen.hpp"
#include "span/error.hpp"
#include "span/image_io.hpp"
#include "span/metrics.hpp"
#include "span/pyramid.hpp"
#include "span/training.hpp"

namespace {

using namespace span;

int exit_code_for(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kNumeric:
      return 3;
    case ErrorKind::kCorrupt:
      return 4;
    default:
      return 2;
  }
}

RunConfig load_config(const std::string& path) {
  if (path.empty()) return RunConfig::defaults();
  return parse_config_file(path);
}

std::vector<Transform> parse_transform_list(const std::vector<std::string>& names) {
  std::vector<Transform> out;
  out.reserve(names.size());
  for (const std::string& n : names) out.push_back(parse_transform(n));
  return out;
}

int cmd_gen_data(const std::string& config_path, const std::string& out_dir, int count) {
  if (count < 0) {
    throw Error(ErrorKind::kConfig, "gen-data: count must be >= 0");
  }
  const RunConfig cfg = load_config(config_path);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorKind::kIo, "gen-data: cannot create directory " + out_dir);
  }
  const SampleBatch samples = make_samples(cfg.data.side, cfg.data.train_seed, count);
  write_dataset(out_dir, samples);
  std::printf("wrote %d samples to %s\n", count, out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& config_path, const std::string& out_dir) {
  const RunConfig cfg = load_config(config_path);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (!std::filesystem::is_directory(out_dir)) {
    throw Error(ErrorKind::kIo, "train: cannot create directory " + out_dir);
  }

  SpanModel model = SpanModel::create(cfg.model, cfg.train.seed);
  SampleStream train_stream(cfg.data.side, cfg.data.train_seed);
  const SampleBatch val = make_samples(cfg.data.side, cfg.data.val_seed, cfg.data.val_count);

  FitResult result = fit(std::move(model), train_stream, val, cfg.train);

  save_checkpoint(out_dir + "/model.ckpt", result.best_model);
  write_history(out_dir + "/history.txt", result.history);

  const ValMetrics vm = evaluate_validation(result.best_model, val);
  std::printf("best epoch %d (baseline val loss %.6f)\n", result.best_epoch,
              result.baseline_val_loss);
  std::printf("val loss %.6f  precision %.4f  recall %.4f  F1 %.4f\n", vm.loss, vm.precision,
              vm.recall, vm.f1);
  std::printf("checkpoint: %s/model.ckpt\nhistory: %s/history.txt\n", out_dir.c_str(),
              out_dir.c_str());
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& input_path,
                const std::string& output_path, double threshold, bool thresholded) {
  const SpanModel model = load_checkpoint(model_path);
  const FeatureMap image = read_ppm(input_path);
  if (image.height < 8 || image.width < 8) {
    throw Error(ErrorKind::kConfig, "predict: input below the 8x8 minimum");
  }
  FeatureMap mask = predict(model, image);
  if (thresholded) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw Error(ErrorKind::kConfig, "predict: threshold must be inside (0,1)");
    }
    for (double& v : mask.values) v = v >= threshold ? 1.0 : 0.0;
  }
  write_pgm(output_path, mask);
  std::printf("wrote %s\n", output_path.c_str());
  return 0;
}

int cmd_eval(const std::string& model_path, const std::string& data_dir, bool with_transforms,
             bool with_sweep, const std::string& machine_out, const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  const SpanModel model = load_checkpoint(model_path);
  const SampleBatch samples = load_dataset(data_dir);
  if (samples.empty()) {
    throw Error(ErrorKind::kIo, "eval: no samples in " + data_dir);
  }

  const EvalReport report = evaluate(model, samples, cfg.eval.threshold);
  std::fputs(report.pretty().c_str(), stdout);

  if (with_sweep) {
    std::vector<FeatureMap> preds, masks;
    for (const Sample& s : samples) {
      preds.push_back(predict(model, s.image));
      masks.push_back(s.mask);
    }
    const auto [best_t, best_f1] = threshold_sweep(preds, masks, cfg.eval.sweep);
    std::printf("best threshold %.3f (F1 %.4f)\n", best_t, best_f1);
  }

  if (with_transforms) {
    const auto rows = robustness_suite(model, samples, parse_transform_list(cfg.eval.transforms));
    std::fputs(format_robustness_table(rows).c_str(), stdout);
  }

  if (!machine_out.empty()) {
    std::ofstream out(machine_out);
    if (!out) {
      throw Error(ErrorKind::kIo, "eval: cannot write " + machine_out);
    }
    out << report.machine();
  }
  return 0;
}

struct VariantSpec {
  Fusion fusion;
  PositionMode position;
};

VariantSpec variant_from_name(const std::string& name) {
  if (name == "res") return {Fusion::kResidual, PositionMode::kNone};
  if (name == "res_pe") return {Fusion::kResidual, PositionMode::kEmbedding};
  if (name == "res_pp") return {Fusion::kResidual, PositionMode::kProjection};
  if (name == "none_pp") return {Fusion::kNone, PositionMode::kProjection};
  throw Error(ErrorKind::kConfig, "ablate: unknown variant '" + name +
                                      "' (expected res, res_pe, res_pp or none_pp)");
}

int cmd_ablate(const std::string& config_path, const std::vector<std::string>& variants) {
  if (variants.empty()) {
    throw Error(ErrorKind::kConfig, "ablate: no variants given");
  }
  const RunConfig cfg = load_config(config_path);
  const SampleBatch val = make_samples(cfg.data.side, cfg.data.val_seed, cfg.data.val_count);

  std::printf("variant    val F1    val AUC   best epoch\n");
  for (const std::string& name : variants) {
    const VariantSpec spec = variant_from_name(name);
    ModelConfig mc = cfg.model;
    mc.fusion = spec.fusion;
    mc.position_mode = spec.position;

    SpanModel model = SpanModel::create(mc, cfg.train.seed);
    SampleStream train_stream(cfg.data.side, cfg.data.train_seed);
    FitResult result = fit(std::move(model), train_stream, val, cfg.train);

    const EvalReport report = evaluate(result.best_model, val, cfg.eval.threshold);
    std::printf("%-10s %.4f    %.4f    %d\n", name.c_str(), report.f1, report.auc,
                result.best_epoch);
  }
  return 0;
}

int cmd_analyze(const std::vector<int>& rf_args, int complexity_side) {
  if (!rf_args.empty()) {
    const int layers = rf_args[0];
    const int radius = rf_args.size() > 1 ? rf_args[1] : 1;
    std::printf("receptive field (radius %d):", radius);
    for (int h = 1; h <= layers; ++h) {
      std::printf(" %lld", receptive_field(h, radius));
    }
    std::printf("\n");
  }
  if (complexity_side > 0) {
    std::printf("block-size cost at image side %d:\n", complexity_side);
    double best = 0.0;
    int best_m = 0;
    for (int m = 3; m <= 9; m += 2) {
      const double cost = complexity_estimate(complexity_side, m);
      if (best_m == 0 || cost < best) {
        best = cost;
        best_m = m;
      }
    }
    for (int m = 3; m <= 9; m += 2) {
      const double cost = complexity_estimate(complexity_side, m);
      std::printf("  M=%d  %.0f%s\n", m, cost, m == best_m ? "   <- minimum" : "");
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pyramid-attention image manipulation localizer"};
  app.require_subcommand(1);

  std::string config_path, out_dir, model_path, input_path, output_path, data_dir, machine_out;
  int count = 16;
  double threshold = 0.5;
  bool thresholded = false, with_transforms = false, with_sweep = false, resume = false;
  std::vector<std::string> variants;
  std::vector<int> rf_args;
  int complexity_side = 0;

  auto* gen = app.add_subcommand("gen-data", "write a synthetic dataset (images, masks, index)");
  gen->add_option("--config", config_path, "config file");
  gen->add_option("--out-dir", out_dir, "output directory")->required();
  gen->add_option("--count", count, "number of samples (default 16)");

  auto* train = app.add_subcommand("train", "train a model, write checkpoint and history");
  train->add_option("--config", config_path, "config file");
  train->add_option("--out", out_dir, "output directory")->required();
  train->add_flag("--resume", resume, "not supported; training always starts fresh");

  auto* predict_cmd = app.add_subcommand("predict", "predict a soft tampering mask for one image");
  predict_cmd->add_option("--model", model_path, "checkpoint")->required();
  predict_cmd->add_option("--input", input_path, "input PPM image")->required();
  predict_cmd->add_option("--output", output_path, "output PGM mask")->required();
  predict_cmd->add_option("--threshold", threshold, "binarize at this threshold")
      ->check(CLI::Range(0.0, 1.0))
      ->each([&](const std::string&) { thresholded = true; });

  auto* eval_cmd = app.add_subcommand("eval", "evaluate a model on a generated dataset");
  eval_cmd->add_option("--model", model_path, "checkpoint")->required();
  eval_cmd->add_option("--data-dir", data_dir, "dataset directory")->required();
  eval_cmd->add_option("--config", config_path, "config file");
  eval_cmd->add_flag("--transforms", with_transforms, "append the robustness table");
  eval_cmd->add_flag("--sweep", with_sweep, "report the best F1 threshold");
  eval_cmd->add_option("--machine-out", machine_out, "write machine-readable metrics here");

  auto* ablate = app.add_subcommand("ablate", "train and compare model variants");
  ablate->add_option("--config", config_path, "config file");
  ablate->add_option("--variants", variants, "comma list of res,res_pe,res_pp,none_pp")
      ->required()
      ->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "receptive field / block complexity tables");
  analyze->add_option("--receptive-field", rf_args, "layers [radius]")->expected(1, 2);
  analyze->add_option("--complexity", complexity_side, "image side");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed()) return cmd_gen_data(config_path, out_dir, count);
    if (train->parsed()) {
      if (resume) {
        throw Error(ErrorKind::kConfig, "train: --resume is not supported");
      }
      return cmd_train(config_path, out_dir);
    }
    if (predict_cmd->parsed()) {
      return cmd_predict(model_path, input_path, output_path, threshold, thresholded);
    }
    if (eval_cmd->parsed()) {
      return cmd_eval(model_path, data_dir, with_transforms, with_sweep, machine_out, config_path);
    }
    if (ablate->parsed()) return cmd_ablate(config_path, variants);
    if (analyze->parsed()) {
      if (rf_args.empty() && complexity_side == 0) {
        throw Error(ErrorKind::kConfig, "analyze: give --receptive-field and/or --complexity");
      }
      return cmd_analyze(rf_args, complexity_side);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
