#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "span/datagen.hpp"
#include "span/network.hpp"
#include "span/tensor.hpp"

namespace span {

/// Mann-Whitney pixel AUC over pooled predictions; ties count 1/2.
/// Requires at least one positive and one negative pixel.
double pixel_auc(const std::vector<double>& preds, const std::vector<double>& labels);
double pixel_auc(const std::vector<FeatureMap>& preds, const std::vector<FeatureMap>& masks);

struct PrfResult {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Pooled-pixel confusion counts at pred >= threshold. Precision is 0 when
/// nothing is predicted positive; F1 is 0 when P+R is 0.
PrfResult prf1(const std::vector<double>& preds, const std::vector<double>& labels,
               double threshold);
PrfResult prf1(const std::vector<FeatureMap>& preds, const std::vector<FeatureMap>& masks,
               double threshold);

/// Best-F1 threshold over a grid; ties resolve to the lowest threshold.
std::pair<double, double> threshold_sweep(const std::vector<FeatureMap>& preds,
                                          const std::vector<FeatureMap>& masks,
                                          const std::vector<double>& grid);

struct EvalReport {
  double auc = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double threshold = 0.5;
  struct TypeMetrics {
    double auc = 0.0, f1 = 0.0;
    int samples = 0;
  };
  std::map<ManipType, TypeMetrics> per_type;
  int sample_count = 0;

  std::string pretty() const;
  /// One "<metric> <value>" line per entry.
  std::string machine() const;
};

EvalReport evaluate(const SpanModel& model, const SampleBatch& samples, double threshold);

/// Evaluation-time image corruptions (Gaussian blur uses the usual
/// sigma = 0.3*((k-1)/2 - 1) + 0.8 for kernel side k; noise sigma is on the
/// 0-255 scale).
struct Transform {
  enum class Kind { kNone, kResize, kBlur, kNoise };
  Kind kind = Kind::kNone;
  double param = 0.0;

  std::string name() const;
};

/// "none", "resize:0.78", "blur:3", "noise:15".
Transform parse_transform(const std::string& text);

/// Applies the transform to an image; deterministic per (transform,
/// sample_index) for the noise case.
FeatureMap apply_transform(const FeatureMap& image, const Transform& tf,
                           std::uint64_t sample_index);

FeatureMap gaussian_blur(const FeatureMap& image, int kernel_side);

struct RobustnessRow {
  std::string transform;
  double auc = 0.0;
};

/// Re-evaluates pooled AUC under each transform. Masks are only touched by
/// resizing (area resize, re-binarized at 0.5).
std::vector<RobustnessRow> robustness_suite(const SpanModel& model, const SampleBatch& samples,
                                            const std::vector<Transform>& transforms);

std::string format_robustness_table(const std::vector<RobustnessRow>& rows);

}  // namespace span
