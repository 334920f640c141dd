#include "span/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "span/error.hpp"
#include "span/ops.hpp"
#include "span/rng.hpp"
#include "span/threading.hpp"

namespace span {
namespace {

void pool(const std::vector<FeatureMap>& preds, const std::vector<FeatureMap>& masks,
          std::vector<double>& p, std::vector<double>& y) {
  if (preds.size() != masks.size()) {
    throw Error(ErrorKind::kShape, "metrics: " + std::to_string(preds.size()) +
                                       " predictions vs " + std::to_string(masks.size()) +
                                       " masks");
  }
  std::size_t total = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    require_same_shape("metrics", preds[i], masks[i]);
    total += preds[i].values.size();
  }
  p.reserve(total);
  y.reserve(total);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    p.insert(p.end(), preds[i].values.begin(), preds[i].values.end());
    y.insert(y.end(), masks[i].values.begin(), masks[i].values.end());
  }
}

void check_labels(const std::vector<double>& labels) {
  for (double v : labels) {
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorKind::kShape, "metrics: label " + std::to_string(v) + " outside {0,1}");
    }
  }
}

std::vector<FeatureMap> predict_all(const SpanModel& model, const SampleBatch& samples,
                                    const std::vector<FeatureMap>* images_override) {
  std::vector<FeatureMap> preds(samples.size());
  const int workers = std::min(thread_budget(), static_cast<int>(samples.size()));
  parallel_for(static_cast<int>(samples.size()), workers, [&](int i) {
    const FeatureMap& img =
        images_override ? (*images_override)[static_cast<std::size_t>(i)]
                        : samples[static_cast<std::size_t>(i)].image;
    preds[static_cast<std::size_t>(i)] = predict(model, img);
  });
  return preds;
}

}  // namespace

double pixel_auc(const std::vector<double>& preds, const std::vector<double>& labels) {
  if (preds.size() != labels.size() || preds.empty()) {
    throw Error(ErrorKind::kShape, "pixel_auc: size mismatch or empty input");
  }
  check_labels(labels);
  const std::size_t n = preds.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (preds[a] != preds[b]) return preds[a] < preds[b];
    return a < b;
  });

  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && preds[order[j + 1]] == preds[order[i]]) ++j;
    // Average rank over the tie group [i, j], 1-based ranks.
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) {
      if (labels[order[k]] == 1.0) {
        pos_rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j + 1;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw Error(ErrorKind::kConfig, "pixel_auc: pooled ground truth is all-" +
                                        std::string(n_pos == 0 ? "zero" : "one"));
  }
  const double np = static_cast<double>(n_pos);
  return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

double pixel_auc(const std::vector<FeatureMap>& preds, const std::vector<FeatureMap>& masks) {
  std::vector<double> p, y;
  pool(preds, masks, p, y);
  return pixel_auc(p, y);
}

PrfResult prf1(const std::vector<double>& preds, const std::vector<double>& labels,
               double threshold) {
  if (preds.size() != labels.size()) {
    throw Error(ErrorKind::kShape, "prf1: size mismatch");
  }
  check_labels(labels);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    const bool hit = preds[i] >= threshold;
    const bool pos = labels[i] == 1.0;
    if (hit && pos) ++tp;
    else if (hit) ++fp;
    else if (pos) ++fn;
  }
  PrfResult r;
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0.0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

PrfResult prf1(const std::vector<FeatureMap>& preds, const std::vector<FeatureMap>& masks,
               double threshold) {
  std::vector<double> p, y;
  pool(preds, masks, p, y);
  return prf1(p, y, threshold);
}

std::pair<double, double> threshold_sweep(const std::vector<FeatureMap>& preds,
                                          const std::vector<FeatureMap>& masks,
                                          const std::vector<double>& grid) {
  if (grid.empty()) {
    throw Error(ErrorKind::kConfig, "threshold_sweep: empty grid");
  }
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  for (double t : sorted) {
    if (t <= 0.0 || t >= 1.0) {
      throw Error(ErrorKind::kConfig, "threshold_sweep: threshold outside (0,1)");
    }
  }
  std::vector<double> p, y;
  pool(preds, masks, p, y);
  double best_t = sorted.front();
  double best_f1 = -1.0;
  for (double t : sorted) {
    const double f1 = prf1(p, y, t).f1;
    if (f1 > best_f1) {
      best_f1 = f1;
      best_t = t;
    }
  }
  return {best_t, best_f1};
}

EvalReport evaluate(const SpanModel& model, const SampleBatch& samples, double threshold) {
  if (samples.empty()) {
    throw Error(ErrorKind::kConfig, "evaluate: no samples");
  }
  std::vector<FeatureMap> preds = predict_all(model, samples, nullptr);
  std::vector<FeatureMap> masks;
  masks.reserve(samples.size());
  for (const auto& s : samples) masks.push_back(s.mask);

  EvalReport report;
  report.threshold = threshold;
  report.sample_count = static_cast<int>(samples.size());
  report.auc = pixel_auc(preds, masks);
  const PrfResult prf = prf1(preds, masks, threshold);
  report.precision = prf.precision;
  report.recall = prf.recall;
  report.f1 = prf.f1;

  for (ManipType type : {ManipType::kCopyMove, ManipType::kSplice, ManipType::kRemoval}) {
    std::vector<FeatureMap> tp, tm;
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (samples[i].type == type) {
        tp.push_back(preds[i]);
        tm.push_back(masks[i]);
      }
    }
    if (tp.empty()) continue;
    EvalReport::TypeMetrics tmx;
    tmx.samples = static_cast<int>(tp.size());
    tmx.auc = pixel_auc(tp, tm);
    tmx.f1 = prf1(tp, tm, threshold).f1;
    report.per_type[type] = tmx;
  }
  return report;
}

std::string EvalReport::pretty() const {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "samples    %6d   threshold %.3f\n", sample_count, threshold);
  os << line;
  std::snprintf(line, sizeof(line), "pixel AUC  %.4f\n", auc);
  os << line;
  std::snprintf(line, sizeof(line), "precision  %.4f   recall %.4f   F1 %.4f\n", precision, recall,
                f1);
  os << line;
  if (!per_type.empty()) {
    os << "per type:\n";
    for (const auto& [type, m] : per_type) {
      std::snprintf(line, sizeof(line), "  %-10s AUC %.4f   F1 %.4f   (%d samples)\n",
                    to_string(type), m.auc, m.f1, m.samples);
      os << line;
    }
  }
  return os.str();
}

std::string EvalReport::machine() const {
  std::ostringstream os;
  char line[160];
  auto emit = [&](const char* key, double v) {
    std::snprintf(line, sizeof(line), "%s %.17g\n", key, v);
    os << line;
  };
  emit("pixel_auc", auc);
  emit("precision", precision);
  emit("recall", recall);
  emit("f1", f1);
  emit("threshold", threshold);
  os << "samples " << sample_count << "\n";
  for (const auto& [type, m] : per_type) {
    std::snprintf(line, sizeof(line), "%s.auc %.17g\n", to_string(type), m.auc);
    os << line;
    std::snprintf(line, sizeof(line), "%s.f1 %.17g\n", to_string(type), m.f1);
    os << line;
  }
  return os.str();
}

std::string Transform::name() const {
  char buf[48];
  switch (kind) {
    case Kind::kNone:
      return "none";
    case Kind::kResize:
      std::snprintf(buf, sizeof(buf), "resize_%.2fx", param);
      return buf;
    case Kind::kBlur:
      std::snprintf(buf, sizeof(buf), "blur_k%d", static_cast<int>(param));
      return buf;
    case Kind::kNoise:
      std::snprintf(buf, sizeof(buf), "noise_s%g", param);
      return buf;
  }
  return "?";
}

Transform parse_transform(const std::string& text) {
  Transform tf;
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  auto need_arg = [&]() -> double {
    try {
      std::size_t used = 0;
      const double v = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (...) {
      throw Error(ErrorKind::kConfig, "transform '" + text + "': bad parameter");
    }
  };
  if (head == "none") {
    tf.kind = Transform::Kind::kNone;
  } else if (head == "resize") {
    tf.kind = Transform::Kind::kResize;
    tf.param = need_arg();
    if (tf.param <= 0.0 || tf.param > 1.0) {
      throw Error(ErrorKind::kConfig, "transform '" + text + "': factor must be in (0,1]");
    }
  } else if (head == "blur") {
    tf.kind = Transform::Kind::kBlur;
    tf.param = need_arg();
    const int k = static_cast<int>(tf.param);
    if (k < 1 || k % 2 == 0 || k != tf.param) {
      throw Error(ErrorKind::kConfig, "transform '" + text + "': kernel side must be odd");
    }
  } else if (head == "noise") {
    tf.kind = Transform::Kind::kNoise;
    tf.param = need_arg();
    if (tf.param < 0.0) {
      throw Error(ErrorKind::kConfig, "transform '" + text + "': sigma must be >= 0");
    }
  } else {
    throw Error(ErrorKind::kConfig, "unknown transform '" + text + "'");
  }
  return tf;
}

FeatureMap gaussian_blur(const FeatureMap& image, int kernel_side) {
  if (kernel_side < 1 || kernel_side % 2 == 0) {
    throw Error(ErrorKind::kConfig, "gaussian_blur: kernel side must be odd and positive");
  }
  const int half = kernel_side / 2;
  const double sigma = 0.3 * ((kernel_side - 1) / 2.0 - 1.0) + 0.8;
  std::vector<double> k(static_cast<std::size_t>(kernel_side));
  double sum = 0.0;
  for (int i = -half; i <= half; ++i) {
    const double v = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + half)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;

  // Separable pass with clamped borders, so constants stay constant.
  FeatureMap tmp(image.height, image.width, image.depth, 0.0);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      for (int ch = 0; ch < image.depth; ++ch) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          const int cc = std::min(std::max(c + i, 0), image.width - 1);
          acc += k[static_cast<std::size_t>(i + half)] * image.at(r, cc, ch);
        }
        tmp.at(r, c, ch) = acc;
      }
    }
  }
  FeatureMap out(image.height, image.width, image.depth, 0.0);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      for (int ch = 0; ch < image.depth; ++ch) {
        double acc = 0.0;
        for (int i = -half; i <= half; ++i) {
          const int rr = std::min(std::max(r + i, 0), image.height - 1);
          acc += k[static_cast<std::size_t>(i + half)] * tmp.at(rr, c, ch);
        }
        out.at(r, c, ch) = acc;
      }
    }
  }
  return out;
}

FeatureMap apply_transform(const FeatureMap& image, const Transform& tf,
                           std::uint64_t sample_index) {
  switch (tf.kind) {
    case Transform::Kind::kNone:
      return image;
    case Transform::Kind::kResize: {
      const int oh = static_cast<int>(std::lround(image.height * tf.param));
      const int ow = static_cast<int>(std::lround(image.width * tf.param));
      if (oh < 8 || ow < 8) {
        throw Error(ErrorKind::kConfig, "resize transform: target below 8x8");
      }
      return ops::area_resize_map(image, oh, ow);
    }
    case Transform::Kind::kBlur:
      return gaussian_blur(image, static_cast<int>(tf.param));
    case Transform::Kind::kNoise: {
      FeatureMap out = image;
      Rng rng(Rng::mix(0x6e015e, sample_index));
      const double sigma = tf.param / 255.0;
      for (double& v : out.values) {
        v = std::min(std::max(v + rng.normal(0.0, sigma), 0.0), 1.0);
      }
      return out;
    }
  }
  throw Error(ErrorKind::kConfig, "apply_transform: bad transform kind");
}

std::vector<RobustnessRow> robustness_suite(const SpanModel& model, const SampleBatch& samples,
                                            const std::vector<Transform>& transforms) {
  if (samples.empty()) {
    throw Error(ErrorKind::kConfig, "robustness_suite: no samples");
  }
  std::vector<RobustnessRow> rows;
  rows.reserve(transforms.size());
  for (const Transform& tf : transforms) {
    std::vector<FeatureMap> images(samples.size());
    std::vector<FeatureMap> masks(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      images[i] = apply_transform(samples[i].image, tf, i);
      if (tf.kind == Transform::Kind::kResize) {
        FeatureMap m = ops::area_resize_map(samples[i].mask, images[i].height, images[i].width);
        for (double& v : m.values) v = v >= 0.5 ? 1.0 : 0.0;
        masks[i] = std::move(m);
      } else {
        masks[i] = samples[i].mask;
      }
    }
    std::vector<FeatureMap> preds = predict_all(model, samples, &images);
    rows.push_back({tf.name(), pixel_auc(preds, masks)});
  }
  return rows;
}

std::string format_robustness_table(const std::vector<RobustnessRow>& rows) {
  std::ostringstream os;
  os << "transform      pixel AUC\n";
  char line[80];
  for (const auto& row : rows) {
    std::snprintf(line, sizeof(line), "%-14s %.4f\n", row.transform.c_str(), row.auc);
    os << line;
  }
  return os.str();
}

}  // namespace span
