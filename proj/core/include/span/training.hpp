#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "span/datagen.hpp"
#include "span/network.hpp"
#include "span/tensor.hpp"

namespace span {

struct TrainConfig {
  int batch_size = 4;
  int steps_per_epoch = 100;
  double initial_lr = 1e-4;
  double lr_floor = 1e-7;
  int lr_patience = 10;   // epochs without improvement per halving
  int stop_patience = 30; // epochs without improvement before stopping
  int max_epochs = 20;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Mean binary cross-entropy; same clamping contract as the tape op.
double bce_loss(const FeatureMap& pred, const FeatureMap& mask);

/// Standard bias-corrected Adam over a fixed parameter list. Throws
/// Error(kNumeric) on a non-finite gradient, naming the tensor.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(const std::vector<ParamTensor*>& params, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);

  void step(const std::vector<ParamTensor*>& params, double lr);
  std::int64_t step_count() const { return t_; }

 private:
  struct Slot {
    std::vector<double> m, v;
  };
  std::vector<Slot> slots_;
  std::int64_t t_ = 0;
  double beta1_, beta2_, eps_;
};

/// Validation-driven learning-rate schedule and early stopping.
///
/// "Improvement" means strictly below the best loss seen so far, where the
/// baseline is the pre-training validation loss (set_baseline). After every
/// lr_patience consecutive non-improving epochs the rate halves (never below
/// lr_floor); after stop_patience of them training stops.
class TrainSchedule {
 public:
  explicit TrainSchedule(const TrainConfig& cfg);

  void set_baseline(double val_loss);

  struct Outcome {
    bool improved = false;
    bool halved = false;
    bool stop = false;
    double lr = 0.0;  // rate to use from the next epoch on
  };
  Outcome observe(double val_loss);

  double lr() const { return lr_; }
  double best() const { return best_; }
  int epochs_since_best() const { return since_; }

 private:
  double lr_;
  double lr_floor_;
  int lr_patience_;
  int stop_patience_;
  double best_;
  int since_ = 0;
};

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};

struct FitResult {
  SpanModel best_model;
  std::vector<EpochRecord> history;
  double baseline_val_loss = 0.0;
  int best_epoch = 0;  // 0 means the untrained baseline
};

/// One optimizer step on a batch; returns the mean batch loss. Batch
/// elements are differentiated independently (possibly in parallel) and
/// their gradients reduced in batch order, so results do not depend on the
/// thread count.
double train_step(SpanModel& model, const SampleBatch& batch, AdamOptimizer& opt, double lr);

/// Full training loop with per-epoch validation, checkpointing of the best
/// model by validation loss, and the schedule above. The validation set is
/// fixed; the train stream provides batch_size*steps_per_epoch samples per
/// epoch.
FitResult fit(SpanModel model, SampleStream& train, const SampleBatch& val,
              const TrainConfig& cfg);

/// Validation metrics used inside fit: mean sample BCE plus pooled P/R/F1
/// at threshold 0.5.
struct ValMetrics {
  double loss = 0.0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
};
ValMetrics evaluate_validation(const SpanModel& model, const SampleBatch& val);

void write_history(const std::string& path, const std::vector<EpochRecord>& history);

}  // namespace span
