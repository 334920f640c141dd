#include "span/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "span/error.hpp"
#include "span/metrics.hpp"
#include "span/ops.hpp"
#include "span/threading.hpp"

namespace span {

void TrainConfig::validate() const {
  if (batch_size < 1 || steps_per_epoch < 1 || max_epochs < 1) {
    throw Error(ErrorKind::kConfig, "train: batch_size, steps_per_epoch and max_epochs must be >= 1");
  }
  if (!(initial_lr > lr_floor) || !(lr_floor > 0.0)) {
    throw Error(ErrorKind::kConfig, "train: need initial_lr > lr_floor > 0");
  }
  if (lr_patience < 1 || stop_patience < lr_patience) {
    throw Error(ErrorKind::kConfig, "train: need stop_patience >= lr_patience >= 1");
  }
}

double bce_loss(const FeatureMap& pred, const FeatureMap& mask) {
  Tape t(/*record=*/false);
  return t.value(ops::bce(t, ops::from_map(t, pred), mask)).as_scalar();
}

AdamOptimizer::AdamOptimizer(const std::vector<ParamTensor*>& params, double beta1, double beta2,
                             double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps) {
  slots_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    slots_[i].m.assign(params[i]->value.size(), 0.0);
    slots_[i].v.assign(params[i]->value.size(), 0.0);
  }
}

void AdamOptimizer::step(const std::vector<ParamTensor*>& params, double lr) {
  if (params.size() != slots_.size()) {
    throw Error(ErrorKind::kConfig, "adam: parameter list changed size");
  }
  for (const ParamTensor* p : params) {
    for (double g : p->grad) {
      if (!std::isfinite(g)) {
        throw Error(ErrorKind::kNumeric, "adam: non-finite gradient in " + p->name);
      }
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor& p = *params[i];
    Slot& s = slots_[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      s.m[j] = beta1_ * s.m[j] + (1.0 - beta1_) * g;
      s.v[j] = beta2_ * s.v[j] + (1.0 - beta2_) * g * g;
      const double mhat = s.m[j] / bc1;
      const double vhat = s.v[j] / bc2;
      p.value[j] -= lr * mhat / (std::sqrt(vhat) + eps_);
    }
  }
}

TrainSchedule::TrainSchedule(const TrainConfig& cfg)
    : lr_(cfg.initial_lr),
      lr_floor_(cfg.lr_floor),
      lr_patience_(cfg.lr_patience),
      stop_patience_(cfg.stop_patience),
      best_(std::numeric_limits<double>::infinity()) {
  cfg.validate();
}

void TrainSchedule::set_baseline(double val_loss) {
  best_ = val_loss;
  since_ = 0;
}

TrainSchedule::Outcome TrainSchedule::observe(double val_loss) {
  Outcome out;
  if (val_loss < best_) {
    best_ = val_loss;
    since_ = 0;
    out.improved = true;
  } else {
    ++since_;
  }
  out.stop = since_ >= stop_patience_;
  if (!out.stop && since_ > 0 && since_ % lr_patience_ == 0) {
    const double next = std::max(lr_ * 0.5, lr_floor_);
    out.halved = next != lr_;
    lr_ = next;
  }
  out.lr = lr_;
  return out;
}

double train_step(SpanModel& model, const SampleBatch& batch, AdamOptimizer& opt, double lr) {
  if (batch.empty()) {
    throw Error(ErrorKind::kConfig, "train_step: empty batch");
  }
  auto params = model.parameters();
  model.zero_grads();

  const int n = static_cast<int>(batch.size());
  std::vector<double> losses(static_cast<std::size_t>(n), 0.0);
  std::vector<GradSink> sinks;
  sinks.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sinks.emplace_back(params);

  const int workers = std::min(thread_budget(), n);
  parallel_for(n, workers, [&](int i) {
    const Sample& s = batch[static_cast<std::size_t>(i)];
    Tape tape;
    tape.redirect_param_grads(&sinks[static_cast<std::size_t>(i)]);
    Tape::NodeId prob = ops::sigmoid(tape, forward_logits(tape, model, s.image));
    Tape::NodeId loss = ops::bce(tape, prob, s.mask);
    losses[static_cast<std::size_t>(i)] = tape.value(loss).as_scalar();
    tape.backward(loss);
  });

  const double inv = 1.0 / static_cast<double>(n);
  double mean_loss = 0.0;
  for (int i = 0; i < n; ++i) {
    sinks[static_cast<std::size_t>(i)].accumulate_into(params, inv);
    mean_loss += losses[static_cast<std::size_t>(i)];
  }
  mean_loss *= inv;
  if (!std::isfinite(mean_loss)) {
    throw Error(ErrorKind::kNumeric, "train_step: non-finite batch loss");
  }

  opt.step(params, lr);
  model.apply_constraints();
  return mean_loss;
}

ValMetrics evaluate_validation(const SpanModel& model, const SampleBatch& val) {
  if (val.empty()) {
    throw Error(ErrorKind::kConfig, "evaluate_validation: empty validation set");
  }
  std::vector<FeatureMap> preds(val.size());
  const int workers = std::min(thread_budget(), static_cast<int>(val.size()));
  parallel_for(static_cast<int>(val.size()), workers, [&](int i) {
    preds[static_cast<std::size_t>(i)] = predict(model, val[static_cast<std::size_t>(i)].image);
  });
  ValMetrics out;
  std::vector<FeatureMap> masks;
  masks.reserve(val.size());
  for (std::size_t i = 0; i < val.size(); ++i) {
    out.loss += bce_loss(preds[i], val[i].mask);
    masks.push_back(val[i].mask);
  }
  out.loss /= static_cast<double>(val.size());
  const PrfResult prf = prf1(preds, masks, 0.5);
  out.precision = prf.precision;
  out.recall = prf.recall;
  out.f1 = prf.f1;
  return out;
}

FitResult fit(SpanModel model, SampleStream& train, const SampleBatch& val,
              const TrainConfig& cfg) {
  cfg.validate();
  if (val.empty()) {
    throw Error(ErrorKind::kConfig, "fit: empty validation set");
  }

  auto params = model.parameters();
  AdamOptimizer opt(params);
  TrainSchedule schedule(cfg);

  FitResult result;
  const ValMetrics baseline = evaluate_validation(model, val);
  result.baseline_val_loss = baseline.loss;
  schedule.set_baseline(baseline.loss);
  result.best_model = model;
  result.best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    const double lr = schedule.lr();
    double train_loss = 0.0;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      train_loss += train_step(model, train.next_batch(cfg.batch_size), opt, lr);
    }
    train_loss /= static_cast<double>(cfg.steps_per_epoch);

    const ValMetrics vm = evaluate_validation(model, val);
    result.history.push_back(
        {epoch, lr, train_loss, vm.loss, vm.precision, vm.recall, vm.f1});

    const TrainSchedule::Outcome out = schedule.observe(vm.loss);
    if (out.improved) {
      result.best_model = model;
      result.best_epoch = epoch;
    }
    if (out.stop) break;
  }
  return result;
}

void write_history(const std::string& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot write " + path);
  }
  out << "# epoch lr train_loss val_loss val_precision val_recall val_f1\n";
  char line[256];
  for (const EpochRecord& r : history) {
    std::snprintf(line, sizeof(line), "%d %.17g %.17g %.17g %.17g %.17g %.17g\n", r.epoch, r.lr,
                  r.train_loss, r.val_loss, r.precision, r.recall, r.f1);
    out << line;
  }
  if (!out) {
    throw Error(ErrorKind::kIo, "write failed for " + path);
  }
}

}  // namespace span
