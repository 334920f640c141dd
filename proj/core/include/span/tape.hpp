#pragma once

#include <functional>
#include <vector>

#include "span/tensor.hpp"

namespace span {

/// Redirects parameter-gradient accumulation into thread-local buffers so
/// batch elements can be differentiated concurrently and then reduced in a
/// fixed order. Buffers are indexed by ParamTensor::id.
class GradSink {
 public:
  explicit GradSink(const std::vector<ParamTensor*>& params);

  double* buffer_for(const ParamTensor& p);
  /// grad[i] += scale * buffer[i] for every registered parameter.
  void accumulate_into(const std::vector<ParamTensor*>& params, double scale) const;
  void clear();

 private:
  std::vector<std::vector<double>> buffers_;
};

/// Records one forward pass as a linear sequence of tensor-valued nodes and
/// replays it in reverse to accumulate exact gradients. A tape is confined
/// to a single thread; distinct tapes share nothing.
class Tape {
 public:
  using NodeId = int;
  using BackwardFn = std::function<void(Tape&)>;

  /// A non-recording tape stores values only; backward() is unavailable.
  explicit Tape(bool record = true) : record_(record) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return record_; }
  int size() const { return static_cast<int>(nodes_.size()); }

  NodeId push(FeatureMap value, BackwardFn backward = {});
  /// Attach the reverse closure after push(), so it can capture its own id.
  /// No-op on a non-recording tape.
  void set_backward(NodeId id, BackwardFn backward);

  const FeatureMap& value(NodeId id) const;
  /// Gradient buffer of a node; populated during backward().
  FeatureMap& grad(NodeId id);

  /// Reverse pass from a scalar (1x1x1) node, seeding its gradient with 1.
  void backward(NodeId root);
  /// Reverse pass seeded with an arbitrary upstream gradient at `node`.
  void backward_from(NodeId node, const FeatureMap& upstream);

  /// While a sink is attached, param_grad() resolves into it instead of the
  /// tensors' own grad buffers.
  void redirect_param_grads(GradSink* sink) { sink_ = sink; }
  double* param_grad(ParamTensor& p);

 private:
  struct Node {
    FeatureMap value;
    FeatureMap grad;
    BackwardFn back;
  };

  void check_id(NodeId id) const;

  std::vector<Node> nodes_;
  GradSink* sink_ = nullptr;
  bool record_;
};

}  // namespace span
