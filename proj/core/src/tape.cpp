#include "span/tape.hpp"

#include "span/error.hpp"

namespace span {

GradSink::GradSink(const std::vector<ParamTensor*>& params) {
  buffers_.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    buffers_[i].assign(params[i]->value.size(), 0.0);
  }
}

double* GradSink::buffer_for(const ParamTensor& p) {
  if (p.id < 0 || p.id >= static_cast<int>(buffers_.size())) {
    throw Error(ErrorKind::kConfig, "GradSink: parameter '" + p.name + "' is not registered");
  }
  return buffers_[static_cast<std::size_t>(p.id)].data();
}

void GradSink::accumulate_into(const std::vector<ParamTensor*>& params, double scale) const {
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& g = params[i]->grad;
    const auto& b = buffers_[i];
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += scale * b[j];
  }
}

void GradSink::clear() {
  for (auto& b : buffers_) std::fill(b.begin(), b.end(), 0.0);
}

Tape::NodeId Tape::push(FeatureMap value, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  if (record_) n.back = std::move(backward);
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

void Tape::set_backward(NodeId id, BackwardFn backward) {
  if (!record_) return;
  check_id(id);
  nodes_[static_cast<std::size_t>(id)].back = std::move(backward);
}

const FeatureMap& Tape::value(NodeId id) const {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)].value;
}

FeatureMap& Tape::grad(NodeId id) {
  check_id(id);
  return nodes_[static_cast<std::size_t>(id)].grad;
}

void Tape::backward(NodeId root) {
  check_id(root);
  const FeatureMap& v = nodes_[static_cast<std::size_t>(root)].value;
  if (v.height != 1 || v.width != 1 || v.depth != 1) {
    throw Error(ErrorKind::kShape, "backward: root must be scalar, got " + v.shape_string());
  }
  backward_from(root, FeatureMap::scalar(1.0));
}

void Tape::backward_from(NodeId node, const FeatureMap& upstream) {
  if (nodes_.empty()) {
    throw Error(ErrorKind::kConfig, "backward: no forward pass has been recorded");
  }
  check_id(node);
  if (!record_) {
    throw Error(ErrorKind::kConfig, "backward: tape was created without recording");
  }
  Node& seed = nodes_[static_cast<std::size_t>(node)];
  require_same_shape("backward seed", seed.value, upstream);

  for (NodeId i = 0; i <= node; ++i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    n.grad = FeatureMap(n.value.height, n.value.width, n.value.depth, 0.0);
  }
  seed.grad = upstream;

  for (NodeId i = node; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.back) n.back(*this);
  }
}

double* Tape::param_grad(ParamTensor& p) {
  return sink_ ? sink_->buffer_for(p) : p.grad.data();
}

void Tape::check_id(NodeId id) const {
  if (id < 0 || id >= static_cast<int>(nodes_.size())) {
    throw Error(ErrorKind::kConfig, "tape: invalid node id " + std::to_string(id));
  }
}

}  // namespace span
