#pragma once

#include <string>
#include <vector>

#include "span/rng.hpp"
#include "span/tape.hpp"
#include "span/tensor.hpp"

namespace span {

enum class PositionMode {
  kNone,        // plain key projection
  kProjection,  // per-offset matrix applied inside the key term
  kEmbedding,   // per-offset vector added to the neighbor before the key projection
};

const char* to_string(PositionMode mode);

/// Dilated square neighborhood: offsets (a*t, b*t) for a, b in [-N, N].
struct NeighborhoodSpec {
  int radius = 1;    // N
  int dilation = 1;  // t

  int side() const { return 2 * radius + 1; }
  int count() const { return side() * side(); }
};

/// Learnable weights of one local self-attention block. The positional
/// lists hold one entry per relative offset, indexed row-major from the
/// top-left of the neighborhood; exactly one list is populated depending
/// on the mode.
struct AttentionParams {
  int depth = 0;
  int radius = 1;
  PositionMode mode = PositionMode::kNone;

  ParamTensor query_proj;  // D x D
  ParamTensor key_proj;    // D x D
  ParamTensor value_proj;  // D x D
  std::vector<ParamTensor> pos_projs;   // (2N+1)^2 of D x D, kProjection only
  std::vector<ParamTensor> pos_embeds;  // (2N+1)^2 of D, kEmbedding only

  /// Projections start uniform in [-1/sqrt(D), 1/sqrt(D)]; positional
  /// matrices start at identity and embeddings at zero, so a fresh block
  /// behaves exactly like one without positional terms.
  static AttentionParams init(int depth, int radius, PositionMode mode, Rng& rng,
                              const std::string& name_prefix);

  std::vector<ParamTensor*> parameters();
};

/// In-bounds neighbors of one pixel. rel_index is the linear offset index
/// (0-based, row-major over the neighborhood); out-of-bounds offsets are
/// omitted rather than padded.
struct NeighborPatch {
  struct Entry {
    int rel_index;
    int row, col;  // absolute coordinates of the neighbor
    std::vector<double> features;
  };
  std::vector<Entry> entries;
};

NeighborPatch gather_neighborhood(const FeatureMap& x, int row, int col, NeighborhoodSpec spec);

/// Local self-attention block as a differentiable tape op. Per pixel the
/// output is sum_l w_l * Mv*Y_l with w = softmax over in-bounds neighbors
/// of <key_l, Mq*X>/sqrt(D); key_l depends on the position mode.
Tape::NodeId lsa(Tape& t, Tape::NodeId x, AttentionParams& params, NeighborhoodSpec spec);

/// Forward pass only, no recording.
FeatureMap lsa_forward(const FeatureMap& x, const AttentionParams& params, NeighborhoodSpec spec);

/// Attention distribution of one pixel: (rel_index, weight) for every
/// in-bounds neighbor, in offset order. Weights are the same ones the
/// forward pass uses.
std::vector<std::pair<int, double>> lsa_attention_weights(const FeatureMap& x,
                                                          const AttentionParams& params,
                                                          NeighborhoodSpec spec, int row, int col);

}  // namespace span
