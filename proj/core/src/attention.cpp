#include "span/attention.hpp"

#include <cmath>
#include <memory>

#include "span/error.hpp"

namespace span {
namespace {

// Small dense D x D helpers, row-major. Accumulating variants add into the
// destination; callers zero it when that is what they mean.

void matmul_accum(const double* a, const double* b, int d, double* c) {  // c += a*b
  for (int i = 0; i < d; ++i) {
    for (int k = 0; k < d; ++k) {
      const double av = a[i * d + k];
      if (av == 0.0) continue;
      const double* br = b + k * d;
      double* cr = c + i * d;
      for (int j = 0; j < d; ++j) cr[j] += av * br[j];
    }
  }
}

void matmul_bt_accum(const double* a, const double* b, int d, double* c) {  // c += a*b^T
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      const double* ar = a + i * d;
      const double* br = b + j * d;
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += ar[k] * br[k];
      c[i * d + j] += acc;
    }
  }
}

void matmul_at_accum(const double* a, const double* b, int d, double* c) {  // c += a^T*b
  for (int k = 0; k < d; ++k) {
    const double* ar = a + k * d;
    const double* br = b + k * d;
    for (int i = 0; i < d; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* cr = c + i * d;
      for (int j = 0; j < d; ++j) cr[j] += av * br[j];
    }
  }
}

// y(px) = M * x(px) for every pixel.
FeatureMap apply_plane(const double* m, int d, const FeatureMap& x) {
  FeatureMap y(x.height, x.width, d, 0.0);
  for (int r = 0; r < x.height; ++r) {
    for (int c = 0; c < x.width; ++c) {
      const double* xp = x.pixel(r, c);
      double* yp = y.pixel(r, c);
      for (int i = 0; i < d; ++i) {
        const double* mr = m + i * d;
        double acc = 0.0;
        for (int j = 0; j < d; ++j) acc += mr[j] * xp[j];
        yp[i] = acc;
      }
    }
  }
  return y;
}

// gx(px) += M^T * gplane(px).
void accum_transpose_apply(const double* m, int d, const FeatureMap& gplane, FeatureMap& gx) {
  for (int r = 0; r < gplane.height; ++r) {
    for (int c = 0; c < gplane.width; ++c) {
      const double* gp = gplane.pixel(r, c);
      double* xp = gx.pixel(r, c);
      for (int i = 0; i < d; ++i) {
        const double g = gp[i];
        if (g == 0.0) continue;
        const double* mr = m + i * d;
        for (int j = 0; j < d; ++j) xp[j] += g * mr[j];
      }
    }
  }
}

// dm[i][j] += sum_px dplane(px,i) * x(px,j).
void accum_outer(const FeatureMap& dplane, const FeatureMap& x, int d, double* dm) {
  for (int r = 0; r < x.height; ++r) {
    for (int c = 0; c < x.width; ++c) {
      const double* gp = dplane.pixel(r, c);
      const double* xp = x.pixel(r, c);
      for (int i = 0; i < d; ++i) {
        const double g = gp[i];
        if (g == 0.0) continue;
        double* dr = dm + i * d;
        for (int j = 0; j < d; ++j) dr[j] += g * xp[j];
      }
    }
  }
}

void check_compatible(const FeatureMap& x, const AttentionParams& p, NeighborhoodSpec spec) {
  if (x.depth != p.depth) {
    throw Error(ErrorKind::kShape, "lsa: input depth " + std::to_string(x.depth) +
                                       " does not match attention depth " +
                                       std::to_string(p.depth));
  }
  if (spec.radius != p.radius) {
    throw Error(ErrorKind::kShape, "lsa: neighborhood radius " + std::to_string(spec.radius) +
                                       " does not match params radius " +
                                       std::to_string(p.radius));
  }
  if (spec.dilation < 1) {
    throw Error(ErrorKind::kShape, "lsa: dilation must be positive");
  }
  const std::size_t L = static_cast<std::size_t>(spec.count());
  if (p.mode == PositionMode::kProjection && p.pos_projs.size() != L) {
    throw Error(ErrorKind::kShape, "lsa: expected " + std::to_string(L) +
                                       " positional projections, have " +
                                       std::to_string(p.pos_projs.size()));
  }
  if (p.mode == PositionMode::kEmbedding && p.pos_embeds.size() != L) {
    throw Error(ErrorKind::kShape, "lsa: expected " + std::to_string(L) +
                                       " positional embeddings, have " +
                                       std::to_string(p.pos_embeds.size()));
  }
}

// Everything the backward pass reuses from the forward pass.
struct LsaState {
  FeatureMap q_plane;                 // Mq x
  FeatureMap v_plane;                 // Mv x
  std::vector<FeatureMap> k_planes;   // per offset (PP) or a single shared plane
  std::vector<std::vector<double>> key_bias;  // PE: Mk e_l per offset
  std::vector<std::vector<double>> folded;    // PP: Mk*M_l per offset (kept for backward)
  std::vector<double> weights;        // H*W*L, zero where out of bounds
};

LsaState lsa_run(const FeatureMap& x, const AttentionParams& p, NeighborhoodSpec spec,
                 FeatureMap& out) {
  const int d = p.depth;
  const int n = spec.radius;
  const int dil = spec.dilation;
  const int side = spec.side();
  const int L = spec.count();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  LsaState st;
  st.q_plane = apply_plane(p.query_proj.value.data(), d, x);
  st.v_plane = apply_plane(p.value_proj.value.data(), d, x);

  if (p.mode == PositionMode::kProjection) {
    st.folded.resize(static_cast<std::size_t>(L));
    st.k_planes.reserve(static_cast<std::size_t>(L));
    for (int l = 0; l < L; ++l) {
      auto& a = st.folded[static_cast<std::size_t>(l)];
      a.assign(static_cast<std::size_t>(d) * d, 0.0);
      matmul_accum(p.key_proj.value.data(), p.pos_projs[static_cast<std::size_t>(l)].value.data(),
                   d, a.data());
      st.k_planes.push_back(apply_plane(a.data(), d, x));
    }
  } else {
    st.k_planes.push_back(apply_plane(p.key_proj.value.data(), d, x));
    if (p.mode == PositionMode::kEmbedding) {
      st.key_bias.resize(static_cast<std::size_t>(L));
      for (int l = 0; l < L; ++l) {
        auto& b = st.key_bias[static_cast<std::size_t>(l)];
        b.assign(static_cast<std::size_t>(d), 0.0);
        const double* e = p.pos_embeds[static_cast<std::size_t>(l)].value.data();
        for (int i = 0; i < d; ++i) {
          const double* kr = p.key_proj.value.data() + i * d;
          double acc = 0.0;
          for (int j = 0; j < d; ++j) acc += kr[j] * e[j];
          b[static_cast<std::size_t>(i)] = acc;
        }
      }
    }
  }

  out = FeatureMap(x.height, x.width, d, 0.0);
  st.weights.assign(static_cast<std::size_t>(x.height) * x.width * L, 0.0);

  std::vector<double> score(static_cast<std::size_t>(L));
  std::vector<int> off_l(static_cast<std::size_t>(L));
  std::vector<int> off_r(static_cast<std::size_t>(L));
  std::vector<int> off_c(static_cast<std::size_t>(L));

  for (int r = 0; r < x.height; ++r) {
    for (int c = 0; c < x.width; ++c) {
      const double* q = st.q_plane.pixel(r, c);
      int m = 0;
      for (int a = -n; a <= n; ++a) {
        const int nr = r + a * dil;
        if (nr < 0 || nr >= x.height) continue;
        for (int b = -n; b <= n; ++b) {
          const int nc = c + b * dil;
          if (nc < 0 || nc >= x.width) continue;
          const int l = (a + n) * side + (b + n);
          const FeatureMap& kp =
              st.k_planes.size() == 1 ? st.k_planes[0] : st.k_planes[static_cast<std::size_t>(l)];
          const double* kvec = kp.pixel(nr, nc);
          double s = 0.0;
          if (p.mode == PositionMode::kEmbedding) {
            const double* bias = st.key_bias[static_cast<std::size_t>(l)].data();
            for (int i = 0; i < d; ++i) s += (kvec[i] + bias[i]) * q[i];
          } else {
            for (int i = 0; i < d; ++i) s += kvec[i] * q[i];
          }
          score[static_cast<std::size_t>(m)] = s * inv_sqrt_d;
          off_l[static_cast<std::size_t>(m)] = l;
          off_r[static_cast<std::size_t>(m)] = nr;
          off_c[static_cast<std::size_t>(m)] = nc;
          ++m;
        }
      }

      double mx = score[0];
      for (int i = 1; i < m; ++i) mx = std::max(mx, score[static_cast<std::size_t>(i)]);
      double sum = 0.0;
      for (int i = 0; i < m; ++i) {
        score[static_cast<std::size_t>(i)] = std::exp(score[static_cast<std::size_t>(i)] - mx);
        sum += score[static_cast<std::size_t>(i)];
      }

      double* op = out.pixel(r, c);
      double* wrow = st.weights.data() + (static_cast<std::size_t>(r) * x.width + c) * L;
      for (int i = 0; i < m; ++i) {
        const double w = score[static_cast<std::size_t>(i)] / sum;
        wrow[off_l[static_cast<std::size_t>(i)]] = w;
        const double* vp = st.v_plane.pixel(off_r[static_cast<std::size_t>(i)],
                                            off_c[static_cast<std::size_t>(i)]);
        for (int ch = 0; ch < d; ++ch) op[ch] += w * vp[ch];
      }
    }
  }
  return st;
}

void lsa_backward(Tape& t, Tape::NodeId out_id, Tape::NodeId x_id, AttentionParams& p,
                  NeighborhoodSpec spec, const LsaState& st) {
  const FeatureMap& x = t.value(x_id);
  const FeatureMap& gout = t.grad(out_id);
  FeatureMap& gx = t.grad(x_id);

  const int d = p.depth;
  const int n = spec.radius;
  const int dil = spec.dilation;
  const int side = spec.side();
  const int L = spec.count();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  const bool per_offset_keys = st.k_planes.size() > 1;

  FeatureMap dq(x.height, x.width, d, 0.0);
  FeatureMap dv(x.height, x.width, d, 0.0);
  std::vector<FeatureMap> dk;
  dk.reserve(st.k_planes.size());
  for (std::size_t i = 0; i < st.k_planes.size(); ++i) dk.emplace_back(x.height, x.width, d, 0.0);
  std::vector<std::vector<double>> dbias;
  if (p.mode == PositionMode::kEmbedding) {
    dbias.assign(static_cast<std::size_t>(L), std::vector<double>(static_cast<std::size_t>(d), 0.0));
  }

  std::vector<double> u(static_cast<std::size_t>(L));
  std::vector<int> off_l(static_cast<std::size_t>(L));
  std::vector<int> off_r(static_cast<std::size_t>(L));
  std::vector<int> off_c(static_cast<std::size_t>(L));

  for (int r = 0; r < x.height; ++r) {
    for (int c = 0; c < x.width; ++c) {
      const double* g = gout.pixel(r, c);
      const double* wrow = st.weights.data() + (static_cast<std::size_t>(r) * x.width + c) * L;
      const double* q = st.q_plane.pixel(r, c);
      double* dqp = dq.pixel(r, c);

      int m = 0;
      double ubar = 0.0;
      for (int a = -n; a <= n; ++a) {
        const int nr = r + a * dil;
        if (nr < 0 || nr >= x.height) continue;
        for (int b = -n; b <= n; ++b) {
          const int nc = c + b * dil;
          if (nc < 0 || nc >= x.width) continue;
          const int l = (a + n) * side + (b + n);
          const double w = wrow[l];
          const double* vp = st.v_plane.pixel(nr, nc);
          double* dvp = dv.pixel(nr, nc);
          double dot = 0.0;
          for (int ch = 0; ch < d; ++ch) {
            dot += g[ch] * vp[ch];
            dvp[ch] += w * g[ch];
          }
          u[static_cast<std::size_t>(m)] = dot;
          ubar += w * dot;
          off_l[static_cast<std::size_t>(m)] = l;
          off_r[static_cast<std::size_t>(m)] = nr;
          off_c[static_cast<std::size_t>(m)] = nc;
          ++m;
        }
      }

      for (int i = 0; i < m; ++i) {
        const int l = off_l[static_cast<std::size_t>(i)];
        const int nr = off_r[static_cast<std::size_t>(i)];
        const int nc = off_c[static_cast<std::size_t>(i)];
        const double ds = wrow[l] * (u[static_cast<std::size_t>(i)] - ubar) * inv_sqrt_d;
        if (ds == 0.0) continue;
        const FeatureMap& kp =
            per_offset_keys ? st.k_planes[static_cast<std::size_t>(l)] : st.k_planes[0];
        const double* kvec = kp.pixel(nr, nc);
        FeatureMap& dkp = per_offset_keys ? dk[static_cast<std::size_t>(l)] : dk[0];
        double* dkv = dkp.pixel(nr, nc);
        if (p.mode == PositionMode::kEmbedding) {
          const double* bias = st.key_bias[static_cast<std::size_t>(l)].data();
          double* db = dbias[static_cast<std::size_t>(l)].data();
          for (int ch = 0; ch < d; ++ch) {
            dqp[ch] += ds * (kvec[ch] + bias[ch]);
            dkv[ch] += ds * q[ch];
            db[ch] += ds * q[ch];
          }
        } else {
          for (int ch = 0; ch < d; ++ch) {
            dqp[ch] += ds * kvec[ch];
            dkv[ch] += ds * q[ch];
          }
        }
      }
    }
  }

  // Query and value planes.
  accum_outer(dq, x, d, t.param_grad(p.query_proj));
  accum_transpose_apply(p.query_proj.value.data(), d, dq, gx);
  accum_outer(dv, x, d, t.param_grad(p.value_proj));
  accum_transpose_apply(p.value_proj.value.data(), d, dv, gx);

  // Key planes, per position mode.
  if (p.mode == PositionMode::kProjection) {
    std::vector<double> da(static_cast<std::size_t>(d) * d);
    double* gk = t.param_grad(p.key_proj);
    for (int l = 0; l < L; ++l) {
      const FeatureMap& dkl = dk[static_cast<std::size_t>(l)];
      std::fill(da.begin(), da.end(), 0.0);
      accum_outer(dkl, x, d, da.data());
      accum_transpose_apply(st.folded[static_cast<std::size_t>(l)].data(), d, dkl, gx);
      matmul_bt_accum(da.data(), p.pos_projs[static_cast<std::size_t>(l)].value.data(), d, gk);
      matmul_at_accum(p.key_proj.value.data(), da.data(), d,
                      t.param_grad(p.pos_projs[static_cast<std::size_t>(l)]));
    }
  } else {
    accum_outer(dk[0], x, d, t.param_grad(p.key_proj));
    accum_transpose_apply(p.key_proj.value.data(), d, dk[0], gx);
    if (p.mode == PositionMode::kEmbedding) {
      double* gk = t.param_grad(p.key_proj);
      for (int l = 0; l < L; ++l) {
        const double* db = dbias[static_cast<std::size_t>(l)].data();
        const double* e = p.pos_embeds[static_cast<std::size_t>(l)].value.data();
        double* ge = t.param_grad(p.pos_embeds[static_cast<std::size_t>(l)]);
        for (int i = 0; i < d; ++i) {
          const double gi = db[i];
          if (gi == 0.0) continue;
          const double* kr = p.key_proj.value.data() + i * d;
          for (int j = 0; j < d; ++j) {
            gk[i * d + j] += gi * e[j];
            ge[j] += gi * kr[j];
          }
        }
      }
    }
  }
}

}  // namespace

const char* to_string(PositionMode mode) {
  switch (mode) {
    case PositionMode::kNone: return "none";
    case PositionMode::kProjection: return "pp";
    case PositionMode::kEmbedding: return "pe";
  }
  return "?";
}

AttentionParams AttentionParams::init(int depth, int radius, PositionMode mode, Rng& rng,
                                      const std::string& name_prefix) {
  if (depth < 1 || radius < 0) {
    throw Error(ErrorKind::kShape, "AttentionParams: bad depth/radius");
  }
  AttentionParams p;
  p.depth = depth;
  p.radius = radius;
  p.mode = mode;
  const double bound = 1.0 / std::sqrt(static_cast<double>(depth));
  auto init_matrix = [&](const std::string& name) {
    ParamTensor m = ParamTensor::zeros(name, {depth, depth});
    for (double& v : m.value) v = rng.uniform(-bound, bound);
    return m;
  };
  p.query_proj = init_matrix(name_prefix + ".query_proj");
  p.key_proj = init_matrix(name_prefix + ".key_proj");
  p.value_proj = init_matrix(name_prefix + ".value_proj");

  const int count = (2 * radius + 1) * (2 * radius + 1);
  if (mode == PositionMode::kProjection) {
    p.pos_projs.reserve(static_cast<std::size_t>(count));
    for (int l = 0; l < count; ++l) {
      ParamTensor m =
          ParamTensor::zeros(name_prefix + ".pos_proj." + std::to_string(l), {depth, depth});
      for (int i = 0; i < depth; ++i) m.value[static_cast<std::size_t>(i) * depth + i] = 1.0;
      p.pos_projs.push_back(std::move(m));
    }
  } else if (mode == PositionMode::kEmbedding) {
    p.pos_embeds.reserve(static_cast<std::size_t>(count));
    for (int l = 0; l < count; ++l) {
      p.pos_embeds.push_back(
          ParamTensor::zeros(name_prefix + ".pos_embed." + std::to_string(l), {depth}));
    }
  }
  return p;
}

std::vector<ParamTensor*> AttentionParams::parameters() {
  std::vector<ParamTensor*> out{&query_proj, &key_proj, &value_proj};
  for (auto& m : pos_projs) out.push_back(&m);
  for (auto& e : pos_embeds) out.push_back(&e);
  return out;
}

NeighborPatch gather_neighborhood(const FeatureMap& x, int row, int col, NeighborhoodSpec spec) {
  if (row < 0 || row >= x.height || col < 0 || col >= x.width) {
    throw Error(ErrorKind::kShape, "gather_neighborhood: pixel (" + std::to_string(row) + "," +
                                       std::to_string(col) + ") outside " + x.shape_string());
  }
  if (spec.radius < 0 || spec.dilation < 1) {
    throw Error(ErrorKind::kShape, "gather_neighborhood: bad neighborhood spec");
  }
  NeighborPatch patch;
  const int n = spec.radius;
  const int side = spec.side();
  for (int a = -n; a <= n; ++a) {
    const int nr = row + a * spec.dilation;
    if (nr < 0 || nr >= x.height) continue;
    for (int b = -n; b <= n; ++b) {
      const int nc = col + b * spec.dilation;
      if (nc < 0 || nc >= x.width) continue;
      NeighborPatch::Entry e;
      e.rel_index = (a + n) * side + (b + n);
      e.row = nr;
      e.col = nc;
      e.features.assign(x.pixel(nr, nc), x.pixel(nr, nc) + x.depth);
      patch.entries.push_back(std::move(e));
    }
  }
  return patch;
}

Tape::NodeId lsa(Tape& t, Tape::NodeId x, AttentionParams& params, NeighborhoodSpec spec) {
  const FeatureMap& in = t.value(x);
  check_compatible(in, params, spec);
  FeatureMap out;
  auto st = std::make_shared<LsaState>(lsa_run(in, params, spec, out));
  Tape::NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, &params, spec, st](Tape& t) {
    lsa_backward(t, id, x, params, spec, *st);
  });
  return id;
}

FeatureMap lsa_forward(const FeatureMap& x, const AttentionParams& params, NeighborhoodSpec spec) {
  check_compatible(x, params, spec);
  FeatureMap out;
  lsa_run(x, params, spec, out);
  return out;
}

std::vector<std::pair<int, double>> lsa_attention_weights(const FeatureMap& x,
                                                          const AttentionParams& params,
                                                          NeighborhoodSpec spec, int row, int col) {
  check_compatible(x, params, spec);
  if (row < 0 || row >= x.height || col < 0 || col >= x.width) {
    throw Error(ErrorKind::kShape, "lsa_attention_weights: pixel outside input");
  }
  FeatureMap out;
  LsaState st = lsa_run(x, params, spec, out);
  const int L = spec.count();
  const double* wrow = st.weights.data() + (static_cast<std::size_t>(row) * x.width + col) * L;
  const int n = spec.radius;
  const int side = spec.side();
  std::vector<std::pair<int, double>> weights;
  for (int a = -n; a <= n; ++a) {
    const int nr = row + a * spec.dilation;
    if (nr < 0 || nr >= x.height) continue;
    for (int b = -n; b <= n; ++b) {
      const int nc = col + b * spec.dilation;
      if (nc < 0 || nc >= x.width) continue;
      const int l = (a + n) * side + (b + n);
      weights.emplace_back(l, wrow[l]);
    }
  }
  return weights;
}

}  // namespace span
