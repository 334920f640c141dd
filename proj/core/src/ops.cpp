#include "span/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "span/error.hpp"

namespace span::ops {
namespace {

using NodeId = Tape::NodeId;

// Overlap weights of output cells against the input grid for box (area)
// resampling: per output index, a list of (input index, weight) summing to 1.
struct ResampleRow {
  std::vector<std::pair<int, double>> taps;
};

std::vector<ResampleRow> area_taps(int in, int out) {
  std::vector<ResampleRow> rows(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    const double lo = o * scale;
    const double hi = (o + 1) * scale;
    ResampleRow& row = rows[static_cast<std::size_t>(o)];
    double total = 0.0;
    for (int i = static_cast<int>(std::floor(lo)); i < in && i < hi; ++i) {
      const double cover = std::min<double>(i + 1, hi) - std::max<double>(i, lo);
      if (cover <= 0.0) continue;
      row.taps.emplace_back(i, cover);
      total += cover;
    }
    for (auto& t : row.taps) t.second /= total;
  }
  return rows;
}

std::vector<ResampleRow> bilinear_taps(int in, int out) {
  std::vector<ResampleRow> rows(static_cast<std::size_t>(out));
  const double scale = static_cast<double>(in) / out;
  for (int o = 0; o < out; ++o) {
    double src = (o + 0.5) * scale - 0.5;  // half-pixel centers
    src = std::min(std::max(src, 0.0), static_cast<double>(in - 1));
    const int i0 = static_cast<int>(std::floor(src));
    const int i1 = std::min(i0 + 1, in - 1);
    const double f = src - i0;
    ResampleRow& row = rows[static_cast<std::size_t>(o)];
    if (i0 == i1 || f == 0.0) {
      row.taps.emplace_back(i0, 1.0);
    } else {
      row.taps.emplace_back(i0, 1.0 - f);
      row.taps.emplace_back(i1, f);
    }
  }
  return rows;
}

FeatureMap resample(const FeatureMap& x, const std::vector<ResampleRow>& rt,
                    const std::vector<ResampleRow>& ct) {
  FeatureMap out(static_cast<int>(rt.size()), static_cast<int>(ct.size()), x.depth, 0.0);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      double* op = out.pixel(r, c);
      for (const auto& [ir, wr] : rt[static_cast<std::size_t>(r)].taps) {
        for (const auto& [ic, wc] : ct[static_cast<std::size_t>(c)].taps) {
          const double w = wr * wc;
          const double* ip = x.pixel(ir, ic);
          for (int ch = 0; ch < x.depth; ++ch) op[ch] += w * ip[ch];
        }
      }
    }
  }
  return out;
}

NodeId resample_node(Tape& t, NodeId x, int oh, int ow, bool area, const char* name) {
  const FeatureMap& in = t.value(x);
  if (oh < 1 || ow < 1) {
    throw Error(ErrorKind::kShape, std::string(name) + ": target size " + std::to_string(oh) +
                                       "x" + std::to_string(ow) + " is not positive");
  }
  auto rt = area ? area_taps(in.height, oh) : bilinear_taps(in.height, oh);
  auto ct = area ? area_taps(in.width, ow) : bilinear_taps(in.width, ow);
  NodeId out = t.push(resample(in, rt, ct));
  t.set_backward(out, [out, x, rt = std::move(rt), ct = std::move(ct)](Tape& t) {
    const FeatureMap& go = t.grad(out);
    FeatureMap& gx = t.grad(x);
    for (int r = 0; r < go.height; ++r) {
      for (int c = 0; c < go.width; ++c) {
        const double* gp = go.pixel(r, c);
        for (const auto& [ir, wr] : rt[static_cast<std::size_t>(r)].taps) {
          for (const auto& [ic, wc] : ct[static_cast<std::size_t>(c)].taps) {
            const double w = wr * wc;
            double* xp = gx.pixel(ir, ic);
            for (int ch = 0; ch < go.depth; ++ch) xp[ch] += w * gp[ch];
          }
        }
      }
    }
  });
  return out;
}

struct ConvGeometry {
  int oh, ow;   // output size
  int ph, pw;   // top/left padding
  bool clamp;   // replicate borders instead of zero padding
};

ConvGeometry conv_geometry(const FeatureMap& x, int kh, int kw, Padding pad) {
  ConvGeometry g{};
  g.clamp = pad == Padding::kSameClamp;
  if (pad == Padding::kSame || pad == Padding::kSameClamp) {
    g.oh = x.height;
    g.ow = x.width;
    g.ph = (kh - 1) / 2;
    g.pw = (kw - 1) / 2;
  } else {
    g.oh = x.height - kh + 1;
    g.ow = x.width - kw + 1;
    g.ph = 0;
    g.pw = 0;
    if (g.oh < 1 || g.ow < 1) {
      throw Error(ErrorKind::kShape, "conv2d: valid padding leaves no output for input " +
                                         x.shape_string() + " and kernel " + std::to_string(kh) +
                                         "x" + std::to_string(kw));
    }
  }
  return g;
}

// -1 means the tap falls into zero padding and contributes nothing.
inline int tap_index(int idx, int limit, bool clamp) {
  if (idx >= 0 && idx < limit) return idx;
  if (!clamp) return -1;
  return idx < 0 ? 0 : limit - 1;
}

}  // namespace

NodeId from_map(Tape& t, FeatureMap x) {
  return t.push(std::move(x));
}

NodeId from_param(Tape& t, ParamTensor& p, int h, int w, int d) {
  const std::int64_t need = static_cast<std::int64_t>(h) * w * d;
  if (need != p.count()) {
    throw Error(ErrorKind::kShape, "from_param: cannot view " + p.name + " (" + p.shape_string() +
                                       ") as " + std::to_string(h) + "x" + std::to_string(w) +
                                       "x" + std::to_string(d));
  }
  FeatureMap m(h, w, d);
  m.values = p.value;
  NodeId out = t.push(std::move(m));
  t.set_backward(out, [out, &p](Tape& t) {
    const FeatureMap& go = t.grad(out);
    double* g = t.param_grad(p);
    for (std::size_t i = 0; i < go.values.size(); ++i) g[i] += go.values[i];
  });
  return out;
}

NodeId add(Tape& t, NodeId a, NodeId b) {
  const FeatureMap& va = t.value(a);
  const FeatureMap& vb = t.value(b);
  require_same_shape("add", va, vb);
  FeatureMap out = va;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += vb.values[i];
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, a, b](Tape& t) {
    const FeatureMap& go = t.grad(id);
    FeatureMap& ga = t.grad(a);
    FeatureMap& gb = t.grad(b);
    for (std::size_t i = 0; i < go.values.size(); ++i) {
      ga.values[i] += go.values[i];
      gb.values[i] += go.values[i];
    }
  });
  return id;
}

NodeId mul(Tape& t, NodeId a, NodeId b) {
  const FeatureMap& va = t.value(a);
  const FeatureMap& vb = t.value(b);
  require_same_shape("mul", va, vb);
  FeatureMap out = va;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= vb.values[i];
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, a, b](Tape& t) {
    const FeatureMap& go = t.grad(id);
    const FeatureMap& va = t.value(a);
    const FeatureMap& vb = t.value(b);
    FeatureMap& ga = t.grad(a);
    FeatureMap& gb = t.grad(b);
    for (std::size_t i = 0; i < go.values.size(); ++i) {
      ga.values[i] += go.values[i] * vb.values[i];
      gb.values[i] += go.values[i] * va.values[i];
    }
  });
  return id;
}

NodeId scale(Tape& t, NodeId a, double k) {
  FeatureMap out = t.value(a);
  for (double& v : out.values) v *= k;
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, a, k](Tape& t) {
    const FeatureMap& go = t.grad(id);
    FeatureMap& ga = t.grad(a);
    for (std::size_t i = 0; i < go.values.size(); ++i) ga.values[i] += k * go.values[i];
  });
  return id;
}

NodeId matvec(Tape& t, ParamTensor& w, NodeId x) {
  const FeatureMap& in = t.value(x);
  if (w.shape.size() != 2 || w.shape[1] != in.depth) {
    throw Error(ErrorKind::kShape, "matvec: weight " + w.name + " (" + w.shape_string() +
                                       ") does not match input depth of " + in.shape_string());
  }
  const int dout = w.shape[0];
  const int din = w.shape[1];
  FeatureMap out(in.height, in.width, dout, 0.0);
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      const double* ip = in.pixel(r, c);
      double* op = out.pixel(r, c);
      for (int o = 0; o < dout; ++o) {
        const double* wr = w.value.data() + static_cast<std::size_t>(o) * din;
        double acc = 0.0;
        for (int i = 0; i < din; ++i) acc += wr[i] * ip[i];
        op[o] = acc;
      }
    }
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, &w, dout, din](Tape& t) {
    const FeatureMap& go = t.grad(id);
    const FeatureMap& in = t.value(x);
    FeatureMap& gx = t.grad(x);
    double* gw = t.param_grad(w);
    for (int r = 0; r < in.height; ++r) {
      for (int c = 0; c < in.width; ++c) {
        const double* ip = in.pixel(r, c);
        const double* gp = go.pixel(r, c);
        double* gxp = gx.pixel(r, c);
        for (int o = 0; o < dout; ++o) {
          const double g = gp[o];
          if (g == 0.0) continue;
          const double* wr = w.value.data() + static_cast<std::size_t>(o) * din;
          double* gwr = gw + static_cast<std::size_t>(o) * din;
          for (int i = 0; i < din; ++i) {
            gwr[i] += g * ip[i];
            gxp[i] += g * wr[i];
          }
        }
      }
    }
  });
  return id;
}

NodeId conv2d(Tape& t, NodeId x, ParamTensor& kernel, ParamTensor* bias, Padding pad) {
  const FeatureMap& in = t.value(x);
  if (kernel.shape.size() != 4 || kernel.shape[2] != in.depth) {
    throw Error(ErrorKind::kShape, "conv2d: kernel " + kernel.name + " (" + kernel.shape_string() +
                                       ") does not match input " + in.shape_string());
  }
  const int kh = kernel.shape[0], kw = kernel.shape[1];
  const int ci = kernel.shape[2], co = kernel.shape[3];
  if (bias && (bias->shape.size() != 1 || bias->shape[0] != co)) {
    throw Error(ErrorKind::kShape, "conv2d: bias " + bias->name + " (" + bias->shape_string() +
                                       ") does not match output depth " + std::to_string(co));
  }
  const ConvGeometry g = conv_geometry(in, kh, kw, pad);

  FeatureMap out(g.oh, g.ow, co, 0.0);
  for (int r = 0; r < g.oh; ++r) {
    for (int c = 0; c < g.ow; ++c) {
      double* op = out.pixel(r, c);
      if (bias) {
        for (int o = 0; o < co; ++o) op[o] = bias->value[static_cast<std::size_t>(o)];
      }
      for (int a = 0; a < kh; ++a) {
        const int ir = tap_index(r + a - g.ph, in.height, g.clamp);
        if (ir < 0) continue;
        for (int b = 0; b < kw; ++b) {
          const int ic = tap_index(c + b - g.pw, in.width, g.clamp);
          if (ic < 0) continue;
          const double* ip = in.pixel(ir, ic);
          const double* kp = kernel.value.data() + (static_cast<std::size_t>(a) * kw + b) * ci * co;
          for (int i = 0; i < ci; ++i) {
            const double xv = ip[i];
            if (xv == 0.0) continue;
            const double* kr = kp + static_cast<std::size_t>(i) * co;
            for (int o = 0; o < co; ++o) op[o] += xv * kr[o];
          }
        }
      }
    }
  }

  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, &kernel, bias, g, kh, kw, ci, co](Tape& t) {
    const FeatureMap& go = t.grad(id);
    const FeatureMap& in = t.value(x);
    FeatureMap& gx = t.grad(x);
    double* gk = t.param_grad(kernel);
    double* gb = bias ? t.param_grad(*bias) : nullptr;
    for (int r = 0; r < go.height; ++r) {
      for (int c = 0; c < go.width; ++c) {
        const double* gp = go.pixel(r, c);
        if (gb) {
          for (int o = 0; o < co; ++o) gb[o] += gp[o];
        }
        for (int a = 0; a < kh; ++a) {
          const int ir = tap_index(r + a - g.ph, in.height, g.clamp);
          if (ir < 0) continue;
          for (int b = 0; b < kw; ++b) {
            const int ic = tap_index(c + b - g.pw, in.width, g.clamp);
            if (ic < 0) continue;
            const double* ip = in.pixel(ir, ic);
            double* gxp = gx.pixel(ir, ic);
            const std::size_t base = (static_cast<std::size_t>(a) * kw + b) * ci * co;
            for (int i = 0; i < ci; ++i) {
              const double* kr = kernel.value.data() + base + static_cast<std::size_t>(i) * co;
              double* gkr = gk + base + static_cast<std::size_t>(i) * co;
              const double xv = ip[i];
              double acc = 0.0;
              for (int o = 0; o < co; ++o) {
                gkr[o] += xv * gp[o];
                acc += kr[o] * gp[o];
              }
              gxp[i] += acc;
            }
          }
        }
      }
    }
  });
  return id;
}

NodeId fixed_depthwise_conv(Tape& t, NodeId x, const std::vector<FixedKernel>& kernels) {
  const FeatureMap& in = t.value(x);
  if (kernels.empty()) {
    throw Error(ErrorKind::kShape, "fixed_depthwise_conv: no kernels given");
  }
  for (const auto& k : kernels) {
    if (k.side < 1 || k.side % 2 == 0 ||
        k.w.size() != static_cast<std::size_t>(k.side) * k.side) {
      throw Error(ErrorKind::kShape, "fixed_depthwise_conv: kernel must be odd square");
    }
  }
  const int nk = static_cast<int>(kernels.size());
  FeatureMap out(in.height, in.width, nk * in.depth, 0.0);
  for (int k = 0; k < nk; ++k) {
    const FixedKernel& ker = kernels[static_cast<std::size_t>(k)];
    const int half = ker.side / 2;
    for (int r = 0; r < in.height; ++r) {
      for (int c = 0; c < in.width; ++c) {
        double* op = out.pixel(r, c) + static_cast<std::size_t>(k) * in.depth;
        for (int a = -half; a <= half; ++a) {
          const int ir = tap_index(r + a, in.height, /*clamp=*/true);
          for (int b = -half; b <= half; ++b) {
            const int ic = tap_index(c + b, in.width, /*clamp=*/true);
            const double kv = ker.w[static_cast<std::size_t>((a + half) * ker.side + (b + half))];
            if (kv == 0.0) continue;
            const double* ip = in.pixel(ir, ic);
            for (int ch = 0; ch < in.depth; ++ch) op[ch] += kv * ip[ch];
          }
        }
      }
    }
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, kernels](Tape& t) {
    const FeatureMap& go = t.grad(id);
    FeatureMap& gx = t.grad(x);
    const int nk = static_cast<int>(kernels.size());
    for (int k = 0; k < nk; ++k) {
      const FixedKernel& ker = kernels[static_cast<std::size_t>(k)];
      const int half = ker.side / 2;
      for (int r = 0; r < go.height; ++r) {
        for (int c = 0; c < go.width; ++c) {
          const double* gp = go.pixel(r, c) + static_cast<std::size_t>(k) * gx.depth;
          for (int a = -half; a <= half; ++a) {
            const int ir = tap_index(r + a, gx.height, /*clamp=*/true);
            for (int b = -half; b <= half; ++b) {
              const int ic = tap_index(c + b, gx.width, /*clamp=*/true);
              const double kv =
                  ker.w[static_cast<std::size_t>((a + half) * ker.side + (b + half))];
              if (kv == 0.0) continue;
              double* gxp = gx.pixel(ir, ic);
              for (int ch = 0; ch < gx.depth; ++ch) gxp[ch] += kv * gp[ch];
            }
          }
        }
      }
    }
  });
  return id;
}

NodeId channel_mean(Tape& t, NodeId x) {
  const FeatureMap& in = t.value(x);
  FeatureMap out(in.height, in.width, 1, 0.0);
  const double inv = 1.0 / in.depth;
  for (int r = 0; r < in.height; ++r) {
    for (int c = 0; c < in.width; ++c) {
      const double* ip = in.pixel(r, c);
      double acc = 0.0;
      for (int ch = 0; ch < in.depth; ++ch) acc += ip[ch];
      out.at(r, c, 0) = acc * inv;
    }
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, inv](Tape& t) {
    const FeatureMap& go = t.grad(id);
    FeatureMap& gx = t.grad(x);
    for (int r = 0; r < gx.height; ++r) {
      for (int c = 0; c < gx.width; ++c) {
        const double g = go.at(r, c, 0) * inv;
        double* gxp = gx.pixel(r, c);
        for (int ch = 0; ch < gx.depth; ++ch) gxp[ch] += g;
      }
    }
  });
  return id;
}

NodeId concat_channels(Tape& t, const std::vector<NodeId>& xs) {
  if (xs.empty()) {
    throw Error(ErrorKind::kShape, "concat_channels: no inputs");
  }
  const FeatureMap& first = t.value(xs[0]);
  int total = 0;
  for (NodeId id : xs) {
    const FeatureMap& m = t.value(id);
    if (m.height != first.height || m.width != first.width) {
      throw Error(ErrorKind::kShape, "concat_channels: spatial mismatch (" + first.shape_string() +
                                         " vs " + m.shape_string() + ")");
    }
    total += m.depth;
  }
  FeatureMap out(first.height, first.width, total);
  for (int r = 0; r < out.height; ++r) {
    for (int c = 0; c < out.width; ++c) {
      double* op = out.pixel(r, c);
      int off = 0;
      for (NodeId id : xs) {
        const FeatureMap& m = t.value(id);
        const double* ip = m.pixel(r, c);
        for (int ch = 0; ch < m.depth; ++ch) op[off + ch] = ip[ch];
        off += m.depth;
      }
    }
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, xs](Tape& t) {
    const FeatureMap& go = t.grad(id);
    for (int r = 0; r < go.height; ++r) {
      for (int c = 0; c < go.width; ++c) {
        const double* gp = go.pixel(r, c);
        int off = 0;
        for (NodeId src : xs) {
          FeatureMap& gx = t.grad(src);
          double* gxp = gx.pixel(r, c);
          for (int ch = 0; ch < gx.depth; ++ch) gxp[ch] += gp[off + ch];
          off += gx.depth;
        }
      }
    }
  });
  return id;
}

NodeId leaky_relu(Tape& t, NodeId x, double negative_slope) {
  FeatureMap out = t.value(x);
  for (double& v : out.values) {
    if (v < 0.0) v *= negative_slope;
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, negative_slope](Tape& t) {
    const FeatureMap& go = t.grad(id);
    const FeatureMap& in = t.value(x);
    FeatureMap& gx = t.grad(x);
    for (std::size_t i = 0; i < go.values.size(); ++i) {
      gx.values[i] += go.values[i] * (in.values[i] > 0.0 ? 1.0 : negative_slope);
    }
  });
  return id;
}

NodeId sigmoid(Tape& t, NodeId x) {
  FeatureMap out = t.value(x);
  for (double& v : out.values) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x](Tape& t) {
    const FeatureMap& go = t.grad(id);
    const FeatureMap& y = t.value(id);
    FeatureMap& gx = t.grad(x);
    for (std::size_t i = 0; i < go.values.size(); ++i) {
      const double s = y.values[i];
      gx.values[i] += go.values[i] * s * (1.0 - s);
    }
  });
  return id;
}

NodeId softmax(Tape& t, NodeId x, int axis) {
  const FeatureMap& in = t.value(x);
  if (axis < 0 || axis > 2) {
    throw Error(ErrorKind::kShape, "softmax: axis must be 0, 1 or 2, got " + std::to_string(axis));
  }
  // Strides for walking one line along `axis` while the other two indices
  // are fixed.
  const int dims[3] = {in.height, in.width, in.depth};
  const std::size_t strides[3] = {static_cast<std::size_t>(in.width) * in.depth,
                                  static_cast<std::size_t>(in.depth), 1};
  const int n = dims[axis];
  const std::size_t step = strides[axis];
  const int oa = (axis + 1) % 3, ob = (axis + 2) % 3;

  FeatureMap out = in;
  for (int i = 0; i < dims[oa]; ++i) {
    for (int j = 0; j < dims[ob]; ++j) {
      const std::size_t base = static_cast<std::size_t>(i) * strides[oa] +
                               static_cast<std::size_t>(j) * strides[ob];
      double mx = out.values[base];
      for (int k = 1; k < n; ++k) mx = std::max(mx, out.values[base + k * step]);
      double sum = 0.0;
      for (int k = 0; k < n; ++k) {
        double& v = out.values[base + k * step];
        v = std::exp(v - mx);
        sum += v;
      }
      for (int k = 0; k < n; ++k) out.values[base + k * step] /= sum;
    }
  }
  NodeId id = t.push(std::move(out));
  t.set_backward(id, [id, x, n, step, strides, oa, ob, da = dims[oa], db = dims[ob]](Tape& t) {
    const FeatureMap& go = t.grad(id);
    const FeatureMap& y = t.value(id);
    FeatureMap& gx = t.grad(x);
    for (int i = 0; i < da; ++i) {
      for (int j = 0; j < db; ++j) {
        const std::size_t base = static_cast<std::size_t>(i) * strides[oa] +
                                 static_cast<std::size_t>(j) * strides[ob];
        double dot = 0.0;
        for (int k = 0; k < n; ++k) {
          dot += y.values[base + k * step] * go.values[base + k * step];
        }
        for (int k = 0; k < n; ++k) {
          const std::size_t idx = base + k * step;
          gx.values[idx] += y.values[idx] * (go.values[idx] - dot);
        }
      }
    }
  });
  return id;
}

NodeId area_resize(Tape& t, NodeId x, int oh, int ow) {
  return resample_node(t, x, oh, ow, /*area=*/true, "area_resize");
}

NodeId bilinear_resize(Tape& t, NodeId x, int oh, int ow) {
  return resample_node(t, x, oh, ow, /*area=*/false, "bilinear_resize");
}

NodeId sum_all(Tape& t, NodeId x) {
  const FeatureMap& in = t.value(x);
  double acc = 0.0;
  for (double v : in.values) acc += v;
  NodeId id = t.push(FeatureMap::scalar(acc));
  t.set_backward(id, [id, x](Tape& t) {
    const double g = t.grad(id).values[0];
    FeatureMap& gx = t.grad(x);
    for (double& v : gx.values) v += g;
  });
  return id;
}

NodeId mean_all(Tape& t, NodeId x) {
  const FeatureMap& in = t.value(x);
  const double inv = 1.0 / static_cast<double>(in.values.size());
  double acc = 0.0;
  for (double v : in.values) acc += v;
  NodeId id = t.push(FeatureMap::scalar(acc * inv));
  t.set_backward(id, [id, x, inv](Tape& t) {
    const double g = t.grad(id).values[0] * inv;
    FeatureMap& gx = t.grad(x);
    for (double& v : gx.values) v += g;
  });
  return id;
}

NodeId bce(Tape& t, NodeId pred, const FeatureMap& mask) {
  const FeatureMap& p = t.value(pred);
  require_same_shape("bce", p, mask);
  if (p.depth != 1) {
    throw Error(ErrorKind::kShape, "bce: expected depth-1 maps, got " + p.shape_string());
  }
  for (std::size_t i = 0; i < mask.values.size(); ++i) {
    const double m = mask.values[i];
    if (m != 0.0 && m != 1.0) {
      throw Error(ErrorKind::kShape,
                  "bce: mask value " + std::to_string(m) + " at flat index " + std::to_string(i) +
                      " is outside {0,1}");
    }
  }
  const double n = static_cast<double>(p.values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.values.size(); ++i) {
    const double pc = std::min(std::max(p.values[i], kBceClamp), 1.0 - kBceClamp);
    const double m = mask.values[i];
    acc += -m * std::log(pc) - (1.0 - m) * std::log(1.0 - pc);
  }
  NodeId id = t.push(FeatureMap::scalar(acc / n));
  t.set_backward(id, [id, pred, mask, n](Tape& t) {
    const double g = t.grad(id).values[0] / n;
    const FeatureMap& p = t.value(pred);
    FeatureMap& gp = t.grad(pred);
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double raw = p.values[i];
      if (raw < kBceClamp || raw > 1.0 - kBceClamp) continue;  // clamped: flat
      const double m = mask.values[i];
      gp.values[i] += g * (-m / raw + (1.0 - m) / (1.0 - raw));
    }
  });
  return id;
}

FeatureMap area_resize_map(const FeatureMap& x, int oh, int ow) {
  if (oh < 1 || ow < 1) {
    throw Error(ErrorKind::kShape, "area_resize: target size is not positive");
  }
  return resample(x, area_taps(x.height, oh), area_taps(x.width, ow));
}

FeatureMap bilinear_resize_map(const FeatureMap& x, int oh, int ow) {
  if (oh < 1 || ow < 1) {
    throw Error(ErrorKind::kShape, "bilinear_resize: target size is not positive");
  }
  return resample(x, bilinear_taps(x.height, oh), bilinear_taps(x.width, ow));
}

}  // namespace span::ops
