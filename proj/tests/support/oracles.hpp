#pragma once

// Independent reference implementations used as test oracles. These follow
// the defining formulas directly (per-pixel loops, unstabilized softmax,
// O(n^2) pair counting) and deliberately share no code with the library
// paths they check.

#include <cmath>
#include <complex>
#include <vector>

#include "span/attention.hpp"
#include "span/tensor.hpp"

namespace oracle {

inline std::vector<double> matvec(const std::vector<double>& m, const double* v, int d) {
  std::vector<double> out(static_cast<std::size_t>(d), 0.0);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) out[static_cast<std::size_t>(i)] += m[static_cast<std::size_t>(i * d + j)] * v[j];
  }
  return out;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

/// Naive per-pixel local self-attention: for every pixel, enumerate the
/// dilated neighborhood, apply the projections one neighbor at a time and
/// normalize with the plain exponential sum.
inline span::FeatureMap lsa_reference(const span::FeatureMap& x, const span::AttentionParams& p,
                                      span::NeighborhoodSpec spec) {
  const int d = p.depth;
  const int n = spec.radius;
  const int side = spec.side();
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  span::FeatureMap out(x.height, x.width, d, 0.0);
  for (int r = 0; r < x.height; ++r) {
    for (int c = 0; c < x.width; ++c) {
      const std::vector<double> q = matvec(p.query_proj.value, x.pixel(r, c), d);
      std::vector<double> numer(static_cast<std::size_t>(d), 0.0);
      double denom = 0.0;
      for (int a = -n; a <= n; ++a) {
        const int nr = r + a * spec.dilation;
        if (nr < 0 || nr >= x.height) continue;
        for (int b = -n; b <= n; ++b) {
          const int nc = c + b * spec.dilation;
          if (nc < 0 || nc >= x.width) continue;
          const int l = (a + n) * side + (b + n);
          const double* y = x.pixel(nr, nc);

          std::vector<double> key_input(y, y + d);
          if (p.mode == span::PositionMode::kProjection) {
            key_input = matvec(p.pos_projs[static_cast<std::size_t>(l)].value, y, d);
          } else if (p.mode == span::PositionMode::kEmbedding) {
            for (int i = 0; i < d; ++i) {
              key_input[static_cast<std::size_t>(i)] +=
                  p.pos_embeds[static_cast<std::size_t>(l)].value[static_cast<std::size_t>(i)];
            }
          }
          const std::vector<double> key = matvec(p.key_proj.value, key_input.data(), d);
          const double w = std::exp(dot(key, q) * scale);
          const std::vector<double> value = matvec(p.value_proj.value, y, d);
          for (int i = 0; i < d; ++i) numer[static_cast<std::size_t>(i)] += w * value[static_cast<std::size_t>(i)];
          denom += w;
        }
      }
      for (int i = 0; i < d; ++i) out.at(r, c, i) = numer[static_cast<std::size_t>(i)] / denom;
    }
  }
  return out;
}

/// O(n^2) pair-counting AUC, ties worth one half.
inline double auc_pair_counting(const std::vector<double>& preds,
                                const std::vector<double>& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (std::size_t j = 0; j < preds.size(); ++j) {
      if (labels[j] != 0.0) continue;
      ++pairs;
      if (preds[i] > preds[j]) wins += 1.0;
      else if (preds[i] == preds[j]) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

/// Scalar Adam reference with the standard bias correction.
struct AdamScalarRef {
  double m = 0.0, v = 0.0;
  int t = 0;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  double step(double x, double g, double lr) {
    ++t;
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g * g;
    const double mhat = m / (1.0 - std::pow(beta1, t));
    const double vhat = v / (1.0 - std::pow(beta2, t));
    return x - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

/// Fraction of (non-DC) spectral energy of one channel at radial frequency
/// below `cutoff` cycles per image, via the plain separable DFT.
inline double low_frequency_energy_fraction(const span::FeatureMap& img, int channel,
                                            double cutoff) {
  const int s = img.height;
  using cd = std::complex<double>;
  std::vector<cd> rows(static_cast<std::size_t>(s) * s);
  // DFT along columns of each row.
  for (int r = 0; r < s; ++r) {
    for (int v = 0; v < s; ++v) {
      cd acc(0.0, 0.0);
      for (int c = 0; c < s; ++c) {
        const double angle = -2.0 * 3.14159265358979323846 * v * c / s;
        acc += img.at(r, c, channel) * cd(std::cos(angle), std::sin(angle));
      }
      rows[static_cast<std::size_t>(r) * s + v] = acc;
    }
  }
  double low = 0.0, total = 0.0;
  for (int u = 0; u < s; ++u) {
    for (int v = 0; v < s; ++v) {
      cd acc(0.0, 0.0);
      for (int r = 0; r < s; ++r) {
        const double angle = -2.0 * 3.14159265358979323846 * u * r / s;
        acc += rows[static_cast<std::size_t>(r) * s + v] * cd(std::cos(angle), std::sin(angle));
      }
      if (u == 0 && v == 0) continue;  // DC carries no texture information
      const double fu = u <= s / 2 ? u : u - s;
      const double fv = v <= s / 2 ? v : v - s;
      const double energy = std::norm(acc);
      total += energy;
      if (std::sqrt(fu * fu + fv * fv) < cutoff) low += energy;
    }
  }
  return low / total;
}

}  // namespace oracle
