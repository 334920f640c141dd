#include "span/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "span/error.hpp"
#include "span/image_io.hpp"

namespace span {
namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kMinFraction = 0.02;
constexpr double kMaxFraction = 0.50;
constexpr int kPlacementTries = 100;
constexpr double kRemovalNoise = 0.03;

// A tampered region: explicit pixel list plus its bounding box, everything
// at least one pixel away from the border.
struct Region {
  std::vector<std::pair<int, int>> pixels;
  int r0, c0, r1, c1;  // inclusive bounding box
};

Region sample_region(Rng& rng, int side) {
  for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
    Region reg;
    const bool ellipse = rng.bernoulli(0.5);
    if (ellipse) {
      const int lo = std::max(1, static_cast<int>(std::lround(0.10 * side)));
      const int hi = std::max(2, static_cast<int>(std::lround(0.16 * side)));
      const int ar = rng.uniform_int(lo, hi);
      const int ac = rng.uniform_int(lo, hi);
      const int cr = rng.uniform_int(1 + ar, side - 2 - ar);
      const int cc = rng.uniform_int(1 + ac, side - 2 - ac);
      reg.r0 = cr - ar;
      reg.c0 = cc - ac;
      reg.r1 = cr + ar;
      reg.c1 = cc + ac;
      for (int r = reg.r0; r <= reg.r1; ++r) {
        for (int c = reg.c0; c <= reg.c1; ++c) {
          const double dr = static_cast<double>(r - cr) / ar;
          const double dc = static_cast<double>(c - cc) / ac;
          if (dr * dr + dc * dc <= 1.0) reg.pixels.emplace_back(r, c);
        }
      }
    } else {
      const int lo = std::max(2, static_cast<int>(std::lround(0.15 * side)));
      const int hi = std::max(3, static_cast<int>(std::lround(0.33 * side)));
      const int h = rng.uniform_int(lo, hi);
      const int w = rng.uniform_int(lo, hi);
      reg.r0 = rng.uniform_int(1, side - 1 - h);
      reg.c0 = rng.uniform_int(1, side - 1 - w);
      reg.r1 = reg.r0 + h - 1;
      reg.c1 = reg.c0 + w - 1;
      for (int r = reg.r0; r <= reg.r1; ++r) {
        for (int c = reg.c0; c <= reg.c1; ++c) reg.pixels.emplace_back(r, c);
      }
    }
    const double fraction =
        static_cast<double>(reg.pixels.size()) / (static_cast<double>(side) * side);
    if (fraction >= kMinFraction && fraction <= kMaxFraction) return reg;
  }
  throw Error(ErrorKind::kConfig, "datagen: no admissible region after " +
                                      std::to_string(kPlacementTries) + " tries (side " +
                                      std::to_string(side) + ")");
}

FeatureMap region_mask(const Region& reg, int side) {
  FeatureMap mask(side, side, 1, 0.0);
  for (const auto& [r, c] : reg.pixels) mask.at(r, c, 0) = 1.0;
  return mask;
}

void check_input(const FeatureMap& image) {
  if (image.depth != 3 || image.height < 8 || image.width < 8) {
    throw Error(ErrorKind::kShape,
                "datagen: expected an RGB image of side >= 8, got " + image.shape_string());
  }
  if (image.height != image.width) {
    throw Error(ErrorKind::kShape, "datagen: expected a square image, got " + image.shape_string());
  }
}

}  // namespace

const char* to_string(ManipType type) {
  switch (type) {
    case ManipType::kCopyMove: return "copy_move";
    case ManipType::kSplice: return "splice";
    case ManipType::kRemoval: return "removal";
  }
  return "?";
}

ManipType manip_type_from_string(const std::string& s) {
  if (s == "copy_move") return ManipType::kCopyMove;
  if (s == "splice") return ManipType::kSplice;
  if (s == "removal") return ManipType::kRemoval;
  throw Error(ErrorKind::kConfig, "unknown manipulation type '" + s + "'");
}

FeatureMap generate_background(Rng& rng, int side) {
  if (side < 8) {
    throw Error(ErrorKind::kConfig, "generate_background: side must be >= 8");
  }
  FeatureMap img(side, side, 3, 0.0);
  // Per channel: base level plus three sinusoids of at most 2.5 cycles per
  // image, so all deterministic energy stays below a quarter of Nyquist.
  for (int ch = 0; ch < 3; ++ch) {
    const double base = rng.uniform(0.40, 0.60);
    double amp[3], fr[3], fc[3], phase[3];
    for (int k = 0; k < 3; ++k) {
      amp[k] = rng.uniform(0.04, 0.12);
      fr[k] = rng.uniform(-2.5, 2.5);
      fc[k] = rng.uniform(-2.5, 2.5);
      phase[k] = rng.uniform(0.0, 2.0 * kPi);
    }
    for (int r = 0; r < side; ++r) {
      for (int c = 0; c < side; ++c) {
        double v = base;
        for (int k = 0; k < 3; ++k) {
          v += amp[k] * std::sin(2.0 * kPi * (fr[k] * r + fc[k] * c) / side + phase[k]);
        }
        img.at(r, c, ch) = v;
      }
    }
  }
  for (double& v : img.values) {
    v += rng.uniform(-0.01, 0.01);
    v = std::min(std::max(v, 0.0), 1.0);
  }
  return img;
}

Manipulated apply_copy_move(const FeatureMap& image, Rng& rng) {
  check_input(image);
  const int side = image.height;
  for (int attempt = 0; attempt < kPlacementTries; ++attempt) {
    Region dst = sample_region(rng, side);
    // Shift the whole region to a source position with a disjoint bounding box.
    const int h = dst.r1 - dst.r0 + 1;
    const int w = dst.c1 - dst.c0 + 1;
    const int sr = rng.uniform_int(1, side - 1 - h);
    const int sc = rng.uniform_int(1, side - 1 - w);
    const bool overlap = sr <= dst.r1 && sr + h - 1 >= dst.r0 && sc <= dst.c1 && sc + w - 1 >= dst.c0;
    if (overlap) continue;
    Manipulated out{image, region_mask(dst, side)};
    const int dr = sr - dst.r0;
    const int dc = sc - dst.c0;
    for (const auto& [r, c] : dst.pixels) {
      for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = image.at(r + dr, c + dc, ch);
    }
    return out;
  }
  throw Error(ErrorKind::kConfig, "apply_copy_move: no disjoint placement after " +
                                      std::to_string(kPlacementTries) + " tries");
}

Manipulated apply_splice(const FeatureMap& image, const FeatureMap& donor, Rng& rng) {
  check_input(image);
  require_same_shape("apply_splice", image, donor);
  Region reg = sample_region(rng, image.height);
  Manipulated out{image, region_mask(reg, image.height)};
  for (const auto& [r, c] : reg.pixels) {
    for (int ch = 0; ch < 3; ++ch) out.image.at(r, c, ch) = donor.at(r, c, ch);
  }
  return out;
}

Manipulated apply_removal(const FeatureMap& image, Rng& rng) {
  check_input(image);
  Region reg = sample_region(rng, image.height);
  double mean[3] = {0.0, 0.0, 0.0};
  for (const auto& [r, c] : reg.pixels) {
    for (int ch = 0; ch < 3; ++ch) mean[ch] += image.at(r, c, ch);
  }
  for (double& m : mean) m /= static_cast<double>(reg.pixels.size());
  Manipulated out{image, region_mask(reg, image.height)};
  for (const auto& [r, c] : reg.pixels) {
    for (int ch = 0; ch < 3; ++ch) {
      const double v = mean[ch] + rng.normal(0.0, kRemovalNoise);
      out.image.at(r, c, ch) = std::min(std::max(v, 0.0), 1.0);
    }
  }
  return out;
}

Sample make_sample(std::uint64_t seed, int side) {
  Rng rng(seed);
  const int pick = rng.uniform_int(0, 2);
  FeatureMap background = generate_background(rng, side);
  Sample s;
  s.seed = seed;
  Manipulated m;
  switch (pick) {
    case 0:
      s.type = ManipType::kCopyMove;
      m = apply_copy_move(background, rng);
      break;
    case 1: {
      s.type = ManipType::kSplice;
      Rng donor_rng(Rng::mix(seed, 0xd0e0));
      FeatureMap donor = generate_background(donor_rng, side);
      m = apply_splice(background, donor, rng);
      break;
    }
    default:
      s.type = ManipType::kRemoval;
      m = apply_removal(background, rng);
      break;
  }
  s.image = std::move(m.image);
  s.mask = std::move(m.mask);
  return s;
}

Sample SampleStream::next() {
  return make_sample(Rng::mix(seed_, index_++), side_);
}

SampleBatch SampleStream::next_batch(int n) {
  SampleBatch batch;
  batch.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) batch.push_back(next());
  return batch;
}

SampleBatch make_samples(int side, std::uint64_t seed, int count) {
  SampleStream stream(side, seed);
  return stream.next_batch(count);
}

void write_dataset(const std::string& dir, const SampleBatch& samples) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream index(dir + "/index.txt");
  if (!index) {
    throw Error(ErrorKind::kIo, "cannot write " + dir + "/index.txt");
  }
  char name[64];
  for (std::size_t i = 0; i < samples.size(); ++i) {
    std::snprintf(name, sizeof(name), "sample_%05zu", i);
    const std::string image_file = std::string(name) + ".ppm";
    const std::string mask_file = std::string(name) + "_mask.pgm";
    write_ppm(dir + "/" + image_file, samples[i].image);
    write_pgm(dir + "/" + mask_file, samples[i].mask);
    index << image_file << " " << to_string(samples[i].type) << " " << samples[i].seed << "\n";
  }
  if (!index) {
    throw Error(ErrorKind::kIo, "write failed for " + dir + "/index.txt");
  }
}

SampleBatch load_dataset(const std::string& dir) {
  std::ifstream index(dir + "/index.txt");
  if (!index) {
    throw Error(ErrorKind::kIo, "cannot open " + dir + "/index.txt");
  }
  SampleBatch out;
  std::string image_file, type;
  std::uint64_t seed = 0;
  while (index >> image_file >> type >> seed) {
    Sample s;
    s.type = manip_type_from_string(type);
    s.seed = seed;
    s.image = read_ppm(dir + "/" + image_file);
    std::string mask_file = image_file;
    const auto dot = mask_file.rfind(".ppm");
    if (dot == std::string::npos) {
      throw Error(ErrorKind::kCorrupt, dir + "/index.txt: unexpected image name " + image_file);
    }
    mask_file.replace(dot, 4, "_mask.pgm");
    s.mask = read_pgm(dir + "/" + mask_file);
    for (double& v : s.mask.values) v = v > 0.5 ? 1.0 : 0.0;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace span
