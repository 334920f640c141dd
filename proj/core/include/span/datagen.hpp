#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "span/rng.hpp"
#include "span/tensor.hpp"

namespace span {

enum class ManipType { kCopyMove, kSplice, kRemoval };

const char* to_string(ManipType type);
ManipType manip_type_from_string(const std::string& s);

/// One synthetic training case: an S x S x 3 image in [0,1], the exact
/// binary mask of overwritten pixels, and the manipulation applied.
struct Sample {
  FeatureMap image;
  FeatureMap mask;
  ManipType type = ManipType::kCopyMove;
  std::uint64_t seed = 0;
};

using SampleBatch = std::vector<Sample>;

/// Smooth procedural texture: per channel a base level plus a few
/// low-frequency sinusoids (under a quarter of Nyquist) and faint pixel
/// noise, clamped to [0,1].
FeatureMap generate_background(Rng& rng, int side);

struct Manipulated {
  FeatureMap image;
  FeatureMap mask;
};

/// Copies a random rectangular or elliptical patch to a non-overlapping
/// location. The mask marks exactly the destination pixels.
Manipulated apply_copy_move(const FeatureMap& image, Rng& rng);
/// Pastes the same-shaped region of an independently generated donor.
Manipulated apply_splice(const FeatureMap& image, const FeatureMap& donor, Rng& rng);
/// Fills a region with its pre-edit mean color plus faint noise.
Manipulated apply_removal(const FeatureMap& image, Rng& rng);

/// Fully deterministic in (seed, side).
Sample make_sample(std::uint64_t seed, int side);

/// Infinite deterministic sample stream; the i-th sample depends only on
/// (stream seed, i), so streams are reproducible and restartable.
class SampleStream {
 public:
  SampleStream(int side, std::uint64_t seed) : side_(side), seed_(seed) {}

  Sample next();
  SampleBatch next_batch(int n);
  std::uint64_t index() const { return index_; }

 private:
  int side_;
  std::uint64_t seed_;
  std::uint64_t index_ = 0;
};

/// Materializes count samples starting at stream index 0.
SampleBatch make_samples(int side, std::uint64_t seed, int count);

/// Writes sample_%05d.ppm / sample_%05d_mask.pgm pairs plus an index file
/// ("index.txt", one "<image> <type> <seed>" line per sample).
void write_dataset(const std::string& dir, const SampleBatch& samples);
SampleBatch load_dataset(const std::string& dir);

}  // namespace span
