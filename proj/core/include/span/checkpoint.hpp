#pragma once

#include <string>

#include "span/network.hpp"

namespace span {

// Binary checkpoint, all integers little-endian:
//   bytes 0-4   magic "SPAN1"
//   u16         format version (1)
//   u32         config length, then that many UTF-8 bytes (the model
//               section as config lines)
//   u32         parameter record count
//   per record: u16 name length, name bytes, u8 rank, rank x u32 dims,
//               prod(dims) x f64 values (IEEE-754 bit patterns)
// Anything after the last record is rejected. Loading rebuilds the model
// from the embedded config and requires records to match the fresh model's
// parameter order, names and shapes exactly, so load(save(m)) predicts
// bit-identically.

inline constexpr char kCheckpointMagic[5] = {'S', 'P', 'A', 'N', '1'};
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const SpanModel& model);

/// Throws Error(kCorrupt) with the byte offset of the defect on any
/// malformed, truncated or trailing-garbage input.
SpanModel load_checkpoint(const std::string& path);

}  // namespace span
