#pragma once

#include <string>

#include "span/tensor.hpp"

namespace span {

// 8-bit binary PPM (P6, 3-channel) and PGM (P5, 1-channel) raster I/O.
// Values map linearly: byte b <-> double b/255; writes round.

void write_ppm(const std::string& path, const FeatureMap& image);
void write_pgm(const std::string& path, const FeatureMap& image);

FeatureMap read_ppm(const std::string& path);
FeatureMap read_pgm(const std::string& path);

}  // namespace span
