#include "span/image_io.hpp"

#include <cmath>
#include <fstream>
#include <string>

#include "span/error.hpp"

namespace span {
namespace {

unsigned char quantize(double v) {
  const double scaled = std::lround(255.0 * std::min(std::max(v, 0.0), 1.0));
  return static_cast<unsigned char>(scaled);
}

void write_raster(const std::string& path, const FeatureMap& img, int channels,
                  const char* magic) {
  if (img.depth != channels) {
    throw Error(ErrorKind::kShape, std::string(magic) + ": expected depth " +
                                       std::to_string(channels) + ", got " + img.shape_string());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  }
  out << magic << "\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width) * channels);
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        row[static_cast<std::size_t>(c) * channels + ch] = quantize(img.at(r, c, ch));
      }
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) {
    throw Error(ErrorKind::kIo, "write failed for " + path);
  }
}

int read_pnm_token(std::istream& in, const std::string& path) {
  // Skips whitespace and '#' comments, then reads one unsigned integer.
  int ch = in.get();
  while (ch != EOF && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = in.get();
    }
    ch = in.get();
  }
  if (ch == EOF || !std::isdigit(ch)) {
    throw Error(ErrorKind::kIo, path + ": malformed header");
  }
  int value = 0;
  while (ch != EOF && std::isdigit(ch)) {
    value = value * 10 + (ch - '0');
    ch = in.get();
  }
  return value;
}

FeatureMap read_raster(const std::string& path, int channels, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::kIo, "cannot open " + path);
  }
  char m0 = 0, m1 = 0;
  in.get(m0);
  in.get(m1);
  if (m0 != magic[0] || m1 != magic[1]) {
    throw Error(ErrorKind::kIo, path + ": expected " + magic + " raster");
  }
  const int width = read_pnm_token(in, path);
  const int height = read_pnm_token(in, path);
  const int maxval = read_pnm_token(in, path);
  if (width < 1 || height < 1 || maxval != 255) {
    throw Error(ErrorKind::kIo, path + ": unsupported raster geometry");
  }
  // Exactly one whitespace byte separates the header from pixel data; the
  // token reader has already consumed it.
  FeatureMap img(height, width, channels);
  std::vector<unsigned char> row(static_cast<std::size_t>(width) * channels);
  for (int r = 0; r < height; ++r) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    if (in.gcount() != static_cast<std::streamsize>(row.size())) {
      throw Error(ErrorKind::kIo, path + ": truncated pixel data");
    }
    for (int c = 0; c < width; ++c) {
      for (int ch = 0; ch < channels; ++ch) {
        img.at(r, c, ch) = row[static_cast<std::size_t>(c) * channels + ch] / 255.0;
      }
    }
  }
  return img;
}

}  // namespace

void write_ppm(const std::string& path, const FeatureMap& image) {
  write_raster(path, image, 3, "P6");
}

void write_pgm(const std::string& path, const FeatureMap& image) {
  write_raster(path, image, 1, "P5");
}

FeatureMap read_ppm(const std::string& path) {
  return read_raster(path, 3, "P6");
}

FeatureMap read_pgm(const std::string& path) {
  return read_raster(path, 1, "P5");
}

}  // namespace span
