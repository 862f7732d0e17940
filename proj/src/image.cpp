#include "tripod/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "tripod/error.hpp"

namespace tripod {

namespace {

unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_pgm(const GrayImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  for (double v : image.pixels) out.put(static_cast<char>(to_byte(v)));
}

void write_ppm(const RgbImage& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P6\n" << image.width << ' ' << image.height << "\n255\n";
  for (double v : image.pixels) out.put(static_cast<char>(to_byte(v)));
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxval = 0;
  if (!(in >> magic >> w >> h >> maxval) || magic != "P5" || maxval != 255) {
    throw ConfigError("not a binary 8-bit PGM: " + path.string());
  }
  in.get();
  GrayImage img(w, h);
  for (double& v : img.pixels) {
    const int c = in.get();
    if (c == EOF) throw ConfigError("truncated PGM: " + path.string());
    v = static_cast<double>(c) / 255.0;
  }
  return img;
}

}  // namespace tripod
