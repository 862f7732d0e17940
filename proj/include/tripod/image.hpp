#pragma once

#include <cstddef>
#include <filesystem>
#include <vector>

namespace tripod {

/// Grayscale image with values in [0, 1].
struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(std::size_t w, std::size_t h, double fill = 0.0) : width(w), height(h), pixels(w * h, fill) {}
  double& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
  double at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
};

/// RGB image with channel values in [0, 1].
struct RgbImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> pixels;  // (height, width, 3)

  RgbImage() = default;
  RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h * 3, 0.0) {}
  void set(std::size_t row, std::size_t col, double r, double g, double b) {
    double* p = &pixels[(row * width + col) * 3];
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }
};

/// Binary P5, maxval 255.
void write_pgm(const GrayImage& image, const std::filesystem::path& path);
/// Binary P6, maxval 255.
void write_ppm(const RgbImage& image, const std::filesystem::path& path);
GrayImage read_pgm(const std::filesystem::path& path);

}  // namespace tripod
