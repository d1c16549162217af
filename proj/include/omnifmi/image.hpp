#pragma once

#include <cassert>
#include <complex>
#include <string>
#include <vector>

namespace omnifmi {

// Row-major 2-D grid. Sample (x, y) lives at data[y * width + x]; x is the
// column (rightward), y the row (downward).
template <typename T>
struct Grid {
  int width = 0;
  int height = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(int w, int h, T fill = T{}) : width(w), height(h), data(static_cast<size_t>(w) * h, fill) {}

  T& operator()(int x, int y) {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return data[static_cast<size_t>(y) * width + x];
  }
  const T& operator()(int x, int y) const {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return data[static_cast<size_t>(y) * width + x];
  }
  size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
};

using RealGrid = Grid<double>;
using ComplexGrid = Grid<std::complex<double>>;

// Grayscale image with intensities in [0, 1].
using Image = RealGrid;

// Sub-pixel image position. Integer coordinates are pixel centres.
struct Pixel {
  double u = 0.0;
  double v = 0.0;
};

// Bilinear interpolation; neighbours outside the grid read as zero.
double sample_bilinear(const RealGrid& img, double x, double y);

// Bilinear interpolation with horizontal wrap-around and vertical zero padding.
double sample_bilinear_wrap_x(const RealGrid& img, double x, double y);

// Loads an 8/16-bit PNG or binary PGM (P5) as grayscale in [0, 1]. Colour PNGs
// are converted to luminance.
Image load_image(const std::string& path);

// Writes 8-bit (default) or 16-bit grayscale; the format follows the file
// extension (.png or .pgm). Values are clamped to [0, 1].
void save_image(const std::string& path, const Image& img, int bit_depth = 8);

struct Rgb {
  unsigned char r = 0, g = 0, b = 0;
};
using RgbImage = Grid<Rgb>;

void save_rgb_png(const std::string& path, const RgbImage& img);

// Linearly rescales a grid to [0, 1] (constant grids map to 0).
Image normalize_to_unit(const RealGrid& g);

}  // namespace omnifmi
