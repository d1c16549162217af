#pragma once

#include "omnifmi/image.hpp"

namespace omnifmi::fft {

// In-place 2-D DFTs backed by FFTW. Plans are created once per size and
// shared; execution is thread-safe. `inverse` includes the 1/(w*h) factor.
void forward(ComplexGrid& g);
void inverse(ComplexGrid& g);

ComplexGrid to_complex(const RealGrid& g);

// Swaps quadrants so that the zero frequency moves to (w/2, h/2).
template <typename T>
Grid<T> fftshift(const Grid<T>& g) {
  Grid<T> out(g.width, g.height);
  const int sx = g.width / 2, sy = g.height / 2;
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x) out((x + sx) % g.width, (y + sy) % g.height) = g(x, y);
  return out;
}

}  // namespace omnifmi::fft
