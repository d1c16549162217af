#pragma once

#include <vector>

#include "omnifmi/image.hpp"
#include "omnifmi/specreg.hpp"

namespace omnifmi {

struct Tile {
  int index = 0;
  int u = 0;  // origin column; tiles may run past the right edge and wrap
  int v = 0;  // origin row
};

// Sub-image layout over a W x H panorama. Horizontally the grid wraps across
// the azimuth seam; vertically a final row is flushed to the bottom edge when
// the stride does not land on it.
struct TileGrid {
  int tile_size = 0;
  double overlap_fraction = 0.0;
  int pano_width = 0;
  int pano_height = 0;
  std::vector<Tile> tiles;

  Pixel tile_center(int i) const {
    const Tile& t = tiles.at(i);
    return {t.u + tile_size / 2.0, t.v + tile_size / 2.0};
  }
};

// Stride is round(N_a * (1 - overlap_fraction)), at least 1 pixel; tiles per
// row = ceil(W / stride). Throws ConfigError when N_a is not a power of two or
// does not fit, InvalidArgument for overlap outside [0, 1).
TileGrid make_grid(int width, int height, int tile_size, double overlap_fraction = 0.0);

// Power of two nearest to `fraction * width`, capped by the panorama height.
int default_tile_size(int width, int height, double fraction = 0.10);

Image extract_tile(const Image& pano, const TileGrid& grid, int index);

// u1 = u2*a - v2*b + cx*(1-a) + cy*b + tx
// v1 = u2*b + v2*a - cx*b + cy*(1-a) + ty,   a = s cos(theta), b = s sin(theta)
Pixel correspond_pixel(const TileMotion& m, const Pixel& tile_center, const Pixel& p2);

struct FlowEntry {
  int tile_index = 0;
  Pixel p1;  // frame-1 panorama position (may lie outside [0, W) before wrapping)
  Pixel p2;  // frame-2 probe pixel
  TileMotion motion;
  bool accepted = false;
  RejectStage rejected_at = RejectStage::None;
  double rs_peak_ratio = 0.0;
  double rs_peak_noise_ratio = 0.0;
  RealGrid rs_surface;
  RealGrid translation_surface;
};

struct FlowField {
  std::vector<FlowEntry> entries;  // in tile-index order

  int accepted_count() const;
};

struct FlowParams {
  RegistrationParams registration;
  double delta = 0.0;  // probe offset from the tile centre; <= 0 selects N_a / 8
  int jobs = 1;
};

// Registers every tile pair and emits one probe correspondence per accepted
// tile: p2 = centre + (delta, delta) in frame 2 and p1 from correspond_pixel.
// Throws EmptyFieldError when no tile is accepted.
FlowField build_flow_field(const Image& pano1, const Image& pano2, const TileGrid& grid, const FlowParams& params);

}  // namespace omnifmi
