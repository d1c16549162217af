#include "omnifmi/flowfield.hpp"

#include <cmath>

#include "omnifmi/error.hpp"
#include "omnifmi/parallel.hpp"

namespace omnifmi {

namespace {

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

}  // namespace

TileGrid make_grid(int width, int height, int tile_size, double overlap_fraction) {
  if (!is_power_of_two(tile_size)) throw ConfigError("tile size " + std::to_string(tile_size) + " is not a power of two");
  if (tile_size > width || tile_size > height)
    throw ConfigError("tile size " + std::to_string(tile_size) + " exceeds the panorama");
  if (!(overlap_fraction >= 0.0 && overlap_fraction < 1.0)) throw InvalidArgument("overlap must lie in [0, 1)");

  TileGrid grid;
  grid.tile_size = tile_size;
  grid.overlap_fraction = overlap_fraction;
  grid.pano_width = width;
  grid.pano_height = height;

  const int stride = std::max(1, static_cast<int>(std::lround(tile_size * (1.0 - overlap_fraction))));
  const int per_row = (width + stride - 1) / stride;
  std::vector<int> rows;
  for (int v = 0; v + tile_size <= height; v += stride) rows.push_back(v);
  if (rows.back() + tile_size < height) rows.push_back(height - tile_size);

  for (int v : rows)
    for (int k = 0; k < per_row; ++k)
      grid.tiles.push_back({static_cast<int>(grid.tiles.size()), k * stride, v});
  return grid;
}

int default_tile_size(int width, int height, double fraction) {
  const double target = std::max(1.0, fraction * width);
  int n = 1 << static_cast<int>(std::lround(std::log2(target)));
  while (n > height && n > 1) n >>= 1;
  return n;
}

Image extract_tile(const Image& pano, const TileGrid& grid, int index) {
  const Tile& t = grid.tiles.at(index);
  const int n = grid.tile_size;
  Image out(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) out(x, y) = pano((t.u + x) % pano.width, t.v + y);
  return out;
}

Pixel correspond_pixel(const TileMotion& m, const Pixel& c, const Pixel& p2) {
  const double a = m.s * std::cos(m.theta);
  const double b = m.s * std::sin(m.theta);
  return {p2.u * a - p2.v * b + c.u * (1 - a) + c.v * b + m.tx,
          p2.u * b + p2.v * a - c.u * b + c.v * (1 - a) + m.ty};
}

int FlowField::accepted_count() const {
  int n = 0;
  for (const auto& e : entries) n += e.accepted ? 1 : 0;
  return n;
}

FlowField build_flow_field(const Image& pano1, const Image& pano2, const TileGrid& grid, const FlowParams& params) {
  if (pano1.width != pano2.width || pano1.height != pano2.height)
    throw InvalidArgument("flow field: panoramas differ in size");
  if (pano1.width != grid.pano_width || pano1.height != grid.pano_height)
    throw InvalidArgument("flow field: grid does not match the panorama size");
  const double delta = params.delta > 0 ? params.delta : grid.tile_size / 8.0;

  FlowField field;
  field.entries.resize(grid.tiles.size());
  parallel_for(static_cast<int>(grid.tiles.size()), params.jobs, [&](int i) {
    Registration reg =
        register_patches(extract_tile(pano1, grid, i), extract_tile(pano2, grid, i), params.registration);
    FlowEntry& e = field.entries[i];
    e.tile_index = i;
    e.motion = reg.motion;
    e.accepted = reg.accepted;
    e.rejected_at = reg.rejected_at;
    e.rs_peak_ratio = reg.rs_peak_ratio;
    e.rs_peak_noise_ratio = reg.rs_peak_noise_ratio;
    e.rs_surface = std::move(reg.rs_surface);
    e.translation_surface = std::move(reg.translation_surface);
    const Pixel c = grid.tile_center(i);
    e.p2 = {c.u + delta, c.v + delta};
    e.p1 = correspond_pixel(reg.motion, c, e.p2);
  });

  if (field.accepted_count() == 0) throw EmptyFieldError("no tile pair passed the registration thresholds");
  return field;
}

}  // namespace omnifmi
