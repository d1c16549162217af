#pragma once

#include <limits>

#include "omnifmi/image.hpp"

namespace omnifmi {

// Similarity motion between two patches: a2(p) = a1(s*R(theta)*(p - c) + c + t)
// with c the patch centre (N/2, N/2). The scores come from the translation
// stage correlation.
struct TileMotion {
  double s = 1.0;
  double theta = 0.0;
  double tx = 0.0;
  double ty = 0.0;
  double peak_ratio = 0.0;
  double peak_noise_ratio = 0.0;
};

// Sampling lattice of the log-polar magnitude spectrum: radius
// rho_k = rho_lo * exp(k * log_step()), k < radial_bins, and angle
// theta_j = j * pi / angular_bins over the half plane.
struct LogPolarGeometry {
  int radial_bins = 0;
  int angular_bins = 0;
  double rho_lo = 1.0;
  double rho_hi = 0.0;

  double log_step() const;
  double angle_step() const;
};

struct SpectralConfig {
  bool window = true;
  int radial_bins = 0;   // 0 selects the patch size
  int angular_bins = 0;  // 0 selects the patch size
  double rho_lo = 1.0;
  double scale_min = 0.5;
  double scale_max = 2.0;
  // Rotation/scale stage: high-frequency emphasis and log(1 + |G|) on the
  // magnitude before log-polar resampling.
  bool high_pass = true;
  bool log_magnitude = true;
  // Translation stage only: cross-power bins above this radial frequency
  // (cycles per pixel) are faded out. Resampled panoramas carry a fixed
  // interpolation pattern up there that otherwise pulls the peak to zero
  // shift. <= 0 keeps every bin.
  double translation_cutoff = 0.25;
};

LogPolarGeometry make_log_polar_geometry(int patch_size, const SpectralConfig& config = {});

// Fourier-Mellin descriptor: 2-D DFT of the log-polar magnitude spectrum.
// Columns index log-radius, rows index angle.
struct FmiDescriptor {
  LogPolarGeometry geometry;
  ComplexGrid spectrum;
};

// |G| of a square power-of-two patch, optionally Hann-windowed, with the zero
// frequency moved to (N/2, N/2).
RealGrid magnitude_spectrum(const Image& patch, bool window = true);

// Resamples a DC-centred magnitude grid onto the log-polar lattice.
RealGrid log_polar(const RealGrid& mag, const LogPolarGeometry& geometry);

FmiDescriptor fmi_descriptor(const RealGrid& mag, const LogPolarGeometry& geometry);

// Restricts the peak search of pomf() to |dx| <= max_abs_dx, |dy| <= max_abs_dy.
struct PomfSearch {
  double max_abs_dx = std::numeric_limits<double>::infinity();
  double max_abs_dy = std::numeric_limits<double>::infinity();
};

struct PomfResult {
  double dx = 0.0;  // column shift
  double dy = 0.0;  // row shift
  // Share of the correlation surface energy inside the 3x3 neighbourhood of
  // the primary peak (1 for a perfect match).
  double peak_ratio = 0.0;
  // Primary peak height over the highest value outside a 5x5 exclusion box.
  double peak_noise_ratio = 0.0;
  RealGrid surface;  // real correlation surface, zero shift at (0, 0)
};

// Phase-only matched filter on two spectra (forward DFTs) of equal size.
// Returns the shift d with b(x) = a(x - d), in (-N/2, N/2] per axis, refined
// by a 3-point parabola on each axis. Throws DegenerateSignalError when every
// cross-power bin is below 1e-12.
PomfResult pomf(const ComplexGrid& a, const ComplexGrid& b, const PomfSearch& search = {});
// Same, with each unit-magnitude cross-power bin scaled by `weight` (same
// layout as the spectra) when it is non-null.
PomfResult pomf_weighted(const ComplexGrid& a, const ComplexGrid& b, const PomfSearch& search,
                         const RealGrid* weight);

// out(p) = src(origin + s*R(theta)*(p - center) + center + t), bilinear with
// zero padding. With origin = (0, 0) and center = patch centre this produces
// the second patch of a TileMotion from the first.
Image warp_similarity(const Image& src, const TileMotion& m, const Pixel& center, int out_width,
                      int out_height, const Pixel& origin = {0.0, 0.0});

struct RegistrationParams {
  double th_pr = 0.03;
  double th_pnr = 1.5;
  SpectralConfig spectral;
  bool keep_surfaces = false;
};

enum class RejectStage { None, RotationScale, Translation, Degenerate };

struct Registration {
  TileMotion motion;
  bool accepted = false;
  RejectStage rejected_at = RejectStage::None;
  double rs_peak_ratio = 0.0;
  double rs_peak_noise_ratio = 0.0;
  // Filled only when RegistrationParams::keep_surfaces is set.
  RealGrid rs_surface;
  RealGrid translation_surface;
};

// Estimates the similarity motion between two equally sized square patches.
// Rotation and scale come from the descriptor correlation; the pi ambiguity of
// the half-plane spectrum is resolved by keeping the hypothesis whose
// translation correlation has the larger peak ratio. A result whose scores
// fall below th_pr / th_pnr at either stage is returned with accepted = false.
Registration register_patches(const Image& a1, const Image& a2, const RegistrationParams& params = {});

}  // namespace omnifmi
