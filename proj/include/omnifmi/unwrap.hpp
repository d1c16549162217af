#pragma once

#include <optional>
#include <vector>

#include "omnifmi/calib.hpp"
#include "omnifmi/image.hpp"

namespace omnifmi {

// Polar unwrapping of the omni-image annulus rho_min..rho_max into a W x H
// panorama. Column u' maps to azimuth theta_zero + 2*pi*u'/W, row v' to radius
// rho_max - v'*(rho_max - rho_min)/H, so row 0 is the outermost ring.
struct PanoramaSpec {
  double rho_min = 0.0;
  double rho_max = 0.0;
  int width = 0;
  int height = 0;
  double theta_zero = 0.0;

  // Checks the annulus ordering and size. When `model` is given the annulus
  // must also fit inside the image around the model centre.
  void validate(const CameraModel* model = nullptr) const;
};

// rho_max defaults to the inscribed radius around the calibration centre and
// rho_min to a quarter of it; W = round(2*pi*rho_max), H = round(rho_max - rho_min).
PanoramaSpec default_panorama_spec(const CameraModel& model, std::optional<double> rho_min = std::nullopt,
                                   std::optional<double> rho_max = std::nullopt);

Pixel pano_to_omni_coords(const PanoramaSpec& spec, const Pixel& center, const Pixel& q);

// Exact inverse of pano_to_omni_coords; the column is reported in [0, W).
// Throws OutOfAnnulusError when p lies outside [rho_min, rho_max].
Pixel omni_to_pano_coords(const PanoramaSpec& spec, const Pixel& center, const Pixel& p);

// Precomputed source positions for every panorama pixel. Immutable; unwrap()
// may be called concurrently.
class PanoramaMap {
 public:
  PanoramaMap(const CameraModel& model, const PanoramaSpec& spec);

  const PanoramaSpec& spec() const { return spec_; }
  Image unwrap(const Image& omni) const;

 private:
  PanoramaSpec spec_;
  int omni_width_;
  int omni_height_;
  std::vector<Pixel> source_;
};

// Bilinear resampling; sources outside the omni-image read as 0.
Image unwrap_image(const Image& omni, const CameraModel& model, const PanoramaSpec& spec);

}  // namespace omnifmi
