#include "omnifmi/unwrap.hpp"

#include <cmath>
#include <numbers>

#include "omnifmi/error.hpp"

namespace omnifmi {

void PanoramaSpec::validate(const CameraModel* model) const {
  if (!(rho_min >= 0 && rho_min < rho_max)) throw InvalidArgument("panorama: need 0 <= rho_min < rho_max");
  if (width < 2 || height < 2) throw InvalidArgument("panorama: width and height must be >= 2");
  if (model && rho_max > model->inscribed_radius() + 1e-9)
    throw InvalidArgument("panorama: rho_max exceeds the inscribed radius of the omni-image");
}

PanoramaSpec default_panorama_spec(const CameraModel& model, std::optional<double> rho_min,
                                   std::optional<double> rho_max) {
  PanoramaSpec spec;
  spec.rho_max = rho_max.value_or(std::floor(model.inscribed_radius()));
  spec.rho_min = rho_min.value_or(0.25 * spec.rho_max);
  spec.width = static_cast<int>(std::lround(2.0 * std::numbers::pi * spec.rho_max));
  spec.height = static_cast<int>(std::lround(spec.rho_max - spec.rho_min));
  spec.validate(&model);
  return spec;
}

Pixel pano_to_omni_coords(const PanoramaSpec& spec, const Pixel& center, const Pixel& q) {
  const double phi = spec.theta_zero + 2.0 * std::numbers::pi * q.u / spec.width;
  const double rho = spec.rho_max - q.v * (spec.rho_max - spec.rho_min) / spec.height;
  return {center.u + rho * std::cos(phi), center.v + rho * std::sin(phi)};
}

Pixel omni_to_pano_coords(const PanoramaSpec& spec, const Pixel& center, const Pixel& p) {
  const double dx = p.u - center.u, dy = p.v - center.v;
  const double rho = std::hypot(dx, dy);
  // Tolerate round-off at the annulus edges.
  const double slack = 1e-9 * spec.rho_max;
  if (rho < spec.rho_min - slack || rho > spec.rho_max + slack)
    throw OutOfAnnulusError("radius " + std::to_string(rho) + " outside [" + std::to_string(spec.rho_min) +
                            ", " + std::to_string(spec.rho_max) + "]");
  const double two_pi = 2.0 * std::numbers::pi;
  double phi = std::fmod(std::atan2(dy, dx) - spec.theta_zero, two_pi);
  if (phi < 0) phi += two_pi;
  double u = phi * spec.width / two_pi;
  if (u >= spec.width) u -= spec.width;
  const double v = (spec.rho_max - rho) * spec.height / (spec.rho_max - spec.rho_min);
  return {u, v};
}

PanoramaMap::PanoramaMap(const CameraModel& model, const PanoramaSpec& spec)
    : spec_(spec), omni_width_(model.width), omni_height_(model.height) {
  spec_.validate(&model);
  source_.resize(static_cast<size_t>(spec_.width) * spec_.height);
  const Pixel center = model.center();
  for (int v = 0; v < spec_.height; ++v)
    for (int u = 0; u < spec_.width; ++u)
      source_[static_cast<size_t>(v) * spec_.width + u] = pano_to_omni_coords(spec_, center, {double(u), double(v)});
}

Image PanoramaMap::unwrap(const Image& omni) const {
  if (omni.width != omni_width_ || omni.height != omni_height_)
    throw InvalidArgument("unwrap: image size does not match the camera model");
  Image pano(spec_.width, spec_.height);
  for (size_t i = 0; i < source_.size(); ++i) pano.data[i] = sample_bilinear(omni, source_[i].u, source_[i].v);
  return pano;
}

Image unwrap_image(const Image& omni, const CameraModel& model, const PanoramaSpec& spec) {
  return PanoramaMap(model, spec).unwrap(omni);
}

}  // namespace omnifmi
