#pragma once

#include <Eigen/Core>
#include <string>
#include <string_view>
#include <vector>

#include "omnifmi/image.hpp"

namespace omnifmi {

// Camera ray direction. Rays returned by the library are unit length.
using Ray = Eigen::Vector3d;

// Catadioptric camera model in the OCamCalib polynomial form.
//
// A centred sensor point (u, v) corresponds to the ray (u, v, f(rho)) with
// rho = sqrt(u^2 + v^2) and f(rho) = a0 + a1*rho + a2*rho^2 + ...
// Image pixels (u*, v*) (top-left origin, u* right, v* down) relate to the
// centred point through
//
//   [u*]   [c d] [u]   [xc]
//   [v*] = [e 1] [v] + [yc]
struct CameraModel {
  std::vector<double> poly_coeffs;
  // Inverse (world->image) polynomial from calib_results.txt. Carried through
  // parse/serialise only; ray_to_pixel solves the forward polynomial instead.
  std::vector<double> inverse_poly;
  double c = 1.0;
  double d = 0.0;
  double e = 0.0;
  double xc = 0.0;
  double yc = 0.0;
  int width = 0;
  int height = 0;

  // Throws InvalidArgument when an invariant is violated.
  void validate() const;

  Pixel center() const { return {xc, yc}; }
  double affine_det() const { return c - d * e; }
  double poly(double rho) const;
  // Largest circle around the centre that fits inside the image.
  double inscribed_radius() const;
};

// Parses the OCamCalib `calib_results.txt` layout:
//
//   #polynomial coefficients for the DIRECT mapping function ...
//   <count> a0 a1 ... a(count-1)
//   #polynomial coefficients for the inverse mapping function ...   (optional)
//   <count> p0 p1 ...
//   #center: "row" and "column", starting from 0 (C convention)
//   <yc> <xc>
//   #affine parameters "c", "d", "e"
//   <c> <d> <e>
//   #image size: "height" and "width"
//   <height> <width>
//
// Sections are recognised by keywords in their comment line ("DIRECT",
// "inverse", "center", "affine", "image size") and may appear in any order.
// Errors are ParseError with the section name.
CameraModel parse_calibration(std::string_view text);
CameraModel load_calibration(const std::string& path);

// Writes the same layout parse_calibration accepts, numbers in %e form.
std::string serialize_calibration(const CameraModel& model);

// Unit ray for image pixel p. Throws InvalidArgument when p is outside the
// image and DegenerateRayError when (u, v, f) is numerically zero.
Ray pixel_to_ray(const CameraModel& model, const Pixel& p);

// Same as pixel_to_ray without the bounds precondition.
Ray pixel_to_ray_unchecked(const CameraModel& model, const Pixel& p);

// Inverse projection. Solves f(rho) * r_xy = z * rho for rho in [0, rho_max]
// by bracketed bisection (tangent roots are found by minimising |g|).
// Throws OutOfFovError when no radius exists and AmbiguousRayError when more
// than one does.
Pixel ray_to_pixel(const CameraModel& model, const Ray& r);

}  // namespace omnifmi
