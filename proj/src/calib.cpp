#include "omnifmi/calib.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

#include "omnifmi/error.hpp"

namespace omnifmi {

namespace {

constexpr int kRootScanIntervals = 4096;
constexpr double kBisectionTol = 1e-10;

const char* const kDirectHeader =
    "#polynomial coefficients for the DIRECT mapping function (ocam_model.ss in MATLAB). "
    "These are used by cam2world";
const char* const kInverseHeader =
    "#polynomial coefficients for the inverse mapping function (ocam_model.invpol in MATLAB). "
    "These are used by world2cam";
const char* const kCenterHeader = "#center: \"row\" and \"column\", starting from 0 (C convention)";
const char* const kAffineHeader = "#affine parameters \"c\", \"d\", \"e\"";
const char* const kSizeHeader = "#image size: \"height\" and \"width\"";

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<double> parse_numbers(const std::string& line, const std::string& section) {
  std::istringstream in(line);
  std::vector<double> out;
  std::string tok;
  while (in >> tok) {
    try {
      size_t used = 0;
      out.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ParseError(section, "not a number: '" + tok + "'");
    }
  }
  return out;
}

std::vector<double> parse_counted(const std::vector<double>& nums, const std::string& section) {
  if (nums.empty()) throw ParseError(section, "missing coefficient count");
  const double n = nums[0];
  if (n < 1 || n != std::floor(n)) throw ParseError(section, "invalid coefficient count");
  if (nums.size() - 1 != static_cast<size_t>(n))
    throw ParseError(section, "expected " + std::to_string(static_cast<int>(n)) + " coefficients, found " +
                                  std::to_string(nums.size() - 1));
  return {nums.begin() + 1, nums.end()};
}

std::string fmt_e(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%e", v);
  return buf;
}

// Centred sensor coordinates from an image pixel (inverse affine).
Eigen::Vector2d to_centred(const CameraModel& m, const Pixel& p) {
  const double du = p.u - m.xc, dv = p.v - m.yc;
  const double inv = 1.0 / m.affine_det();
  return {inv * (du - m.d * dv), inv * (-m.e * du + m.c * dv)};
}

Pixel from_centred(const CameraModel& m, double u, double v) {
  return {m.c * u + m.d * v + m.xc, m.e * u + v + m.yc};
}

}  // namespace

void CameraModel::validate() const {
  if (poly_coeffs.empty()) throw InvalidArgument("camera model: empty polynomial");
  if (poly_coeffs[0] == 0.0) throw InvalidArgument("camera model: a0 must be non-zero");
  for (double a : poly_coeffs)
    if (!std::isfinite(a)) throw InvalidArgument("camera model: non-finite coefficient");
  if (width <= 0 || height <= 0) throw InvalidArgument("camera model: image size must be positive");
  if (!(xc > 0 && xc < width && yc > 0 && yc < height))
    throw InvalidArgument("camera model: centre must lie strictly inside the image");
  if (!std::isfinite(affine_det()) || std::abs(affine_det()) < 1e-12)
    throw InvalidArgument("camera model: affine matrix is singular");
}

double CameraModel::poly(double rho) const {
  double acc = 0.0;
  for (auto it = poly_coeffs.rbegin(); it != poly_coeffs.rend(); ++it) acc = acc * rho + *it;
  return acc;
}

double CameraModel::inscribed_radius() const {
  return std::min({xc, yc, width - 1 - xc, height - 1 - yc});
}

CameraModel parse_calibration(std::string_view text) {
  enum class Section { None, Direct, Inverse, Center, Affine, Size };
  std::optional<std::vector<double>> direct, inverse, center, affine, size;

  auto section_name = [](Section s) -> std::string {
    switch (s) {
      case Section::Direct: return "polynomial";
      case Section::Inverse: return "inverse polynomial";
      case Section::Center: return "center";
      case Section::Affine: return "affine";
      case Section::Size: return "image size";
      default: return "preamble";
    }
  };

  Section pending = Section::None;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line[0] == '#') {
      const std::string l = lower(line);
      if (l.find("direct") != std::string::npos) pending = Section::Direct;
      else if (l.find("inverse") != std::string::npos) pending = Section::Inverse;
      else if (l.find("center") != std::string::npos || l.find("centre") != std::string::npos)
        pending = Section::Center;
      else if (l.find("affine") != std::string::npos) pending = Section::Affine;
      else if (l.find("image size") != std::string::npos) pending = Section::Size;
      else pending = Section::None;
      continue;
    }
    if (pending == Section::None) throw ParseError("preamble", "data line outside a known section: '" + line + "'");
    const std::string name = section_name(pending);
    auto nums = parse_numbers(line, name);
    switch (pending) {
      case Section::Direct: direct = parse_counted(nums, name); break;
      case Section::Inverse: inverse = parse_counted(nums, name); break;
      case Section::Center: center = nums; break;
      case Section::Affine: affine = nums; break;
      case Section::Size: size = nums; break;
      case Section::None: break;
    }
    pending = Section::None;
  }

  if (!direct) throw ParseError("polynomial", "section missing");
  if (!center) throw ParseError("center", "section missing");
  if (!affine) throw ParseError("affine", "section missing");
  if (!size) throw ParseError("image size", "section missing");
  if (center->size() != 2) throw ParseError("center", "expected 2 values (row column)");
  if (affine->size() != 3) throw ParseError("affine", "expected 3 values (c d e)");
  if (size->size() != 2) throw ParseError("image size", "expected 2 values (height width)");

  CameraModel m;
  m.poly_coeffs = *direct;
  if (inverse) m.inverse_poly = *inverse;
  m.yc = (*center)[0];
  m.xc = (*center)[1];
  m.c = (*affine)[0];
  m.d = (*affine)[1];
  m.e = (*affine)[2];
  const double h = (*size)[0], w = (*size)[1];
  if (h != std::floor(h) || w != std::floor(w)) throw ParseError("image size", "dimensions must be integers");
  m.height = static_cast<int>(h);
  m.width = static_cast<int>(w);

  try {
    m.validate();
  } catch (const InvalidArgument& err) {
    const std::string what = err.what();
    std::string section = "polynomial";
    if (what.find("centre") != std::string::npos) section = "center";
    else if (what.find("affine") != std::string::npos) section = "affine";
    else if (what.find("size") != std::string::npos) section = "image size";
    throw ParseError(section, what);
  }
  return m;
}

CameraModel load_calibration(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open calibration file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_calibration(ss.str());
}

std::string serialize_calibration(const CameraModel& m) {
  std::ostringstream out;
  auto counted = [&](const std::vector<double>& v) {
    out << v.size();
    for (double a : v) out << " " << fmt_e(a);
    out << " \n\n";
  };
  out << kDirectHeader << "\n\n";
  counted(m.poly_coeffs);
  if (!m.inverse_poly.empty()) {
    out << kInverseHeader << "\n\n";
    counted(m.inverse_poly);
  }
  out << kCenterHeader << "\n\n" << fmt_e(m.yc) << " " << fmt_e(m.xc) << "\n\n";
  out << kAffineHeader << "\n\n" << fmt_e(m.c) << " " << fmt_e(m.d) << " " << fmt_e(m.e) << "\n\n";
  out << kSizeHeader << "\n\n" << m.height << " " << m.width << "\n";
  return out.str();
}

Ray pixel_to_ray_unchecked(const CameraModel& m, const Pixel& p) {
  const Eigen::Vector2d uv = to_centred(m, p);
  const Ray r(uv.x(), uv.y(), m.poly(uv.norm()));
  const double n = r.norm();
  if (!(n >= 1e-12)) throw DegenerateRayError("ray has near-zero norm");
  return r / n;
}

Ray pixel_to_ray(const CameraModel& m, const Pixel& p) {
  if (!(p.u >= 0 && p.v >= 0 && p.u <= m.width - 1 && p.v <= m.height - 1))
    throw InvalidArgument("pixel outside image bounds");
  return pixel_to_ray_unchecked(m, p);
}

Pixel ray_to_pixel(const CameraModel& m, const Ray& ray) {
  const double n = ray.norm();
  if (!(n > 0)) throw DegenerateRayError("zero ray");
  const Ray r = ray / n;
  const double rxy = std::hypot(r.x(), r.y());
  const double a0 = m.poly_coeffs.front();

  if (rxy < 1e-15) {
    if ((r.z() > 0) == (a0 > 0)) return {m.xc, m.yc};
    throw OutOfFovError("ray points away from the optical axis direction of the lens");
  }

  double rho_max = 0.0;
  for (const Pixel corner : {Pixel{0, 0}, Pixel{double(m.width - 1), 0}, Pixel{0, double(m.height - 1)},
                             Pixel{double(m.width - 1), double(m.height - 1)}})
    rho_max = std::max(rho_max, to_centred(m, corner).norm());

  auto g = [&](double rho) { return m.poly(rho) * rxy - r.z() * rho; };
  // |g| below this counts as a root when found by minimisation.
  const double zero_tol = 1e-9 * (std::abs(a0) * rxy + std::abs(r.z()) * rho_max);

  std::vector<double> roots;
  const double step = rho_max / kRootScanIntervals;
  std::vector<double> gs(kRootScanIntervals + 1);
  for (int i = 0; i <= kRootScanIntervals; ++i) gs[i] = g(i * step);

  for (int i = 0; i < kRootScanIntervals; ++i) {
    double lo = i * step, hi = (i + 1) * step;
    double glo = gs[i], ghi = gs[i + 1];
    if (glo == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if ((glo < 0) == (ghi < 0)) continue;
    if (ghi == 0.0) continue;  // picked up as the next interval's left end
    while (hi - lo > kBisectionTol) {
      const double mid = 0.5 * (lo + hi);
      const double gm = g(mid);
      if ((gm < 0) == (glo < 0)) {
        lo = mid;
        glo = gm;
      } else {
        hi = mid;
      }
    }
    roots.push_back(0.5 * (lo + hi));
  }
  if (gs.back() == 0.0) roots.push_back(rho_max);

  // Tangent roots do not change sign; look for local minima of |g| that touch zero.
  for (int i = 1; i < kRootScanIntervals; ++i) {
    const double a = std::abs(gs[i - 1]), b = std::abs(gs[i]), c = std::abs(gs[i + 1]);
    if (!(b <= a && b <= c)) continue;
    if ((gs[i - 1] < 0) != (gs[i + 1] < 0) || gs[i] == 0.0) continue;
    double lo = (i - 1) * step, hi = (i + 1) * step;
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    while (hi - lo > kBisectionTol) {
      const double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
      if (std::abs(g(x1)) < std::abs(g(x2))) hi = x2;
      else lo = x1;
    }
    const double rho = 0.5 * (lo + hi);
    if (std::abs(g(rho)) <= zero_tol) roots.push_back(rho);
  }

  std::sort(roots.begin(), roots.end());
  std::vector<double> unique;
  for (double rt : roots)
    if (unique.empty() || rt - unique.back() > 1e-6 * std::max(1.0, rho_max)) unique.push_back(rt);

  if (unique.empty()) throw OutOfFovError("no radius in [0, rho_max] projects to this ray");
  if (unique.size() > 1) {
    std::ostringstream msg;
    msg << "ray projects to " << unique.size() << " radii:";
    for (double rt : unique) msg << " " << rt;
    throw AmbiguousRayError(unique, msg.str());
  }
  const double rho = unique.front();
  return from_centred(m, rho * r.x() / rxy, rho * r.y() / rxy);
}

}  // namespace omnifmi
