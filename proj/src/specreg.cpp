#include "omnifmi/specreg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "omnifmi/error.hpp"
#include "omnifmi/fft.hpp"

namespace omnifmi {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

void require_square_pow2(const Image& patch) {
  if (patch.width != patch.height || !is_power_of_two(patch.width))
    throw InvalidArgument("patch must be square with power-of-two side");
}

std::vector<double> hann(int n) {
  std::vector<double> w(n);
  for (int i = 0; i < n; ++i) w[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * i / n));
  return w;
}

// Forward spectrum of a patch; optionally mean-removed and Hann-windowed.
ComplexGrid patch_spectrum(const Image& patch, bool window, bool remove_mean) {
  double mean = 0.0;
  if (remove_mean) {
    for (double v : patch.data) mean += v;
    mean /= static_cast<double>(patch.size());
  }
  ComplexGrid g(patch.width, patch.height);
  if (window) {
    const auto wx = hann(patch.width), wy = hann(patch.height);
    for (int y = 0; y < patch.height; ++y)
      for (int x = 0; x < patch.width; ++x) g(x, y) = (patch(x, y) - mean) * wx[x] * wy[y];
  } else {
    for (size_t i = 0; i < patch.size(); ++i) g.data[i] = patch.data[i] - mean;
  }
  fft::forward(g);
  return g;
}

RealGrid shifted_magnitude(const ComplexGrid& spectrum) {
  RealGrid mag(spectrum.width, spectrum.height);
  for (size_t i = 0; i < spectrum.size(); ++i) mag.data[i] = std::sqrt(std::norm(spectrum.data[i]));
  return fft::fftshift(mag);
}

int wrap_index(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Signed shift in (-n/2, n/2].
int signed_shift(int i, int n) { return i > n / 2 ? i - n : i; }

double parabolic_offset(double left, double centre, double right) {
  const double denom = left - 2.0 * centre + right;
  if (!(std::abs(denom) > 1e-15)) return 0.0;
  return std::clamp(0.5 * (left - right) / denom, -0.5, 0.5);
}

// Raised-cosine roll-off from 0.6 * cutoff to cutoff (cycles per pixel), in
// unshifted FFT layout. Empty when the cutoff passes every bin.
RealGrid low_pass_weight(int n, double cutoff) {
  if (!(cutoff > 0.0) || cutoff >= std::sqrt(0.5)) return {};
  const double f0 = 0.6 * cutoff;
  RealGrid w(n, n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double f = std::hypot(signed_shift(x, n), signed_shift(y, n)) / n;
      w(x, y) = f <= f0 ? 1.0 : (f >= cutoff ? 0.0 : 0.5 * (1.0 + std::cos(kPi * (f - f0) / (cutoff - f0))));
    }
  return w;
}

// Magnitude fed to the log-polar stage. The emphasis filter
// (1 - c)(2 - c), c = cos(pi fx) cos(pi fy), damps the low-frequency lobe that
// otherwise dominates the angular profile; the log compresses what is left.
RealGrid descriptor_input(const ComplexGrid& spectrum, const SpectralConfig& config) {
  RealGrid m = shifted_magnitude(spectrum);
  const int w = m.width, h = m.height;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double& v = m(x, y);
      if (config.high_pass) {
        const double c = std::cos(kPi * (x - w / 2) / w) * std::cos(kPi * (y - h / 2) / h);
        v *= (1.0 - c) * (2.0 - c);
      }
      if (config.log_magnitude) v = std::log1p(v);
    }
  return m;
}

}  // namespace

double LogPolarGeometry::log_step() const { return std::log(rho_hi / rho_lo) / radial_bins; }

double LogPolarGeometry::angle_step() const { return kPi / angular_bins; }

LogPolarGeometry make_log_polar_geometry(int patch_size, const SpectralConfig& config) {
  LogPolarGeometry g;
  g.radial_bins = config.radial_bins > 0 ? config.radial_bins : patch_size;
  g.angular_bins = config.angular_bins > 0 ? config.angular_bins : patch_size;
  g.rho_lo = config.rho_lo;
  g.rho_hi = patch_size / 2.0;
  if (g.radial_bins < 8 || g.angular_bins < 8) throw InvalidArgument("log-polar grid needs at least 8x8 bins");
  if (!(g.rho_lo > 0 && g.rho_lo < g.rho_hi)) throw InvalidArgument("log-polar radius range is empty");
  return g;
}

RealGrid magnitude_spectrum(const Image& patch, bool window) {
  require_square_pow2(patch);
  return shifted_magnitude(patch_spectrum(patch, window, false));
}

RealGrid log_polar(const RealGrid& mag, const LogPolarGeometry& geo) {
  RealGrid out(geo.radial_bins, geo.angular_bins);
  const double cx = mag.width / 2, cy = mag.height / 2;
  const double step = geo.log_step(), dtheta = geo.angle_step();
  std::vector<double> radii(geo.radial_bins);
  for (int k = 0; k < geo.radial_bins; ++k) radii[k] = geo.rho_lo * std::exp(k * step);
  for (int j = 0; j < geo.angular_bins; ++j) {
    const double ct = std::cos(j * dtheta), st = std::sin(j * dtheta);
    for (int k = 0; k < geo.radial_bins; ++k)
      out(k, j) = sample_bilinear(mag, cx + radii[k] * ct, cy + radii[k] * st);
  }
  return out;
}

FmiDescriptor fmi_descriptor(const RealGrid& mag, const LogPolarGeometry& geo) {
  FmiDescriptor d{geo, fft::to_complex(log_polar(mag, geo))};
  fft::forward(d.spectrum);
  return d;
}

PomfResult pomf(const ComplexGrid& a, const ComplexGrid& b, const PomfSearch& search) {
  return pomf_weighted(a, b, search, nullptr);
}

PomfResult pomf_weighted(const ComplexGrid& a, const ComplexGrid& b, const PomfSearch& search, const RealGrid* weight) {
  if (a.width != b.width || a.height != b.height) throw InvalidArgument("pomf: size mismatch");
  const int w = a.width, h = a.height;
  ComplexGrid q(w, h);
  bool any = false;
  for (size_t i = 0; i < q.size(); ++i) {
    const std::complex<double> cp = std::conj(a.data[i]) * b.data[i];
    const double mag = std::sqrt(std::norm(cp));  // hypot is slow here
    if (mag < 1e-12) {
      q.data[i] = 0.0;
    } else {
      q.data[i] = cp / mag * (weight ? weight->data[i] : 1.0);
      any = true;
    }
  }
  if (!any) throw DegenerateSignalError("cross-power spectrum is zero everywhere");
  fft::inverse(q);

  PomfResult res;
  res.surface = RealGrid(w, h);
  double energy = 0.0;
  for (size_t i = 0; i < q.size(); ++i) {
    res.surface.data[i] = q.data[i].real();
    energy += res.surface.data[i] * res.surface.data[i];
  }
  const RealGrid& r = res.surface;

  auto allowed = [&](int x, int y) {
    return std::abs(signed_shift(x, w)) <= search.max_abs_dx && std::abs(signed_shift(y, h)) <= search.max_abs_dy;
  };

  int px = -1, py = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (allowed(x, y) && r(x, y) > best) {
        best = r(x, y);
        px = x;
        py = y;
      }
  if (px < 0) throw InvalidArgument("pomf: empty search window");

  double second = -std::numeric_limits<double>::infinity();
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      if (!allowed(x, y)) continue;
      const int ddx = std::abs(signed_shift(wrap_index(x - px, w), w));
      const int ddy = std::abs(signed_shift(wrap_index(y - py, h), h));
      if (ddx <= 2 && ddy <= 2) continue;
      second = std::max(second, r(x, y));
    }

  double local = 0.0;
  for (int oy = -1; oy <= 1; ++oy)
    for (int ox = -1; ox <= 1; ++ox) {
      const double v = r(wrap_index(px + ox, w), wrap_index(py + oy, h));
      local += v * v;
    }
  res.peak_ratio = energy > 0 ? std::clamp(local / energy, 0.0, 1.0) : 0.0;
  const double floor = 1e-9 * std::max(best, 1e-300);
  res.peak_noise_ratio = best > 0 ? best / std::max(second, floor) : 0.0;

  const double ox = parabolic_offset(r(wrap_index(px - 1, w), py), best, r(wrap_index(px + 1, w), py));
  const double oy = parabolic_offset(r(px, wrap_index(py - 1, h)), best, r(px, wrap_index(py + 1, h)));
  res.dx = signed_shift(px, w) + ox;
  res.dy = signed_shift(py, h) + oy;
  return res;
}

Image warp_similarity(const Image& src, const TileMotion& m, const Pixel& center, int out_width, int out_height,
                      const Pixel& origin) {
  Image out(out_width, out_height);
  const double alpha = m.s * std::cos(m.theta), beta = m.s * std::sin(m.theta);
  for (int y = 0; y < out_height; ++y)
    for (int x = 0; x < out_width; ++x) {
      const double dx = x - center.u, dy = y - center.v;
      const double sx = alpha * dx - beta * dy + center.u + m.tx + origin.u;
      const double sy = beta * dx + alpha * dy + center.v + m.ty + origin.v;
      out(x, y) = sample_bilinear(src, sx, sy);
    }
  return out;
}

Registration register_patches(const Image& a1, const Image& a2, const RegistrationParams& params) {
  require_square_pow2(a1);
  if (a2.width != a1.width || a2.height != a1.height) throw InvalidArgument("register: patch sizes differ");
  const int n = a1.width;
  const bool window = params.spectral.window;
  const LogPolarGeometry geo = make_log_polar_geometry(n, params.spectral);
  const Pixel centre{n / 2.0, n / 2.0};

  Registration out;
  const RealGrid lp = low_pass_weight(n, params.spectral.translation_cutoff);
  try {
    const ComplexGrid s1 = patch_spectrum(a1, window, true);
    const ComplexGrid s2 = patch_spectrum(a2, window, true);
    const FmiDescriptor d1 = fmi_descriptor(descriptor_input(s1, params.spectral), geo);
    const FmiDescriptor d2 = fmi_descriptor(descriptor_input(s2, params.spectral), geo);

    // Scale maps to a log-radial column shift, rotation to an angular row shift.
    PomfSearch search;
    search.max_abs_dx = std::max(std::abs(std::log(params.spectral.scale_max)),
                                 std::abs(std::log(params.spectral.scale_min))) /
                        geo.log_step();
    PomfResult rs = pomf(d1.spectrum, d2.spectrum, search);
    const double scale = std::exp(rs.dx * geo.log_step());
    const double theta0 = -rs.dy * geo.angle_step();
    out.rs_peak_ratio = rs.peak_ratio;
    out.rs_peak_noise_ratio = rs.peak_noise_ratio;
    if (params.keep_surfaces) out.rs_surface = std::move(rs.surface);

    PomfResult best_t;
    double best_theta = theta0;
    bool have = false;
    for (double theta : {theta0, theta0 + kPi}) {
      if (theta > kPi) theta -= 2.0 * kPi;
      TileMotion inverse;
      inverse.s = 1.0 / scale;
      inverse.theta = -theta;
      const Image derotated = warp_similarity(a2, inverse, centre, n, n);
      PomfResult t = pomf_weighted(s1, patch_spectrum(derotated, window, true), {}, lp.empty() ? nullptr : &lp);
      if (!have || t.peak_ratio > best_t.peak_ratio) {
        best_t = std::move(t);
        best_theta = theta;
        have = true;
      }
    }

    out.motion.s = scale;
    out.motion.theta = best_theta;
    // The derotated patch is a1 shifted by -t.
    out.motion.tx = -best_t.dx;
    out.motion.ty = -best_t.dy;
    out.motion.peak_ratio = best_t.peak_ratio;
    out.motion.peak_noise_ratio = best_t.peak_noise_ratio;
    if (params.keep_surfaces) out.translation_surface = std::move(best_t.surface);
  } catch (const DegenerateSignalError&) {
    out.accepted = false;
    out.rejected_at = RejectStage::Degenerate;
    return out;
  }

  if (out.rs_peak_ratio < params.th_pr || out.rs_peak_noise_ratio < params.th_pnr) {
    out.rejected_at = RejectStage::RotationScale;
  } else if (out.motion.peak_ratio < params.th_pr || out.motion.peak_noise_ratio < params.th_pnr) {
    out.rejected_at = RejectStage::Translation;
  }
  out.accepted = out.rejected_at == RejectStage::None;
  return out;
}

}  // namespace omnifmi
