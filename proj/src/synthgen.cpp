#include "omnifmi/synthgen.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>

#include "omnifmi/error.hpp"
#include "omnifmi/pose.hpp"

namespace omnifmi {

namespace {

constexpr double kPi = std::numbers::pi;

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::array<double, 4> catmull_rom(double t) {
  const double t2 = t * t, t3 = t2 * t;
  return {0.5 * (-t3 + 2 * t2 - t), 0.5 * (3 * t3 - 5 * t2 + 2), 0.5 * (-3 * t3 + 4 * t2 + t), 0.5 * (t3 - t2)};
}

void add_octave(RealGrid& acc, const NoiseOctave& oct, std::mt19937_64& rng, bool periodic_x) {
  const int w = acc.width, h = acc.height;
  int lw;
  double cell_x;
  if (periodic_x) {
    lw = std::max(1, static_cast<int>(std::lround(w / oct.cell)));
    cell_x = static_cast<double>(w) / lw;
  } else {
    lw = static_cast<int>(std::ceil(w / oct.cell)) + 4;
    cell_x = oct.cell;
  }
  const int lh = static_cast<int>(std::ceil(h / oct.cell)) + 4;
  RealGrid lattice(lw, lh);
  for (double& v : lattice.data) v = 2.0 * uniform01(rng) - 1.0;

  auto lx = [&](int i) { return periodic_x ? ((i % lw) + lw) % lw : std::clamp(i + 1, 0, lw - 1); };

  // Interpolate along x for every lattice row, then along y.
  RealGrid rows(w, lh);
  for (int x = 0; x < w; ++x) {
    const double g = x / cell_x;
    const int i = static_cast<int>(std::floor(g));
    const auto wt = catmull_rom(g - i);
    for (int j = 0; j < lh; ++j) {
      double s = 0.0;
      for (int m = 0; m < 4; ++m) s += wt[m] * lattice(lx(i - 1 + m), j);
      rows(x, j) = s;
    }
  }
  for (int y = 0; y < h; ++y) {
    const double g = y / oct.cell;
    const int i = static_cast<int>(std::floor(g));
    const auto wt = catmull_rom(g - i);
    for (int x = 0; x < w; ++x) {
      double s = 0.0;
      for (int m = 0; m < 4; ++m) s += wt[m] * rows(x, std::clamp(i + m, 0, lh - 1));
      acc(x, y) += oct.amplitude * s;
    }
  }
}

}  // namespace

Image band_limited_noise(int width, int height, const std::vector<NoiseOctave>& octaves, uint64_t seed,
                         bool periodic_x) {
  if (width <= 0 || height <= 0) throw InvalidArgument("noise: size must be positive");
  RealGrid acc(width, height);
  std::mt19937_64 rng(seed);
  for (const auto& oct : octaves) {
    if (!(oct.cell >= 1.0)) throw InvalidArgument("noise: octave cell must be >= 1 pixel");
    add_octave(acc, oct, rng, periodic_x);
  }
  return normalize_to_unit(acc);
}

SyntheticScene SyntheticScene::make(uint64_t seed, int omni_width, int omni_height) {
  SyntheticScene scene;
  scene.seed = seed;
  const int tw = 4 * omni_width, th = 4 * omni_height;
  const double base = tw / 64.0;
  scene.texture = band_limited_noise(tw, th, {{base, 1.0}, {base / 2, 0.6}, {base / 4, 0.35}}, seed, true);
  return scene;
}

CameraModel synthetic_camera(int width, int height) {
  CameraModel m;
  m.width = width;
  m.height = height;
  m.xc = width / 2.0;
  m.yc = height / 2.0;
  const double k = std::min(width, height) / 768.0;
  m.poly_coeffs = {-137.6 * k, 0.0, 0.0011 / k};
  m.validate();
  return m;
}

Image render_omni(const SyntheticScene& scene, const CameraModel& model, const Eigen::Matrix3d& orientation,
                  double noise_sigma, uint64_t noise_seed) {
  model.validate();
  const Image& tex = scene.texture;
  const Eigen::Matrix3d to_world = orientation.transpose();
  Image out(model.width, model.height);
  for (int y = 0; y < model.height; ++y)
    for (int x = 0; x < model.width; ++x) {
      const Eigen::Vector3d d = to_world * pixel_to_ray_unchecked(model, {double(x), double(y)});
      const double lon = std::atan2(d.y(), d.x());
      const double lat = std::asin(std::clamp(d.z(), -1.0, 1.0));
      const double tx = (lon + kPi) / (2 * kPi) * tex.width - 0.5;
      const double ty = std::clamp((kPi / 2 - lat) / kPi * tex.height - 0.5, 0.0, tex.height - 1.0);
      out(x, y) = sample_bilinear_wrap_x(tex, tx, ty);
    }
  if (noise_sigma > 0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> gauss(0.0, noise_sigma);
    for (double& v : out.data) v = std::clamp(v + gauss(rng), 0.0, 1.0);
  }
  return out;
}

std::vector<Eigen::Matrix3d> constant_rate_trajectory(int frames, double roll_rate, double pitch_rate,
                                                      double yaw_rate) {
  if (frames < 1) throw InvalidArgument("trajectory needs at least one frame");
  const Eigen::Matrix3d step = euler_to_matrix({roll_rate, pitch_rate, yaw_rate});
  std::vector<Eigen::Matrix3d> poses{Eigen::Matrix3d::Identity()};
  for (int k = 1; k < frames; ++k) poses.push_back(poses.back() * step);
  return poses;
}

std::vector<Eigen::Matrix3d> random_walk_trajectory(int frames, double max_step, uint64_t seed) {
  if (frames < 1) throw InvalidArgument("trajectory needs at least one frame");
  std::mt19937_64 rng(seed);
  std::vector<Eigen::Matrix3d> poses{Eigen::Matrix3d::Identity()};
  for (int k = 1; k < frames; ++k) {
    // Uniform axis on the sphere.
    const double z = 2.0 * uniform01(rng) - 1.0, phi = 2.0 * kPi * uniform01(rng);
    const double r = std::sqrt(1.0 - z * z);
    const Eigen::Vector3d axis(r * std::cos(phi), r * std::sin(phi), z);
    const double angle = max_step * uniform01(rng);
    poses.push_back(poses.back() * Eigen::AngleAxisd(angle, axis).toRotationMatrix());
  }
  return poses;
}

SyntheticSequence render_sequence(const SyntheticScene& scene, const CameraModel& model,
                                  const std::vector<Eigen::Matrix3d>& poses, double noise_sigma,
                                  double frame_period) {
  if (poses.empty()) throw InvalidArgument("render_sequence: empty trajectory");
  SyntheticSequence seq;
  for (size_t k = 0; k < poses.size(); ++k) {
    seq.frames.push_back(render_omni(scene, model, poses[k].transpose(), noise_sigma, scene.seed + 1000 + k));
    TrajectoryEntry e;
    e.frame_index = static_cast<int>(k);
    e.timestamp = k * frame_period;
    e.orientation = poses[k];
    e.relative = k == 0 ? Eigen::Matrix3d::Identity() : Eigen::Matrix3d(poses[k - 1].transpose() * poses[k]);
    seq.ground_truth.entries.push_back(e);
  }
  return seq;
}

void write_sequence(const std::string& dir, const SyntheticSequence& seq, const CameraModel& model) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root / "frames", ec);
  if (ec) throw IoError("cannot create " + (root / "frames").string() + ": " + ec.message());
  for (size_t k = 0; k < seq.frames.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.png", k);
    save_image((root / "frames" / name).string(), seq.frames[k], 16);
  }
  write_ground_truth_csv((root / "gt.csv").string(), seq.ground_truth);
  std::ofstream calib(root / "calib.txt");
  if (!calib) throw IoError("cannot write calibration to " + dir);
  calib << serialize_calibration(model);
}

}  // namespace omnifmi
