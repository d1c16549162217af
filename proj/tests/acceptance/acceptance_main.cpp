// Acceptance run: one PASS/FAIL line per criterion. Exit status is non-zero
// when a hard criterion fails; the timing check is advisory and the real-data
// check only runs when OMNIFMI_MPI_OMNI_DIR points at a dataset.

#include <Eigen/Geometry>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "omnifmi/error.hpp"
#include "omnifmi/flowfield.hpp"
#include "omnifmi/pipeline.hpp"
#include "omnifmi/pose.hpp"
#include "omnifmi/specreg.hpp"
#include "omnifmi/synthgen.hpp"
#include "omnifmi/trajectory.hpp"
#include "omnifmi/unwrap.hpp"

using namespace omnifmi;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

using Clock = std::chrono::steady_clock;
double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

enum class Outcome { Pass, Fail, NotRun };

struct Line {
  int id;
  std::string name;
  Outcome outcome;
  std::string detail;
  bool advisory = false;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
}

// 1: similarity recovery on warped textured patches.
Line spectral_registration() {
  const auto t0 = Clock::now();
  const int n = 128, cases = 200;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0, 1);
  int good = 0;
  double worst_theta = 0;
  for (int i = 0; i < cases; ++i) {
    const Image tex = band_limited_noise(3 * n, 3 * n, {{8, 1.0}, {4, 0.5}, {16, 0.7}}, 1000 + i);
    TileMotion m;
    m.theta = (u(rng) * 60 - 30) * kDeg;
    m.s = std::exp(std::log(0.8) + u(rng) * (std::log(1.25) - std::log(0.8)));
    const double r = u(rng) * n / 8, a = u(rng) * 2 * kPi;
    m.tx = r * std::cos(a);
    m.ty = r * std::sin(a);
    Image a1(n, n);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) a1(x, y) = tex(x + n, y + n);
    const Image a2 = warp_similarity(tex, m, {n / 2.0, n / 2.0}, n, n, {double(n), double(n)});
    const TileMotion est = register_patches(a1, a2).motion;
    const double dth = std::abs(std::remainder(est.theta - m.theta, 2 * kPi)) / kDeg;
    const bool ok = dth <= 0.5 && std::abs(est.s - m.s) <= 0.02 * m.s &&
                    std::hypot(est.tx - m.tx, est.ty - m.ty) <= 0.5;
    good += ok;
    worst_theta = std::max(worst_theta, dth);
  }
  const int need = (cases * 95 + 99) / 100;
  return {1, "spectral registration", good >= need ? Outcome::Pass : Outcome::Fail,
          fmt("%d/%d within tolerance (need %d), %.1f s", good, cases, need, since(t0))};
}

// 2: tile-motion pixel mapping against hand values and a matrix re-evaluation.
Line pixel_mapping() {
  const auto t0 = Clock::now();
  double worst = 0;
  auto check = [&](const Pixel& got, double u, double v) {
    worst = std::max({worst, std::abs(got.u - u), std::abs(got.v - v)});
  };
  TileMotion t;
  t.tx = 5;
  t.ty = 3;
  check(correspond_pixel(t, {64, 64}, {10, 20}), 15, 23);
  TileMotion r;
  r.theta = kPi / 2;
  check(correspond_pixel(r, {0, 0}, {7, 2}), -2, 7);
  TileMotion f;
  f.theta = 1.1;
  check(correspond_pixel(f, {30, 40}, {30, 40}), 30, 40);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  double worst_rand = 0;
  for (int i = 0; i < 1000; ++i) {
    TileMotion m;
    m.s = 1 + 0.3 * u(rng);
    m.theta = kPi * u(rng);
    m.tx = 30 * u(rng);
    m.ty = 30 * u(rng);
    const Pixel c{128 + 100 * u(rng), 128 + 100 * u(rng)}, p{300 * u(rng), 300 * u(rng)};
    const Eigen::Vector2d e = Eigen::Vector2d(c.u, c.v) +
                              m.s * Eigen::Rotation2Dd(m.theta).toRotationMatrix() * Eigen::Vector2d(p.u - c.u, p.v - c.v) +
                              Eigen::Vector2d(m.tx, m.ty);
    const Pixel g = correspond_pixel(m, c, p);
    worst_rand = std::max({worst_rand, std::abs(g.u - e.x()), std::abs(g.v - e.y())});
  }
  const bool ok = worst < 1e-12 && worst_rand < 1e-9;
  return {2, "tile motion pixel mapping", ok ? Outcome::Pass : Outcome::Fail,
          fmt("examples max err %.1e, 1000 random max err %.1e px, %.3f s", worst, worst_rand, since(t0))};
}

// 3: pure rotations from noise-free rays, with and without 30% outliers.
Line rotation_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(0, 10 * kDeg);
  double worst = 0;
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Matrix3d r = Eigen::AngleAxisd(ang(rng), random_unit(rng)).toRotationMatrix();
    std::vector<RayCorrespondence> c;
    for (int i = 0; i < 100; ++i) {
      const Eigen::Vector3d p2 = random_unit(rng);
      c.push_back({r * p2, p2});
    }
    if (trial % 2 == 1)
      for (int i = 0; i < 30; ++i) c[i].p1 = random_unit(rng);
    try {
      worst = std::max(worst, geodesic_distance(estimate_pose(c).rotation, r));
    } catch (const Error&) {
      ++failures;
    }
  }
  const bool ok = failures == 0 && worst < 1e-4;
  return {3, "pure-rotation pose oracle", ok ? Outcome::Pass : Outcome::Fail,
          fmt("100 trials (50 with 30%% outliers), worst error %.2e rad, %d failed, %.1f s", worst, failures,
              since(t0))};
}

struct Walk {
  CameraModel model = synthetic_camera(1024, 768);
  SyntheticScene scene = SyntheticScene::make(2024, 1024, 768);
  SyntheticSequence seq;
};

// 4: 20-frame random walk at 1024x768.
Line end_to_end(const Walk& w) {
  const Pipeline pipeline(w.model, PipelineConfig{});
  const auto t0 = Clock::now();
  const Trajectory est = run_sequence(pipeline, w.seq.frames);
  const double secs = since(t0);
  const auto& gt = w.seq.ground_truth.entries;
  double worst_pair = 0;
  for (size_t k = 1; k < est.size(); ++k)
    worst_pair = std::max(worst_pair, geodesic_distance(est.entries[k].relative, gt[k].relative));
  const double final_err = geodesic_distance(est.entries.back().orientation, gt.back().orientation);
  const bool ok = worst_pair <= 0.3 * kDeg && final_err <= 1.5 * kDeg && secs < 60.0;
  return {4, "end-to-end synthetic walk", ok ? Outcome::Pass : Outcome::Fail,
          fmt("worst pair %.3f deg (<= 0.3), final %.3f deg (<= 1.5), pipeline %.1f s (< 60)", worst_pair / kDeg,
              final_err / kDeg, secs)};
}

// 5: real driving sequence, only when the data is present.
Line real_data() {
  const char* dir = std::getenv("OMNIFMI_MPI_OMNI_DIR");
  Line line{5, "MPI-omni sequence", Outcome::NotRun, "", false};
  if (!dir || !*dir) {
    line.detail = "dataset not available (set OMNIFMI_MPI_OMNI_DIR)";
    return line;
  }
  try {
    const fs::path root(dir);
    const fs::path calib = fs::exists(root / "calib.txt") ? root / "calib.txt" : root / "calib_results.txt";
    const fs::path frames = fs::exists(root / "frames.txt") ? root / "frames.txt" : root / "frames";
    DatasetManifest m = make_manifest(calib.string(), frames.string());
    if (m.frames.size() > 200) {
      m.frames.resize(200);
      if (m.timestamps.size() > 200) m.timestamps.resize(200);
    }
    const Trajectory est = run_sequence(m, PipelineConfig{});
    const Trajectory gt = fs::exists(root / "gt.csv")
                              ? read_trajectory_csv((root / "gt.csv").string())
                              : read_kitti_poses((root / "poses.txt").string(),
                                                 fs::exists(root / "times.txt")
                                                     ? std::optional<std::string>((root / "times.txt").string())
                                                     : std::nullopt);
    const EvaluationReport r = evaluate(est, gt);
    const bool ok = r.roll.rmse <= 2 * 0.058 && r.pitch.rmse <= 2 * 0.107 && r.yaw.rmse <= 2 * 0.075;
    line.outcome = ok ? Outcome::Pass : Outcome::Fail;
    line.detail = fmt("RMSE roll %.3f pitch %.3f yaw %.3f rad (limits 0.116/0.214/0.150), %d frames", r.roll.rmse,
                      r.pitch.rmse, r.yaw.rmse, r.aligned);
  } catch (const std::exception& e) {
    line.outcome = Outcome::Fail;
    line.detail = std::string("could not evaluate: ") + e.what();
  }
  return line;
}

// 6: per-pair runtime at 1024x768 (advisory).
Line throughput(const Walk& w) {
  const Pipeline pipeline(w.model, PipelineConfig{});
  std::vector<double> t;
  for (int i = 0; i < 3; ++i) {
    const auto t0 = Clock::now();
    pipeline.run_pair(w.seq.frames[0], w.seq.frames[1]);
    t.push_back(since(t0));
  }
  std::sort(t.begin(), t.end());
  Line l{6, "run_pair throughput", t[1] <= 0.5 ? Outcome::Pass : Outcome::Fail,
         fmt("median %.3f s per pair (<= 0.5), %u hardware threads, advisory", t[1],
             std::max(1u, std::thread::hardware_concurrency())),
         true};
  return l;
}

// 7: condensed versions of the module property suites.
Line invariants(const Walk& w) {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failed.push_back(what);
  };

  {  // magnitude spectrum ignores circular shifts
    const Image a = band_limited_noise(64, 64, {{8, 1.0}, {4, 0.5}}, 5);
    Image b(64, 64);
    for (int y = 0; y < 64; ++y)
      for (int x = 0; x < 64; ++x) b((x + 9) % 64, (y + 50) % 64) = a(x, y);
    const RealGrid ma = magnitude_spectrum(a, false), mb = magnitude_spectrum(b, false);
    double worst = 0;
    for (size_t i = 0; i < ma.size(); ++i) worst = std::max(worst, std::abs(ma.data[i] - mb.data[i]));
    expect(worst < 1e-6, "spectral translation invariance");
  }
  {  // unwrap coordinate round trip
    const PanoramaSpec spec = default_panorama_spec(w.model);
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uu(0, spec.width), vv(0, spec.height);
    double worst = 0;
    for (int i = 0; i < 10000; ++i) {
      const Pixel q{uu(rng), vv(rng)};
      const Pixel b = omni_to_pano_coords(spec, w.model.center(), pano_to_omni_coords(spec, w.model.center(), q));
      double du = std::abs(b.u - q.u);
      du = std::min(du, spec.width - du);
      worst = std::max({worst, du, std::abs(b.v - q.v)});
    }
    expect(worst < 1e-6, "unwrap round trip");
  }
  {  // yaw gives a uniform horizontal flow
    const Pipeline p(w.model, PipelineConfig{});
    const Eigen::Matrix3d yaw = Eigen::AngleAxisd(3 * kDeg, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    const Image p1 = p.unwrap(render_omni(w.scene, w.model, Eigen::Matrix3d::Identity()));
    const Image p2 = p.unwrap(render_omni(w.scene, w.model, yaw.transpose()));
    const FlowField f = build_flow_field(p1, p2, p.grid(), {});
    std::vector<double> du;
    for (const auto& e : f.entries)
      if (e.accepted) du.push_back(e.p2.u - e.p1.u);
    double mean = 0, var = 0;
    for (double d : du) mean += d;
    mean /= du.size();
    for (double d : du) var += (d - mean) * (d - mean);
    expect(du.size() >= 10 && std::sqrt(var / du.size()) < 0.5, "yaw equivariance");
  }
  {  // RANSAC determinism
    std::mt19937_64 rng(8);
    const Eigen::Matrix3d r = Eigen::AngleAxisd(0.1, random_unit(rng)).toRotationMatrix();
    std::vector<RayCorrespondence> c;
    std::uniform_real_distribution<double> depth(2, 10);
    for (int i = 0; i < 80; ++i) {
      const Eigen::Vector3d p2 = random_unit(rng);
      c.push_back({(r * (depth(rng) * p2) + Eigen::Vector3d(0.3, 0.1, 0.2)).normalized(), p2});
    }
    for (int i = 0; i < 24; ++i) c[i].p1 = random_unit(rng);
    PoseParams pp;
    pp.seed = 11;
    const RelativePose a = estimate_pose(c, pp), b = estimate_pose(c, pp);
    expect(a.rotation == b.rotation && a.inlier_count == b.inlier_count, "RANSAC determinism");
  }
  {  // RMSE against a direct re-evaluation
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> a(-0.3, 0.3);
    Trajectory est, gt;
    std::vector<Euler> ea, ga;
    for (int k = 0; k < 25; ++k) {
      ea.push_back(k ? Euler{a(rng), a(rng), a(rng)} : Euler{});
      ga.push_back(k ? Euler{a(rng), a(rng), a(rng)} : Euler{});
      TrajectoryEntry e;
      e.frame_index = k;
      e.orientation = euler_to_matrix(ea.back());
      est.entries.push_back(e);
      e.orientation = euler_to_matrix(ga.back());
      gt.entries.push_back(e);
    }
    const EvaluationReport rep = evaluate(est, gt);
    double s[3] = {0, 0, 0};
    for (int k = 0; k < 25; ++k) {
      const Euler x = rotation_to_euler(euler_to_matrix(ea[k])), y = rotation_to_euler(euler_to_matrix(ga[k]));
      const double d[3] = {wrap_angle(x.roll - y.roll), wrap_angle(x.pitch - y.pitch), wrap_angle(x.yaw - y.yaw)};
      for (int i = 0; i < 3; ++i) s[i] += d[i] * d[i];
    }
    const double mean = (std::sqrt(s[0] / 25) + std::sqrt(s[1] / 25) + std::sqrt(s[2] / 25)) / 3;
    expect(std::abs(rep.mean_rmse - mean) < 1e-12, "evaluation RMSE oracle");
  }

  std::string detail = failed.empty() ? "5/5 property checks hold" : "failed:";
  for (const auto& f : failed) detail += " " + f + ";";
  detail += fmt(" (full suites run under ctest), %.1f s", since(t0));
  return {7, "invariant suites", failed.empty() ? Outcome::Pass : Outcome::Fail, detail};
}

const char* label(Outcome o) {
  switch (o) {
    case Outcome::Pass:
      return "PASS";
    case Outcome::Fail:
      return "FAIL";
    default:
      return "NOT RUN";
  }
}

}  // namespace

int main() {
  std::vector<Line> lines;
  auto guarded = [&](int id, const std::string& name, const std::function<Line()>& fn) {
    try {
      lines.push_back(fn());
    } catch (const std::exception& e) {
      lines.push_back({id, name, Outcome::Fail, std::string("exception: ") + e.what()});
    }
    const Line& l = lines.back();
    std::printf("criterion %d %-28s %s  %s\n", l.id, l.name.c_str(), label(l.outcome), l.detail.c_str());
    std::fflush(stdout);
  };

  guarded(1, "spectral registration", spectral_registration);
  guarded(2, "tile motion pixel mapping", pixel_mapping);
  guarded(3, "pure-rotation pose oracle", rotation_oracle);

  Walk walk;
  walk.seq = render_sequence(walk.scene, walk.model, random_walk_trajectory(20, 2 * kDeg, 7));
  guarded(4, "end-to-end synthetic walk", [&] { return end_to_end(walk); });
  guarded(5, "MPI-omni sequence", real_data);
  guarded(6, "run_pair throughput", [&] {
    Line l = throughput(walk);
    return l;
  });
  lines.back().advisory = true;
  guarded(7, "invariant suites", [&] { return invariants(walk); });

  bool hard_fail = false;
  for (const auto& l : lines) hard_fail |= l.outcome == Outcome::Fail && !l.advisory;
  std::printf("acceptance: %s\n", hard_fail ? "FAIL" : "PASS");
  return hard_fail ? 1 : 0;
}
