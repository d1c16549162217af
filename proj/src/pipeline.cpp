#include "omnifmi/pipeline.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "omnifmi/error.hpp"

namespace fs = std::filesystem;

namespace omnifmi {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

PanoramaSpec spec_for(const CameraModel& model, const PipelineConfig& c) {
  PanoramaSpec spec = default_panorama_spec(model, c.rho_min, c.rho_max);
  spec.validate(&model);
  return spec;
}

TileGrid grid_for(const PanoramaSpec& spec, const PipelineConfig& c) {
  if (!(c.tile_size_frac > 0.0 && c.tile_size_frac <= 1.0)) throw ConfigError("tile size fraction must lie in (0, 1]");
  const int n = c.tile_size > 0 ? c.tile_size : default_tile_size(spec.width, spec.height, c.tile_size_frac);
  return make_grid(spec.width, spec.height, n, c.overlap);
}

bool is_frame_file(const fs::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".pgm";
}

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, Rgb color) {
  const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (y < 0 || y >= img.height) continue;
    img(((x % img.width) + img.width) % img.width, y) = color;
  }
}

}  // namespace

Pipeline::Pipeline(const CameraModel& model, const PipelineConfig& config)
    : model_(model), config_(config), map_(model, spec_for(model, config)), grid_(grid_for(map_.spec(), config)) {
  if (config.jobs < 1) throw ConfigError("jobs must be at least 1");
  if (!(config.ransac_thresh > 0.0)) throw ConfigError("RANSAC threshold must be positive");
  if (!(config.th_pr >= 0.0) || !(config.th_pnr >= 0.0)) throw ConfigError("thresholds must be non-negative");
}

Image Pipeline::unwrap(const Image& omni) const {
  if (omni.width != model_.width || omni.height != model_.height)
    throw InvalidArgument("frame is " + std::to_string(omni.width) + "x" + std::to_string(omni.height) +
                          " but the calibration expects " + std::to_string(model_.width) + "x" +
                          std::to_string(model_.height));
  return map_.unwrap(omni);
}

PairResult Pipeline::run_panorama_pair(const Image& pano1, const Image& pano2) const {
  PairResult out;
  PairDiagnostics& d = out.diagnostics;
  d.tiles = static_cast<int>(grid_.tiles.size());

  FlowParams fp;
  fp.registration.th_pr = config_.th_pr;
  fp.registration.th_pnr = config_.th_pnr;
  fp.registration.keep_surfaces = !config_.debug_dump.empty();
  fp.delta = config_.delta;
  fp.jobs = config_.jobs;

  PoseParams pp;
  pp.ransac_threshold = config_.ransac_thresh;
  pp.seed = config_.seed;

  auto t0 = Clock::now();
  try {
    out.flow = build_flow_field(pano1, pano2, grid_, fp);
    d.accepted_tiles = out.flow.accepted_count();
    d.t_flow = seconds_since(t0);
    t0 = Clock::now();
    const auto corrs = lift_correspondences(out.flow, model_, map_.spec());
    d.correspondences = static_cast<int>(corrs.size());
    out.pose = estimate_pose(corrs, pp);
    d.inliers = out.pose.inlier_count;
    d.inlier_ratio = out.pose.inlier_ratio;
    d.t_pose = seconds_since(t0);
  } catch (const EmptyFieldError& e) {
    d.failed = true;
    d.failure = e.code();
    d.message = e.what();
  } catch (const InsufficientCorrespondencesError& e) {
    d.failed = true;
    d.failure = e.code();
    d.message = e.what();
  } catch (const NoConsensusError& e) {
    d.failed = true;
    d.failure = e.code();
    d.message = e.what();
  }
  if (d.failed) out.pose = RelativePose{};
  return out;
}

PairResult Pipeline::run_pair(const Image& frame1, const Image& frame2) const {
  const auto t0 = Clock::now();
  const Image p1 = unwrap(frame1);
  const Image p2 = unwrap(frame2);
  const double t_unwrap = seconds_since(t0);
  PairResult r = run_panorama_pair(p1, p2);
  r.diagnostics.t_unwrap = t_unwrap;
  r.diagnostics.t_total = seconds_since(t0);
  return r;
}

DatasetManifest make_manifest(const std::string& calibration, const std::string& source) {
  DatasetManifest m;
  m.calibration = calibration;
  if (!fs::exists(calibration)) throw IoError("calibration file not found: " + calibration);
  if (fs::is_directory(source)) {
    for (const auto& entry : fs::directory_iterator(source))
      if (entry.is_regular_file() && is_frame_file(entry.path())) m.frames.push_back(entry.path().string());
    std::sort(m.frames.begin(), m.frames.end());
  } else {
    std::ifstream in(source);
    if (!in) throw IoError("cannot open frame list " + source);
    const fs::path base = fs::path(source).parent_path();
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos || line[0] == '#') continue;
      std::istringstream ls(line);
      std::string path;
      ls >> path;
      fs::path p(path);
      if (p.is_relative()) p = base / p;
      m.frames.push_back(p.string());
      double t;
      if (ls >> t) m.timestamps.emplace_back(t);
      else m.timestamps.emplace_back(std::nullopt);
    }
    for (size_t i = 0; i < m.frames.size(); ++i)
      if (!fs::exists(m.frames[i])) throw FrameReadError(static_cast<int>(i), "missing file " + m.frames[i]);
  }
  if (m.frames.empty()) throw IoError("no frames found in " + source);
  return m;
}

namespace {

TrajectoryEntry first_entry(std::optional<double> ts) {
  TrajectoryEntry e;
  e.frame_index = 0;
  e.timestamp = ts;
  e.status = "ok";
  return e;
}

TrajectoryEntry next_entry(const TrajectoryEntry& prev, int index, std::optional<double> ts, const PairResult& r) {
  TrajectoryEntry e;
  e.frame_index = index;
  e.timestamp = ts;
  e.relative = r.pose.rotation;
  e.orientation = prev.orientation * r.pose.rotation;
  // Keep the chain on SO(3) over long sequences.
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e.orientation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  e.orientation = svd.matrixU() * svd.matrixV().transpose();
  e.accepted_tiles = r.diagnostics.accepted_tiles;
  e.inliers = r.diagnostics.inliers;
  e.inlier_ratio = r.diagnostics.inlier_ratio;
  e.status = r.diagnostics.failed ? r.diagnostics.failure : (r.pose.translation_degenerate ? "rotation_only" : "ok");
  return e;
}

}  // namespace

Trajectory run_sequence(const DatasetManifest& manifest, const PipelineConfig& config) {
  if (manifest.frames.empty()) throw IoError("manifest has no frames");
  const Pipeline pipeline(load_calibration(manifest.calibration), config);
  auto ts = [&](size_t i) { return i < manifest.timestamps.size() ? manifest.timestamps[i] : std::nullopt; };
  auto load = [&](size_t i) {
    try {
      return pipeline.unwrap(load_image(manifest.frames[i]));
    } catch (const Error& e) {
      throw FrameReadError(static_cast<int>(i), manifest.frames[i] + ": " + e.what());
    }
  };

  Trajectory traj;
  traj.entries.push_back(first_entry(ts(0)));
  Image prev = load(0);
  for (size_t i = 1; i < manifest.frames.size(); ++i) {
    Image cur = load(i);
    const PairResult r = pipeline.run_panorama_pair(prev, cur);
    if (!config.debug_dump.empty()) {
      char prefix[32];
      std::snprintf(prefix, sizeof prefix, "pair_%04zu", i);
      dump_pair_debug(config.debug_dump, prefix, pipeline, cur, r);
    }
    traj.entries.push_back(next_entry(traj.entries.back(), static_cast<int>(i), ts(i), r));
    prev = std::move(cur);
  }
  return traj;
}

Trajectory run_sequence(const Pipeline& pipeline, const std::vector<Image>& frames,
                        const std::vector<std::optional<double>>& timestamps) {
  if (frames.empty()) throw InvalidArgument("no frames");
  auto ts = [&](size_t i) { return i < timestamps.size() ? timestamps[i] : std::nullopt; };
  Trajectory traj;
  traj.entries.push_back(first_entry(ts(0)));
  Image prev = pipeline.unwrap(frames[0]);
  for (size_t i = 1; i < frames.size(); ++i) {
    Image cur = pipeline.unwrap(frames[i]);
    const PairResult r = pipeline.run_panorama_pair(prev, cur);
    traj.entries.push_back(next_entry(traj.entries.back(), static_cast<int>(i), ts(i), r));
    prev = std::move(cur);
  }
  return traj;
}

void dump_pair_debug(const std::string& dir, const std::string& prefix, const Pipeline& pipeline, const Image& pano2,
                     const PairResult& result) {
  fs::create_directories(dir);
  const fs::path base(dir);
  std::ofstream csv(base / (prefix + "_flow.csv"));
  if (!csv) throw IoError("cannot write debug output in " + dir);
  csv << "tile,u2,v2,u1,v1,s,theta,tx,ty,peak_ratio,peak_noise_ratio,rs_peak_ratio,rs_peak_noise_ratio,accepted\n";
  char buf[512];
  for (const auto& e : result.flow.entries) {
    std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f,%.8f,%.8f,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f,%d\n", e.tile_index,
                  e.p2.u, e.p2.v, e.p1.u, e.p1.v, e.motion.s, e.motion.theta, e.motion.tx, e.motion.ty,
                  e.motion.peak_ratio, e.motion.peak_noise_ratio, e.rs_peak_ratio, e.rs_peak_noise_ratio,
                  e.accepted ? 1 : 0);
    csv << buf;
    if (!e.rs_surface.empty())
      save_image((base / (prefix + "_tile" + std::to_string(e.tile_index) + "_rs.pgm")).string(),
                 normalize_to_unit(e.rs_surface));
    if (!e.translation_surface.empty())
      save_image((base / (prefix + "_tile" + std::to_string(e.tile_index) + "_t.pgm")).string(),
                 normalize_to_unit(e.translation_surface));
  }

  // Arrows from p2 to p1, drawn 5x longer so that small motions show.
  RgbImage overlay(pano2.width, pano2.height);
  for (size_t i = 0; i < pano2.data.size(); ++i) {
    const auto g = static_cast<unsigned char>(std::clamp(pano2.data[i], 0.0, 1.0) * 255.0 + 0.5);
    overlay.data[i] = {g, g, g};
  }
  const auto& grid = pipeline.grid();
  for (const auto& t : grid.tiles) {
    const Rgb frame{60, 60, 160};
    draw_line(overlay, t.u, t.v, t.u + grid.tile_size - 1, t.v, frame);
    draw_line(overlay, t.u, t.v, t.u, t.v + grid.tile_size - 1, frame);
  }
  for (const auto& e : result.flow.entries) {
    const Rgb color = e.accepted ? Rgb{40, 220, 40} : Rgb{220, 40, 40};
    const double ex = e.p2.u + 5.0 * (e.p1.u - e.p2.u), ey = e.p2.v + 5.0 * (e.p1.v - e.p2.v);
    draw_line(overlay, e.p2.u, e.p2.v, ex, ey, color);
    draw_line(overlay, e.p2.u - 2, e.p2.v, e.p2.u + 2, e.p2.v, color);
    draw_line(overlay, e.p2.u, e.p2.v - 2, e.p2.u, e.p2.v + 2, color);
  }
  save_rgb_png((base / (prefix + "_flow.png")).string(), overlay);
}

}  // namespace omnifmi
