#include "omnifmi/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <thread>

#include "omnifmi/error.hpp"
#include "omnifmi/pipeline.hpp"
#include "omnifmi/specreg.hpp"
#include "omnifmi/synthgen.hpp"

namespace omnifmi {

double parse_angle(const std::string& text) {
  std::string s = text;
  double factor = 1.0;
  auto ends_with = [&](const std::string& suffix) {
    return s.size() > suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends_with("deg")) {
    factor = std::numbers::pi / 180.0;
    s.resize(s.size() - 3);
  } else if (ends_with("rad")) {
    s.resize(s.size() - 3);
  }
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(text);
    return v * factor;
  } catch (const std::exception&) {
    throw InvalidArgument("not an angle: '" + text + "'");
  }
}

namespace {

struct TuningFlags {
  PipelineConfig config;
  std::string ransac_thresh = "0.5deg";
  std::optional<double> rho_min, rho_max;
  int jobs = 0;

  void add_to(CLI::App* app) {
    app->add_option("--tile-size-frac", config.tile_size_frac, "Tile size as a fraction of the panorama width")
        ->capture_default_str();
    app->add_option("--tile-size", config.tile_size, "Explicit tile size (power of two); overrides --tile-size-frac");
    app->add_option("--overlap", config.overlap, "Tile overlap fraction in [0, 1)")->capture_default_str();
    app->add_option("--th-pr", config.th_pr, "Minimum peak ratio of both correlation stages")->capture_default_str();
    app->add_option("--th-pnr", config.th_pnr, "Minimum peak-to-noise ratio of both correlation stages")
        ->capture_default_str();
    app->add_option("--delta", config.delta, "Probe offset from the tile centre in pixels (default N_a/8)");
    app->add_option("--rho-min", rho_min, "Inner annulus radius in pixels");
    app->add_option("--rho-max", rho_max, "Outer annulus radius in pixels");
    app->add_option("--ransac-thresh", ransac_thresh, "Epipolar inlier threshold (e.g. 0.5deg, 0.01rad)")
        ->capture_default_str();
    app->add_option("--seed", config.seed, "RANSAC seed")->capture_default_str();
    app->add_option("--jobs", jobs, "Worker threads for tile registration (0 = all cores)");
    app->add_option("--debug-dump", config.debug_dump, "Directory for correlation surfaces and flow dumps");
  }

  PipelineConfig resolve() const {
    PipelineConfig c = config;
    c.rho_min = rho_min;
    c.rho_max = rho_max;
    c.ransac_thresh = parse_angle(ransac_thresh);
    c.jobs = jobs > 0 ? jobs : std::max(1u, std::thread::hardware_concurrency());
    return c;
  }
};

Trajectory load_ground_truth(const std::string& path, const std::string& format, const std::string& convention,
                             const std::optional<std::string>& times) {
  if (format == "kitti") return read_kitti_poses(path, times);
  if (format != "csv") throw ConfigError("unknown ground-truth format '" + format + "' (expected csv or kitti)");
  return read_trajectory_csv(path, parse_euler_convention(convention));
}

std::string fmt(const char* f, double a, double b, double c) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

void print_pose(std::ostream& out, const PairResult& r) {
  const auto& d = r.diagnostics;
  const Euler e = rotation_to_euler(r.pose.rotation);
  const double k = 180.0 / std::numbers::pi;
  out << "status: " << (d.failed ? d.failure : (r.pose.translation_degenerate ? "rotation_only" : "ok")) << "\n";
  if (d.failed) out << "reason: " << d.message << "\n";
  out << "tiles: " << d.tiles << " accepted: " << d.accepted_tiles << " correspondences: " << d.correspondences
      << " inliers: " << d.inliers << "\n";
  out << fmt("rotation [deg]: roll %.4f pitch %.4f yaw %.4f\n", e.roll * k, e.pitch * k, e.yaw * k);
  const auto& t = r.pose.translation_dir;
  out << fmt("translation dir: %.4f %.4f %.4f\n", t.x(), t.y(), t.z());
  out << fmt("time [s]: unwrap %.3f flow %.3f pose %.3f\n", d.t_unwrap, d.t_flow, d.t_pose);
}

int cmd_run(const TuningFlags& tuning, const std::string& calib, const std::string& frames, const std::string& out_path,
            const std::optional<std::string>& gt, const std::string& gt_format, const std::string& convention,
            std::ostream& out) {
  const PipelineConfig config = tuning.resolve();
  const DatasetManifest manifest = make_manifest(calib, frames);
  const Trajectory traj = run_sequence(manifest, config);
  write_trajectory_csv(out_path, traj);
  int failed = 0;
  for (const auto& e : traj.entries) failed += (e.status != "ok" && e.status != "rotation_only") ? 1 : 0;
  out << "frames: " << traj.size() << " failed pairs: " << failed << " trajectory: " << out_path << "\n";
  if (gt) {
    const EvaluationReport rep = evaluate(traj, load_ground_truth(*gt, gt_format, convention, std::nullopt));
    out << format_report(rep);
  }
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rotation estimation for catadioptric omni-camera sequences by tile-wise spectral registration"};
  app.name("omnifmi");
  app.set_config("--config", "", "Key-value file providing defaults for any flag (command line wins)");
  app.require_subcommand(1);
  app.fallthrough();

  // run
  auto* run = app.add_subcommand("run", "Estimate the orientation trajectory of a frame sequence");
  TuningFlags run_tuning;
  std::string run_calib, run_frames, run_out;
  std::optional<std::string> run_gt;
  std::string gt_format = "csv", convention = "quat";
  run->add_option("--calib", run_calib, "OCamCalib calibration file")->required();
  run->add_option("--frames", run_frames, "Frame directory or list file")->required();
  run->add_option("--out", run_out, "Trajectory CSV to write")->required();
  run->add_option("--gt", run_gt, "Ground truth to evaluate against");
  run->add_option("--gt-format", gt_format, "csv or kitti")->capture_default_str();
  run->add_option("--euler-convention", convention, "Ground-truth orientation columns: quat, zyx or xyz")
      ->capture_default_str();
  run_tuning.add_to(run);

  // eval
  auto* ev = app.add_subcommand("eval", "Compare an estimated trajectory with ground truth");
  std::string ev_est, ev_gt, ev_format = "csv", ev_convention = "quat";
  std::optional<std::string> ev_times, ev_report, ev_plot;
  double ev_tol = 0.02;
  ev->add_option("--est", ev_est, "Estimated trajectory CSV")->required();
  ev->add_option("--gt", ev_gt, "Ground-truth file")->required();
  ev->add_option("--gt-format", ev_format, "csv or kitti")->capture_default_str();
  ev->add_option("--gt-times", ev_times, "Timestamps file for kitti poses");
  ev->add_option("--euler-convention", ev_convention, "Ground-truth orientation columns: quat, zyx or xyz")
      ->capture_default_str();
  ev->add_option("--time-tolerance", ev_tol, "Timestamp matching tolerance in seconds")->capture_default_str();
  ev->add_option("--report", ev_report, "Write the RMSE table as CSV");
  ev->add_option("--plot-data", ev_plot, "Write per-frame estimate vs. ground truth as CSV");

  // synth
  auto* sy = app.add_subcommand("synth", "Render a synthetic sequence with known rotations");
  int sy_frames = 20, sy_width = 1024, sy_height = 768;
  std::string roll_rate = "0", pitch_rate = "0", yaw_rate = "0";
  std::optional<std::string> walk_step;
  uint64_t sy_seed = 0;
  double sy_noise = 0.0, sy_period = 0.1;
  std::string sy_out;
  sy->add_option("--frames", sy_frames, "Number of frames")->capture_default_str()->check(CLI::PositiveNumber);
  sy->add_option("--roll-rate", roll_rate, "Roll per frame (e.g. 1deg)");
  sy->add_option("--pitch-rate", pitch_rate, "Pitch per frame");
  sy->add_option("--yaw-rate", yaw_rate, "Yaw per frame");
  sy->add_option("--walk-max-step", walk_step, "Random-walk mode: largest rotation per frame");
  sy->add_option("--seed", sy_seed, "Texture and walk seed")->capture_default_str();
  sy->add_option("--width", sy_width, "Omni-image width")->capture_default_str()->check(CLI::PositiveNumber);
  sy->add_option("--height", sy_height, "Omni-image height")->capture_default_str()->check(CLI::PositiveNumber);
  sy->add_option("--noise", sy_noise, "Additive Gaussian noise sigma (intensity units)")->capture_default_str();
  sy->add_option("--frame-period", sy_period, "Seconds between frames")->capture_default_str();
  sy->add_option("--out", sy_out, "Output directory")->required();

  // register
  auto* rg = app.add_subcommand("register", "Estimate the rotation between two frames and dump diagnostics");
  TuningFlags rg_tuning;
  std::string rg_calib, rg_a, rg_b;
  bool rg_patches = false;
  rg->add_option("--calib", rg_calib, "OCamCalib calibration file (not needed with --patches)");
  rg->add_option("--frame1", rg_a, "First image")->required();
  rg->add_option("--frame2", rg_b, "Second image")->required();
  rg->add_flag("--patches", rg_patches, "Register two equal-size square patches directly");
  rg_tuning.add_to(rg);

  // unwrap
  auto* uw = app.add_subcommand("unwrap", "Unwrap an omni-image into a panorama");
  std::string uw_calib, uw_image, uw_out;
  std::optional<double> uw_rho_min, uw_rho_max;
  int uw_bits = 8;
  uw->add_option("--calib", uw_calib, "OCamCalib calibration file")->required();
  uw->add_option("--image", uw_image, "Omni-image (PNG or PGM)")->required();
  uw->add_option("--out", uw_out, "Panorama to write (PNG or PGM)")->required();
  uw->add_option("--rho-min", uw_rho_min, "Inner annulus radius in pixels");
  uw->add_option("--rho-max", uw_rho_max, "Outer annulus radius in pixels");
  uw->add_option("--bit-depth", uw_bits, "8 or 16")->capture_default_str()->check(CLI::IsMember({8, 16}));

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: code=usage message=" << e.what() << "\n";
    const CLI::App* sub = nullptr;
    for (const auto* s : app.get_subcommands()) sub = s;
    err << (sub ? sub->help() : app.help());
    return 2;
  }

  try {
    if (run->parsed())
      return cmd_run(run_tuning, run_calib, run_frames, run_out, run_gt, gt_format, convention, out);

    if (ev->parsed()) {
      const Trajectory est = read_trajectory_csv(ev_est);
      const Trajectory gt = load_ground_truth(ev_gt, ev_format, ev_convention, ev_times);
      EvaluationOptions opt;
      opt.time_tolerance = ev_tol;
      const EvaluationReport rep = evaluate(est, gt, opt);
      out << format_report(rep);
      if (ev_report) {
        std::ofstream f(*ev_report);
        if (!f) throw IoError("cannot write " + *ev_report);
        write_report_csv(f, rep);
      }
      if (ev_plot) {
        std::ofstream f(*ev_plot);
        if (!f) throw IoError("cannot write " + *ev_plot);
        write_plot_data_csv(f, rep);
      }
      return 0;
    }

    if (sy->parsed()) {
      const CameraModel model = synthetic_camera(sy_width, sy_height);
      const SyntheticScene scene = SyntheticScene::make(sy_seed, sy_width, sy_height);
      const auto poses = walk_step ? random_walk_trajectory(sy_frames, parse_angle(*walk_step), sy_seed)
                                   : constant_rate_trajectory(sy_frames, parse_angle(roll_rate),
                                                              parse_angle(pitch_rate), parse_angle(yaw_rate));
      const SyntheticSequence seq = render_sequence(scene, model, poses, sy_noise, sy_period);
      write_sequence(sy_out, seq, model);
      out << "wrote " << seq.frames.size() << " frames to " << sy_out << "\n";
      return 0;
    }

    if (rg->parsed()) {
      const Image a = load_image(rg_a);
      const Image b = load_image(rg_b);
      PipelineConfig config = rg_tuning.resolve();
      if (rg_patches) {
        RegistrationParams p;
        p.th_pr = config.th_pr;
        p.th_pnr = config.th_pnr;
        const Registration r = register_patches(a, b, p);
        const auto& m = r.motion;
        out << "accepted: " << (r.accepted ? "yes" : "no") << "\n";
        out << fmt("scale %.6f theta_deg %.4f", m.s, m.theta * 180.0 / std::numbers::pi, 0.0);
        out << fmt(" tx %.4f ty %.4f pr %.4f", m.tx, m.ty, m.peak_ratio);
        out << fmt(" pnr %.4f rs_pr %.4f rs_pnr %.4f\n", m.peak_noise_ratio, r.rs_peak_ratio, r.rs_peak_noise_ratio);
        return 0;
      }
      if (rg_calib.empty()) throw ConfigError("--calib is required unless --patches is given");
      const Pipeline pipeline(load_calibration(rg_calib), config);
      const PairResult r = pipeline.run_pair(a, b);
      print_pose(out, r);
      if (!config.debug_dump.empty()) dump_pair_debug(config.debug_dump, "pair", pipeline, pipeline.unwrap(b), r);
      return 0;
    }

    if (uw->parsed()) {
      const CameraModel model = load_calibration(uw_calib);
      const PanoramaSpec spec = default_panorama_spec(model, uw_rho_min, uw_rho_max);
      save_image(uw_out, unwrap_image(load_image(uw_image), model, spec), uw_bits);
      out << "panorama " << spec.width << "x" << spec.height << " written to " << uw_out << "\n";
      return 0;
    }
  } catch (const Error& e) {
    err << "error: code=" << e.code() << " message=" << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: code=internal message=" << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace omnifmi
