#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "omnifmi/calib.hpp"
#include "omnifmi/flowfield.hpp"
#include "omnifmi/image.hpp"
#include "omnifmi/pose.hpp"
#include "omnifmi/trajectory.hpp"
#include "omnifmi/unwrap.hpp"

namespace omnifmi {

struct PipelineConfig {
  double tile_size_frac = 0.10;
  int tile_size = 0;  // > 0 overrides tile_size_frac
  double overlap = 0.0;
  double th_pr = 0.03;
  double th_pnr = 1.5;
  double delta = 0.0;  // <= 0: N_a / 8
  std::optional<double> rho_min;
  std::optional<double> rho_max;
  double ransac_thresh = 0.5 * 3.14159265358979323846 / 180.0;  // radians
  uint64_t seed = 0;
  int jobs = 1;
  std::string debug_dump;  // directory; empty disables dumps
};

struct PairDiagnostics {
  int tiles = 0;
  int accepted_tiles = 0;
  int correspondences = 0;
  int inliers = 0;
  double inlier_ratio = 0.0;
  bool failed = false;
  std::string failure;  // error code of the failed stage
  std::string message;
  double t_unwrap = 0.0;  // seconds
  double t_flow = 0.0;
  double t_pose = 0.0;
  double t_total = 0.0;
};

struct PairResult {
  RelativePose pose;  // identity on failure
  PairDiagnostics diagnostics;
  FlowField flow;  // empty when the flow stage failed
};

// Holds the unwrapping map and tile grid for one camera so that consecutive
// pairs reuse them.
class Pipeline {
 public:
  Pipeline(const CameraModel& model, const PipelineConfig& config);

  const CameraModel& model() const { return model_; }
  const PipelineConfig& config() const { return config_; }
  const PanoramaSpec& panorama() const { return map_.spec(); }
  const TileGrid& grid() const { return grid_; }

  Image unwrap(const Image& omni) const;

  // Unwrap both frames, build the flow field, lift to rays and estimate the
  // frame-2 -> frame-1 rotation. Empty field, too few correspondences and no
  // consensus are reported in the diagnostics with an identity pose.
  PairResult run_pair(const Image& frame1, const Image& frame2) const;
  PairResult run_panorama_pair(const Image& pano1, const Image& pano2) const;

 private:
  CameraModel model_;
  PipelineConfig config_;
  PanoramaMap map_;
  TileGrid grid_;
};

struct DatasetManifest {
  std::string calibration;
  std::vector<std::string> frames;
  std::vector<std::optional<double>> timestamps;  // parallel to frames, may be empty
  std::optional<std::string> ground_truth;
};

// `source` is a directory (PNG/PGM files in lexicographic order) or a text file
// listing one frame per line, optionally followed by a timestamp. Relative
// paths in a list resolve against the list's directory. Files must exist.
DatasetManifest make_manifest(const std::string& calibration, const std::string& source);

// Runs all consecutive pairs and chains the relative rotations. A frame that
// cannot be read aborts with FrameReadError.
Trajectory run_sequence(const DatasetManifest& manifest, const PipelineConfig& config);
Trajectory run_sequence(const Pipeline& pipeline, const std::vector<Image>& frames,
                        const std::vector<std::optional<double>>& timestamps = {});

// Writes surfaces (PGM), the flow field (CSV) and an arrow overlay (PNG).
void dump_pair_debug(const std::string& dir, const std::string& prefix, const Pipeline& pipeline, const Image& pano2,
                     const PairResult& result);

}  // namespace omnifmi
