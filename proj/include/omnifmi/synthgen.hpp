#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "omnifmi/calib.hpp"
#include "omnifmi/image.hpp"
#include "omnifmi/trajectory.hpp"

namespace omnifmi {

// One octave of value noise: random values on a lattice with `cell` pixel
// spacing, interpolated with Catmull-Rom splines.
struct NoiseOctave {
  double cell = 8.0;
  double amplitude = 1.0;
};

// Seeded low-pass noise normalised to [0, 1]. With periodic_x the texture
// tiles seamlessly in x (used for the equirectangular sphere texture).
Image band_limited_noise(int width, int height, const std::vector<NoiseOctave>& octaves, uint64_t seed,
                         bool periodic_x = false);

// Equirectangular texture on a sphere at infinity. Column x covers longitude
// -pi + 2*pi*x/width, row y covers latitude pi/2 - pi*y/height.
struct SyntheticScene {
  Image texture;
  uint64_t seed = 0;

  // Texture of 4x the omni-image size in each dimension.
  static SyntheticScene make(uint64_t seed, int omni_width, int omni_height);
};

// Synthetic OCamCalib-style camera: a0 < 0 so the centre looks down the
// mirror axis, with the horizon inside the image.
CameraModel synthetic_camera(int width = 1024, int height = 768);

// Renders the omni-image seen with world-to-camera rotation `orientation`:
// each pixel samples the texture at direction orientation^T * pixel_to_ray(p).
// Optional additive Gaussian noise with the given sigma (result clamped to [0, 1]).
Image render_omni(const SyntheticScene& scene, const CameraModel& model, const Eigen::Matrix3d& orientation,
                  double noise_sigma = 0.0, uint64_t noise_seed = 0);

// Camera poses (camera-to-world) starting at the identity.
std::vector<Eigen::Matrix3d> constant_rate_trajectory(int frames, double roll_rate, double pitch_rate,
                                                      double yaw_rate);
// Each step applies a rotation about a random axis by an angle drawn uniformly
// from [0, max_step].
std::vector<Eigen::Matrix3d> random_walk_trajectory(int frames, double max_step, uint64_t seed);

struct SyntheticSequence {
  std::vector<Image> frames;
  Trajectory ground_truth;
};

// Renders each pose; ground truth lists the poses with timestamps k * frame_period.
SyntheticSequence render_sequence(const SyntheticScene& scene, const CameraModel& model,
                                  const std::vector<Eigen::Matrix3d>& poses, double noise_sigma = 0.0,
                                  double frame_period = 0.1);

// Writes <dir>/frames/frame_NNNN.png (16-bit), <dir>/gt.csv and <dir>/calib.txt.
void write_sequence(const std::string& dir, const SyntheticSequence& seq, const CameraModel& model);

}  // namespace omnifmi
