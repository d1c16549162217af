#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "omnifmi/calib.hpp"
#include "omnifmi/flowfield.hpp"
#include "omnifmi/trajectory.hpp"
#include "omnifmi/unwrap.hpp"

namespace omnifmi {

// Unit rays of one scene direction seen from frame 1 and frame 2.
struct RayCorrespondence {
  Ray p1;
  Ray p2;
};

// Frame-2 to frame-1 motion: a point X2 in frame 2 is R * X2 + t in frame 1,
// and corresponding rays satisfy p1^T E p2 = 0 with E = [t]x R.
struct RelativePose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation_dir = Eigen::Vector3d::Zero();
  Eigen::Matrix3d essential = Eigen::Matrix3d::Zero();
  bool translation_degenerate = false;
  int inlier_count = 0;
  double inlier_ratio = 0.0;
};

// Panorama pixel pairs of the accepted flow entries -> omni pixels -> rays.
// Entries whose omni position leaves the annulus are dropped. Throws
// InsufficientCorrespondencesError when fewer than 8 remain.
std::vector<RayCorrespondence> lift_correspondences(const FlowField& field, const CameraModel& model,
                                                    const PanoramaSpec& spec);

struct PoseParams {
  double ransac_threshold = 0.5 * 3.14159265358979323846 / 180.0;  // radians
  int max_iterations = 1000;
  uint64_t seed = 0;
  double confidence = 0.999;
  // The rotation-only model wins when it explains at least this share of the
  // essential-matrix inliers.
  double degenerate_inlier_share = 0.9;
};

// Robust relative pose: RANSAC over 5-point minimal essential-matrix samples,
// 8-point refinement on the inliers, cheirality disambiguation, and a
// competing rotation-only model for (near) pure rotations. Throws
// InsufficientCorrespondencesError below 8 correspondences and
// NoConsensusError when no model reaches 8 inliers.
RelativePose estimate_pose(const std::vector<RayCorrespondence>& corrs, const PoseParams& params = {});

// Minimal solver: essential matrices consistent with five ray pairs
// (p1^T E p2 = 0), each scaled to unit Frobenius norm. Up to 10 solutions.
std::vector<Eigen::Matrix3d> essential_five_point(const std::vector<RayCorrespondence>& five);

// Linear least-squares essential matrix from >= 8 pairs, projected onto the
// essential manifold (singular values s, s, 0).
Eigen::Matrix3d essential_eight_point(const std::vector<RayCorrespondence>& corrs);
// Same with a non-negative weight per pair (empty = all ones).
Eigen::Matrix3d essential_eight_point(const std::vector<RayCorrespondence>& corrs, const std::vector<double>& weights);

// Angle between each ray and the epipolar plane of its partner (max of both sides).
double epipolar_angle(const Eigen::Matrix3d& e, const RayCorrespondence& c);

// The four (R, t) factorisations of an essential matrix.
struct PoseCandidate {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d translation;
};
std::vector<PoseCandidate> decompose_essential(const Eigen::Matrix3d& e);

// Least-squares rotation with p1 ~ R p2 (orthogonal Procrustes).
Eigen::Matrix3d fit_rotation(const std::vector<RayCorrespondence>& corrs);
Eigen::Matrix3d fit_rotation(const std::vector<RayCorrespondence>& corrs, const std::vector<double>& weights);

double geodesic_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b);

// Intrinsic Z-Y-X angles. At |pitch| = pi/2 roll is set to 0 and folded into yaw.
Euler rotation_to_euler(const Eigen::Matrix3d& r);
Eigen::Matrix3d euler_to_matrix(const Euler& e);

}  // namespace omnifmi
