#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace omnifmi {

// Roll/pitch/yaw in radians, intrinsic Z-Y-X: R = Rz(yaw) * Ry(pitch) * Rx(roll).
struct Euler {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
};

// How orientation columns of a trajectory/ground-truth CSV are encoded.
enum class EulerConvention {
  Quaternion,  // qw,qx,qy,qz columns
  ZYX,         // roll,pitch,yaw columns, R = Rz(yaw) Ry(pitch) Rx(roll)
  XYZ,         // roll,pitch,yaw columns, R = Rx(roll) Ry(pitch) Rz(yaw)
};

EulerConvention parse_euler_convention(const std::string& name);

struct TrajectoryEntry {
  int frame_index = 0;
  std::optional<double> timestamp;
  // Camera-to-reference rotation; entry 0 of an estimate is the identity.
  Eigen::Matrix3d orientation = Eigen::Matrix3d::Identity();
  // Rotation from the previous frame (frame k-1 <- frame k).
  Eigen::Matrix3d relative = Eigen::Matrix3d::Identity();
  int accepted_tiles = -1;
  int inliers = -1;
  double inlier_ratio = -1.0;
  std::string status = "ok";
};

struct Trajectory {
  std::vector<TrajectoryEntry> entries;

  size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// frame_index,timestamp,qw,qx,qy,qz,roll,pitch,yaw,rel_qw,rel_qx,rel_qy,rel_qz,
// rel_roll,rel_pitch,rel_yaw,accepted_tiles,inliers,inlier_ratio,status
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
void write_trajectory_csv(const std::string& path, const Trajectory& traj);

// frame_index,timestamp,qw,qx,qy,qz
void write_ground_truth_csv(std::ostream& out, const Trajectory& traj);
void write_ground_truth_csv(const std::string& path, const Trajectory& traj);

// Reads either CSV flavour. Columns are located by header name; extra columns
// are ignored. Empty timestamps are allowed. Quaternions are normalised.
Trajectory read_trajectory_csv(std::istream& in, EulerConvention convention = EulerConvention::Quaternion);
Trajectory read_trajectory_csv(const std::string& path, EulerConvention convention = EulerConvention::Quaternion);

// KITTI-style pose rows (12 numbers: row-major 3x4 [R|t], camera to world), as
// shipped with driving datasets. Frame indices follow line order; timestamps
// come from an optional one-per-line times file.
Trajectory read_kitti_poses(const std::string& path, const std::optional<std::string>& times_path = std::nullopt);

struct AxisError {
  double rmse = 0.0;
  double std_abs = 0.0;  // standard deviation of the per-frame absolute error
};

struct EvaluationReport {
  AxisError roll, pitch, yaw;
  double mean_rmse = 0.0;  // mean of the three axis RMSEs
  double std_rmse = 0.0;   // their standard deviation
  double geodesic_rmse = 0.0;
  int aligned = 0;
  int dropped_estimate = 0;
  int dropped_ground_truth = 0;

  struct Row {
    int frame_index;
    Euler est, gt;          // cumulative, rebased to the first aligned frame
    Euler est_rel, gt_rel;  // relative to the previous aligned frame
    Euler error;            // wrapped est - gt
  };
  std::vector<Row> rows;
};

struct EvaluationOptions {
  double time_tolerance = 0.02;  // seconds, for timestamp matching
};

// Absolute trajectory RMSE of Euler angle differences. Both trajectories are
// rebased so that the first aligned frame is the identity. Frames are paired by
// nearest timestamp when every entry of both has one, otherwise by index.
// Throws EvaluationError with fewer than 2 aligned frames.
EvaluationReport evaluate(const Trajectory& est, const Trajectory& gt, const EvaluationOptions& options = {});

void write_report_csv(std::ostream& out, const EvaluationReport& report);
void write_plot_data_csv(std::ostream& out, const EvaluationReport& report);
std::string format_report(const EvaluationReport& report);

double wrap_angle(double a);

}  // namespace omnifmi
