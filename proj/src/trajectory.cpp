#include "omnifmi/trajectory.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "omnifmi/error.hpp"
#include "omnifmi/pose.hpp"

namespace omnifmi {

namespace {

std::string num(double v) {
  char buf[40];
  if (v == 0.0) v = 0.0;  // no "-0" in files
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

double to_double(const std::string& s, int line_no, const std::string& column) {
  try {
    size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError("trajectory", "line " + std::to_string(line_no) + ": bad value '" + s + "' in column " + column);
  }
}

Eigen::Matrix3d xyz_to_matrix(const Euler& e) {
  return (Eigen::AngleAxisd(e.roll, Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(e.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(e.yaw, Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

void write_quat(std::ostream& out, const Eigen::Matrix3d& r) {
  Eigen::Quaterniond q(r);
  q.normalize();
  if (q.w() < 0) q.coeffs() *= -1.0;
  out << num(q.w()) << "," << num(q.x()) << "," << num(q.y()) << "," << num(q.z());
}

void write_euler(std::ostream& out, const Eigen::Matrix3d& r) {
  const Euler e = rotation_to_euler(r);
  out << num(e.roll) << "," << num(e.pitch) << "," << num(e.yaw);
}

std::string timestamp_field(const TrajectoryEntry& e) { return e.timestamp ? num(*e.timestamp) : std::string(); }

Euler euler_diff(const Euler& a, const Euler& b) {
  return {wrap_angle(a.roll - b.roll), wrap_angle(a.pitch - b.pitch), wrap_angle(a.yaw - b.yaw)};
}

AxisError axis_error(const std::vector<double>& err) {
  AxisError out;
  double sq = 0.0, sum_abs = 0.0;
  for (double v : err) {
    sq += v * v;
    sum_abs += std::abs(v);
  }
  const double n = static_cast<double>(err.size());
  out.rmse = std::sqrt(sq / n);
  const double mean_abs = sum_abs / n;
  double var = 0.0;
  for (double v : err) var += (std::abs(v) - mean_abs) * (std::abs(v) - mean_abs);
  out.std_abs = std::sqrt(var / n);
  return out;
}

}  // namespace

double wrap_angle(double a) {
  const double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

EulerConvention parse_euler_convention(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(), [](unsigned char c) { return std::tolower(c); });
  if (n == "quat" || n == "quaternion" || n == "none") return EulerConvention::Quaternion;
  if (n == "zyx") return EulerConvention::ZYX;
  if (n == "xyz") return EulerConvention::XYZ;
  throw ConfigError("unknown Euler convention '" + name + "' (expected quat, zyx or xyz)");
}

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  out << "frame_index,timestamp,qw,qx,qy,qz,roll,pitch,yaw,rel_qw,rel_qx,rel_qy,rel_qz,rel_roll,rel_pitch,rel_yaw,"
         "accepted_tiles,inliers,inlier_ratio,status\n";
  for (const auto& e : traj.entries) {
    out << e.frame_index << "," << timestamp_field(e) << ",";
    write_quat(out, e.orientation);
    out << ",";
    write_euler(out, e.orientation);
    out << ",";
    write_quat(out, e.relative);
    out << ",";
    write_euler(out, e.relative);
    out << "," << e.accepted_tiles << "," << e.inliers << "," << num(e.inlier_ratio) << "," << e.status << "\n";
  }
}

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_trajectory_csv(out, traj);
}

void write_ground_truth_csv(std::ostream& out, const Trajectory& traj) {
  out << "frame_index,timestamp,qw,qx,qy,qz\n";
  for (const auto& e : traj.entries) {
    out << e.frame_index << "," << timestamp_field(e) << ",";
    write_quat(out, e.orientation);
    out << "\n";
  }
}

void write_ground_truth_csv(const std::string& path, const Trajectory& traj) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  write_ground_truth_csv(out, traj);
}

Trajectory read_trajectory_csv(std::istream& in, EulerConvention convention) {
  std::string line;
  int line_no = 0;
  std::map<std::string, size_t> col;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto names = split_csv(line);
    for (size_t i = 0; i < names.size(); ++i) col[names[i]] = i;
    break;
  }
  if (col.empty()) throw ParseError("trajectory", "missing header line");
  std::vector<std::string> needed = {"frame_index", "timestamp"};
  if (convention == EulerConvention::Quaternion) needed.insert(needed.end(), {"qw", "qx", "qy", "qz"});
  else needed.insert(needed.end(), {"roll", "pitch", "yaw"});
  for (const auto& name : needed)
    if (!col.count(name)) throw ParseError("trajectory", "missing column '" + name + "'");

  Trajectory traj;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto f = split_csv(line);
    auto field = [&](const std::string& name) -> const std::string& {
      const size_t i = col.at(name);
      if (i >= f.size()) throw ParseError("trajectory", "line " + std::to_string(line_no) + ": too few columns");
      return f[i];
    };
    TrajectoryEntry e;
    const double idx = to_double(field("frame_index"), line_no, "frame_index");
    if (idx != std::floor(idx)) throw ParseError("trajectory", "line " + std::to_string(line_no) + ": non-integer frame");
    e.frame_index = static_cast<int>(idx);
    if (!field("timestamp").empty()) e.timestamp = to_double(field("timestamp"), line_no, "timestamp");
    if (convention == EulerConvention::Quaternion) {
      Eigen::Quaterniond q(to_double(field("qw"), line_no, "qw"), to_double(field("qx"), line_no, "qx"),
                           to_double(field("qy"), line_no, "qy"), to_double(field("qz"), line_no, "qz"));
      if (!(q.norm() > 1e-12)) throw ParseError("trajectory", "line " + std::to_string(line_no) + ": zero quaternion");
      e.orientation = q.normalized().toRotationMatrix();
    } else {
      const Euler ang{to_double(field("roll"), line_no, "roll"), to_double(field("pitch"), line_no, "pitch"),
                      to_double(field("yaw"), line_no, "yaw")};
      e.orientation = convention == EulerConvention::ZYX ? euler_to_matrix(ang) : xyz_to_matrix(ang);
    }
    if (col.count("status") && col.at("status") < f.size()) e.status = f[col.at("status")];
    if (!traj.entries.empty()) e.relative = traj.entries.back().orientation.transpose() * e.orientation;
    traj.entries.push_back(e);
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::string& path, EulerConvention convention) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_trajectory_csv(in, convention);
}

Trajectory read_kitti_poses(const std::string& path, const std::optional<std::string>& times_path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<double> times;
  if (times_path) {
    std::ifstream tin(*times_path);
    if (!tin) throw IoError("cannot open " + *times_path);
    double t;
    while (tin >> t) times.push_back(t);
  }
  Trajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ls(line);
    std::vector<double> v;
    double x;
    while (ls >> x) v.push_back(x);
    if (v.empty()) continue;
    if (v.size() != 12) throw ParseError("kitti poses", "line " + std::to_string(line_no) + ": expected 12 numbers");
    TrajectoryEntry e;
    e.frame_index = static_cast<int>(traj.entries.size());
    if (static_cast<size_t>(e.frame_index) < times.size()) e.timestamp = times[e.frame_index];
    Eigen::Matrix3d r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    // Re-orthonormalise; exported poses carry rounding noise.
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(r, Eigen::ComputeFullU | Eigen::ComputeFullV);
    e.orientation = svd.matrixU() * svd.matrixV().transpose();
    if (!traj.entries.empty()) e.relative = traj.entries.back().orientation.transpose() * e.orientation;
    traj.entries.push_back(e);
  }
  return traj;
}

EvaluationReport evaluate(const Trajectory& est, const Trajectory& gt, const EvaluationOptions& options) {
  auto all_timed = [](const Trajectory& t) {
    return !t.empty() && std::all_of(t.entries.begin(), t.entries.end(), [](const auto& e) { return e.timestamp.has_value(); });
  };

  std::vector<std::pair<const TrajectoryEntry*, const TrajectoryEntry*>> pairs;
  std::vector<bool> gt_used(gt.size(), false);
  if (all_timed(est) && all_timed(gt)) {
    for (const auto& e : est.entries) {
      int best = -1;
      double best_dt = options.time_tolerance;
      for (size_t j = 0; j < gt.size(); ++j) {
        const double dt = std::abs(*gt.entries[j].timestamp - *e.timestamp);
        if (dt <= best_dt && !gt_used[j]) {
          best_dt = dt;
          best = static_cast<int>(j);
        }
      }
      if (best >= 0) {
        gt_used[best] = true;
        pairs.emplace_back(&e, &gt.entries[best]);
      }
    }
  } else {
    std::map<int, size_t> by_index;
    for (size_t j = 0; j < gt.size(); ++j) by_index[gt.entries[j].frame_index] = j;
    for (const auto& e : est.entries) {
      auto it = by_index.find(e.frame_index);
      if (it == by_index.end() || gt_used[it->second]) continue;
      gt_used[it->second] = true;
      pairs.emplace_back(&e, &gt.entries[it->second]);
    }
  }

  EvaluationReport rep;
  rep.aligned = static_cast<int>(pairs.size());
  rep.dropped_estimate = static_cast<int>(est.size()) - rep.aligned;
  rep.dropped_ground_truth = static_cast<int>(gt.size()) - rep.aligned;
  if (rep.aligned < 2)
    throw EvaluationError("only " + std::to_string(rep.aligned) + " aligned frames (need at least 2)");

  const Eigen::Matrix3d est0 = pairs.front().first->orientation.transpose();
  const Eigen::Matrix3d gt0 = pairs.front().second->orientation.transpose();
  std::vector<double> er, ep, ey;
  double geo_sq = 0.0;
  Eigen::Matrix3d prev_est = Eigen::Matrix3d::Identity(), prev_gt = Eigen::Matrix3d::Identity();
  for (const auto& [e, g] : pairs) {
    const Eigen::Matrix3d re = est0 * e->orientation;
    const Eigen::Matrix3d rg = gt0 * g->orientation;
    EvaluationReport::Row row;
    row.frame_index = e->frame_index;
    row.est = rotation_to_euler(re);
    row.gt = rotation_to_euler(rg);
    row.est_rel = rotation_to_euler(prev_est.transpose() * re);
    row.gt_rel = rotation_to_euler(prev_gt.transpose() * rg);
    row.error = euler_diff(row.est, row.gt);
    er.push_back(row.error.roll);
    ep.push_back(row.error.pitch);
    ey.push_back(row.error.yaw);
    const double geo = geodesic_distance(re, rg);
    geo_sq += geo * geo;
    rep.rows.push_back(row);
    prev_est = re;
    prev_gt = rg;
  }
  rep.roll = axis_error(er);
  rep.pitch = axis_error(ep);
  rep.yaw = axis_error(ey);
  rep.geodesic_rmse = std::sqrt(geo_sq / pairs.size());
  rep.mean_rmse = (rep.roll.rmse + rep.pitch.rmse + rep.yaw.rmse) / 3.0;
  const double d0 = rep.roll.rmse - rep.mean_rmse, d1 = rep.pitch.rmse - rep.mean_rmse, d2 = rep.yaw.rmse - rep.mean_rmse;
  rep.std_rmse = std::sqrt((d0 * d0 + d1 * d1 + d2 * d2) / 3.0);
  return rep;
}

void write_report_csv(std::ostream& out, const EvaluationReport& r) {
  out << "axis,rmse_rad,std_abs_rad\n";
  out << "roll," << num(r.roll.rmse) << "," << num(r.roll.std_abs) << "\n";
  out << "pitch," << num(r.pitch.rmse) << "," << num(r.pitch.std_abs) << "\n";
  out << "yaw," << num(r.yaw.rmse) << "," << num(r.yaw.std_abs) << "\n";
  out << "mean," << num(r.mean_rmse) << "," << num(r.std_rmse) << "\n";
  out << "geodesic," << num(r.geodesic_rmse) << ",\n";
}

void write_plot_data_csv(std::ostream& out, const EvaluationReport& r) {
  out << "frame_index,est_roll,est_pitch,est_yaw,gt_roll,gt_pitch,gt_yaw,"
         "est_rel_roll,est_rel_pitch,est_rel_yaw,gt_rel_roll,gt_rel_pitch,gt_rel_yaw,"
         "err_roll,err_pitch,err_yaw\n";
  for (const auto& row : r.rows) {
    out << row.frame_index;
    for (const Euler* e : {&row.est, &row.gt, &row.est_rel, &row.gt_rel, &row.error})
      out << "," << num(e->roll) << "," << num(e->pitch) << "," << num(e->yaw);
    out << "\n";
  }
}

std::string format_report(const EvaluationReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "aligned frames: %d (dropped: %d estimate, %d ground truth)\n"
                "          RMSE [rad]   +- std\n"
                "roll      %.4f       +- %.4f\n"
                "pitch     %.4f       +- %.4f\n"
                "yaw       %.4f       +- %.4f\n"
                "mean      %.4f       +- %.4f\n"
                "geodesic  %.4f\n",
                r.aligned, r.dropped_estimate, r.dropped_ground_truth, r.roll.rmse, r.roll.std_abs, r.pitch.rmse,
                r.pitch.std_abs, r.yaw.rmse, r.yaw.std_abs, r.mean_rmse, r.std_rmse, r.geodesic_rmse);
  return buf;
}

}  // namespace omnifmi
