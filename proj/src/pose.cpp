#include "omnifmi/pose.hpp"

#include <Eigen/Dense>
#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "omnifmi/error.hpp"

namespace omnifmi {

namespace {

constexpr int kMinCorrespondences = 8;

uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sample for hypothesis k depends only on (seed, k).
std::vector<int> draw_sample(uint64_t seed, int k, int size, int n) {
  std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<uint64_t>(k))));
  std::vector<int> idx;
  while (static_cast<int>(idx.size()) < size) {
    const int i = static_cast<int>(rng() % static_cast<uint64_t>(n));
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  return idx;
}

int required_iterations(int inliers, int n, int sample_size, double confidence, int cap) {
  const double w = static_cast<double>(inliers) / n;
  const double p_good = std::pow(w, sample_size);
  if (p_good >= 1.0) return 1;
  if (p_good <= 0.0) return cap;
  const double k = std::log(1.0 - confidence) / std::log(1.0 - p_good);
  return static_cast<int>(std::min<double>(cap, std::ceil(k)));
}

double rotation_residual(const Eigen::Matrix3d& r, const RayCorrespondence& c) {
  const Eigen::Vector3d q = r * c.p2;
  return std::atan2(c.p1.cross(q).norm(), c.p1.dot(q));
}

// Inliers (residual < threshold) and the truncated quadratic cost
// sum(min(r^2, threshold^2)). Ranking by cost rather than by inlier count
// keeps a stray point inside the band from outvoting an exact model.
struct Consensus {
  std::vector<int> inliers;
  double cost = std::numeric_limits<double>::infinity();
};

template <typename Residual>
Consensus score(const std::vector<RayCorrespondence>& corrs, double threshold, Residual&& residual) {
  Consensus c;
  c.cost = 0.0;
  const double t2 = threshold * threshold;
  for (int i = 0; i < static_cast<int>(corrs.size()); ++i) {
    const double r = residual(corrs[i]);
    if (r < threshold) {
      c.inliers.push_back(i);
      c.cost += r * r;
    } else {
      c.cost += t2;
    }
  }
  return c;
}

std::vector<RayCorrespondence> subset(const std::vector<RayCorrespondence>& corrs, const std::vector<int>& idx) {
  std::vector<RayCorrespondence> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(corrs[i]);
  return out;
}

// Tukey-biweight refit of a model on its consensus set. The scale comes from
// the median inlier residual, so on clean data a stray point that happens to
// sit inside the band gets zero weight instead of tilting the fit.
template <typename Fit, typename Residual>
Eigen::Matrix3d robust_refit(const std::vector<RayCorrespondence>& corrs, Eigen::Matrix3d model, double threshold,
                             int min_support, Fit&& fit, Residual&& residual) {
  for (int iter = 0; iter < 10; ++iter) {
    std::vector<double> r;
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(corrs.size()); ++i) {
      const double v = residual(model, corrs[i]);
      if (v < threshold) {
        r.push_back(v);
        idx.push_back(i);
      }
    }
    if (static_cast<int>(idx.size()) < min_support) break;
    std::vector<double> sorted = r;
    std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
    const double sigma = std::max(1.4826 * sorted[sorted.size() / 2], 1e-6 * threshold);
    const double c = 4.685 * sigma;
    std::vector<RayCorrespondence> pts;
    std::vector<double> w;
    for (size_t k = 0; k < idx.size(); ++k) {
      if (r[k] >= c) continue;
      const double u = r[k] / c;
      pts.push_back(corrs[idx[k]]);
      w.push_back((1 - u * u) * (1 - u * u));
    }
    if (static_cast<int>(pts.size()) < min_support) break;
    const Eigen::Matrix3d next = fit(pts, w);
    const double change = (next - model).norm();
    model = next;
    if (change < 1e-14) break;
  }
  return model;
}

struct RotationModel {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Consensus consensus;
};

RotationModel ransac_rotation(const std::vector<RayCorrespondence>& corrs, const PoseParams& p) {
  const int n = static_cast<int>(corrs.size());
  auto residuals = [&](const Eigen::Matrix3d& r) {
    return score(corrs, p.ransac_threshold, [&](const auto& c) { return rotation_residual(r, c); });
  };
  RotationModel best;
  int needed = p.max_iterations;
  for (int k = 0; k < std::min(needed, p.max_iterations); ++k) {
    const auto idx = draw_sample(p.seed ^ 0x5bd1e995ULL, k, 2, n);
    const Eigen::Matrix3d r = fit_rotation(subset(corrs, idx));
    Consensus c = residuals(r);
    if (c.cost < best.consensus.cost) {
      best.rotation = r;
      best.consensus = std::move(c);
      needed = required_iterations(static_cast<int>(best.consensus.inliers.size()), n, 2, p.confidence,
                                   p.max_iterations);
    }
  }
  if (best.consensus.inliers.size() >= 2) {
    best.rotation = robust_refit(
        corrs, best.rotation, p.ransac_threshold, 2,
        [](const auto& pts, const auto& w) { return fit_rotation(pts, w); },
        [](const Eigen::Matrix3d& r, const RayCorrespondence& c) { return rotation_residual(r, c); });
    best.consensus = residuals(best.rotation);
  }
  return best;
}

struct EssentialModel {
  Eigen::Matrix3d essential = Eigen::Matrix3d::Zero();
  Consensus consensus;
};

EssentialModel ransac_essential(const std::vector<RayCorrespondence>& corrs, const PoseParams& p) {
  const int n = static_cast<int>(corrs.size());
  auto residuals = [&](const Eigen::Matrix3d& e) {
    return score(corrs, p.ransac_threshold, [&](const auto& c) { return epipolar_angle(e, c); });
  };
  EssentialModel best;
  int needed = p.max_iterations;
  for (int k = 0; k < std::min(needed, p.max_iterations); ++k) {
    const auto idx = draw_sample(p.seed, k, 5, n);
    for (const Eigen::Matrix3d& e : essential_five_point(subset(corrs, idx))) {
      Consensus c = residuals(e);
      if (c.cost < best.consensus.cost) {
        best.essential = e;
        best.consensus = std::move(c);
        needed = required_iterations(static_cast<int>(best.consensus.inliers.size()), n, 5, p.confidence,
                                     p.max_iterations);
      }
    }
  }
  if (static_cast<int>(best.consensus.inliers.size()) >= kMinCorrespondences) {
    best.essential = robust_refit(
        corrs, best.essential, p.ransac_threshold, kMinCorrespondences,
        [](const auto& pts, const auto& w) { return essential_eight_point(pts, w); },
        [](const Eigen::Matrix3d& e, const RayCorrespondence& c) { return epipolar_angle(e, c); });
    best.consensus = residuals(best.essential);
  }
  return best;
}

// Both depths positive for unit rays with lambda1 p1 = lambda2 R p2 + t.
bool in_front(const PoseCandidate& cand, const RayCorrespondence& c) {
  const Eigen::Vector3d q = cand.rotation * c.p2;
  const double a = c.p1.dot(q);
  const double b1 = c.p1.dot(cand.translation), b2 = -q.dot(cand.translation);
  const double lambda1 = b1 + a * b2, lambda2 = a * b1 + b2;
  return lambda1 > 0 && lambda2 > 0;
}

}  // namespace

std::vector<RayCorrespondence> lift_correspondences(const FlowField& field, const CameraModel& model,
                                                    const PanoramaSpec& spec) {
  std::vector<RayCorrespondence> out;
  const Pixel center = model.center();
  auto wrap_u = [&](Pixel p) {
    p.u = std::fmod(p.u, static_cast<double>(spec.width));
    if (p.u < 0) p.u += spec.width;
    return p;
  };
  auto in_annulus = [&](const Pixel& q) { return q.v >= 0.0 && q.v <= spec.height; };
  for (const auto& e : field.entries) {
    if (!e.accepted) continue;
    const Pixel q1 = wrap_u(e.p1), q2 = wrap_u(e.p2);
    if (!in_annulus(q1) || !in_annulus(q2)) continue;
    try {
      RayCorrespondence c;
      c.p1 = pixel_to_ray(model, pano_to_omni_coords(spec, center, q1));
      c.p2 = pixel_to_ray(model, pano_to_omni_coords(spec, center, q2));
      out.push_back(c);
    } catch (const DegenerateRayError&) {
    } catch (const InvalidArgument&) {
    }
  }
  if (static_cast<int>(out.size()) < kMinCorrespondences)
    throw InsufficientCorrespondencesError(static_cast<int>(out.size()),
                                           "only " + std::to_string(out.size()) + " ray correspondences (need 8)");
  return out;
}

RelativePose estimate_pose(const std::vector<RayCorrespondence>& input, const PoseParams& params) {
  const int n = static_cast<int>(input.size());
  if (n < kMinCorrespondences)
    throw InsufficientCorrespondencesError(n, "only " + std::to_string(n) + " ray correspondences (need 8)");
  std::vector<RayCorrespondence> corrs(input);
  for (auto& c : corrs) {
    c.p1.normalize();
    c.p2.normalize();
  }

  const RotationModel rot = ransac_rotation(corrs, params);
  const EssentialModel ess = ransac_essential(corrs, params);
  const int rot_count = static_cast<int>(rot.consensus.inliers.size());
  const int ess_count = static_cast<int>(ess.consensus.inliers.size());

  RelativePose pose;
  if (rot_count >= kMinCorrespondences && rot_count >= params.degenerate_inlier_share * ess_count) {
    pose.rotation = rot.rotation;
    pose.translation_dir = Eigen::Vector3d::Zero();
    pose.translation_degenerate = true;
    pose.inlier_count = rot_count;
    pose.inlier_ratio = static_cast<double>(rot_count) / n;
    return pose;
  }
  if (ess_count < kMinCorrespondences)
    throw NoConsensusError(std::max(ess_count, rot_count),
                           "no model reached 8 inliers (best " + std::to_string(std::max(ess_count, rot_count)) + ")");

  const auto candidates = decompose_essential(ess.essential);
  int best = -1, best_votes = -1;
  for (int i = 0; i < 4; ++i) {
    int votes = 0;
    for (int j : ess.consensus.inliers) votes += in_front(candidates[i], corrs[j]) ? 1 : 0;
    if (votes > best_votes) {
      best_votes = votes;
      best = i;
    }
  }
  pose.rotation = candidates[best].rotation;
  pose.translation_dir = candidates[best].translation.normalized();
  pose.essential = ess.essential;
  pose.inlier_count = ess_count;
  pose.inlier_ratio = static_cast<double>(ess_count) / n;
  return pose;
}

double geodesic_distance(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) {
  const Eigen::Quaterniond q(Eigen::Matrix3d(a.transpose() * b));
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Euler rotation_to_euler(const Eigen::Matrix3d& r) {
  Euler e;
  const double cos_pitch = std::hypot(r(2, 1), r(2, 2));
  e.pitch = std::atan2(-r(2, 0), cos_pitch);
  if (cos_pitch > 1e-12) {
    e.roll = std::atan2(r(2, 1), r(2, 2));
    e.yaw = std::atan2(r(1, 0), r(0, 0));
  } else {
    e.roll = 0.0;
    e.yaw = std::atan2(-r(0, 1), r(1, 1));
  }
  return e;
}

Eigen::Matrix3d euler_to_matrix(const Euler& e) {
  return (Eigen::AngleAxisd(e.yaw, Eigen::Vector3d::UnitZ()) * Eigen::AngleAxisd(e.pitch, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(e.roll, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

}  // namespace omnifmi
