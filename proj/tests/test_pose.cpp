#include <gtest/gtest.h>

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "omnifmi/error.hpp"
#include "omnifmi/pose.hpp"
#include "omnifmi/synthgen.hpp"
#include "test_support.hpp"

using namespace omnifmi;
using testing_support::kDeg;

namespace {

Eigen::Vector3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  return Eigen::Vector3d(n(rng), n(rng), n(rng)).normalized();
}

Eigen::Matrix3d random_rotation(std::mt19937_64& rng, double max_angle) {
  std::uniform_real_distribution<double> u(0, max_angle);
  return Eigen::AngleAxisd(u(rng), random_unit(rng)).toRotationMatrix();
}

// Rays of random scene points: p2 in frame 2, p1 = normalize(R X2 + t).
std::vector<RayCorrespondence> scene_rays(int n, const Eigen::Matrix3d& r, const Eigen::Vector3d& t,
                                          uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> depth(2, 10);
  std::vector<RayCorrespondence> out;
  while (static_cast<int>(out.size()) < n) {
    const Eigen::Vector3d p2 = random_unit(rng);
    const Eigen::Vector3d x1 = r * (depth(rng) * p2) + t;
    out.push_back({x1.normalized(), p2});
  }
  return out;
}

void add_outliers(std::vector<RayCorrespondence>& c, double share, uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int k = static_cast<int>(std::lround(share * c.size()));
  for (int i = 0; i < k; ++i) c[i].p1 = random_unit(rng);
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
  return s;
}

double rot_err(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b) { return geodesic_distance(a, b); }

}  // namespace

TEST(Pose, PureRotationIsExactAndFlagged) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Matrix3d r = random_rotation(rng, 0.5);
    const auto c = scene_rays(60, r, Eigen::Vector3d::Zero(), 100 + trial);
    const RelativePose p = estimate_pose(c);
    EXPECT_LT(rot_err(p.rotation, r), 1e-6);
    EXPECT_TRUE(p.translation_degenerate);
    EXPECT_EQ(p.inlier_count, 60);
  }
}

TEST(Pose, IdentityIsExact) {
  const auto c = scene_rays(30, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), 5);
  EXPECT_LT(rot_err(estimate_pose(c).rotation, Eigen::Matrix3d::Identity()), 1e-9);
}

TEST(Pose, RotationAndTranslation) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix3d r = random_rotation(rng, 0.4);
    const Eigen::Vector3d t = random_unit(rng);
    const RelativePose p = estimate_pose(scene_rays(100, r, t, 200 + trial));
    EXPECT_LT(rot_err(p.rotation, r), 1e-4);
    EXPECT_FALSE(p.translation_degenerate);
    EXPECT_LT(std::acos(std::clamp(p.translation_dir.dot(t), -1.0, 1.0)), 0.5 * kDeg);
  }
}

TEST(Pose, ThirtyPercentOutliers) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Matrix3d r = random_rotation(rng, 0.3);
    auto c = scene_rays(100, r, Eigen::Vector3d::Zero(), 300 + trial);
    add_outliers(c, 0.3, 400 + trial);
    const RelativePose p = estimate_pose(c);
    EXPECT_LT(rot_err(p.rotation, r), 1e-4);
    EXPECT_NEAR(p.inlier_ratio, 0.7, 0.05);

    auto ct = scene_rays(100, r, random_unit(rng), 500 + trial);
    add_outliers(ct, 0.3, 600 + trial);
    const RelativePose q = estimate_pose(ct);
    EXPECT_LT(rot_err(q.rotation, r), 1e-4);
    EXPECT_NEAR(q.inlier_ratio, 0.7, 0.05);
  }
}

TEST(Pose, DeterministicForFixedSeed) {
  auto c = scene_rays(80, Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()).toRotationMatrix(),
                      Eigen::Vector3d(0.3, 0.1, 0.9), 7);
  add_outliers(c, 0.3, 8);
  PoseParams params;
  params.seed = 42;
  const RelativePose a = estimate_pose(c, params), b = estimate_pose(c, params);
  EXPECT_EQ(a.rotation, b.rotation);
  EXPECT_EQ(a.translation_dir, b.translation_dir);
  EXPECT_EQ(a.inlier_count, b.inlier_count);
}

TEST(Pose, PermutationAndRayScaleInvariant) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.3, Eigen::Vector3d(1, 2, 3).normalized()).toRotationMatrix();
  auto c = scene_rays(50, r, Eigen::Vector3d(1, 0, 0.2), 9);
  const RelativePose base = estimate_pose(c);

  auto shuffled = c;
  std::mt19937_64 rng(10);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  EXPECT_LT(rot_err(estimate_pose(shuffled).rotation, base.rotation), 1e-6);

  auto scaled = c;
  for (auto& s : scaled) {
    s.p1 *= 3.7;
    s.p2 *= 0.2;
  }
  EXPECT_LT(rot_err(estimate_pose(scaled).rotation, base.rotation), 1e-9);
}

TEST(Pose, TooFewAndNoConsensus) {
  const auto c = scene_rays(7, Eigen::Matrix3d::Identity(), Eigen::Vector3d::Zero(), 11);
  try {
    estimate_pose(c);
    FAIL();
  } catch (const InsufficientCorrespondencesError& e) {
    EXPECT_EQ(e.count(), 7);
  }
  std::mt19937_64 rng(12);
  std::vector<RayCorrespondence> junk;
  for (int i = 0; i < 20; ++i) junk.push_back({random_unit(rng), random_unit(rng)});
  PoseParams tight;
  tight.ransac_threshold = 1e-6;
  EXPECT_THROW(estimate_pose(junk, tight), NoConsensusError);
}

TEST(FivePoint, SolutionsSatisfyConstraintsAndContainTruth) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Matrix3d r = random_rotation(rng, 0.6);
    const Eigen::Vector3d t = random_unit(rng);
    const auto c = scene_rays(5, r, t, 700 + trial);
    const auto sols = essential_five_point(c);
    ASSERT_FALSE(sols.empty());
    ASSERT_LE(sols.size(), 10u);
    Eigen::Matrix3d truth = skew(t) * r;
    truth /= truth.norm();
    double closest = 1e9;
    for (const auto& e : sols) {
      EXPECT_NEAR(e.norm(), 1.0, 1e-9);
      for (const auto& k : c) EXPECT_LT(std::abs(k.p1.dot(e * k.p2)), 1e-9);
      closest = std::min({closest, (e - truth).norm(), (e + truth).norm()});
    }
    EXPECT_LT(closest, 1e-6) << trial;
  }
}

TEST(EightPoint, ExactDataGivesTrueEssential) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(0.25, Eigen::Vector3d::UnitX()).toRotationMatrix();
  const Eigen::Vector3d t(0.2, -0.5, 0.8);
  const auto c = scene_rays(20, r, t, 14);
  Eigen::Matrix3d truth = skew(t) * r;
  truth /= truth.norm();
  const Eigen::Matrix3d e = essential_eight_point(c);
  EXPECT_LT(std::min((e / e.norm() - truth).norm(), (e / e.norm() + truth).norm()), 1e-8);
  for (const auto& k : c) EXPECT_LT(epipolar_angle(e, k), 1e-9);
}

TEST(Decompose, OneCandidateMatchesTruth) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(-0.4, Eigen::Vector3d(0, 1, 1).normalized()).toRotationMatrix();
  const Eigen::Vector3d t = Eigen::Vector3d(1, 2, -1).normalized();
  const auto cands = decompose_essential(skew(t) * r);
  ASSERT_EQ(cands.size(), 4u);
  int matches = 0;
  for (const auto& c : cands) {
    EXPECT_NEAR(c.rotation.determinant(), 1.0, 1e-9);
    if (rot_err(c.rotation, r) < 1e-9 && (c.translation.normalized() - t).norm() < 1e-9) ++matches;
  }
  EXPECT_EQ(matches, 1);
}

TEST(FitRotation, Procrustes) {
  const Eigen::Matrix3d r = Eigen::AngleAxisd(2.5, Eigen::Vector3d(0.3, -1, 0.2).normalized()).toRotationMatrix();
  EXPECT_LT(rot_err(fit_rotation(scene_rays(10, r, Eigen::Vector3d::Zero(), 15)), r), 1e-12);
  EXPECT_NEAR(geodesic_distance(Eigen::AngleAxisd(0.7, Eigen::Vector3d::UnitZ()).toRotationMatrix(),
                                Eigen::Matrix3d::Identity()),
              0.7, 1e-12);
}

TEST(Euler, Examples) {
  const Euler y = rotation_to_euler(Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ()).toRotationMatrix());
  EXPECT_NEAR(y.roll, 0, 1e-12);
  EXPECT_NEAR(y.pitch, 0, 1e-12);
  EXPECT_NEAR(y.yaw, 0.3, 1e-12);
  const Euler p = rotation_to_euler(Eigen::AngleAxisd(-0.2, Eigen::Vector3d::UnitY()).toRotationMatrix());
  EXPECT_NEAR(p.pitch, -0.2, 1e-12);
  const Euler r = rotation_to_euler(Eigen::AngleAxisd(1.0, Eigen::Vector3d::UnitX()).toRotationMatrix());
  EXPECT_NEAR(r.roll, 1.0, 1e-12);
  const Eigen::Matrix3d m = euler_to_matrix({0.1, 0.2, 0.3});
  const Eigen::Matrix3d expect = (Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitZ()) *
                                  Eigen::AngleAxisd(0.2, Eigen::Vector3d::UnitY()) *
                                  Eigen::AngleAxisd(0.1, Eigen::Vector3d::UnitX()))
                                     .toRotationMatrix();
  EXPECT_LT((m - expect).norm(), 1e-15);
}

TEST(Euler, RoundTrip) {
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> a(-std::numbers::pi, std::numbers::pi), b(-1.55, 1.55);
  for (int i = 0; i < 1000; ++i) {
    const Euler e{a(rng), b(rng), a(rng)};
    const Euler back = rotation_to_euler(euler_to_matrix(e));
    EXPECT_NEAR(wrap_angle(back.roll - e.roll), 0, 1e-9);
    EXPECT_NEAR(back.pitch, e.pitch, 1e-9);
    EXPECT_NEAR(wrap_angle(back.yaw - e.yaw), 0, 1e-9);
  }
  for (int i = 0; i < 1000; ++i) {
    const Eigen::Matrix3d r = random_rotation(rng, std::numbers::pi);
    EXPECT_LT((euler_to_matrix(rotation_to_euler(r)) - r).norm(), 1e-9);
  }
}

TEST(Euler, GimbalLockKeepsMatrix) {
  const Eigen::Matrix3d r = euler_to_matrix({0.4, std::numbers::pi / 2, -0.3});
  const Euler e = rotation_to_euler(r);
  EXPECT_DOUBLE_EQ(e.roll, 0.0);
  EXPECT_LT((euler_to_matrix(e) - r).norm(), 1e-9);
}

class Lift : public ::testing::Test {
 protected:
  Lift() : model(synthetic_camera(1024, 768)), spec(default_panorama_spec(model)) {}

  FlowField field(int count, double shift) const {
    FlowField f;
    for (int i = 0; i < count; ++i) {
      FlowEntry e;
      e.tile_index = i;
      e.accepted = true;
      e.p2 = {150.0 + 200.0 * i, 40.0 + 15.0 * (i % 10)};
      e.p1 = {e.p2.u - shift, e.p2.v};
      f.entries.push_back(e);
    }
    return f;
  }

  CameraModel model;
  PanoramaSpec spec;
};

TEST_F(Lift, ZeroFlowGivesEqualRays) {
  const auto c = lift_correspondences(field(12, 0), model, spec);
  ASSERT_EQ(c.size(), 12u);
  for (const auto& k : c) EXPECT_LT((k.p1 - k.p2).norm(), 1e-12);
}

TEST_F(Lift, ColumnShiftIsAzimuthRotation) {
  const double k = 10.0;
  const auto c = lift_correspondences(field(12, k), model, spec);
  const double expect = 360.0 * k / spec.width;
  for (const auto& r : c) {
    const double d = wrap_angle(std::atan2(r.p2.y(), r.p2.x()) - std::atan2(r.p1.y(), r.p1.x())) / kDeg;
    EXPECT_NEAR(d, expect, 0.2);
    EXPECT_NEAR(r.p1.z() / r.p1.head<2>().norm(), r.p2.z() / r.p2.head<2>().norm(), 1e-9);
  }
}

TEST_F(Lift, SkipsRejectedAndCountsShortfall) {
  FlowField f = field(12, 0);
  for (int i = 0; i < 7; ++i) f.entries[i].accepted = false;
  try {
    lift_correspondences(f, model, spec);
    FAIL();
  } catch (const InsufficientCorrespondencesError& e) {
    EXPECT_EQ(e.count(), 5);
  }
}

TEST_F(Lift, WrapsColumnsAndDropsOffAnnulus) {
  FlowField f = field(10, 0);
  f.entries[0].p1.u = -3.0;  // wraps to W - 3
  f.entries[1].p1.v = spec.height + 20.0;
  const auto c = lift_correspondences(f, model, spec);
  EXPECT_EQ(c.size(), 9u);
}
