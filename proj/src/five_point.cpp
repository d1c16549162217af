// Minimal and linear essential-matrix solvers for unit bearing vectors.
//
// The five-point solver follows the Groebner-basis formulation: the essential
// matrix is sought in the 4-D null space of the five epipolar constraints,
// E = x*X + y*Y + z*Z + W. The cubic constraints det(E) = 0 and
// 2 E E^T E - trace(E E^T) E = 0 give ten equations in the twenty monomials of
// degree <= 3. After eliminating the ten cubic monomials, the remaining ten
// span the quotient ring and the action matrix of multiplication by x is read
// off directly; its eigenvectors hold the monomial values of each solution.

#include <Eigen/Dense>
#include <array>
#include <cmath>

#include "omnifmi/pose.hpp"

namespace omnifmi {

namespace {

// Cubic monomials first (eliminated), then the quotient basis
// x^2 xy xz y^2 yz z^2 x y z 1.
constexpr std::array<std::array<int, 3>, 20> kMonomials = {{
    {3, 0, 0}, {2, 1, 0}, {2, 0, 1}, {1, 2, 0}, {1, 1, 1}, {1, 0, 2}, {0, 3, 0}, {0, 2, 1}, {0, 1, 2}, {0, 0, 3},
    {2, 0, 0}, {1, 1, 0}, {1, 0, 1}, {0, 2, 0}, {0, 1, 1}, {0, 0, 2}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0, 0, 0},
}};
constexpr int kBasisOffset = 10;
constexpr int kX = 16, kY = 17, kZ = 18, kOne = 19;

struct MonomialTable {
  std::array<int, 64> index{};
  MonomialTable() {
    index.fill(-1);
    for (int i = 0; i < 20; ++i) index[kMonomials[i][0] * 16 + kMonomials[i][1] * 4 + kMonomials[i][2]] = i;
  }
  int operator()(int a, int b, int c) const { return (a + b + c > 3) ? -1 : index[a * 16 + b * 4 + c]; }
};

const MonomialTable& monomial_table() {
  static const MonomialTable t;
  return t;
}

using Poly = std::array<double, 20>;

Poly mul(const Poly& p, const Poly& q) {
  const auto& table = monomial_table();
  Poly r{};
  for (int i = 0; i < 20; ++i) {
    if (p[i] == 0.0) continue;
    for (int j = 0; j < 20; ++j) {
      if (q[j] == 0.0) continue;
      const int k = table(kMonomials[i][0] + kMonomials[j][0], kMonomials[i][1] + kMonomials[j][1],
                          kMonomials[i][2] + kMonomials[j][2]);
      // Products here never exceed degree 3.
      r[k] += p[i] * q[j];
    }
  }
  return r;
}

Poly add(const Poly& p, const Poly& q) {
  Poly r;
  for (int i = 0; i < 20; ++i) r[i] = p[i] + q[i];
  return r;
}

Poly scale(const Poly& p, double s) {
  Poly r;
  for (int i = 0; i < 20; ++i) r[i] = p[i] * s;
  return r;
}

using PolyMatrix = std::array<std::array<Poly, 3>, 3>;

Eigen::Matrix3d reshape(const Eigen::Matrix<double, 9, 1>& v) {
  Eigen::Matrix3d m;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) m(r, c) = v(3 * r + c);
  return m;
}

Eigen::Matrix<double, 1, 9> constraint_row(const RayCorrespondence& c) {
  Eigen::Matrix<double, 1, 9> row;
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) row(3 * r + k) = c.p1(r) * c.p2(k);
  return row;
}

}  // namespace

std::vector<Eigen::Matrix3d> essential_five_point(const std::vector<RayCorrespondence>& five) {
  Eigen::Matrix<double, 5, 9> q;
  for (int i = 0; i < 5; ++i) q.row(i) = constraint_row(five.at(i));
  Eigen::JacobiSVD<Eigen::Matrix<double, Eigen::Dynamic, 9>> svd(q, Eigen::ComputeFullV);
  const Eigen::Matrix<double, 9, 9>& v = svd.matrixV();
  const Eigen::Matrix3d basis[4] = {reshape(v.col(5)), reshape(v.col(6)), reshape(v.col(7)), reshape(v.col(8))};

  PolyMatrix e;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Poly p{};
      p[kX] = basis[0](r, c);
      p[kY] = basis[1](r, c);
      p[kZ] = basis[2](r, c);
      p[kOne] = basis[3](r, c);
      e[r][c] = p;
    }

  Eigen::Matrix<double, 10, 20> m;
  // det(E)
  const Poly det = add(add(mul(e[0][0], add(mul(e[1][1], e[2][2]), scale(mul(e[1][2], e[2][1]), -1))),
                           scale(mul(e[0][1], add(mul(e[1][0], e[2][2]), scale(mul(e[1][2], e[2][0]), -1))), -1)),
                       mul(e[0][2], add(mul(e[1][0], e[2][1]), scale(mul(e[1][1], e[2][0]), -1))));
  for (int k = 0; k < 20; ++k) m(0, k) = det[k];

  // E E^T (quadratic entries) and its trace.
  PolyMatrix eet;
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Poly s{};
      for (int k = 0; k < 3; ++k) s = add(s, mul(e[r][k], e[c][k]));
      eet[r][c] = s;
    }
  const Poly trace = add(add(eet[0][0], eet[1][1]), eet[2][2]);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) {
      Poly s{};
      for (int k = 0; k < 3; ++k) s = add(s, mul(eet[r][k], e[k][c]));
      const Poly row = add(scale(s, 2.0), scale(mul(trace, e[r][c]), -1.0));
      for (int k = 0; k < 20; ++k) m(1 + 3 * r + c, k) = row[k];
    }

  const Eigen::Matrix<double, 10, 10> cubic = m.leftCols<10>();
  Eigen::FullPivLU<Eigen::Matrix<double, 10, 10>> lu(cubic);
  if (lu.rank() < 10) return {};
  const Eigen::Matrix<double, 10, 10> g = lu.solve(m.rightCols<10>());

  // Row i expresses x * basis_i in the basis.
  Eigen::Matrix<double, 10, 10> action = Eigen::Matrix<double, 10, 10>::Zero();
  const auto& table = monomial_table();
  for (int i = 0; i < 10; ++i) {
    const auto& mono = kMonomials[kBasisOffset + i];
    const int target = table(mono[0] + 1, mono[1], mono[2]);
    if (target >= kBasisOffset) action(i, target - kBasisOffset) = 1.0;
    else action.row(i) = -g.row(target);
  }

  Eigen::EigenSolver<Eigen::Matrix<double, 10, 10>> es(action);
  if (es.info() != Eigen::Success) return {};
  std::vector<Eigen::Matrix3d> out;
  for (int i = 0; i < 10; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda.imag()) > 1e-8 * std::max(1.0, std::abs(lambda))) continue;
    const Eigen::Matrix<std::complex<double>, 10, 1> vec = es.eigenvectors().col(i);
    const std::complex<double> one = vec(kOne - kBasisOffset);
    if (std::abs(one) < 1e-12) continue;
    const double x = (vec(kX - kBasisOffset) / one).real();
    const double y = (vec(kY - kBasisOffset) / one).real();
    const double z = (vec(kZ - kBasisOffset) / one).real();
    Eigen::Matrix3d ess = x * basis[0] + y * basis[1] + z * basis[2] + basis[3];
    const double n = ess.norm();
    if (!(n > 0) || !std::isfinite(n)) continue;
    out.push_back(ess / n);
  }
  return out;
}

Eigen::Matrix3d essential_eight_point(const std::vector<RayCorrespondence>& corrs) {
  return essential_eight_point(corrs, {});
}

Eigen::Matrix3d essential_eight_point(const std::vector<RayCorrespondence>& corrs, const std::vector<double>& weights) {
  Eigen::Matrix<double, Eigen::Dynamic, 9> a(corrs.size(), 9);
  for (size_t i = 0; i < corrs.size(); ++i)
    a.row(static_cast<Eigen::Index>(i)) = constraint_row(corrs[i]) * (weights.empty() ? 1.0 : std::sqrt(weights[i]));
  // Smallest eigenvector of A^T A equals the smallest right singular vector.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 9, 9>> eig(a.transpose() * a);
  const Eigen::Matrix3d raw = reshape(eig.eigenvectors().col(0));
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(raw, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector3d sv(1.0, 1.0, 0.0);
  return svd.matrixU() * sv.asDiagonal() * svd.matrixV().transpose() / std::sqrt(2.0);
}

double epipolar_angle(const Eigen::Matrix3d& e, const RayCorrespondence& c) {
  const Eigen::Vector3d n1 = e * c.p2;              // epipolar plane normal in frame 1
  const Eigen::Vector3d n2 = e.transpose() * c.p1;  // and in frame 2
  const double l1 = n1.norm(), l2 = n2.norm();
  if (l1 < 1e-15 || l2 < 1e-15) return M_PI / 2;
  const double a1 = std::asin(std::min(1.0, std::abs(c.p1.dot(n1)) / (l1 * c.p1.norm())));
  const double a2 = std::asin(std::min(1.0, std::abs(c.p2.dot(n2)) / (l2 * c.p2.norm())));
  return std::max(a1, a2);
}

std::vector<PoseCandidate> decompose_essential(const Eigen::Matrix3d& e) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU(), v = svd.matrixV();
  if (u.determinant() < 0) u = -u;
  if (v.determinant() < 0) v = -v;
  Eigen::Matrix3d w;
  w << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  const Eigen::Matrix3d ra = u * w * v.transpose();
  const Eigen::Matrix3d rb = u * w.transpose() * v.transpose();
  const Eigen::Vector3d t = u.col(2);
  return {{ra, t}, {ra, -t}, {rb, t}, {rb, -t}};
}

Eigen::Matrix3d fit_rotation(const std::vector<RayCorrespondence>& corrs) { return fit_rotation(corrs, {}); }

Eigen::Matrix3d fit_rotation(const std::vector<RayCorrespondence>& corrs, const std::vector<double>& weights) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
  for (size_t i = 0; i < corrs.size(); ++i)
    m += (weights.empty() ? 1.0 : weights[i]) * corrs[i].p1 * corrs[i].p2.transpose();
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d fix = Eigen::Matrix3d::Identity();
  fix(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
  return svd.matrixU() * fix * svd.matrixV().transpose();
}

}  // namespace omnifmi
