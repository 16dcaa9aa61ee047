// Shared test utilities: deterministic generators and independent oracles.
// Everything here is test-only and must stay independent of the library's
// optimization paths it is used to check.
#pragma once

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include "rf/cones.hpp"
#include "rf/solver.hpp"

namespace testsupport {

using rf::CMat;
using rf::Mat;
using rf::Vec;

inline Vec randomVec(std::mt19937_64& rng, int n, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = g(rng);
  return v;
}

inline Mat randomMat(std::mt19937_64& rng, int r, int c, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = g(rng);
  return m;
}

// Random complex matrix with iid standard-normal real/imag parts.
inline CMat randomCMat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> g(0.0, 1.0);
  CMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = std::complex<double>(g(rng), g(rng));
  return m;
}

// Strictly feasible primal-dual pair by construction:
//   x0 strictly interior in K, y = Lam x0,
//   q0 strictly interior in K*, A = Lam^T z0 + q0.
struct FeasibleInstance {
  rf::ConicProgram program;
  Vec x0;  // strictly feasible primal point
};

inline Vec interiorPoint(std::mt19937_64& rng, const rf::ProductCone& cone) {
  Vec x(cone.ambientDim());
  x.head(cone.free_dim) = randomVec(rng, cone.free_dim);
  int off = cone.free_dim;
  for (const auto& f : cone.factors) {
    const int d = f.ambientDim();
    if (f.kind() == rf::ConeKind::Orthant) {
      std::uniform_real_distribution<double> u(0.5, 1.5);
      for (int i = 0; i < d; ++i) x(off + i) = u(rng);
    } else {
      const int s = f.psdSide();
      const CMat g = randomCMat(rng, s, s);
      const CMat p = g * g.adjoint() / double(s) + CMat::Identity(s, s);
      x.segment(off, d) = rf::hermToVec(p);
    }
    off += d;
  }
  return x;
}

inline FeasibleInstance randomStrictlyFeasible(std::mt19937_64& rng, const rf::ProductCone& cone,
                                               int rows) {
  FeasibleInstance inst;
  const int n = cone.ambientDim();
  inst.program.cone = cone;
  inst.program.constraints = randomMat(rng, rows, n);
  inst.x0 = interiorPoint(rng, cone);
  inst.program.rhs = inst.program.constraints * inst.x0;
  const Vec z0 = randomVec(rng, rows);
  Vec q0 = interiorPoint(rng, cone);
  q0.head(cone.free_dim).setZero();  // dual of free coords is {0}
  inst.program.objective = inst.program.constraints.transpose() * z0 + q0;
  return inst;
}

// Exhaustive basic-feasible-solution enumeration for the pure-orthant standard
// form min c.x s.t. Ax = b, x >= 0. Independent LP oracle for small dims.
inline std::optional<double> lpVertexOptimum(const Vec& c, const Mat& a, const Vec& b,
                                             double tol = 1e-9) {
  const int n = static_cast<int>(a.cols());
  const int m = static_cast<int>(a.rows());
  std::optional<double> best;
  std::vector<int> comb(m);
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;

  std::vector<bool> select(n, false);
  std::fill(select.begin(), select.begin() + std::min(n, m), true);
  std::sort(select.begin(), select.end());
  // iterate over all m-subsets via std::prev_permutation on a sorted mask
  std::vector<bool> mask(n, false);
  std::fill(mask.end() - std::min(n, m), mask.end(), true);
  do {
    std::vector<int> cols;
    for (int i = 0; i < n; ++i)
      if (mask[i]) cols.push_back(i);
    if (static_cast<int>(cols.size()) != m) continue;
    Mat basis(m, m);
    for (int k = 0; k < m; ++k) basis.col(k) = a.col(cols[k]);
    Eigen::FullPivLU<Mat> lu(basis);
    if (!lu.isInvertible()) continue;
    const Vec xb = lu.solve(b);
    if (xb.minCoeff() < -tol) continue;
    Vec x = Vec::Zero(n);
    for (int k = 0; k < m; ++k) x(cols[k]) = xb(k);
    const double obj = c.dot(x);
    if (!best || obj < *best) best = obj;
  } while (std::next_permutation(mask.begin(), mask.end()));
  return best;
}

// Hardy-Littlewood-Polya majorization test: q is reachable from p by a doubly
// stochastic map iff q is majorized by p.
inline bool majorizes(Vec p, Vec q, double tol = 1e-11) {
  std::sort(p.data(), p.data() + p.size(), std::greater<double>());
  std::sort(q.data(), q.data() + q.size(), std::greater<double>());
  double sp = 0, sq = 0;
  for (int i = 0; i < p.size(); ++i) {
    sp += p(i);
    sq += q(i);
    if (sq > sp + tol) return false;
  }
  return std::abs(sp - sq) <= 1e-9;
}

}  // namespace testsupport
