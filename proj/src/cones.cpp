#include "rf/cones.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <mutex>

namespace rf {

namespace {
WarnHandler g_warn_handler;  // empty -> stderr

constexpr double kSqrt2Inv = 0.7071067811865475244;
}  // namespace

void warn(const std::string& message) {
  if (g_warn_handler) {
    g_warn_handler(message);
  } else {
    std::cerr << "warning: " << message << "\n";
  }
}

WarnHandler setWarnHandler(WarnHandler handler) {
  std::swap(g_warn_handler, handler);
  return handler;
}

void requireFinite(const Vec& x, const char* what) {
  if (!x.allFinite()) throw ContractViolation(std::string(what) + ": non-finite entry");
}

void requireFinite(const Mat& x, const char* what) {
  if (!x.allFinite()) throw ContractViolation(std::string(what) + ": non-finite entry");
}

int hermSideFromAmbient(int ambient_dim) {
  const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ambient_dim))));
  if (side * side != ambient_dim)
    throw ContractViolation("hermitian ambient dimension must be a perfect square, got " +
                            std::to_string(ambient_dim));
  return side;
}

Vec hermToVec(const CMat& h) {
  const int d = static_cast<int>(h.rows());
  if (h.cols() != d) throw ContractViolation("hermToVec: matrix not square");
  Vec v(d * d);
  for (int i = 0; i < d; ++i) v(i) = h(i, i).real();
  int k = d;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) v(k++) = (h(i, j).real() + h(j, i).real()) * kSqrt2Inv;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) v(k++) = (h(j, i).imag() - h(i, j).imag()) * kSqrt2Inv;
  return v;
}

CMat vecToHerm(const Vec& v) {
  const int d = hermSideFromAmbient(static_cast<int>(v.size()));
  CMat h = CMat::Zero(d, d);
  for (int i = 0; i < d; ++i) h(i, i) = v(i);
  int k = d;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      h(i, j) += std::complex<double>(v(k) * kSqrt2Inv, 0.0);
      h(j, i) += std::complex<double>(v(k) * kSqrt2Inv, 0.0);
      ++k;
    }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      h(i, j) += std::complex<double>(0.0, -v(k) * kSqrt2Inv);
      h(j, i) += std::complex<double>(0.0, v(k) * kSqrt2Inv);
      ++k;
    }
  return h;
}

Vec hermEigenvalues(const Vec& v) {
  Eigen::SelfAdjointEigenSolver<CMat> es(vecToHerm(v), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

ConeSpec ConeSpec::orthant(int dim) {
  if (dim <= 0) throw ContractViolation("orthant cone needs positive dimension");
  return ConeSpec(ConeKind::Orthant, dim);
}

ConeSpec ConeSpec::psd(int side) {
  if (side <= 0) throw ContractViolation("psd cone needs positive matrix side");
  ConeSpec c(ConeKind::Psd, side * side);
  c.psd_side_ = side;
  return c;
}

ConeSpec ConeSpec::generated(Mat generators) {
  requireFinite(generators, "cone generators");
  if (generators.rows() <= 0 || generators.cols() <= 0)
    throw ContractViolation("generated cone needs at least one generator");
  for (int j = 0; j < generators.cols(); ++j)
    if (generators.col(j).norm() == 0.0)
      throw ContractViolation("generated cone: generator " + std::to_string(j) + " is zero");

  ConeSpec c(ConeKind::Generated, static_cast<int>(generators.rows()));
  c.generators_ = std::move(generators);

  // Pointedness: 0 must not be a convex combination of the normalized
  // generators. Tested as an NNLS feasibility problem.
  const Mat& g = c.generators_;
  Mat a(g.rows() + 1, g.cols());
  for (int j = 0; j < g.cols(); ++j) a.col(j).head(g.rows()) = g.col(j) / g.col(j).norm();
  a.row(g.rows()).setOnes();
  Vec b = Vec::Zero(g.rows() + 1);
  b(g.rows()) = 1.0;
  const Vec lambda = nnls(a, b);
  c.pointed_ = (a * lambda - b).norm() > 1e-9;
  if (!c.pointed_) throw ContractViolation("generated cone is not pointed");

  if (Eigen::ColPivHouseholderQR<Mat>(g).rank() < g.rows())
    warn("generated cone is not full-dimensional (span of generators is a proper subspace)");
  return c;
}

int ConeSpec::psdSide() const {
  if (kind_ != ConeKind::Psd) throw UnsupportedOperation("psdSide: not a psd cone");
  return psd_side_;
}

const Mat& ConeSpec::generators() const {
  if (kind_ != ConeKind::Generated) throw UnsupportedOperation("generators: not a generated cone");
  return generators_;
}

bool ConeSpec::operator==(const ConeSpec& other) const {
  if (kind_ != other.kind_ || ambient_dim_ != other.ambient_dim_) return false;
  if (kind_ == ConeKind::Generated)
    return generators_.rows() == other.generators_.rows() &&
           generators_.cols() == other.generators_.cols() && generators_ == other.generators_;
  return true;
}

double defaultMemberTol(const Vec& x) { return 1e-8 * std::max(1.0, x.norm()); }

namespace {

void checkDim(const ConeSpec& cone, const Vec& x, const char* what) {
  if (x.size() != cone.ambientDim())
    throw ContractViolation(std::string(what) + ": dimension mismatch, got " +
                            std::to_string(x.size()) + ", cone ambient dim " +
                            std::to_string(cone.ambientDim()));
}

}  // namespace

bool member(const ConeSpec& cone, const Vec& x, double tol) {
  checkDim(cone, x, "member");
  requireFinite(x, "member");
  if (tol <= 0) throw ContractViolation("member: tolerance must be positive");
  switch (cone.kind()) {
    case ConeKind::Orthant:
      return x.minCoeff() >= -tol;
    case ConeKind::Psd:
      return hermEigenvalues(x).minCoeff() >= -tol;
    case ConeKind::Generated: {
      const Vec lambda = nnls(cone.generators(), x);
      return (cone.generators() * lambda - x).norm() <= tol;
    }
  }
  return false;
}

bool dualMember(const ConeSpec& cone, const Vec& e, double tol) {
  checkDim(cone, e, "dualMember");
  requireFinite(e, "dualMember");
  if (tol <= 0) throw ContractViolation("dualMember: tolerance must be positive");
  if (cone.kind() == ConeKind::Generated)
    return (cone.generators().transpose() * e).minCoeff() >= -tol;
  return member(cone, e, tol);  // orthant and psd are self-dual
}

Vec project(const ConeSpec& cone, const Vec& x) {
  checkDim(cone, x, "project");
  switch (cone.kind()) {
    case ConeKind::Orthant:
      return x.cwiseMax(0.0);
    case ConeKind::Psd: {
      Eigen::SelfAdjointEigenSolver<CMat> es(vecToHerm(x));
      const Vec clamped = es.eigenvalues().cwiseMax(0.0);
      const CMat back =
          es.eigenvectors() * clamped.asDiagonal() * es.eigenvectors().adjoint();
      return hermToVec(back);
    }
    case ConeKind::Generated:
      throw UnsupportedOperation(
          "project: generated cones have no direct projection; the solver lifts them to "
          "generator coordinates");
  }
  return x;
}

double coneDistance(const ConeSpec& cone, const Vec& x) {
  checkDim(cone, x, "coneDistance");
  if (cone.kind() == ConeKind::Generated) {
    const Vec lambda = nnls(cone.generators(), x);
    return (cone.generators() * lambda - x).norm();
  }
  return (x - project(cone, x)).norm();
}

double dualConeDistance(const ConeSpec& cone, const Vec& e) {
  checkDim(cone, e, "dualConeDistance");
  if (cone.kind() == ConeKind::Generated) {
    // dist(e, C*) for C = cone(G): lower-bounded by the worst violated
    // generator halfspace; exact when one halfspace dominates. Sufficient as
    // a residual measure at the tolerances used here.
    double worst = 0.0;
    const Mat& g = cone.generators();
    for (int j = 0; j < g.cols(); ++j) {
      const double v = g.col(j).dot(e) / g.col(j).norm();
      worst = std::max(worst, -v);
    }
    return worst;
  }
  return (e - project(cone, e)).norm();
}

Vec nnls(const Mat& a, const Vec& b, double tol, int max_iter) {
  const int n = static_cast<int>(a.cols());
  if (a.rows() != b.size()) throw ContractViolation("nnls: dimension mismatch");
  if (max_iter <= 0) max_iter = 3 * n + 30;

  std::vector<bool> passive(n, false);
  Vec x = Vec::Zero(n);
  Vec w = a.transpose() * b;
  const double wtol = tol * std::max(1.0, b.norm()) * std::max(1.0, a.norm());

  auto solvePassive = [&](Vec& z) {
    std::vector<int> idx;
    for (int j = 0; j < n; ++j)
      if (passive[j]) idx.push_back(j);
    z = Vec::Zero(n);
    if (idx.empty()) return;
    Mat ap(a.rows(), idx.size());
    for (size_t k = 0; k < idx.size(); ++k) ap.col(k) = a.col(idx[k]);
    const Vec zp = ap.colPivHouseholderQr().solve(b);
    for (size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(k);
  };

  for (int outer = 0; outer < max_iter; ++outer) {
    int best = -1;
    double best_w = wtol;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    if (best < 0) break;
    passive[best] = true;

    Vec z;
    for (int inner = 0; inner <= max_iter; ++inner) {
      solvePassive(z);
      double alpha = 1.0;
      int blocker = -1;
      for (int j = 0; j < n; ++j) {
        if (!passive[j] || z(j) > 0) continue;
        const double denom = x(j) - z(j);
        if (denom <= 0) continue;
        const double a_j = x(j) / denom;
        if (a_j < alpha) {
          alpha = a_j;
          blocker = j;
        }
      }
      if (blocker < 0) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (int j = 0; j < n; ++j)
        if (passive[j] && x(j) <= tol * std::max(1.0, x.cwiseAbs().maxCoeff())) passive[j] = false;
      x = x.cwiseMax(0.0);
    }
    w = a.transpose() * (b - a * x);
  }
  return x;
}

int ProductCone::ambientDim() const {
  int d = free_dim;
  for (const auto& f : factors) d += f.ambientDim();
  return d;
}

bool ProductCone::hasGenerated() const {
  return std::any_of(factors.begin(), factors.end(),
                     [](const ConeSpec& f) { return f.kind() == ConeKind::Generated; });
}

Vec ProductCone::project(const Vec& x) const {
  if (x.size() != ambientDim()) throw ContractViolation("ProductCone::project: dimension mismatch");
  Vec out(x.size());
  out.head(free_dim) = x.head(free_dim);
  int off = free_dim;
  for (const auto& f : factors) {
    out.segment(off, f.ambientDim()) = rf::project(f, x.segment(off, f.ambientDim()));
    off += f.ambientDim();
  }
  return out;
}

Vec ProductCone::projectDual(const Vec& x) const {
  if (x.size() != ambientDim())
    throw ContractViolation("ProductCone::projectDual: dimension mismatch");
  Vec out = Vec::Zero(x.size());
  int off = free_dim;
  for (const auto& f : factors) {
    // orthant and psd factors are self-dual; generated factors never reach the
    // solver's projection path (they are lifted first).
    out.segment(off, f.ambientDim()) = rf::project(f, x.segment(off, f.ambientDim()));
    off += f.ambientDim();
  }
  return out;
}

double ProductCone::distance(const Vec& x) const {
  double sq = 0.0;
  int off = free_dim;
  for (const auto& f : factors) {
    const double d = coneDistance(f, x.segment(off, f.ambientDim()));
    sq += d * d;
    off += f.ambientDim();
  }
  return std::sqrt(sq);
}

double ProductCone::dualDistance(const Vec& x) const {
  double sq = x.head(free_dim).squaredNorm();  // dual of free coords is {0}
  int off = free_dim;
  for (const auto& f : factors) {
    const double d = dualConeDistance(f, x.segment(off, f.ambientDim()));
    sq += d * d;
    off += f.ambientDim();
  }
  return std::sqrt(sq);
}

}  // namespace rf
