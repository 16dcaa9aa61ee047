#include "rf/solver.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace rf {

void ConicProgram::validate() const {
  requireFinite(objective, "program objective");
  requireFinite(rhs, "program rhs");
  requireFinite(constraints, "program constraints");
  if (constraints.cols() != objective.size())
    throw ContractViolation("program: constraint columns != variable dimension");
  if (constraints.rows() != rhs.size())
    throw ContractViolation("program: constraint rows != rhs dimension");
  if (cone.ambientDim() != objective.size())
    throw ContractViolation("program: cone ambient dim != variable dimension");
}

const char* statusName(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::PrimalInfeasible: return "primal_infeasible";
    case SolveStatus::DualInfeasible: return "dual_infeasible";
    case SolveStatus::MaxIterations: return "max_iterations";
  }
  return "?";
}

std::ostream& operator<<(std::ostream& os, SolveStatus s) { return os << statusName(s); }

namespace {

// ---------------------------------------------------------------------------
// Lift of generated factors: each Generated block x_B = G l_B with l_B in the
// orthant. L maps lifted coordinates back to the original ones.

struct Lift {
  bool trivial = true;
  ConicProgram lifted;  // program in lifted coordinates
};

Lift liftGenerated(const ConicProgram& p) {
  Lift lift;
  if (!p.cone.hasGenerated()) {
    lift.trivial = true;
    lift.lifted = p;
    return lift;
  }
  lift.trivial = false;

  ProductCone lifted_cone;
  lifted_cone.free_dim = p.cone.free_dim;

  int orig_off = p.cone.free_dim;
  int lifted_dim = p.cone.free_dim;
  struct Seg {
    int orig_off, orig_dim, lifted_off, lifted_dim;
    const Mat* g;  // null for pass-through
  };
  std::vector<Seg> segs;
  segs.push_back({0, p.cone.free_dim, 0, p.cone.free_dim, nullptr});
  for (const auto& f : p.cone.factors) {
    if (f.kind() == ConeKind::Generated) {
      const Mat& g = f.generators();
      lifted_cone.factors.push_back(ConeSpec::orthant(static_cast<int>(g.cols())));
      segs.push_back({orig_off, f.ambientDim(), lifted_dim, static_cast<int>(g.cols()), &g});
      lifted_dim += static_cast<int>(g.cols());
    } else {
      lifted_cone.factors.push_back(f);
      segs.push_back({orig_off, f.ambientDim(), lifted_dim, f.ambientDim(), nullptr});
      lifted_dim += f.ambientDim();
    }
    orig_off += f.ambientDim();
  }

  ConicProgram q;
  q.cone = std::move(lifted_cone);
  q.rhs = p.rhs;
  q.objective = Vec::Zero(lifted_dim);
  q.constraints = Mat::Zero(p.constraints.rows(), lifted_dim);
  for (const auto& s : segs) {
    if (s.orig_dim == 0) continue;
    if (s.g) {
      q.objective.segment(s.lifted_off, s.lifted_dim) =
          s.g->transpose() * p.objective.segment(s.orig_off, s.orig_dim);
      q.constraints.middleCols(s.lifted_off, s.lifted_dim) =
          p.constraints.middleCols(s.orig_off, s.orig_dim) * (*s.g);
    } else {
      q.objective.segment(s.lifted_off, s.lifted_dim) = p.objective.segment(s.orig_off, s.orig_dim);
      q.constraints.middleCols(s.lifted_off, s.lifted_dim) =
          p.constraints.middleCols(s.orig_off, s.orig_dim);
    }
  }
  lift.lifted = std::move(q);
  return lift;
}

Vec liftBack(const ConicProgram& original, const ConicProgram& lifted, const Vec& xl) {
  Vec x(original.numVars());
  x.head(original.cone.free_dim) = xl.head(original.cone.free_dim);
  int orig_off = original.cone.free_dim;
  int lift_off = lifted.cone.free_dim;
  for (const auto& f : original.cone.factors) {
    if (f.kind() == ConeKind::Generated) {
      const Mat& g = f.generators();
      x.segment(orig_off, f.ambientDim()) = g * xl.segment(lift_off, g.cols());
      lift_off += static_cast<int>(g.cols());
    } else {
      x.segment(orig_off, f.ambientDim()) = xl.segment(lift_off, f.ambientDim());
      lift_off += f.ambientDim();
    }
    orig_off += f.ambientDim();
  }
  return x;
}

// ---------------------------------------------------------------------------
// Ruiz equilibration with block-uniform column scales (a psd or generated
// block must keep a single scale so the cone is preserved).

struct Scaling {
  Vec row;   // E
  Vec col;   // D
  double sc_b = 1.0;
  double sc_c = 1.0;
};

Scaling equilibrate(Mat& a, const ProductCone& cone) {
  const int m = static_cast<int>(a.rows());
  const int n = static_cast<int>(a.cols());
  Scaling s;
  s.row = Vec::Ones(m);
  s.col = Vec::Ones(n);
  if (m == 0 || n == 0) return s;

  std::vector<std::pair<int, int>> col_groups;  // offset, dim
  for (int i = 0; i < cone.free_dim; ++i) col_groups.emplace_back(i, 1);
  int off = cone.free_dim;
  for (const auto& f : cone.factors) {
    if (f.kind() == ConeKind::Orthant) {
      for (int i = 0; i < f.ambientDim(); ++i) col_groups.emplace_back(off + i, 1);
    } else {
      col_groups.emplace_back(off, f.ambientDim());
    }
    off += f.ambientDim();
  }

  for (int pass = 0; pass < 10; ++pass) {
    Vec dr(m), dc = Vec::Ones(n);
    for (int i = 0; i < m; ++i) {
      const double v = a.row(i).cwiseAbs().maxCoeff();
      dr(i) = v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0;
    }
    for (const auto& [go, gd] : col_groups) {
      const double v = a.middleCols(go, gd).cwiseAbs().maxCoeff();
      const double f = v > 1e-12 ? 1.0 / std::sqrt(v) : 1.0;
      dc.segment(go, gd).setConstant(f);
    }
    a = dr.asDiagonal() * a * dc.asDiagonal();
    s.row.array() *= dr.array();
    s.col.array() *= dc.array();
  }
  return s;
}

struct Workspace {
  // scaled data
  Mat lam;
  Vec c, b;
  ProductCone cone;
  Eigen::LLT<Mat> llt;  // I + lam^T lam
  Vec h, g;
  double denom_g = 1.0;

  void factor() {
    const int n = static_cast<int>(lam.cols());
    Mat k = Mat::Identity(n, n);
    k.noalias() += lam.transpose() * lam;
    llt.compute(k);
    if (llt.info() != Eigen::Success) throw SolverFailure("KKT factorization failed");
    h.resize(n + lam.rows());
    h << c, -b;
    g = applyMinv(h);
    denom_g = 1.0 + h.dot(g);
  }

  // M = [[I, -lam^T],[lam, I]]
  Vec applyMinv(const Vec& r) const {
    const int n = static_cast<int>(lam.cols());
    const int m = static_cast<int>(lam.rows());
    Vec px = llt.solve(r.head(n) + lam.transpose() * r.tail(m));
    Vec out(n + m);
    out.head(n) = px;
    out.tail(m) = r.tail(m) - lam * px;
    return out;
  }

  // (I + Q)^{-1} with Q the HSDE skew matrix.
  void solveIpQ(const Vec& wxz, double wtau, Vec& uxz, double& utau) const {
    const int n = static_cast<int>(lam.cols());
    Vec p = applyMinv(wxz - wtau * h);
    p -= g * (h.dot(p) / denom_g);
    uxz = p;
    utau = wtau + c.dot(p.head(n)) - b.dot(p.tail(lam.rows()));
  }
};

struct Residuals {
  double pres = std::numeric_limits<double>::infinity();
  double dres = std::numeric_limits<double>::infinity();
  double gap = std::numeric_limits<double>::infinity();
  double pobj = 0.0, dobj = 0.0;
};

Residuals evalResiduals(const ConicProgram& p, const Vec& x, const Vec& z, const Vec& q) {
  Residuals r;
  r.pobj = p.objective.dot(x);
  r.dobj = p.rhs.dot(z);
  r.pres = (p.constraints * x - p.rhs).norm() / (1.0 + p.rhs.norm());
  r.dres = (p.objective - p.constraints.transpose() * z - q).norm() / (1.0 + p.objective.norm());
  r.gap = std::abs(r.pobj - r.dobj) / (1.0 + std::abs(r.pobj) + std::abs(r.dobj));
  return r;
}

// ---------------------------------------------------------------------------
// Active-face polish: least-squares refinement on the faces identified by the
// converged iterate. Falls back silently when the refined point leaves the
// cone or does not improve the residuals.

struct FaceBasis {
  Mat primal;  // columns span the face of K containing x
  Mat dual;    // columns span the complementary face of K*
};

// Faces are classified from the primal-dual pair: on each self-dual factor the
// optimum satisfies x*.q* = 0, so the spectrum of x - q splits into the primal
// part (nonnegative eigenvalues) and the dual part (negative ones).
FaceBasis faceBasis(const ProductCone& cone, const Vec& x, const Vec& q) {
  const int n = cone.ambientDim();
  std::vector<Vec> pcols, dcols;
  for (int i = 0; i < cone.free_dim; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    pcols.push_back(e);
  }
  int off = cone.free_dim;
  for (const auto& f : cone.factors) {
    const int d = f.ambientDim();
    const Vec xb = x.segment(off, d);
    const Vec qb = q.segment(off, d);
    if (f.kind() == ConeKind::Orthant) {
      for (int i = 0; i < d; ++i) {
        Vec e = Vec::Zero(n);
        e(off + i) = 1.0;
        (xb(i) >= qb(i) ? pcols : dcols).push_back(e);
      }
    } else {  // psd
      Eigen::SelfAdjointEigenSolver<CMat> es(vecToHerm(xb - qb));
      const Vec ev = es.eigenvalues();
      std::vector<int> pos, zero;
      for (int i = 0; i < ev.size(); ++i) (ev(i) >= 0 ? pos : zero).push_back(i);
      auto pushSubspace = [&](const std::vector<int>& idx, std::vector<Vec>& out) {
        const int r = static_cast<int>(idx.size());
        CMat v(es.eigenvectors().rows(), r);
        for (int i = 0; i < r; ++i) v.col(i) = es.eigenvectors().col(idx[i]);
        // hermitian basis of the compressed r x r block, pushed forward
        for (int a = 0; a < r; ++a)
          for (int bI = a; bI < r; ++bI) {
            CMat hb = CMat::Zero(r, r);
            if (a == bI) {
              hb(a, a) = 1.0;
              Vec col = Vec::Zero(n);
              col.segment(off, d) = hermToVec(v * hb * v.adjoint());
              out.push_back(col);
            } else {
              hb(a, bI) = hb(bI, a) = std::complex<double>(1.0 / std::sqrt(2.0), 0);
              Vec col = Vec::Zero(n);
              col.segment(off, d) = hermToVec(v * hb * v.adjoint());
              out.push_back(col);
              hb.setZero();
              hb(a, bI) = std::complex<double>(0, -1.0 / std::sqrt(2.0));
              hb(bI, a) = std::complex<double>(0, 1.0 / std::sqrt(2.0));
              col.setZero();
              col.segment(off, d) = hermToVec(v * hb * v.adjoint());
              out.push_back(col);
            }
          }
      };
      pushSubspace(pos, pcols);
      pushSubspace(zero, dcols);
    }
    off += d;
  }
  FaceBasis fb;
  fb.primal.resize(n, static_cast<Eigen::Index>(pcols.size()));
  for (size_t i = 0; i < pcols.size(); ++i) fb.primal.col(static_cast<Eigen::Index>(i)) = pcols[i];
  fb.dual.resize(n, static_cast<Eigen::Index>(dcols.size()));
  for (size_t i = 0; i < dcols.size(); ++i) fb.dual.col(static_cast<Eigen::Index>(i)) = dcols[i];
  return fb;
}

bool tryPolish(const ConicProgram& p, Vec& x, Vec& z, Vec& q, Residuals& res,
               const SolverSettings& st) {
  const FaceBasis fb = faceBasis(p.cone, x, q);
  const int n = p.numVars();
  const int m = p.numRows();
  const auto kp = fb.primal.cols();
  const auto kd = fb.dual.cols();

  // Primal: minimize |F xi - x| subject to Lam F xi = y (regularized KKT solve).
  Vec xp = x;
  if (kp > 0) {
    Mat af = p.constraints * fb.primal;
    Mat kkt = Mat::Zero(kp + m, kp + m);
    kkt.topLeftCorner(kp, kp) = Mat::Identity(kp, kp);
    kkt.topRightCorner(kp, m) = af.transpose();
    kkt.bottomLeftCorner(m, kp) = af;
    kkt.bottomRightCorner(m, m) = -1e-12 * Mat::Identity(m, m);
    Vec rhs(kp + m);
    rhs.head(kp) = fb.primal.transpose() * x;
    rhs.tail(m) = p.rhs;
    Vec sol = kkt.partialPivLu().solve(rhs);
    xp = fb.primal * sol.head(kp);
  }
  if (p.cone.distance(xp) > 1e-9 * std::max(1.0, xp.norm())) return false;

  // Dual: minimize |[Lam^T, Fd] (z; eta) - c| on the complementary face,
  // subject to the KKT gap equation <y,z> = <c,xp> (null-space method), so the
  // reported objectives of the polished pair agree to machine precision.
  Mat ad(n, m + kd);
  ad.leftCols(m) = p.constraints.transpose();
  ad.rightCols(kd) = fb.dual;
  Vec gaprow = Vec::Zero(m + kd);
  gaprow.head(m) = p.rhs;
  Vec sol2;
  if (gaprow.norm() > 1e-12) {
    const double t0 = p.objective.dot(xp);
    const Vec xi0 = gaprow * (t0 / gaprow.squaredNorm());
    if (m + kd > 1) {
      Eigen::HouseholderQR<Mat> hh{Mat(gaprow)};
      const Mat qfull = hh.householderQ();
      const Mat nullsp = qfull.rightCols(m + kd - 1);
      const Vec eta =
          (ad * nullsp).completeOrthogonalDecomposition().solve(p.objective - ad * xi0);
      sol2 = xi0 + nullsp * eta;
    } else {
      sol2 = xi0;
    }
  } else {
    sol2 = ad.completeOrthogonalDecomposition().solve(p.objective);
  }
  Vec zp = sol2.head(m);
  Vec qp = fb.dual * sol2.tail(kd);
  if (p.cone.dualDistance(qp) > 1e-9 * std::max(1.0, qp.norm())) return false;

  const Residuals nres = evalResiduals(p, xp, zp, qp);
  if (nres.pres > st.feas_tol || nres.dres > st.feas_tol || nres.gap > st.gap_tol) return false;
  if (nres.gap > res.gap && nres.pres > res.pres) return false;
  x = xp;
  z = zp;
  q = qp;
  res = nres;
  return true;
}

}  // namespace

Solution solve(const ConicProgram& program, const SolverSettings& settings) {
  program.validate();
  if (settings.gap_tol <= 0 || settings.feas_tol <= 0 || settings.max_iters <= 0)
    throw ContractViolation("solver settings: tolerances and max_iters must be positive");

  const Lift lift = liftGenerated(program);
  const ConicProgram& lp = lift.lifted;
  const int n = lp.numVars();
  const int m = lp.numRows();

  Workspace w;
  w.lam = lp.constraints;
  w.cone = lp.cone;
  Scaling sc;
  if (settings.scaling) {
    sc = equilibrate(w.lam, lp.cone);
  } else {
    sc.row = Vec::Ones(m);
    sc.col = Vec::Ones(n);
  }
  Vec c_s = sc.col.asDiagonal() * lp.objective;
  Vec b_s = sc.row.asDiagonal() * lp.rhs;
  sc.sc_c = 1.0 / std::max(c_s.norm(), 1e-6);
  sc.sc_b = 1.0 / std::max(b_s.norm(), 1e-6);
  w.c = sc.sc_c * c_s;
  w.b = sc.sc_b * b_s;
  w.factor();

  // Governing sequence of the splitting: s in R^{n+m+1}; u = Pi_C(s),
  // v = u - s in C*, fixed point iff v = Q u. Anderson acceleration with a
  // decrease safeguard speeds up the linear tail.
  const int kTotal = n + m + 1;
  const double alpha = settings.relaxation;

  auto projC = [&](const Vec& s) {
    Vec u(kTotal);
    u.head(n) = w.cone.project(s.head(n));
    u.segment(n, m) = s.segment(n, m);
    u(kTotal - 1) = std::max(s(kTotal - 1), 0.0);
    return u;
  };
  auto stepResidual = [&](const Vec& s, Vec& u) {
    u = projC(s);
    const Vec wv = 2.0 * u - s;
    Vec txz;
    double ttau;
    w.solveIpQ(wv.head(n + m), wv(kTotal - 1), txz, ttau);
    Vec f(kTotal);
    f.head(n + m) = alpha * (txz - u.head(n + m));
    f(kTotal - 1) = alpha * (ttau - u(kTotal - 1));
    return f;
  };

  Vec s = Vec::Zero(kTotal);
  s(kTotal - 1) = 1.0;

  const int aa_memory = 10;
  std::vector<Vec> aa_s, aa_f;
  auto aaPush = [&](const Vec& sv, const Vec& fv) {
    aa_s.push_back(sv);
    aa_f.push_back(fv);
    if (static_cast<int>(aa_s.size()) > aa_memory + 1) {
      aa_s.erase(aa_s.begin());
      aa_f.erase(aa_f.begin());
    }
  };

  const int check_every = 20;
  const int infeas_start = std::max(1000, settings.max_iters / 10);

  Solution out;
  Vec best_x, best_z, best_q;
  Residuals best_res;
  // first raw convergence; polish retries until iter exceeds 3x this mark
  int first_conv = -1;
  int last_polish_attempt = -1000000;
  Vec raw_x, raw_z, raw_q;
  Residuals raw_res;
  bool have_raw = false;

  auto unscaleX = [&](const Vec& ux) { return Vec(sc.col.asDiagonal() * ux / sc.sc_b); };
  auto unscaleZ = [&](const Vec& uz) { return Vec(sc.row.asDiagonal() * uz / sc.sc_c); };
  auto unscaleQ = [&](const Vec& vx) {
    return Vec(sc.col.cwiseInverse().asDiagonal() * vx / sc.sc_c);
  };

  if (settings.trace) *settings.trace << "iter,primal_res,dual_res,gap\n";

  int iter = 0;
  for (; iter <= settings.max_iters; ++iter) {
    if (iter % check_every == 0 || iter == settings.max_iters) {
      if (!u.allFinite() || !std::isfinite(utau))
        throw SolverFailure("solver diverged at iteration " + std::to_string(iter));
      if (utau > 1e-12) {
        Vec x = unscaleX(u.head(n) / utau);
        Vec z = unscaleZ(u.tail(m) / utau);
        Vec q = unscaleQ(v.head(n) / utau);
        Residuals res = evalResiduals(lp, x, z, q);
        if (settings.trace)
          *settings.trace << iter << ',' << res.pres << ',' << res.dres << ',' << res.gap << "\n";
        best_x = x;
        best_z = z;
        best_q = q;
        best_res = res;
        const bool strict = res.pres <= settings.feas_tol && res.dres <= settings.feas_tol &&
                            res.gap <= settings.gap_tol;
        const double loose = 1e-4;
        if (strict && !settings.polish) {
          out.status = SolveStatus::Optimal;
          break;
        }
        if (settings.polish &&
            (strict || (res.pres <= loose && res.dres <= loose && res.gap <= loose &&
                        iter >= last_polish_attempt + 200))) {
          last_polish_attempt = iter;
          if (tryPolish(lp, best_x, best_z, best_q, best_res, settings)) {
            out.status = SolveStatus::Optimal;
            out.polished = true;
            break;
          }
        }
        if (strict) {
          // polish rejected: remember the converged iterate and keep
          // refining; the face subspaces sharpen with the iterate.
          if (first_conv < 0) first_conv = std::max(iter, 100);
          raw_x = x;
          raw_z = z;
          raw_q = q;
          raw_res = res;
          have_raw = true;
          if (iter >= 3 * first_conv + 300) {
            out.status = SolveStatus::Optimal;
            break;
          }
        }
      }
      if (iter >= infeas_start) {
        // homogeneous-embedding certificate tests
        Vec xr = Vec(sc.col.asDiagonal() * u.head(n));
        const double ct = lp.objective.dot(xr);
        if (ct < -1e-12) {
          xr /= -ct;
          if ((lp.constraints * xr).norm() <= settings.feas_tol * std::max(1.0, xr.norm())) {
            out.status = SolveStatus::DualInfeasible;
            out.x = liftBack(program, lp, xr);
            out.iterations = iter;
            out.primal_obj = -std::numeric_limits<double>::infinity();
            return out;
          }
        }
        Vec zr = Vec(sc.row.asDiagonal() * u.tail(m));
        const double bt = lp.rhs.dot(zr);
        if (bt > 1e-12) {
          zr /= bt;
          const Vec s = -(lp.constraints.transpose() * zr);
          if (lp.cone.dualDistance(s) <= settings.feas_tol * std::max(1.0, zr.norm())) {
            out.status = SolveStatus::PrimalInfeasible;
            out.z = zr;
            out.q = lp.cone.projectDual(s);
            out.iterations = iter;
            out.dual_obj = std::numeric_limits<double>::infinity();
            return out;
          }
        }
      }
      if (iter == settings.max_iters) break;
    }

    // one douglas-rachford step on the embedding
    Vec wxz = u + v;
    const double wtau = utau + vkappa;
    Vec txz;
    double ttau;
    w.solveIpQ(wxz, wtau, txz, ttau);
    txz = alpha * txz + (1.0 - alpha) * u;
    ttau = alpha * ttau + (1.0 - alpha) * utau;

    Vec pre = txz - v;
    const double pretau = ttau - vkappa;
    Vec un(n + m);
    un.head(n) = w.cone.project(pre.head(n));
    un.tail(m) = pre.tail(m);
    const double untau = std::max(pretau, 0.0);

    v += un - txz;
    vkappa += untau - ttau;
    u = un;
    utau = untau;
  }

  out.iterations = iter;
  if (out.status != SolveStatus::Optimal) {
    if (have_raw) {
      // converged earlier but never passed polish; report the raw iterate
      out.status = SolveStatus::Optimal;
      best_x = raw_x;
      best_z = raw_z;
      best_q = raw_q;
      best_res = raw_res;
    } else {
      out.status = SolveStatus::MaxIterations;
    }
  } else if (!out.polished && have_raw) {
    best_x = raw_x;
    best_z = raw_z;
    best_q = raw_q;
    best_res = raw_res;
  }
  if (best_x.size() == 0) {  // never produced a candidate
    best_x = Vec::Zero(n);
    best_z = Vec::Zero(m);
    best_q = Vec::Zero(n);
    best_res = evalResiduals(lp, best_x, best_z, best_q);
  }

  out.primal_obj = lp.objective.dot(best_x);
  out.dual_obj = lp.rhs.dot(best_z);
  out.gap = best_res.gap;
  out.primal_residual = best_res.pres;
  out.dual_residual = best_res.dres;
  out.z = best_z;
  if (lift.trivial) {
    out.x = best_x;
    out.q = best_q;
  } else {
    out.x = liftBack(program, lp, best_x);
    // q in original coordinates: exact stationarity residual per block, with
    // generated blocks measured against their halfspace description.
    out.q = program.objective - program.constraints.transpose() * best_z;
    out.q.head(program.cone.free_dim) =
        best_q.head(program.cone.free_dim);  // free block from the embedding
    int orig_off = program.cone.free_dim;
    int lift_off = lp.cone.free_dim;
    for (size_t i = 0; i < program.cone.factors.size(); ++i) {
      const auto& f = program.cone.factors[i];
      const int ld = lp.cone.factors[i].ambientDim();
      if (f.kind() != ConeKind::Generated)
        out.q.segment(orig_off, f.ambientDim()) = best_q.segment(lift_off, ld);
      orig_off += f.ambientDim();
      lift_off += ld;
    }
  }
  return out;
}

ConicProgram dualOf(const ConicProgram& p) {
  p.validate();
  const int m = p.numRows();
  ProgramBuilder bld;
  auto z = bld.addFree(m);

  const Mat lt = p.constraints.transpose();
  int off = 0;
  if (p.cone.free_dim > 0) {
    // dual cone of free coordinates is {0}: equality rows without slack
    bld.addRows({{z, lt.middleRows(0, p.cone.free_dim)}}, p.objective.head(p.cone.free_dim));
    off = p.cone.free_dim;
  }
  for (const auto& f : p.cone.factors) {
    const int d = f.ambientDim();
    auto s = bld.addDualCone(f);
    bld.addRows({{z, lt.middleRows(off, d)}, {s, Mat::Identity(d, d)}},
                p.objective.segment(off, d));
    off += d;
  }
  bld.addObjective(z, -p.rhs);
  return bld.build();
}

Certificate certify(const ConicProgram& program, const Solution& sol,
                    const SolverSettings& settings) {
  if (sol.status != SolveStatus::Optimal)
    throw ContractViolation("certify: solution status is not optimal");
  program.validate();

  Certificate cert;
  const auto dotL = [](const Vec& a, const Vec& b) {
    long double acc = 0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
      acc += static_cast<long double>(a(i)) * static_cast<long double>(b(i));
    return acc;
  };
  const auto normL = [&](const Vec& a) { return std::sqrt(static_cast<double>(dotL(a, a))); };

  Vec pr = program.constraints * sol.x - program.rhs;
  // rows recomputed in long double
  for (int i = 0; i < program.numRows(); ++i) {
    long double acc = -static_cast<long double>(program.rhs(i));
    for (int j = 0; j < program.numVars(); ++j)
      acc += static_cast<long double>(program.constraints(i, j)) *
             static_cast<long double>(sol.x(j));
    pr(i) = static_cast<double>(acc);
  }
  cert.primal_residual = normL(pr) / (1.0 + program.rhs.norm());

  Vec dr(program.numVars());
  for (int j = 0; j < program.numVars(); ++j) {
    long double acc = static_cast<long double>(program.objective(j)) -
                      static_cast<long double>(sol.q(j));
    for (int i = 0; i < program.numRows(); ++i)
      acc -= static_cast<long double>(program.constraints(i, j)) *
             static_cast<long double>(sol.z(i));
    dr(j) = static_cast<double>(acc);
  }
  cert.dual_residual = normL(dr) / (1.0 + program.objective.norm());

  const double pobj = static_cast<double>(dotL(program.objective, sol.x));
  const double dobj = static_cast<double>(dotL(program.rhs, sol.z));
  cert.gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
  cert.cone_violation = program.cone.distance(sol.x) + program.cone.dualDistance(sol.q);

  // Slater heuristic: max t with Lam x = y, x - t e in K, t <= 1.
  {
    ProgramBuilder bld;
    const int nf = program.cone.free_dim;
    auto x = bld.addFree(program.numVars());
    auto t = bld.addCone(ConeSpec::orthant(1));
    auto tc = bld.addCone(ConeSpec::orthant(1));
    bld.addRows({{x, program.constraints}}, program.rhs);
    int off = nf;
    for (const auto& f : program.cone.factors) {
      const int d = f.ambientDim();
      Vec e(d);
      switch (f.kind()) {
        case ConeKind::Orthant: e.setOnes(); break;
        case ConeKind::Psd: e = hermToVec(CMat::Identity(f.psdSide(), f.psdSide())); break;
        case ConeKind::Generated: e = f.generators().rowwise().sum(); break;
      }
      auto s = bld.addCone(f);
      Mat sel = Mat::Zero(d, program.numVars());
      sel.middleCols(off, d).setIdentity();
      bld.addRows({{x, sel}, {t, Mat(-e)}, {s, -Mat::Identity(d, d)}}, Vec::Zero(d));
      off += d;
    }
    bld.addRows({{t, Mat::Ones(1, 1)}, {tc, Mat::Ones(1, 1)}}, Vec::Ones(1));
    Vec obj = Vec::Ones(1) * -1.0;
    bld.addObjective(t, obj);
    SolverSettings st = settings;
    st.gap_tol = std::max(settings.gap_tol, 1e-7);
    st.feas_tol = std::max(settings.feas_tol, 1e-7);
    st.trace = nullptr;
    try {
      const Solution s = solve(bld.build(), st);
      if (s.status == SolveStatus::Optimal) {
        cert.slater_margin = -s.primal_obj;
        cert.slater_found = cert.slater_margin > 1e-5;
      }
    } catch (const SolverFailure&) {
      cert.slater_found = false;
    }
  }

  std::ostringstream fail;
  const double ctol = 10 * settings.feas_tol;
  if (cert.primal_residual > settings.feas_tol)
    fail << "primal residual " << cert.primal_residual << " > " << settings.feas_tol;
  else if (cert.dual_residual > settings.feas_tol)
    fail << "dual residual " << cert.dual_residual << " > " << settings.feas_tol;
  else if (cert.gap > settings.gap_tol)
    fail << "duality gap " << cert.gap << " > " << settings.gap_tol;
  else if (cert.cone_violation > ctol)
    fail << "cone violation " << cert.cone_violation << " > " << ctol;
  cert.failure = fail.str();
  cert.pass = cert.failure.empty();
  return cert;
}

ProgramBuilder::Block ProgramBuilder::addFree(int dim) {
  if (dim <= 0) throw ContractViolation("addFree: dimension must be positive");
  BlockInfo info;
  info.is_free = true;
  info.dim = dim;
  blocks_.push_back(std::move(info));
  return {static_cast<int>(blocks_.size()) - 1, dim};
}

ProgramBuilder::Block ProgramBuilder::addCone(ConeSpec cone) {
  BlockInfo info;
  info.dim = cone.ambientDim();
  info.cone = std::move(cone);
  blocks_.push_back(std::move(info));
  return {static_cast<int>(blocks_.size()) - 1, blocks_.back().dim};
}

ProgramBuilder::Block ProgramBuilder::addDualCone(const ConeSpec& cone) {
  if (cone.kind() != ConeKind::Generated) return addCone(cone);  // self-dual
  const Mat& g = cone.generators();
  const int d = cone.ambientDim();
  const int ng = static_cast<int>(g.cols());
  auto s = addFree(d);
  auto t = addCone(ConeSpec::orthant(ng));
  addRows({{s, g.transpose()}, {t, -Mat::Identity(ng, ng)}}, Vec::Zero(ng));
  return s;
}

ProgramBuilder::RowRange ProgramBuilder::addRows(const std::vector<Term>& terms, const Vec& rhs) {
  if (terms.empty()) throw ContractViolation("addRows: no terms");
  const int rows = static_cast<int>(rhs.size());
  for (const auto& [blk, mat] : terms) {
    if (blk.id < 0 || blk.id >= static_cast<int>(blocks_.size()))
      throw ContractViolation("addRows: unknown block");
    if (mat.rows() != rows || mat.cols() != blocks_[blk.id].dim)
      throw ContractViolation("addRows: term shape mismatch");
  }
  RowDef def;
  def.terms = terms;
  def.rhs = rhs;
  rows_.push_back(std::move(def));
  RowRange r{total_rows_, rows};
  total_rows_ += rows;
  return r;
}

void ProgramBuilder::addObjective(Block block, const Vec& coeffs) {
  if (coeffs.size() != block.dim) throw ContractViolation("addObjective: size mismatch");
  objective_.emplace_back(block, coeffs);
}

ConicProgram ProgramBuilder::build() {
  int free_dim = 0;
  for (auto& b : blocks_)
    if (b.is_free) {
      b.offset = free_dim;
      free_dim += b.dim;
    }
  int off = free_dim;
  ProductCone cone;
  cone.free_dim = free_dim;
  for (auto& b : blocks_)
    if (!b.is_free) {
      b.offset = off;
      off += b.dim;
      cone.factors.push_back(*b.cone);
    }
  const int n = off;

  ConicProgram p;
  p.cone = std::move(cone);
  p.objective = Vec::Zero(n);
  for (const auto& [blk, coeffs] : objective_)
    p.objective.segment(blocks_[blk.id].offset, blk.dim) += coeffs;
  p.constraints = Mat::Zero(total_rows_, n);
  p.rhs = Vec::Zero(total_rows_);
  int row = 0;
  for (const auto& def : rows_) {
    const int r = static_cast<int>(def.rhs.size());
    p.rhs.segment(row, r) = def.rhs;
    for (const auto& [blk, mat] : def.terms)
      p.constraints.block(row, blocks_[blk.id].offset, r, blk.dim) += mat;
    row += r;
  }
  built_ = true;
  return p;
}

int ProgramBuilder::offset(Block block) const {
  if (!built_) throw ContractViolation("ProgramBuilder: offset before build");
  return blocks_[block.id].offset;
}

Vec ProgramBuilder::slice(const Vec& x, Block block) const {
  return x.segment(offset(block), block.dim);
}

Vec ProgramBuilder::rowSlice(const Vec& z, RowRange rows) const {
  return z.segment(rows.begin, rows.count);
}

}  // namespace rf
