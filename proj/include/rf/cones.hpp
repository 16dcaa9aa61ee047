#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "rf/errors.hpp"

namespace rf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;

void requireFinite(const Vec& x, const char* what);
void requireFinite(const Mat& x, const char* what);

// ---------------------------------------------------------------------------
// Hermitian coordinates.
//
// Hermitian d x d matrices are identified with R^{d^2} through the orthonormal
// basis {E_ii}, {(E_ij + E_ji)/sqrt2}, {i(E_ij - E_ji)/sqrt2} (i < j; diagonal
// coordinates first, then the symmetric pairs, then the antisymmetric pairs,
// each in lexicographic order). The basis is orthonormal under Tr(XY), so the
// plain dot product of coordinate vectors is the Hilbert-Schmidt inner product.

int hermSideFromAmbient(int ambient_dim);
Vec hermToVec(const CMat& h);
CMat vecToHerm(const Vec& v);

// Eigenvalues of the Hermitian matrix encoded by v, ascending.
Vec hermEigenvalues(const Vec& v);

enum class ConeKind { Orthant, Psd, Generated };

// A closed convex cone: the nonnegative orthant, the cone of positive
// semidefinite Hermitian matrices in the coordinates above, or the conic hull
// of finitely many generators. Immutable after construction.
class ConeSpec {
 public:
  static ConeSpec orthant(int dim);
  static ConeSpec psd(int side);  // side x side matrices, ambient dim side^2
  static ConeSpec generated(Mat generators);  // one generator per column

  ConeKind kind() const { return kind_; }
  int ambientDim() const { return ambient_dim_; }
  int psdSide() const;
  const Mat& generators() const;
  bool pointed() const { return pointed_; }

  bool operator==(const ConeSpec& other) const;

 private:
  ConeSpec(ConeKind kind, int ambient_dim) : kind_(kind), ambient_dim_(ambient_dim) {}
  ConeKind kind_;
  int ambient_dim_;
  int psd_side_ = 0;
  Mat generators_;
  bool pointed_ = true;
};

// Default membership tolerance: 1e-8 relative to |x|_2.
double defaultMemberTol(const Vec& x);

bool member(const ConeSpec& cone, const Vec& x, double tol);
bool dualMember(const ConeSpec& cone, const Vec& e, double tol);

// Euclidean projection; defined for Orthant and Psd only (Generated cones are
// lifted to generator coordinates by the solver instead).
Vec project(const ConeSpec& cone, const Vec& x);

// Euclidean distance to the cone (NNLS residual for Generated).
double coneDistance(const ConeSpec& cone, const Vec& x);
// Euclidean distance to the dual cone; Generated duals are measured through
// their halfspace description via a support least-squares bound.
double dualConeDistance(const ConeSpec& cone, const Vec& e);

// Lawson-Hanson nonnegative least squares: argmin_{l >= 0} |A l - b|_2.
Vec nnls(const Mat& a, const Vec& b, double tol = 1e-12, int max_iter = 0);

// Variable cone of a conic program: a block of unconstrained coordinates
// followed by the listed factors, in order.
struct ProductCone {
  int free_dim = 0;
  std::vector<ConeSpec> factors;

  int ambientDim() const;
  bool hasGenerated() const;
  Vec project(const Vec& x) const;      // identity on the free block
  Vec projectDual(const Vec& x) const;  // zero on the free block
  double distance(const Vec& x) const;
  double dualDistance(const Vec& x) const;
};

}  // namespace rf
