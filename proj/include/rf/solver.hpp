#pragma once

#include <iosfwd>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rf/cones.hpp"

namespace rf {

// Standard-form conic program
//     minimize    <objective, x>
//     subject to  constraints * x = rhs,   x in cone.
struct ConicProgram {
  Vec objective;
  Mat constraints;
  Vec rhs;
  ProductCone cone;

  void validate() const;
  int numVars() const { return static_cast<int>(objective.size()); }
  int numRows() const { return static_cast<int>(rhs.size()); }
};

enum class SolveStatus { Optimal, PrimalInfeasible, DualInfeasible, MaxIterations };

const char* statusName(SolveStatus s);
std::ostream& operator<<(std::ostream& os, SolveStatus s);

// x/z/q are the primal point, the equality multipliers Z and the cone
// multiplier Q in K* (so objective - constraints^T z ~= q). For
// PrimalInfeasible, z carries the improving ray (constraints^T z in -K*,
// <z, rhs> > 0); for DualInfeasible, x carries an unbounded descent ray.
// Residuals and gap are relative measures, normalized by 1 + data norms.
struct Solution {
  SolveStatus status = SolveStatus::MaxIterations;
  Vec x;
  Vec z;
  Vec q;
  double primal_obj = 0.0;
  double dual_obj = 0.0;
  double gap = std::numeric_limits<double>::infinity();
  double primal_residual = std::numeric_limits<double>::infinity();
  double dual_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool polished = false;
};

struct SolverSettings {
  double gap_tol = 1e-7;
  double feas_tol = 1e-7;
  int max_iters = 50000;
  bool scaling = true;       // ruiz equilibration
  double relaxation = 1.5;   // douglas-rachford over-relaxation
  bool polish = true;        // active-face refinement after convergence
  std::ostream* trace = nullptr;  // CSV rows: iter,primal_res,dual_res,gap
};

Solution solve(const ConicProgram& program, const SolverSettings& settings = {});

// The Lagrangian dual max <rhs, z> s.t. objective - constraints^T z in K*,
// returned in the same standard minimize form (its optimum is the negated dual
// optimum). Generated factors dualize to halfspace form lifted with slacks.
ConicProgram dualOf(const ConicProgram& program);

struct Certificate {
  bool pass = false;
  double primal_residual = 0.0;  // recomputed from scratch, relative
  double dual_residual = 0.0;
  double gap = 0.0;
  double cone_violation = 0.0;       // dist(x, K) + dist(q, K*)
  bool slater_found = false;         // interior-search heuristic
  double slater_margin = 0.0;
  std::string failure;               // first failing inequality, with magnitude
  std::string notes;
};

// Recomputes all optimality residuals from scratch (long double accumulation)
// and runs an interior-point search to check Slater's condition.
Certificate certify(const ConicProgram& program, const Solution& solution,
                    const SolverSettings& settings = {});

// ---------------------------------------------------------------------------
// Incremental construction of standard-form programs from variable blocks.

class ProgramBuilder {
 public:
  struct Block {
    int id = -1;
    int dim = 0;
  };
  struct RowRange {
    int begin = 0;
    int count = 0;
  };

  Block addFree(int dim);
  Block addCone(ConeSpec cone);
  // Variable constrained to the dual cone; generated cones lift to halfspace
  // form (free block plus orthant slack rows).
  Block addDualCone(const ConeSpec& cone);

  using Term = std::pair<Block, Mat>;
  RowRange addRows(const std::vector<Term>& terms, const Vec& rhs);
  void addObjective(Block block, const Vec& coeffs);

  ConicProgram build();

  // Valid after build().
  int offset(Block block) const;
  Vec slice(const Vec& x, Block block) const;
  Vec rowSlice(const Vec& z, RowRange rows) const;

 private:
  struct BlockInfo {
    bool is_free = false;
    int dim = 0;
    std::optional<ConeSpec> cone;
    int offset = -1;
  };
  struct RowDef {
    std::vector<Term> terms;
    Vec rhs;
  };
  std::vector<BlockInfo> blocks_;
  std::vector<RowDef> rows_;
  std::vector<std::pair<Block, Vec>> objective_;
  int total_rows_ = 0;
  bool built_ = false;
};

}  // namespace rf
