#pragma once

// Primal-dual interior-point solver for small dense semidefinite programs.
//
// Standard form:    maximize -<F0,Z>  s.t.  <F_m,Z> = c_m,  Z >= 0
// Inequality form:  minimize  x.c'    s.t.  G0 + sum_m x_m G_m >= 0
//
// The two are a primal/dual pair for identical data, so one engine serves
// both. Matrices are block-diagonal with declared block structure; blocks are
// complex Hermitian or real symmetric. The standard form optionally carries
// unconstrained scalar variables ("free variables"): constraints become
// <F_m,Z> + (C x)_m = c_m with objective -<F0,Z> - f.x. This extension is
// what lets sum-of-squares coefficient-matching problems be expressed
// directly; it reduces to the plain standard form when C has no columns.
//
// Algorithm: infeasible-start path following with the HKM search direction
// and Mehrotra predictor-corrector, dense (complex) Cholesky on the Schur
// complement. Free variables are handled by a bordered Schur solve.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "bellbound/linalg.hpp"

namespace bellbound::sdp {

enum class BlockField { Real, Complex };

struct BlockInfo {
  int dim = 0;
  BlockField field = BlockField::Complex;
};

// One Hermitian coefficient entry, lower triangle (i >= j); the (j,i) entry
// is implied by conjugation. Diagonal entries must be real.
struct Entry {
  int i = 0, j = 0;
  cxd v;
};

struct BlockChunk {
  int block = 0;
  std::vector<Entry> entries;
};

// A block-diagonal Hermitian matrix in sparse entry form.
struct ConstraintMat {
  std::vector<BlockChunk> chunks;

  void add(int block, int i, int j, cxd v);
  // Dense lower-triangle-completed copy of one block.
  Mat dense(int block, int dim) const;
};

struct SdpStandard {
  std::vector<BlockInfo> blocks;
  ConstraintMat f0;
  std::vector<ConstraintMat> f;
  RVec c;
  // Free-variable extension; leave empty (0 columns) for the plain form.
  Eigen::SparseMatrix<double> free_c;  // m x p
  RVec free_f;                         // p

  int total_dim() const;
};

struct SdpInequality {
  std::vector<BlockInfo> blocks;
  ConstraintMat g0;
  std::vector<ConstraintMat> g;
  RVec cprime;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, MaxIterations };

std::string to_string(SolveStatus s);

struct SolveOptions {
  double tol = 1e-8;        // relative feasibility and gap tolerance
  int max_iter = 200;
  double step_frac = 0.98;  // fraction of the step to the cone boundary
  bool verbose = false;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::MaxIterations;
  double objective = 0.0;        // value of the requested problem at the iterate
  double primal_objective = 0.0; // -<F0,Z> - f.x (standard-form max side)
  double dual_objective = 0.0;   // c.y (standard-form min side)
  std::vector<Mat> z;            // PSD matrix variable, one block per BlockInfo
  RVec y;                        // dual vector / inequality-form x
  RVec xfree;                    // free variables (standard form extension)
  double primal_residual = 0.0;  // relative
  double dual_residual = 0.0;    // relative
  double duality_gap = 0.0;      // |pobj-dobj| / (1+|objective|)
  int iterations = 0;

  bool optimal() const { return status == SolveStatus::Optimal; }
};

SdpSolution solve_standard(const SdpStandard& p, const SolveOptions& opts = {});
SdpSolution solve_inequality(const SdpInequality& p, const SolveOptions& opts = {});

// Debug dump of a problem as JSON (matrices as nested [re, im] arrays).
void dump_problem(const SdpStandard& p, const std::string& path);

}  // namespace bellbound::sdp
