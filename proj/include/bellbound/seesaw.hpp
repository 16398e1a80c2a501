#pragma once

// Lower-bound engine: alternating party-by-party optimization of measurement
// settings from random starts. Each half-step is exact (positive-eigenspace
// construction for two outcomes, a block-diagonal SDP otherwise), so the
// iteration value is nondecreasing and converges to a local maximum.

#include <cstdint>
#include <vector>

#include "bellbound/bell.hpp"
#include "bellbound/sdp.hpp"

namespace bellbound::lb {

enum class Party { A, B };

// The Hermitian operators rho_{E^out_set} that make the half-step objective
// linear: sum_{set,out} tr(cond.ops[set][out] E^out_set) equals the Bell
// expectation for any valid settings of the optimized side.
struct ConditionalOperators {
  Party side = Party::B;
  int dim = 0;  // local dimension of the optimized side
  std::vector<std::vector<Mat>> ops;  // [setting][outcome]
};

enum class InitScheme {
  GinibrePovm,          // generic full-rank POVM starts
  RankCycledProjector,  // random projective starts, ranks cycled
  Mixed                 // alternate the two (default)
};

struct SeesawOptions {
  int restarts = 20;
  int max_half_steps = 200;
  double tol = 1e-9;       // convergence: successive half-step values
  InitScheme init = InitScheme::Mixed;
  uint64_t seed = 0x5eed5eed5eedULL;
  int jobs = 1;            // restarts run concurrently when > 1
};

struct SeesawResult {
  double value = 0.0;  // re-verified by a direct Bell-operator expectation
  bell::MeasurementSettings settings;
  std::vector<std::vector<double>> traces;  // per-restart half-step values
  int restarts_used = 0;
  int best_restart = -1;
  bool converged = false;  // the winning restart converged within tol
};

// Settings of the fixed side are read from `fixed` (correlation observables
// are handled through their projective decomposition).
ConditionalOperators conditional_operators(const bell::DensityState& rho,
                                           const bell::BellInequality& q,
                                           const bell::MeasurementSettings& fixed,
                                           Party side_to_optimize);

// Exact half-step for two-outcome settings. Returns the new POVMs
// [setting][outcome] (projective) and the attained objective value.
std::pair<std::vector<std::vector<Mat>>, double> optimize_side_dichotomic(
    const ConditionalOperators& cond);

// SDP half-step for any outcome count; settings are re-projected onto the
// POVM constraint set if the solver leaves a violation above 1e-9.
std::pair<std::vector<std::vector<Mat>>, double> optimize_side_sdp(
    const ConditionalOperators& cond, int n_outcomes, int d,
    const sdp::SolveOptions& solver_opts = {});

SeesawResult seesaw(const bell::DensityState& rho, const bell::BellInequality& q,
                    const SeesawOptions& opts = {});

}  // namespace bellbound::lb
