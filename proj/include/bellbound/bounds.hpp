#pragma once

// Types shared by the upper-bound modules: trace assignments over the
// dichotomic lattice and the common bound-result record.

#include <optional>
#include <string>
#include <vector>

#include "bellbound/linalg.hpp"

namespace bellbound::ub {

// Fixed traces, one entry per operator (Alice's settings first, then Bob's).
// Correlation kind: z_m = tr(O_m) in {-d, -d+2, ..., d}.
// Probability kind: z_m = tr(O^+_m) in {0, 1, ..., d} (tr(O^-_m) = d - z_m).
struct TraceAssignment {
  std::vector<int> z;

  bool operator==(const TraceAssignment&) const = default;
};

enum class UbMethod { Order0, FixedTrace, Semianalytic, Sos };

std::string to_string(UbMethod m);

struct UpperBoundResult {
  double value = 0.0;
  UbMethod method = UbMethod::Order0;
  int degree = 0;  // multiplier degree for SOS-backed bounds
  std::optional<TraceAssignment> z;  // optimal assignment when enumerated
  RVec multipliers;  // dual multipliers (lambda_mn / nu_j coefficients)
  double t = 0.0;    // border slack of the fixed-trace dual
  long enumerated_cells = 0;
  bool heuristic = false;  // set when a precondition was overridden by force
};

}  // namespace bellbound::ub
