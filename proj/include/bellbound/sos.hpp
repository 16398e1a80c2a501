#pragma once

// Polynomial-program relaxation for dichotomic inequalities: the settings
// optimization in Hermitian-basis coordinates is a quadratically-constrained
// quadratic program; writing gamma - objective as a sum of squares plus
// multiplier-weighted constraint polynomials turns the search for an upper
// bound into an SDP. Multiplier degree 0 reproduces the Lagrange dual;
// degree 2 tightens it.

#include <optional>
#include <unordered_map>

#include "bellbound/bell.hpp"
#include "bellbound/bounds.hpp"
#include "bellbound/sdp.hpp"

namespace bellbound::sos {

// Quadratic polynomial c + b.y + y^T a y with a symmetric.
struct QuadPoly {
  double c = 0.0;
  RVec b;
  RMat a;

  double eval(const RVec& y) const;
};

struct PolynomialProgram {
  int n = 0;  // free variables
  QuadPoly objective;
  std::vector<QuadPoly> eq;  // equality constraints (zero polynomials dropped)

  // provenance
  bell::Kind kind = bell::Kind::Correlation;
  int d = 0;
  int n_ops = 0;
  std::optional<ub::TraceAssignment> traces;
  // free variable -> (operator index, basis index)
  std::vector<std::pair<int, int>> var_label;
};

// Expresses the settings optimization for a dichotomic inequality in the
// coefficients y_{m,n} = tr(O_m sigma_n). With `z` present the identity
// components are pinned to z_m / sqrt(d) and eliminated. Correlation kind
// constrains O_m^2 = 1; probability kind works in the "+"-outcome projectors
// with (O^+)^2 = O^+.
PolynomialProgram to_polynomial_program(const bell::DensityState& rho,
                                        const bell::BellInequality& q,
                                        const std::optional<ub::TraceAssignment>& z);

// Monomials are multisets of up to four variable indices, graded-lex ordered.
using Monomial = std::vector<int>;

struct SosProblem {
  int multiplier_degree = 0;
  // degree 0: inequality form over (gamma, nu_1..nu_K)
  sdp::SdpInequality ineq_form;
  // degree 2: standard form, PSD Gram block + free (gamma, nu coefficients)
  sdp::SdpStandard std_form;
  std::vector<Monomial> gram_basis;       // degree-2 Gram rows
  std::vector<Monomial> equation_monos;   // one equation per entry (degree 2)
  int n_constraints = 0;                  // K
  double obj_scale = 1.0;                 // applied normalization
  std::vector<double> eq_scale;
};

struct SizeError : NumericError {
  explicit SizeError(const std::string& what) : NumericError(what) {}
};

// Gram dimension above `gram_cap` raises SizeError naming the dimension.
SosProblem relax(const PolynomialProgram& pp, int multiplier_degree, int gram_cap = 400);

struct SosCertificate {
  double gamma = 0.0;
  RMat gram;                       // PSD factor of mu_0 over the monomial basis
  std::vector<Monomial> basis;     // monomials indexing the Gram matrix
  std::vector<RVec> nu;            // multiplier coefficients per constraint
  double residual = 0.0;           // max coefficient of the re-expanded identity
};

struct SosOptions {
  int gram_cap = 400;
  sdp::SolveOptions solver;
  bool check_certificate = true;
};

// Full pipeline: build, relax, solve, and re-expand the certificate
// independently of the solver. Bound decreases (weakly) in the degree.
std::pair<ub::UpperBoundResult, SosCertificate> solve_sos(
    const bell::DensityState& rho, const bell::BellInequality& q,
    const std::optional<ub::TraceAssignment>& z, int multiplier_degree,
    const SosOptions& opts = {});

// Standalone relaxation of a prepared program (used by tests and toys).
std::pair<double, SosCertificate> solve_program(const PolynomialProgram& pp,
                                                int multiplier_degree,
                                                const SosOptions& opts = {});

// Human-readable dump of the certificate identity, for audit.
void write_certificate(const PolynomialProgram& pp, const SosCertificate& cert,
                       const std::string& path);

}  // namespace bellbound::sos
