#pragma once

// Quantum data model: Bell inequalities (correlation and probability kinds),
// bipartite density states, measurement settings, Bell-operator assembly and
// expectation values, the PPT check and the closed-form two-qubit CHSH
// maximum used as a validation oracle.

#include <string>
#include <vector>

#include <json.hpp>

#include "bellbound/linalg.hpp"

namespace bellbound::bell {

enum class Kind { Correlation, Probability };

struct BellInequality {
  Kind kind = Kind::Correlation;
  int ma = 0, mb = 0;  // settings per party
  int na = 2, nb = 2;  // outcomes per party (2 for correlation kind)
  double beta_lhv = 0.0;
  std::string name;

  // correlation kind: joint_corr[k][l]
  std::vector<std::vector<double>> joint_corr;
  // probability kind: flattened coefficients b[k][kappa][l][lambda]
  std::vector<double> joint_prob;
  // probability kind only; empty means all-zero
  std::vector<std::vector<double>> marginal_a;  // [k][kappa]
  std::vector<std::vector<double>> marginal_b;  // [l][lambda]

  double joint(int k, int kappa, int l, int lambda) const;
  double marg_a(int k, int kappa) const;
  double marg_b(int l, int lambda) const;
  bool dichotomic() const { return na == 2 && nb == 2; }
  bool is_chsh() const;
  void validate() const;
};

// Builtins: "chsh", "ch", "i3322", plus the marginal-free correlation
// variant "i3322-correlation".
BellInequality builtin_inequality(const std::string& name);
std::vector<std::string> builtin_inequality_names();

BellInequality load_inequality(const nlohmann::json& doc);
BellInequality load_inequality_file(const std::string& path);
nlohmann::json inequality_to_json(const BellInequality& q);

struct DensityState {
  int da = 0, db = 0;
  Mat rho;

  int dim() const { return da * db; }
};

// Validates Hermiticity, unit trace and positivity before returning.
DensityState make_state(int da, int db, Mat rho);

// p |Psi+_d><Psi+_d| + (1-p) I/d^2
DensityState isotropic_state(int d, double p);
// p |Psi_{2:1}><Psi_{2:1}| + (1-p) |01><01|, |Psi_{2:1}> = (2|00>+|11>)/sqrt(5)
DensityState cg_state(double p);
// 3x3 PPT entangled family: (8p rho_ent + |Psi_p><Psi_p|) / (8p+1), 0 < p < 1
DensityState horodecki_h_state(double p);

DensityState load_state(const nlohmann::json& doc);
DensityState load_state_file(const std::string& path);
nlohmann::json state_to_json(const DensityState& s);

struct MeasurementSettings {
  Kind kind = Kind::Correlation;
  // correlation kind: one +-1-valued observable per setting
  std::vector<Mat> a_obs, b_obs;
  // probability kind: POVM elements indexed [setting][outcome]
  std::vector<std::vector<Mat>> a_povm, b_povm;

  void validate(const BellInequality& q, int da, int db) const;
};

// Largest POVM / observable constraint violation (completeness, positivity,
// O^2 = 1), used by tests and the see-saw numerical guard.
double settings_violation(const MeasurementSettings& s);

Mat bell_operator(const BellInequality& q, const MeasurementSettings& s);

double expectation(const DensityState& rho, const Mat& bell_op);

struct PptResult {
  bool ppt = false;
  double min_eig = 0.0;  // of rho^{T_A}
};
PptResult ppt_check(const DensityState& rho);

// Exact maximal CHSH value 2 sqrt(u1+u2) for a two-qubit state, where u_i are
// the two largest eigenvalues of T^T T, T_ij = tr(rho sigma_i x sigma_j).
double horodecki_chsh_max(const DensityState& rho);

}  // namespace bellbound::bell
