#include "bellbound/bell.hpp"

#include <cmath>
#include <fstream>

namespace bellbound::bell {

using linalg::require;

double BellInequality::joint(int k, int kappa, int l, int lambda) const {
  if (kind == Kind::Correlation) {
    // Equivalent probability coefficients for O = B^+ - B^-: sign product.
    const double s = (kappa == 0 ? 1.0 : -1.0) * (lambda == 0 ? 1.0 : -1.0);
    return s * joint_corr[k][l];
  }
  return joint_prob[((static_cast<size_t>(k) * na + kappa) * mb + l) * nb + lambda];
}

double BellInequality::marg_a(int k, int kappa) const {
  return marginal_a.empty() ? 0.0 : marginal_a[k][kappa];
}

double BellInequality::marg_b(int l, int lambda) const {
  return marginal_b.empty() ? 0.0 : marginal_b[l][lambda];
}

bool BellInequality::is_chsh() const {
  if (kind != Kind::Correlation || ma != 2 || mb != 2) return false;
  return joint_corr[0][0] == 1 && joint_corr[0][1] == 1 && joint_corr[1][0] == 1 &&
         joint_corr[1][1] == -1 && beta_lhv == 2.0;
}

void BellInequality::validate() const {
  require(ma >= 1 && mb >= 1, "inequality: settings counts must be positive");
  require(na >= 2 && nb >= 2, "inequality: outcome counts must be >= 2");
  if (kind == Kind::Correlation) {
    require(na == 2 && nb == 2, "inequality: correlation kind is dichotomic");
    require(static_cast<int>(joint_corr.size()) == ma,
            "inequality: joint row count must equal mA");
    for (const auto& row : joint_corr)
      require(static_cast<int>(row.size()) == mb,
              "inequality: joint column count must equal mB");
    require(marginal_a.empty() && marginal_b.empty(),
            "inequality: correlation kind has no marginal coefficients");
  } else {
    require(joint_prob.size() == static_cast<size_t>(ma) * na * mb * nb,
            "inequality: joint tensor size must be mA*nA*mB*nB");
    if (!marginal_a.empty()) {
      require(static_cast<int>(marginal_a.size()) == ma, "inequality: marginal_a rows");
      for (const auto& row : marginal_a)
        require(static_cast<int>(row.size()) == na, "inequality: marginal_a columns");
    }
    if (!marginal_b.empty()) {
      require(static_cast<int>(marginal_b.size()) == mb, "inequality: marginal_b rows");
      for (const auto& row : marginal_b)
        require(static_cast<int>(row.size()) == nb, "inequality: marginal_b columns");
    }
  }
}

BellInequality builtin_inequality(const std::string& name) {
  BellInequality q;
  q.name = name;
  if (name == "chsh") {
    q.kind = Kind::Correlation;
    q.ma = q.mb = 2;
    q.joint_corr = {{1, 1}, {1, -1}};
    q.beta_lhv = 2.0;
  } else if (name == "ch") {
    // S = p(1,1) + p(1,2) + p(2,1) - p(2,2) - pA(1) - pB(1) <= 0 with the
    // "+" outcome at index 0.
    q.kind = Kind::Probability;
    q.ma = q.mb = 2;
    q.na = q.nb = 2;
    q.beta_lhv = 0.0;
    q.joint_prob.assign(16, 0.0);
    const double b[2][2] = {{1, 1}, {1, -1}};
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        q.joint_prob[((static_cast<size_t>(k) * 2 + 0) * 2 + l) * 2 + 0] = b[k][l];
    q.marginal_a = {{-1, 0}, {0, 0}};
    q.marginal_b = {{-1, 0}, {0, 0}};
  } else if (name == "i3322") {
    // p+-(1,1)+p+-(1,2)+p+-(1,3)+p+-(2,1)+p+-(2,2)-p+-(2,3)+p+-(3,1)-p+-(3,2)
    //   - pA+(1) - 2 pB-(1) - pB-(2) <= 0, outcomes (+,-) = (0,1).
    q.kind = Kind::Probability;
    q.ma = q.mb = 3;
    q.na = q.nb = 2;
    q.beta_lhv = 0.0;
    q.joint_prob.assign(static_cast<size_t>(3) * 2 * 3 * 2, 0.0);
    auto set = [&](int k, int l, double v) {
      q.joint_prob[((static_cast<size_t>(k) * 2 + 0) * 3 + l) * 2 + 1] = v;  // p^{+-}
    };
    set(0, 0, 1); set(0, 1, 1); set(0, 2, 1);
    set(1, 0, 1); set(1, 1, 1); set(1, 2, -1);
    set(2, 0, 1); set(2, 1, -1);
    q.marginal_a = {{-1, 0}, {0, 0}, {0, 0}};
    q.marginal_b = {{0, -2}, {0, -1}, {0, 0}};
  } else if (name == "i3322-correlation") {
    q.kind = Kind::Correlation;
    q.ma = q.mb = 3;
    q.joint_corr = {{1, 1, 1}, {1, 1, -1}, {1, -1, 0}};
    q.beta_lhv = 4.0;
  } else {
    std::string names;
    for (const auto& n : builtin_inequality_names()) names += (names.empty() ? "" : ", ") + n;
    throw ValidationError("unknown builtin inequality '" + name + "' (available: " + names + ")");
  }
  q.validate();
  return q;
}

std::vector<std::string> builtin_inequality_names() {
  return {"chsh", "ch", "i3322", "i3322-correlation"};
}

namespace {

const nlohmann::json& field(const nlohmann::json& doc, const char* key) {
  if (!doc.contains(key))
    throw ValidationError(std::string("inequality document: missing field '") + key + "'");
  return doc.at(key);
}

}  // namespace

BellInequality load_inequality(const nlohmann::json& doc) {
  BellInequality q;
  const std::string kind = field(doc, "kind").get<std::string>();
  if (kind == "correlation") q.kind = Kind::Correlation;
  else if (kind == "probability") q.kind = Kind::Probability;
  else throw ValidationError("inequality document: kind must be 'correlation' or 'probability'");
  q.ma = field(doc, "mA").get<int>();
  q.mb = field(doc, "mB").get<int>();
  q.na = field(doc, "nA").get<int>();
  q.nb = field(doc, "nB").get<int>();
  q.beta_lhv = field(doc, "beta_lhv").get<double>();
  q.name = doc.value("name", std::string("unnamed"));
  try {
    const auto& joint = field(doc, "joint");
    if (q.kind == Kind::Correlation) {
      q.joint_corr = joint.get<std::vector<std::vector<double>>>();
    } else {
      const auto t = joint.get<std::vector<std::vector<std::vector<std::vector<double>>>>>();
      require(static_cast<int>(t.size()) == q.ma, "inequality document: joint[k] size != mA");
      q.joint_prob.assign(static_cast<size_t>(q.ma) * q.na * q.mb * q.nb, 0.0);
      for (int k = 0; k < q.ma; ++k) {
        require(static_cast<int>(t[k].size()) == q.na, "inequality document: joint[k][kappa] size != nA");
        for (int kap = 0; kap < q.na; ++kap) {
          require(static_cast<int>(t[k][kap].size()) == q.mb, "inequality document: joint[..][l] size != mB");
          for (int l = 0; l < q.mb; ++l) {
            require(static_cast<int>(t[k][kap][l].size()) == q.nb,
                    "inequality document: joint[..][l][lambda] size != nB");
            for (int lam = 0; lam < q.nb; ++lam)
              q.joint_prob[((static_cast<size_t>(k) * q.na + kap) * q.mb + l) * q.nb + lam] =
                  t[k][kap][l][lam];
          }
        }
      }
      if (doc.contains("marginal_a") && !doc.at("marginal_a").is_null())
        q.marginal_a = doc.at("marginal_a").get<std::vector<std::vector<double>>>();
      if (doc.contains("marginal_b") && !doc.at("marginal_b").is_null())
        q.marginal_b = doc.at("marginal_b").get<std::vector<std::vector<double>>>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("inequality document: malformed coefficients: ") + e.what());
  }
  q.validate();
  return q;
}

BellInequality load_inequality_file(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open inequality file: " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("inequality file " + path + ": " + e.what());
  }
  return load_inequality(doc);
}

nlohmann::json inequality_to_json(const BellInequality& q) {
  nlohmann::json doc;
  doc["kind"] = q.kind == Kind::Correlation ? "correlation" : "probability";
  doc["mA"] = q.ma;
  doc["mB"] = q.mb;
  doc["nA"] = q.na;
  doc["nB"] = q.nb;
  doc["beta_lhv"] = q.beta_lhv;
  doc["name"] = q.name;
  if (q.kind == Kind::Correlation) {
    doc["joint"] = q.joint_corr;
    doc["marginal_a"] = nullptr;
    doc["marginal_b"] = nullptr;
  } else {
    auto t = std::vector<std::vector<std::vector<std::vector<double>>>>(
        q.ma, std::vector<std::vector<std::vector<double>>>(
                  q.na, std::vector<std::vector<double>>(q.mb, std::vector<double>(q.nb))));
    for (int k = 0; k < q.ma; ++k)
      for (int kap = 0; kap < q.na; ++kap)
        for (int l = 0; l < q.mb; ++l)
          for (int lam = 0; lam < q.nb; ++lam) t[k][kap][l][lam] = q.joint(k, kap, l, lam);
    doc["joint"] = t;
    doc["marginal_a"] = q.marginal_a.empty() ? nlohmann::json(nullptr) : nlohmann::json(q.marginal_a);
    doc["marginal_b"] = q.marginal_b.empty() ? nlohmann::json(nullptr) : nlohmann::json(q.marginal_b);
  }
  return doc;
}

DensityState make_state(int da, int db, Mat rho) {
  require(da >= 1 && db >= 1, "state: dimensions must be positive");
  require(rho.rows() == static_cast<long>(da) * db && rho.cols() == rho.rows(),
          "state: matrix must be (dA*dB) x (dA*dB)");
  require(linalg::hermiticity_error(rho) <= 1e-10, "state: not Hermitian within 1e-10");
  require(std::abs(rho.trace().real() - 1.0) <= 1e-10 && std::abs(rho.trace().imag()) <= 1e-10,
          "state: trace must be 1 within 1e-10");
  rho = linalg::symmetrize(rho);
  const double min_eig = linalg::eigh(rho).eigenvalues.minCoeff();
  require(min_eig >= -1e-9, "state: negative eigenvalue beyond tolerance");
  return DensityState{da, db, std::move(rho)};
}

DensityState isotropic_state(int d, double p) {
  require(d >= 2, "isotropic_state: d must be >= 2");
  require(p >= 0.0 && p <= 1.0, "isotropic_state: p must lie in [0, 1]");
  Vec psi = Vec::Zero(static_cast<long>(d) * d);
  for (int j = 0; j < d; ++j) psi(j * d + j) = 1.0 / std::sqrt(static_cast<double>(d));
  Mat rho = p * (psi * psi.adjoint());
  rho += (1.0 - p) / (static_cast<double>(d) * d) * Mat::Identity(d * d, d * d);
  return DensityState{d, d, std::move(rho)};
}

DensityState cg_state(double p) {
  require(p >= 0.0 && p <= 1.0, "cg_state: p must lie in [0, 1]");
  Vec psi = Vec::Zero(4);
  psi(0) = 2.0 / std::sqrt(5.0);  // |00>
  psi(3) = 1.0 / std::sqrt(5.0);  // |11>
  Vec prod = Vec::Zero(4);
  prod(1) = 1.0;  // |01>
  Mat rho = p * (psi * psi.adjoint()) + (1.0 - p) * (prod * prod.adjoint());
  return DensityState{2, 2, std::move(rho)};
}

DensityState horodecki_h_state(double p) {
  require(p > 0.0 && p < 1.0, "horodecki_h_state: p must lie in the open interval (0, 1)");
  const int d = 3;
  auto ket = [&](int i, int j) {
    Vec v = Vec::Zero(9);
    v(i * d + j) = 1.0;
    return v;
  };
  Mat ent = Mat::Zero(9, 9);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j)
      if (i != j) ent += ket(i, j) * ket(i, j).adjoint() / 8.0;
  ent -= ket(2, 0) * ket(2, 0).adjoint() / 8.0;
  Vec plus = Vec::Zero(9);
  for (int j = 0; j < d; ++j) plus(j * d + j) = 1.0 / std::sqrt(3.0);
  ent += 3.0 / 8.0 * (plus * plus.adjoint());

  Vec psi = std::sqrt((1.0 + p) / 2.0) * ket(2, 0) + std::sqrt((1.0 - p) / 2.0) * ket(2, 2);
  Mat rho = (8.0 * p * ent + psi * psi.adjoint()) / (8.0 * p + 1.0);
  return make_state(3, 3, std::move(rho));
}

DensityState load_state(const nlohmann::json& doc) {
  if (doc.contains("family")) {
    const std::string fam = doc.at("family").get<std::string>();
    const double p = field(doc, "p").get<double>();
    if (fam == "isotropic") return isotropic_state(field(doc, "d").get<int>(), p);
    if (fam == "cg") return cg_state(p);
    if (fam == "horodecki_h") return horodecki_h_state(p);
    throw ValidationError("state document: unknown family '" + fam +
                          "' (isotropic, cg, horodecki_h)");
  }
  const int da = field(doc, "dA").get<int>();
  const int db = field(doc, "dB").get<int>();
  const auto& rows = field(doc, "rho");
  const int n = da * db;
  require(static_cast<int>(rows.size()) == n, "state document: rho row count != dA*dB");
  Mat rho(n, n);
  for (int i = 0; i < n; ++i) {
    require(static_cast<int>(rows[i].size()) == n, "state document: rho column count != dA*dB");
    for (int j = 0; j < n; ++j) {
      const auto& cell = rows[i][j];
      require(cell.is_array() && cell.size() == 2, "state document: entries must be [re, im]");
      rho(i, j) = cxd(cell[0].get<double>(), cell[1].get<double>());
    }
  }
  return make_state(da, db, std::move(rho));
}

DensityState load_state_file(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open state file: " + path);
  nlohmann::json doc;
  try {
    is >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("state file " + path + ": " + e.what());
  }
  return load_state(doc);
}

nlohmann::json state_to_json(const DensityState& s) {
  nlohmann::json doc;
  doc["dA"] = s.da;
  doc["dB"] = s.db;
  auto rows = nlohmann::json::array();
  for (int i = 0; i < s.rho.rows(); ++i) {
    auto row = nlohmann::json::array();
    for (int j = 0; j < s.rho.cols(); ++j)
      row.push_back({s.rho(i, j).real(), s.rho(i, j).imag()});
    rows.push_back(row);
  }
  doc["rho"] = rows;
  return doc;
}

void MeasurementSettings::validate(const BellInequality& q, int da, int db) const {
  require(kind == q.kind, "settings: kind mismatch with inequality");
  if (kind == Kind::Correlation) {
    require(static_cast<int>(a_obs.size()) == q.ma && static_cast<int>(b_obs.size()) == q.mb,
            "settings: observable count mismatch");
    for (const auto& o : a_obs) require(o.rows() == da && o.cols() == da, "settings: A dimension");
    for (const auto& o : b_obs) require(o.rows() == db && o.cols() == db, "settings: B dimension");
  } else {
    require(static_cast<int>(a_povm.size()) == q.ma && static_cast<int>(b_povm.size()) == q.mb,
            "settings: POVM count mismatch");
    for (const auto& povm : a_povm) {
      require(static_cast<int>(povm.size()) == q.na, "settings: A outcome count mismatch");
      for (const auto& e : povm) require(e.rows() == da && e.cols() == da, "settings: A dimension");
    }
    for (const auto& povm : b_povm) {
      require(static_cast<int>(povm.size()) == q.nb, "settings: B outcome count mismatch");
      for (const auto& e : povm) require(e.rows() == db && e.cols() == db, "settings: B dimension");
    }
  }
  const double v = settings_violation(*this);
  require(v <= 1e-7, "settings: POVM/observable constraints violated by " + std::to_string(v));
}

double settings_violation(const MeasurementSettings& s) {
  double worst = 0.0;
  if (s.kind == Kind::Correlation) {
    for (const auto* side : {&s.a_obs, &s.b_obs})
      for (const auto& o : *side) {
        worst = std::max(worst, linalg::hermiticity_error(o));
        worst = std::max(worst,
                         (o * o - Mat::Identity(o.rows(), o.cols())).cwiseAbs().maxCoeff());
      }
  } else {
    for (const auto* side : {&s.a_povm, &s.b_povm})
      for (const auto& povm : *side) {
        if (povm.empty()) continue;
        Mat sum = Mat::Zero(povm[0].rows(), povm[0].cols());
        for (const auto& e : povm) {
          worst = std::max(worst, linalg::hermiticity_error(e));
          const double min_eig = linalg::eigh(linalg::symmetrize(e)).eigenvalues.minCoeff();
          worst = std::max(worst, std::max(0.0, -min_eig));
          sum += e;
        }
        worst = std::max(worst,
                         (sum - Mat::Identity(sum.rows(), sum.cols())).cwiseAbs().maxCoeff());
      }
  }
  return worst;
}

Mat bell_operator(const BellInequality& q, const MeasurementSettings& s) {
  if (q.kind == Kind::Correlation) {
    require(s.kind == Kind::Correlation, "bell_operator: settings kind mismatch");
    require(static_cast<int>(s.a_obs.size()) == q.ma && static_cast<int>(s.b_obs.size()) == q.mb,
            "bell_operator: settings shape mismatch");
    const int da = static_cast<int>(s.a_obs[0].rows());
    const int db = static_cast<int>(s.b_obs[0].rows());
    Mat op = Mat::Zero(static_cast<long>(da) * db, static_cast<long>(da) * db);
    for (int k = 0; k < q.ma; ++k)
      for (int l = 0; l < q.mb; ++l)
        if (q.joint_corr[k][l] != 0.0)
          op += q.joint_corr[k][l] * linalg::kron(s.a_obs[k], s.b_obs[l]);
    return op;
  }
  require(s.kind == Kind::Probability, "bell_operator: settings kind mismatch");
  require(static_cast<int>(s.a_povm.size()) == q.ma && static_cast<int>(s.b_povm.size()) == q.mb,
          "bell_operator: settings shape mismatch");
  const int da = static_cast<int>(s.a_povm[0][0].rows());
  const int db = static_cast<int>(s.b_povm[0][0].rows());
  const Mat ida = Mat::Identity(da, da), idb = Mat::Identity(db, db);
  Mat op = Mat::Zero(static_cast<long>(da) * db, static_cast<long>(da) * db);
  for (int k = 0; k < q.ma; ++k)
    for (int kap = 0; kap < q.na; ++kap)
      for (int l = 0; l < q.mb; ++l)
        for (int lam = 0; lam < q.nb; ++lam) {
          const double b = q.joint(k, kap, l, lam);
          if (b != 0.0) op += b * linalg::kron(s.a_povm[k][kap], s.b_povm[l][lam]);
        }
  for (int k = 0; k < q.ma; ++k)
    for (int kap = 0; kap < q.na; ++kap)
      if (q.marg_a(k, kap) != 0.0) op += q.marg_a(k, kap) * linalg::kron(s.a_povm[k][kap], idb);
  for (int l = 0; l < q.mb; ++l)
    for (int lam = 0; lam < q.nb; ++lam)
      if (q.marg_b(l, lam) != 0.0) op += q.marg_b(l, lam) * linalg::kron(ida, s.b_povm[l][lam]);
  return op;
}

double expectation(const DensityState& rho, const Mat& bell_op) {
  require(bell_op.rows() == rho.rho.rows() && bell_op.cols() == rho.rho.cols(),
          "expectation: dimension mismatch");
  const cxd val = (rho.rho * bell_op).trace();
  require(std::abs(val.imag()) <= 1e-10 * (1.0 + std::abs(val.real())),
          "expectation: non-real value, operator is not Hermitian");
  return val.real();
}

PptResult ppt_check(const DensityState& rho) {
  const Mat pt = linalg::partial_transpose(rho.rho, rho.da, rho.db, linalg::Side::A);
  const double min_eig = linalg::eigh(linalg::symmetrize(pt)).eigenvalues.minCoeff();
  return {min_eig >= -1e-9, min_eig};
}

double horodecki_chsh_max(const DensityState& rho) {
  require(rho.da == 2 && rho.db == 2, "horodecki_chsh_max: requires a two-qubit state");
  Mat sig[3];
  sig[0] = Mat(2, 2); sig[0] << 0, 1, 1, 0;
  sig[1] = Mat(2, 2); sig[1] << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0);
  sig[2] = Mat(2, 2); sig[2] << 1, 0, 0, -1;
  RMat t(3, 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      t(i, j) = (rho.rho * linalg::kron(sig[i], sig[j])).trace().real();
  Eigen::SelfAdjointEigenSolver<RMat> es(t.transpose() * t);
  const RVec u = es.eigenvalues();
  return 2.0 * std::sqrt(std::max(0.0, u(2) + u(1)));
}

}  // namespace bellbound::bell
