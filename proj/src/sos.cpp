#include "bellbound/sos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

namespace bellbound::sos {

using bell::BellInequality;
using bell::DensityState;
using bell::Kind;
using linalg::require;
using ub::TraceAssignment;
using ub::UbMethod;
using ub::UpperBoundResult;

double QuadPoly::eval(const RVec& y) const {
  double v = c;
  if (b.size()) v += b.dot(y);
  if (a.size()) v += y.dot(a * y);
  return v;
}

namespace {

QuadPoly zero_poly(int n) {
  QuadPoly p;
  p.b = RVec::Zero(n);
  p.a = RMat::Zero(n, n);
  return p;
}

double max_coeff(const QuadPoly& p) {
  double m = std::abs(p.c);
  if (p.b.size()) m = std::max(m, p.b.cwiseAbs().maxCoeff());
  if (p.a.size()) m = std::max(m, p.a.cwiseAbs().maxCoeff());
  return m;
}

// Partial evaluation: pin variables listed in `pin` (index -> value), keep
// the rest in their original relative order.
QuadPoly restrict_poly(const QuadPoly& p, const std::vector<int>& keep,
                       const RVec& pinned_values, const std::vector<int>& pin_index) {
  const int nf = static_cast<int>(keep.size());
  QuadPoly out = zero_poly(nf);
  // constant: c + b_S t + t^T A_SS t
  out.c = p.c;
  for (size_t s = 0; s < pin_index.size(); ++s) out.c += p.b(pin_index[s]) * pinned_values(s);
  for (size_t s = 0; s < pin_index.size(); ++s)
    for (size_t s2 = 0; s2 < pin_index.size(); ++s2)
      out.c += pinned_values(s) * p.a(pin_index[s], pin_index[s2]) * pinned_values(s2);
  for (int f = 0; f < nf; ++f) {
    out.b(f) = p.b(keep[f]);
    for (size_t s = 0; s < pin_index.size(); ++s)
      out.b(f) += 2.0 * p.a(keep[f], pin_index[s]) * pinned_values(s);
    for (int f2 = 0; f2 < nf; ++f2) out.a(f, f2) = p.a(keep[f], keep[f2]);
  }
  return out;
}

// ---- monomial bookkeeping ------------------------------------------------

uint64_t mono_key(const Monomial& m) {
  // up to 4 indices, 16 bits each, descending with 0xFFFF padding
  uint64_t k = 0;
  int slot = 0;
  for (int i = static_cast<int>(m.size()) - 1; i >= 0; --i)
    k |= (static_cast<uint64_t>(m[i]) & 0xFFFF) << (16 * slot++);
  for (; slot < 4; ++slot) k |= 0xFFFFULL << (16 * slot);
  return k;
}

Monomial mono_merge(const Monomial& a, const Monomial& b) {
  Monomial out;
  out.reserve(a.size() + b.size());
  std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

std::vector<Monomial> monomials_up_to_degree2(int n) {
  std::vector<Monomial> out;
  out.push_back({});
  for (int i = 0; i < n; ++i) out.push_back({i});
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) out.push_back({i, j});
  return out;
}

// coefficient list of a QuadPoly over the degree<=2 monomial convention
std::vector<std::pair<Monomial, double>> poly_terms(const QuadPoly& p, double tol = 0.0) {
  std::vector<std::pair<Monomial, double>> t;
  if (std::abs(p.c) > tol) t.push_back({{}, p.c});
  for (int i = 0; i < p.b.size(); ++i)
    if (std::abs(p.b(i)) > tol) t.push_back({{i}, p.b(i)});
  for (int i = 0; i < p.a.rows(); ++i) {
    if (std::abs(p.a(i, i)) > tol) t.push_back({{i, i}, p.a(i, i)});
    for (int j = i + 1; j < p.a.cols(); ++j)
      if (std::abs(p.a(i, j)) > tol) t.push_back({{i, j}, 2.0 * p.a(i, j)});
  }
  return t;
}

}  // namespace

PolynomialProgram to_polynomial_program(const DensityState& rho, const BellInequality& q,
                                        const std::optional<TraceAssignment>& z) {
  q.validate();
  require(q.dichotomic(), "to_polynomial_program: inequality must be dichotomic");
  require(rho.da == rho.db, "to_polynomial_program: equal local dimensions required");
  const int d = rho.da;
  const int n_ops = q.ma + q.mb;
  const int d2 = d * d;
  const int n_full = n_ops * d2;
  const auto basis = linalg::gellmann_basis(d);
  const RMat c = linalg::bipartite_basis_coefficients(rho.rho, basis, basis);
  const double sqd = std::sqrt(static_cast<double>(d));

  if (z) {
    require(static_cast<int>(z->z.size()) == n_ops,
            "to_polynomial_program: trace assignment length mismatch");
    for (int m = 0; m < n_ops; ++m) {
      const int zm = z->z[m];
      if (q.kind == Kind::Correlation)
        require(zm >= -d && zm <= d && (zm + d) % 2 == 0,
                "to_polynomial_program: correlation trace must lie in {-d,-d+2,...,d}");
      else
        require(zm >= 0 && zm <= d,
                "to_polynomial_program: projector trace must lie in {0,...,d}");
    }
  }

  auto var = [&](int m, int n) { return m * d2 + n; };
  QuadPoly obj = zero_poly(n_full);

  if (q.kind == Kind::Correlation) {
    for (int k = 0; k < q.ma; ++k)
      for (int l = 0; l < q.mb; ++l) {
        const double bkl = q.joint_corr[k][l];
        if (bkl == 0.0) continue;
        for (int n = 0; n < d2; ++n)
          for (int np = 0; np < d2; ++np) {
            const double w = bkl * c(n, np);
            if (w == 0.0) continue;
            obj.a(var(k, n), var(q.ma + l, np)) += 0.5 * w;
            obj.a(var(q.ma + l, np), var(k, n)) += 0.5 * w;
          }
      }
  } else {
    // O^+_m are the variables; O^- = 1 - O^+ enters through affine maps
    // (alpha, beta) = (0, +1) for "+" and (1, -1) for "-".
    auto affine = [](int outcome) { return outcome == 0 ? std::pair<double, double>{0.0, 1.0}
                                                        : std::pair<double, double>{1.0, -1.0}; };
    for (int k = 0; k < q.ma; ++k)
      for (int l = 0; l < q.mb; ++l)
        for (int kap = 0; kap < 2; ++kap)
          for (int lam = 0; lam < 2; ++lam) {
            const double w = q.joint(k, kap, l, lam);
            if (w == 0.0) continue;
            const auto [aa, ba] = affine(kap);
            const auto [ab, bb] = affine(lam);
            obj.c += w * aa * ab;
            if (ba * ab != 0.0)
              for (int n = 0; n < d2; ++n)
                obj.b(var(k, n)) += w * ba * ab * sqd * c(n, 0);
            if (aa * bb != 0.0)
              for (int n = 0; n < d2; ++n)
                obj.b(var(q.ma + l, n)) += w * aa * bb * sqd * c(0, n);
            if (ba * bb != 0.0)
              for (int n = 0; n < d2; ++n)
                for (int np = 0; np < d2; ++np) {
                  const double v = w * ba * bb * c(n, np);
                  if (v == 0.0) continue;
                  obj.a(var(k, n), var(q.ma + l, np)) += 0.5 * v;
                  obj.a(var(q.ma + l, np), var(k, n)) += 0.5 * v;
                }
          }
    for (int k = 0; k < q.ma; ++k)
      for (int kap = 0; kap < 2; ++kap) {
        const double w = q.marg_a(k, kap);
        if (w == 0.0) continue;
        const auto [aa, ba] = affine(kap);
        obj.c += w * aa;
        for (int n = 0; n < d2; ++n) obj.b(var(k, n)) += w * ba * sqd * c(n, 0);
      }
    for (int l = 0; l < q.mb; ++l)
      for (int lam = 0; lam < 2; ++lam) {
        const double w = q.marg_b(l, lam);
        if (w == 0.0) continue;
        const auto [ab, bb] = affine(lam);
        obj.c += w * ab;
        for (int n = 0; n < d2; ++n) obj.b(var(q.ma + l, n)) += w * bb * sqd * c(0, n);
      }
  }

  // constraint polynomials: tr(sigma_n (O^2 - 1)) or tr(sigma_n (O^2 - O))
  const auto p_tensor = linalg::anticommutator_tensor(basis);
  std::vector<QuadPoly> eqs;
  eqs.reserve(static_cast<size_t>(n_ops) * d2);
  for (int m = 0; m < n_ops; ++m)
    for (int n = 0; n < d2; ++n) {
      QuadPoly f = zero_poly(n_full);
      for (int i = 0; i < d2; ++i)
        for (int j = 0; j < d2; ++j) f.a(var(m, i), var(m, j)) = p_tensor[n](i, j);
      if (q.kind == Kind::Correlation)
        f.c = n == 0 ? -sqd : 0.0;  // tr(sigma_n 1) = sqrt(d) delta_n0
      else
        f.b(var(m, n)) -= 1.0;
      eqs.push_back(std::move(f));
    }

  PolynomialProgram pp;
  pp.kind = q.kind;
  pp.d = d;
  pp.n_ops = n_ops;
  pp.traces = z;
  if (!z) {
    pp.n = n_full;
    pp.objective = std::move(obj);
    for (int m = 0; m < n_ops; ++m)
      for (int n = 0; n < d2; ++n) pp.var_label.push_back({m, n});
    for (auto& f : eqs)
      if (max_coeff(f) > 1e-12) pp.eq.push_back(std::move(f));
    return pp;
  }

  // pin the identity coordinates y_{m0} = z_m / sqrt(d)
  std::vector<int> keep, pin;
  RVec pinned(n_ops);
  for (int m = 0; m < n_ops; ++m) {
    pin.push_back(var(m, 0));
    pinned(m) = z->z[m] / sqd;
    for (int n = 1; n < d2; ++n) {
      keep.push_back(var(m, n));
      pp.var_label.push_back({m, n});
    }
  }
  pp.n = static_cast<int>(keep.size());
  pp.objective = restrict_poly(obj, keep, pinned, pin);
  for (const auto& f : eqs) {
    QuadPoly r = restrict_poly(f, keep, pinned, pin);
    if (max_coeff(r) > 1e-12) pp.eq.push_back(std::move(r));
  }
  return pp;
}

SosProblem relax(const PolynomialProgram& pp, int multiplier_degree, int gram_cap) {
  require(multiplier_degree == 0 || multiplier_degree == 2,
          "relax: multiplier degree must be 0 or 2");
  SosProblem out;
  out.multiplier_degree = multiplier_degree;
  out.n_constraints = static_cast<int>(pp.eq.size());
  out.obj_scale = 1.0 / std::max(1e-12, max_coeff(pp.objective));
  for (const auto& f : pp.eq) out.eq_scale.push_back(1.0 / std::max(1e-12, max_coeff(f)));

  const int n = pp.n;
  if (multiplier_degree == 0) {
    const int gram_dim = 1 + n;
    if (gram_dim > gram_cap)
      throw SizeError("relax: Gram dimension " + std::to_string(gram_dim) +
                      " exceeds the cap " + std::to_string(gram_cap));
    out.gram_basis = {{}};
    for (int i = 0; i < n; ++i) out.gram_basis.push_back({i});
    // LMI over x = (gamma, nu_1..nu_K):
    //   [gamma - c0 - sum nu_j c_j, -(b0 + sum nu_j b_j)/2; ., -(A0 + ...)] >= 0
    sdp::SdpInequality q;
    q.blocks = {{gram_dim, sdp::BlockField::Real}};
    auto put = [&](sdp::ConstraintMat& cm, const QuadPoly& f, double scale) {
      if (std::abs(f.c) > 0) cm.add(0, 0, 0, -scale * f.c);
      for (int i = 0; i < n; ++i)
        if (std::abs(f.b(i)) > 0) cm.add(0, 1 + i, 0, -0.5 * scale * f.b(i));
      for (int i = 0; i < n; ++i)
        for (int j = 0; j <= i; ++j)
          if (std::abs(f.a(i, j)) > 0) cm.add(0, 1 + i, 1 + j, -scale * f.a(i, j));
    };
    put(q.g0, pp.objective, out.obj_scale);
    q.g.resize(1 + out.n_constraints);
    q.g[0].add(0, 0, 0, 1.0);  // gamma
    for (int j = 0; j < out.n_constraints; ++j) put(q.g[1 + j], pp.eq[j], out.eq_scale[j]);
    q.cprime = RVec::Zero(1 + out.n_constraints);
    q.cprime(0) = 1.0;
    out.ineq_form = std::move(q);
    return out;
  }

  // degree 2: Gram over all monomials of degree <= 2, multipliers nu_j of
  // degree <= 2, one coefficient-matching equation per monomial of degree <= 4
  out.gram_basis = monomials_up_to_degree2(n);
  const int m2 = static_cast<int>(out.gram_basis.size());
  if (m2 > gram_cap)
    throw SizeError("relax: Gram dimension " + std::to_string(m2) + " exceeds the cap " +
                    std::to_string(gram_cap));

  std::unordered_map<uint64_t, int> eq_id;
  std::vector<Monomial> eq_mono;
  auto intern = [&](const Monomial& mo) {
    const uint64_t k = mono_key(mo);
    auto it = eq_id.find(k);
    if (it != eq_id.end()) return it->second;
    const int id = static_cast<int>(eq_mono.size());
    eq_id.emplace(k, id);
    eq_mono.push_back(mo);
    return id;
  };

  sdp::SdpStandard p;
  p.blocks = {{m2, sdp::BlockField::Real}};
  // Gram-side entries: every pair of basis monomials feeds one equation
  std::vector<std::vector<std::pair<int, int>>> gram_of_eq;  // (row, col) pairs
  for (int r = 0; r < m2; ++r)
    for (int cidx = 0; cidx <= r; ++cidx) {
      const int id = intern(mono_merge(out.gram_basis[r], out.gram_basis[cidx]));
      if (id >= static_cast<int>(gram_of_eq.size())) gram_of_eq.resize(id + 1);
      gram_of_eq[id].push_back({r, cidx});
    }
  const int m_eq = static_cast<int>(eq_mono.size());
  gram_of_eq.resize(m_eq);

  p.f.resize(m_eq);
  for (int e = 0; e < m_eq; ++e)
    for (const auto& [r, cidx] : gram_of_eq[e]) p.f[e].add(0, r, cidx, 1.0);

  // free variables: gamma then nu_{j,beta}
  const int pfree = 1 + out.n_constraints * m2;
  std::vector<Eigen::Triplet<double>> ctrip;
  ctrip.emplace_back(intern({}), 0, -1.0);  // -gamma on the constant equation
  for (int j = 0; j < out.n_constraints; ++j) {
    const auto terms = poly_terms(pp.eq[j], 0.0);
    for (int bidx = 0; bidx < m2; ++bidx) {
      const int col = 1 + j * m2 + bidx;
      for (const auto& [tau, coeff] : terms) {
        const int e = intern(mono_merge(out.gram_basis[bidx], tau));
        ctrip.emplace_back(e, col, out.eq_scale[j] * coeff);
      }
    }
  }
  const int m_eq_final = static_cast<int>(eq_mono.size());
  for (auto& cm : p.f) (void)cm;
  p.f.resize(m_eq_final);
  p.c = RVec::Zero(m_eq_final);
  for (const auto& [tau, coeff] : poly_terms(pp.objective, 0.0))
    p.c(intern(tau)) = -out.obj_scale * coeff;
  p.free_c.resize(static_cast<int>(eq_mono.size()), pfree);
  p.free_c.setFromTriplets(ctrip.begin(), ctrip.end());
  p.free_f = RVec::Zero(pfree);
  p.free_f(0) = 1.0;  // minimize gamma  ==  maximize -gamma
  p.c.conservativeResize(static_cast<int>(eq_mono.size()));

  out.equation_monos = std::move(eq_mono);
  out.std_form = std::move(p);
  return out;
}

namespace {

// residual of gamma - f_obj - sum_j nu_j f_eq_j - m^T Q m, max coefficient
double identity_residual(const PolynomialProgram& pp, const SosCertificate& cert) {
  std::unordered_map<uint64_t, double> r;
  auto addm = [&](const Monomial& mo, double v) { r[mono_key(mo)] += v; };
  addm({}, cert.gamma);
  for (const auto& [tau, coeff] : poly_terms(pp.objective, 0.0)) addm(tau, -coeff);
  const int m2 = static_cast<int>(cert.basis.size());
  for (size_t j = 0; j < pp.eq.size(); ++j) {
    const auto terms = poly_terms(pp.eq[j], 0.0);
    for (int bidx = 0; bidx < static_cast<int>(cert.nu[j].size()); ++bidx) {
      const double nu = cert.nu[j](bidx);
      if (nu == 0.0) continue;
      for (const auto& [tau, coeff] : terms) addm(mono_merge(cert.basis[bidx], tau), -nu * coeff);
    }
  }
  for (int p = 0; p < m2; ++p) {
    addm(mono_merge(cert.basis[p], cert.basis[p]), -cert.gram(p, p));
    for (int q = 0; q < p; ++q)
      addm(mono_merge(cert.basis[p], cert.basis[q]), -2.0 * cert.gram(p, q));
  }
  double worst = 0.0;
  for (const auto& [k, v] : r) worst = std::max(worst, std::abs(v));
  return worst;
}

}  // namespace

std::pair<double, SosCertificate> solve_program(const PolynomialProgram& pp,
                                                int multiplier_degree, const SosOptions& opts) {
  SosProblem sp = relax(pp, multiplier_degree, opts.gram_cap);
  SosCertificate cert;
  cert.basis = sp.gram_basis;
  const int k = sp.n_constraints;
  if (multiplier_degree == 0) {
    const auto sol = sdp::solve_inequality(sp.ineq_form, opts.solver);
    if (!sol.optimal())
      throw NumericError("sos degree 0: SDP failed with status " + sdp::to_string(sol.status) +
                         " (gap " + std::to_string(sol.duality_gap) + ")");
    cert.gamma = sol.y(0) / sp.obj_scale;
    cert.nu.resize(k);
    for (int j = 0; j < k; ++j) {
      cert.nu[j] = RVec::Zero(1);
      cert.nu[j](0) = sol.y(1 + j) * sp.eq_scale[j] / sp.obj_scale;
    }
    // rebuild the LMI slack = mu_0's Gram in the scaled problem
    const int gd = 1 + pp.n;
    Mat slack = sp.ineq_form.g0.dense(0, gd);
    for (int i = 0; i < sol.y.size(); ++i)
      slack += sol.y(i) * sp.ineq_form.g[i].dense(0, gd);
    cert.gram = slack.real() / sp.obj_scale;
    // degree-0 nu are constants; pad basis bookkeeping accordingly
    std::vector<Monomial> nu_basis = {{}};
    for (size_t j = 0; j < cert.nu.size(); ++j) (void)j;
  } else {
    const auto sol = sdp::solve_standard(sp.std_form, opts.solver);
    if (!sol.optimal())
      throw NumericError("sos degree 2: SDP failed with status " + sdp::to_string(sol.status) +
                         " (gap " + std::to_string(sol.duality_gap) + ")");
    const int m2 = static_cast<int>(sp.gram_basis.size());
    cert.gamma = sol.xfree(0) / sp.obj_scale;
    cert.gram = sol.z[0].real() / sp.obj_scale;
    cert.nu.resize(k);
    for (int j = 0; j < k; ++j) {
      cert.nu[j] = RVec(m2);
      for (int b = 0; b < m2; ++b)
        cert.nu[j](b) = sol.xfree(1 + j * m2 + b) * sp.eq_scale[j] / sp.obj_scale;
    }
  }
  if (opts.check_certificate) {
    cert.residual = identity_residual(pp, cert);
    if (cert.residual > 1e-6 * (1.0 + std::abs(cert.gamma)))
      throw NumericError("sos: certificate residual " + std::to_string(cert.residual) +
                         " exceeds tolerance");
  }
  return {cert.gamma, cert};
}

std::pair<UpperBoundResult, SosCertificate> solve_sos(const DensityState& rho,
                                                      const BellInequality& q,
                                                      const std::optional<TraceAssignment>& z,
                                                      int multiplier_degree,
                                                      const SosOptions& opts) {
  const PolynomialProgram pp = to_polynomial_program(rho, q, z);
  auto [gamma, cert] = solve_program(pp, multiplier_degree, opts);
  UpperBoundResult res;
  res.value = gamma;
  res.method = UbMethod::Sos;
  res.degree = multiplier_degree;
  res.z = z;
  RVec mult(static_cast<long>(cert.nu.size()));
  for (size_t j = 0; j < cert.nu.size(); ++j) mult(j) = cert.nu[j](0);
  res.multipliers = mult;
  return {res, cert};
}

void write_certificate(const PolynomialProgram& pp, const SosCertificate& cert,
                       const std::string& path) {
  std::ofstream os(path);
  auto put_mono = [&](const Monomial& mo) {
    if (mo.empty()) { os << "1"; return; }
    for (size_t i = 0; i < mo.size(); ++i) os << (i ? "*" : "") << "y" << mo[i];
  };
  os << "# Positivstellensatz identity: gamma - f_obj = mu_0 + sum_j nu_j * f_eq_j\n";
  os << "gamma = " << cert.gamma << "\n";
  os << "residual = " << cert.residual << "\n\n";
  for (size_t j = 0; j < cert.nu.size(); ++j) {
    os << "nu_" << j << " =";
    bool any = false;
    for (int b = 0; b < cert.nu[j].size(); ++b)
      if (std::abs(cert.nu[j](b)) > 1e-12) {
        os << (any ? " + " : " ") << cert.nu[j](b) << "*";
        put_mono(cert.basis[b]);
        any = true;
      }
    if (!any) os << " 0";
    os << "\n";
  }
  os << "\nmu_0 Gram matrix (" << cert.gram.rows() << " x " << cert.gram.cols()
     << ", basis";
  for (const auto& mo : cert.basis) {
    os << " ";
    put_mono(mo);
  }
  os << "):\n" << cert.gram << "\n";
}

}  // namespace bellbound::sos
