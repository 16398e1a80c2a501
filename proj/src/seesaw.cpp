#include "bellbound/seesaw.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "bellbound/rng.hpp"

namespace bellbound::lb {

using bell::BellInequality;
using bell::DensityState;
using bell::Kind;
using bell::MeasurementSettings;
using linalg::require;

namespace {

// Internal representation: every inequality is treated in probability form
// (correlation observables become projective two-outcome POVMs, coefficients
// pick up the outcome sign product via BellInequality::joint).
struct Povms {
  std::vector<std::vector<Mat>> a, b;  // [setting][outcome]
};

int outcomes_a(const BellInequality& q) { return q.kind == Kind::Correlation ? 2 : q.na; }
int outcomes_b(const BellInequality& q) { return q.kind == Kind::Correlation ? 2 : q.nb; }

std::vector<std::vector<Mat>> obs_to_povms(const std::vector<Mat>& obs) {
  std::vector<std::vector<Mat>> out;
  out.reserve(obs.size());
  for (const auto& o : obs) {
    const Mat id = Mat::Identity(o.rows(), o.cols());
    out.push_back({0.5 * (id + o), 0.5 * (id - o)});
  }
  return out;
}

Povms to_internal(const BellInequality& q, const MeasurementSettings& s) {
  if (q.kind == Kind::Correlation) return {obs_to_povms(s.a_obs), obs_to_povms(s.b_obs)};
  return {s.a_povm, s.b_povm};
}

MeasurementSettings from_internal(const BellInequality& q, const Povms& p) {
  MeasurementSettings s;
  s.kind = q.kind;
  if (q.kind == Kind::Correlation) {
    for (const auto& povm : p.a) s.a_obs.push_back(povm[0] - povm[1]);
    for (const auto& povm : p.b) s.b_obs.push_back(povm[0] - povm[1]);
  } else {
    s.a_povm = p.a;
    s.b_povm = p.b;
  }
  return s;
}

// rho sliced into subsystem blocks so the conditional-operator contractions
// are plain coefficient sums:
//   tr_A[rho (A x 1)] = sum_{a,a'} A[a',a] blkA[a][a']   (d_B x d_B blocks)
//   tr_B[rho (1 x B)] = sum_{b,b'} B[b',b] blkB[b][b']   (d_A x d_A blocks)
struct SlicedState {
  int da = 0, db = 0;
  std::vector<Mat> blk_a;  // da*da blocks of size db
  std::vector<Mat> blk_b;  // db*db blocks of size da
  Mat red_a, red_b;        // reduced states tr_B rho, tr_A rho
};

SlicedState slice_state(const DensityState& st) {
  SlicedState s;
  s.da = st.da;
  s.db = st.db;
  s.blk_a.resize(static_cast<size_t>(st.da) * st.da);
  for (int a = 0; a < st.da; ++a)
    for (int ap = 0; ap < st.da; ++ap)
      s.blk_a[a * st.da + ap] = st.rho.block(a * st.db, ap * st.db, st.db, st.db);
  s.blk_b.resize(static_cast<size_t>(st.db) * st.db);
  for (int b = 0; b < st.db; ++b)
    for (int bp = 0; bp < st.db; ++bp) {
      Mat m(st.da, st.da);
      for (int a = 0; a < st.da; ++a)
        for (int ap = 0; ap < st.da; ++ap) m(a, ap) = st.rho(a * st.db + b, ap * st.db + bp);
      s.blk_b[b * st.db + bp] = std::move(m);
    }
  s.red_a = linalg::partial_trace(st.rho, st.da, st.db, linalg::Side::B);
  s.red_b = linalg::partial_trace(st.rho, st.da, st.db, linalg::Side::A);
  return s;
}

Mat contract_a(const SlicedState& s, const Mat& a) {
  Mat out = Mat::Zero(s.db, s.db);
  for (int i = 0; i < s.da; ++i)
    for (int ip = 0; ip < s.da; ++ip) out += a(ip, i) * s.blk_a[i * s.da + ip];
  return out;
}

Mat contract_b(const SlicedState& s, const Mat& b) {
  Mat out = Mat::Zero(s.da, s.da);
  for (int i = 0; i < s.db; ++i)
    for (int ip = 0; ip < s.db; ++ip) out += b(ip, i) * s.blk_b[i * s.db + ip];
  return out;
}

ConditionalOperators conditional_internal(const SlicedState& s, const BellInequality& q,
                                          const Povms& fixed, Party side) {
  ConditionalOperators cond;
  cond.side = side;
  const int n_a = outcomes_a(q), n_b = outcomes_b(q);
  if (side == Party::B) {
    cond.dim = s.db;
    // contractions of Alice's fixed elements
    std::vector<std::vector<Mat>> ta(q.ma, std::vector<Mat>(n_a));
    double const_a = 0.0;
    for (int k = 0; k < q.ma; ++k)
      for (int kap = 0; kap < n_a; ++kap) {
        ta[k][kap] = contract_a(s, fixed.a[k][kap]);
        const_a += q.marg_a(k, kap) * ta[k][kap].trace().real();
      }
    const Mat spread =
        (const_a / (q.mb * s.db)) * Mat::Identity(s.db, s.db);  // keeps the identity exact
    cond.ops.assign(q.mb, std::vector<Mat>(n_b));
    for (int l = 0; l < q.mb; ++l)
      for (int lam = 0; lam < n_b; ++lam) {
        Mat op = Mat::Zero(s.db, s.db);
        for (int k = 0; k < q.ma; ++k)
          for (int kap = 0; kap < n_a; ++kap) {
            const double b = q.joint(k, kap, l, lam);
            if (b != 0.0) op += b * ta[k][kap];
          }
        op += q.marg_b(l, lam) * s.red_b;
        op += spread;
        cond.ops[l][lam] = linalg::symmetrize(op);
      }
  } else {
    cond.dim = s.da;
    std::vector<std::vector<Mat>> tb(q.mb, std::vector<Mat>(n_b));
    double const_b = 0.0;
    for (int l = 0; l < q.mb; ++l)
      for (int lam = 0; lam < n_b; ++lam) {
        tb[l][lam] = contract_b(s, fixed.b[l][lam]);
        const_b += q.marg_b(l, lam) * tb[l][lam].trace().real();
      }
    const Mat spread = (const_b / (q.ma * s.da)) * Mat::Identity(s.da, s.da);
    cond.ops.assign(q.ma, std::vector<Mat>(n_a));
    for (int k = 0; k < q.ma; ++k)
      for (int kap = 0; kap < n_a; ++kap) {
        Mat op = Mat::Zero(s.da, s.da);
        for (int l = 0; l < q.mb; ++l)
          for (int lam = 0; lam < n_b; ++lam) {
            const double b = q.joint(k, kap, l, lam);
            if (b != 0.0) op += b * tb[l][lam];
          }
        op += q.marg_a(k, kap) * s.red_a;
        op += spread;
        cond.ops[k][kap] = linalg::symmetrize(op);
      }
  }
  return cond;
}

double side_value(const ConditionalOperators& cond, const std::vector<std::vector<Mat>>& povms) {
  double v = 0.0;
  for (size_t l = 0; l < cond.ops.size(); ++l)
    for (size_t lam = 0; lam < cond.ops[l].size(); ++lam)
      v += (cond.ops[l][lam] * povms[l][lam]).trace().real();
  return v;
}

// Clip negative parts and restore completeness via S^{-1/2} E S^{-1/2}.
void reproject_povm(std::vector<Mat>& povm) {
  const int d = static_cast<int>(povm[0].rows());
  Mat sum = Mat::Zero(d, d);
  for (auto& e : povm) {
    const auto dec = linalg::eigh(linalg::symmetrize(e));
    Mat clipped = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      if (dec.eigenvalues(i) > 0)
        clipped += dec.eigenvalues(i) * dec.eigenvectors.col(i) * dec.eigenvectors.col(i).adjoint();
    e = clipped;
    sum += clipped;
  }
  const auto dec = linalg::eigh(sum);
  Mat isqrt = Mat::Zero(d, d);
  for (int i = 0; i < d; ++i) {
    const double lam = std::max(dec.eigenvalues(i), 1e-12);
    isqrt += (1.0 / std::sqrt(lam)) * dec.eigenvectors.col(i) * dec.eigenvectors.col(i).adjoint();
  }
  for (auto& e : povm) e = linalg::symmetrize(isqrt * e * isqrt);
}

double povm_violation(const std::vector<std::vector<Mat>>& povms) {
  bell::MeasurementSettings tmp;
  tmp.kind = Kind::Probability;
  tmp.a_povm = povms;
  return bell::settings_violation(tmp);
}

std::vector<std::vector<Mat>> random_ginibre_povms(Rng& rng, int settings, int outcomes, int d) {
  std::vector<std::vector<Mat>> out(settings);
  for (auto& povm : out) {
    povm.resize(outcomes);
    Mat sum = Mat::Zero(d, d);
    for (auto& e : povm) {
      const Mat g = rng.ginibre(d, d);
      e = g * g.adjoint();
      sum += e;
    }
    const auto dec = linalg::eigh(sum);
    Mat isqrt = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      isqrt += (1.0 / std::sqrt(dec.eigenvalues(i))) * dec.eigenvectors.col(i) *
               dec.eigenvectors.col(i).adjoint();
    for (auto& e : povm) e = linalg::symmetrize(isqrt * e * isqrt);
  }
  return out;
}

std::vector<std::vector<Mat>> random_projective_povms(Rng& rng, int settings, int outcomes,
                                                      int d, int rank_hint) {
  std::vector<std::vector<Mat>> out(settings);
  for (auto& povm : out) {
    const Mat u = rng.haar_unitary(d);
    povm.assign(outcomes, Mat::Zero(d, d));
    if (outcomes == 2) {
      const int r = 1 + (rank_hint % std::max(1, d - 1));
      for (int i = 0; i < d; ++i) {
        const Mat proj = u.col(i) * u.col(i).adjoint();
        povm[i < r ? 0 : 1] += proj;
      }
    } else {
      for (int i = 0; i < d; ++i)
        povm[rng.uniform_int(outcomes)] += u.col(i) * u.col(i).adjoint();
    }
  }
  return out;
}

struct RestartOutcome {
  Povms povms;
  std::vector<double> trace;
  bool converged = false;
};

RestartOutcome run_restart(const SlicedState& s, const BellInequality& q,
                           const SeesawOptions& opts, Rng rng, int restart_idx) {
  const int n_a = outcomes_a(q), n_b = outcomes_b(q);
  Povms cur;
  const bool ginibre_start =
      opts.init == InitScheme::GinibrePovm ||
      (opts.init == InitScheme::Mixed && restart_idx % 2 == 0);
  if (ginibre_start) {
    cur.a = random_ginibre_povms(rng, q.ma, n_a, s.da);
    cur.b = random_ginibre_povms(rng, q.mb, n_b, s.db);
  } else {
    const int hint = restart_idx / 2;
    cur.a = random_projective_povms(rng, q.ma, n_a, s.da, hint);
    cur.b = random_projective_povms(rng, q.mb, n_b, s.db, hint);
  }

  RestartOutcome out;
  auto half_step = [&](Party side) {
    const ConditionalOperators cond = conditional_internal(s, q, cur, side);
    const int n = side == Party::B ? n_b : n_a;
    std::pair<std::vector<std::vector<Mat>>, double> step;
    if (n == 2) step = optimize_side_dichotomic(cond);
    else step = optimize_side_sdp(cond, n, cond.dim);
    (side == Party::B ? cur.b : cur.a) = std::move(step.first);
    return step.second;
  };

  double prev = -std::numeric_limits<double>::infinity();
  for (int hs = 0; hs < opts.max_half_steps; ++hs) {
    const double v = half_step(hs % 2 == 0 ? Party::B : Party::A);  // Bob moves first
    out.trace.push_back(v);
    if (hs > 0 && std::abs(v - prev) < opts.tol) {
      out.converged = true;
      break;
    }
    prev = v;
  }
  out.povms = std::move(cur);
  return out;
}

}  // namespace

ConditionalOperators conditional_operators(const DensityState& rho, const BellInequality& q,
                                           const MeasurementSettings& fixed,
                                           Party side_to_optimize) {
  q.validate();
  const Povms internal = to_internal(q, fixed);
  if (side_to_optimize == Party::B)
    require(static_cast<int>(internal.a.size()) == q.ma &&
                static_cast<int>(internal.a[0].size()) == outcomes_a(q),
            "conditional_operators: fixed side shape mismatch");
  else
    require(static_cast<int>(internal.b.size()) == q.mb &&
                static_cast<int>(internal.b[0].size()) == outcomes_b(q),
            "conditional_operators: fixed side shape mismatch");
  return conditional_internal(slice_state(rho), q, internal, side_to_optimize);
}

std::pair<std::vector<std::vector<Mat>>, double> optimize_side_dichotomic(
    const ConditionalOperators& cond) {
  const int d = cond.dim;
  std::vector<std::vector<Mat>> povms(cond.ops.size());
  double value = 0.0;
  for (size_t l = 0; l < cond.ops.size(); ++l) {
    require(cond.ops[l].size() == 2, "optimize_side_dichotomic: needs two outcomes per setting");
    const Mat diff = cond.ops[l][0] - cond.ops[l][1];
    const auto dec = linalg::eigh(diff);
    // Strictly positive eigenspace -> "+" outcome; ties go to "-".
    Mat plus = Mat::Zero(d, d);
    double norm1 = 0.0;
    for (int i = 0; i < d; ++i) {
      norm1 += std::abs(dec.eigenvalues(i));
      if (dec.eigenvalues(i) > 1e-12)
        plus += dec.eigenvectors.col(i) * dec.eigenvectors.col(i).adjoint();
    }
    povms[l] = {plus, Mat::Identity(d, d) - plus};
    value += 0.5 * norm1;
    value += 0.5 * (cond.ops[l][0] + cond.ops[l][1]).trace().real();
  }
  return {std::move(povms), value};
}

std::pair<std::vector<std::vector<Mat>>, double> optimize_side_sdp(
    const ConditionalOperators& cond, int n_outcomes, int d,
    const sdp::SolveOptions& solver_opts) {
  require(n_outcomes >= 2, "optimize_side_sdp: needs at least two outcomes");
  const int settings = static_cast<int>(cond.ops.size());
  const auto basis = linalg::gellmann_basis(d);

  // Z = direct sum of the POVM elements; one completeness constraint per
  // (setting, basis element) with c = sqrt(d) on the identity component.
  sdp::SdpStandard p;
  p.blocks.assign(static_cast<size_t>(settings) * n_outcomes, {d, sdp::BlockField::Complex});
  for (int l = 0; l < settings; ++l)
    for (int lam = 0; lam < n_outcomes; ++lam) {
      const Mat& op = cond.ops[l][lam];
      const int blk = l * n_outcomes + lam;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j)
          if (std::abs(op(i, j)) > 0) p.f0.add(blk, i, j, -op(i, j));
    }
  p.c.resize(static_cast<long>(settings) * d * d);
  for (int l = 0; l < settings; ++l)
    for (int n = 0; n < d * d; ++n) {
      sdp::ConstraintMat cm;
      const Mat& sig = basis.elements[n];
      for (int lam = 0; lam < n_outcomes; ++lam) {
        const int blk = l * n_outcomes + lam;
        for (int i = 0; i < d; ++i)
          for (int j = 0; j <= i; ++j)
            if (std::abs(sig(i, j)) > 0) cm.add(blk, i, j, sig(i, j));
      }
      p.f.push_back(std::move(cm));
      p.c(l * d * d + n) = n == 0 ? std::sqrt(static_cast<double>(d)) : 0.0;
    }

  const auto sol = sdp::solve_standard(p, solver_opts);
  if (!sol.optimal())
    throw NumericError("optimize_side_sdp: SDP solve failed with status " +
                       sdp::to_string(sol.status));
  std::vector<std::vector<Mat>> povms(settings);
  for (int l = 0; l < settings; ++l) {
    povms[l].resize(n_outcomes);
    for (int lam = 0; lam < n_outcomes; ++lam)
      povms[l][lam] = linalg::symmetrize(sol.z[l * n_outcomes + lam]);
    std::vector<Mat> one = povms[l];
    bell::MeasurementSettings probe;
    probe.kind = Kind::Probability;
    probe.a_povm = {one};
    if (bell::settings_violation(probe) > 1e-9) {
      reproject_povm(povms[l]);
    }
  }
  return {povms, side_value(cond, povms)};
}

SeesawResult seesaw(const DensityState& rho, const BellInequality& q, const SeesawOptions& opts) {
  q.validate();
  require(opts.restarts >= 1, "seesaw: needs at least one restart");
  const SlicedState sliced = slice_state(rho);
  const Rng base(opts.seed);

  std::vector<RestartOutcome> outcomes(opts.restarts);
  auto work = [&](int r) { outcomes[r] = run_restart(sliced, q, opts, base.stream(r), r); };
  if (opts.jobs > 1) {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    const int nthreads = std::min(opts.jobs, opts.restarts);
    for (int t = 0; t < nthreads; ++t)
      pool.emplace_back([&] {
        for (int r; (r = next.fetch_add(1)) < opts.restarts;) work(r);
      });
    for (auto& th : pool) th.join();
  } else {
    for (int r = 0; r < opts.restarts; ++r) work(r);
  }

  SeesawResult res;
  res.restarts_used = opts.restarts;
  double best = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < opts.restarts; ++r) {
    res.traces.push_back(outcomes[r].trace);
    const MeasurementSettings cand = from_internal(q, outcomes[r].povms);
    const double direct = bell::expectation(rho, bell::bell_operator(q, cand));
    if (direct > best) {
      best = direct;
      res.value = direct;
      res.settings = cand;
      res.best_restart = r;
      res.converged = outcomes[r].converged;
    }
  }
  return res;
}

}  // namespace bellbound::lb
