#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellbound/rng.hpp"
#include "bellbound/seesaw.hpp"

using namespace bellbound;
using namespace bellbound::bell;
using namespace bellbound::lb;

namespace {

Mat pauli(char which) {
  Mat m(2, 2);
  switch (which) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0); break;
    default:  m << 1, 0, 0, -1; break;
  }
  return m;
}

DensityState phi_plus() {
  Vec psi(4);
  psi << 1, 0, 0, 1;
  psi /= std::sqrt(2.0);
  return make_state(2, 2, psi * psi.adjoint());
}

MeasurementSettings alice_zx() {
  MeasurementSettings s;
  s.kind = Kind::Correlation;
  s.a_obs = {pauli('z'), pauli('x')};
  s.b_obs = {pauli('z'), pauli('x')};  // placeholder for the fixed-side struct
  return s;
}

// Independent oracle for two-qubit CHSH: planar observables
// O(theta) = cos(theta) sz + sin(theta) sx on Alice's side over a dense grid,
// Bob's side answered by the exact conditional half-step. Never uses the
// see-saw iteration itself.
double chsh_planar_grid(const DensityState& rho, int steps) {
  const auto q = builtin_inequality("chsh");
  auto obs = [&](double th) { return Mat(std::cos(th) * pauli('z') + std::sin(th) * pauli('x')); };
  double best = -1e300;
  MeasurementSettings s = alice_zx();
  for (int i = 0; i < steps; ++i)
    for (int j = 0; j < steps; ++j) {
      s.a_obs[0] = obs(2.0 * M_PI * i / steps);
      s.a_obs[1] = obs(2.0 * M_PI * j / steps);
      const auto cond = conditional_operators(rho, q, s, Party::B);
      double v = 0.0;
      for (const auto& setting : cond.ops)
        v += 0.5 * linalg::trace_norm(setting[0] - setting[1]) +
             0.5 * (setting[0] + setting[1]).trace().real();
      best = std::max(best, v);
    }
  return best;
}

}  // namespace

TEST_CASE("conditional operators reproduce the expectation identity") {
  Rng rng(51);
  const auto q = builtin_inequality("i3322");
  const auto rho = make_state(2, 2, rng.ginibre_state(4, 3));
  MeasurementSettings s;
  s.kind = Kind::Probability;
  auto rand_povm = [&]() {
    const Mat p = rng.haar_pure_state(2);
    return std::vector<Mat>{p, Mat::Identity(2, 2) - p};
  };
  for (int k = 0; k < 3; ++k) {
    s.a_povm.push_back(rand_povm());
    s.b_povm.push_back(rand_povm());
  }
  const auto cond = conditional_operators(rho, q, s, Party::B);
  for (const auto& setting : cond.ops)
    for (const auto& op : setting) CHECK(linalg::hermiticity_error(op) < 1e-12);
  // sum_{l,lam} tr(rho_B E) must equal the full Bell expectation for ANY
  // valid settings of the optimized side (marginal terms included).
  for (int trial = 0; trial < 4; ++trial) {
    MeasurementSettings probe = s;
    for (int l = 0; l < 3; ++l) probe.b_povm[l] = rand_povm();
    double via = 0.0;
    for (int l = 0; l < 3; ++l)
      for (int lam = 0; lam < 2; ++lam)
        via += (cond.ops[l][lam] * probe.b_povm[l][lam]).trace().real();
    const double direct = expectation(rho, bell_operator(q, probe));
    CHECK(via == doctest::Approx(direct).epsilon(1e-10));
  }

  // Alice side too
  const auto cond_a = conditional_operators(rho, q, s, Party::A);
  for (int trial = 0; trial < 4; ++trial) {
    MeasurementSettings probe = s;
    for (int k = 0; k < 3; ++k) probe.a_povm[k] = rand_povm();
    double via = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int kap = 0; kap < 2; ++kap)
        via += (cond_a.ops[k][kap] * probe.a_povm[k][kap]).trace().real();
    CHECK(via == doctest::Approx(expectation(rho, bell_operator(q, probe))).epsilon(1e-10));
  }
}

TEST_CASE("conditional operators: chsh reconstruction and zero inequality") {
  const auto q = builtin_inequality("chsh");
  const auto rho = phi_plus();
  const auto cond = conditional_operators(rho, q, alice_zx(), Party::B);
  // with A = (sz, sx) on |Phi+>: tr_A[rho(O x 1)] = O^T/2, so the outcome
  // difference for Bob's first setting is sum_k b_k0 O_k^T = sz + sx
  const Mat expect0 = pauli('z') + pauli('x');
  const Mat d0 = cond.ops[0][0] - cond.ops[0][1];
  CHECK((d0 - expect0).cwiseAbs().maxCoeff() < 1e-12);

  BellInequality zero = q;
  zero.joint_corr = {{0, 0}, {0, 0}};
  const auto condz = conditional_operators(rho, zero, alice_zx(), Party::B);
  for (const auto& setting : condz.ops)
    for (const auto& op : setting) CHECK(op.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("dichotomic half-step: known positive eigenspace") {
  ConditionalOperators cond;
  cond.side = Party::B;
  cond.dim = 2;
  cond.ops = {{0.5 * pauli('z'), -0.5 * pauli('z')}};  // difference = sz
  const auto [povms, value] = optimize_side_dichotomic(cond);
  Mat e00 = Mat::Zero(2, 2);
  e00(0, 0) = 1.0;
  CHECK((povms[0][0] - e00).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(value == doctest::Approx(1.0));  // trace norm of sz halved ... 0.5*2 + 0

  // zero difference: everything to the "-" outcome
  cond.ops = {{0.3 * Mat::Identity(2, 2), 0.3 * Mat::Identity(2, 2)}};
  const auto [povms2, value2] = optimize_side_dichotomic(cond);
  CHECK(povms2[0][0].cwiseAbs().maxCoeff() < 1e-15);
  CHECK((povms2[0][1] - Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(value2 == doctest::Approx(0.6));  // marginal trace term only
}

TEST_CASE("one bob step then one alice step reaches 2 sqrt 2") {
  const auto q = builtin_inequality("chsh");
  const auto rho = phi_plus();
  MeasurementSettings s = alice_zx();
  auto cond = conditional_operators(rho, q, s, Party::B);
  auto [bob, v1] = optimize_side_dichotomic(cond);
  s.b_obs = {bob[0][0] - bob[0][1], bob[1][0] - bob[1][1]};
  cond = conditional_operators(rho, q, s, Party::A);
  auto [alice, v2] = optimize_side_dichotomic(cond);
  CHECK(v2 == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-9));
}

TEST_CASE("sdp half-step agrees with the analytic one") {
  Rng rng(52);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = trial < 3 ? 2 : 3;
    ConditionalOperators cond;
    cond.side = Party::B;
    cond.dim = d;
    cond.ops.resize(2);
    for (auto& setting : cond.ops) {
      setting.push_back(linalg::symmetrize(rng.ginibre(d, d)));
      setting.push_back(linalg::symmetrize(rng.ginibre(d, d)));
    }
    const auto [pa, va] = optimize_side_dichotomic(cond);
    const auto [ps, vs] = optimize_side_sdp(cond, 2, d);
    CHECK(vs == doctest::Approx(va).epsilon(1e-7));
  }

  // all-zero conditional operators: value 0, any valid POVM
  ConditionalOperators zero;
  zero.side = Party::B;
  zero.dim = 2;
  zero.ops = {{Mat::Zero(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)}};
  const auto [p0, v0] = optimize_side_sdp(zero, 3, 2);
  CHECK(std::abs(v0) < 1e-7);
  MeasurementSettings probe;
  probe.kind = Kind::Probability;
  probe.a_povm = p0;
  CHECK(settings_violation(probe) < 1e-8);
}

TEST_CASE("seesaw on phi plus reaches the tsirelson value") {
  SeesawOptions opts;
  opts.restarts = 5;
  opts.seed = 7;
  const auto res = seesaw(phi_plus(), builtin_inequality("chsh"), opts);
  CHECK(res.value == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-6));
  CHECK(res.converged);
  CHECK(res.restarts_used == 5);
  CHECK(settings_violation(res.settings) < 1e-8);
  // projective outputs for dichotomic inequalities
  for (const auto& o : res.settings.a_obs) {
    const auto ev = linalg::eigh(o).eigenvalues;
    for (int i = 0; i < ev.size(); ++i) CHECK(std::abs(std::abs(ev(i)) - 1.0) < 1e-7);
  }
  // per-restart traces are nondecreasing
  for (const auto& tr : res.traces)
    for (size_t i = 1; i < tr.size(); ++i) CHECK(tr[i] >= tr[i - 1] - 1e-10);
  // reported value is a certified expectation of the returned settings
  CHECK(expectation(phi_plus(), bell_operator(builtin_inequality("chsh"), res.settings)) ==
        doctest::Approx(res.value).epsilon(1e-8));
}

TEST_CASE("seesaw matches the horodecki oracle on random two-qubit states") {
  Rng rng(53);
  SeesawOptions opts;
  opts.restarts = 8;
  opts.seed = 99;
  int tested = 0;
  for (int trial = 0; tested < 12 && trial < 200; ++trial) {
    const Mat pure = rng.haar_pure_state(4);
    const double w = 0.2 * rng.uniform();
    const auto rho =
        make_state(2, 2, (1.0 - w) * pure + w * rng.ginibre_state(4, 4));
    const double oracle = horodecki_chsh_max(rho);
    if (oracle <= 2.0 + 1e-3) continue;  // the formula is the maximum only above 2
    ++tested;
    const auto res = seesaw(rho, builtin_inequality("chsh"), opts);
    CHECK(res.value <= oracle + 1e-6);
    CHECK(res.value == doctest::Approx(oracle).epsilon(1e-5));
  }
  CHECK(tested == 12);
}

TEST_CASE("seesaw never exceeds the planar grid oracle by more than 1e-3") {
  Rng rng(54);
  SeesawOptions opts;
  opts.restarts = 6;
  std::vector<DensityState> states;
  states.push_back(phi_plus());
  states.push_back(make_state(2, 2, rng.ginibre_state(4, 2)));
  states.push_back(make_state(2, 2, 0.6 * phi_plus().rho + 0.4 * Mat::Identity(4, 4) / 4.0));
  for (const auto& rho : states) {
    const double grid = chsh_planar_grid(rho, 721);
    const auto res = seesaw(rho, builtin_inequality("chsh"), opts);
    CHECK(grid <= res.value + 1e-3);
  }
}

TEST_CASE("ppt two-qubit states never violate chsh") {
  Rng rng(55);
  SeesawOptions opts;
  opts.restarts = 4;
  int found = 0;
  for (int trial = 0; trial < 60 && found < 10; ++trial) {
    const auto rho = make_state(2, 2, rng.ginibre_state(4, 4));
    if (!ppt_check(rho).ppt) continue;
    ++found;
    const auto res = seesaw(rho, builtin_inequality("chsh"), opts);
    CHECK(res.value <= 2.0 + 1e-7);
  }
  CHECK(found == 10);
}

TEST_CASE("seesaw on a probability inequality via the sdp path") {
  // i3322 with the SDP half-step forced by treating it as 2-outcome POVMs is
  // already covered; exercise the n-outcome structural path with a 3-outcome
  // toy inequality: maximize sum_k p(k,k) for a maximally entangled qutrit
  // pair (perfect correlations achievable: value 2 with two settings).
  BellInequality q;
  q.kind = Kind::Probability;
  q.ma = q.mb = 2;
  q.na = q.nb = 3;
  q.beta_lhv = 2.0;  // irrelevant here
  q.name = "diag3";
  q.joint_prob.assign(2 * 3 * 2 * 3, 0.0);
  for (int k = 0; k < 2; ++k)
    for (int out = 0; out < 3; ++out)
      q.joint_prob[((static_cast<size_t>(k) * 3 + out) * 2 + k) * 3 + out] = 1.0;
  Vec psi = Vec::Zero(9);
  for (int j = 0; j < 3; ++j) psi(j * 3 + j) = 1.0 / std::sqrt(3.0);
  const auto rho = make_state(3, 3, psi * psi.adjoint());
  SeesawOptions opts;
  opts.restarts = 4;
  opts.seed = 3;
  const auto res = seesaw(rho, q, opts);
  CHECK(res.value == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(settings_violation(res.settings) < 1e-7);
}
