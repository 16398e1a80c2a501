#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellbound/rng.hpp"
#include "bellbound/sdp.hpp"

using namespace bellbound;
using namespace bellbound::sdp;

namespace {

// Max-eigenvalue problem: maximize -tr(F0 Z) with tr(Z) = 1.
SdpStandard max_eig_problem(const Mat& f0) {
  SdpStandard p;
  const int d = static_cast<int>(f0.rows());
  p.blocks = {{d, BlockField::Complex}};
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= i; ++j)
      if (std::abs(f0(i, j)) > 0) p.f0.add(0, i, j, f0(i, j));
  ConstraintMat tr;
  for (int i = 0; i < d; ++i) tr.add(0, i, i, 1.0);
  p.f = {tr};
  p.c = RVec::Ones(1);
  return p;
}

}  // namespace

TEST_CASE("standard form: max eigenvalue problems") {
  Mat f0 = Mat::Zero(2, 2);
  f0(0, 0) = -1; f0(1, 1) = -2;
  auto sol = solve_standard(max_eig_problem(f0));
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(std::abs(sol.z[0](1, 1).real() - 1.0) < 1e-6);
  CHECK(std::abs(sol.z[0](0, 0).real()) < 1e-6);

  // F0 = 0: any feasible point is optimal with objective 0
  sol = solve_standard(max_eig_problem(Mat::Zero(2, 2)));
  REQUIRE(sol.optimal());
  CHECK(std::abs(sol.objective) < 1e-7);
  CHECK(std::abs(sol.z[0].trace().real() - 1.0) < 1e-7);
}

TEST_CASE("standard form: complex off-diagonal data") {
  Mat f0(2, 2);
  f0 << 0.0, cxd(0, 1), cxd(0, -1), 0.0;  // -i sigma_y flavour, eigenvalues +-1
  const auto sol = solve_standard(max_eig_problem(f0));
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("inequality form: known optima") {
  // minimize x s.t. x I - sigma_x >= 0  -> 1
  {
    SdpInequality p;
    p.blocks = {{2, BlockField::Complex}};
    p.g0.add(0, 1, 0, -1.0);  // -sigma_x
    ConstraintMat id;
    id.add(0, 0, 0, 1.0);
    id.add(0, 1, 1, 1.0);
    p.g = {id};
    p.cprime = RVec::Ones(1);
    const auto sol = solve_inequality(p);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(sol.y(0) == doctest::Approx(1.0).epsilon(1e-6));
  }
  // minimize x1 + x2 s.t. diag(x1 - 1, x2 - 2) >= 0 -> 3
  {
    SdpInequality p;
    p.blocks = {{2, BlockField::Real}};
    p.g0.add(0, 0, 0, -1.0);
    p.g0.add(0, 1, 1, -2.0);
    ConstraintMat g1, g2;
    g1.add(0, 0, 0, 1.0);
    g2.add(0, 1, 1, 1.0);
    p.g = {g1, g2};
    p.cprime = RVec::Ones(2);
    const auto sol = solve_inequality(p);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-7));
  }
  // minimize x s.t. [[x,1],[1,x]] >= 0 -> 1
  {
    SdpInequality p;
    p.blocks = {{2, BlockField::Real}};
    p.g0.add(0, 1, 0, 1.0);
    ConstraintMat gx;
    gx.add(0, 0, 0, 1.0);
    gx.add(0, 1, 1, 1.0);
    p.g = {gx};
    p.cprime = RVec::Ones(1);
    const auto sol = solve_inequality(p);
    REQUIRE(sol.optimal());
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-7));
  }
}

TEST_CASE("weak duality and residuals on optimal solves") {
  Rng rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    const int d = 3 + rng.uniform_int(6);
    Mat f0 = linalg::symmetrize(rng.ginibre(d, d));
    const auto sol = solve_standard(max_eig_problem(f0));
    REQUIRE(sol.optimal());
    CHECK(sol.duality_gap <= 1e-8);
    CHECK(sol.primal_residual <= 1e-8);
    CHECK(sol.dual_residual <= 1e-8);
    // primal (max) never exceeds dual (min) beyond tolerance
    CHECK(sol.primal_objective <= sol.dual_objective + 1e-7 * (1 + std::abs(sol.objective)));
    // objective equals the top eigenvalue of -F0
    const double lmax = linalg::eigh(-f0).eigenvalues(0);
    CHECK(sol.objective == doctest::Approx(lmax).epsilon(1e-7));
  }
}

TEST_CASE("invariance under constraint rescaling") {
  Rng rng(22);
  const int d = 4;
  Mat f0 = linalg::symmetrize(rng.ginibre(d, d));
  SdpStandard p = max_eig_problem(f0);
  // add a second constraint to make scaling nontrivial
  ConstraintMat extra;
  extra.add(0, 1, 0, cxd(0.3, 0.1));
  extra.add(0, 2, 2, 0.5);
  p.f.push_back(extra);
  p.c = RVec::Zero(2);
  p.c(0) = 1.0;
  p.c(1) = 0.2;
  const auto base = solve_standard(p);
  REQUIRE(base.optimal());

  SdpStandard q = p;
  const double s0 = 3.7, s1 = 0.04;
  for (auto& ch : q.f[0].chunks)
    for (auto& e : ch.entries) e.v *= s0;
  q.c(0) *= s0;
  for (auto& ch : q.f[1].chunks)
    for (auto& e : ch.entries) e.v *= s1;
  q.c(1) *= s1;
  const auto scaled = solve_standard(q);
  REQUIRE(scaled.optimal());
  CHECK(std::abs(scaled.objective - base.objective) <= 1e-6 * (1 + std::abs(base.objective)));
}

TEST_CASE("feasible-by-construction instances reach the known optimum") {
  Rng rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    const bool real = trial % 2 == 0;
    const int d = 5 + rng.uniform_int(96);  // block dims up to 100
    const int m = 3 + rng.uniform_int(10);
    const int rank = 1 + rng.uniform_int(d - 1);
    // common eigenbasis so Z0 S0 = 0 with Z0 + S0 > 0 split by rank
    Mat u;
    if (real) {
      Eigen::HouseholderQR<RMat> qr(rng.ginibre(d, d).real().eval());
      u = RMat(qr.householderQ()).cast<cxd>();
    } else {
      u = rng.haar_unitary(d);
    }
    RVec zdiag = RVec::Zero(d), sdiag = RVec::Zero(d);
    for (int i = 0; i < rank; ++i) zdiag(i) = 0.2 + rng.uniform();
    for (int i = rank; i < d; ++i) sdiag(i) = 0.2 + rng.uniform();
    Mat z0 = linalg::symmetrize(u * zdiag.asDiagonal() * u.adjoint());
    Mat s0 = linalg::symmetrize(u * sdiag.asDiagonal() * u.adjoint());

    SdpStandard p;
    p.blocks = {{d, real ? BlockField::Real : BlockField::Complex}};
    std::vector<Mat> fms;
    RVec y0(m);
    p.c.resize(m);
    for (int k = 0; k < m; ++k) {
      Mat fm = linalg::symmetrize(rng.ginibre(d, d));
      if (real) fm = linalg::symmetrize(fm.real().cast<cxd>().eval());
      fms.push_back(fm);
      y0(k) = rng.gaussian();
      p.c(k) = (fm * z0).trace().real();
      ConstraintMat cm;
      for (int i = 0; i < d; ++i)
        for (int j = 0; j <= i; ++j)
          cm.add(0, i, j, fm(i, j));
      p.f.push_back(cm);
    }
    Mat f0 = s0;
    for (int k = 0; k < m; ++k) f0 -= y0(k) * fms[k];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j)
        if (std::abs(f0(i, j)) > 0) p.f0.add(0, i, j, f0(i, j));

    const double expected = -(f0 * z0).trace().real();  // = c.y0 by construction
    const auto sol = solve_standard(p);
    REQUIRE(sol.optimal());
    CHECK(sol.duality_gap <= 1e-8);
    CHECK(std::abs(sol.objective - expected) <= 1e-7 * (1 + std::abs(expected)));
  }
}

TEST_CASE("infeasible and unbounded detection") {
  // tr(Z) = -1 with Z >= 0 is infeasible
  {
    Mat f0 = Mat::Identity(2, 2);
    SdpStandard p = max_eig_problem(f0);
    p.c(0) = -1.0;
    const auto sol = solve_standard(p);
    CHECK(sol.status != SolveStatus::Optimal);
    CHECK(sol.status != SolveStatus::Unbounded);
  }
  // maximize tr(Z) with only an off-diagonal pin: unbounded above
  {
    SdpStandard p;
    p.blocks = {{2, BlockField::Real}};
    p.f0.add(0, 0, 0, -1.0);
    p.f0.add(0, 1, 1, -1.0);
    ConstraintMat off;
    off.add(0, 1, 0, 1.0);
    p.f = {off};
    p.c = RVec::Zero(1);
    const auto sol = solve_standard(p);
    CHECK(sol.status != SolveStatus::Optimal);
    CHECK(sol.status != SolveStatus::Infeasible);
  }
}

TEST_CASE("free variable extension") {
  // Cross-check the free-variable path against eliminating x by hand:
  //   maximize -<F0,Z> - 0.2 x  s.t. <F1,Z> + x = 1, <F2,Z> - x = 0.3
  // is equivalent (substituting x = 1 - <F1,Z>) to
  //   maximize -<F0 - 0.2 F1, Z> - 0.2  s.t. <F1+F2, Z> = 1.3.
  Rng rng(31);
  const int d = 3;
  const Mat f0 = Mat::Identity(d, d);
  const Mat f1 = linalg::symmetrize(rng.ginibre(d, d));
  const Mat f2 = linalg::symmetrize(rng.ginibre(d, d));
  auto fill = [&](ConstraintMat& cm, const Mat& m) {
    for (int i = 0; i < d; ++i)
      for (int j = 0; j <= i; ++j)
        if (std::abs(m(i, j)) > 0) cm.add(0, i, j, m(i, j));
  };

  SdpStandard p;
  p.blocks = {{d, BlockField::Complex}};
  fill(p.f0, f0);
  ConstraintMat c1, c2;
  fill(c1, f1);
  fill(c2, f2);
  p.f = {c1, c2};
  p.c = RVec::Zero(2);
  p.c(0) = 1.0;
  p.c(1) = 0.3;
  Eigen::SparseMatrix<double> cfree(2, 1);
  cfree.insert(0, 0) = 1.0;
  cfree.insert(1, 0) = -1.0;
  p.free_c = cfree;
  p.free_f = RVec::Constant(1, 0.2);
  const auto sol = solve_standard(p);
  REQUIRE(sol.optimal());

  SdpStandard q;
  q.blocks = {{d, BlockField::Complex}};
  fill(q.f0, (f0 - 0.2 * f1).eval());
  ConstraintMat csum;
  fill(csum, (f1 + f2).eval());
  q.f = {csum};
  q.c = RVec::Constant(1, 1.3);
  const auto ref = solve_standard(q);
  REQUIRE(ref.optimal());
  CHECK(sol.objective == doctest::Approx(ref.objective - 0.2).epsilon(1e-6));

  // minimize x s.t. x >= 2, written as tr(z) - x = -2 with z >= 0 scalar:
  // z = x - 2 >= 0, objective maximize -x, so x* = 2.
  SdpStandard r;
  r.blocks = {{1, BlockField::Real}};
  ConstraintMat t2;
  t2.add(0, 0, 0, 1.0);
  r.f = {t2};
  r.c = RVec::Constant(1, -2.0);
  Eigen::SparseMatrix<double> qc(1, 1);
  qc.insert(0, 0) = -1.0;
  r.free_c = qc;
  r.free_f = RVec::Constant(1, 1.0);  // maximize -x
  const auto sol2 = solve_standard(r);
  REQUIRE(sol2.optimal());
  CHECK(sol2.xfree(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(sol2.objective == doctest::Approx(-2.0).epsilon(1e-6));
}
