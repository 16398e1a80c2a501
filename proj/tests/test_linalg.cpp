#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "bellbound/linalg.hpp"
#include "bellbound/rng.hpp"

using namespace bellbound;
using namespace bellbound::linalg;

namespace {

Mat random_hermitian(Rng& rng, int d) {
  return symmetrize(rng.ginibre(d, d));
}

Mat pauli(char which) {
  Mat m(2, 2);
  switch (which) {
    case 'x': m << 0, 1, 1, 0; break;
    case 'y': m << cxd(0, 0), cxd(0, -1), cxd(0, 1), cxd(0, 0); break;
    default:  m << 1, 0, 0, -1; break;
  }
  return m;
}

Mat phi_plus() {  // two-qubit maximally entangled projector
  Vec psi(4);
  psi << 1, 0, 0, 1;
  psi /= std::sqrt(2.0);
  return psi * psi.adjoint();
}

}  // namespace

TEST_CASE("eigh on known spectra") {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1; d(1, 1) = -1;
  auto r = eigh(d);
  CHECK(r.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(r.eigenvalues(1) == doctest::Approx(-1.0));

  r = eigh(pauli('x'));
  CHECK(r.eigenvalues(0) == doctest::Approx(1.0));
  CHECK(r.eigenvalues(1) == doctest::Approx(-1.0));

  Mat m(2, 2);
  m << 2, 1, 1, 2;
  r = eigh(m);
  CHECK(r.eigenvalues(0) == doctest::Approx(3.0));
  CHECK(r.eigenvalues(1) == doctest::Approx(1.0));
}

TEST_CASE("eigh rejects bad input") {
  CHECK_THROWS_AS(eigh(Mat::Zero(2, 3)), ValidationError);
  Mat m(2, 2);
  m << 1, 2, 3, 4;  // not Hermitian
  CHECK_THROWS_AS(eigh(m), ValidationError);
}

TEST_CASE("eigh reconstruction and orthonormality on random matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 2 + rng.uniform_int(31);  // up to 32
    const Mat h = random_hermitian(rng, d);
    const auto r = eigh(h);
    Mat recon = Mat::Zero(d, d);
    for (int i = 0; i < d; ++i)
      recon += r.eigenvalues(i) * r.eigenvectors.col(i) * r.eigenvectors.col(i).adjoint();
    const double lmax = r.eigenvalues.cwiseAbs().maxCoeff();
    CHECK((recon - h).cwiseAbs().maxCoeff() <= 1e-10 * d * std::max(1.0, lmax));
    const Mat vv = r.eigenvectors.adjoint() * r.eigenvectors;
    CHECK((vv - Mat::Identity(d, d)).cwiseAbs().maxCoeff() <= 1e-10);
    for (int i = 0; i + 1 < d; ++i) CHECK(r.eigenvalues(i) >= r.eigenvalues(i + 1));
  }
}

TEST_CASE("trace norm") {
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1; d(1, 1) = -1;
  CHECK(trace_norm(d) == doctest::Approx(2.0));
  CHECK(trace_norm(Mat::Zero(3, 3)) == doctest::Approx(0.0));
  Mat e = Mat::Zero(3, 3);
  e(0, 0) = 3; e(1, 1) = -1; e(2, 2) = 0;
  CHECK(trace_norm(e) == doctest::Approx(4.0));
}

TEST_CASE("trace norm equals sum of singular values") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const int d = 2 + rng.uniform_int(12);
    const Mat h = random_hermitian(rng, d);
    CHECK(trace_norm(h) == doctest::Approx(singular_values(h).sum()).epsilon(1e-10));
  }
}

TEST_CASE("singular values") {
  CHECK((singular_values(Mat::Identity(3, 3)) - RVec::Ones(3)).cwiseAbs().maxCoeff() < 1e-12);
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 2; d(1, 1) = -3;
  const RVec s = singular_values(d);
  CHECK(s(0) == doctest::Approx(3.0));
  CHECK(s(1) == doctest::Approx(2.0));

  Rng rng(13);
  Vec u(4), v(4);
  for (int i = 0; i < 4; ++i) { u(i) = cxd(rng.gaussian(), rng.gaussian()); v(i) = cxd(rng.gaussian(), rng.gaussian()); }
  u.normalize();
  v.normalize();
  const RVec s1 = singular_values(u * v.adjoint());
  CHECK(s1(0) == doctest::Approx(1.0));
  CHECK(s1.tail(3).cwiseAbs().maxCoeff() < 1e-12);

  const Mat m = rng.ginibre(20, 20);
  CHECK(largest_singular_value(m) == doctest::Approx(singular_values(m)(0)).epsilon(1e-9));
}

TEST_CASE("partial trace") {
  Rng rng(14);
  const Mat ra = rng.ginibre_state(2, 2), rb = rng.ginibre_state(2, 2);
  const Mat prod = kron(ra, rb);
  CHECK((partial_trace(prod, 2, 2, Side::B) - ra).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((partial_trace(prod, 2, 2, Side::A) - rb).cwiseAbs().maxCoeff() < 1e-12);

  const Mat red = partial_trace(phi_plus(), 2, 2, Side::A);
  CHECK((red - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  const Mat id4 = Mat::Identity(4, 4) / 4.0;
  CHECK((partial_trace(id4, 2, 2, Side::A) - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((partial_trace(id4, 2, 2, Side::B) - 0.5 * Mat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  // trace preservation on a random bipartite operator, asymmetric dims
  const Mat w = symmetrize(rng.ginibre(6, 6));
  CHECK(partial_trace(w, 2, 3, Side::A).trace().real() ==
        doctest::Approx(w.trace().real()).epsilon(1e-12));
  CHECK_THROWS_AS(partial_trace(w, 2, 2, Side::A), ValidationError);
}

TEST_CASE("partial transpose") {
  Rng rng(15);
  const Mat ra = rng.ginibre_state(2, 2), rb = rng.ginibre_state(3, 3);
  const Mat prod = kron(ra, rb);
  const Mat pt = partial_transpose(prod, 2, 3, Side::A);
  CHECK((pt - kron(ra.transpose(), rb)).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(eigh(pt).eigenvalues.minCoeff() > -1e-12);  // still PSD for product input

  // involution + trace preservation
  const Mat w = symmetrize(rng.ginibre(6, 6));
  CHECK((partial_transpose(partial_transpose(w, 2, 3, Side::B), 2, 3, Side::B) - w)
            .cwiseAbs().maxCoeff() < 1e-14);
  CHECK(partial_transpose(w, 2, 3, Side::A).trace().real() ==
        doctest::Approx(w.trace().real()).epsilon(1e-13));

  // maximally entangled state: min eigenvalue -1/2 (direct 4x4 decomposition)
  const Mat ptphi = partial_transpose(phi_plus(), 2, 2, Side::A);
  CHECK(eigh(ptphi).eigenvalues.minCoeff() == doctest::Approx(-0.5).epsilon(1e-12));

  CHECK((partial_transpose(Mat::Identity(6, 6), 2, 3, Side::A) - Mat::Identity(6, 6))
            .cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gellmann basis invariants") {
  CHECK_THROWS_AS(gellmann_basis(0), ValidationError);
  for (int d = 1; d <= 5; ++d) {
    const auto basis = gellmann_basis(d);
    REQUIRE(basis.size() == d * d);
    // sigma_0 exactly identity/sqrt(d)
    CHECK((basis.elements[0] - Mat::Identity(d, d) / std::sqrt(double(d)))
              .cwiseAbs().maxCoeff() == 0.0);
    int traceless = 0;
    for (int n = 0; n < basis.size(); ++n) {
      for (int np = 0; np < basis.size(); ++np) {
        const double g = std::real((basis.elements[n] * basis.elements[np]).trace());
        CHECK(g == doctest::Approx(n == np ? 1.0 : 0.0).epsilon(1e-12));
      }
      const cxd tr = basis.elements[n].trace();
      if (std::abs(tr) < 1e-12) ++traceless;
      CHECK(std::abs(tr - (n == 0 ? std::sqrt(double(d)) : 0.0)) < 1e-12);
    }
    CHECK(traceless == d * d - 1);
  }
}

TEST_CASE("gellmann d=2 spans the Pauli set") {
  const auto b = gellmann_basis(2);
  const double s = 1.0 / std::sqrt(2.0);
  CHECK((b.elements[1] - s * pauli('x')).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((b.elements[2] - s * pauli('y')).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((b.elements[3] - s * pauli('z')).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("expand and reconstruct") {
  Rng rng(16);
  for (int d : {2, 3, 5}) {
    const auto basis = gellmann_basis(d);
    // basis element maps to a unit vector
    RVec y = expand_in_basis(basis.elements[3], basis);
    for (int n = 0; n < y.size(); ++n)
      CHECK(y(n) == doctest::Approx(n == 3 ? 1.0 : 0.0).epsilon(1e-12));
    // identity maps to sqrt(d) e_0
    y = expand_in_basis(Mat::Identity(d, d), basis);
    CHECK(y(0) == doctest::Approx(std::sqrt(double(d))).epsilon(1e-12));
    CHECK(y.tail(y.size() - 1).cwiseAbs().maxCoeff() < 1e-12);
    // round trip and sigma_0 coefficient = tr(H)/sqrt(d)
    const Mat h = random_hermitian(rng, d);
    y = expand_in_basis(h, basis);
    CHECK(y(0) == doctest::Approx(h.trace().real() / std::sqrt(double(d))).epsilon(1e-12));
    CHECK((reconstruct_from_basis(y, basis) - h).cwiseAbs().maxCoeff() < 1e-12);
  }
  CHECK_THROWS_AS(expand_in_basis(Mat::Identity(3, 3), gellmann_basis(2)), ValidationError);
}

TEST_CASE("flip kernel identity on random triples") {
  Rng rng(17);
  for (int d : {2, 3, 4}) {
    const Mat rho = rng.ginibre_state(d * d, d * d);
    const auto k = flip_kernel(rho, d, d);
    for (int trial = 0; trial < 20; ++trial) {
      const Mat a = random_hermitian(rng, d);
      const Mat b = random_hermitian(rng, d);
      const cxd lhs = (rho * kron(a, b)).trace();
      const cxd rhs = (vec(a).adjoint() * k.r * vec(b))(0);
      CHECK(std::abs(lhs - rhs) < 1e-12);
    }
  }
}

TEST_CASE("flip kernel known values") {
  // maximally mixed: tr(rho A x B) = tr(A) tr(B) / d^2
  const int d = 2;
  const Mat rho = Mat::Identity(d * d, d * d) / double(d * d);
  const auto k = flip_kernel(rho, d, d);
  Rng rng(18);
  const Mat a = random_hermitian(rng, d), b = random_hermitian(rng, d);
  const cxd got = (vec(a).adjoint() * k.r * vec(b))(0);
  CHECK(std::abs(got - a.trace() * b.trace() / 4.0) < 1e-12);

  // maximally entangled: vec(sz)^dag R vec(sz) = tr(rho sz x sz) = 1
  const auto kphi = flip_kernel(phi_plus(), 2, 2);
  const Mat sz = pauli('z');
  CHECK(std::abs((vec(sz).adjoint() * kphi.r * vec(sz))(0) - 1.0) < 1e-12);

  // pure product state reproduces <A><B>
  Vec u(2), v(2);
  u << 1, 0;
  v << std::sqrt(0.3), std::sqrt(0.7);
  const Mat prod = kron(u * u.adjoint(), v * v.adjoint());
  const auto kp = flip_kernel(prod, 2, 2);
  const cxd lhs = (vec(a).adjoint() * kp.r * vec(b))(0);
  const cxd rhs = (u.adjoint() * a * u)(0) * (v.adjoint() * b * v)(0);
  CHECK(std::abs(lhs - rhs) < 1e-12);
}
