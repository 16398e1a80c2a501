#include "bellbound/rng.hpp"

#include <cmath>

namespace bellbound {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

uint64_t mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}
}  // namespace

Rng Rng::stream(uint64_t index) const {
  return Rng(mix(seed_ ^ (0xA5A5A5A5A5A5A5A5ULL + index * kGolden)));
}

uint64_t Rng::next_u64() { return mix(seed_ + (++counter_) * kGolden); }

double Rng::uniform() {
  // 53 high bits -> double in [0,1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  if (have_spare_) {
    have_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * M_PI * u2;
  spare_ = r * std::sin(theta);
  have_spare_ = true;
  return r * std::cos(theta);
}

int Rng::uniform_int(int n) {
  return static_cast<int>(uniform() * n) % n;
}

Mat Rng::ginibre(int rows, int cols) {
  Mat g(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) g(i, j) = cxd(gaussian(), gaussian());
  return g;
}

Mat Rng::haar_unitary(int d) {
  const Mat g = ginibre(d, d);
  Eigen::HouseholderQR<Mat> qr(g);
  Mat q = qr.householderQ();
  const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
  // Fix the phase ambiguity so the distribution is Haar.
  for (int i = 0; i < d; ++i) {
    cxd rii = r(i, i);
    if (std::abs(rii) > 0) q.col(i) *= rii / std::abs(rii);
  }
  return q;
}

Mat Rng::ginibre_state(int d, int rank) {
  const Mat g = ginibre(d, rank);
  Mat rho = g * g.adjoint();
  rho /= rho.trace().real();
  return linalg::symmetrize(rho);
}

Mat Rng::haar_pure_state(int d) {
  Vec psi(d);
  for (int i = 0; i < d; ++i) psi(i) = cxd(gaussian(), gaussian());
  psi.normalize();
  return psi * psi.adjoint();
}

}  // namespace bellbound
