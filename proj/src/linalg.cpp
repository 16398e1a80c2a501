#include "bellbound/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace bellbound {
namespace linalg {

double hermiticity_error(const Mat& h) {
  if (h.rows() != h.cols()) return std::numeric_limits<double>::infinity();
  return (h - h.adjoint()).cwiseAbs().maxCoeff();
}

Mat symmetrize(const Mat& h) { return 0.5 * (h + h.adjoint()); }

EighResult eigh(const Mat& h, double herm_tol) {
  require(h.rows() == h.cols(), "eigh: matrix must be square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  require(hermiticity_error(h) <= herm_tol * scale,
          "eigh: matrix is not Hermitian within tolerance");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(h));
  if (es.info() != Eigen::Success) throw NumericError("eigh: decomposition failed");
  // Eigen returns ascending order; flip to descending.
  const int n = static_cast<int>(h.rows());
  EighResult out;
  out.eigenvalues = es.eigenvalues().reverse();
  out.eigenvectors.resize(n, n);
  for (int i = 0; i < n; ++i) out.eigenvectors.col(i) = es.eigenvectors().col(n - 1 - i);
  return out;
}

double trace_norm(const Mat& h) {
  const auto ev = eigh(h).eigenvalues;
  return ev.cwiseAbs().sum();
}

RVec singular_values(const Mat& m) {
  Eigen::BDCSVD<Mat> svd(m);
  return svd.singularValues();
}

double largest_singular_value(const Mat& m) {
  if (m.size() == 0) return 0.0;
  const Mat g = m.adjoint() * m;  // Hermitian PSD, sigma_max^2 = lambda_max(g)
  const int n = static_cast<int>(g.rows());
  Vec v = Vec::Ones(n) / std::sqrt(static_cast<double>(n));
  // Deterministic perturbation so a symmetric start cannot sit in a null space.
  for (int i = 0; i < n; ++i) v(i) += 1e-3 * std::cos(0.7 * i);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 500; ++it) {
    Vec w = g * v;
    const double next = std::real(v.dot(w));
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;
    v = w / nw;
    if (it > 4 && std::abs(next - lambda) <= 1e-15 * std::max(1.0, std::abs(next))) {
      lambda = next;
      return std::sqrt(std::max(0.0, lambda));
    }
    lambda = next;
  }
  // Stalled (tiny spectral gap); fall back to the full decomposition.
  if (n <= 1200) {
    const RVec sv = singular_values(m);
    return sv.size() ? sv(0) : 0.0;
  }
  return std::sqrt(std::max(0.0, lambda));
}

Mat partial_trace(const Mat& m, int da, int db, Side side) {
  require(da >= 1 && db >= 1, "partial_trace: dimensions must be positive");
  require(m.rows() == static_cast<long>(da) * db && m.cols() == m.rows(),
          "partial_trace: matrix must be (da*db) x (da*db)");
  if (side == Side::A) {
    Mat out = Mat::Zero(db, db);
    for (int a = 0; a < da; ++a) out += m.block(a * db, a * db, db, db);
    return out;
  }
  Mat out = Mat::Zero(da, da);
  for (int a = 0; a < da; ++a)
    for (int ap = 0; ap < da; ++ap) {
      cxd s = 0.0;
      for (int b = 0; b < db; ++b) s += m(a * db + b, ap * db + b);
      out(a, ap) = s;
    }
  return out;
}

Mat partial_transpose(const Mat& m, int da, int db, Side side) {
  require(da >= 1 && db >= 1, "partial_transpose: dimensions must be positive");
  require(m.rows() == static_cast<long>(da) * db && m.cols() == m.rows(),
          "partial_transpose: matrix must be (da*db) x (da*db)");
  Mat out(m.rows(), m.cols());
  for (int a = 0; a < da; ++a)
    for (int ap = 0; ap < da; ++ap)
      for (int b = 0; b < db; ++b)
        for (int bp = 0; bp < db; ++bp) {
          if (side == Side::A)
            out(a * db + b, ap * db + bp) = m(ap * db + b, a * db + bp);
          else
            out(a * db + b, ap * db + bp) = m(a * db + bp, ap * db + b);
        }
  return out;
}

Mat kron(const Mat& a, const Mat& b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

HermitianBasis gellmann_basis(int d) {
  require(d >= 1, "gellmann_basis: dimension must be >= 1");
  HermitianBasis basis;
  basis.dim = d;
  basis.elements.reserve(static_cast<size_t>(d) * d);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));
  basis.elements.push_back(inv_sqrt_d * Mat::Identity(d, d));
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Mat m = Mat::Zero(d, d);
      m(i, j) = s;
      m(j, i) = s;
      basis.elements.push_back(m);
    }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Mat m = Mat::Zero(d, d);
      m(i, j) = cxd(0, -s);
      m(j, i) = cxd(0, s);
      basis.elements.push_back(m);
    }
  for (int l = 1; l < d; ++l) {
    Mat m = Mat::Zero(d, d);
    const double f = 1.0 / std::sqrt(static_cast<double>(l) * (l + 1));
    for (int j = 0; j < l; ++j) m(j, j) = f;
    m(l, l) = -f * l;
    basis.elements.push_back(m);
  }
  return basis;
}

RVec expand_in_basis(const Mat& h, const HermitianBasis& basis) {
  require(h.rows() == basis.dim && h.cols() == basis.dim,
          "expand_in_basis: dimension mismatch with basis");
  RVec y(basis.size());
  for (int n = 0; n < basis.size(); ++n)
    y(n) = std::real((basis.elements[n] * h).trace());
  return y;
}

Mat reconstruct_from_basis(const RVec& coeffs, const HermitianBasis& basis) {
  require(coeffs.size() == basis.size(),
          "reconstruct_from_basis: coefficient count mismatch");
  Mat h = Mat::Zero(basis.dim, basis.dim);
  for (int n = 0; n < basis.size(); ++n) h += coeffs(n) * basis.elements[n];
  return h;
}

FlipKernel flip_kernel(const Mat& rho, int da, int db) {
  require(rho.rows() == static_cast<long>(da) * db && rho.cols() == rho.rows(),
          "flip_kernel: state dimension mismatch");
  FlipKernel k;
  k.da = da;
  k.db = db;
  k.r.resize(static_cast<long>(da) * da, static_cast<long>(db) * db);
  for (int ra = 0; ra < da; ++ra)
    for (int sa = 0; sa < da; ++sa)
      for (int rb = 0; rb < db; ++rb)
        for (int sb = 0; sb < db; ++sb)
          k.r(ra * da + sa, sb * db + rb) = rho(sa * db + sb, ra * db + rb);
  return k;
}

Vec vec(const Mat& m) {
  Vec v(m.size());
  long idx = 0;
  for (int c = 0; c < m.cols(); ++c)
    for (int r = 0; r < m.rows(); ++r) v(idx++) = m(r, c);
  return v;
}

namespace {
struct SparseEntry {
  int i, j;
  cxd v;
};

std::vector<std::vector<SparseEntry>> sparsify(const HermitianBasis& basis) {
  std::vector<std::vector<SparseEntry>> out(basis.size());
  for (int n = 0; n < basis.size(); ++n)
    for (int i = 0; i < basis.dim; ++i)
      for (int j = 0; j < basis.dim; ++j)
        if (std::abs(basis.elements[n](i, j)) > 0)
          out[n].push_back({i, j, basis.elements[n](i, j)});
  return out;
}
}  // namespace

RMat bipartite_basis_coefficients(const Mat& rho, const HermitianBasis& basis_a,
                                  const HermitianBasis& basis_b) {
  const int da = basis_a.dim, db = basis_b.dim;
  require(rho.rows() == static_cast<long>(da) * db && rho.cols() == rho.rows(),
          "bipartite_basis_coefficients: state dimension mismatch");
  const auto sa = sparsify(basis_a);
  const auto sb = sparsify(basis_b);
  RMat c(basis_a.size(), basis_b.size());
  for (int n = 0; n < basis_a.size(); ++n)
    for (int np = 0; np < basis_b.size(); ++np) {
      cxd acc = 0.0;
      for (const auto& ea : sa[n])
        for (const auto& eb : sb[np])
          acc += ea.v * eb.v * rho(ea.j * db + eb.j, ea.i * db + eb.i);
      c(n, np) = acc.real();
    }
  return c;
}

std::vector<RMat> anticommutator_tensor(const HermitianBasis& basis) {
  const int n2 = basis.size();
  std::vector<RMat> p(n2, RMat(n2, n2));
  std::vector<std::vector<Mat>> prod(n2, std::vector<Mat>(n2));
  for (int i = 0; i < n2; ++i)
    for (int j = i; j < n2; ++j)
      prod[i][j] = basis.elements[i] * basis.elements[j];
  for (int n = 0; n < n2; ++n)
    for (int i = 0; i < n2; ++i)
      for (int j = i; j < n2; ++j) {
        const Mat& ij = prod[i][j];
        const double v =
            0.5 * ((basis.elements[n] * ij).trace() + (ij * basis.elements[n]).trace()).real();
        // tr(s_n {s_i, s_j})/2 = Re tr(s_n s_i s_j) by trace cyclicity
        p[n](i, j) = v;
        p[n](j, i) = v;
      }
  return p;
}

}  // namespace linalg
}  // namespace bellbound
