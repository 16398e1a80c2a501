#pragma once

// Dense Hermitian matrix kernels shared by every other module: spectral
// decompositions, Kronecker/partial operations on bipartite operators,
// orthonormal Hermitian operator bases and the flip-kernel bilinear form.

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace bellbound {

using cxd = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Thrown on malformed inputs (dimension mismatches, broken invariants).
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when an iterative routine fails to produce a usable result.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

namespace linalg {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw ValidationError(msg);
}

// Largest absolute deviation from Hermiticity, max_ij |H_ij - conj(H_ji)|.
double hermiticity_error(const Mat& h);

// (H + H^dag)/2
Mat symmetrize(const Mat& h);

struct EighResult {
  RVec eigenvalues;  // descending
  Mat eigenvectors;  // columns, orthonormal, aligned with eigenvalues
};

// Spectral decomposition of a Hermitian matrix. The input is symmetrized
// before decomposing; inputs further than `herm_tol` from Hermitian are
// rejected.
EighResult eigh(const Mat& h, double herm_tol = 1e-10);

// Sum of absolute eigenvalues of a Hermitian matrix.
double trace_norm(const Mat& h);

// Singular values of an arbitrary rectangular complex matrix, descending.
RVec singular_values(const Mat& m);

// Largest singular value only (power iteration on M^dag M; falls back to the
// full decomposition if the iteration stalls). Intended for large matrices
// where a full SVD is wasteful.
double largest_singular_value(const Mat& m);

enum class Side { A, B };

// Traces out one subsystem of an operator on a (da*db)-dimensional bipartite
// space. Tracing Side::A leaves a db x db matrix.
Mat partial_trace(const Mat& m, int da, int db, Side side);

// Transposes one tensor factor.
Mat partial_transpose(const Mat& m, int da, int db, Side side);

// Kronecker product, row-major tensor convention: (A (x) B)[(a,b),(a',b')] =
// A[a,a'] B[b,b'] with composite index a*db + b.
Mat kron(const Mat& a, const Mat& b);

// Orthonormal Hermitian operator basis sigma_0..sigma_{d^2-1}:
// tr(sigma_n sigma_n') = delta_nn', sigma_0 = I/sqrt(d), the rest traceless.
// Ordering: sigma_0, then symmetric pair matrices (i<j lexicographic), then
// antisymmetric pair matrices, then the d-1 diagonal matrices.
struct HermitianBasis {
  int dim = 0;
  std::vector<Mat> elements;

  int size() const { return static_cast<int>(elements.size()); }
};

HermitianBasis gellmann_basis(int d);

// Expansion coefficients y_n = tr(H sigma_n); all real for Hermitian H.
RVec expand_in_basis(const Mat& h, const HermitianBasis& basis);

// Inverse of expand_in_basis.
Mat reconstruct_from_basis(const RVec& coeffs, const HermitianBasis& basis);

// Bilinear kernel R of a bipartite state: for Hermitian A (da x da) and
// B (db x db), tr(rho A (x) B) = vec(A)^dag R vec(B) with column-stacked vec.
// Componentwise R[rA*da + sA, sB*db + rB] = rho[(sA,sB),(rA,rB)].
struct FlipKernel {
  int da = 0, db = 0;
  Mat r;  // da^2 x db^2
};

FlipKernel flip_kernel(const Mat& rho, int da, int db);

// Coefficients C[n][n'] = tr(rho sigma_n (x) sigma_n') of a bipartite operator
// in a product of Hermitian bases; all real when rho is Hermitian. Exploits
// the sparsity of the basis elements.
RMat bipartite_basis_coefficients(const Mat& rho, const HermitianBasis& basis_a,
                                  const HermitianBasis& basis_b);

// Anticommutator structure constants [P_n]_{ij} = tr(sigma_n {sigma_i, sigma_j})/2.
std::vector<RMat> anticommutator_tensor(const HermitianBasis& basis);

// Column-stacking vectorization.
Vec vec(const Mat& m);

}  // namespace linalg
}  // namespace bellbound
