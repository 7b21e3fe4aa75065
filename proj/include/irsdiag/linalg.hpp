#pragma once

#include <Eigen/Dense>
#include <mutex>
#include <utility>
#include <vector>

#include "irsdiag/types.hpp"

#ifdef IRSDIAG_USE_LAPACKE
#include <lapacke.h>
extern "C" void openblas_set_num_threads(int);
#endif

namespace irsdiag {

/// Parameter vector of the twofold Toeplitz operator T(u) for an H x H block
/// Toeplitz matrix with W x W Toeplitz blocks. Layout: block 0 holds the
/// diagonal pairs (0, 0..W-1), block k1 >= 1 holds (k1, -(W-1)..W-1).
struct ToeplitzVector {
  ComplexVector u;
  int H = 0;
  int W = 0;

  ToeplitzVector() = default;
  ToeplitzVector(ComplexVector values, int blocks, int block_size)
      : u(std::move(values)), H(blocks), W(block_size) {
    require(H >= 1 && W >= 1, "ToeplitzVector: dimensions must be positive");
    require(u.size() == length(H, W), "ToeplitzVector: length must be (H-1)(2W-1)+W");
  }

  static Eigen::Index length(int H, int W) {
    return static_cast<Eigen::Index>(H - 1) * (2 * W - 1) + W;
  }
};

/// Ordered diagonal pairs (k1, k2) parameterizing a Hermitian T(u):
/// (0, k2) for k2 in [0, W), then (k1, k2) for k1 in [1, H), k2 in (-W, W).
inline std::vector<std::pair<int, int>> halfspace_indices(int H, int W) {
  require(H >= 1 && W >= 1, "halfspace_indices: dimensions must be positive");
  std::vector<std::pair<int, int>> pairs;
  pairs.reserve(static_cast<std::size_t>(ToeplitzVector::length(H, W)));
  for (int k2 = 0; k2 < W; ++k2) pairs.emplace_back(0, k2);
  for (int k1 = 1; k1 < H; ++k1)
    for (int k2 = -(W - 1); k2 < W; ++k2) pairs.emplace_back(k1, k2);
  return pairs;
}

/// T(u): entry u_{k1,k2} is written at every position with block row - block
/// col = k1 and in-block row - col = k2; the conjugate fills the mirrored
/// positions, so the result is Hermitian by construction. u[0] must be real.
inline ComplexMatrix twofold_toeplitz(const ToeplitzVector& t) {
  const int H = t.H, W = t.W;
  const int N = H * W;
  require(std::abs(t.u[0].imag()) <= 1e-12 * std::max(1.0, std::abs(t.u[0])),
          "twofold_toeplitz: u[0] must be real");
  ComplexMatrix M = ComplexMatrix::Zero(N, N);
  Eigen::Index k = 0;
  for (const auto& [k1, k2] : halfspace_indices(H, W)) {
    const Complex v = (k1 == 0 && k2 == 0) ? Complex(t.u[0].real(), 0.0) : t.u[k];
    for (int I = k1; I < H; ++I) {
      const int J = I - k1;
      for (int r = std::max(0, k2); r < std::min(W, W + k2); ++r) {
        const int c = r - k2;
        M(I * W + r, J * W + c) = v;
        if (k1 != 0 || k2 != 0) M(J * W + c, I * W + r) = std::conj(v);
      }
    }
    ++k;
  }
  return M;
}

/// Adjoint T*(Q): the k-th entry sums Q over the positions where u_k appears
/// in T(u), i.e. tr((Theta_k1 (x) Theta_k2) Q) over the halfspace.
inline ComplexVector toeplitz_adjoint(const ComplexMatrix& Q, int H, int W) {
  const int N = H * W;
  require(Q.rows() == N && Q.cols() == N, "toeplitz_adjoint: Q must be N x N with N = H*W");
  ComplexVector out(ToeplitzVector::length(H, W));
  Eigen::Index k = 0;
  for (const auto& [k1, k2] : halfspace_indices(H, W)) {
    Complex acc(0.0, 0.0);
    for (int I = k1; I < H; ++I) {
      const int J = I - k1;
      for (int r = std::max(0, k2); r < std::min(W, W + k2); ++r)
        acc += Q(I * W + r, J * W + (r - k2));
    }
    out[k++] = acc;
  }
  return out;
}

/// Diagonal of Psi: the multiplicity (H-|k1|)(W-|k2|) of each diagonal pair,
/// laid out as [HW, H(W-1), ..., H, [H-1,...,1] (x) [1,...,W,...,1]].
inline RealVector psi_matrix(int H, int W) {
  require(H >= 1 && W >= 1, "psi_matrix: dimensions must be positive");
  RealVector psi(ToeplitzVector::length(H, W));
  Eigen::Index k = 0;
  for (const auto& [k1, k2] : halfspace_indices(H, W))
    psi[k++] = static_cast<double>((H - std::abs(k1)) * (W - std::abs(k2)));
  return psi;
}

namespace detail {

/// Full Hermitian eigendecomposition, eigenvalues ascending.
/// LAPACKE zheevd when enabled (BLAS pinned to one thread so results do not
/// depend on the level of trial parallelism), otherwise Eigen.
inline void hermitian_eig(const ComplexMatrix& G, RealVector& evals, ComplexMatrix& evecs) {
#ifdef IRSDIAG_USE_LAPACKE
  static std::once_flag once;
  std::call_once(once, [] { openblas_set_num_threads(1); });
  const lapack_int n = static_cast<lapack_int>(G.rows());
  evecs = G;
  evals.resize(n);
  const lapack_int info =
      LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', n,
                     reinterpret_cast<lapack_complex_double*>(evecs.data()), n, evals.data());
  if (info == 0) return;
  // fall through to Eigen on the rare zheevd failure
#endif
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(G);
  evals = es.eigenvalues();
  evecs = es.eigenvectors();
}

}  // namespace detail

/// Frobenius-nearest positive semidefinite matrix: eigendecompose and clamp
/// negative eigenvalues to zero. Input is symmetrized first to absorb roundoff.
inline ComplexMatrix psd_project(const ComplexMatrix& G) {
  require(G.rows() == G.cols(), "psd_project: matrix must be square");
  const double scale = std::max(1.0, G.norm());
  require((G - G.adjoint()).norm() <= 1e-8 * scale, "psd_project: input is not Hermitian");
  const ComplexMatrix S = 0.5 * (G + G.adjoint());
  RealVector evals;
  ComplexMatrix evecs;
  detail::hermitian_eig(S, evals, evecs);
  if (evals[0] >= 0.0) return S;  // already PSD
  Eigen::Index first = 0;
  while (first < evals.size() && evals[first] <= 0.0) ++first;
  const Eigen::Index p = evals.size() - first;
  if (p == 0) return ComplexMatrix::Zero(G.rows(), G.cols());
  if (first <= p) {
    // few negative eigenvalues: subtract the negative part instead
    const auto Vn = evecs.leftCols(first);
    const ComplexVector neg = evals.head(first).cast<Complex>();
    return S - ComplexMatrix(Vn * neg.asDiagonal() * Vn.adjoint());
  }
  const auto Vp = evecs.rightCols(p);
  const ComplexVector kept = evals.tail(p).cast<Complex>();
  return Vp * kept.asDiagonal() * Vp.adjoint();
}

/// Prox of kappa * |.|_1 for complex scalars: shrink the modulus, keep the phase.
inline Complex soft_threshold(Complex z, double kappa) {
  require(kappa >= 0.0, "soft_threshold: kappa must be nonnegative");
  const double mag = std::abs(z);
  if (mag <= kappa) return Complex(0.0, 0.0);
  return z * (1.0 - kappa / mag);
}

inline ComplexVector soft_threshold(const ComplexVector& z, double kappa) {
  require(kappa >= 0.0, "soft_threshold: kappa must be nonnegative");
  ComplexVector out(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = soft_threshold(z[i], kappa);
  return out;
}

inline ComplexMatrix soft_threshold(const ComplexMatrix& Z, double kappa) {
  require(kappa >= 0.0, "soft_threshold: kappa must be nonnegative");
  ComplexMatrix out(Z.rows(), Z.cols());
  for (Eigen::Index j = 0; j < Z.cols(); ++j)
    for (Eigen::Index i = 0; i < Z.rows(); ++i) out(i, j) = soft_threshold(Z(i, j), kappa);
  return out;
}

/// Prox of kappa * nuclear norm: soft-threshold the singular values.
inline ComplexMatrix singular_value_threshold(const ComplexMatrix& M, double kappa) {
  require(kappa >= 0.0, "singular_value_threshold: kappa must be nonnegative");
  Eigen::JacobiSVD<ComplexMatrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  ComplexVector s = svd.singularValues().cast<Complex>();
  for (Eigen::Index i = 0; i < s.size(); ++i)
    s[i] = std::max(0.0, s[i].real() - kappa);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().adjoint();
}

/// Prox of kappa * |.|_{2,1}: scale each row by max(0, 1 - kappa/|row|_2).
inline ComplexMatrix row_group_shrink(const ComplexMatrix& D, double kappa) {
  require(kappa >= 0.0, "row_group_shrink: kappa must be nonnegative");
  ComplexMatrix out = D;
  for (Eigen::Index i = 0; i < D.rows(); ++i) {
    const double norm = D.row(i).norm();
    out.row(i) *= (norm <= kappa) ? 0.0 : (1.0 - kappa / norm);
  }
  return out;
}

}  // namespace irsdiag
