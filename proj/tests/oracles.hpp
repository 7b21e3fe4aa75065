// Independent reference implementations used only to check the library.
// Everything here follows the most literal construction available (explicit
// block assembly, explicit Kronecker products, long-horizon first-order
// methods) and stays clear of the production code paths under test.
#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "irsdiag/linalg.hpp"
#include "irsdiag/rng.hpp"
#include "irsdiag/types.hpp"

namespace oracles {

using irsdiag::Complex;
using irsdiag::ComplexMatrix;
using irsdiag::ComplexVector;
using irsdiag::RealVector;

inline ComplexVector random_vector(Eigen::Index n, irsdiag::Rng& rng) {
  ComplexVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.complex_normal();
  return v;
}

inline ComplexMatrix random_matrix(Eigen::Index r, Eigen::Index c, irsdiag::Rng& rng) {
  ComplexMatrix m(r, c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index i = 0; i < r; ++i) m(i, j) = rng.complex_normal();
  return m;
}

inline ComplexMatrix random_hermitian(Eigen::Index n, irsdiag::Rng& rng) {
  const ComplexMatrix a = random_matrix(n, n, rng);
  return 0.5 * (a + a.adjoint());
}

/// Literal assembly of T(u): build each W x W block T_i from the printed
/// Toeplitz layout (entry (r, c) = u_{i, r-c}, with u_{0,-k} := conj(u_{0,k})),
/// then place T_{I-J} below the block diagonal and T_{J-I}^H above it.
inline ComplexMatrix toeplitz_placement(const ComplexVector& u, int H, int W) {
  auto entry = [&](int k1, int k2) -> Complex {
    // flat index of pair (k1, k2) in the halfspace layout
    if (k1 == 0) {
      if (k2 >= 0) return u[k2];
      return std::conj(u[-k2]);
    }
    return u[W + (k1 - 1) * (2 * W - 1) + (k2 + W - 1)];
  };
  std::vector<ComplexMatrix> blocks(H);
  for (int i = 0; i < H; ++i) {
    blocks[i].resize(W, W);
    for (int r = 0; r < W; ++r)
      for (int c = 0; c < W; ++c) blocks[i](r, c) = entry(i, r - c);
  }
  ComplexMatrix T(H * W, H * W);
  for (int I = 0; I < H; ++I)
    for (int J = 0; J < H; ++J) {
      if (I >= J)
        T.block(I * W, J * W, W, W) = blocks[I - J];
      else
        T.block(I * W, J * W, W, W) = blocks[J - I].adjoint();
    }
  return T;
}

/// Elementary Toeplitz matrix with ones where column - row = k.
inline ComplexMatrix theta(int n, int k) {
  ComplexMatrix t = ComplexMatrix::Zero(n, n);
  for (int r = 0; r < n; ++r) {
    const int c = r + k;
    if (c >= 0 && c < n) t(r, c) = Complex(1.0, 0.0);
  }
  return t;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// tr((Theta_k1 (x) Theta_k2) Q) over the halfspace, via explicit Kronecker
/// products.
inline ComplexVector adjoint_kron_trace(const ComplexMatrix& Q, int H, int W) {
  const auto pairs = irsdiag::halfspace_indices(H, W);
  ComplexVector out(static_cast<Eigen::Index>(pairs.size()));
  Eigen::Index k = 0;
  for (const auto& [k1, k2] : pairs)
    out[k++] = (kron(theta(H, k1), theta(W, k2)) * Q).trace();
  return out;
}

inline double nuclear_norm(const ComplexMatrix& m) {
  Eigen::JacobiSVD<ComplexMatrix> svd(m);
  return svd.singularValues().sum();
}

inline double lasso_objective(const ComplexMatrix& A, const ComplexVector& b,
                              const ComplexVector& x, double lambda) {
  return (b - A * x).squaredNorm() + lambda * x.cwiseAbs().sum();
}

/// Proximal gradient (ISTA) for min ||b - A x||_2^2 + lambda ||x||_1.
inline ComplexVector ista_lasso(const ComplexMatrix& A, const ComplexVector& b, double lambda,
                                int iters) {
  Eigen::JacobiSVD<ComplexMatrix> svd(A);
  const double lip = 2.0 * svd.singularValues()(0) * svd.singularValues()(0);
  const double step = 1.0 / lip;
  ComplexVector x = ComplexVector::Zero(A.cols());
  const double thresh = lambda * step;
  for (int it = 0; it < iters; ++it) {
    const ComplexVector grad = 2.0 * (A.adjoint() * (A * x - b));
    ComplexVector v = x - step * grad;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      const double mag = std::abs(v[i]);
      v[i] = (mag <= thresh) ? Complex(0, 0) : v[i] * (1.0 - thresh / mag);
    }
    if ((v - x).norm() <= 1e-16 * std::max(1.0, x.norm())) {
      x = v;
      break;
    }
    x = v;
  }
  return x;
}

/// Proximal gradient for min 0.5 ||Y - F D||_F^2 + lambda ||D||_{2,1}.
inline ComplexMatrix proxgrad_row_sparse(const ComplexMatrix& F, const ComplexMatrix& Y,
                                         double lambda, int iters) {
  Eigen::JacobiSVD<ComplexMatrix> svd(F);
  const double lip = svd.singularValues()(0) * svd.singularValues()(0);
  const double step = 1.0 / lip;
  ComplexMatrix D = ComplexMatrix::Zero(F.cols(), Y.cols());
  for (int it = 0; it < iters; ++it) {
    const ComplexMatrix grad = F.adjoint() * (F * D - Y);
    ComplexMatrix V = D - step * grad;
    for (Eigen::Index n = 0; n < V.rows(); ++n) {
      const double norm = V.row(n).norm();
      V.row(n) *= (norm <= lambda * step) ? 0.0 : (1.0 - lambda * step / norm);
    }
    if ((V - D).norm() <= 1e-16 * std::max(1.0, D.norm())) {
      D = V;
      break;
    }
    D = V;
  }
  return D;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline double median_abs_deviation(const std::vector<double>& v) {
  const double med = median(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - med));
  return median(dev);
}

/// Kolmogorov-Smirnov distance of samples against the U(0,1) CDF.
inline double ks_uniform_statistic(std::vector<double> samples) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double cdf = samples[i];
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  return d;
}

}  // namespace oracles
