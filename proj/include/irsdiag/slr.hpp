#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "irsdiag/linalg.hpp"
#include "irsdiag/system.hpp"
#include "irsdiag/types.hpp"

namespace irsdiag {

struct SlrConfig {
  double rho = 1.0;
  int max_iter = 2000;
  double tol = 1e-6;
  std::vector<double>* objective_trace = nullptr;  // augmented objective per sweep, optional

  void validate() const {
    require(rho > 0.0 && max_iter >= 1 && tol > 0.0, "SlrConfig: parameters must be positive");
  }
};

struct SlrResult {
  ComplexMatrix H_hat;  // low-rank part
  ComplexMatrix D_hat;  // sparse part
  ConvergenceRecord record;
};

/// Flat measurement operator of Case II: row k = vec(H_RX o F_mat_k)^T, so
/// applying it to vec(X) equals the elementwise sum of F_RX_k o X.
inline ComplexMatrix build_flat_operator(const std::vector<ComplexVector>& weights,
                                         const ComplexVector& h_rx, const ArrayGeometry& g) {
  g.validate();
  require(!weights.empty(), "build_flat_operator: no weighting vectors");
  require(h_rx.size() == g.N(), "build_flat_operator: channel length mismatch");
  ComplexMatrix A(static_cast<Eigen::Index>(weights.size()), g.N());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(weights[k].size() == g.N(), "build_flat_operator: weight length mismatch");
    A.row(static_cast<Eigen::Index>(k)) = weights[k].cwiseProduct(h_rx).transpose();
  }
  return A;
}

/// Sparse-plus-low-rank recovery from compressed functionals:
///   min ||H||_* + lambda2 ||D||_1  s.t.  ||y - A vec(H + D)||_2 <= delta.
/// ADMM with a consensus variable X = H + D and a residual slack r so every
/// block update is closed form: SVT for H, soft threshold for D, a cached
/// (I + A^H A) solve for X, and projection of r onto the delta-ball.
inline SlrResult solve_cslrmr(const ComplexVector& y, const ComplexMatrix& A, int rows, int cols,
                              double lambda2, double delta, const SlrConfig& cfg) {
  cfg.validate();
  require(lambda2 > 0.0, "solve_cslrmr: lambda2 must be positive");
  require(delta >= 0.0, "solve_cslrmr: delta must be nonnegative");
  const Eigen::Index N = static_cast<Eigen::Index>(rows) * cols;
  require(A.cols() == N && A.rows() == y.size(), "solve_cslrmr: operator shape mismatch");

  ComplexMatrix gram = A.adjoint() * A;
  gram.diagonal().array() += 1.0;
  Eigen::LLT<ComplexMatrix> llt(gram);

  ComplexMatrix H = ComplexMatrix::Zero(rows, cols);
  ComplexMatrix D = ComplexMatrix::Zero(rows, cols);
  ComplexMatrix X = ComplexMatrix::Zero(rows, cols);
  ComplexMatrix U1 = ComplexMatrix::Zero(rows, cols);  // scaled dual of X = H + D
  ComplexVector r = ComplexVector::Zero(y.size());
  ComplexVector u2 = ComplexVector::Zero(y.size());  // scaled dual of A vec(X) + r = y
  const double rho = cfg.rho;

  SlrResult res;
  res.record.converged = false;
  for (int it = 1; it <= cfg.max_iter; ++it) {
    const ComplexMatrix H_prev = H;
    const ComplexMatrix D_prev = D;

    H = singular_value_threshold(X - D + U1, 1.0 / rho);
    D = soft_threshold((X - H + U1).eval(), lambda2 / rho);

    const ComplexMatrix HDU = H + D - U1;
    ComplexVector rhs = A.adjoint() * (y - r - u2);
    rhs += Eigen::Map<const ComplexVector>(HDU.data(), N);
    const ComplexVector x_flat = llt.solve(rhs);
    X = Eigen::Map<const ComplexMatrix>(x_flat.data(), rows, cols);

    const ComplexVector ball_arg = y - A * x_flat - u2;
    const double ball_norm = ball_arg.norm();
    r = (ball_norm <= delta || ball_norm == 0.0) ? ball_arg : (delta / ball_norm) * ball_arg;

    const ComplexMatrix consensus_gap = X - H - D;
    const ComplexVector data_gap = A * x_flat + r - y;

    if (cfg.objective_trace) {  // augmented Lagrangian at the pre-update duals
      Eigen::JacobiSVD<ComplexMatrix> svd(H);
      const double aug = svd.singularValues().sum() + lambda2 * D.cwiseAbs().sum() +
                         0.5 * rho * ((consensus_gap + U1).squaredNorm() - U1.squaredNorm()) +
                         0.5 * rho * ((data_gap + u2).squaredNorm() - u2.squaredNorm());
      cfg.objective_trace->push_back(aug);
    }

    U1 += consensus_gap;
    u2 += data_gap;

    const double scale = H.norm() + D.norm();
    const double change = (H - H_prev).norm() + (D - D_prev).norm();
    const double rel_change = (scale > 0.0) ? change / scale : change;
    const double feas = consensus_gap.norm() / (1.0 + X.norm()) + data_gap.norm() / (1.0 + y.norm());
    res.record.iterations = it;
    res.record.residual = std::max(rel_change, feas);
    if (res.record.residual < cfg.tol) {
      res.record.converged = true;
      break;
    }
  }
  res.H_hat = H;
  res.D_hat = D;
  return res;
}

inline SlrResult solve_cslrmr(const ComplexVector& y, const ComplexMatrix& A,
                              const ArrayGeometry& g, double lambda2, double delta,
                              const SlrConfig& cfg) {
  return solve_cslrmr(y, A, g.H, g.W, lambda2, delta, cfg);
}

/// Case II diagnosis: recover (H_TX, D) by cSLRMR, then
/// m_hat = vec(D ./ H_TX + 1) with guarded division.
inline DiagnosisResult diagnose_partial_csi(const MeasurementSet& ms, const ComplexVector& h_rx,
                                            const ArrayGeometry& g, double lambda2, double delta,
                                            const SlrConfig& cfg) {
  const ComplexMatrix A = build_flat_operator(ms.weights, h_rx, g);
  SlrResult slr = solve_cslrmr(ms.y_vec(), A, g, lambda2, delta, cfg);
  DiagnosisResult out;
  const Eigen::Index N = g.N();
  out.channel = Eigen::Map<const ComplexVector>(slr.H_hat.data(), N);
  out.deviation = Eigen::Map<const ComplexVector>(slr.D_hat.data(), N);
  out.mask = guarded_ratio_mask(out.deviation.col(0), out.channel.col(0));
  out.convergence = slr.record;
  return out;
}

}  // namespace irsdiag
