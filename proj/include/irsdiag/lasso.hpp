#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <vector>

#include "irsdiag/linalg.hpp"
#include "irsdiag/system.hpp"
#include "irsdiag/types.hpp"

namespace irsdiag {

struct LassoConfig {
  double lambda = 0.0;
  double rho = 1.0;
  int max_iter = 5000;
  double tol_primal = 1e-6;  // relative part of the primal stopping rule
  double tol_dual = 1e-6;    // relative part of the dual stopping rule
  double tol_abs = 1e-8;

  void validate() const {
    require(lambda >= 0.0 && rho > 0.0 && max_iter >= 1 && tol_primal > 0.0 && tol_dual > 0.0,
            "LassoConfig: parameters must be positive");
  }
};

struct LassoResult {
  ComplexVector x;
  ConvergenceRecord record;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// ADMM solver for min_x ||b - A x||_2^2 + lambda ||x||_1 over complex x.
/// The Gram factorization (2 A^H A + rho I) is computed once at construction
/// and reused across solves; z/w carry over as warm starts when requested.
class LassoSolver {
 public:
  LassoSolver(const ComplexMatrix& A, LassoConfig cfg) : A_(A), cfg_(cfg) {
    cfg_.validate();
    require(A.allFinite(), "LassoSolver: matrix contains non-finite values");
    const auto n = A.cols();
    ComplexMatrix gram = 2.0 * (A.adjoint() * A);
    gram.diagonal().array() += cfg_.rho;
    llt_.compute(gram);
    z_ = ComplexVector::Zero(n);
    w_ = ComplexVector::Zero(n);
  }

  LassoResult solve(const ComplexVector& b, bool warm_start = false) {
    require(b.size() == A_.rows(), "LassoSolver: rhs length mismatch");
    require(b.allFinite(), "LassoSolver: rhs contains non-finite values");
    const auto n = A_.cols();
    if (!warm_start) {
      z_.setZero();
      w_.setZero();
    }
    const ComplexVector Atb2 = 2.0 * (A_.adjoint() * b);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    LassoResult res;
    res.record.converged = false;
    ComplexVector x(n);
    for (int it = 1; it <= cfg_.max_iter; ++it) {
      x = llt_.solve(Atb2 + cfg_.rho * (z_ - w_));
      const ComplexVector z_prev = z_;
      z_ = soft_threshold((x + w_).eval(), cfg_.lambda / cfg_.rho);
      w_ += x - z_;

      res.primal_residual = (x - z_).norm();
      res.dual_residual = cfg_.rho * (z_ - z_prev).norm();
      const double eps_pri = sqrt_n * cfg_.tol_abs + cfg_.tol_primal * std::max(x.norm(), z_.norm());
      const double eps_dual = sqrt_n * cfg_.tol_abs + cfg_.tol_dual * cfg_.rho * w_.norm();
      res.record.iterations = it;
      if (res.primal_residual <= eps_pri && res.dual_residual <= eps_dual) {
        res.record.converged = true;
        break;
      }
    }
    res.record.residual = std::max(res.primal_residual, res.dual_residual);
    res.x = z_;
    return res;
  }

 private:
  ComplexMatrix A_;
  LassoConfig cfg_;
  Eigen::LLT<ComplexMatrix> llt_;
  ComplexVector z_, w_;
};

inline LassoResult solve_lasso(const ComplexMatrix& A, const ComplexVector& b,
                               const LassoConfig& cfg) {
  return LassoSolver(A, cfg).solve(b);
}

/// Equivalent sensing matrix of Case I: row k = (f_k o h_RX o h_TX)^T.
inline ComplexMatrix build_sensing_matrix(const std::vector<ComplexVector>& weights,
                                          const ComplexVector& h_tx, const ComplexVector& h_rx) {
  require(!weights.empty(), "build_sensing_matrix: no weighting vectors");
  const auto N = h_tx.size();
  require(h_rx.size() == N, "build_sensing_matrix: channel length mismatch");
  ComplexMatrix F(static_cast<Eigen::Index>(weights.size()), N);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(weights[k].size() == N, "build_sensing_matrix: weight length mismatch");
    F.row(static_cast<Eigen::Index>(k)) =
        weights[k].cwiseProduct(h_rx).cwiseProduct(h_tx).transpose();
  }
  return F;
}

/// Fault-free reference y_r = F_h * 1.
inline ComplexVector reference_signal(const ComplexMatrix& F_h) {
  return F_h * ComplexVector::Ones(F_h.cols());
}

/// Case I diagnosis: recover the sparse deviation x from the differential
/// signal y - y_r by LASSO, then m_hat = x_hat + 1.
inline DiagnosisResult diagnose_full_csi(const MeasurementSet& ms, const ComplexVector& h_tx,
                                         const ComplexVector& h_rx, const LassoConfig& cfg) {
  const ComplexMatrix F_h = build_sensing_matrix(ms.weights, h_tx, h_rx);
  const ComplexVector y_d = ms.y_vec() - reference_signal(F_h);
  LassoResult lasso = solve_lasso(F_h, y_d, cfg);
  DiagnosisResult out;
  out.deviation = lasso.x;
  out.mask = lasso.x + ComplexVector::Ones(lasso.x.size());
  out.channel = h_tx.cwiseProduct(h_rx);
  out.convergence = lasso.record;
  return out;
}

}  // namespace irsdiag
