#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <optional>
#include <vector>

#include "irsdiag/channel.hpp"
#include "irsdiag/lasso.hpp"
#include "irsdiag/linalg.hpp"
#include "irsdiag/system.hpp"
#include "irsdiag/types.hpp"

namespace irsdiag {

struct FocussConfig {
  int max_iter = 300;
  double tol = 1e-6;
  double prune_tol = 1e-10;  // rows below this norm collapse to exact zero

  void validate() const {
    require(max_iter >= 1 && tol > 0.0 && prune_tol >= 0.0, "FocussConfig: invalid parameters");
  }
};

struct FocussResult {
  ComplexMatrix D;
  ConvergenceRecord record;
};

namespace detail {

/// Reweighted least-squares sweep for min 0.5||Y - F D||_F^2 + lambda ||D||_{2,1}
/// (diversity p = 1). Row weights below w_floor are lifted so rows can
/// re-activate across warm-started calls; w_floor = 0 gives the pure method
/// where a fully shrunk row is absorbing.
inline FocussResult m_focuss_irls(const ComplexMatrix& Y, const ComplexMatrix& F, double lambda,
                                  RealVector w, double w_floor, const FocussConfig& cfg) {
  cfg.validate();
  require(lambda > 0.0, "m_focuss: lambda must be positive");
  const auto K = F.rows();
  const auto N = F.cols();
  require(Y.rows() == K && w.size() == N, "m_focuss: dimension mismatch");

  ComplexMatrix D = ComplexMatrix::Zero(N, Y.cols());
  FocussResult res;
  res.record.converged = false;
  const ComplexMatrix Fh = F.adjoint();
  for (int it = 1; it <= cfg.max_iter; ++it) {
    for (Eigen::Index n = 0; n < N; ++n) {
      if (w[n] < cfg.prune_tol) w[n] = 0.0;
      if (w[n] < w_floor) w[n] = w_floor;
    }
    // D = W F^H (F W F^H + lambda I)^{-1} Y
    ComplexMatrix Fw = F;
    for (Eigen::Index n = 0; n < N; ++n) Fw.col(n) *= w[n];
    ComplexMatrix C = Fw * Fh;
    C.diagonal().array() += lambda;
    const ComplexMatrix S = Eigen::LLT<ComplexMatrix>(C).solve(Y);
    ComplexMatrix D_next = Fh * S;
    for (Eigen::Index n = 0; n < N; ++n) D_next.row(n) *= w[n];

    const double change = (D_next - D).norm();
    const double scale = D_next.norm();
    D = D_next;
    for (Eigen::Index n = 0; n < N; ++n) w[n] = D.row(n).norm();
    res.record.iterations = it;
    res.record.residual = (scale > 0.0) ? change / scale : change;
    if (res.record.residual < cfg.tol) {
      res.record.converged = true;
      break;
    }
  }
  for (Eigen::Index n = 0; n < N; ++n)
    if (D.row(n).norm() < cfg.prune_tol) D.row(n).setZero();
  res.D = D;
  return res;
}

}  // namespace detail

/// M-FOCUSS for the row-sparse recovery problem
///   min_D 0.5 ||Y_res - F D||_F^2 + lambda4 ||D||_{2,1}.
inline FocussResult m_focuss(const ComplexMatrix& Y_res, const ComplexMatrix& F, double lambda4,
                             const FocussConfig& cfg = {}) {
  return detail::m_focuss_irls(Y_res, F, lambda4, RealVector::Ones(F.cols()), 0.0, cfg);
}

struct AnmConfig {
  double tau = 1.0;            // tau1 (SMV) / tau2 (MMV)
  double lambda_sparse = 1.0;  // lambda3 (SMV) / lambda4 (MMV)
  double rho = 1.0;
  int max_iter = 2000;
  double tol = 1e-6;  // relative change of (h, d) per sweep

  LassoConfig inner_lasso = make_inner_lasso();  // SMV d-update, warm-started
  FocussConfig inner_focuss = make_inner_focuss();  // MMV D-update, warm-started

  static LassoConfig make_inner_lasso() {
    LassoConfig c;
    c.max_iter = 500;
    c.tol_primal = 1e-8;
    c.tol_dual = 1e-8;
    c.tol_abs = 1e-10;
    return c;
  }
  static FocussConfig make_inner_focuss() {
    FocussConfig c;
    c.max_iter = 10;
    c.tol = 1e-8;
    return c;
  }
  void validate() const {
    require(tau > 0.0 && lambda_sparse > 0.0 && rho > 0.0 && max_iter >= 1 && tol > 0.0,
            "AnmConfig: parameters must be positive");
  }
};

/// Iterate of the twofold-Toeplitz semidefinite ADMM. N_c = 1 in the SMV case;
/// Z and Lambda are partitioned as [T(u), H; H^H, V].
struct AnmState {
  ToeplitzVector u;
  ComplexMatrix V;  // N_c x N_c, scalar v in the SMV case
  ComplexMatrix H;  // N x N_c
  ComplexMatrix D;  // N x N_c
  ComplexMatrix Z;
  ComplexMatrix Lambda;

  double v() const { return V(0, 0).real(); }
  ComplexVector h_vec() const { return H.col(0); }
  ComplexVector d_vec() const { return D.col(0); }
};

struct AnmResult {
  AnmState state;
  ConvergenceRecord record;

  ComplexMatrix H_hat() const { return state.H; }
  ComplexMatrix D_hat() const { return state.D; }
};

namespace detail {

/// Shared engine for the SMV and MMV solvers (the SMV problem is the N_c = 1
/// specialization, which is what makes the degenerate-equivalence contract
/// exact). Factorizations are computed once per instance and reused.
class AnmEngine {
 public:
  enum class Mode { Diagnosis, ValuePin };

  AnmEngine(ComplexMatrix F, const ArrayGeometry& g, AnmConfig cfg, Eigen::Index n_cols,
            Mode mode = Mode::Diagnosis)
      : F_(std::move(F)),
        cfg_(cfg),
        mode_(mode),
        // T(u) must absorb atoms a_W (x) a_H, whose Kronecker layout puts the
        // W index on the block level; block count = W, block size = H.
        blocks_(g.W),
        bsize_(g.H),
        n_(g.N()),
        nc_(n_cols) {
    cfg_.validate();
    g.validate();
    require(F_.cols() == n_, "AnmEngine: F column count must equal H*W");
    require(nc_ >= 1, "AnmEngine: need at least one measurement column");
    psi_inv_ = psi_matrix(blocks_, bsize_).cwiseInverse();
    Fh_ = F_.adjoint();
    ComplexMatrix gram = Fh_ * F_;
    gram.diagonal().array() += 2.0 * cfg_.rho;
    llt_.compute(gram);
    if (mode_ == Mode::Diagnosis && nc_ == 1) {
      LassoConfig inner = cfg_.inner_lasso;
      inner.lambda = 2.0 * cfg_.lambda_sparse;  // 0.5||r-Fd||^2 + l||d||_1 in the solver's scale
      inner.rho = cfg_.rho;
      inner_lasso_.emplace(F_, inner);
    }
  }

  AnmState initial_state() const {
    AnmState s;
    s.u = ToeplitzVector(ComplexVector::Zero(ToeplitzVector::length(blocks_, bsize_)), blocks_,
                         bsize_);
    s.V = ComplexMatrix::Zero(nc_, nc_);
    s.H = ComplexMatrix::Zero(n_, nc_);
    s.D = ComplexMatrix::Zero(n_, nc_);
    s.Z = ComplexMatrix::Zero(n_ + nc_, n_ + nc_);
    s.Lambda = ComplexMatrix::Zero(n_ + nc_, n_ + nc_);
    return s;
  }

  /// One full sweep in the order V -> u -> H -> D -> Z -> Lambda.
  void step(AnmState& s, const ComplexMatrix& Y) {
    const double rho = cfg_.rho;
    const double tau = cfg_.tau;
    const auto Z0 = s.Z.topLeftCorner(n_, n_);
    const auto Zc = s.Z.bottomRightCorner(nc_, nc_);
    const auto L0 = s.Lambda.topLeftCorner(n_, n_);
    const auto Lc = s.Lambda.bottomRightCorner(nc_, nc_);

    s.V = Zc + (Lc - (tau / 2.0) * ComplexMatrix::Identity(nc_, nc_)) / rho;
    s.V = 0.5 * (s.V + s.V.adjoint()).eval();

    // Exact minimizer over u; note the trace-penalty correction sits inside
    // the Psi^{-1} scaling (the (0,0) pair appears HW times).
    ComplexVector u = toeplitz_adjoint(Z0 + L0 / rho, blocks_, bsize_);
    u[0] -= tau / (2.0 * rho);
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] *= psi_inv_[i];
    u[0] = Complex(u[0].real(), 0.0);
    s.u = ToeplitzVector(std::move(u), blocks_, bsize_);

    const auto Z1 = s.Z.topRightCorner(n_, nc_);
    const auto L1 = s.Lambda.topRightCorner(n_, nc_);
    s.H = llt_.solve(Fh_ * (Y - F_ * s.D) + 2.0 * L1 + 2.0 * rho * Z1);

    if (mode_ == Mode::Diagnosis) {
      const ComplexMatrix R = Y - F_ * s.H;
      if (nc_ == 1) {
        s.D.col(0) = inner_lasso_->solve(R.col(0), /*warm_start=*/true).x;
      } else {
        RealVector w(n_);
        for (Eigen::Index i = 0; i < n_; ++i) w[i] = s.D.row(i).norm();
        double floor = 1e-3 * w.maxCoeff();
        if (floor <= 0.0) {
          w.setOnes();
          floor = 0.0;
        }
        s.D = m_focuss_irls(R, F_, cfg_.lambda_sparse, w, floor, cfg_.inner_focuss).D;
      }
    }

    ComplexMatrix B(n_ + nc_, n_ + nc_);
    B.topLeftCorner(n_, n_) = twofold_toeplitz(s.u);
    B.topRightCorner(n_, nc_) = s.H;
    B.bottomLeftCorner(nc_, n_) = s.H.adjoint();
    B.bottomRightCorner(nc_, nc_) = s.V;

    s.Z = psd_project(B - s.Lambda / rho);
    s.Lambda += rho * (s.Z - B);
    s.Lambda = 0.5 * (s.Lambda + s.Lambda.adjoint()).eval();
  }

  AnmResult solve(const ComplexMatrix& Y) {
    require(Y.rows() == F_.rows() && Y.cols() == nc_, "AnmEngine: measurement shape mismatch");
    AnmResult res;
    res.state = initial_state();
    res.record.converged = false;
    double prev_value = 0.0;
    for (int it = 1; it <= cfg_.max_iter; ++it) {
      const ComplexMatrix H_prev = res.state.H;
      const ComplexMatrix D_prev = res.state.D;
      step(res.state, Y);
      res.record.iterations = it;
      if (mode_ == Mode::ValuePin) {
        const double value = objective_value(res.state);
        const ComplexMatrix B = stacked(res.state);
        const double primal = (res.state.Z - B).norm() / (1.0 + B.norm());
        res.record.residual = std::max(primal, std::abs(value - prev_value) / (1.0 + std::abs(value)));
        prev_value = value;
      } else {
        const double change = (res.state.H - H_prev).norm() + (res.state.D - D_prev).norm();
        const double scale = res.state.H.norm() + res.state.D.norm();
        res.record.residual = (scale > 0.0) ? change / scale : change;
      }
      if (it > 1 && res.record.residual < cfg_.tol) {
        res.record.converged = true;
        break;
      }
    }
    return res;
  }

  /// (1/2)(tr(T(u))/N + tr(V)); tr(T(u)) = N u_0.
  double objective_value(const AnmState& s) const {
    return 0.5 * (s.u.u[0].real() + s.V.real().trace());
  }

  ComplexMatrix stacked(const AnmState& s) const {
    ComplexMatrix B(n_ + nc_, n_ + nc_);
    B.topLeftCorner(n_, n_) = twofold_toeplitz(s.u);
    B.topRightCorner(n_, nc_) = s.H;
    B.bottomLeftCorner(nc_, n_) = s.H.adjoint();
    B.bottomRightCorner(nc_, nc_) = s.V;
    return B;
  }

 private:
  ComplexMatrix F_, Fh_;
  AnmConfig cfg_;
  Mode mode_;
  int blocks_, bsize_;
  Eigen::Index n_, nc_;
  RealVector psi_inv_;
  Eigen::LLT<ComplexMatrix> llt_;
  std::optional<LassoSolver> inner_lasso_;
};

inline ComplexMatrix weights_to_matrix(const std::vector<ComplexVector>& weights) {
  require(!weights.empty(), "weights_to_matrix: no weighting vectors");
  ComplexMatrix F(static_cast<Eigen::Index>(weights.size()), weights[0].size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(weights[k].size() == F.cols(), "weights_to_matrix: ragged weights");
    F.row(static_cast<Eigen::Index>(k)) = weights[k].transpose();
  }
  return F;
}

}  // namespace detail

/// One sweep of the SMV ADMM on an externally held state. The factorizations
/// are rebuilt per call; prefer the solve_* entry points for full runs, which
/// cache them across sweeps.
inline AnmState anm_smv_step(const AnmState& state, const ComplexMatrix& F, const ComplexVector& y,
                             const ArrayGeometry& g, const AnmConfig& cfg) {
  detail::AnmEngine engine(F, g, cfg, 1);
  AnmState s = state;
  engine.step(s, y);
  return s;
}

/// Case III joint recovery of the cascaded channel and failure deviation,
/// single measurement vector.
inline AnmResult solve_anm_smv(const MeasurementSet& ms, const ArrayGeometry& g,
                               const AnmConfig& cfg) {
  require(ms.y.cols() == 1, "solve_anm_smv: expected a single measurement column");
  detail::AnmEngine engine(detail::weights_to_matrix(ms.weights), g, cfg, 1);
  return engine.solve(ms.y);
}

/// MMV joint recovery across RX antennas. With N_RX = 1 this runs the exact
/// SMV iteration (the MMV norms reduce to the SMV ones).
inline AnmResult solve_anm_mmv(const MeasurementSet& ms, const ArrayGeometry& g,
                               const AnmConfig& cfg) {
  detail::AnmEngine engine(detail::weights_to_matrix(ms.weights), g, cfg, ms.y.cols());
  return engine.solve(ms.y);
}

struct AtomicNormResult {
  double value = 0.0;
  ConvergenceRecord record;
};

/// SDP value of the cascaded-channel atomic norm at h, computed by the same
/// ADMM with the data term replaced by an equality pin of the h block
/// (F = w I, y = w h with w^2 = 1e6 relative to tau) and the sparse block off.
inline AtomicNormResult atomic_norm_value(const ComplexVector& h, const ArrayGeometry& g,
                                          AnmConfig cfg = {}) {
  require(h.size() == g.N(), "atomic_norm_value: vector length must equal H*W");
  cfg.lambda_sparse = 1.0;  // unused in ValuePin mode
  const double pin = std::sqrt(1e6 * cfg.tau);
  const ComplexMatrix F = pin * ComplexMatrix::Identity(g.N(), g.N());
  detail::AnmEngine engine(F, g, cfg, 1, detail::AnmEngine::Mode::ValuePin);
  AnmResult run = engine.solve(pin * h);
  AtomicNormResult out;
  out.record = run.record;
  out.value = engine.objective_value(run.state);
  return out;
}

/// m_hat = d ./ h + 1 with guarded division.
inline ComplexVector retrieve_mask_smv(const ComplexVector& h_hat, const ComplexVector& d_hat,
                                       double guard = kDivisionGuard) {
  return guarded_ratio_mask(d_hat, h_hat, guard);
}

/// Row means of D ./ H + 1, averaging only the antennas whose channel entry
/// passes the guard; rows with no usable antenna yield 1.
inline ComplexVector retrieve_mask_mmv(const ComplexMatrix& H_hat, const ComplexMatrix& D_hat,
                                       double guard = kDivisionGuard) {
  require(H_hat.rows() == D_hat.rows() && H_hat.cols() == D_hat.cols(),
          "retrieve_mask_mmv: shape mismatch");
  const double floor = guard * H_hat.cwiseAbs().maxCoeff();
  ComplexVector m = ComplexVector::Ones(H_hat.rows());
  for (Eigen::Index n = 0; n < H_hat.rows(); ++n) {
    Complex acc(0.0, 0.0);
    int used = 0;
    for (Eigen::Index i = 0; i < H_hat.cols(); ++i) {
      const Complex hni = H_hat(n, i);
      if (std::abs(hni) >= floor && std::abs(hni) > 0.0) {
        acc += D_hat(n, i) / hni + Complex(1.0, 0.0);
        ++used;
      }
    }
    if (used > 0) m[n] = acc / static_cast<double>(used);
  }
  return m;
}

/// Case III diagnosis, single-antenna RX.
inline DiagnosisResult diagnose_no_csi(const MeasurementSet& ms, const ArrayGeometry& g,
                                       const AnmConfig& cfg, double guard = kDivisionGuard) {
  AnmResult run = solve_anm_smv(ms, g, cfg);
  DiagnosisResult out;
  out.channel = run.state.H;
  out.deviation = run.state.D;
  out.mask = retrieve_mask_smv(run.state.h_vec(), run.state.d_vec(), guard);
  out.convergence = run.record;
  return out;
}

/// Case III diagnosis, multi-antenna RX (MMV).
inline DiagnosisResult diagnose_no_csi_mmv(const MeasurementSet& ms, const ArrayGeometry& g,
                                           const AnmConfig& cfg, double guard = kDivisionGuard) {
  AnmResult run = solve_anm_mmv(ms, g, cfg);
  DiagnosisResult out;
  out.channel = run.state.H;
  out.deviation = run.state.D;
  out.mask = retrieve_mask_mmv(run.state.H, run.state.D, guard);
  out.convergence = run.record;
  return out;
}

}  // namespace irsdiag
