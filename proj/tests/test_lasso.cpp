#include <catch2/catch_amalgamated.hpp>

#include "irsdiag/lasso.hpp"
#include "oracles.hpp"

using namespace irsdiag;

namespace {
LassoConfig cfg_with(double lambda) {
  LassoConfig cfg;
  cfg.lambda = lambda;
  return cfg;
}
}  // namespace

TEST_CASE("solve_lasso separable closed form") {
  const ComplexMatrix A = ComplexMatrix::Identity(2, 2);
  ComplexVector b(2);
  b << Complex(2, 0), Complex(0, 0);
  const LassoResult res = solve_lasso(A, b, cfg_with(1.0));
  CHECK(res.record.converged);
  CHECK(std::abs(res.x[0] - Complex(1.5, 0)) < 1e-6);
  CHECK(std::abs(res.x[1]) < 1e-8);

  const LassoResult zero = solve_lasso(A, ComplexVector::Zero(2), cfg_with(1.0));
  CHECK(zero.x.norm() < 1e-12);
}

TEST_CASE("solve_lasso matches a long-horizon ISTA oracle") {
  Rng rng(42);
  for (int inst = 0; inst < 3; ++inst) {
    const ComplexMatrix A = oracles::random_matrix(20, 40, rng);
    ComplexVector x_true = ComplexVector::Zero(40);
    for (int s = 0; s < 4; ++s) x_true[rng.integer(40)] = rng.complex_normal();
    const ComplexVector b = A * x_true + 0.05 * oracles::random_vector(20, rng);
    const double lambda = 0.8;

    const LassoResult admm = solve_lasso(A, b, cfg_with(lambda));
    const ComplexVector ista = oracles::ista_lasso(A, b, lambda, 100000);
    const double obj_admm = oracles::lasso_objective(A, b, admm.x, lambda);
    const double obj_ista = oracles::lasso_objective(A, b, ista, lambda);
    CHECK(obj_admm <= obj_ista * (1.0 + 1e-6));
  }
}

TEST_CASE("solve_lasso scaling covariance") {
  Rng rng(43);
  const ComplexMatrix A = oracles::random_matrix(10, 15, rng);
  const ComplexVector b = oracles::random_vector(10, rng);
  const double lambda = 0.4, c = 3.7;
  const LassoResult base = solve_lasso(A, b, cfg_with(lambda));
  const LassoResult scaled = solve_lasso(c * A, c * b, cfg_with(c * c * lambda));
  CHECK((base.x - scaled.x).norm() < 1e-5 * std::max(1.0, base.x.norm()));
}

TEST_CASE("solve_lasso recovers the least-squares solution as lambda -> 0") {
  Rng rng(44);
  const ComplexMatrix A = oracles::random_matrix(12, 12, rng);
  const ComplexVector b = oracles::random_vector(12, rng);
  const LassoResult res = solve_lasso(A, b, cfg_with(1e-10));
  const ComplexVector direct = A.fullPivLu().solve(b);
  CHECK((res.x - direct).norm() < 1e-6 * direct.norm());
}

TEST_CASE("solve_lasso sparsity is monotone in lambda") {
  Rng rng(45);
  const ComplexMatrix A = oracles::random_matrix(15, 30, rng);
  const ComplexVector b = oracles::random_vector(15, rng);
  int prev = 31;
  for (int i = 0; i < 10; ++i) {
    const double lambda = 0.05 * std::pow(2.2, i);
    const LassoResult res = solve_lasso(A, b, cfg_with(lambda));
    int nnz = 0;
    for (Eigen::Index n = 0; n < res.x.size(); ++n)
      if (std::abs(res.x[n]) > 1e-8) ++nnz;
    CHECK(nnz <= prev);
    prev = nnz;
  }
}

TEST_CASE("solve_lasso flags and input validation") {
  Rng rng(46);
  const ComplexMatrix A = oracles::random_matrix(10, 20, rng);
  const ComplexVector b = oracles::random_vector(10, rng);
  LassoConfig tight = cfg_with(0.3);
  tight.max_iter = 1;
  CHECK_FALSE(solve_lasso(A, b, tight).record.converged);

  ComplexVector bad = b;
  bad[0] = Complex(std::numeric_limits<double>::quiet_NaN(), 0);
  CHECK_THROWS_AS(solve_lasso(A, bad, cfg_with(0.3)), std::invalid_argument);
  CHECK_THROWS_AS(cfg_with(-1.0).validate(), std::invalid_argument);
}

TEST_CASE("build_sensing_matrix and reference_signal") {
  Rng rng(47);
  const int N = 8, K = 3;
  const auto alphabet = phase_alphabet(2);
  std::vector<ComplexVector> weights;
  for (int k = 0; k < K; ++k) weights.push_back(sample_weighting(N, rng, alphabet));
  const ComplexVector ones = ComplexVector::Ones(N);

  const ComplexMatrix F1 = build_sensing_matrix(weights, ones, ones);
  for (int k = 0; k < K; ++k) CHECK((F1.row(k).transpose() - weights[k]).norm() == 0.0);

  CHECK(reference_signal(ComplexMatrix::Zero(3, 5)).norm() == 0.0);
  ComplexMatrix single = ComplexMatrix::Ones(1, 4);
  CHECK(std::abs(reference_signal(single)[0] - Complex(4, 0)) < 1e-15);

  const ComplexVector h_tx = oracles::random_vector(N, rng);
  const ComplexVector h_rx = oracles::random_vector(N, rng);
  const ComplexMatrix F_h = build_sensing_matrix(weights, h_tx, h_rx);
  Rng rnoise(1);
  const MeasurementSet clean = observe_k(ones, weights, h_tx, h_rx, kInfSnr, rnoise);
  CHECK((reference_signal(F_h) - clean.y_vec()).norm() < 1e-12 * clean.y_vec().norm());
}

TEST_CASE("diagnose_full_csi on clean data") {
  Rng rng(48);
  const int N = 16;
  const ComplexVector h_tx = oracles::random_vector(N, rng);
  const ComplexVector h_rx = oracles::random_vector(N, rng);
  const auto alphabet = phase_alphabet(2);
  std::vector<ComplexVector> weights;
  for (int k = 0; k < N; ++k) weights.push_back(sample_weighting(N, rng, alphabet));

  // no faults: penalty drives the deviation to zero
  const MeasurementSet clean =
      observe_k(ComplexVector::Ones(N), weights, h_tx, h_rx, kInfSnr, rng);
  const DiagnosisResult res = diagnose_full_csi(clean, h_tx, h_rx, cfg_with(0.05));
  CHECK((res.mask - ComplexVector::Ones(N)).norm() < 1e-6);
  CHECK((res.mask - ComplexVector::Ones(N) - res.deviation.col(0)).norm() == 0.0);

  // single fault, K = N, tiny lambda: compare to the direct inverse
  ComplexVector m = ComplexVector::Ones(N);
  m[5] = Complex(0.3, 0.0);
  const MeasurementSet faulty = observe_k(m, weights, h_tx, h_rx, kInfSnr, rng);
  const DiagnosisResult rec = diagnose_full_csi(faulty, h_tx, h_rx, cfg_with(1e-8));
  const ComplexMatrix F_h = build_sensing_matrix(weights, h_tx, h_rx);
  const ComplexVector x_ls = F_h.fullPivLu().solve(faulty.y_vec() - reference_signal(F_h));
  CHECK(std::abs(rec.mask[5] - Complex(0.3, 0)) < 1e-3);
  CHECK((rec.deviation.col(0) - x_ls).norm() < 1e-3 * std::max(1.0, x_ls.norm()));
}

TEST_CASE("diagnose_full_csi support recovery at Table II scale") {
  const ArrayGeometry g{16, 16, 0.5};
  const int N = g.N();
  const int K = static_cast<int>(std::lround(0.3 * N));
  const double snr = std::pow(10.0, 30.0 / 10.0);
  const auto alphabet = phase_alphabet(2);
  int hits = 0;
  const int trials = 100;
  for (int t = 0; t < trials; ++t) {
    Rng rng(1000 + t);
    const PathSet tx = sample_paths(1, rng);
    const PathSet rx = sample_paths(1, rng, PathRole::Rx);
    const ComplexVector h_tx = channel_vector(tx, g);
    const ComplexVector h_rx = channel_vector(rx, g);
    const FailureMask mask = sample_failure_mask(N, 5, rng);
    std::vector<ComplexVector> weights;
    for (int k = 0; k < K; ++k) weights.push_back(sample_weighting(N, rng, alphabet));
    const MeasurementSet ms = observe_k(mask.m, weights, h_tx, h_rx, snr, rng);
    const DiagnosisResult res = diagnose_full_csi(ms, h_tx, h_rx, cfg_with(0.65 * K / snr));
    const auto got = threshold_faults(res.mask, 0.2);
    // th is the maximum tolerable failure intensity: every fault at or above
    // it must be flagged and no healthy element may be; faults below it are
    // indistinguishable from healthy at this tolerance.
    std::set<int> detectable;
    for (int n : mask.faulty_indices)
      if (std::abs(mask.m[n] - Complex(1, 0)) >= 0.2) detectable.insert(n);
    const bool all_found =
        std::includes(got.begin(), got.end(), detectable.begin(), detectable.end());
    const bool no_false_alarm = std::includes(mask.faulty_indices.begin(),
                                              mask.faulty_indices.end(), got.begin(), got.end());
    if (all_found && no_false_alarm) ++hits;
  }
  CHECK(hits >= 95);
}
