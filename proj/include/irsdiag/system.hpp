#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <vector>

#include "irsdiag/channel.hpp"
#include "irsdiag/rng.hpp"
#include "irsdiag/types.hpp"

namespace irsdiag {

/// Per-element multiplicative failure mask: exactly 1 for functioning
/// elements, eta * e^{j kappa} with eta in [0, 1) for faulty ones.
struct FailureMask {
  ComplexVector m;
  std::set<int> faulty_indices;
};

/// Table II weighting alphabet: 2-bit phases [1+1j, 1-1j, -1+1j, -1-1j]/sqrt(2).
inline std::vector<Complex> phase_alphabet(int bits = 2) {
  require(bits >= 1 && bits <= 8, "phase_alphabet: bits must be in [1, 8]");
  const int size = 1 << bits;
  std::vector<Complex> alphabet(size);
  for (int k = 0; k < size; ++k) {
    const double phase = 2.0 * M_PI * (k + 0.5) / size;
    alphabet[k] = Complex(std::cos(phase), std::sin(phase));
  }
  return alphabet;
}

/// K weighting vectors and the received symbols, one column of y per RX antenna.
struct MeasurementSet {
  std::vector<ComplexVector> weights;
  ComplexMatrix y;
  double snr_linear = kInfSnr;

  int K() const { return static_cast<int>(weights.size()); }
  ComplexVector y_vec() const { return y.col(0); }
};

inline FailureMask sample_failure_mask(int N, int n_faults, Rng& rng, double eta_min = 0.0,
                                       double eta_max = 1.0) {
  require(N >= 1, "sample_failure_mask: N must be positive");
  require(n_faults >= 0 && n_faults <= N, "sample_failure_mask: n_faults must be in [0, N]");
  require(0.0 <= eta_min && eta_min <= eta_max && eta_max <= 1.0,
          "sample_failure_mask: eta range must satisfy 0 <= min <= max <= 1");
  FailureMask mask;
  mask.m = ComplexVector::Ones(N);
  std::vector<int> indices(N);
  std::iota(indices.begin(), indices.end(), 0);
  for (int i = 0; i < n_faults; ++i) {  // partial Fisher-Yates
    const int j = i + static_cast<int>(rng.integer(N - i));
    std::swap(indices[i], indices[j]);
  }
  for (int i = 0; i < n_faults; ++i) {
    const int n = indices[i];
    const double eta = rng.uniform(eta_min, eta_max);
    const double kappa = rng.uniform(0.0, 2.0 * M_PI);
    mask.m[n] = eta * Complex(std::cos(kappa), std::sin(kappa));
    mask.faulty_indices.insert(n);
  }
  return mask;
}

inline ComplexVector sample_weighting(int N, Rng& rng, const std::vector<Complex>& alphabet) {
  require(N >= 1, "sample_weighting: N must be positive");
  require(!alphabet.empty(), "sample_weighting: alphabet is empty");
  for (const auto& s : alphabet)
    require(std::abs(std::abs(s) - 1.0) <= 1e-12, "sample_weighting: alphabet must be unit modulus");
  ComplexVector f(N);
  for (int n = 0; n < N; ++n) f[n] = alphabet[rng.integer(alphabet.size())];
  return f;
}

namespace detail {
inline Complex noise_sample(double snr_linear, Rng& rng) {
  // Draw unconditionally so noiseless and noisy runs consume the stream
  // identically (keeps paired trials aligned across SNR values).
  const Complex w = rng.complex_normal(1.0);
  return std::isinf(snr_linear) ? Complex(0.0, 0.0) : w / std::sqrt(snr_linear);
}
}  // namespace detail

/// One received symbol y = sum_n [h_RX o f o m o h_TX]_n + w, w ~ CN(0, 1/SNR).
inline Complex observe(const ComplexVector& mask, const ComplexVector& f,
                       const ComplexVector& h_tx, const ComplexVector& h_rx, double snr_linear,
                       Rng& rng) {
  const auto N = mask.size();
  require(f.size() == N && h_tx.size() == N && h_rx.size() == N, "observe: length mismatch");
  require(snr_linear > 0.0, "observe: SNR must be positive");
  const Complex signal = (h_rx.cwiseProduct(f).cwiseProduct(mask).cwiseProduct(h_tx)).sum();
  return signal + detail::noise_sample(snr_linear, rng);
}

/// K measurements with independent weighting vectors and noise.
inline MeasurementSet observe_k(const ComplexVector& mask, std::vector<ComplexVector> weights,
                                const ComplexVector& h_tx, const ComplexVector& h_rx,
                                double snr_linear, Rng& rng) {
  require(!weights.empty(), "observe_k: K must be positive");
  MeasurementSet ms;
  ms.snr_linear = snr_linear;
  ms.y.resize(static_cast<Eigen::Index>(weights.size()), 1);
  for (std::size_t k = 0; k < weights.size(); ++k)
    ms.y(static_cast<Eigen::Index>(k), 0) = observe(mask, weights[k], h_tx, h_rx, snr_linear, rng);
  ms.weights = std::move(weights);
  return ms;
}

/// MMV observation: column i measures the cascaded channel of RX antenna i.
/// Noise is i.i.d. across the matrix, drawn column by column so antenna 0
/// sees the same noise as the corresponding single-antenna run.
inline MeasurementSet observe_mmv(const ComplexVector& mask, std::vector<ComplexVector> weights,
                                  const ComplexMatrix& rx_cascaded, double snr_linear, Rng& rng) {
  require(!weights.empty(), "observe_mmv: K must be positive");
  const auto N = mask.size();
  require(rx_cascaded.rows() == N, "observe_mmv: channel dimension mismatch");
  const auto K = static_cast<Eigen::Index>(weights.size());
  MeasurementSet ms;
  ms.snr_linear = snr_linear;
  ms.y.resize(K, rx_cascaded.cols());
  for (Eigen::Index i = 0; i < rx_cascaded.cols(); ++i) {
    const ComplexVector hd = rx_cascaded.col(i).cwiseProduct(mask);
    for (Eigen::Index k = 0; k < K; ++k) {
      require(weights[k].size() == N, "observe_mmv: weight length mismatch");
      ms.y(k, i) = weights[k].cwiseProduct(hd).sum() + detail::noise_sample(snr_linear, rng);
    }
  }
  ms.weights = std::move(weights);
  return ms;
}

/// Faulty-element decision rule: all n with |m_hat[n] - 1| >= th.
inline std::set<int> threshold_faults(const ComplexVector& m_hat, double th) {
  require(th >= 0.0, "threshold_faults: threshold must be nonnegative");
  std::set<int> faults;
  for (Eigen::Index n = 0; n < m_hat.size(); ++n)
    if (std::abs(m_hat[n] - Complex(1.0, 0.0)) >= th) faults.insert(static_cast<int>(n));
  return faults;
}

/// m_hat = dev ./ chan + 1 with guarded division: entries where
/// |chan| < guard * max|chan| are treated as non-informative and map to 1.
inline ComplexVector guarded_ratio_mask(const ComplexVector& dev, const ComplexVector& chan,
                                        double guard = kDivisionGuard) {
  require(dev.size() == chan.size(), "guarded_ratio_mask: length mismatch");
  if (dev.size() == 0) return ComplexVector();
  const double floor = guard * chan.cwiseAbs().maxCoeff();
  ComplexVector m = ComplexVector::Ones(dev.size());
  for (Eigen::Index n = 0; n < dev.size(); ++n)
    if (std::abs(chan[n]) >= floor && std::abs(chan[n]) > 0.0) m[n] += dev[n] / chan[n];
  return m;
}

inline double nmse(const ComplexVector& m_true, const ComplexVector& m_hat) {
  require(m_true.size() == m_hat.size(), "nmse: length mismatch");
  const double denom = m_true.squaredNorm();
  require(denom > 0.0, "nmse: reference mask is zero");
  return (m_true - m_hat).squaredNorm() / denom;
}

}  // namespace irsdiag
