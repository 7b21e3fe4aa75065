#pragma once

#include <cmath>
#include <vector>

#include "irsdiag/rng.hpp"
#include "irsdiag/types.hpp"

namespace irsdiag {

/// Uniform planar array: H x W elements, spacing d normalized by wavelength.
struct ArrayGeometry {
  int H = 16;
  int W = 16;
  double d = 0.5;

  int N() const { return H * W; }
  void validate() const { require(H >= 1 && W >= 1, "ArrayGeometry: H, W must be positive"); }
};

struct PathParams {
  Complex gain;      // alpha
  double elevation;  // theta (radians)
  double azimuth;    // phi (radians)
};

enum class PathRole { Tx, Rx };

struct PathSet {
  std::vector<PathParams> paths;
  PathRole role = PathRole::Tx;
};

/// One equivalent sub-path of the cascaded channel: 2D spatial frequency
/// g = (g_W, g_H), each wrapped into [-1, 1).
struct CascadedPath {
  Complex gain;
  double g_w;
  double g_h;
};

inline double wrap_frequency(double g) { return g - 2.0 * std::floor((g + 1.0) / 2.0); }

namespace detail {
inline ComplexVector phase_ramp(int n, double freq, double d) {
  ComplexVector a(n);
  for (int i = 0; i < n; ++i) {
    const double phase = 2.0 * M_PI * d * i * freq;
    a[i] = Complex(std::cos(phase), std::sin(phase));
  }
  return a;
}
}  // namespace detail

inline ComplexVector steering_h(double theta, double phi, const ArrayGeometry& g) {
  g.validate();
  return detail::phase_ramp(g.H, std::sin(theta) * std::sin(phi), g.d);
}

inline ComplexVector steering_w(double theta, double phi, const ArrayGeometry& g) {
  g.validate();
  return detail::phase_ramp(g.W, std::sin(theta) * std::cos(phi), g.d);
}

/// a(g) = a_W(g_W) (x) a_H(g_H); index n = j*H + i matches vec() of the
/// H x W array response, H running fastest.
inline ComplexVector atom(double g_w, double g_h, const ArrayGeometry& g) {
  g.validate();
  const ComplexVector aw = detail::phase_ramp(g.W, g_w, g.d);
  const ComplexVector ah = detail::phase_ramp(g.H, g_h, g.d);
  ComplexVector out(g.N());
  for (int j = 0; j < g.W; ++j)
    for (int i = 0; i < g.H; ++i) out[j * g.H + i] = aw[j] * ah[i];
  return out;
}

/// Clustered channel vector h = sum_l alpha_l (a_W (x) a_H).
inline ComplexVector channel_vector(const PathSet& paths, const ArrayGeometry& g) {
  g.validate();
  require(!paths.paths.empty(), "channel_vector: path set is empty");
  ComplexVector h = ComplexVector::Zero(g.N());
  for (const auto& p : paths.paths) {
    const ComplexVector aw = steering_w(p.elevation, p.azimuth, g);
    const ComplexVector ah = steering_h(p.elevation, p.azimuth, g);
    for (int j = 0; j < g.W; ++j)
      for (int i = 0; i < g.H; ++i) h[j * g.H + i] += p.gain * aw[j] * ah[i];
  }
  return h;
}

/// Equivalent sub-paths of h_TX o h_RX: gains multiply, frequencies add.
inline std::vector<CascadedPath> cascaded_paths(const PathSet& tx, const PathSet& rx) {
  std::vector<CascadedPath> out;
  out.reserve(tx.paths.size() * rx.paths.size());
  for (const auto& t : tx.paths) {
    const double fw_t = std::sin(t.elevation) * std::cos(t.azimuth);
    const double fh_t = std::sin(t.elevation) * std::sin(t.azimuth);
    for (const auto& r : rx.paths) {
      CascadedPath c;
      c.gain = t.gain * r.gain;
      c.g_w = wrap_frequency(fw_t + std::sin(r.elevation) * std::cos(r.azimuth));
      c.g_h = wrap_frequency(fh_t + std::sin(r.elevation) * std::sin(r.azimuth));
      out.push_back(c);
    }
  }
  return out;
}

inline ComplexVector cascaded_channel(const ComplexVector& h_tx, const ComplexVector& h_rx) {
  require(h_tx.size() == h_rx.size(), "cascaded_channel: length mismatch");
  return h_tx.cwiseProduct(h_rx);
}

/// ULA response of the multi-antenna RX, d = 1/2.
inline ComplexVector rx_ula_steering(double theta, int n_rx) {
  require(n_rx >= 1, "rx_ula_steering: N_RX must be positive");
  return detail::phase_ramp(n_rx, std::sin(theta), 0.5);
}

/// L sub-paths with gains ~ CN(0, 1/L) and angles ~ U(0, 2pi).
inline PathSet sample_paths(int L, Rng& rng, PathRole role = PathRole::Tx) {
  require(L >= 1, "sample_paths: L must be positive");
  PathSet set;
  set.role = role;
  set.paths.reserve(L);
  for (int l = 0; l < L; ++l) {
    PathParams p;
    p.gain = rng.complex_normal(1.0 / L);
    p.elevation = rng.uniform(0.0, 2.0 * M_PI);
    p.azimuth = rng.uniform(0.0, 2.0 * M_PI);
    set.paths.push_back(p);
  }
  return set;
}

inline std::vector<double> sample_rx_aoas(int L, Rng& rng) {
  require(L >= 1, "sample_rx_aoas: L must be positive");
  std::vector<double> aoas(L);
  for (auto& a : aoas) a = rng.uniform(0.0, 2.0 * M_PI);
  return aoas;
}

/// Per-antenna cascaded channels, one column per RX antenna. Sub-path gains
/// are shared across antennas; antenna i applies the i-th ULA phase of each
/// RX sub-path, so column 0 equals the single-antenna cascaded channel.
inline ComplexMatrix mmv_channels(const PathSet& tx, const PathSet& rx,
                                  const std::vector<double>& rx_aoas, int n_rx,
                                  const ArrayGeometry& g) {
  require(rx_aoas.size() == rx.paths.size(), "mmv_channels: one AoA per RX sub-path required");
  require(n_rx >= 1, "mmv_channels: N_RX must be positive");
  const ComplexVector h_tx = channel_vector(tx, g);
  ComplexMatrix H = ComplexMatrix::Zero(g.N(), n_rx);
  for (std::size_t l = 0; l < rx.paths.size(); ++l) {
    const auto& p = rx.paths[l];
    ComplexVector k(g.N());
    const ComplexVector aw = steering_w(p.elevation, p.azimuth, g);
    const ComplexVector ah = steering_h(p.elevation, p.azimuth, g);
    for (int j = 0; j < g.W; ++j)
      for (int i = 0; i < g.H; ++i) k[j * g.H + i] = aw[j] * ah[i];
    const ComplexVector ula = rx_ula_steering(rx_aoas[l], n_rx);
    for (int i = 0; i < n_rx; ++i)
      H.col(i) += (p.gain * ula[i]) * h_tx.cwiseProduct(k);
  }
  return H;
}

}  // namespace irsdiag
