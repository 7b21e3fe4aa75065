#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "irsdiag/anm.hpp"
#include "irsdiag/channel.hpp"
#include "irsdiag/lasso.hpp"
#include "irsdiag/slr.hpp"
#include "irsdiag/system.hpp"

namespace irsdiag {

enum class Case { FullCsi, PartialCsi, NoCsi, NoCsiMmv };
enum class SolverKind { Auto, Lasso, Cslrmr, Anm };

inline std::string to_string(Case c) {
  switch (c) {
    case Case::FullCsi: return "full";
    case Case::PartialCsi: return "partial";
    case Case::NoCsi: return "none";
    case Case::NoCsiMmv: return "mmv";
  }
  return "?";
}

inline Case case_from_string(const std::string& s) {
  if (s == "full") return Case::FullCsi;
  if (s == "partial") return Case::PartialCsi;
  if (s == "none") return Case::NoCsi;
  if (s == "mmv") return Case::NoCsiMmv;
  throw std::invalid_argument("unknown case \"" + s + "\" (expected full|partial|none|mmv)");
}

inline SolverKind solver_from_string(const std::string& s) {
  if (s == "auto") return SolverKind::Auto;
  if (s == "lasso") return SolverKind::Lasso;
  if (s == "cslrmr") return SolverKind::Cslrmr;
  if (s == "anm") return SolverKind::Anm;
  throw std::invalid_argument("unknown solver \"" + s + "\" (expected auto|lasso|cslrmr|anm)");
}

/// One fully resolved simulation scenario. Regularization fields left as NaN
/// fall back to the Table II defaults, which depend on K and SNR.
struct ScenarioConfig {
  Case scenario = Case::FullCsi;
  SolverKind solver = SolverKind::Auto;
  int H = 16;
  int W = 16;
  double K = 0.3;  // values in (0, 1) are fractions of N
  double snr_db = 30.0;
  int n_faults = 5;
  int L_tx = 0;  // 0 picks the per-case convention
  int L_rx = 0;
  int N_rx = 1;
  std::uint64_t seed = 1;
  int trial = 0;
  double threshold = 0.2;
  int phase_bits = 2;
  double eta_min = 0.0;
  double eta_max = 1.0;
  double lambda1 = std::numeric_limits<double>::quiet_NaN();
  double lambda2 = std::numeric_limits<double>::quiet_NaN();
  double lambda3 = std::numeric_limits<double>::quiet_NaN();
  double lambda4 = std::numeric_limits<double>::quiet_NaN();
  double tau1 = std::numeric_limits<double>::quiet_NaN();
  double tau2 = std::numeric_limits<double>::quiet_NaN();
  double delta = std::numeric_limits<double>::quiet_NaN();
  double rho = 1.0;
  double tol = std::numeric_limits<double>::quiet_NaN();
  int max_iter = 0;

  ArrayGeometry geometry() const { return ArrayGeometry{H, W, 0.5}; }
  int N() const { return H * W; }
  int K_resolved() const {
    const double k = (K > 0.0 && K < 1.0) ? K * N() : K;
    return static_cast<int>(std::lround(k));
  }
  double snr_linear() const {
    return std::isinf(snr_db) ? kInfSnr : std::pow(10.0, snr_db / 10.0);
  }
  int L_tx_resolved() const {
    if (L_tx > 0) return L_tx;
    return scenario == Case::FullCsi || scenario == Case::PartialCsi ? default_partial_L() : 4;
  }
  int L_rx_resolved() const {
    if (L_rx > 0) return L_rx;
    if (scenario == Case::FullCsi || scenario == Case::PartialCsi) return 1;
    return 4;
  }

  double lambda1_resolved() const {
    return std::isnan(lambda1) ? 0.65 * K_resolved() / snr_linear() : lambda1;
  }
  double lambda2_resolved() const { return std::isnan(lambda2) ? 0.35 : lambda2; }
  double lambda3_resolved() const { return std::isnan(lambda3) ? 0.006 * K_resolved() : lambda3; }
  double lambda4_resolved() const {
    return std::isnan(lambda4) ? 0.006 * K_resolved() / N_rx : lambda4;
  }
  double tau1_resolved() const { return std::isnan(tau1) ? 0.004 * K_resolved() : tau1; }
  double tau2_resolved() const { return std::isnan(tau2) ? 0.004 * K_resolved() : tau2; }
  double delta_resolved() const {
    if (!std::isnan(delta)) return delta;
    const double snr = snr_linear();
    return std::isinf(snr) ? 0.0 : std::sqrt(K_resolved() / snr) * 1.1;
  }

  void validate() const {
    geometry().validate();
    require(K_resolved() >= 1, "config: K must resolve to at least one measurement");
    require(n_faults >= 0 && n_faults <= N(), "config: n_faults must be in [0, N]");
    require(N_rx >= 1, "config: N_RX must be positive");
    require(N_rx == 1 || scenario == Case::NoCsiMmv, "config: N_RX > 1 requires case mmv");
    require(snr_linear() > 0.0, "config: SNR must be positive");
    require(trial >= 0, "config: trial must be nonnegative");
    require(0.0 <= eta_min && eta_min <= eta_max && eta_max <= 1.0, "config: bad eta range");
    require(rho > 0.0, "config: rho must be positive");
  }

 private:
  int default_partial_L() const { return scenario == Case::FullCsi ? 1 : 4; }
};

struct SweepSpec {
  ScenarioConfig base;
  std::vector<std::pair<std::string, std::vector<double>>> axes;
  int trials = 100;
};

struct ResultRow {
  std::string case_name;
  int N = 0, H = 0, W = 0, K = 0;
  double snr_db = 0.0;
  int n_faults = 0, L_tx = 0, L_rx = 0, N_rx = 0, trial = 0;
  std::uint64_t seed = 0;
  double nmse = std::numeric_limits<double>::quiet_NaN();
  double support_f1 = std::numeric_limits<double>::quiet_NaN();
  double runtime_ms = 0.0;
  bool converged = false;
  int iterations = 0;
};

inline double support_f1(const std::set<int>& truth, const std::set<int>& detected) {
  if (truth.empty() && detected.empty()) return 1.0;
  int tp = 0;
  for (int n : detected)
    if (truth.count(n)) ++tp;
  const int fp = static_cast<int>(detected.size()) - tp;
  const int fn = static_cast<int>(truth.size()) - tp;
  return (2 * tp + fp + fn) == 0 ? 1.0 : 2.0 * tp / (2.0 * tp + fp + fn);
}

namespace detail {

inline std::uint64_t axis_bits(double v) {
  std::uint64_t bits;
  static_assert(sizeof(bits) == sizeof(v));
  std::memcpy(&bits, &v, sizeof(bits));
  return bits;
}

/// Substream seeds. The channel, mask, weighting, and noise streams depend
/// only on the parameters that shape their own draws, so trials stay paired
/// across solver choice, K, SNR, and antenna count.
struct TrialSeeds {
  std::uint64_t channel, mask, weights, noise;

  static TrialSeeds derive(const ScenarioConfig& cfg) {
    const std::uint64_t root = cfg.seed;
    auto chain = [&](std::string_view tag, std::initializer_list<std::uint64_t> vals) {
      std::uint64_t s = mix_seed(root, tag);
      s = mix_seed(s, static_cast<std::uint64_t>(cfg.trial));
      s = mix_seed(s, static_cast<std::uint64_t>(cfg.H));
      s = mix_seed(s, static_cast<std::uint64_t>(cfg.W));
      for (auto v : vals) s = mix_seed(s, v);
      return s;
    };
    TrialSeeds t;
    t.channel = chain("channel", {static_cast<std::uint64_t>(cfg.L_tx_resolved()),
                                  static_cast<std::uint64_t>(cfg.L_rx_resolved())});
    t.mask = chain("mask", {static_cast<std::uint64_t>(cfg.n_faults)});
    t.weights = chain("weights", {});
    t.noise = chain("noise", {});
    return t;
  }
};

inline std::uint64_t row_seed(const ScenarioConfig& cfg) {
  std::uint64_t s = mix_seed(cfg.seed, "trial");
  for (std::uint64_t v :
       {static_cast<std::uint64_t>(cfg.H), static_cast<std::uint64_t>(cfg.W),
        static_cast<std::uint64_t>(cfg.K_resolved()), axis_bits(cfg.snr_db),
        static_cast<std::uint64_t>(cfg.n_faults), static_cast<std::uint64_t>(cfg.L_tx_resolved()),
        static_cast<std::uint64_t>(cfg.L_rx_resolved()), static_cast<std::uint64_t>(cfg.N_rx),
        static_cast<std::uint64_t>(cfg.trial)})
    s = mix_seed(s, v);
  return s;
}

inline SolverKind solver_for(const ScenarioConfig& cfg) {
  if (cfg.solver != SolverKind::Auto) {
    const bool ok = (cfg.scenario == Case::FullCsi && cfg.solver == SolverKind::Lasso) ||
                    (cfg.scenario == Case::PartialCsi && cfg.solver == SolverKind::Cslrmr) ||
                    (cfg.scenario == Case::NoCsi &&
                     (cfg.solver == SolverKind::Anm || cfg.solver == SolverKind::Cslrmr)) ||
                    (cfg.scenario == Case::NoCsiMmv && cfg.solver == SolverKind::Anm);
    require(ok, "config: solver is incompatible with the selected case");
    return cfg.solver;
  }
  switch (cfg.scenario) {
    case Case::FullCsi: return SolverKind::Lasso;
    case Case::PartialCsi: return SolverKind::Cslrmr;
    default: return SolverKind::Anm;
  }
}

}  // namespace detail

/// Ground truth and raw solver output kept alongside the summary row.
struct TrialArtifacts {
  ResultRow row;
  FailureMask truth;
  DiagnosisResult diagnosis;
  MeasurementSet measurements;
  ComplexVector h_tx, h_rx;     // known-channel cases
  ComplexMatrix rx_cascaded;    // no-CSI cases, one column per RX antenna
};

/// Samples a scenario from its substream seeds, runs the case-matching
/// diagnostic, and reports NMSE plus thresholded-support F1. runtime_ms
/// covers the solver call only.
inline TrialArtifacts run_trial_detailed(const ScenarioConfig& cfg) {
  cfg.validate();
  const auto seeds = detail::TrialSeeds::derive(cfg);
  const ArrayGeometry g = cfg.geometry();
  const int N = cfg.N();
  const int K = cfg.K_resolved();
  const double snr = cfg.snr_linear();

  Rng channel_rng(seeds.channel);
  const PathSet tx = sample_paths(cfg.L_tx_resolved(), channel_rng, PathRole::Tx);
  const PathSet rx = sample_paths(cfg.L_rx_resolved(), channel_rng, PathRole::Rx);
  const std::vector<double> rx_aoas = sample_rx_aoas(cfg.L_rx_resolved(), channel_rng);

  Rng mask_rng(seeds.mask);
  FailureMask mask = sample_failure_mask(N, cfg.n_faults, mask_rng, cfg.eta_min, cfg.eta_max);

  Rng weights_rng(seeds.weights);
  const auto alphabet = phase_alphabet(cfg.phase_bits);
  std::vector<ComplexVector> weights;
  weights.reserve(K);
  for (int k = 0; k < K; ++k) weights.push_back(sample_weighting(N, weights_rng, alphabet));

  Rng noise_rng(seeds.noise);
  TrialArtifacts art;
  art.truth = mask;

  const SolverKind kind = detail::solver_for(cfg);
  using Clock = std::chrono::steady_clock;
  Clock::time_point t0;

  switch (cfg.scenario) {
    case Case::FullCsi: {
      art.h_tx = channel_vector(tx, g);
      art.h_rx = channel_vector(rx, g);
      art.measurements = observe_k(mask.m, weights, art.h_tx, art.h_rx, snr, noise_rng);
      LassoConfig lc;
      lc.lambda = cfg.lambda1_resolved();
      lc.rho = cfg.rho;
      if (cfg.max_iter > 0) lc.max_iter = cfg.max_iter;
      if (!std::isnan(cfg.tol)) lc.tol_primal = lc.tol_dual = cfg.tol;
      t0 = Clock::now();
      art.diagnosis = diagnose_full_csi(art.measurements, art.h_tx, art.h_rx, lc);
      break;
    }
    case Case::PartialCsi: {
      art.h_tx = channel_vector(tx, g);
      art.h_rx = channel_vector(rx, g);
      art.measurements = observe_k(mask.m, weights, art.h_tx, art.h_rx, snr, noise_rng);
      SlrConfig sc;
      sc.rho = cfg.rho;
      if (cfg.max_iter > 0) sc.max_iter = cfg.max_iter;
      if (!std::isnan(cfg.tol)) sc.tol = cfg.tol;
      t0 = Clock::now();
      art.diagnosis = diagnose_partial_csi(art.measurements, art.h_rx, g, cfg.lambda2_resolved(),
                                           cfg.delta_resolved(), sc);
      break;
    }
    case Case::NoCsi:
    case Case::NoCsiMmv: {
      const int n_rx = cfg.scenario == Case::NoCsi ? 1 : cfg.N_rx;
      art.rx_cascaded = mmv_channels(tx, rx, rx_aoas, n_rx, g);
      art.measurements = observe_mmv(mask.m, weights, art.rx_cascaded, snr, noise_rng);
      if (kind == SolverKind::Cslrmr) {
        // cSLRMR applied without CSI: the whole cascaded channel matrix is
        // the (no longer low-rank) unknown, as in the robustness comparison.
        SlrConfig sc;
        sc.rho = cfg.rho;
        if (cfg.max_iter > 0) sc.max_iter = cfg.max_iter;
        if (!std::isnan(cfg.tol)) sc.tol = cfg.tol;
        const ComplexMatrix A = build_flat_operator(weights, ComplexVector::Ones(N), g);
        t0 = Clock::now();
        const SlrResult slr = solve_cslrmr(art.measurements.y_vec(), A, g,
                                           cfg.lambda2_resolved(), cfg.delta_resolved(), sc);
        art.diagnosis.channel = Eigen::Map<const ComplexVector>(slr.H_hat.data(), N);
        art.diagnosis.deviation = Eigen::Map<const ComplexVector>(slr.D_hat.data(), N);
        art.diagnosis.mask =
            guarded_ratio_mask(art.diagnosis.deviation.col(0), art.diagnosis.channel.col(0));
        art.diagnosis.convergence = slr.record;
      } else {
        AnmConfig ac;
        ac.rho = cfg.rho;
        if (cfg.max_iter > 0) ac.max_iter = cfg.max_iter;
        if (!std::isnan(cfg.tol)) ac.tol = cfg.tol;
        if (cfg.scenario == Case::NoCsi) {
          ac.tau = cfg.tau1_resolved();
          ac.lambda_sparse = cfg.lambda3_resolved();
          t0 = Clock::now();
          art.diagnosis = diagnose_no_csi(art.measurements, g, ac);
        } else {
          ac.tau = cfg.tau2_resolved();
          ac.lambda_sparse = cfg.lambda4_resolved();
          t0 = Clock::now();
          art.diagnosis = diagnose_no_csi_mmv(art.measurements, g, ac);
        }
      }
      break;
    }
  }
  art.diagnosis.solve_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  art.diagnosis.nmse = nmse(mask.m, art.diagnosis.mask);

  ResultRow& row = art.row;
  row.case_name = to_string(cfg.scenario);
  row.N = N;
  row.H = cfg.H;
  row.W = cfg.W;
  row.K = K;
  row.snr_db = cfg.snr_db;
  row.n_faults = cfg.n_faults;
  row.L_tx = cfg.L_tx_resolved();
  row.L_rx = cfg.L_rx_resolved();
  row.N_rx = cfg.scenario == Case::NoCsiMmv ? cfg.N_rx : 1;
  row.trial = cfg.trial;
  row.seed = detail::row_seed(cfg);
  row.nmse = art.diagnosis.nmse;
  row.support_f1 = support_f1(mask.faulty_indices,
                              threshold_faults(art.diagnosis.mask, cfg.threshold));
  row.runtime_ms = art.diagnosis.solve_ms;
  row.converged = art.diagnosis.convergence.converged;
  row.iterations = art.diagnosis.convergence.iterations;
  return art;
}

inline ResultRow run_trial(const ScenarioConfig& cfg) { return run_trial_detailed(cfg).row; }

inline void apply_axis(ScenarioConfig& cfg, const std::string& name, double value) {
  if (name == "K")
    cfg.K = value;
  else if (name == "snr_db")
    cfg.snr_db = value;
  else if (name == "n_faults")
    cfg.n_faults = static_cast<int>(std::lround(value));
  else if (name == "L_TX")
    cfg.L_tx = static_cast<int>(std::lround(value));
  else if (name == "L_RX")
    cfg.L_rx = static_cast<int>(std::lround(value));
  else if (name == "N_RX")
    cfg.N_rx = static_cast<int>(std::lround(value));
  else
    throw std::invalid_argument("config: unknown axis \"" + name + "\"");
}

inline std::vector<ScenarioConfig> expand_grid(const SweepSpec& spec) {
  std::vector<ScenarioConfig> grid{spec.base};
  for (const auto& [name, values] : spec.axes) {
    require(!values.empty(), "config: axis \"" + name + "\" has no values");
    std::vector<ScenarioConfig> next;
    next.reserve(grid.size() * values.size());
    for (const auto& cfg : grid)
      for (double v : values) {
        ScenarioConfig c = cfg;
        apply_axis(c, name, v);
        next.push_back(c);
      }
    grid = std::move(next);
  }
  return grid;
}

/// Cartesian product of axes x trials on a worker pool. Rows land in
/// deterministic (grid-major, trial-minor) order regardless of parallelism;
/// per-trial failures are recorded in the row rather than thrown.
inline std::vector<ResultRow> run_sweep(const SweepSpec& spec, int parallelism = 1) {
  require(spec.trials >= 1, "config: trials must be positive");
  const std::vector<ScenarioConfig> grid = expand_grid(spec);
  const std::size_t total = grid.size() * static_cast<std::size_t>(spec.trials);
  std::vector<ResultRow> rows(total);
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, parallelism);

  auto work = [&] {
    for (std::size_t j = next.fetch_add(1); j < total; j = next.fetch_add(1)) {
      ScenarioConfig cfg = grid[j / spec.trials];
      cfg.trial = static_cast<int>(j % spec.trials);
      try {
        rows[j] = run_trial(cfg);
      } catch (const std::exception&) {
        ResultRow bad;
        bad.case_name = to_string(cfg.scenario);
        bad.N = cfg.N();
        bad.H = cfg.H;
        bad.W = cfg.W;
        bad.K = cfg.K_resolved();
        bad.snr_db = cfg.snr_db;
        bad.n_faults = cfg.n_faults;
        bad.L_tx = cfg.L_tx_resolved();
        bad.L_rx = cfg.L_rx_resolved();
        bad.N_rx = cfg.N_rx;
        bad.trial = cfg.trial;
        bad.seed = detail::row_seed(cfg);
        rows[j] = bad;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return rows;
}

enum class ResultFormat { Tabular, Records };

inline ResultFormat format_from_string(const std::string& s) {
  if (s == "tabular") return ResultFormat::Tabular;
  if (s == "records") return ResultFormat::Records;
  throw std::invalid_argument("unknown format \"" + s + "\" (expected tabular|records)");
}

namespace detail {

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

constexpr const char* kResultHeader =
    "case,N,H,W,K,snr_db,n_faults,L_TX,L_RX,N_RX,trial,seed,nmse,support_f1,runtime_ms,"
    "converged,iterations";

inline std::string row_to_csv(const ResultRow& r) {
  std::ostringstream os;
  os << r.case_name << ',' << r.N << ',' << r.H << ',' << r.W << ',' << r.K << ','
     << fmt_double(r.snr_db) << ',' << r.n_faults << ',' << r.L_tx << ',' << r.L_rx << ','
     << r.N_rx << ',' << r.trial << ',' << r.seed << ',' << fmt_double(r.nmse) << ','
     << fmt_double(r.support_f1) << ',' << fmt_double(r.runtime_ms) << ',' << (r.converged ? 1 : 0)
     << ',' << r.iterations;
  return os.str();
}

}  // namespace detail

/// Writes rows as delimited text (header + one line per row) or as one JSON
/// record per line. Refuses to touch an existing file unless append is set.
inline void persist_results(const std::vector<ResultRow>& rows, const std::string& path,
                            ResultFormat format, bool append = false) {
  if (!append) {
    std::ifstream probe(path);
    if (probe.good())
      throw std::runtime_error("results file already exists (pass append to extend): " + path);
  }
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open results file for writing: " + path);
  const bool fresh = !append || out.tellp() == std::ofstream::pos_type(0);
  if (format == ResultFormat::Tabular) {
    if (fresh) out << detail::kResultHeader << '\n';
    for (const auto& r : rows) out << detail::row_to_csv(r) << '\n';
  } else {
    for (const auto& r : rows) {
      out << "{\"case\":\"" << r.case_name << "\",\"N\":" << r.N << ",\"H\":" << r.H
          << ",\"W\":" << r.W << ",\"K\":" << r.K << ",\"snr_db\":" << detail::fmt_double(r.snr_db)
          << ",\"n_faults\":" << r.n_faults << ",\"L_TX\":" << r.L_tx << ",\"L_RX\":" << r.L_rx
          << ",\"N_RX\":" << r.N_rx << ",\"trial\":" << r.trial << ",\"seed\":" << r.seed
          << ",\"nmse\":" << detail::fmt_double(r.nmse)
          << ",\"support_f1\":" << detail::fmt_double(r.support_f1)
          << ",\"runtime_ms\":" << detail::fmt_double(r.runtime_ms)
          << ",\"converged\":" << (r.converged ? "true" : "false")
          << ",\"iterations\":" << r.iterations << "}\n";
    }
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace irsdiag
