#pragma once

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "irsdiag/harness.hpp"

namespace irsdiag {

/// Flat config keys, all optional. An empty file yields the Table II
/// defaults. Unknown keys are rejected by name.
inline const std::set<std::string>& known_config_keys() {
  static const std::set<std::string> keys = {
      "case",     "solver",  "H",       "W",       "K",       "snr_db",  "n_faults",
      "L_TX",     "L_RX",    "N_RX",    "seed",    "trials",  "threshold",
      "phase_bits", "eta_min", "eta_max", "lambda1", "lambda2", "lambda3", "lambda4",
      "tau1",     "tau2",    "delta",   "rho",     "tol",     "max_iter", "axes"};
  return keys;
}

namespace detail {

inline double json_number(const nlohmann::json& v, const std::string& key) {
  if (v.is_string() && v.get<std::string>() == "inf") return kInfSnr;
  if (!v.is_number()) throw std::invalid_argument("config: key \"" + key + "\" must be a number");
  return v.get<double>();
}

inline int json_int(const nlohmann::json& v, const std::string& key) {
  if (!v.is_number_integer())
    throw std::invalid_argument("config: key \"" + key + "\" must be an integer");
  return v.get<int>();
}

}  // namespace detail

inline SweepSpec parse_config_text(const std::string& text) {
  SweepSpec spec;
  std::string trimmed;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) trimmed.push_back(c);
  if (trimmed.empty()) return spec;  // empty file: defaults

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");

  for (const auto& [key, value] : doc.items()) {
    if (!known_config_keys().count(key))
      throw std::invalid_argument("config: unknown key \"" + key + "\"");
    ScenarioConfig& b = spec.base;
    if (key == "case")
      b.scenario = case_from_string(value.get<std::string>());
    else if (key == "solver")
      b.solver = solver_from_string(value.get<std::string>());
    else if (key == "H")
      b.H = detail::json_int(value, key);
    else if (key == "W")
      b.W = detail::json_int(value, key);
    else if (key == "K")
      b.K = detail::json_number(value, key);
    else if (key == "snr_db")
      b.snr_db = detail::json_number(value, key);
    else if (key == "n_faults")
      b.n_faults = detail::json_int(value, key);
    else if (key == "L_TX")
      b.L_tx = detail::json_int(value, key);
    else if (key == "L_RX")
      b.L_rx = detail::json_int(value, key);
    else if (key == "N_RX")
      b.N_rx = detail::json_int(value, key);
    else if (key == "seed")
      b.seed = value.get<std::uint64_t>();
    else if (key == "trials")
      spec.trials = detail::json_int(value, key);
    else if (key == "threshold")
      b.threshold = detail::json_number(value, key);
    else if (key == "phase_bits")
      b.phase_bits = detail::json_int(value, key);
    else if (key == "eta_min")
      b.eta_min = detail::json_number(value, key);
    else if (key == "eta_max")
      b.eta_max = detail::json_number(value, key);
    else if (key == "lambda1")
      b.lambda1 = detail::json_number(value, key);
    else if (key == "lambda2")
      b.lambda2 = detail::json_number(value, key);
    else if (key == "lambda3")
      b.lambda3 = detail::json_number(value, key);
    else if (key == "lambda4")
      b.lambda4 = detail::json_number(value, key);
    else if (key == "tau1")
      b.tau1 = detail::json_number(value, key);
    else if (key == "tau2")
      b.tau2 = detail::json_number(value, key);
    else if (key == "delta")
      b.delta = detail::json_number(value, key);
    else if (key == "rho")
      b.rho = detail::json_number(value, key);
    else if (key == "tol")
      b.tol = detail::json_number(value, key);
    else if (key == "max_iter")
      b.max_iter = detail::json_int(value, key);
    else if (key == "axes") {
      if (!value.is_object())
        throw std::invalid_argument("config: \"axes\" must map axis names to value lists");
      for (const auto& [axis, list] : value.items()) {
        ScenarioConfig probe = spec.base;
        apply_axis(probe, axis, 0.0);  // rejects unknown axis names
        if (!list.is_array() || list.empty())
          throw std::invalid_argument("config: axis \"" + axis + "\" must be a nonempty array");
        std::vector<double> values;
        for (const auto& v : list) values.push_back(detail::json_number(v, axis));
        spec.axes.emplace_back(axis, std::move(values));
      }
    }
  }
  require(spec.trials >= 1, "config: trials must be positive");
  return spec;
}

inline SweepSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str());
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(std::string(e.what()) + " [" + path + "]");
  }
}

/// Reads back a results file written by persist_results (either format).
inline std::vector<ResultRow> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results file: " + path);
  std::vector<ResultRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '{') {
      const nlohmann::json j = nlohmann::json::parse(line);
      ResultRow r;
      r.case_name = j.at("case").get<std::string>();
      r.N = j.at("N");
      r.H = j.at("H");
      r.W = j.at("W");
      r.K = j.at("K");
      r.snr_db = j.at("snr_db");
      r.n_faults = j.at("n_faults");
      r.L_tx = j.at("L_TX");
      r.L_rx = j.at("L_RX");
      r.N_rx = j.at("N_RX");
      r.trial = j.at("trial");
      r.seed = j.at("seed");
      r.nmse = j.at("nmse");
      r.support_f1 = j.at("support_f1");
      r.runtime_ms = j.at("runtime_ms");
      r.converged = j.at("converged");
      r.iterations = j.at("iterations");
      rows.push_back(std::move(r));
      continue;
    }
    if (first && line.rfind("case,", 0) == 0) {
      first = false;
      continue;
    }
    first = false;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) f.push_back(tok);
    if (f.size() != 17) throw std::runtime_error("results: malformed row: " + line);
    ResultRow r;
    r.case_name = f[0];
    r.N = std::stoi(f[1]);
    r.H = std::stoi(f[2]);
    r.W = std::stoi(f[3]);
    r.K = std::stoi(f[4]);
    r.snr_db = std::stod(f[5]);
    r.n_faults = std::stoi(f[6]);
    r.L_tx = std::stoi(f[7]);
    r.L_rx = std::stoi(f[8]);
    r.N_rx = std::stoi(f[9]);
    r.trial = std::stoi(f[10]);
    r.seed = std::stoull(f[11]);
    r.nmse = std::stod(f[12]);
    r.support_f1 = std::stod(f[13]);
    r.runtime_ms = std::stod(f[14]);
    r.converged = f[15] == "1";
    r.iterations = std::stoi(f[16]);
    rows.push_back(std::move(r));
  }
  return rows;
}

struct ValidationCheck {
  std::string name;
  bool passed = false;
  double ms = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

/// Test-injection hooks for the validator itself.
struct ValidateOptions {
  std::function<RealVector(int, int)> psi_override;
};

/// Fast self-checks of the numerical core: adjoint vs explicit Kronecker
/// traces, Psi multiplicities, prox closed forms, PSD projection, the two
/// channel-model forms, and SMV/MMV degeneracy.
inline ValidationReport validate_suite(const ValidateOptions& opts = {}) {
  ValidationReport report;
  auto run = [&report](const std::string& name, const std::function<bool(std::string&)>& fn) {
    using Clock = std::chrono::steady_clock;
    ValidationCheck check;
    check.name = name;
    std::string detail;
    const auto t0 = Clock::now();
    try {
      check.passed = fn(detail);
    } catch (const std::exception& e) {
      check.passed = false;
      detail = e.what();
    }
    check.ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    check.detail = detail;
    report.checks.push_back(check);
  };

  run("toeplitz-adjoint-vs-kron", [](std::string& detail) {
    const int H = 3, W = 3, N = H * W;
    Rng rng(101);
    ComplexMatrix Q(N, N);
    for (int j = 0; j < N; ++j)
      for (int i = 0; i < N; ++i) Q(i, j) = rng.complex_normal();
    const ComplexVector fast = toeplitz_adjoint(Q, H, W);
    // explicit Theta_k1 (x) Theta_k2 trace route
    ComplexVector ref(ToeplitzVector::length(H, W));
    Eigen::Index k = 0;
    for (const auto& [k1, k2] : halfspace_indices(H, W)) {
      ComplexMatrix kronmat = ComplexMatrix::Zero(N, N);
      for (int I = 0; I < H; ++I)
        for (int r = 0; r < W; ++r) {
          const int J = I + k1, c = r + k2;
          if (J < H && c >= 0 && c < W) kronmat(I * W + r, J * W + c) = 1.0;
        }
      ref[k++] = (kronmat * Q).trace();
    }
    const double err = (fast - ref).norm();
    detail = "max deviation " + detail::fmt_double(err);
    return err < 1e-10;
  });

  run("psi-multiplicity", [&opts](std::string& detail) {
    const int H = 3, W = 2;
    const RealVector psi = opts.psi_override ? opts.psi_override(H, W) : psi_matrix(H, W);
    const auto n_u = ToeplitzVector::length(H, W);
    if (psi.size() != n_u) {
      detail = "wrong length";
      return false;
    }
    double worst = 0.0;
    for (Eigen::Index k = 0; k < n_u; ++k) {
      ComplexVector e = ComplexVector::Zero(n_u);
      e[k] = Complex(1, 0);
      const ComplexVector back = toeplitz_adjoint(twofold_toeplitz(ToeplitzVector(e, H, W)), H, W);
      worst = std::max(worst, std::abs(back[k].real() - psi[k]));
    }
    detail = "max deviation " + detail::fmt_double(worst);
    return worst < 1e-10;
  });

  run("prox-closed-forms", [](std::string& detail) {
    bool ok = std::abs(soft_threshold(Complex(3, 4), 1.0) - Complex(2.4, 3.2)) < 1e-12;
    ok = ok && std::abs(soft_threshold(Complex(1, 1), 2.0)) == 0.0;
    ComplexMatrix row(1, 2);
    row << Complex(3, 0), Complex(4, 0);
    ok = ok && (row_group_shrink(row, 1.0) - 0.8 * row).norm() < 1e-12;
    Rng rng(102);
    ComplexVector u(3), v(2);
    for (int i = 0; i < 3; ++i) u[i] = rng.complex_normal();
    for (int i = 0; i < 2; ++i) v[i] = rng.complex_normal();
    u.normalize();
    v.normalize();
    ok = ok && (singular_value_threshold(5.0 * u * v.adjoint(), 2.0) - 3.0 * u * v.adjoint())
                       .norm() < 1e-10;
    detail = ok ? "soft/svt/row shrink exact" : "closed form mismatch";
    return ok;
  });

  run("psd-projection", [](std::string& detail) {
    Rng rng(103);
    ComplexMatrix A(5, 5);
    for (int j = 0; j < 5; ++j)
      for (int i = 0; i < 5; ++i) A(i, j) = rng.complex_normal();
    const ComplexMatrix G = 0.5 * (A + A.adjoint());
    const ComplexMatrix P = psd_project(G);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(P);
    bool ok = es.eigenvalues()(0) >= -1e-10;
    ok = ok && (psd_project(P) - P).norm() < 1e-10 * std::max(1.0, P.norm());
    for (int t = 0; t < 10 && ok; ++t) {
      ComplexMatrix B(5, 5);
      for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i) B(i, j) = rng.complex_normal();
      const ComplexMatrix Z = B * B.adjoint();
      ok = ((G - P).adjoint() * (Z - P)).trace().real() <= 1e-10 * std::max(1.0, G.norm() * Z.norm());
    }
    detail = "clamp + idempotence + certificate";
    return ok;
  });

  run("channel-eq5-forms", [](std::string& detail) {
    Rng rng(104);
    const ArrayGeometry g{4, 5, 0.5};
    PathSet set;
    for (int l = 0; l < 3; ++l)
      set.paths.push_back(
          {rng.complex_normal(), rng.uniform(0, 2 * M_PI), rng.uniform(0, 2 * M_PI)});
    const ComplexVector h = channel_vector(set, g);
    ComplexMatrix Hm = ComplexMatrix::Zero(g.H, g.W);
    for (const auto& p : set.paths)
      Hm += p.gain * steering_h(p.elevation, p.azimuth, g) *
            steering_w(p.elevation, p.azimuth, g).transpose();
    const double err =
        (h - Eigen::Map<const ComplexVector>(Hm.data(), g.N())).norm() / Hm.norm();
    detail = "relative deviation " + detail::fmt_double(err);
    return err < 1e-12;
  });

  run("smv-mmv-equivalence", [](std::string& detail) {
    Rng rng(105);
    const ArrayGeometry g{3, 3, 0.5};
    const int K = 7;
    const auto alphabet = phase_alphabet(2);
    std::vector<ComplexVector> weights;
    for (int k = 0; k < K; ++k) weights.push_back(sample_weighting(g.N(), rng, alphabet));
    ComplexVector h = ComplexVector::Zero(g.N());
    for (int l = 0; l < 2; ++l)
      h += rng.complex_normal() * atom(rng.uniform(-1, 1), rng.uniform(-1, 1), g);
    MeasurementSet ms;
    ms.y.resize(K, 1);
    for (int k = 0; k < K; ++k) ms.y(k, 0) = weights[k].cwiseProduct(h).sum();
    ms.weights = weights;
    AnmConfig cfg;
    cfg.tau = 0.004 * K;
    cfg.lambda_sparse = 0.006 * K;
    cfg.max_iter = 40;
    cfg.tol = 1e-14;
    const AnmResult a = solve_anm_smv(ms, g, cfg);
    const AnmResult b = solve_anm_mmv(ms, g, cfg);
    const double err = (a.state.H - b.state.H).norm() + (a.state.D - b.state.D).norm() +
                       (a.state.Z - b.state.Z).norm();
    detail = "iterate deviation " + detail::fmt_double(err);
    return err <= 1e-10;
  });

  return report;
}

}  // namespace irsdiag
