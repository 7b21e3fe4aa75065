// Command-line front end: simulate measurement sets, run single diagnoses,
// execute Monte-Carlo sweeps, and run the built-in validation suite.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

#include "irsdiag/config.hpp"

namespace {

using namespace irsdiag;

nlohmann::json complex_to_json(const Complex& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

nlohmann::json vector_to_json(const ComplexVector& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(complex_to_json(v[i]));
  return arr;
}

nlohmann::json matrix_to_json(const ComplexMatrix& m) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index j = 0; j < m.cols(); ++j) arr.push_back(vector_to_json(m.col(j)));
  return arr;
}

struct CommonFlags {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> case_name;

  SweepSpec load() const {
    SweepSpec spec = config_path.empty() ? SweepSpec{} : load_config(config_path);
    if (seed) spec.base.seed = *seed;
    if (case_name) spec.base.scenario = case_from_string(*case_name);
    return spec;
  }
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config_path, "JSON config file (all keys optional)");
  cmd->add_option("--seed", flags.seed, "Override the master seed");
  cmd->add_option("--case", flags.case_name, "Override the case: full|partial|none|mmv");
}

int cmd_simulate(const CommonFlags& flags, const std::string& out_path) {
  const SweepSpec spec = flags.load();
  const TrialArtifacts art = run_trial_detailed(spec.base);
  const ScenarioConfig& cfg = spec.base;

  nlohmann::json doc;
  doc["case"] = to_string(cfg.scenario);
  doc["H"] = cfg.H;
  doc["W"] = cfg.W;
  doc["K"] = cfg.K_resolved();
  doc["snr_db"] = cfg.snr_db;
  doc["N_RX"] = static_cast<int>(art.measurements.y.cols());
  doc["seed"] = cfg.seed;
  doc["trial"] = cfg.trial;
  nlohmann::json weights = nlohmann::json::array();
  for (const auto& f : art.measurements.weights) weights.push_back(vector_to_json(f));
  doc["weights"] = weights;
  doc["y"] = matrix_to_json(art.measurements.y);
  doc["truth"]["mask"] = vector_to_json(art.truth.m);
  doc["truth"]["faulty"] = art.truth.faulty_indices;
  if (cfg.scenario == Case::FullCsi || cfg.scenario == Case::PartialCsi) {
    doc["channels"]["h_tx"] = vector_to_json(art.h_tx);
    doc["channels"]["h_rx"] = vector_to_json(art.h_rx);
  } else {
    doc["channels"]["cascaded"] = matrix_to_json(art.rx_cascaded);
  }

  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "cannot open output file: " << out_path << "\n";
    return 1;
  }
  out << doc.dump(2) << "\n";
  std::cout << "wrote measurement set (" << art.measurements.K() << " measurements, N="
            << cfg.N() << ") to " << out_path << "\n";
  return 0;
}

int cmd_diagnose(const CommonFlags& flags) {
  const SweepSpec spec = flags.load();
  const TrialArtifacts art = run_trial_detailed(spec.base);
  const ResultRow& r = art.row;
  std::printf("case=%s N=%d K=%d snr_db=%g n_faults=%d L_TX=%d L_RX=%d N_RX=%d\n",
              r.case_name.c_str(), r.N, r.K, r.snr_db, r.n_faults, r.L_tx, r.L_rx, r.N_rx);
  std::printf("nmse=%.6e support_f1=%.4f converged=%d iterations=%d solver_ms=%.1f\n", r.nmse,
              r.support_f1, r.converged ? 1 : 0, r.iterations, r.runtime_ms);
  const auto detected = threshold_faults(art.diagnosis.mask, spec.base.threshold);
  auto print_set = [](const char* label, const std::set<int>& s) {
    std::printf("%s {", label);
    bool comma = false;
    for (int n : s) {
      std::printf("%s%d", comma ? ", " : "", n);
      comma = true;
    }
    std::printf("}\n");
  };
  print_set("injected faults:", art.truth.faulty_indices);
  print_set("detected faults:", detected);
  return 0;
}

int cmd_sweep(const CommonFlags& flags, const std::string& out_path, const std::string& format,
              int parallelism, bool append) {
  const SweepSpec spec = flags.load();
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<ResultRow> rows = run_sweep(spec, parallelism);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  persist_results(rows, out_path, format_from_string(format), append);
  std::cout << rows.size() << " rows -> " << out_path << " (" << secs << " s, parallelism "
            << parallelism << ")\n";
  return 0;
}

int cmd_validate() {
  const ValidationReport report = validate_suite();
  for (const auto& c : report.checks)
    std::printf("[%s] %-26s %8.1f ms  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.ms,
                c.detail.c_str());
  std::printf("%s\n", report.all_passed() ? "all checks passed" : "validation FAILED");
  return report.all_passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS reflecting-element failure diagnosis simulator"};
  app.require_subcommand(1);

  CommonFlags sim_flags, diag_flags, sweep_flags;
  std::string sim_out, sweep_out;
  std::string sweep_format = "tabular";
  int parallelism = 1;
  bool append = false;

  CLI::App* sim = app.add_subcommand("simulate", "Generate and persist a measurement set");
  add_common(sim, sim_flags);
  sim->add_option("--out", sim_out, "Output JSON path")->required();

  CLI::App* diag = app.add_subcommand("diagnose", "Run one trial and print the diagnosis summary");
  add_common(diag, diag_flags);

  CLI::App* sweep = app.add_subcommand("sweep", "Run a Monte-Carlo grid to a results file");
  add_common(sweep, sweep_flags);
  sweep->add_option("--out", sweep_out, "Results file path")->required();
  sweep->add_option("--format", sweep_format, "Output format: tabular|records");
  sweep->add_option("--parallelism", parallelism, "Worker threads")->check(CLI::PositiveNumber);
  sweep->add_flag("--append", append, "Append to an existing results file");

  CLI::App* validate = app.add_subcommand("validate", "Run the built-in oracle checks");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_flags, sim_out);
    if (diag->parsed()) return cmd_diagnose(diag_flags);
    if (sweep->parsed()) return cmd_sweep(sweep_flags, sweep_out, sweep_format, parallelism, append);
    if (validate->parsed()) return cmd_validate();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
