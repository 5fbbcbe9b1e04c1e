// qbench: command-line driver for the sweeps, benchmarks and oracle dumps.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "qbench/mitigation.hpp"
#include "qbench/qite.hpp"
#include "qbench/vqe.hpp"

namespace fs = std::filesystem;
using namespace qbench;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit : int { kOk = 0, kInternal = 1, kUsage = 2, kIo = 3, kSchema = 4, kNumerical = 5 };

// ---------------------------------------------------------------------------
// Small helpers

Shots parse_shots(const std::string& s) {
  if (s == "exact") return kExact;
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos == s.size() && v > 0) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(fmt::format("--shots expects 'exact' or a positive integer, got '{}'", s));
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s, const char* what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos == s.size()) return v;
  } catch (const std::exception&) {
  }
  throw ValidationError(fmt::format("{}: '{}' is not a number", what, s));
}

/// "a:b:n" (n evenly spaced points from a to b) or a comma list.
std::vector<double> parse_grid(const std::string& s) {
  const auto parts = split(s, ':');
  std::vector<double> out;
  if (parts.size() == 3) {
    const double a = parse_double(parts[0], "grid start"), b = parse_double(parts[1], "grid stop");
    const int n = static_cast<int>(parse_double(parts[2], "grid count"));
    if (n < 1) throw ValidationError("grid count must be >= 1");
    for (int k = 0; k < n; ++k) {
      const double v = n == 1 ? a : a + (b - a) * k / (n - 1);
      out.push_back(std::round(v * 1e12) / 1e12);
    }
    return out;
  }
  for (const auto& p : split(s, ',')) out.push_back(parse_double(p, "grid value"));
  if (out.empty()) throw ValidationError("empty grid");
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    const double v = parse_double(p, what);
    if (v != std::floor(v)) throw ValidationError(fmt::format("{}: '{}' is not an integer", what, p));
    out.push_back(static_cast<int>(v));
  }
  return out;
}

/// Runs fn(0..n-1) on up to `jobs` threads; results are collected by index.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// Flat "key = value" file; '#' starts a comment.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open config file '{}'", path));
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  int lineno = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError(fmt::format("{}:{}: expected 'key = value'", path, lineno));
    std::string key = trim(line.substr(0, eq));
    std::replace(key.begin(), key.end(), '_', '-');
    out.emplace_back(key, trim(line.substr(eq + 1)));
  }
  return out;
}

class Output {
 public:
  explicit Output(std::string path) : path_(std::move(path)) {}

  std::ostream& stream() { return buf_; }
  bool to_stdout() const { return path_ == "-"; }

  void commit(const nlohmann::json& config) {
    if (to_stdout()) {
      std::cout << buf_.str() << std::flush;
      return;
    }
    write_file(path_, buf_.str());
    write_file(path_ + ".config.json", config.dump(2) + "\n");
  }

  static void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write '{}'", path));
    out << text;
    if (!out) throw IoError(fmt::format("write to '{}' failed", path));
  }

 private:
  std::string path_;
  std::ostringstream buf_;
};

// ---------------------------------------------------------------------------
// Option groups shared by several subcommands

struct Inputs {
  std::string dir;
  std::vector<std::string> files;

  void add(CLI::App* app, bool allow_dir = true) {
    if (allow_dir) app->add_option("--hamiltonian-dir", dir, "Directory of Hamiltonian JSON files");
    app->add_option("--hamiltonian", files, "Hamiltonian JSON file (repeatable)");
  }

  std::vector<QubitHamiltonian> load() const {
    std::vector<fs::path> paths;
    if (!dir.empty()) paths = list_hamiltonian_files(dir);
    for (const auto& f : files) paths.emplace_back(f);
    std::vector<QubitHamiltonian> out;
    for (const auto& p : paths) out.push_back(load_hamiltonian(p));
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
      return std::tie(a.molecule, a.bond_distance) < std::tie(b.molecule, b.bond_distance);
    });
    return out;
  }
};

struct NoiseOptions {
  double readout = 0.0;
  double over_rotation = 0.0;
  double over_rotation_sigma = 0.0;
  double depolarizing = 0.0;
  std::string refresh = "per_evaluation";

  void add(CLI::App* app) {
    app->add_option("--readout-error", readout, "Symmetric readout flip probability");
    app->add_option("--over-rotation", over_rotation, "Coherent XX over-rotation (fraction of the angle)");
    app->add_option("--over-rotation-sigma", over_rotation_sigma, "Std dev of the stochastic XX over-rotation");
    app->add_option("--depolarizing", depolarizing, "Per-gate random-Pauli probability");
    app->add_option("--refresh", refresh, "Over-rotation redraw policy: per_evaluation, per_gate, per_shot");
  }

  NoiseModel model() const {
    NoiseModel m = NoiseModel::readout(readout, readout);
    m.over_rotation_bias = over_rotation;
    m.over_rotation_sigma = over_rotation_sigma;
    m.depolarizing = depolarizing;
    m.refresh = error_refresh_from_string(refresh);
    m.validate();
    return m;
  }
};

// Sidecar: every option of the subcommand with its resolved text value.
nlohmann::json describe(const CLI::App* sub, const nlohmann::json& resolved) {
  nlohmann::json j;
  j["command"] = sub->get_name();
  j["version"] = kVersion;
  nlohmann::json opts = nlohmann::json::object();
  for (const CLI::Option* o : sub->get_options()) {
    const std::string name = o->get_lnames().empty() ? o->get_name() : o->get_lnames().front();
    if (name == "help" || name == "config" || name == "out" || name == "jobs") continue;
    if (o->count() > 0) {
      const auto& r = o->results();
      opts[name] = r.size() == 1 ? nlohmann::json(r.front()) : nlohmann::json(r);
    } else {
      opts[name] = o->get_default_str();
    }
  }
  j["options"] = opts;
  j["resolved"] = resolved;
  return j;
}

[[noreturn]] void fail_usage(const std::string& msg) { throw ValidationError(msg); }

// ---------------------------------------------------------------------------
// Subcommands

struct SpectrumCmd {
  std::string file;
  std::string out = "-";

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("spectrum", "Exact 16-state spectrum with sector labels");
    s->add_option("--hamiltonian", file, "Hamiltonian JSON file")->required();
    s->add_option("--out", out, "Output CSV ('-' for standard output)");
  }

  int run(const CLI::App* sub) {
    const QubitHamiltonian h = load_hamiltonian(file);
    const Spectrum sp = exact_spectrum(h);
    Output o(out);
    o.stream() << "index,energy,n_e,s_z,s\n";
    for (int k = 0; k < 16; ++k) {
      const auto& s = sp.sectors[static_cast<std::size_t>(k)];
      o.stream() << fmt::format("{},{:.12f},{},{},{}\n", k, sp.eigenvalues[k], s.n_e, s.s_z(),
                                s.two_s ? fmt::format("{}", *s.two_s / 2.0) : std::string());
    }
    o.commit(describe(sub, {{"molecule", h.molecule}, {"distance", h.bond_distance}}));
    return kOk;
  }
};

struct ValidateCmd {
  std::vector<std::string> files;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("validate-hamiltonian", "Check schema, realness and N / S_z conservation");
    s->add_option("--hamiltonian,files", files, "Hamiltonian JSON file(s)")->required();
  }

  int run(const CLI::App*) {
    for (const auto& f : files) {
      const QubitHamiltonian h = load_hamiltonian(f);
      std::cout << fmt::format("ok {} ({} {} A, {} terms)\n", f, h.molecule, h.bond_distance, h.terms.size());
    }
    return kOk;
  }
};

struct VqeScanCmd {
  Inputs inputs;
  NoiseOptions noise;
  std::string ansatz = "spc";
  std::string sectors = "all";
  std::string shots = "exact";
  std::string mitigation = "none";
  std::string scales = "1,3";
  std::int64_t calibration_shots = 1000000;
  std::string optimizer = "auto";
  int max_evals = 0;
  int refine_rounds = -1;
  int restarts = -1;
  std::string report = "auto";
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "-";

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("vqe-scan", "VQE sweep over Hamiltonian files (7 targets per file)");
    inputs.add(s);
    noise.add(s);
    s->add_option("--ansatz", ansatz, "Ansatz family (spc)");
    s->add_option("--sectors,--targets", sectors, "all, or a comma list of g,1,2,3,g_max,1_max,3_max");
    s->add_option("--shots", shots, "exact or shots per measurement group");
    s->add_option("--mitigation", mitigation, "none, readout or readout+richardson");
    s->add_option("--scales", scales, "Entangler fold scales for Richardson");
    s->add_option("--calibration-shots", calibration_shots, "Shots per readout calibration preparation");
    s->add_option("--optimizer", optimizer, "auto, nelder_mead or bobyqa_style_quadratic");
    s->add_option("--max-evals", max_evals, "Evaluation budget (0 = mode default)");
    s->add_option("--refine-rounds", refine_rounds, "Quadratic refinement rounds (-1 = mode default)");
    s->add_option("--restarts", restarts, "Random restarts (-1 = mode default)");
    s->add_option("--report", report, "auto, fresh or model energy per cell");
    s->add_option("--seed", seed, "Global seed");
    s->add_option("--jobs", jobs, "Worker threads");
    s->add_option("--out", out, "Output CSV ('-' for standard output)");
  }

  int run(const CLI::App* sub) {
    if (ansatz != "spc") fail_usage(fmt::format("unsupported ansatz '{}' (vqe-scan uses spc)", ansatz));
    EstimatorConfig est;
    est.shots = parse_shots(shots);
    est.noise = noise.model();
    MitigationConfig mit;
    mit.kind = mitigation_from_string(mitigation);
    mit.scales = parse_int_list(scales, "--scales");
    mit.calibration_shots = calibration_shots;
    ScanConfig cfg;
    cfg.targets = parse_targets(sectors);
    cfg.seed = seed;
    cfg.optimizer = est.shots ? shot_sweep_optimizer() : OptimizerConfig{};
    if (optimizer != "auto") cfg.optimizer.method = optimizer_method_from_string(optimizer);
    if (max_evals > 0) cfg.optimizer.max_evaluations = max_evals;
    if (refine_rounds >= 0) cfg.optimizer.refine_rounds = refine_rounds;
    if (restarts >= 0) cfg.optimizer.restarts = restarts;
    if (report == "auto") {
      cfg.report_model_energy = est.shots.has_value();
    } else if (report == "model" || report == "fresh") {
      cfg.report_model_energy = report == "model";
    } else {
      fail_usage(fmt::format("--report expects auto, fresh or model, got '{}'", report));
    }

    const std::vector<QubitHamiltonian> hs = inputs.load();
    const EvaluatorFactory factory = mitigated_factory(est, mit, seed);
    std::vector<ScanRow> rows(hs.size());
    if (!cfg.targets.empty()) {
      parallel_for(hs.size(), jobs, [&](std::size_t i) { rows[i] = scan_hamiltonian(hs[i], factory, cfg); });
    } else {
      rows.clear();
    }
    Output o(out);
    write_csv(o.stream(), rows);
    nlohmann::json resolved = {{"method", to_string(cfg.optimizer.method)},
                               {"max_evaluations", cfg.optimizer.max_evaluations},
                               {"refine_rounds", cfg.optimizer.refine_rounds},
                               {"restarts", cfg.optimizer.restarts},
                               {"report_model_energy", cfg.report_model_energy},
                               {"hamiltonians", hs.size()}};
    o.commit(describe(sub, resolved));
    return kOk;
  }
};

struct QiteScanCmd {
  Inputs inputs;
  NoiseOptions noise;
  std::string sectors = "all";
  double dtau = 0.0;
  double epsilon = 1e-3;
  int max_steps = 200;
  std::string stop_rule = "fixed_steps";
  int krylov = 2;
  std::string pool = "odd_y_full";
  double regularization = -1.0;
  std::string shots = "exact";
  std::string mitigation = "none";
  std::int64_t calibration_shots = 1000000;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "-";
  std::string trajectory_out;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("qite-scan", "QITE (+QLanczos) sweep over Hamiltonian blocks");
    inputs.add(s);
    noise.add(s);
    s->add_option("--sectors,--targets", sectors, "all, or a comma list of g,1,2,3,g_max,1_max,3_max");
    s->add_option("--dtau", dtau, "Imaginary-time step (0 = 0.1 exact, 0.05 with shots)");
    s->add_option("--epsilon", epsilon, "Energy-change threshold");
    s->add_option("--max-steps", max_steps, "Step limit per run");
    s->add_option("--stop-rule", stop_rule, "fixed_steps or energy_change");
    s->add_option("--krylov", krylov, "QLanczos dimension (<= 1 reports the final QITE energy)");
    s->add_option("--pool", pool, "odd_y_full or full_xyz");
    s->add_option("--regularization", regularization, "Tikhonov weight (< 0 = mode default)");
    s->add_option("--shots", shots, "exact or shots per Pauli expectation");
    s->add_option("--mitigation", mitigation, "none or readout");
    s->add_option("--calibration-shots", calibration_shots, "Shots per readout calibration preparation");
    s->add_option("--seed", seed, "Global seed");
    s->add_option("--jobs", jobs, "Worker threads");
    s->add_option("--out", out, "Output CSV ('-' for standard output)");
    s->add_option("--trajectory-out", trajectory_out, "Per-step energies CSV");
  }

  int run(const CLI::App* sub) {
    QiteScanConfig cfg;
    cfg.targets = parse_targets(sectors);
    cfg.krylov = krylov;
    QiteConfig& q = cfg.qite;
    q.estimator.shots = parse_shots(shots);
    q.estimator.noise = noise.model();
    q.delta_tau = dtau > 0.0 ? dtau : (q.estimator.shots ? 0.05 : 0.1);
    q.epsilon = epsilon;
    q.max_steps = max_steps;
    q.stop = stop_rule_from_string(stop_rule);
    q.pool = pool_from_string(pool);
    if (regularization >= 0.0) q.regularization = regularization;
    q.seed = seed;
    q.validate();
    const MitigationKind mk = mitigation_from_string(mitigation);
    if (mk == MitigationKind::readout_richardson) fail_usage("qite-scan supports --mitigation none or readout");
    const std::vector<QubitHamiltonian> hs = inputs.load();

    std::vector<ScanRow> rows(hs.size());
    std::vector<std::string> traj(hs.size());
    parallel_for(hs.size(), jobs, [&](std::size_t i) {
      QiteScanConfig local = cfg;
      ScanRow& row = rows[i];
      row.molecule = hs[i].molecule;
      row.distance = hs[i].bond_distance;
      std::ostringstream ts;
      for (Target t : cfg.targets) {
        const SectorBlock b = extract_block(hs[i], target_spec(t).sector);
        if (mk == MitigationKind::readout && local.qite.estimator.shots && local.qite.estimator.noise.has_readout_error()) {
          const ConfusionMatrix cm = calibrate_readout(local.qite.estimator.noise, std::max(1, b.reduced_qubits()),
                                                       calibration_shots, derive_seed(seed, "calibration", b.reduced_qubits()));
          local.qite.estimator.correction = readout_correction(cm);
        }
        const QiteTargetRun r = qite_target(hs[i], t, local, qite_cell_seed(seed, hs[i], t));
        row[t] = r.cell;
        write_trajectory_rows(ts, hs[i], t, r);
      }
      traj[i] = ts.str();
    });
    if (cfg.targets.empty()) rows.clear();
    Output o(out);
    write_csv(o.stream(), rows);
    nlohmann::json resolved = {{"delta_tau", q.delta_tau},
                               {"regularization", q.effective_regularization()},
                               {"krylov_filter", default_krylov_filter(q.estimator.shots.has_value())},
                               {"hamiltonians", hs.size()}};
    const nlohmann::json config = describe(sub, resolved);
    if (!trajectory_out.empty()) {
      std::string text = trajectory_csv_header() + "\n";
      for (const auto& t : traj) text += t;
      if (trajectory_out == "-") {
        std::cout << text;
      } else {
        Output::write_file(trajectory_out, text);
      }
    }
    o.commit(config);
    return kOk;
  }
};

struct HiddenInverseCmd {
  std::string file;
  std::string eps_grid = "0.01:0.1:10";
  int trials = 20;
  std::string shots = "exact";
  std::string refresh = "per_evaluation";
  int max_evals = 400;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "-";
  std::string trials_out;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("hidden-inverse-bench", "Native vs hidden-inverse UCC-3 under XX over-rotation");
    s->add_option("--hamiltonian", file, "Hamiltonian JSON file")->required();
    s->add_option("--eps-grid", eps_grid, "start:stop:count or comma list of over-rotation std devs");
    s->add_option("--trials", trials, "Trials per eps and variant");
    s->add_option("--shots", shots, "exact or shots per measurement group");
    s->add_option("--refresh", refresh, "Over-rotation redraw policy: per_evaluation, per_gate, per_shot");
    s->add_option("--max-evals", max_evals, "Optimizer evaluation budget per trial");
    s->add_option("--seed", seed, "Global seed");
    s->add_option("--jobs", jobs, "Worker threads");
    s->add_option("--out", out, "Summary CSV ('-' for standard output)");
    s->add_option("--trials-out", trials_out, "Per-trial CSV");
  }

  int run(const CLI::App* sub) {
    const QubitHamiltonian h = load_hamiltonian(file);
    HiddenInverseConfig cfg;
    cfg.eps_grid = parse_grid(eps_grid);
    cfg.trials = trials;
    cfg.shots = parse_shots(shots);
    cfg.refresh = error_refresh_from_string(refresh);
    cfg.optimizer.max_evaluations = max_evals;
    cfg.seed = seed;
    if (cfg.trials < 1) fail_usage("--trials must be >= 1");
    for (double e : cfg.eps_grid) {
      if (!(e >= 0.0)) fail_usage("eps values must be >= 0");
    }
    HiddenInverseReport rep;
    rep.exact = ucc3_reference_energy(h);
    struct Job {
      double eps;
      int trial;
      bool hidden;
    };
    std::vector<Job> work;
    for (double eps : cfg.eps_grid) {
      for (int k = 0; k < cfg.trials; ++k) {
        for (bool hidden : {false, true}) work.push_back({eps, k, hidden});
      }
    }
    rep.trials.resize(work.size());
    parallel_for(work.size(), jobs, [&](std::size_t i) {
      rep.trials[i] = hidden_inverse_trial(h, work[i].hidden, work[i].eps, work[i].trial, rep.exact, cfg);
    });
    rep.stats = summarize(rep.trials, cfg.eps_grid);
    Output o(out);
    write_hidden_inverse_csv(o.stream(), rep);
    if (!trials_out.empty()) {
      std::ostringstream ts;
      write_hidden_inverse_trials(ts, rep);
      Output::write_file(trials_out, ts.str());
    }
    o.commit(describe(sub, {{"eps_grid", cfg.eps_grid}, {"exact", rep.exact}, {"molecule", h.molecule}}));
    return kOk;
  }
};

struct MitigationDemoCmd {
  std::string file;
  std::string circuit = "spc-ne2";
  std::string params;
  std::string scales = "1,3,5";
  double delta = 0.02;
  NoiseOptions noise;
  std::string shots = "exact";
  std::string mitigation = "none";
  std::int64_t calibration_shots = 1000000;
  std::uint64_t seed = 0;
  std::string out = "-";

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("mitigation-demo", "Entangler folding and Richardson extrapolation on one circuit");
    s->add_option("--hamiltonian", file, "Hamiltonian JSON file (default: a seeded random molecular Hamiltonian)");
    s->add_option("--circuit", circuit, "spc-ne1, spc-ne2, spc-ne3, ucc3 or ucc3-hi");
    s->add_option("--params", params, "Comma list of circuit parameters (default: seeded uniform)");
    s->add_option("--scales", scales, "Odd fold scales");
    s->add_option("--delta", delta, "Coherent XX over-rotation");
    s->add_option("--readout-error", noise.readout, "Symmetric readout flip probability");
    s->add_option("--over-rotation-sigma", noise.over_rotation_sigma, "Std dev of the stochastic XX over-rotation");
    s->add_option("--shots", shots, "exact or shots per measurement group");
    s->add_option("--mitigation", mitigation, "none or readout (applied before extrapolation)");
    s->add_option("--calibration-shots", calibration_shots, "Shots per readout calibration preparation");
    s->add_option("--seed", seed, "Global seed");
    s->add_option("--out", out, "Output CSV ('-' for standard output)");
  }

  int run(const CLI::App* sub) {
    const QubitHamiltonian h = file.empty() ? random_molecular_hamiltonian(seed) : load_hamiltonian(file);
    const Ansatz a = make_ansatz(circuit);
    std::vector<double> x;
    if (params.empty()) {
      Rng rng(derive_seed(seed, "demo-params"));
      std::uniform_real_distribution<double> u(-kPi, kPi);
      for (int k = 0; k < a.circuit.parameter_count(); ++k) x.push_back(u(rng));
    } else {
      for (const auto& p : split(params, ',')) x.push_back(parse_double(p, "--params"));
    }
    if (static_cast<int>(x.size()) != a.circuit.parameter_count()) {
      fail_usage(fmt::format("{} takes {} parameters, got {}", circuit, a.circuit.parameter_count(), x.size()));
    }
    const std::vector<int> sc = parse_int_list(scales, "--scales");
    const Circuit bound = a.circuit.bind(x);
    const bool ion = a.family == AnsatzFamily::UCC3_native || a.family == AnsatzFamily::UCC3_hidden_inverse;
    const Circuit base = ion ? compile_ion_trap(bound) : bound;

    EstimatorConfig est;
    est.shots = parse_shots(shots);
    NoiseOptions n = noise;
    n.over_rotation = delta;
    est.noise = n.model();
    const MitigationKind mk = mitigation_from_string(mitigation);
    if (mk == MitigationKind::readout_richardson) fail_usage("mitigation-demo always extrapolates; use --mitigation none or readout");
    if (mk == MitigationKind::readout && est.shots && est.noise.has_readout_error()) {
      est.correction = readout_correction(calibrate_readout(est.noise, 4, calibration_shots, derive_seed(seed, "calibration")));
    }
    const double ideal = expectation(qbench::run(base), h.terms);
    std::vector<EnergyEstimate> values;
    Output o(out);
    o.stream() << "kind,scale,energy,std_error,ideal_energy,abs_error\n";
    for (int s : sc) {
      values.push_back(estimate_energy(fold_entanglers(base, s), h.terms, est, derive_seed(seed, "demo", s)));
      o.stream() << fmt::format("measured,{},{:.12f},{:.12f},{:.12f},{:.12f}\n", s, values.back().mean,
                                values.back().std_error, ideal, std::abs(values.back().mean - ideal));
    }
    const ExtrapolationResult r = richardson(sc, values);
    o.stream() << fmt::format("richardson,0,{:.12f},{:.12f},{:.12f},{:.12f}\n", r.value, r.std_error, ideal,
                              std::abs(r.value - ideal));
    o.commit(describe(sub, {{"parameters", x}, {"molecule", h.molecule}, {"ideal", ideal}}));
    return kOk;
  }
};

struct GenerateCmd {
  std::string kind = "random";
  int count = 20;
  std::string distances = "0.5,1.0,1.5,2.0,2.5";
  std::string name = "synthetic";
  bool spin_adapted = true;
  std::uint64_t seed = 1;
  std::string out_dir;

  void add(CLI::App& app) {
    CLI::App* s = app.add_subcommand("generate-hamiltonians", "Write seeded synthetic Hamiltonian files");
    s->add_option("--kind", kind, "random (independent seeds) or family (one dissociation curve)");
    s->add_option("--count", count, "Number of random Hamiltonians");
    s->add_option("--distances", distances, "Comma list of distances for --kind family");
    s->add_option("--name", name, "Molecule name for --kind family");
    s->add_option("--spin-adapted", spin_adapted, "Random Hamiltonians with exact singlet/triplet structure");
    s->add_option("--seed", seed, "First seed (random) or family seed");
    s->add_option("--out-dir", out_dir, "Output directory")->required();
  }

  int run(const CLI::App*) {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError(fmt::format("cannot create '{}': {}", out_dir, ec.message()));
    std::vector<QubitHamiltonian> hs;
    if (kind == "random") {
      if (count < 0) fail_usage("--count must be >= 0");
      for (int k = 0; k < count; ++k) hs.push_back(random_molecular_hamiltonian(seed + static_cast<std::uint64_t>(k), spin_adapted));
    } else if (kind == "family") {
      for (const auto& d : split(distances, ',')) hs.push_back(synthetic_dissociation_point(seed, parse_double(d, "--distances"), name));
    } else {
      fail_usage(fmt::format("--kind expects random or family, got '{}'", kind));
    }
    for (const auto& h : hs) {
      const fs::path p = fs::path(out_dir) / fmt::format("{}_{:.2f}.json", h.molecule, h.bond_distance);
      save_hamiltonian(h, p);
      std::cout << p.string() << '\n';
    }
    return kOk;
  }
};

void print_error(const char* kind, const std::string& message, int code) {
  nlohmann::json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << std::endl;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qbench: eigensolver benchmarks on 4-qubit molecular Hamiltonians"};
  app.set_version_flag("--version", kVersion);
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SpectrumCmd spectrum;
  ValidateCmd validate_cmd;
  VqeScanCmd vqe;
  QiteScanCmd qite;
  HiddenInverseCmd hib;
  MitigationDemoCmd demo;
  GenerateCmd gen;
  spectrum.add(app);
  validate_cmd.add(app);
  vqe.add(app);
  qite.add(app);
  hib.add(app);
  demo.add(app);
  gen.add(app);
  for (CLI::App* sub : app.get_subcommands({})) sub->add_option("--config", "Flat key = value file; flags override it");

  try {
    // Config-file values become option defaults before the command line is parsed.
    CLI::App* chosen = nullptr;
    std::string config_path;
    for (int i = 1; i < argc; ++i) {
      const std::string a = argv[i];
      if (!chosen) {
        for (CLI::App* sub : app.get_subcommands({})) {
          if (sub->get_name() == a) chosen = sub;
        }
      }
      if (a == "--config" && i + 1 < argc) config_path = argv[i + 1];
      if (a.rfind("--config=", 0) == 0) config_path = a.substr(9);
    }
    if (chosen && !config_path.empty()) {
      for (const auto& [key, value] : read_config_file(config_path)) {
        CLI::Option* opt = nullptr;
        try {
          opt = chosen->get_option("--" + key);
        } catch (const CLI::OptionNotFound&) {
          throw ValidationError(fmt::format("config key '{}' is not an option of {}", key, chosen->get_name()));
        }
        opt->default_val(value);
      }
    }
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    print_error("usage", e.what(), kUsage);
    return kUsage;
  } catch (const ValidationError& e) {
    print_error("usage", e.what(), kUsage);
    return kUsage;
  } catch (const IoError& e) {
    print_error("io", e.what(), kIo);
    return kIo;
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) {
      const std::string n = sub->get_name();
      if (n == "spectrum") return spectrum.run(sub);
      if (n == "validate-hamiltonian") return validate_cmd.run(sub);
      if (n == "vqe-scan") return vqe.run(sub);
      if (n == "qite-scan") return qite.run(sub);
      if (n == "hidden-inverse-bench") return hib.run(sub);
      if (n == "mitigation-demo") return demo.run(sub);
      if (n == "generate-hamiltonians") return gen.run(sub);
    }
    print_error("usage", "no subcommand", kUsage);
    return kUsage;
  } catch (const ValidationError& e) {
    print_error("usage", e.what(), kUsage);
    return kUsage;
  } catch (const IoError& e) {
    print_error("io", e.what(), kIo);
    return kIo;
  } catch (const SchemaError& e) {
    print_error("schema", e.what(), kSchema);
    return kSchema;
  } catch (const NumericalError& e) {
    print_error("numerical", e.what(), kNumerical);
    return kNumerical;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), kInternal);
    return kInternal;
  }
}
