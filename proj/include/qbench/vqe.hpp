#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <tuple>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qbench/ansatz.hpp"
#include "qbench/errors.hpp"
#include "qbench/hamiltonian.hpp"
#include "qbench/optimize.hpp"
#include "qbench/random.hpp"
#include "qbench/results.hpp"
#include "qbench/simulator.hpp"

namespace qbench {

/// Energy of a fully bound circuit. The seed drives shot sampling and noise draws.
using EnergyEvaluator = std::function<EnergyEstimate(const Circuit& bound, std::uint64_t seed)>;

inline EnergyEvaluator plain_evaluator(PauliSum h, EstimatorConfig cfg) {
  return [h = std::move(h), cfg = std::move(cfg)](const Circuit& c, std::uint64_t seed) {
    return estimate_energy(c, h, cfg, seed);
  };
}

enum class ObjectiveKind { minimize, maximize, orthogonality_penalized };

struct ObjectiveMode {
  ObjectiveKind kind = ObjectiveKind::minimize;
  std::vector<StateVector> references;  // penalized mode: states to stay orthogonal to
  double penalty_weight = 0.0;

  static ObjectiveMode minimize() { return {}; }
  static ObjectiveMode maximize() { return {ObjectiveKind::maximize, {}, 0.0}; }
  static ObjectiveMode penalized(std::vector<StateVector> refs, double weight) {
    return {ObjectiveKind::orthogonality_penalized, std::move(refs), weight};
  }
};

struct VqeResult {
  EnergyEstimate energy;        // fresh evaluation at the returned parameters
  std::vector<double> parameters;
  int evaluations = 0;
  bool converged = false;
  std::vector<double> trace;    // best objective value per optimizer iteration
  double objective = 0.0;       // best objective value seen by the optimizer
  // Least-squares surface estimate of the energy at the returned parameters,
  // available when the optimizer ran its refinement stage (unpenalized modes).
  std::optional<EnergyEstimate> model_energy;
};

/// Upper bound on the spectral range of h: twice the l1 norm of its non-identity part.
inline double spectral_range_bound(const PauliSum& h) {
  double s = 0.0;
  for (const auto& [p, c] : h.terms()) {
    if (p.weight() > 0) s += std::abs(c);
  }
  return 2.0 * s;
}

/// Variational search over the ansatz parameters. Runs from all-zero angles
/// first and then from up to `opt.restarts` random points while unconverged.
inline VqeResult optimize(const Circuit& ansatz, const EnergyEvaluator& evaluate, const ObjectiveMode& mode,
                          const OptimizerConfig& opt, std::uint64_t seed) {
  const int np = ansatz.parameter_count();
  if (np < 1) throw ValidationError("ansatz has no free parameters");
  if (mode.kind == ObjectiveKind::orthogonality_penalized) {
    if (mode.penalty_weight < 0.0) throw ValidationError("penalty weight must be >= 0");
    for (const auto& r : mode.references) {
      if (r.size() != static_cast<Eigen::Index>(dimension_of(ansatz.n_qubits()))) {
        throw ShapeError("reference state dimension does not match the ansatz");
      }
    }
  }
  const double sign = mode.kind == ObjectiveKind::maximize ? -1.0 : 1.0;
  std::uint64_t calls = 0;
  const Objective f = [&](std::span<const double> x) {
    const Circuit bound = ansatz.bind(x);
    double value = sign * evaluate(bound, derive_seed(seed, "eval", calls++)).mean;
    if (mode.kind == ObjectiveKind::orthogonality_penalized && mode.penalty_weight > 0.0) {
      const StateVector psi = run(bound);
      for (const auto& r : mode.references) value += mode.penalty_weight * std::norm(r.dot(psi));
    }
    return value;
  };

  Rng rng(derive_seed(seed, "restarts"));
  std::uniform_real_distribution<double> start(opt.lower, opt.upper);
  OptimizerConfig run_cfg = opt;
  // Circuit angles repeat every 2 pi, so a [-pi, pi] box can be searched across its edges.
  run_cfg.periodic = std::abs(opt.upper - opt.lower - 2 * kPi) < 1e-12;
  OptimizeResult best;
  int evaluations = 0;
  std::vector<double> trace;
  std::vector<double> x0(static_cast<std::size_t>(np), std::clamp(0.0, opt.lower, opt.upper));
  for (int attempt = 0; attempt <= opt.restarts; ++attempt) {
    if (attempt > 0) {
      for (auto& v : x0) v = start(rng);
    }
    run_cfg.max_evaluations = opt.max_evaluations - evaluations;
    if (run_cfg.max_evaluations <= 0) break;
    run_cfg.rng_seed = derive_seed(seed, "optimizer", attempt);
    OptimizeResult r = minimize(f, x0, run_cfg);
    evaluations += r.evaluations;
    for (double v : r.trace) trace.push_back(trace.empty() ? v : std::min(trace.back(), v));
    const bool better = best.x.empty() || (r.converged && !best.converged) ||
                        (r.converged == best.converged && r.f < best.f);
    if (better) best = std::move(r);
    if (best.converged) break;
  }

  VqeResult out;
  out.parameters = best.x;
  out.evaluations = evaluations;
  out.converged = best.converged;
  out.trace = std::move(trace);
  out.objective = mode.kind == ObjectiveKind::maximize ? -best.f : best.f;
  out.energy = evaluate(ansatz.bind(best.x), derive_seed(seed, "final"));
  if (opt.refine_rounds > 0 && mode.kind != ObjectiveKind::orthogonality_penalized) {
    out.model_energy = EnergyEstimate{out.objective, best.f_std_error, out.energy.shots};
  }
  return out;
}

inline VqeResult optimize(const Circuit& ansatz, const PauliSum& h, const ObjectiveMode& mode,
                          const EstimatorConfig& est, const OptimizerConfig& opt, std::uint64_t seed) {
  if (h.n_qubits() != ansatz.n_qubits()) {
    throw ShapeError(fmt::format("Hamiltonian has {} qubits, ansatz {}", h.n_qubits(), ansatz.n_qubits()));
  }
  if (mode.kind == ObjectiveKind::orthogonality_penalized && est.shots) {
    throw ValidationError("orthogonality-penalized search requires the exact estimator");
  }
  return optimize(ansatz, plain_evaluator(h, est), mode, opt, seed);
}

/// Penalty weight used when none is given: ten times the spectral range bound.
inline double default_penalty_weight(const PauliSum& h) { return 10.0 * spectral_range_bound(h); }

/// Lowest singlet of the N_e=2, s_z=0 block: the triplet is penalized away.
inline VqeResult singlet_ground(const Circuit& ansatz, const PauliSum& h, double lambda, const OptimizerConfig& opt,
                                std::uint64_t seed) {
  if (lambda <= 0.0) throw ValidationError("penalty weight must be > 0");
  return optimize(ansatz, h, ObjectiveMode::penalized({triplet_state()}, lambda), {}, opt, seed);
}

/// Middle singlet of the N_e=2, s_z=0 block: minimizes E + lambda * (|<psi|ground>|^2 + |<psi|triplet>|^2).
/// The triplet lies in the same block, so it is penalized alongside the ground singlet. When
/// `ground_params` prepare the triplet (triplet-lowest blocks), the singlet ground is searched first.
/// lambda = 0 switches the penalty off.
inline VqeResult third_singlet(const Circuit& ansatz, const PauliSum& h, std::span<const double> ground_params,
                               double lambda, const OptimizerConfig& opt, std::uint64_t seed) {
  if (lambda < 0.0) throw ValidationError("penalty weight must be >= 0");
  if (lambda == 0.0) return optimize(ansatz, h, ObjectiveMode::minimize(), {}, opt, seed);
  if (static_cast<int>(ground_params.size()) != ansatz.parameter_count()) {
    throw ShapeError("ground parameters do not match the ansatz");
  }
  StateVector ground = run(ansatz.bind(ground_params));
  if (std::norm(triplet_state().dot(ground)) > 0.5) {
    ground = run(ansatz.bind(singlet_ground(ansatz, h, lambda, opt, derive_seed(seed, "singlet")).parameters));
  }
  std::vector<StateVector> refs = {std::move(ground), triplet_state()};
  return optimize(ansatz, h, ObjectiveMode::penalized(std::move(refs), lambda), {}, opt, seed);
}

// ---------------------------------------------------------------------------
// Dissociation sweeps

/// Builds the energy evaluator used for one Hamiltonian (mitigation plugs in here).
using EvaluatorFactory = std::function<EnergyEvaluator(const PauliSum&)>;

struct ScanConfig {
  std::vector<Target> targets{kAllTargets.begin(), kAllTargets.end()};
  OptimizerConfig optimizer;
  std::uint64_t seed = 0;
  bool report_model_energy = false;  // report the refinement's fitted energy instead of a fresh evaluation
};

/// Search settings for shot-noise sweeps: a budgeted Nelder-Mead run with loose
/// stopping, then least-squares quadratic refinement.
inline OptimizerConfig shot_sweep_optimizer() {
  OptimizerConfig o;
  o.method = OptimizerMethod::nelder_mead;
  o.max_evaluations = 300;
  o.restarts = 0;
  o.ftol = 1e-4;
  o.xtol = 1e-3;
  o.simplex_diameter = 1e-2;
  o.refine_rounds = 15;
  return o;
}

inline std::uint64_t cell_seed(std::uint64_t global, const QubitHamiltonian& h, Target t) {
  return derive_seed(global, h.molecule, h.bond_distance, target_spec(t).suffix);
}

/// One target of one Hamiltonian. Failures are recorded in the cell.
inline Cell scan_cell(const QubitHamiltonian& h, Target t, const EnergyEvaluator& evaluate, const ScanConfig& cfg) {
  Cell cell;
  try {
    const TargetSpec spec = target_spec(t);
    cell.exact = exact_target_energy(h, t);
    const std::uint64_t seed = cell_seed(cfg.seed, h, t);
    if (spec.fixed) {
      const EnergyEstimate e = evaluate(triplet_circuit(), seed);
      cell.energy = e.mean;
      cell.std_error = e.std_error;
      cell.converged = true;
      return cell;
    }
    const ObjectiveMode mode = spec.maximize ? ObjectiveMode::maximize() : ObjectiveMode::minimize();
    const VqeResult r = optimize(spc(spec.sector), evaluate, mode, cfg.optimizer, seed);
    const EnergyEstimate& e = cfg.report_model_energy && r.model_energy ? *r.model_energy : r.energy;
    cell.energy = e.mean;
    cell.std_error = e.std_error;
    cell.evaluations = r.evaluations;
    cell.converged = r.converged;
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return cell;
}

inline ScanRow scan_hamiltonian(const QubitHamiltonian& h, const EvaluatorFactory& factory, const ScanConfig& cfg) {
  ScanRow row;
  row.molecule = h.molecule;
  row.distance = h.bond_distance;
  const EnergyEvaluator evaluate = factory(h.terms);
  for (Target t : cfg.targets) row[t] = scan_cell(h, t, evaluate, cfg);
  return row;
}

/// Rows sorted by (molecule, distance).
inline std::vector<ScanRow> scan_dissociation(std::vector<QubitHamiltonian> hs, const EvaluatorFactory& factory,
                                              const ScanConfig& cfg) {
  std::vector<ScanRow> rows;
  if (cfg.targets.empty()) return rows;
  std::stable_sort(hs.begin(), hs.end(), [](const auto& a, const auto& b) {
    return std::tie(a.molecule, a.bond_distance) < std::tie(b.molecule, b.bond_distance);
  });
  for (const auto& h : hs) rows.push_back(scan_hamiltonian(h, factory, cfg));
  return rows;
}

}  // namespace qbench
