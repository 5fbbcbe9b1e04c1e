#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "qbench/ansatz.hpp"
#include "qbench/errors.hpp"
#include "qbench/hamiltonian.hpp"
#include "qbench/optimize.hpp"
#include "qbench/random.hpp"
#include "qbench/simulator.hpp"
#include "qbench/vqe.hpp"

namespace qbench {

// ---------------------------------------------------------------------------
// Readout mitigation

/// Tensor product of per-qubit column-stochastic matrices: m(r, t) = p(read r | true t).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<Eigen::Matrix2d> per_qubit) : qubits_(std::move(per_qubit)) {
    for (const auto& m : qubits_) {
      for (int c = 0; c < 2; ++c) {
        if (m(0, c) < 0.0 || m(1, c) < 0.0 || std::abs(m(0, c) + m(1, c) - 1.0) > 1e-12) {
          throw ValidationError("confusion matrix columns must be probability vectors");
        }
      }
    }
  }

  static ConfusionMatrix identity(int n) { return ConfusionMatrix(std::vector<Eigen::Matrix2d>(n, Eigen::Matrix2d::Identity())); }

  static ConfusionMatrix from_rates(const std::vector<double>& p1_given_0, const std::vector<double>& p0_given_1) {
    if (p1_given_0.size() != p0_given_1.size()) throw ShapeError("flip-rate vectors differ in length");
    std::vector<Eigen::Matrix2d> q;
    for (std::size_t i = 0; i < p1_given_0.size(); ++i) {
      Eigen::Matrix2d m;
      m << 1.0 - p1_given_0[i], p0_given_1[i], p1_given_0[i], 1.0 - p0_given_1[i];
      q.push_back(m);
    }
    return ConfusionMatrix(std::move(q));
  }

  /// The channel a noise model applies to n qubits.
  static ConfusionMatrix from_noise(const NoiseModel& noise, int n_qubits) {
    std::vector<double> up, down;
    for (int q = 0; q < n_qubits; ++q) {
      up.push_back(noise.flip_up(q));
      down.push_back(noise.flip_down(q));
    }
    return from_rates(up, down);
  }

  int n_qubits() const { return static_cast<int>(qubits_.size()); }
  const Eigen::Matrix2d& qubit(int q) const { return qubits_.at(static_cast<std::size_t>(q)); }
  double p1_given_0(int q) const { return qubit(q)(1, 0); }
  double p0_given_1(int q) const { return qubit(q)(0, 1); }

  /// Smallest per-qubit |det|; the joint determinant is a product of powers of these.
  double min_determinant() const {
    double d = 1.0;
    for (const auto& m : qubits_) d = std::min(d, std::abs(m.determinant()));
    return d;
  }
  /// Determinants at or below max(tol, determinant_tolerance) count as singular.
  bool invertible(double tol = 1e-6) const { return min_determinant() > std::max(tol, determinant_tolerance); }

  // Set by calibration to the sampling noise of the determinant estimate.
  double determinant_tolerance = 0.0;

  RealMatrix joint() const {
    RealMatrix out = RealMatrix::Ones(1, 1);
    for (const auto& m : qubits_) {
      RealMatrix next(out.rows() * 2, out.cols() * 2);
      for (Eigen::Index i = 0; i < out.rows(); ++i) {
        for (Eigen::Index j = 0; j < out.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = out(i, j) * m;
      }
      out = std::move(next);
    }
    return out;
  }

  /// Applies the channel (inverse = false) or its inverse qubit by qubit.
  std::vector<double> apply(std::vector<double> dist, bool inverse) const {
    const int n = n_qubits();
    if (dist.size() != dimension_of(n)) throw ShapeError("distribution size does not match the confusion matrix");
    if (inverse && !invertible()) throw NumericalError("confusion matrix is not invertible");
    for (int q = 0; q < n; ++q) {
      const Eigen::Matrix2d m = inverse ? Eigen::Matrix2d(qubits_[static_cast<std::size_t>(q)].inverse())
                                        : qubits_[static_cast<std::size_t>(q)];
      const std::uint64_t bit = qubit_bit(q, n);
      for (std::uint64_t i = 0; i < dist.size(); ++i) {
        if (i & bit) continue;
        const double a = dist[i], b = dist[i | bit];
        dist[i] = m(0, 0) * a + m(0, 1) * b;
        dist[i | bit] = m(1, 0) * a + m(1, 1) * b;
      }
    }
    return dist;
  }

 private:
  std::vector<Eigen::Matrix2d> qubits_;
};

/// Estimates per-qubit flip rates from all-zeros and all-ones preparations.
inline ConfusionMatrix calibrate_readout(const NoiseModel& noise, int n_qubits, std::int64_t shots, std::uint64_t seed) {
  if (shots < 1) throw ValidationError("calibration shots must be >= 1");
  NoiseModel readout_only;
  readout_only.p1_given_0 = noise.p1_given_0;
  readout_only.p0_given_1 = noise.p0_given_1;
  Circuit zeros(n_qubits), ones(n_qubits);
  for (int q = 0; q < n_qubits; ++q) ones.add(gates::x(q));
  const auto c0 = sample_count_vector(zeros, shots, readout_only, derive_seed(seed, "cal0"));
  const auto c1 = sample_count_vector(ones, shots, readout_only, derive_seed(seed, "cal1"));
  std::vector<double> up(static_cast<std::size_t>(n_qubits), 0.0), down(static_cast<std::size_t>(n_qubits), 0.0);
  for (std::uint64_t i = 0; i < c0.size(); ++i) {
    for (int q = 0; q < n_qubits; ++q) {
      const bool one = (i & qubit_bit(q, n_qubits)) != 0;
      if (one) up[static_cast<std::size_t>(q)] += static_cast<double>(c0[i]);
      if (!one) down[static_cast<std::size_t>(q)] += static_cast<double>(c1[i]);
    }
  }
  for (int q = 0; q < n_qubits; ++q) {
    up[static_cast<std::size_t>(q)] /= static_cast<double>(shots);
    down[static_cast<std::size_t>(q)] /= static_cast<double>(shots);
  }
  ConfusionMatrix cm = ConfusionMatrix::from_rates(up, down);
  // det = 1 - p(1|0) - p(0|1); a determinant within 5 sigma of zero is unresolved.
  double var = 0.0;
  for (std::size_t q = 0; q < up.size(); ++q) {
    var = std::max(var, (up[q] * (1.0 - up[q]) + down[q] * (1.0 - down[q])) / static_cast<double>(shots));
  }
  cm.determinant_tolerance = 5.0 * std::sqrt(var);
  return cm;
}

/// cm^{-1} applied to the empirical distribution. Negative entries are kept.
inline std::vector<double> mitigate_counts(const std::vector<std::int64_t>& counts, const ConfusionMatrix& cm) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
  if (total <= 0.0) throw ValidationError("no counts to mitigate");
  std::vector<double> dist(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) dist[i] = static_cast<double>(counts[i]) / total;
  return cm.apply(std::move(dist), true);
}

inline std::vector<double> mitigate_counts(const Counts& counts, const ConfusionMatrix& cm) {
  std::vector<std::int64_t> v(dimension_of(cm.n_qubits()), 0);
  for (const auto& [bits, c] : counts) {
    if (static_cast<int>(bits.size()) != cm.n_qubits()) throw ShapeError(fmt::format("outcome '{}' has wrong width", bits));
    v[parse_bits(bits)] += c;
  }
  return mitigate_counts(v, cm);
}

inline CountCorrection readout_correction(ConfusionMatrix cm) {
  return [cm = std::move(cm)](const std::vector<std::int64_t>& counts) { return mitigate_counts(counts, cm); };
}

// ---------------------------------------------------------------------------
// Zero-noise extrapolation

/// Every CNOT / CNOT-dagger repeated `scale` times (odd scale keeps the ideal unitary).
inline Circuit fold_entanglers(const Circuit& circuit, int scale) {
  if (scale < 1 || scale % 2 == 0) throw ValidationError(fmt::format("fold scale must be an odd integer >= 1, got {}", scale));
  Circuit out(circuit.n_qubits());
  for (const auto& g : circuit.gates()) {
    const int reps = is_entangler(g.kind) ? scale : 1;
    for (int k = 0; k < reps; ++k) out.add(g);
  }
  out.set_parameter_names(circuit.parameter_names());
  return out;
}

enum class ExtrapolationModel { richardson, linear };

struct ExtrapolationResult {
  std::vector<double> scales;
  std::vector<EnergyEstimate> estimates;
  ExtrapolationModel model = ExtrapolationModel::richardson;
  std::vector<double> weights;  // value = sum_k weights[k] * estimates[k].mean
  double value = 0.0;
  double std_error = 0.0;
  double residual = 0.0;  // rms misfit of the model at the sampled scales
};

/// Zero-noise extrapolation. Richardson interpolates a polynomial of degree
/// (#scales - 1); linear is a least-squares line.
inline ExtrapolationResult richardson(const std::vector<double>& scales, const std::vector<EnergyEstimate>& estimates,
                                      ExtrapolationModel model = ExtrapolationModel::richardson) {
  const std::size_t m = scales.size();
  if (m < 2) throw ValidationError("extrapolation needs at least two scales");
  if (estimates.size() != m) throw ShapeError("one estimate per scale is required");
  for (std::size_t k = 1; k < m; ++k) {
    if (!(scales[k] > scales[k - 1])) throw ValidationError("scales must be strictly increasing");
  }
  ExtrapolationResult r{scales, estimates, model, std::vector<double>(m, 0.0), 0.0, 0.0, 0.0};
  if (model == ExtrapolationModel::richardson) {
    for (std::size_t k = 0; k < m; ++k) {
      double w = 1.0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j != k) w *= scales[j] / (scales[j] - scales[k]);
      }
      r.weights[k] = w;
    }
  } else {
    const double mean_s = std::accumulate(scales.begin(), scales.end(), 0.0) / static_cast<double>(m);
    double sxx = 0.0;
    for (double s : scales) sxx += (s - mean_s) * (s - mean_s);
    for (std::size_t k = 0; k < m; ++k) r.weights[k] = 1.0 / static_cast<double>(m) - mean_s * (scales[k] - mean_s) / sxx;
  }
  double var = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    r.value += r.weights[k] * estimates[k].mean;
    var += r.weights[k] * r.weights[k] * estimates[k].std_error * estimates[k].std_error;
  }
  r.std_error = std::sqrt(var);
  if (model == ExtrapolationModel::linear) {
    double slope_num = 0.0, sxx = 0.0;
    const double mean_s = std::accumulate(scales.begin(), scales.end(), 0.0) / static_cast<double>(m);
    for (std::size_t k = 0; k < m; ++k) {
      slope_num += (scales[k] - mean_s) * estimates[k].mean;
      sxx += (scales[k] - mean_s) * (scales[k] - mean_s);
    }
    const double slope = slope_num / sxx;
    double ss = 0.0;
    for (std::size_t k = 0; k < m; ++k) ss += std::pow(r.value + slope * scales[k] - estimates[k].mean, 2);
    r.residual = std::sqrt(ss / static_cast<double>(m));
  }
  return r;
}

inline ExtrapolationResult richardson(const std::vector<int>& scales, const std::vector<EnergyEstimate>& estimates,
                                      ExtrapolationModel model = ExtrapolationModel::richardson) {
  return richardson(std::vector<double>(scales.begin(), scales.end()), estimates, model);
}

/// Wraps an evaluator with entangler folding and extrapolation for circuits with
/// at least `min_entanglers` CNOT-class gates; others pass through unchanged.
inline EnergyEvaluator extrapolating_evaluator(EnergyEvaluator base, std::vector<int> scales, int min_entanglers = 1,
                                               ExtrapolationModel model = ExtrapolationModel::richardson) {
  return [base = std::move(base), scales = std::move(scales), min_entanglers, model](const Circuit& c, std::uint64_t seed) {
    if (resource_count(c).cnot_count < min_entanglers) return base(c, seed);
    std::vector<EnergyEstimate> est;
    for (int s : scales) est.push_back(base(fold_entanglers(c, s), derive_seed(seed, "fold", s)));
    const ExtrapolationResult r = richardson(scales, est, model);
    return EnergyEstimate{r.value, r.std_error, est.front().shots};
  };
}

// ---------------------------------------------------------------------------
// Mitigation stack for sweeps

enum class MitigationKind { none, readout, readout_richardson };

inline const char* to_string(MitigationKind m) {
  switch (m) {
    case MitigationKind::none: return "none";
    case MitigationKind::readout: return "readout";
    case MitigationKind::readout_richardson: return "readout+richardson";
  }
  return "?";
}

inline MitigationKind mitigation_from_string(std::string_view s) {
  if (s == "none") return MitigationKind::none;
  if (s == "readout") return MitigationKind::readout;
  if (s == "readout+richardson") return MitigationKind::readout_richardson;
  throw ValidationError(fmt::format("unknown mitigation '{}'", s));
}

struct MitigationConfig {
  MitigationKind kind = MitigationKind::none;
  std::int64_t calibration_shots = 1000000;
  std::vector<int> scales = {1, 3};
  int richardson_min_entanglers = 3;  // only the 3-CNOT circuits are extrapolated
};

/// Evaluator factory for a sweep: calibrates readout once (seeded) and stacks
/// confusion-matrix inversion and entangler extrapolation as configured.
inline EvaluatorFactory mitigated_factory(EstimatorConfig est, MitigationConfig mit, std::uint64_t seed) {
  if (mit.kind != MitigationKind::none && est.shots && est.noise.has_readout_error()) {
    est.correction = readout_correction(calibrate_readout(est.noise, 4, mit.calibration_shots, derive_seed(seed, "calibration")));
  }
  return [est, mit](const PauliSum& h) {
    EnergyEvaluator e = plain_evaluator(h, est);
    if (mit.kind == MitigationKind::readout_richardson) {
      e = extrapolating_evaluator(std::move(e), mit.scales, mit.richardson_min_entanglers);
    }
    return e;
  };
}

// ---------------------------------------------------------------------------
// Hidden-inverse benchmark

struct HiddenInverseConfig {
  std::vector<double> eps_grid;
  int trials = 20;
  OptimizerConfig optimizer = [] {
    OptimizerConfig o;
    o.method = OptimizerMethod::bobyqa_style_quadratic;
    o.max_evaluations = 400;
    o.xtol = 1e-4;
    o.restarts = 0;
    return o;
  }();
  ErrorRefresh refresh = ErrorRefresh::per_evaluation;
  Shots shots = kExact;
  std::uint64_t seed = 0;
};

struct HiddenInverseTrial {
  std::string variant;  // "native" or "hidden_inverse"
  double eps = 0.0;
  int trial = 0;
  double energy = 0.0;
  double exact = 0.0;
  double abs_error = 0.0;
  int evaluations = 0;
  std::string error;
};

struct HiddenInverseStat {
  std::string variant;
  double eps = 0.0;
  double mean_error = 0.0;
  double std_error = 0.0;  // sample standard deviation of the trial errors
  int trials = 0;
  int failures = 0;
};

struct HiddenInverseReport {
  double exact = 0.0;
  std::vector<HiddenInverseTrial> trials;
  std::vector<HiddenInverseStat> stats;  // ordered by eps, native first
};

/// Reference for the benchmark: the lowest eigenvalue of the N_e=2, s_z=0 block UCC-3 explores.
inline double ucc3_reference_energy(const QubitHamiltonian& h) {
  return exact_spectrum(extract_block(h, SymmetrySector::make(2, 0))).eigenvalues.minCoeff();
}

/// One VQE run of the ion-trap compiled UCC-3 variant under stochastic XX over-rotation.
inline HiddenInverseTrial hidden_inverse_trial(const QubitHamiltonian& h, bool hidden, double eps, int trial, double exact,
                                               const HiddenInverseConfig& cfg) {
  HiddenInverseTrial t{hidden ? "hidden_inverse" : "native", eps, trial, 0.0, exact, 0.0, 0, {}};
  try {
    EstimatorConfig est;
    est.shots = cfg.shots;
    est.noise.over_rotation_sigma = eps;
    est.noise.refresh = cfg.refresh;
    // Both variants of a trial see the same seed, so they differ only in the circuit.
    const std::uint64_t seed = derive_seed(cfg.seed, "hidden-inverse", eps, trial);
    const VqeResult r = optimize(compile_ion_trap(ucc3(hidden)), plain_evaluator(h.terms, est), ObjectiveMode::minimize(),
                                 cfg.optimizer, seed);
    t.energy = r.energy.mean;
    t.abs_error = std::abs(r.energy.mean - exact);
    t.evaluations = r.evaluations;
  } catch (const std::exception& e) {
    t.error = e.what();
  }
  return t;
}

inline std::vector<HiddenInverseStat> summarize(const std::vector<HiddenInverseTrial>& trials, const std::vector<double>& eps_grid) {
  std::vector<HiddenInverseStat> out;
  for (double eps : eps_grid) {
    for (const char* variant : {"native", "hidden_inverse"}) {
      HiddenInverseStat s{variant, eps, 0.0, 0.0, 0, 0};
      std::vector<double> errs;
      for (const auto& t : trials) {
        if (t.eps != eps || t.variant != variant) continue;
        if (!t.error.empty()) {
          ++s.failures;
          continue;
        }
        errs.push_back(t.abs_error);
      }
      s.trials = static_cast<int>(errs.size());
      if (!errs.empty()) {
        s.mean_error = std::accumulate(errs.begin(), errs.end(), 0.0) / static_cast<double>(errs.size());
        double ss = 0.0;
        for (double e : errs) ss += (e - s.mean_error) * (e - s.mean_error);
        s.std_error = errs.size() > 1 ? std::sqrt(ss / static_cast<double>(errs.size() - 1)) : 0.0;
      }
      out.push_back(s);
    }
  }
  return out;
}

/// Trials run in (eps, trial, variant) order.
inline HiddenInverseReport hidden_inverse_benchmark(const QubitHamiltonian& h, const HiddenInverseConfig& cfg) {
  if (cfg.trials < 1) throw ValidationError("at least one trial is required");
  HiddenInverseReport rep;
  rep.exact = ucc3_reference_energy(h);
  for (double eps : cfg.eps_grid) {
    if (!(eps >= 0.0)) throw ValidationError("eps must be >= 0");
    for (int k = 0; k < cfg.trials; ++k) {
      for (bool hidden : {false, true}) rep.trials.push_back(hidden_inverse_trial(h, hidden, eps, k, rep.exact, cfg));
    }
  }
  rep.stats = summarize(rep.trials, cfg.eps_grid);
  return rep;
}

inline std::string hidden_inverse_csv_header() { return "eps,variant,mean_error,std_error,trials,failures,exact"; }

/// One row per (eps, variant): mean |E_found - E_exact| and the sample standard deviation.
inline void write_hidden_inverse_csv(std::ostream& out, const HiddenInverseReport& rep) {
  out << hidden_inverse_csv_header() << '\n';
  for (const auto& s : rep.stats) {
    out << fmt::format("{:.6f},{},{:.12f},{:.12f},{},{},{:.12f}\n", s.eps, s.variant, s.mean_error, s.std_error, s.trials,
                       s.failures, rep.exact);
  }
}

inline std::string hidden_inverse_trials_header() { return "eps,variant,trial,energy,exact,abs_error,evaluations,status"; }

inline void write_hidden_inverse_trials(std::ostream& out, const HiddenInverseReport& rep) {
  out << hidden_inverse_trials_header() << '\n';
  for (const auto& t : rep.trials) {
    out << fmt::format("{:.6f},{},{},{:.12f},{:.12f},{:.12f},{},{}\n", t.eps, t.variant, t.trial, t.energy, t.exact,
                       t.abs_error, t.evaluations, t.error.empty() ? std::string("ok") : detail::csv_text(t.error));
  }
}

}  // namespace qbench
