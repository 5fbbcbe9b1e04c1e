#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "qbench/circuit.hpp"
#include "qbench/errors.hpp"
#include "qbench/hamiltonian.hpp"
#include "qbench/linalg.hpp"
#include "qbench/pauli.hpp"
#include "qbench/random.hpp"
#include "qbench/results.hpp"
#include "qbench/simulator.hpp"

namespace qbench {

enum class PoolKind { odd_y_full, full_xyz };

inline const char* to_string(PoolKind p) { return p == PoolKind::odd_y_full ? "odd_y_full" : "full_xyz"; }

inline PoolKind pool_from_string(std::string_view s) {
  if (s == "odd_y_full") return PoolKind::odd_y_full;
  if (s == "full_xyz") return PoolKind::full_xyz;
  throw ValidationError(fmt::format("unknown operator pool '{}'", s));
}

/// Non-identity strings on n qubits; odd_y_full keeps the odd-Y (purely imaginary) ones,
/// which are exactly the generators of real-state evolution.
inline std::vector<PauliString> operator_pool(int n_qubits, PoolKind kind) {
  if (n_qubits < 1) throw ValidationError("operator pool needs at least one qubit");
  std::vector<PauliString> out;
  for (const auto& p : all_pauli_strings(n_qubits)) {
    if (p.weight() == 0) continue;
    if (kind == PoolKind::odd_y_full && !p.y_parity()) continue;
    out.push_back(p);
  }
  return out;
}

/// energy_change stops once |E_s - E_{s-1}| < epsilon; fixed_steps always runs max_steps
/// (converged then reports whether the last change was below epsilon).
enum class StopRule { energy_change, fixed_steps };

inline const char* to_string(StopRule r) { return r == StopRule::energy_change ? "energy_change" : "fixed_steps"; }

inline StopRule stop_rule_from_string(std::string_view s) {
  if (s == "energy_change") return StopRule::energy_change;
  if (s == "fixed_steps") return StopRule::fixed_steps;
  throw ValidationError(fmt::format("unknown stop rule '{}'", s));
}

struct QiteConfig {
  double delta_tau = 0.1;
  int max_steps = 200;
  double epsilon = 1e-3;
  StopRule stop = StopRule::energy_change;
  PoolKind pool = PoolKind::odd_y_full;
  std::optional<double> regularization;  // Tikhonov weight; default 1e-8 exact, 1e-2 with shots
  EstimatorConfig estimator;             // exact, or shots + noise (+ readout correction)
  std::uint64_t seed = 0;
  bool keep_states = true;

  double effective_regularization() const { return regularization.value_or(estimator.shots ? 1e-2 : 1e-8); }

  void validate() const {
    if (!(delta_tau > 0.0)) throw ValidationError("delta_tau must be > 0");
    if (!(epsilon > 0.0)) throw ValidationError("epsilon must be > 0");
    if (max_steps < 0) throw ValidationError("max_steps must be >= 0");
    if (effective_regularization() < 0.0) throw ValidationError("regularization must be >= 0");
  }
};

struct QiteStepRecord {
  int step = 0;
  std::vector<double> a;  // coefficients over the pool (empty for the initial record)
  double energy = 0.0;    // <H> of the state after the step
  double energy_std_error = 0.0;
  double c_ratio = 1.0;   // c_{s-1} / c_s, first order in delta_tau
  StateVector state;      // exact mode snapshot (empty unless keep_states)
};

struct QiteTrajectory {
  std::string initial_label;
  double delta_tau = 0.0;
  double offset = 0.0;  // identity coefficient of H; the evolution uses the traceless part
  std::vector<QiteStepRecord> steps;  // steps[0] is the initial state
  bool converged = false;
  double final_energy = 0.0;

  int step_count() const { return static_cast<int>(steps.size()) - 1; }
};

namespace detail {

/// Angles with u = e^{i g} U3(theta, phi, lambda).
inline std::array<double, 3> u3_angles(const Eigen::Matrix2cd& u) {
  const double c = std::abs(u(0, 0)), s = std::abs(u(1, 0));
  const double theta = 2.0 * std::atan2(s, c);
  double phi = 0.0, lambda = 0.0;
  if (c > 1e-12 && s > 1e-12) {
    const double g = std::arg(u(0, 0));
    phi = std::arg(u(1, 0)) - g;
    lambda = std::arg(-u(0, 1)) - g;
  } else if (c > 1e-12) {
    lambda = std::arg(u(1, 1)) - std::arg(u(0, 0));
  } else {
    phi = std::arg(u(1, 0)) - std::arg(-u(0, 1));
  }
  return {theta, phi, lambda};
}

inline Eigen::Matrix2cd column_completion(cplx a, cplx b) {
  Eigen::Matrix2cd u;
  u << a, -std::conj(b), b, std::conj(a);
  return u;
}

inline Gate u3_gate(int q, const Eigen::Matrix2cd& u) {
  const auto [t, p, l] = u3_angles(u);
  return gates::u3(q, t, p, l);
}

}  // namespace detail

/// U3 layer, CNOT(0,1), U3 layer. Uses the Schmidt form psi = (U x V)(cos a|00> + sin a|11>);
/// for real states every U3 reduces to one effective angle.
inline Circuit fixed_shape_2q_prep(const StateVector& target) {
  if (target.size() != 4) throw ShapeError("fixed_shape_2q_prep needs a 2-qubit state");
  if (std::abs(target.norm() - 1.0) > 1e-9) throw ValidationError("target state is not normalized");
  Eigen::Matrix2cd m;
  m << target[0], target[1], target[2], target[3];  // rows: qubit 0, columns: qubit 1
  Eigen::JacobiSVD<Eigen::Matrix2cd> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Vector2d sv = svd.singularValues();
  const double a = std::atan2(sv[1], sv[0]);
  const Eigen::Matrix2cd u = svd.matrixU();
  const Eigen::Matrix2cd v = svd.matrixV().conjugate();
  Circuit c(2);
  c.add(gates::u3(0, 2.0 * a, 0.0, 0.0)).add(gates::u3(1, 0.0, 0.0, 0.0));
  c.add(gates::cnot(0, 1));
  c.add(detail::u3_gate(0, u)).add(detail::u3_gate(1, v));
  return c;
}

/// Circuit preparing `target` from |0...0>: one U3 for a qubit, the fixed 2-qubit
/// shape for two, a generic unitary block otherwise.
inline Circuit preparation_circuit(const StateVector& target) {
  const int n = qubits_for_dimension(target.size());
  if (n == 1) {
    Circuit c(1);
    c.add(detail::u3_gate(0, detail::column_completion(target[0], target[1])));
    return c;
  }
  if (n == 2) return fixed_shape_2q_prep(target);
  // Householder reflection mapping |0> to the target (up to a phase).
  const auto d = target.size();
  StateVector e0 = StateVector::Zero(d);
  e0[0] = 1.0;
  const cplx ph = std::abs(target[0]) > 1e-15 ? target[0] / std::abs(target[0]) : cplx(1.0, 0.0);
  StateVector w = e0 * ph - target;
  ComplexMatrix u = ComplexMatrix::Identity(d, d);
  if (w.norm() > 1e-14) {
    w.normalize();
    u = (ComplexMatrix::Identity(d, d) - 2.0 * w * w.adjoint()) * ph;
  }
  std::vector<int> targets(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) targets[static_cast<std::size_t>(q)] = q;
  Circuit c(n);
  c.add(gates::state_prep(targets, u));
  return c;
}

namespace detail {

// Pauli expectations of one state: exact, or sampled from its preparation circuit.
class PauliOracle {
 public:
  PauliOracle(const StateVector& state, const EstimatorConfig& est, std::uint64_t seed)
      : state_(state), est_(est), seed_(seed) {
    if (est_.shots) circuit_ = preparation_circuit(state);
  }

  double operator()(const PauliString& p) {
    if (p.weight() == 0) return 1.0;
    auto it = cache_.find(p);
    if (it != cache_.end()) return it->second;
    double v = 0.0;
    if (!est_.shots) {
      v = pauli_expectation(state_, p).real();
    } else {
      PauliSum single(p.size());
      single.add(p, 1.0);
      v = estimate_energy(*circuit_, single, est_, derive_seed(seed_, "pauli", p.str())).mean;
    }
    cache_.emplace(p, v);
    return v;
  }

  EnergyEstimate energy(const PauliSum& h) {
    if (!est_.shots) return {expectation(state_, h), 0.0, kExact};
    return estimate_energy(*circuit_, h, est_, derive_seed(seed_, "energy"));
  }

 private:
  const StateVector& state_;
  const EstimatorConfig& est_;
  std::uint64_t seed_;
  std::optional<Circuit> circuit_;
  std::map<PauliString, double> cache_;
};

}  // namespace detail

struct QiteStepResult {
  QiteStepRecord record;
  StateVector state;
};

/// One QITE step on the traceless part of h. `energy` is <H> of `state` (traceless frame),
/// used for the first-order norm ratio c_{s-1}/c_s = sqrt(1 - 2 dtau E).
inline QiteStepResult qite_step(const StateVector& state, const PauliSum& h, double energy, const QiteConfig& cfg,
                                std::uint64_t seed) {
  cfg.validate();
  const int n = h.n_qubits();
  if (state.size() != static_cast<Eigen::Index>(dimension_of(n))) throw ShapeError("state does not match the Hamiltonian");
  if (std::abs(state.norm() - 1.0) > 1e-9) throw ValidationError("QITE state is not normalized");
  const PauliSum ht = h.traceless();
  const double norm2 = 1.0 - 2.0 * cfg.delta_tau * energy;
  if (!(norm2 > 0.0)) {
    throw NumericalError(fmt::format("first-order norm 1 - 2 dtau E = {} is not positive (E = {}, dtau = {})", norm2,
                                     energy, cfg.delta_tau));
  }
  const double c_ratio = std::sqrt(norm2);

  const std::vector<PauliString> pool = operator_pool(n, cfg.pool);
  const auto m = static_cast<Eigen::Index>(pool.size());
  detail::PauliOracle expect(state, cfg.estimator, seed);
  // (S + S^T)_ij = 2 Re <s_i s_j>,  b_i = 2 Im <s_i H> / sqrt(c).
  RealMatrix s2(m, m);
  RealVector b(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = i; j < m; ++j) {
      const PauliProduct pr = multiply(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
      s2(i, j) = s2(j, i) = 2.0 * (pr.phase * expect(pr.result)).real();
    }
    cplx acc{0.0, 0.0};
    for (const auto& [p, c] : ht.terms()) {
      const PauliProduct pr = multiply(pool[static_cast<std::size_t>(i)], p);
      acc += c * pr.phase * expect(pr.result);
    }
    b[i] = 2.0 * acc.imag() / c_ratio;
  }
  const RealMatrix lhs = s2 + cfg.effective_regularization() * RealMatrix::Identity(m, m);
  const RealVector a = lhs.ldlt().solve(b);
  const double residual = (lhs * a - b).norm();
  if (!a.allFinite() || residual > 1e-6 * std::max(1.0, b.norm())) {
    const Eigen::SelfAdjointEigenSolver<RealMatrix> es(lhs);
    throw NumericalError(fmt::format("QITE linear system is singular: residual {:.3e}, eigenvalues [{:.3e}, {:.3e}]",
                                     residual, es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()));
  }

  ComplexMatrix gen = ComplexMatrix::Zero(state.size(), state.size());
  for (Eigen::Index i = 0; i < m; ++i) gen += a[i] * dense_matrix(pool[static_cast<std::size_t>(i)]);
  StateVector next = expm_hermitian(gen, cfg.delta_tau) * state;
  next.normalize();

  QiteStepResult out;
  out.record.a.assign(a.data(), a.data() + m);
  out.record.c_ratio = c_ratio;
  detail::PauliOracle after(next, cfg.estimator, derive_seed(seed, "after"));
  const EnergyEstimate e = after.energy(ht);
  out.record.energy = e.mean;
  out.record.energy_std_error = e.std_error;
  if (cfg.keep_states) out.record.state = next;
  out.state = std::move(next);
  return out;
}

/// Imaginary-time evolution from `initial` until the energy change drops below epsilon.
/// Energies are reported in the frame of h (identity coefficient included).
inline QiteTrajectory run_qite(const PauliSum& h, const StateVector& initial, const QiteConfig& cfg,
                               std::string label = "initial") {
  cfg.validate();
  if (initial.size() != static_cast<Eigen::Index>(dimension_of(h.n_qubits()))) {
    throw ShapeError("initial state does not match the Hamiltonian");
  }
  if (std::abs(initial.norm() - 1.0) > 1e-9) throw ValidationError("initial state is not normalized");
  const PauliSum ht = h.traceless();
  QiteTrajectory t;
  t.initial_label = std::move(label);
  t.delta_tau = cfg.delta_tau;
  t.offset = h.identity_coefficient();

  StateVector state = initial;
  QiteStepRecord first;
  {
    detail::PauliOracle o(state, cfg.estimator, derive_seed(cfg.seed, "step", 0));
    const EnergyEstimate e = o.energy(ht);
    first.energy = e.mean;
    first.energy_std_error = e.std_error;
  }
  if (cfg.keep_states) first.state = state;
  t.steps.push_back(std::move(first));

  for (int s = 1; s <= cfg.max_steps; ++s) {
    QiteStepResult r = qite_step(state, ht, t.steps.back().energy, cfg, derive_seed(cfg.seed, "step", s));
    r.record.step = s;
    state = std::move(r.state);
    const double previous = t.steps.back().energy;
    t.steps.push_back(std::move(r.record));
    t.converged = std::abs(t.steps.back().energy - previous) < cfg.epsilon;
    if (t.converged && cfg.stop == StopRule::energy_change) break;
  }
  for (auto& rec : t.steps) rec.energy += t.offset;
  t.final_energy = t.steps.back().energy;
  return t;
}

// ---------------------------------------------------------------------------
// QLanczos

struct KrylovSolveResult {
  RealMatrix t;  // overlaps <Phi_l|Phi_l'>
  RealMatrix h;  // <Phi_l|H|Phi_l'>, in the shifted frame
  std::vector<int> indices;
  RealVector eigenvalues;  // ascending, frame of the trajectory's Hamiltonian
  RealMatrix vectors;      // columns: coefficients x over the Krylov states
  int kept_dimension = 0;  // directions surviving the overlap filter
};

/// Krylov overlap filter: directions of T with eigenvalue below this are discarded.
inline double default_krylov_filter(bool shots) { return shots ? 1e-3 : 1e-8; }

/// first_order: 1/c_{r+1}^2 = (1 - 2 dtau E_r) / c_r^2 from the recorded energies.
/// recorded: c_{r+1} = c_r / c_ratio_{r+1} from the step records (exact when the ratios are).
enum class NormRecursion { first_order, recorded };

/// Krylov eigenvalues from a QITE trajectory. First-order norms use E_r in the traceless
/// frame plus `shift`.
inline KrylovSolveResult qlanczos(const QiteTrajectory& traj, const std::vector<int>& indices, double shift = 0.0,
                                  double filter = 1e-8, NormRecursion norms = NormRecursion::first_order) {
  if (indices.empty()) throw ValidationError("at least one Krylov index is required");
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const int l = indices[k];
    if (l < 0 || l % 2 != 0) throw ValidationError(fmt::format("Krylov index {} must be even and >= 0", l));
    if (l > traj.step_count()) throw ValidationError(fmt::format("Krylov index {} beyond trajectory length {}", l, traj.step_count()));
    if (k > 0 && l <= indices[k - 1]) throw ValidationError("Krylov indices must be strictly increasing");
  }
  const int top = indices.back();
  auto energy = [&](int r) { return traj.steps[static_cast<std::size_t>(r)].energy - traj.offset + shift; };
  std::vector<double> log_c(static_cast<std::size_t>(top) + 1, 0.0);  // log c_0 = 0
  for (int r = 0; r < top; ++r) {
    if (norms == NormRecursion::recorded) {
      const double ratio = traj.steps[static_cast<std::size_t>(r) + 1].c_ratio;
      if (!(ratio > 0.0)) throw NumericalError(fmt::format("recorded c ratio at step {} is not positive", r + 1));
      log_c[static_cast<std::size_t>(r) + 1] = log_c[static_cast<std::size_t>(r)] - std::log(ratio);
      continue;
    }
    const double x = 1.0 - 2.0 * traj.delta_tau * energy(r);
    if (!(x > 0.0)) throw NumericalError(fmt::format("norm recursion breaks down at step {} (1 - 2 dtau E = {})", r, x));
    log_c[static_cast<std::size_t>(r) + 1] = log_c[static_cast<std::size_t>(r)] - 0.5 * std::log(x);
  }
  const auto d = static_cast<Eigen::Index>(indices.size());
  KrylovSolveResult res;
  res.indices = indices;
  res.t.resize(d, d);
  res.h.resize(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      const int l = indices[static_cast<std::size_t>(i)], lp = indices[static_cast<std::size_t>(j)];
      const int r = (l + lp) / 2;
      res.t(i, j) = std::exp(log_c[static_cast<std::size_t>(l)] + log_c[static_cast<std::size_t>(lp)] -
                             2.0 * log_c[static_cast<std::size_t>(r)]);
      res.h(i, j) = res.t(i, j) * energy(r);
    }
  }
  const Eigen::SelfAdjointEigenSolver<RealMatrix> te(res.t);
  if (te.eigenvalues().minCoeff() < -std::max(filter, 1e-9)) {
    throw NumericalError(fmt::format("Krylov overlap matrix is indefinite: eigenvalues [{:.3e}, {:.3e}]",
                                     te.eigenvalues().minCoeff(), te.eigenvalues().maxCoeff()));
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < d; ++k) {
    if (te.eigenvalues()[k] >= filter) keep.push_back(k);
  }
  if (keep.empty()) throw NumericalError("no Krylov direction survives the overlap filter");
  res.kept_dimension = static_cast<int>(keep.size());
  RealMatrix x(d, static_cast<Eigen::Index>(keep.size()));
  for (std::size_t k = 0; k < keep.size(); ++k) {
    x.col(static_cast<Eigen::Index>(k)) = te.eigenvectors().col(keep[k]) / std::sqrt(te.eigenvalues()[keep[k]]);
  }
  const RealMatrix reduced = x.transpose() * res.h * x;
  const Eigen::SelfAdjointEigenSolver<RealMatrix> he(0.5 * (reduced + reduced.transpose()));
  res.eigenvalues = he.eigenvalues().array() - shift + traj.offset;
  res.vectors = x * he.eigenvectors();
  return res;
}

/// Krylov indices for a QITE trajectory: the `dimension` largest even steps, spaced by `stride`.
inline std::vector<int> krylov_indices(const QiteTrajectory& traj, int dimension, int stride = 2) {
  if (dimension < 1) throw ValidationError("Krylov dimension must be >= 1");
  if (stride < 2 || stride % 2 != 0) throw ValidationError("Krylov stride must be a positive even number");
  int last = traj.step_count() - traj.step_count() % 2;
  std::vector<int> out;
  for (int k = 0; k < dimension && last >= 0; ++k, last -= stride) out.push_back(last);
  if (static_cast<int>(out.size()) < dimension) {
    throw ValidationError(fmt::format("trajectory of {} steps is too short for a {}-dimensional Krylov space",
                                      traj.step_count(), dimension));
  }
  std::reverse(out.begin(), out.end());
  return out;
}

/// Trajectory cut after `steps` steps (state snapshots and records beyond are dropped).
inline QiteTrajectory truncate(const QiteTrajectory& traj, int steps) {
  if (steps < 0 || steps > traj.step_count()) throw ValidationError("truncation beyond trajectory length");
  QiteTrajectory t = traj;
  t.steps.resize(static_cast<std::size_t>(steps) + 1);
  t.converged = false;
  t.final_energy = t.steps.back().energy;
  return t;
}


// ---------------------------------------------------------------------------
// Dissociation sweeps

struct QiteScanConfig {
  std::vector<Target> targets{kAllTargets.begin(), kAllTargets.end()};
  QiteConfig qite;
  int krylov = 2;  // Krylov dimension; <= 1 reports the final QITE energy
};

/// Initial states (reduced frame) for a target. The N_e=2 block starts from the
/// closed-shell reference |11> and from the s_z=0 triplet, which QITE cannot reach from
/// a singlet; one-qubit blocks start from the basis state of lowest diagonal energy.
inline std::vector<std::pair<std::string, StateVector>> qite_initial_states(const SectorBlock& b, Target t) {
  const StateVector triplet = (ket("10") - ket("01")) / std::sqrt(2.0);
  if (t == Target::triplet) return {{"triplet", triplet}};
  if (b.sector.n_e == 2) return {{"reference", ket("11")}, {"triplet", triplet}};
  const double sign = target_spec(t).maximize ? -1.0 : 1.0;
  const int k = sign * b.dense(0, 0) <= sign * b.dense(1, 1) ? 0 : 1;
  return {{fmt::format("basis{}", k), basis_state(static_cast<std::uint64_t>(k), b.reduced_qubits())}};
}

/// Ground estimate of one trajectory: QLanczos on the last `krylov` even steps when
/// the trajectory is long enough, otherwise the final QITE energy.
inline double qite_estimate(const QiteTrajectory& traj, int krylov, bool shots) {
  if (krylov <= 1 || traj.step_count() < 2 * (krylov - 1)) return traj.final_energy;
  const std::vector<int> idx = krylov_indices(traj, krylov);
  return qlanczos(traj, idx, 0.0, default_krylov_filter(shots)).eigenvalues[0];
}

struct QiteTargetRun {
  Cell cell;
  double sign = 1.0;  // -1 when the block was negated (max targets)
  double shift = 0.0;  // block shift: block energy = reduced energy - shift
  std::vector<QiteTrajectory> trajectories;
};

inline QiteTargetRun qite_target(const QubitHamiltonian& h, Target t, const QiteScanConfig& cfg, std::uint64_t seed) {
  QiteTargetRun run;
  Cell& cell = run.cell;
  try {
    const TargetSpec spec = target_spec(t);
    cell.exact = exact_target_energy(h, t);
    const SectorBlock b = extract_block(h, spec.sector);
    run.sign = spec.maximize ? -1.0 : 1.0;
    run.shift = b.shift;
    const PauliSum hb = run.sign * b.reduced;
    double best = std::numeric_limits<double>::infinity();
    cell.converged = true;
    for (const auto& [label, psi] : qite_initial_states(b, t)) {
      QiteConfig qc = cfg.qite;
      qc.seed = derive_seed(seed, "qite", target_spec(t).suffix, label);
      qc.keep_states = false;
      QiteTrajectory traj = run_qite(hb, psi, qc, label);
      const double e = qite_estimate(traj, cfg.krylov, qc.estimator.shots.has_value());
      cell.evaluations += traj.step_count();
      cell.converged = cell.converged && traj.converged;
      if (e < best) {
        best = e;
        cell.std_error = traj.steps.back().energy_std_error;
      }
      run.trajectories.push_back(std::move(traj));
    }
    cell.energy = b.unshift(run.sign * best);
  } catch (const std::exception& e) {
    cell.error = e.what();
  }
  return run;
}

inline Cell qite_scan_cell(const QubitHamiltonian& h, Target t, const QiteScanConfig& cfg, std::uint64_t seed) {
  return qite_target(h, t, cfg, seed).cell;
}

inline std::uint64_t qite_cell_seed(std::uint64_t global, const QubitHamiltonian& h, Target t) {
  return derive_seed(global, h.molecule, h.bond_distance, target_spec(t).suffix);
}

/// One row; cfg.qite.seed is the global seed.
inline ScanRow qite_scan_hamiltonian(const QubitHamiltonian& h, const QiteScanConfig& cfg) {
  ScanRow row;
  row.molecule = h.molecule;
  row.distance = h.bond_distance;
  for (Target t : cfg.targets) {
    row[t] = qite_scan_cell(h, t, cfg, qite_cell_seed(cfg.qite.seed, h, t));
  }
  return row;
}

inline std::string trajectory_csv_header() { return "molecule,distance,target,initial,sign,step,beta,energy,std_error"; }

/// Per-step energies of a target's runs. `energy` is <sign * H> restricted to the block,
/// in the frame of the molecular Hamiltonian (so -H runs approach minus the block maximum).
inline void write_trajectory_rows(std::ostream& out, const QubitHamiltonian& h, Target t, const QiteTargetRun& run) {
  for (const auto& traj : run.trajectories) {
    for (const auto& r : traj.steps) {
      const double block = run.sign * r.energy - run.shift;
      out << fmt::format("{},{:.6f},{},{},{},{},{:.6f},{:.12f},{:.12f}\n", detail::csv_text(h.molecule), h.bond_distance,
                         target_spec(t).suffix, traj.initial_label, run.sign > 0 ? 1 : -1, r.step, r.step * traj.delta_tau,
                         run.sign * block, r.energy_std_error);
    }
  }
}

}  // namespace qbench
