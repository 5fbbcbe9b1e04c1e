#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qbench/circuit.hpp"
#include "qbench/errors.hpp"
#include "qbench/linalg.hpp"
#include "qbench/pauli.hpp"
#include "qbench/random.hpp"

namespace qbench {

// ---------------------------------------------------------------------------
// Noise

enum class ErrorRefresh {
  per_evaluation,  // one err shared by every XX gate of a circuit execution
  per_gate,        // independent err for each XX gate
  per_shot,        // fresh per_evaluation draw for every shot
};

inline const char* to_string(ErrorRefresh r) {
  switch (r) {
    case ErrorRefresh::per_evaluation: return "per_evaluation";
    case ErrorRefresh::per_gate: return "per_gate";
    case ErrorRefresh::per_shot: return "per_shot";
  }
  return "?";
}

inline ErrorRefresh error_refresh_from_string(std::string_view s) {
  if (s == "per_evaluation") return ErrorRefresh::per_evaluation;
  if (s == "per_gate") return ErrorRefresh::per_gate;
  if (s == "per_shot") return ErrorRefresh::per_shot;
  throw ValidationError(fmt::format("unknown error refresh policy '{}'", s));
}

/// Readout flips, multiplicative XX over-rotation and optional depolarizing.
///
/// Every XX(chi) runs as XX(chi * (1 + err)) with err = over_rotation_bias +
/// over_rotation_sigma * N(0,1). CNOT and CNOT-dagger are lowered to their
/// native XX patterns whenever over-rotation is active.
struct NoiseModel {
  // p(1|0) and p(0|1) per qubit; a single entry applies to every qubit.
  std::vector<double> p1_given_0;
  std::vector<double> p0_given_1;
  double over_rotation_sigma = 0.0;
  double over_rotation_bias = 0.0;
  double depolarizing = 0.0;  // per-gate probability of a random Pauli on the gate's targets
  ErrorRefresh refresh = ErrorRefresh::per_evaluation;

  static NoiseModel readout(double p10, double p01) {
    NoiseModel m;
    m.p1_given_0 = {p10};
    m.p0_given_1 = {p01};
    return m;
  }

  double flip_up(int q) const { return pick(p1_given_0, q); }
  double flip_down(int q) const { return pick(p0_given_1, q); }

  bool has_readout_error() const {
    for (double p : p1_given_0) {
      if (p != 0.0) return true;
    }
    for (double p : p0_given_1) {
      if (p != 0.0) return true;
    }
    return false;
  }
  bool has_over_rotation() const { return over_rotation_sigma != 0.0 || over_rotation_bias != 0.0; }
  bool has_gate_noise() const { return has_over_rotation() || depolarizing != 0.0; }
  bool is_identity() const { return !has_readout_error() && !has_gate_noise(); }
  /// True when each shot needs its own statevector trajectory.
  bool needs_trajectories() const {
    return depolarizing != 0.0 || (refresh == ErrorRefresh::per_shot && over_rotation_sigma != 0.0);
  }

  void validate() const {
    auto check = [](const std::vector<double>& v, const char* name) {
      for (double p : v) {
        if (!(p >= 0.0 && p <= 1.0)) throw ValidationError(fmt::format("{} = {} outside [0,1]", name, p));
      }
    };
    check(p1_given_0, "p(1|0)");
    check(p0_given_1, "p(0|1)");
    if (!(over_rotation_sigma >= 0.0)) throw ValidationError("over-rotation sigma must be >= 0");
    if (!(depolarizing >= 0.0 && depolarizing <= 1.0)) throw ValidationError("depolarizing probability outside [0,1]");
  }

 private:
  static double pick(const std::vector<double>& v, int q) {
    if (v.empty()) return 0.0;
    if (v.size() == 1) return v[0];
    if (q >= static_cast<int>(v.size())) throw ShapeError(fmt::format("no readout rate for qubit {}", q));
    return v[static_cast<std::size_t>(q)];
  }
};

// ---------------------------------------------------------------------------
// Statevector kernels

namespace detail {

inline void apply_1q(StateVector& s, int n, int q, const Eigen::Matrix2cd& m) {
  const std::uint64_t bit = qubit_bit(q, n);
  const auto dim = static_cast<std::uint64_t>(s.size());
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & bit) continue;
    const auto i0 = static_cast<Eigen::Index>(i), i1 = static_cast<Eigen::Index>(i | bit);
    const cplx a = s[i0], b = s[i1];
    s[i0] = m(0, 0) * a + m(0, 1) * b;
    s[i1] = m(1, 0) * a + m(1, 1) * b;
  }
}

// Local index: target a is the high bit, target b the low bit.
inline void apply_2q(StateVector& s, int n, int qa, int qb, const Eigen::Matrix4cd& m) {
  const std::uint64_t ba = qubit_bit(qa, n), bb = qubit_bit(qb, n);
  const auto dim = static_cast<std::uint64_t>(s.size());
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & (ba | bb)) continue;
    const Eigen::Index idx[4] = {static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i | bb),
                                 static_cast<Eigen::Index>(i | ba), static_cast<Eigen::Index>(i | ba | bb)};
    Eigen::Vector4cd v(s[idx[0]], s[idx[1]], s[idx[2]], s[idx[3]]);
    const Eigen::Vector4cd w = m * v;
    for (int k = 0; k < 4; ++k) s[idx[k]] = w[k];
  }
}

inline void apply_kq(StateVector& s, int n, const std::vector<int>& targets, const ComplexMatrix& m) {
  const int k = static_cast<int>(targets.size());
  const std::uint64_t local_dim = dimension_of(k);
  std::vector<std::uint64_t> offsets(local_dim, 0);
  std::uint64_t mask = 0;
  for (std::uint64_t l = 0; l < local_dim; ++l) {
    for (int t = 0; t < k; ++t) {
      if (l & qubit_bit(t, k)) offsets[l] |= qubit_bit(targets[static_cast<std::size_t>(t)], n);
    }
  }
  for (int t : targets) mask |= qubit_bit(t, n);
  const auto dim = static_cast<std::uint64_t>(s.size());
  StateVector v(static_cast<Eigen::Index>(local_dim));
  for (std::uint64_t i = 0; i < dim; ++i) {
    if (i & mask) continue;
    for (std::uint64_t l = 0; l < local_dim; ++l) v[static_cast<Eigen::Index>(l)] = s[static_cast<Eigen::Index>(i | offsets[l])];
    const StateVector w = m * v;
    for (std::uint64_t l = 0; l < local_dim; ++l) s[static_cast<Eigen::Index>(i | offsets[l])] = w[static_cast<Eigen::Index>(l)];
  }
}

inline Eigen::Matrix2cd single_qubit_matrix(const Gate& g) {
  switch (g.kind) {
    case GateKind::X: return matrices::x();
    case GateKind::Z: return matrices::z();
    case GateKind::H: return matrices::h();
    case GateKind::Rx: return matrices::rx(g.angles[0].value());
    case GateKind::Ry: return matrices::ry(g.angles[0].value());
    case GateKind::Rz: return matrices::rz(g.angles[0].value());
    case GateKind::U3: return matrices::u3(g.angles[0].value(), g.angles[1].value(), g.angles[2].value());
    default: throw ValidationError(fmt::format("{} is not a single-qubit gate", gate_name(g.kind)));
  }
}

/// Applies a bound gate; `xx_factor` multiplies the angle of XX gates.
inline void apply_gate(StateVector& s, int n, const Gate& g, double xx_factor = 1.0) {
  switch (g.kind) {
    case GateKind::CNOT:
    case GateKind::CNOTdg:
      apply_2q(s, n, g.targets[0], g.targets[1], matrices::cnot());
      return;
    case GateKind::CZ: apply_2q(s, n, g.targets[0], g.targets[1], matrices::cz()); return;
    case GateKind::XX:
      apply_2q(s, n, g.targets[0], g.targets[1], matrices::xx(g.angles[0].value() * xx_factor));
      return;
    case GateKind::ASWAP:
      apply_2q(s, n, g.targets[0], g.targets[1], matrices::aswap(g.angles[0].value(), g.angles[1].value()));
      return;
    case GateKind::StatePrep: apply_kq(s, n, g.targets, *g.unitary); return;
    default: apply_1q(s, n, g.targets[0], single_qubit_matrix(g)); return;
  }
}

inline void check_initial(const StateVector& s, int n) {
  if (s.size() != static_cast<Eigen::Index>(dimension_of(n))) {
    throw ShapeError(fmt::format("initial state has dimension {}, circuit needs {}", s.size(), dimension_of(n)));
  }
}

inline void require_bound(const Circuit& c) {
  if (!c.is_bound()) {
    throw BindingError(fmt::format("circuit has {} unbound parameter slot(s)", c.parameter_count()));
  }
}

inline void apply_random_pauli(StateVector& s, int n, const std::vector<int>& targets, Rng& rng) {
  const int k = static_cast<int>(targets.size());
  std::uniform_int_distribution<std::uint64_t> pick(1, dimension_of(2 * k) - 1);
  std::uint64_t code = pick(rng);
  for (int t : targets) {
    const auto letter = static_cast<int>(code & 3U);
    code >>= 2;
    if (letter == 1) apply_1q(s, n, t, matrices::x());
    if (letter == 2) {
      Eigen::Matrix2cd y;
      y << 0, cplx(0, -1), cplx(0, 1), 0;
      apply_1q(s, n, t, y);
    }
    if (letter == 3) apply_1q(s, n, t, matrices::z());
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Execution

/// Ideal execution of a fully bound circuit.
inline StateVector run(const Circuit& circuit, const StateVector& initial) {
  detail::require_bound(circuit);
  detail::check_initial(initial, circuit.n_qubits());
  StateVector s = initial;
  for (const auto& g : circuit.gates()) detail::apply_gate(s, circuit.n_qubits(), g);
  return s;
}

inline StateVector run(const Circuit& circuit, std::string_view initial_bits) {
  if (static_cast<int>(initial_bits.size()) != circuit.n_qubits()) {
    throw ShapeError(fmt::format("initial label '{}' does not match {} qubits", initial_bits, circuit.n_qubits()));
  }
  return run(circuit, ket(initial_bits));
}

inline StateVector run(const Circuit& circuit) {
  return run(circuit, basis_state(0, circuit.n_qubits()));
}

/// Dense unitary of a bound circuit.
inline ComplexMatrix circuit_unitary(const Circuit& c) {
  detail::check_dense_cap(c.n_qubits());
  const auto dim = static_cast<Eigen::Index>(dimension_of(c.n_qubits()));
  ComplexMatrix u(dim, dim);
  for (Eigen::Index j = 0; j < dim; ++j) u.col(j) = run(c, basis_state(static_cast<std::uint64_t>(j), c.n_qubits()));
  return u;
}

/// Replaces CNOT and CNOT-dagger by their native XX-based patterns.
inline Circuit lower_entanglers(const Circuit& c) {
  Circuit out(c.n_qubits());
  for (const auto& g : c.gates()) {
    for (auto& h : ion_trap_decomposition(g)) out.add(std::move(h));
  }
  out.set_parameter_names(c.parameter_names());
  return out;
}

/// One noisy trajectory of a bound circuit. Draws come from `rng` in gate order.
inline StateVector run_trajectory(const Circuit& circuit, const StateVector& initial, const NoiseModel& noise, Rng& rng) {
  detail::require_bound(circuit);
  detail::check_initial(initial, circuit.n_qubits());
  const int n = circuit.n_qubits();
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const bool shared_draw = noise.refresh != ErrorRefresh::per_gate;
  const double shared_err =
      noise.has_over_rotation() ? noise.over_rotation_bias + noise.over_rotation_sigma * normal(rng) : 0.0;

  StateVector s = initial;
  auto apply_noisy = [&](const Gate& g) {
    double factor = 1.0;
    if (g.kind == GateKind::XX && noise.has_over_rotation()) {
      const double err = shared_draw ? shared_err : noise.over_rotation_bias + noise.over_rotation_sigma * normal(rng);
      factor = 1.0 + err;
    }
    detail::apply_gate(s, n, g, factor);
    if (noise.depolarizing > 0.0 && uniform(rng) < noise.depolarizing) detail::apply_random_pauli(s, n, g.targets, rng);
  };
  for (const auto& g : circuit.gates()) {
    if (noise.has_over_rotation() && is_entangler(g.kind)) {
      for (const auto& h : ion_trap_decomposition(g)) apply_noisy(h);
    } else {
      apply_noisy(g);
    }
  }
  return s;
}

/// Noisy execution with coherent errors; reproducible from `seed`.
inline StateVector run_noisy(const Circuit& circuit, const NoiseModel& noise, std::uint64_t seed,
                             std::optional<StateVector> initial = std::nullopt) {
  noise.validate();
  Rng rng(seed);
  return run_trajectory(circuit, initial ? *initial : basis_state(0, circuit.n_qubits()), noise, rng);
}

// ---------------------------------------------------------------------------
// Sampling

/// Outcome distribution after the independent per-qubit readout channel.
inline std::vector<double> apply_readout_channel(std::vector<double> probs, int n, const NoiseModel& noise) {
  if (!noise.has_readout_error()) return probs;
  for (int q = 0; q < n; ++q) {
    const double up = noise.flip_up(q), down = noise.flip_down(q);
    const std::uint64_t bit = qubit_bit(q, n);
    for (std::uint64_t i = 0; i < probs.size(); ++i) {
      if (i & bit) continue;
      const double p0 = probs[i], p1 = probs[i | bit];
      probs[i] = (1.0 - up) * p0 + down * p1;
      probs[i | bit] = up * p0 + (1.0 - down) * p1;
    }
  }
  return probs;
}

inline std::vector<double> probabilities(const StateVector& s) {
  std::vector<double> p(static_cast<std::size_t>(s.size()));
  for (Eigen::Index i = 0; i < s.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(s[i]);
  return p;
}

/// Multinomial draw over `probs` via sequential binomials.
inline std::vector<std::int64_t> multinomial(const std::vector<double>& probs, std::int64_t shots, Rng& rng) {
  std::vector<std::int64_t> counts(probs.size(), 0);
  double remaining_mass = 0.0;
  for (double p : probs) remaining_mass += p;
  std::int64_t remaining = shots;
  for (std::size_t i = 0; i < probs.size() && remaining > 0; ++i) {
    if (i + 1 == probs.size()) {
      counts[i] = remaining;
      break;
    }
    const double p = remaining_mass > 0.0 ? std::clamp(probs[i] / remaining_mass, 0.0, 1.0) : 0.0;
    std::binomial_distribution<std::int64_t> draw(remaining, p);
    counts[i] = p > 0.0 ? draw(rng) : 0;
    remaining -= counts[i];
    remaining_mass -= probs[i];
  }
  return counts;
}

inline std::int64_t sample_index(const std::vector<double>& probs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double r = u(rng), acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (r < acc) return static_cast<std::int64_t>(i);
  }
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return static_cast<std::int64_t>(i);
  }
  return 0;
}

/// Outcome counts indexed by basis index, with readout flips.
inline std::vector<std::int64_t> sample_count_vector(const Circuit& circuit, std::int64_t shots, const NoiseModel& noise,
                                                     std::uint64_t seed,
                                                     std::optional<StateVector> initial = std::nullopt) {
  if (shots < 1) throw ValidationError("shots must be >= 1");
  noise.validate();
  const int n = circuit.n_qubits();
  const StateVector start = initial ? *initial : basis_state(0, n);
  Rng rng(seed);
  if (!noise.needs_trajectories()) {
    const StateVector s = run_trajectory(circuit, start, noise, rng);
    return multinomial(apply_readout_channel(probabilities(s), n, noise), shots, rng);
  }
  std::vector<std::int64_t> counts(dimension_of(n), 0);
  for (std::int64_t k = 0; k < shots; ++k) {
    const StateVector s = run_trajectory(circuit, start, noise, rng);
    ++counts[static_cast<std::size_t>(sample_index(apply_readout_channel(probabilities(s), n, noise), rng))];
  }
  return counts;
}

using Counts = std::map<std::string, std::int64_t>;

/// Bitstring histogram (only observed outcomes are present).
inline Counts sample_counts(const Circuit& circuit, std::int64_t shots, const NoiseModel& noise, std::uint64_t seed) {
  const auto v = sample_count_vector(circuit, shots, noise, seed);
  Counts out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] > 0) out[format_bits(i, circuit.n_qubits())] = v[i];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Energy estimation

using Shots = std::optional<std::int64_t>;  // nullopt = exact expectation
inline constexpr Shots kExact = std::nullopt;

struct EnergyEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  Shots shots = kExact;

  bool exact() const { return !shots.has_value(); }
};

/// Maps raw counts (indexed by basis index) of a measured register to a quasi-distribution.
/// Must be linear in the normalized counts (as confusion-matrix inversion is).
using CountCorrection = std::function<std::vector<double>(const std::vector<std::int64_t>&)>;

struct EstimatorConfig {
  Shots shots = kExact;
  NoiseModel noise;
  CountCorrection correction;  // e.g. readout-error inversion; empty = raw frequencies
};

/// Qubit-wise commuting measurement groups: each group shares one basis string.
struct MeasurementGroup {
  PauliString basis;
  std::vector<std::pair<PauliString, double>> terms;
};

inline std::vector<MeasurementGroup> group_qubitwise(const PauliSum& h) {
  std::vector<MeasurementGroup> groups;
  for (const auto& [p, c] : h.terms()) {
    if (p.weight() == 0) continue;
    bool placed = false;
    for (auto& g : groups) {
      bool ok = true;
      for (int q = 0; q < p.size() && ok; ++q) {
        ok = p[q] == Pauli::I || g.basis[q] == Pauli::I || g.basis[q] == p[q];
      }
      if (!ok) continue;
      for (int q = 0; q < p.size(); ++q) {
        if (p[q] != Pauli::I) g.basis.set(q, p[q]);
      }
      g.terms.emplace_back(p, c);
      placed = true;
      break;
    }
    if (!placed) groups.push_back({p, {{p, c}}});
  }
  return groups;
}

/// Rotation into the computational basis: H for X, Rx(pi/2) for Y.
inline Circuit basis_rotation(const PauliString& basis) {
  Circuit c(basis.size());
  for (int q = 0; q < basis.size(); ++q) {
    if (basis[q] == Pauli::X) c.add(gates::h(q));
    if (basis[q] == Pauli::Y) c.add(gates::rx(q, kPi / 2));
  }
  return c;
}

/// Sum over outcomes of dist[i] * (-1)^{popcount(i & support)}.
inline double parity_expectation(const std::vector<double>& dist, std::uint64_t support) {
  double acc = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) acc += (std::popcount(i & support) & 1) ? -dist[i] : dist[i];
  return acc;
}

inline EnergyEstimate estimate_energy(const Circuit& circuit, const PauliSum& h, const EstimatorConfig& cfg,
                                      std::uint64_t seed, std::optional<StateVector> initial = std::nullopt) {
  if (h.n_qubits() != circuit.n_qubits()) {
    throw ShapeError(fmt::format("Hamiltonian has {} qubits, circuit {}", h.n_qubits(), circuit.n_qubits()));
  }
  cfg.noise.validate();
  const int n = circuit.n_qubits();
  const StateVector start = initial ? *initial : basis_state(0, n);
  if (!cfg.shots) {
    const StateVector s = cfg.noise.has_gate_noise() ? run_noisy(circuit, cfg.noise, seed, start) : run(circuit, start);
    return {expectation(s, h), 0.0, kExact};
  }
  const std::int64_t shots = *cfg.shots;
  if (shots < 1) throw ValidationError("shots must be >= 1");

  Rng rng(seed);
  // One noisy execution per evaluation unless each shot is its own trajectory.
  std::optional<StateVector> prepared;
  if (!cfg.noise.needs_trajectories()) prepared = run_trajectory(circuit, start, cfg.noise, rng);

  double mean = h.identity_coefficient();
  double variance = 0.0;
  for (const auto& group : group_qubitwise(h)) {
    const Circuit rot = basis_rotation(group.basis);
    std::vector<std::int64_t> counts;
    if (prepared) {
      const StateVector s = run(rot, *prepared);
      counts = multinomial(apply_readout_channel(probabilities(s), n, cfg.noise), shots, rng);
    } else {
      counts.assign(dimension_of(n), 0);
      for (std::int64_t k = 0; k < shots; ++k) {
        const StateVector s = run(rot, run_trajectory(circuit, start, cfg.noise, rng));
        ++counts[static_cast<std::size_t>(sample_index(apply_readout_channel(probabilities(s), n, cfg.noise), rng))];
      }
    }
    // Per-outcome value of the group observable. With a correction, the value
    // attributed to raw outcome j is the observable averaged over correction(e_j),
    // so the variance below is that of the corrected estimator.
    const std::size_t dim = counts.size();
    std::vector<double> value(dim, 0.0);
    auto observable = [&](std::size_t i) {
      double o = 0.0;
      for (const auto& [p, c] : group.terms) o += (std::popcount(i & p.support_mask()) & 1) ? -c : c;
      return o;
    };
    std::vector<double> raw_value(dim);
    for (std::size_t i = 0; i < dim; ++i) raw_value[i] = observable(i);
    if (cfg.correction) {
      std::vector<std::int64_t> unit(dim, 0);
      for (std::size_t j = 0; j < dim; ++j) {
        unit[j] = 1;
        const std::vector<double> q = cfg.correction(unit);
        unit[j] = 0;
        for (std::size_t i = 0; i < dim; ++i) value[j] += q[i] * raw_value[i];
      }
    } else {
      value = raw_value;
    }
    double g_mean = 0.0, g_square = 0.0;
    for (std::size_t j = 0; j < dim; ++j) {
      if (counts[j] == 0) continue;
      const double f = static_cast<double>(counts[j]) / static_cast<double>(shots);
      g_mean += f * value[j];
      g_square += f * value[j] * value[j];
    }
    mean += g_mean;
    variance += std::max(0.0, g_square - g_mean * g_mean) / static_cast<double>(shots);
  }
  return {mean, std::sqrt(variance), shots};
}

}  // namespace qbench
