#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <json.hpp>

#include "qbench/errors.hpp"
#include "qbench/linalg.hpp"
#include "qbench/pauli.hpp"
#include "qbench/random.hpp"

namespace qbench {

/// Electron number and spin projection. s_z is stored doubled so half-integers compare exactly.
struct SymmetrySector {
  int n_e = 0;
  int two_sz = 0;
  std::optional<int> two_s;  // 2S when the eigenvector has a definite total spin

  static SymmetrySector make(int n_e, double s_z) { return {n_e, static_cast<int>(std::lround(2 * s_z)), {}}; }
  double s_z() const { return two_sz / 2.0; }

  std::string label() const {
    std::string s = fmt::format("Ne={},sz={}", n_e, s_z());
    if (two_s) s += fmt::format(",s={}", *two_s / 2.0);
    return s;
  }
  auto operator<=>(const SymmetrySector&) const = default;
};

/// Sector of a 4-bit occupation string: first two bits spin-up, last two spin-down.
inline SymmetrySector sector_of(std::string_view bits) {
  if (bits.size() != 4) throw ShapeError(fmt::format("sector_of expects 4 bits, got '{}'", bits));
  const std::uint64_t i = parse_bits(bits);
  const int up = std::popcount(i >> 2), down = std::popcount(i & 3U);
  return {up + down, up - down, {}};
}

/// Every nonempty (n_e, s_z) sector of the 4-qubit register, ordered by n_e then descending s_z.
inline std::vector<SymmetrySector> all_sectors() {
  return {SymmetrySector::make(0, 0),    SymmetrySector::make(1, 0.5),  SymmetrySector::make(1, -0.5),
          SymmetrySector::make(2, 1),    SymmetrySector::make(2, 0),    SymmetrySector::make(2, -1),
          SymmetrySector::make(3, 0.5),  SymmetrySector::make(3, -0.5), SymmetrySector::make(4, 0)};
}

/// Basis strings of a sector in lexicographic order.
inline std::vector<std::string> sector_basis(const SymmetrySector& s) {
  std::vector<std::string> out;
  for (std::uint64_t i = 0; i < 16; ++i) {
    const std::string b = format_bits(i, 4);
    const SymmetrySector t = sector_of(b);
    if (t.n_e == s.n_e && t.two_sz == s.two_sz) out.push_back(b);
  }
  return out;
}

/// (|1001> - |0110>)/sqrt2.
inline StateVector triplet_state() { return (ket("1001") - ket("0110")) / std::sqrt(2.0); }

/// Number operator sum_i (I - Z_i)/2.
inline PauliSum number_operator(int n_qubits) {
  PauliSum n(n_qubits);
  for (int q = 0; q < n_qubits; ++q) {
    PauliString z = PauliString::identity(n_qubits);
    z.set(q, Pauli::Z);
    n.add(PauliString::identity(n_qubits), 0.5).add(z, -0.5);
  }
  return n;
}

/// S_z with the first half of the register spin-up.
inline PauliSum sz_operator(int n_qubits) {
  PauliSum s(n_qubits);
  for (int q = 0; q < n_qubits; ++q) {
    PauliString z = PauliString::identity(n_qubits);
    z.set(q, Pauli::Z);
    s.add(z, q < n_qubits / 2 ? -0.25 : 0.25);
  }
  return s;
}

struct QubitHamiltonian {
  std::string molecule;
  double bond_distance = 0.0;  // Angstrom
  int n_qubits = 4;
  PauliSum terms{4};
  std::string basis = "sto-3g";
  std::string provenance;
};

namespace detail {

// Charge carried by a basis index under a diagonal quantity (electron count or 2*s_z).
inline int charge(std::uint64_t i, int n, bool spin) {
  int c = 0;
  for (int q = 0; q < n; ++q) {
    if (!(i & qubit_bit(q, n))) continue;
    c += spin ? (q < n / 2 ? 1 : -1) : 1;
  }
  return c;
}

// Finds a term whose flip pattern changes the given charge; empty when conserved.
inline std::optional<PauliString> charge_violation(const PauliSum& h, bool spin) {
  const int n = h.n_qubits();
  std::map<std::uint64_t, std::vector<std::pair<PauliString, double>>> by_flip;
  for (const auto& [p, c] : h.terms()) by_flip[p.x_mask()].emplace_back(p, c);
  for (const auto& [x, group] : by_flip) {
    if (x == 0) continue;
    for (std::uint64_t i = 0; i < dimension_of(n); ++i) {
      if (charge(i, n, spin) == charge(i ^ x, n, spin)) continue;
      cplx amp = 0;
      for (const auto& [p, c] : group) amp += c * basis_phase(p, i);
      if (std::abs(amp) > 1e-10) {
        auto worst = std::max_element(group.begin(), group.end(),
                                      [](const auto& a, const auto& b) { return std::abs(a.second) < std::abs(b.second); });
        return worst->first;
      }
    }
  }
  return std::nullopt;
}

}  // namespace detail

/// Checks real symmetry and conservation of N and S_z; throws SchemaError naming the offending term.
inline void validate(const QubitHamiltonian& h) {
  if (h.n_qubits != 4) throw SchemaError(fmt::format("expected 4 qubits, got {}", h.n_qubits));
  if (h.terms.n_qubits() != h.n_qubits) throw SchemaError("term length does not match n_qubits");
  for (const auto& [p, c] : h.terms.terms()) {
    if (p.y_parity()) throw SchemaError(fmt::format("term '{}' has an odd number of Y letters (not real symmetric)", p.str()));
    if (!std::isfinite(c)) throw SchemaError(fmt::format("term '{}' has a non-finite coefficient", p.str()));
  }
  if (auto bad = detail::charge_violation(h.terms, false)) {
    throw SchemaError(fmt::format("term '{}' breaks particle-number conservation", bad->str()));
  }
  if (auto bad = detail::charge_violation(h.terms, true)) {
    throw SchemaError(fmt::format("term '{}' breaks S_z conservation", bad->str()));
  }
  // Belt and braces: dense commutators.
  const ComplexMatrix m = dense_matrix(h.terms);
  for (const PauliSum& op : {number_operator(4), sz_operator(4)}) {
    const ComplexMatrix o = dense_matrix(op);
    if ((m * o - o * m).cwiseAbs().maxCoeff() > 1e-10) throw SchemaError("Hamiltonian does not commute with a symmetry operator");
  }
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const QubitHamiltonian& h) {
  nlohmann::json j;
  j["molecule"] = h.molecule;
  j["bond_distance_angstrom"] = h.bond_distance;
  j["n_qubits"] = h.n_qubits;
  j["basis"] = h.basis;
  auto terms = nlohmann::json::array();
  for (const auto& [p, c] : h.terms.terms()) terms.push_back({{"pauli", p.str()}, {"coeff", c}});
  j["terms"] = terms;
  j["provenance"] = h.provenance;
  return j;
}

inline QubitHamiltonian from_json(const nlohmann::json& j) {
  auto require = [&](const char* key) -> const nlohmann::json& {
    if (!j.contains(key)) throw SchemaError(fmt::format("missing field '{}'", key));
    return j.at(key);
  };
  QubitHamiltonian h;
  try {
    h.molecule = require("molecule").get<std::string>();
    h.bond_distance = require("bond_distance_angstrom").get<double>();
    h.n_qubits = require("n_qubits").get<int>();
    h.provenance = require("provenance").get<std::string>();
    if (j.contains("basis")) h.basis = j.at("basis").get<std::string>();
    const auto& terms = require("terms");
    if (!terms.is_array()) throw SchemaError("'terms' must be an array");
    if (h.n_qubits < 1 || h.n_qubits > kMaxDenseQubits) throw SchemaError(fmt::format("unsupported n_qubits {}", h.n_qubits));
    h.terms = PauliSum(h.n_qubits);
    for (const auto& t : terms) {
      const auto letters = t.at("pauli").get<std::string>();
      if (static_cast<int>(letters.size()) != h.n_qubits) {
        throw SchemaError(fmt::format("term '{}' has {} letters, expected {}", letters, letters.size(), h.n_qubits));
      }
      h.terms.add(PauliString(letters), t.at("coeff").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("malformed Hamiltonian JSON: {}", e.what()));
  } catch (const ValidationError& e) {
    throw SchemaError(e.what());
  }
  validate(h);
  return h;
}

inline QubitHamiltonian load_hamiltonian(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open '{}'", path.string()));
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(fmt::format("{}: {}", path.string(), e.what()));
  }
  return from_json(j);
}

inline void save_hamiltonian(const QubitHamiltonian& h, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError(fmt::format("cannot write '{}'", path.string()));
  out << to_json(h).dump(2) << '\n';
}

/// *.json files of a directory in sorted order.
inline std::vector<std::filesystem::path> list_hamiltonian_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError(fmt::format("'{}' is not a directory", dir.string()));
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Blocks and spectra

inline RealMatrix real_matrix(const PauliSum& h) {
  const ComplexMatrix m = dense_matrix(h);
  if (m.imag().cwiseAbs().maxCoeff() > 1e-12) throw ValidationError("operator is not real");
  return m.real();
}

struct SectorBlock {
  SymmetrySector sector;
  std::vector<std::string> basis;
  RealMatrix dense;
  PauliSum reduced;     // on log2(padded dim) qubits
  double shift = 0.0;   // reduced = dense + shift * I (plus padding)
  int padding = 0;      // number of padded diagonal states

  int dim() const { return static_cast<int>(basis.size()); }
  int reduced_qubits() const { return reduced.n_qubits(); }
  /// Energy in the original frame from an energy of `reduced`.
  double unshift(double e) const { return e - shift; }
};

inline RealMatrix project(const RealMatrix& full, const std::vector<std::string>& basis) {
  const auto d = static_cast<Eigen::Index>(basis.size());
  RealMatrix m(d, d);
  for (Eigen::Index a = 0; a < d; ++a) {
    for (Eigen::Index b = 0; b < d; ++b) {
      m(a, b) = full(static_cast<Eigen::Index>(parse_bits(basis[static_cast<std::size_t>(a)])),
                     static_cast<Eigen::Index>(parse_bits(basis[static_cast<std::size_t>(b)])));
    }
  }
  return m;
}

/// Projects h onto a sector and reduces the (traceless-shifted) block to Pauli form.
inline SectorBlock extract_block(const QubitHamiltonian& h, const SymmetrySector& sector) {
  SectorBlock b;
  b.sector = sector;
  b.basis = sector_basis(sector);
  if (b.basis.empty()) throw ValidationError(fmt::format("sector {} is empty", sector.label()));
  b.dense = project(real_matrix(h.terms), b.basis);
  const int d = b.dim();
  b.shift = -b.dense.trace() / d;
  if (d == 1) {
    b.reduced = PauliSum(0);  // the shifted scalar is identically zero
    return b;
  }
  int nq = 0;
  while ((1 << nq) < d) ++nq;
  const int padded = 1 << nq;
  b.padding = padded - d;
  RealMatrix m = RealMatrix::Zero(padded, padded);
  m.topLeftCorner(d, d) = b.dense + b.shift * RealMatrix::Identity(d, d);
  if (b.padding > 0) {
    const double top = Eigen::SelfAdjointEigenSolver<RealMatrix>(m.topLeftCorner(d, d)).eigenvalues().maxCoeff();
    for (int k = d; k < padded; ++k) m(k, k) = top + 10.0;
  }
  b.reduced = decompose_hermitian(m, nq);
  return b;
}

/// The sector basis state occupying reduced index k (row k of the block).
inline StateVector embed_block_state(const SectorBlock& b, const StateVector& reduced) {
  StateVector full = StateVector::Zero(16);
  for (int k = 0; k < b.dim(); ++k) full[static_cast<Eigen::Index>(parse_bits(b.basis[static_cast<std::size_t>(k)]))] = reduced[k];
  return full;
}

struct Spectrum {
  RealVector eigenvalues;  // ascending
  RealMatrix eigenvectors;
  std::vector<SymmetrySector> sectors;  // empty unless labeled
};

inline Spectrum exact_spectrum(const RealMatrix& m) {
  Eigen::SelfAdjointEigenSolver<RealMatrix> es(m);
  if (es.info() != Eigen::Success) throw NumericalError("eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors(), {}};
}

inline Spectrum exact_spectrum(const PauliSum& h) { return exact_spectrum(real_matrix(h)); }

inline Spectrum exact_spectrum(const SectorBlock& b) { return exact_spectrum(b.dense); }

/// Full 16-state spectrum. Each sector block is diagonalized separately so that
/// degenerate states in different sectors never mix; labels come from the
/// basis state of largest amplitude (first in lexicographic order on ties).
inline Spectrum exact_spectrum(const QubitHamiltonian& h) {
  const RealMatrix full = real_matrix(h.terms);
  std::vector<std::pair<double, RealVector>> pairs;
  for (const auto& s : all_sectors()) {
    const auto basis = sector_basis(s);
    Spectrum block = exact_spectrum(project(full, basis));
    for (Eigen::Index k = 0; k < block.eigenvalues.size(); ++k) {
      RealVector v = RealVector::Zero(16);
      for (std::size_t a = 0; a < basis.size(); ++a) {
        v[static_cast<Eigen::Index>(parse_bits(basis[a]))] = block.eigenvectors(static_cast<Eigen::Index>(a), k);
      }
      pairs.emplace_back(block.eigenvalues[k], v);
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  Spectrum out;
  out.eigenvalues.resize(16);
  out.eigenvectors.resize(16, 16);
  for (int k = 0; k < 16; ++k) {
    out.eigenvalues[k] = pairs[static_cast<std::size_t>(k)].first;
    out.eigenvectors.col(k) = pairs[static_cast<std::size_t>(k)].second;
    Eigen::Index arg = 0;
    const RealVector& v = pairs[static_cast<std::size_t>(k)].second;
    for (Eigen::Index i = 1; i < 16; ++i) {
      if (std::abs(v[i]) > std::abs(v[arg]) + 1e-12) arg = i;
    }
    SymmetrySector s = sector_of(format_bits(static_cast<std::uint64_t>(arg), 4));
    if (s.n_e == 2 && s.two_sz == 0) {
      const double t = std::abs(v.dot(triplet_state().real()));
      if (t > 1.0 - 1e-8) s.two_s = 2;
      if (t < 1e-8) s.two_s = 0;
    } else {
      s.two_s = s.n_e % 2 == 1 ? 1 : std::abs(s.two_sz);  // only one spin multiplet fits these sectors
    }
    out.sectors.push_back(s);
    const double residual = (full * v - pairs[static_cast<std::size_t>(k)].first * v).norm();
    if (residual > 1e-9) throw NumericalError(fmt::format("eigenpair residual {:.3g} too large", residual));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic molecular Hamiltonians

/// Parameters of a synthetic HOMO/LUMO-like Hamiltonian, assembled block by block.
struct MolecularModel {
  double offset = -7.8;               // identity coefficient (core energy)
  std::map<int, double> sector_base;  // per electron count
  double diag_spread = 0.3;
  double coupling = 0.05;
  bool spin_adapted = true;  // mirrored s_z blocks identical and an exact s_z=0 triplet
  std::uint64_t seed = 0;
};

namespace detail {

inline RealMatrix random_block(int d, double base, double spread, double coupling, Rng& rng) {
  std::uniform_real_distribution<double> u(-spread, spread);
  std::normal_distribution<double> g(0.0, coupling);
  RealMatrix m(d, d);
  for (int i = 0; i < d; ++i) {
    m(i, i) = base + u(rng);
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i) = g(rng);
  }
  return m;
}

// Bit pattern with spin-up and spin-down halves exchanged.
inline std::string mirror_spin(const std::string& b) { return b.substr(2) + b.substr(0, 2); }

}  // namespace detail

inline RealMatrix molecular_matrix(const MolecularModel& model) {
  Rng rng(derive_seed(model.seed, "molecular-model"));
  RealMatrix full = RealMatrix::Zero(16, 16);
  auto base = [&](int n_e) {
    auto it = model.sector_base.find(n_e);
    return it == model.sector_base.end() ? 0.5 * std::abs(n_e - 2) : it->second;
  };
  auto place = [&](const std::vector<std::string>& basis, const RealMatrix& m) {
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        full(static_cast<Eigen::Index>(parse_bits(basis[a])), static_cast<Eigen::Index>(parse_bits(basis[b]))) =
            m(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      }
    }
  };
  for (const auto& s : all_sectors()) {
    const auto basis = sector_basis(s);
    const int d = static_cast<int>(basis.size());
    if (model.spin_adapted && s.n_e == 2 && s.two_sz != -2) {
      if (s.two_sz == 2) continue;  // triplet components are placed with s_z = 0
      // Singlets {|1010>, |0101>, (|1001>+|0110>)/sqrt2} plus the triplet.
      const RealMatrix singlet = detail::random_block(3, base(2), model.diag_spread, model.coupling, rng);
      const double e_t = base(2) + std::uniform_real_distribution<double>(-model.diag_spread, model.diag_spread)(rng);
      RealMatrix u = RealMatrix::Zero(4, 4);  // columns in basis [0101, 0110, 1001, 1010]
      const double r = 1.0 / std::sqrt(2.0);
      u(3, 0) = 1.0;
      u(0, 1) = 1.0;
      u(1, 2) = r;
      u(2, 2) = r;
      u(1, 3) = -r;
      u(2, 3) = r;
      RealMatrix d4 = RealMatrix::Zero(4, 4);
      d4.topLeftCorner(3, 3) = singlet;
      d4(3, 3) = e_t;
      place(basis, u * d4 * u.transpose());
      place(sector_basis(SymmetrySector::make(2, 1)), RealMatrix::Constant(1, 1, e_t));
      place(sector_basis(SymmetrySector::make(2, -1)), RealMatrix::Constant(1, 1, e_t));
      continue;
    }
    if (model.spin_adapted && s.two_sz < 0 && s.n_e != 2) {
      // Copy of the mirrored block.
      std::vector<std::string> mirrored;
      for (const auto& b : basis) mirrored.push_back(detail::mirror_spin(b));
      place(basis, project(full, mirrored));
      continue;
    }
    if (model.spin_adapted && s.n_e == 2) continue;
    place(basis, detail::random_block(d, base(s.n_e), model.diag_spread, model.coupling, rng));
  }
  return full + model.offset * RealMatrix::Identity(16, 16);
}

inline QubitHamiltonian hamiltonian_from_matrix(const RealMatrix& m, std::string molecule, double distance,
                                                std::string provenance) {
  QubitHamiltonian h;
  h.molecule = std::move(molecule);
  h.bond_distance = distance;
  h.n_qubits = 4;
  h.terms = decompose_hermitian(m, 4);
  h.provenance = std::move(provenance);
  h.basis = "synthetic";
  return h;
}

/// Random block-structured Hamiltonian with chemistry-like scales. With
/// `spin_adapted`, the s_z=0 triplet is an exact eigenvector.
inline QubitHamiltonian random_molecular_hamiltonian(std::uint64_t seed, bool spin_adapted = true) {
  Rng rng(derive_seed(seed, "random-molecule"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MolecularModel model;
  model.seed = seed;
  model.spin_adapted = spin_adapted;
  model.offset = -7.8 + 0.4 * (u(rng) - 0.5);
  model.sector_base = {{0, 0.9 + 0.3 * u(rng)}, {1, 0.25 + 0.2 * u(rng)}, {2, 0.0},
                       {3, 0.45 + 0.3 * u(rng)}, {4, 1.4 + 0.4 * u(rng)}};
  model.coupling = 0.03 + 0.05 * u(rng);
  QubitHamiltonian h = hamiltonian_from_matrix(molecular_matrix(model), fmt::format("random-{}", seed), 0.0,
                                               fmt::format("random_molecular_hamiltonian(seed={})", seed));
  validate(h);
  return h;
}

/// Smooth one-parameter family mimicking a dissociation curve.
inline QubitHamiltonian synthetic_dissociation_point(std::uint64_t seed, double distance, const std::string& name) {
  Rng rng(derive_seed(seed, "family"));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r0 = 1.2 + 0.8 * u(rng), depth = 0.08 + 0.05 * u(rng), width = 1.0 + 0.5 * u(rng);
  const double morse = depth * std::pow(1.0 - std::exp(-width * (distance - r0)), 2.0) - depth;
  const double t = 1.0 / (1.0 + std::exp(-2.0 * (distance - r0)));  // 0 near bound, 1 when stretched
  MolecularModel near, far;
  near.seed = far.seed = derive_seed(seed, "blocks");
  near.sector_base = {{0, 1.0}, {1, 0.35}, {2, 0.0}, {3, 0.6}, {4, 1.6}};
  far.sector_base = {{0, 0.7}, {1, 0.15}, {2, 0.0}, {3, 0.3}, {4, 1.1}};
  MolecularModel far_blocks = far;
  far_blocks.seed = derive_seed(seed, "blocks-far");
  near.offset = far_blocks.offset = 0.0;
  const RealMatrix blend = (1.0 - t) * molecular_matrix(near) + t * molecular_matrix(far_blocks);
  const double core = -7.8 - 0.3 * u(rng) + morse;
  RealMatrix m = blend + core * RealMatrix::Identity(16, 16);
  QubitHamiltonian h = hamiltonian_from_matrix(m, name, distance,
                                               fmt::format("synthetic_dissociation_point(seed={}, distance={})", seed, distance));
  validate(h);
  return h;
}

}  // namespace qbench
