#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "qbench/linalg.hpp"

namespace qbench {

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char to_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

inline Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw ValidationError(std::string("invalid Pauli letter '") + c + "'");
  }
}

/// Tensor product of single-qubit Paulis; letter 0 acts on qubit 0.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::string_view letters) {
    letters_.reserve(letters.size());
    for (char c : letters) letters_.push_back(pauli_from_char(c));
  }
  static PauliString identity(int n_qubits) {
    PauliString p;
    p.letters_.assign(static_cast<std::size_t>(n_qubits), Pauli::I);
    return p;
  }

  int size() const { return static_cast<int>(letters_.size()); }
  Pauli operator[](int q) const { return letters_[static_cast<std::size_t>(q)]; }
  void set(int q, Pauli p) { letters_[static_cast<std::size_t>(q)] = p; }

  std::string str() const {
    std::string s;
    s.reserve(letters_.size());
    for (Pauli p : letters_) s.push_back(to_char(p));
    return s;
  }

  int y_count() const {
    int n = 0;
    for (Pauli p : letters_) n += (p == Pauli::Y);
    return n;
  }
  /// 0 when the dense matrix is real, 1 when it is purely imaginary.
  int y_parity() const { return y_count() & 1; }
  int weight() const {
    int n = 0;
    for (Pauli p : letters_) n += (p != Pauli::I);
    return n;
  }
  bool is_identity() const { return weight() == 0; }

  /// Bits flipped by the string (X or Y positions).
  std::uint64_t x_mask() const {
    std::uint64_t m = 0;
    for (int q = 0; q < size(); ++q) {
      Pauli p = (*this)[q];
      if (p == Pauli::X || p == Pauli::Y) m |= qubit_bit(q, size());
    }
    return m;
  }
  /// Bits that pick up a sign (Y or Z positions).
  std::uint64_t z_mask() const {
    std::uint64_t m = 0;
    for (int q = 0; q < size(); ++q) {
      Pauli p = (*this)[q];
      if (p == Pauli::Y || p == Pauli::Z) m |= qubit_bit(q, size());
    }
    return m;
  }
  /// Non-identity positions.
  std::uint64_t support_mask() const { return x_mask() | z_mask(); }

  auto operator<=>(const PauliString&) const = default;
  bool operator==(const PauliString&) const = default;

 private:
  std::vector<Pauli> letters_;
};

namespace detail {

// Single-qubit product table: a*b = phase * result.
struct LetterProduct {
  cplx phase;
  Pauli result;
};

inline LetterProduct letter_product(Pauli a, Pauli b) {
  static const std::array<std::array<LetterProduct, 4>, 4> table = [] {
    const cplx one{1, 0}, i{0, 1};
    std::array<std::array<LetterProduct, 4>, 4> t{};
    for (int k = 0; k < 4; ++k) {
      t[0][k] = {one, static_cast<Pauli>(k)};
      t[k][0] = {one, static_cast<Pauli>(k)};
      t[k][k] = {one, Pauli::I};
    }
    t[1][2] = {i, Pauli::Z};   // XY = iZ
    t[2][1] = {-i, Pauli::Z};  // YX = -iZ
    t[2][3] = {i, Pauli::X};   // YZ = iX
    t[3][2] = {-i, Pauli::X};
    t[3][1] = {i, Pauli::Y};   // ZX = iY
    t[1][3] = {-i, Pauli::Y};
    return t;
  }();
  return table[static_cast<int>(a)][static_cast<int>(b)];
}

inline cplx i_power(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

inline void check_dense_cap(int n_qubits) {
  if (n_qubits > kMaxDenseQubits) {
    throw CapacityError(fmt::format("{} qubits exceeds the dense cap of {}", n_qubits, kMaxDenseQubits));
  }
}

}  // namespace detail

struct PauliProduct {
  cplx phase;
  PauliString result;
};

/// a * b as phase * string (matrix-product order).
inline PauliProduct multiply(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size()) throw ShapeError("multiply: Pauli strings of different length");
  PauliProduct out{cplx{1, 0}, PauliString::identity(a.size())};
  for (int q = 0; q < a.size(); ++q) {
    auto lp = detail::letter_product(a[q], b[q]);
    out.phase *= lp.phase;
    out.result.set(q, lp.result);
  }
  return out;
}

/// Amplitude picked up by basis state |index> under p: p|index> = phase |index ^ x_mask>.
inline cplx basis_phase(const PauliString& p, std::uint64_t index) {
  const int sign = std::popcount(index & p.z_mask()) & 1;
  cplx ph = detail::i_power(p.y_count());
  return sign ? -ph : ph;
}

/// Dense 2^n x 2^n realization; qubit 0 is the leftmost Kronecker factor.
inline ComplexMatrix dense_matrix(const PauliString& p) {
  detail::check_dense_cap(p.size());
  const auto dim = static_cast<Eigen::Index>(dimension_of(p.size()));
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  const std::uint64_t x = p.x_mask();
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
    m(static_cast<Eigen::Index>(i ^ x), static_cast<Eigen::Index>(i)) = basis_phase(p, i);
  }
  return m;
}

/// p|state>.
inline StateVector apply(const PauliString& p, const StateVector& state) {
  if (state.size() != static_cast<Eigen::Index>(dimension_of(p.size()))) {
    throw ShapeError("apply: state dimension does not match Pauli string length");
  }
  StateVector out(state.size());
  const std::uint64_t x = p.x_mask();
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(state.size()); ++i) {
    out[static_cast<Eigen::Index>(i ^ x)] = basis_phase(p, i) * state[static_cast<Eigen::Index>(i)];
  }
  return out;
}

/// <state| p |state> (complex in general; real for Hermitian p).
inline cplx pauli_expectation(const StateVector& state, const PauliString& p) {
  if (state.size() != static_cast<Eigen::Index>(dimension_of(p.size()))) {
    throw ShapeError("expectation: state dimension does not match Pauli string length");
  }
  const std::uint64_t x = p.x_mask();
  cplx acc{0, 0};
  for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(state.size()); ++i) {
    acc += std::conj(state[static_cast<Eigen::Index>(i ^ x)]) * basis_phase(p, i) *
           state[static_cast<Eigen::Index>(i)];
  }
  return acc;
}

/// Real-coefficient sum of Pauli strings on a fixed register.
class PauliSum {
 public:
  static constexpr double kPruneThreshold = 1e-12;

  explicit PauliSum(int n_qubits = 0) : n_qubits_(n_qubits) {}

  int n_qubits() const { return n_qubits_; }
  const std::map<PauliString, double>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Merges coeff into the term for p; the term disappears when it cancels.
  PauliSum& add(const PauliString& p, double coeff) {
    if (p.size() != n_qubits_) {
      throw ShapeError(fmt::format("term '{}' has {} letters, expected {}", p.str(), p.size(), n_qubits_));
    }
    double& c = terms_[p];
    c += coeff;
    if (std::abs(c) < kPruneThreshold) terms_.erase(p);
    return *this;
  }
  PauliSum& add(std::string_view letters, double coeff) { return add(PauliString(letters), coeff); }

  double coefficient(const PauliString& p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? 0.0 : it->second;
  }
  double identity_coefficient() const { return coefficient(PauliString::identity(n_qubits_)); }

  /// Copy without the identity term (traceless part).
  PauliSum traceless() const {
    PauliSum out = *this;
    out.terms_.erase(PauliString::identity(n_qubits_));
    return out;
  }

  PauliSum& operator+=(const PauliSum& other) {
    if (other.n_qubits_ != n_qubits_) throw ShapeError("PauliSum += : qubit count mismatch");
    for (const auto& [p, c] : other.terms_) add(p, c);
    return *this;
  }
  PauliSum& operator*=(double s) {
    if (s == 0.0) {
      terms_.clear();
      return *this;
    }
    for (auto& [p, c] : terms_) c *= s;
    return *this;
  }
  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator*(double s, PauliSum a) { return a *= s; }
  friend PauliSum operator-(PauliSum a) { return a *= -1.0; }

  bool all_even_y() const {
    for (const auto& [p, c] : terms_) {
      if (p.y_parity()) return false;
    }
    return true;
  }

  /// One term per line: "<coeff> <letters>".
  std::string to_text() const {
    std::string out;
    for (const auto& [p, c] : terms_) out += fmt::format("{:.17g} {}\n", c, p.str());
    return out;
  }

  static PauliSum from_text(std::string_view text, int n_qubits) {
    PauliSum sum(n_qubits);
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      std::string coeff_tok, letters, extra;
      if (!(ls >> coeff_tok)) continue;
      if (!(ls >> letters) || (ls >> extra)) {
        throw ValidationError(fmt::format("line {}: expected '<coeff> <letters>'", line_no));
      }
      double c = 0.0;
      auto [ptr, ec] = std::from_chars(coeff_tok.data(), coeff_tok.data() + coeff_tok.size(), c);
      if (ec != std::errc{} || ptr != coeff_tok.data() + coeff_tok.size()) {
        throw ValidationError(fmt::format("line {}: bad coefficient '{}'", line_no, coeff_tok));
      }
      sum.add(PauliString(letters), c);
    }
    return sum;
  }

  bool operator==(const PauliSum&) const = default;

 private:
  int n_qubits_ = 0;
  std::map<PauliString, double> terms_;
};

inline ComplexMatrix dense_matrix(const PauliSum& h) {
  detail::check_dense_cap(h.n_qubits());
  const auto dim = static_cast<Eigen::Index>(dimension_of(h.n_qubits()));
  ComplexMatrix m = ComplexMatrix::Zero(dim, dim);
  for (const auto& [p, c] : h.terms()) {
    const std::uint64_t x = p.x_mask();
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(dim); ++i) {
      m(static_cast<Eigen::Index>(i ^ x), static_cast<Eigen::Index>(i)) += c * basis_phase(p, i);
    }
  }
  return m;
}

/// H|state>.
inline StateVector apply(const PauliSum& h, const StateVector& state) {
  if (state.size() != static_cast<Eigen::Index>(dimension_of(h.n_qubits()))) {
    throw ShapeError("apply: state dimension does not match PauliSum register");
  }
  StateVector out = StateVector::Zero(state.size());
  for (const auto& [p, c] : h.terms()) {
    const std::uint64_t x = p.x_mask();
    for (std::uint64_t i = 0; i < static_cast<std::uint64_t>(state.size()); ++i) {
      out[static_cast<Eigen::Index>(i ^ x)] += c * basis_phase(p, i) * state[static_cast<Eigen::Index>(i)];
    }
  }
  return out;
}

/// Pauli decomposition c_I = Tr[m sigma_I] / 2^n of a Hermitian matrix.
inline PauliSum decompose_hermitian(const ComplexMatrix& m, int n_qubits) {
  if (m.rows() != m.cols()) throw ShapeError("decompose_hermitian: matrix is not square");
  if (qubits_for_dimension(m.rows()) != n_qubits) {
    throw ShapeError(fmt::format("decompose_hermitian: dimension {} does not match {} qubits", m.rows(), n_qubits));
  }
  detail::check_dense_cap(n_qubits);
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if (!is_hermitian(m, 1e-12 * scale)) throw ValidationError("decompose_hermitian: matrix is not Hermitian");

  PauliSum out(n_qubits);
  const std::uint64_t dim = dimension_of(n_qubits);
  const std::uint64_t n_strings = std::uint64_t{1} << (2 * n_qubits);
  PauliString p = PauliString::identity(n_qubits);
  for (std::uint64_t code = 0; code < n_strings; ++code) {
    for (int q = 0; q < n_qubits; ++q) {
      p.set(q, static_cast<Pauli>((code >> (2 * (n_qubits - 1 - q))) & 3));
    }
    const std::uint64_t x = p.x_mask();
    cplx tr{0, 0};
    for (std::uint64_t i = 0; i < dim; ++i) {
      // (m sigma)_{ii} = m_{i, i^x} * sigma_{i^x, i}
      tr += m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i ^ x)) * basis_phase(p, i);
    }
    const double c = tr.real() / static_cast<double>(dim);
    if (std::abs(c) >= PauliSum::kPruneThreshold) out.add(p, c);
  }
  return out;
}

inline PauliSum decompose_hermitian(const RealMatrix& m, int n_qubits) {
  return decompose_hermitian(ComplexMatrix(m.cast<cplx>()), n_qubits);
}

namespace detail {
inline void check_normalized(const StateVector& state) {
  if (std::abs(state.squaredNorm() - 1.0) > 1e-10) {
    throw ValidationError(fmt::format("state is not normalized (norm^2 = {:.15g})", state.squaredNorm()));
  }
}
}  // namespace detail

/// Re<state|h|state>.
inline double expectation(const StateVector& state, const PauliSum& h) {
  if (state.size() != static_cast<Eigen::Index>(dimension_of(h.n_qubits()))) {
    throw ShapeError("expectation: state dimension does not match PauliSum register");
  }
  detail::check_normalized(state);
  cplx acc{0, 0};
  for (const auto& [p, c] : h.terms()) acc += c * pauli_expectation(state, p);
  if (std::abs(acc.imag()) > 1e-9) {
    throw NumericalError(fmt::format("expectation has imaginary residue {:.3g}", acc.imag()));
  }
  return acc.real();
}

inline double expectation(const StateVector& state, const PauliString& p) {
  detail::check_normalized(state);
  return pauli_expectation(state, p).real();
}

/// <state| a * b |state>, including the Pauli-product phase.
inline cplx mixed_expectation(const StateVector& state, const PauliString& a, const PauliString& b) {
  detail::check_normalized(state);
  auto prod = multiply(a, b);
  return prod.phase * pauli_expectation(state, prod.result);
}

inline cplx mixed_expectation(const StateVector& state, const PauliString& a, const PauliSum& b) {
  if (a.size() != b.n_qubits()) throw ShapeError("mixed_expectation: register mismatch");
  detail::check_normalized(state);
  cplx acc{0, 0};
  for (const auto& [p, c] : b.terms()) {
    auto prod = multiply(a, p);
    acc += c * prod.phase * pauli_expectation(state, prod.result);
  }
  return acc;
}

/// All 4^n strings on n qubits in lexicographic order (I < X < Y < Z).
inline std::vector<PauliString> all_pauli_strings(int n_qubits) {
  std::vector<PauliString> out;
  const std::uint64_t n_strings = std::uint64_t{1} << (2 * n_qubits);
  out.reserve(n_strings);
  for (std::uint64_t code = 0; code < n_strings; ++code) {
    PauliString p = PauliString::identity(n_qubits);
    for (int q = 0; q < n_qubits; ++q) p.set(q, static_cast<Pauli>((code >> (2 * (n_qubits - 1 - q))) & 3));
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace qbench
