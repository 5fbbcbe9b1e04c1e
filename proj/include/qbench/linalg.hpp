#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <string>
#include <string_view>

#include "qbench/errors.hpp"

namespace qbench {

using cplx = std::complex<double>;
using StateVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

/// Largest register for which dense matrices (Pauli realizations, oracles) are built.
inline constexpr int kMaxDenseQubits = 10;
/// Largest register the statevector simulator accepts.
inline constexpr int kMaxSimQubits = 12;

inline std::uint64_t dimension_of(int n_qubits) { return std::uint64_t{1} << n_qubits; }

/// Qubit-ordering convention shared by every module: qubit 0 is the leftmost
/// tensor factor, i.e. the leftmost character of a ket or bitstring and the
/// most significant bit of a basis index.
inline std::uint64_t qubit_bit(int qubit, int n_qubits) {
  return std::uint64_t{1} << (n_qubits - 1 - qubit);
}

/// Returns log2(dim) or throws when dim is not a power of two.
inline int qubits_for_dimension(std::int64_t dim) {
  if (dim < 1 || (dim & (dim - 1)) != 0) {
    throw ShapeError("dimension " + std::to_string(dim) + " is not a power of two");
  }
  int n = 0;
  while ((std::int64_t{1} << n) < dim) ++n;
  return n;
}

/// |<a|b>|^2 for normalized vectors; insensitive to global phase.
inline double fidelity(const StateVector& a, const StateVector& b) {
  if (a.size() != b.size()) throw ShapeError("fidelity: dimension mismatch");
  return std::norm(a.dot(b));
}

/// exp(-i * t * A) for Hermitian A.
inline ComplexMatrix expm_hermitian(const ComplexMatrix& a, double t) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(a);
  const auto& v = es.eigenvectors();
  Eigen::VectorXcd phases(es.eigenvalues().size());
  for (Eigen::Index k = 0; k < phases.size(); ++k) {
    phases[k] = std::exp(cplx(0.0, -t * es.eigenvalues()[k]));
  }
  return v * phases.asDiagonal() * v.adjoint();
}

inline bool is_hermitian(const ComplexMatrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  return (m - m.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

/// Basis vector |index> in a register of n qubits.
inline StateVector basis_state(std::uint64_t index, int n_qubits) {
  StateVector v = StateVector::Zero(static_cast<Eigen::Index>(dimension_of(n_qubits)));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return v;
}

/// Parses a bitstring such as "1001" (leftmost character = qubit 0).
inline std::uint64_t parse_bits(std::string_view bits) {
  std::uint64_t index = 0;
  for (char c : bits) {
    if (c != '0' && c != '1') throw ValidationError("invalid bitstring '" + std::string(bits) + "'");
    index = (index << 1) | static_cast<std::uint64_t>(c == '1');
  }
  return index;
}

inline std::string format_bits(std::uint64_t index, int n_qubits) {
  std::string s(static_cast<std::size_t>(n_qubits), '0');
  for (int q = 0; q < n_qubits; ++q) {
    if (index & qubit_bit(q, n_qubits)) s[static_cast<std::size_t>(q)] = '1';
  }
  return s;
}

/// Ket from a bitstring label.
inline StateVector ket(std::string_view bits) {
  return basis_state(parse_bits(bits), static_cast<int>(bits.size()));
}

}  // namespace qbench
