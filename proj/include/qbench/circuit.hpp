#pragma once

#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qbench/errors.hpp"
#include "qbench/linalg.hpp"

namespace qbench {

enum class GateKind {
  X,
  Z,
  H,
  Rx,
  Ry,
  Rz,
  U3,
  CNOT,
  CNOTdg,  // unitarily equal to CNOT; compiles to the inverted native pattern
  CZ,
  XX,
  ASWAP,
  StatePrep,
};

inline const char* gate_name(GateKind k) {
  switch (k) {
    case GateKind::X: return "X";
    case GateKind::Z: return "Z";
    case GateKind::H: return "H";
    case GateKind::Rx: return "RX";
    case GateKind::Ry: return "RY";
    case GateKind::Rz: return "RZ";
    case GateKind::U3: return "U3";
    case GateKind::CNOT: return "CNOT";
    case GateKind::CNOTdg: return "CNOTDG";
    case GateKind::CZ: return "CZ";
    case GateKind::XX: return "XX";
    case GateKind::ASWAP: return "ASWAP";
    case GateKind::StatePrep: return "PREP";
  }
  return "?";
}

inline int arity(GateKind k) {
  switch (k) {
    case GateKind::CNOT:
    case GateKind::CNOTdg:
    case GateKind::CZ:
    case GateKind::XX:
    case GateKind::ASWAP: return 2;
    case GateKind::StatePrep: return -1;
    default: return 1;
  }
}

inline int angle_count(GateKind k) {
  switch (k) {
    case GateKind::Rx:
    case GateKind::Ry:
    case GateKind::Rz:
    case GateKind::XX: return 1;
    case GateKind::ASWAP: return 2;
    case GateKind::U3: return 3;
    default: return 0;
  }
}

inline bool is_entangler(GateKind k) { return k == GateKind::CNOT || k == GateKind::CNOTdg; }

/// Gate angle: either a literal or scale * params[slot] + offset.
struct Angle {
  double offset = 0.0;
  double scale = 0.0;
  int slot = -1;

  Angle() = default;
  Angle(double value) : offset(value) {}  // NOLINT(google-explicit-constructor)
  static Angle param(int slot, double scale = 1.0, double offset = 0.0) {
    Angle a;
    a.slot = slot;
    a.scale = scale;
    a.offset = offset;
    return a;
  }

  bool is_bound() const { return slot < 0; }
  double value() const {
    if (!is_bound()) throw BindingError(fmt::format("parameter slot {} is unbound", slot));
    return offset;
  }
  double evaluate(std::span<const double> params) const {
    if (is_bound()) return offset;
    if (slot >= static_cast<int>(params.size())) {
      throw BindingError(fmt::format("parameter slot {} has no value ({} supplied)", slot, params.size()));
    }
    return scale * params[static_cast<std::size_t>(slot)] + offset;
  }
  Angle plus(double d) const {
    Angle a = *this;
    a.offset += d;
    return a;
  }
  Angle negated() const {
    Angle a = *this;
    a.offset = -a.offset;
    a.scale = -a.scale;
    return a;
  }
};

struct Gate {
  GateKind kind = GateKind::X;
  std::vector<int> targets;
  std::vector<Angle> angles;
  std::shared_ptr<const ComplexMatrix> unitary;  // StatePrep only

  bool is_bound() const {
    for (const auto& a : angles) {
      if (!a.is_bound()) return false;
    }
    return true;
  }
};

namespace gates {

inline Gate x(int q) { return {GateKind::X, {q}, {}, nullptr}; }
inline Gate z(int q) { return {GateKind::Z, {q}, {}, nullptr}; }
inline Gate h(int q) { return {GateKind::H, {q}, {}, nullptr}; }
inline Gate rx(int q, Angle t) { return {GateKind::Rx, {q}, {t}, nullptr}; }
inline Gate ry(int q, Angle t) { return {GateKind::Ry, {q}, {t}, nullptr}; }
inline Gate rz(int q, Angle t) { return {GateKind::Rz, {q}, {t}, nullptr}; }
inline Gate u3(int q, Angle theta, Angle phi, Angle lambda) {
  return {GateKind::U3, {q}, {theta, phi, lambda}, nullptr};
}
inline Gate cnot(int control, int target) { return {GateKind::CNOT, {control, target}, {}, nullptr}; }
inline Gate cnot_dg(int control, int target) { return {GateKind::CNOTdg, {control, target}, {}, nullptr}; }
inline Gate cz(int a, int b) { return {GateKind::CZ, {a, b}, {}, nullptr}; }
/// exp(-i chi X⊗X).
inline Gate xx(int a, int b, Angle chi) { return {GateKind::XX, {a, b}, {chi}, nullptr}; }
inline Gate aswap(int a, int b, Angle theta, Angle phi = 0.0) {
  return {GateKind::ASWAP, {a, b}, {theta, phi}, nullptr};
}
/// Arbitrary unitary on `targets` (targets[0] is the most significant local bit).
inline Gate state_prep(std::vector<int> targets, ComplexMatrix u) {
  return {GateKind::StatePrep, std::move(targets), {}, std::make_shared<const ComplexMatrix>(std::move(u))};
}

}  // namespace gates

namespace matrices {

inline Eigen::Matrix2cd x() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}
inline Eigen::Matrix2cd z() {
  Eigen::Matrix2cd m;
  m << 1, 0, 0, -1;
  return m;
}
inline Eigen::Matrix2cd h() {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd m;
  m << r, r, r, -r;
  return m;
}
inline Eigen::Matrix2cd rx(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Eigen::Matrix2cd m;
  m << c, cplx(0, -s), cplx(0, -s), c;
  return m;
}
inline Eigen::Matrix2cd ry(double t) {
  const double c = std::cos(t / 2), s = std::sin(t / 2);
  Eigen::Matrix2cd m;
  m << c, -s, s, c;
  return m;
}
inline Eigen::Matrix2cd rz(double t) {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
  m(0, 0) = std::exp(cplx(0, -t / 2));
  m(1, 1) = std::exp(cplx(0, t / 2));
  return m;
}
/// [[cos(t/2), -e^{i l} sin(t/2)], [e^{i p} sin(t/2), e^{i(p+l)} cos(t/2)]].
inline Eigen::Matrix2cd u3(double theta, double phi, double lambda) {
  const double c = std::cos(theta / 2), s = std::sin(theta / 2);
  Eigen::Matrix2cd m;
  m << c, -std::exp(cplx(0, lambda)) * s, std::exp(cplx(0, phi)) * s, std::exp(cplx(0, phi + lambda)) * c;
  return m;
}
inline Eigen::Matrix4cd xx(double chi) {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  const cplx c = std::cos(chi), s = cplx(0, -std::sin(chi));
  for (int i = 0; i < 4; ++i) {
    m(i, i) = c;
    m(3 - i, i) = s;
  }
  return m;
}
/// Parameterized SWAP-type gate acting on span{|01>, |10>}.
inline Eigen::Matrix4cd aswap(double theta, double phi) {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = 1.0;
  m(1, 1) = std::cos(theta);
  m(1, 2) = std::exp(cplx(0, phi)) * std::sin(theta);
  m(2, 1) = std::exp(cplx(0, -phi)) * std::sin(theta);
  m(2, 2) = -std::cos(theta);
  m(3, 3) = 1.0;
  return m;
}
inline Eigen::Matrix4cd cnot() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
  m(0, 0) = m(1, 1) = m(2, 3) = m(3, 2) = 1.0;
  return m;
}
inline Eigen::Matrix4cd cz() {
  Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();
  m(3, 3) = -1.0;
  return m;
}

}  // namespace matrices

/// Dense matrix of a bound gate on its own targets.
inline ComplexMatrix gate_matrix(const Gate& g) {
  auto a = [&](int i) { return g.angles.at(static_cast<std::size_t>(i)).value(); };
  switch (g.kind) {
    case GateKind::X: return matrices::x();
    case GateKind::Z: return matrices::z();
    case GateKind::H: return matrices::h();
    case GateKind::Rx: return matrices::rx(a(0));
    case GateKind::Ry: return matrices::ry(a(0));
    case GateKind::Rz: return matrices::rz(a(0));
    case GateKind::U3: return matrices::u3(a(0), a(1), a(2));
    case GateKind::CNOT:
    case GateKind::CNOTdg: return matrices::cnot();
    case GateKind::CZ: return matrices::cz();
    case GateKind::XX: return matrices::xx(a(0));
    case GateKind::ASWAP: return matrices::aswap(a(0), a(1));
    case GateKind::StatePrep: return *g.unitary;
  }
  throw ValidationError("unknown gate kind");
}

/// Native trapped-ion realization of CNOT / CNOT-dagger built around one XX(±pi/4).
/// Other gates are returned unchanged.
inline std::vector<Gate> ion_trap_decomposition(const Gate& g) {
  if (g.kind == GateKind::CNOT) {
    const int c = g.targets[0], t = g.targets[1];
    return {gates::ry(c, kPi / 2), gates::xx(c, t, kPi / 4), gates::rx(c, -kPi / 2), gates::rx(t, -kPi / 2),
            gates::ry(c, -kPi / 2)};
  }
  if (g.kind == GateKind::CNOTdg) {
    const int c = g.targets[0], t = g.targets[1];
    return {gates::ry(c, kPi / 2), gates::rx(c, kPi / 2), gates::rx(t, kPi / 2), gates::xx(c, t, -kPi / 4),
            gates::ry(c, -kPi / 2)};
  }
  return {g};
}

/// Ordered gate list on a fixed register with optional variational slots.
class Circuit {
 public:
  explicit Circuit(int n_qubits = 0) : n_qubits_(n_qubits) {
    if (n_qubits < 0 || n_qubits > kMaxSimQubits) {
      throw CapacityError(fmt::format("circuit with {} qubits exceeds the cap of {}", n_qubits, kMaxSimQubits));
    }
  }

  int n_qubits() const { return n_qubits_; }
  const std::vector<Gate>& gates() const { return gates_; }
  std::size_t size() const { return gates_.size(); }

  Circuit& add(Gate g) {
    const int expected = arity(g.kind);
    if (expected > 0 && static_cast<int>(g.targets.size()) != expected) {
      throw ValidationError(fmt::format("{} expects {} targets", gate_name(g.kind), expected));
    }
    if (static_cast<int>(g.angles.size()) != angle_count(g.kind)) {
      throw ValidationError(fmt::format("{} expects {} angles", gate_name(g.kind), angle_count(g.kind)));
    }
    for (std::size_t i = 0; i < g.targets.size(); ++i) {
      if (g.targets[i] < 0 || g.targets[i] >= n_qubits_) {
        throw ValidationError(fmt::format("{} target {} outside register of {}", gate_name(g.kind), g.targets[i], n_qubits_));
      }
      for (std::size_t j = 0; j < i; ++j) {
        if (g.targets[i] == g.targets[j]) throw ValidationError(fmt::format("{} has repeated target", gate_name(g.kind)));
      }
    }
    if (g.kind == GateKind::StatePrep) {
      const auto dim = static_cast<Eigen::Index>(dimension_of(static_cast<int>(g.targets.size())));
      if (!g.unitary || g.unitary->rows() != dim || g.unitary->cols() != dim) {
        throw ShapeError("state-prep unitary does not match its target count");
      }
    }
    for (const auto& a : g.angles) {
      if (!a.is_bound()) parameter_count_ = std::max(parameter_count_, a.slot + 1);
    }
    gates_.push_back(std::move(g));
    return *this;
  }

  Circuit& append(const Circuit& other) {
    if (other.n_qubits_ != n_qubits_) throw ShapeError("append: register mismatch");
    for (const auto& g : other.gates_) add(g);
    return *this;
  }

  /// Number of variational slots (highest referenced slot + 1).
  int parameter_count() const { return parameter_count_; }
  bool is_bound() const { return parameter_count_ == 0; }

  const std::vector<std::string>& parameter_names() const { return parameter_names_; }
  void set_parameter_names(std::vector<std::string> names) { parameter_names_ = std::move(names); }

  /// Concrete circuit with every slot replaced by its value.
  Circuit bind(std::span<const double> params) const {
    if (static_cast<int>(params.size()) < parameter_count_) {
      throw BindingError(fmt::format("circuit needs {} parameters, {} supplied", parameter_count_, params.size()));
    }
    Circuit out(n_qubits_);
    out.gates_.reserve(gates_.size());
    for (const auto& g : gates_) {
      Gate b = g;
      for (auto& a : b.angles) a = Angle(a.evaluate(params));
      out.gates_.push_back(std::move(b));
    }
    return out;
  }

  /// One gate per line: "GATE q0[,q1] [angles...]"; unbound angles print as scale*p<k>+offset.
  std::string dump() const {
    std::string out;
    for (const auto& g : gates_) {
      out += gate_name(g.kind);
      out += ' ';
      for (std::size_t i = 0; i < g.targets.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(g.targets[i]);
      }
      for (const auto& a : g.angles) {
        if (a.is_bound()) {
          out += fmt::format(" {:.10g}", a.offset);
        } else {
          out += fmt::format(" {:.10g}*p{}{:+.10g}", a.scale, a.slot, a.offset);
        }
      }
      out += '\n';
    }
    return out;
  }

 private:
  int n_qubits_ = 0;
  int parameter_count_ = 0;
  std::vector<Gate> gates_;
  std::vector<std::string> parameter_names_;
};


}  // namespace qbench
