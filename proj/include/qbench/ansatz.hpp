#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>

#include "qbench/circuit.hpp"
#include "qbench/errors.hpp"
#include "qbench/hamiltonian.hpp"

namespace qbench {

// Circuit wires of the N_e=2 and N_e=3 constructions drawn top to bottom, mapped
// to register qubits. The spin-down pair is drawn in mirrored order.
inline constexpr int kSpcWire[4] = {0, 1, 3, 2};

namespace detail {

// R(theta, phi) = Rz(phi + pi) Ry(theta + pi/2), appended in time order.
inline void add_r(Circuit& c, int q, Angle theta, Angle phi = 0.0) {
  c.add(gates::ry(q, theta.plus(kPi / 2)));
  c.add(gates::rz(q, phi.plus(kPi)));
}

inline void add_r_dagger(Circuit& c, int q, Angle theta, Angle phi = 0.0) {
  c.add(gates::rz(q, phi.plus(kPi).negated()));
  c.add(gates::ry(q, theta.plus(kPi / 2).negated()));
}

inline Circuit remap(const Circuit& c, const std::vector<int>& to) {
  Circuit out(c.n_qubits());
  for (Gate g : c.gates()) {
    for (auto& t : g.targets) t = to[static_cast<std::size_t>(t)];
    out.add(std::move(g));
  }
  out.set_parameter_names(c.parameter_names());
  return out;
}

}  // namespace detail

inline Gate aswap(int a, int b, Angle theta, Angle phi = 0.0) { return gates::aswap(a, b, theta, phi); }

/// Three-CNOT realization of ASWAP(theta, phi) on (a, b), equal up to global phase.
inline Circuit aswap_decomposed(int n_qubits, int a, int b, Angle theta, Angle phi = 0.0) {
  Circuit c(n_qubits);
  c.add(gates::cnot(b, a));
  detail::add_r_dagger(c, b, theta, phi);
  c.add(gates::cnot(a, b));
  detail::add_r(c, b, theta, phi);
  c.add(gates::cnot(b, a));
  return c;
}

enum class AnsatzFamily { SPC_Ne1, SPC_Ne2, SPC_Ne3, UCC3_native, UCC3_hidden_inverse, ASWAP_raw };

struct Ansatz {
  AnsatzFamily family;
  std::string name;
  Circuit circuit;
  SymmetrySector target;
};

/// Symmetry-preserving circuit for N_e=2, s_z=0 with parameters (theta1, theta2, theta3).
inline Circuit spc_ne2() {
  const auto w = [](int k) { return kSpcWire[k]; };
  const Angle t1 = Angle::param(0), t2 = Angle::param(1), t3 = Angle::param(2);
  Circuit c(4);
  c.add(gates::x(w(0))).add(gates::x(w(2))).add(gates::x(w(3)));
  detail::add_r_dagger(c, w(1), t1);
  detail::add_r_dagger(c, w(3), t2);
  c.add(gates::x(w(1))).add(gates::x(w(3)));
  detail::add_r(c, w(1), t1);
  detail::add_r(c, w(3), t2);
  c.add(gates::cnot(w(3), w(2)));
  c.add(gates::z(w(1))).add(gates::h(w(2)));
  c.add(gates::cnot(w(1), w(2)));
  detail::add_r_dagger(c, w(1), t3);
  c.add(gates::h(w(2)));
  c.add(gates::x(w(1)));
  detail::add_r(c, w(1), t3);
  c.add(gates::cnot(w(1), w(0)));
  c.set_parameter_names({"theta1", "theta2", "theta3"});
  return c;
}

/// N_e=1, s_z=1/2: one electron shared between the two spin-up orbitals.
inline Circuit spc_ne1() {
  const Angle t = Angle::param(0);
  Circuit c(4);
  c.add(gates::x(0));
  detail::add_r_dagger(c, 1, t);
  c.add(gates::x(1));
  detail::add_r(c, 1, t);
  c.add(gates::cnot(1, 0));
  c.set_parameter_names({"theta"});
  return c;
}

/// N_e=3, s_z=1/2: one hole shared between the two spin-down orbitals.
inline Circuit spc_ne3() {
  const auto w = [](int k) { return kSpcWire[k]; };
  const Angle t = Angle::param(0);
  Circuit c(4);
  c.add(gates::x(w(0))).add(gates::x(w(1))).add(gates::x(w(2)));
  detail::add_r_dagger(c, w(3), t);
  c.add(gates::x(w(3)));
  detail::add_r(c, w(3), t);
  c.add(gates::cnot(w(3), w(2)));
  c.set_parameter_names({"theta"});
  return c;
}

/// Exchanges the spin-up and spin-down qubit pairs (s_z -> -s_z).
inline Circuit mirror_spin(const Circuit& c) { return detail::remap(c, {2, 3, 0, 1}); }

/// Symmetry-preserving circuit for a supported sector.
inline Circuit spc(const SymmetrySector& s) {
  if (s.n_e == 2 && s.two_sz == 0) return spc_ne2();
  if (s.n_e == 1 && s.two_sz == 1) return spc_ne1();
  if (s.n_e == 1 && s.two_sz == -1) return mirror_spin(spc_ne1());
  if (s.n_e == 3 && s.two_sz == 1) return spc_ne3();
  if (s.n_e == 3 && s.two_sz == -1) return mirror_spin(spc_ne3());
  throw ValidationError(fmt::format("no symmetry-preserving circuit for sector {}", s.label()));
}

inline const std::vector<double>& triplet_parameters() {
  static const std::vector<double> p = {-kPi / 4, -kPi / 4, 3 * kPi / 4};
  return p;
}

/// Parameter-free circuit preparing the s_z=0 triplet.
inline Circuit triplet_circuit() { return spc_ne2().bind(triplet_parameters()); }

/// ASWAP network before simplification: reference |1010>, then
/// A(t1)(w0,w1), A(t2)(w2,w3), A(0)(w1,w2), A(t3)(w0,w1).
inline Circuit spc_ne2_unsimplified(bool decomposed = false) {
  const auto w = [](int k) { return kSpcWire[k]; };
  Circuit c(4);
  c.add(gates::x(w(0))).add(gates::x(w(3)));
  auto add_a = [&](int a, int b, Angle theta) {
    if (decomposed) {
      c.append(aswap_decomposed(4, w(a), w(b), theta));
    } else {
      c.add(gates::aswap(w(a), w(b), theta));
    }
  };
  add_a(0, 1, Angle::param(0));
  add_a(2, 3, Angle::param(1));
  add_a(1, 2, 0.0);
  add_a(0, 1, Angle::param(2));
  c.set_parameter_names({"theta1", "theta2", "theta3"});
  return c;
}

/// UCC-3 circuit; the hidden-inverse variant swaps four CNOTs for CNOT-dagger.
inline Circuit ucc3(bool hidden_inverse = false) {
  auto cx = [&](int c, int t, bool inverted) {
    return hidden_inverse && inverted ? gates::cnot_dg(c, t) : gates::cnot(c, t);
  };
  Circuit c(4);
  c.add(gates::x(0)).add(gates::h(1)).add(gates::x(2)).add(gates::h(3));
  c.add(gates::rx(0, -kPi / 2)).add(gates::rx(2, -kPi / 2));
  c.add(cx(0, 1, false)).add(cx(2, 3, false));
  c.add(gates::rz(1, Angle::param(0))).add(gates::rz(3, Angle::param(1)));
  c.add(cx(2, 3, true));
  c.add(gates::rx(2, kPi / 2));
  c.add(gates::h(2));
  c.add(cx(1, 2, false));
  c.add(cx(2, 3, false));
  c.add(gates::rz(3, Angle::param(2)));
  c.add(cx(2, 3, true));
  c.add(cx(1, 2, true)).add(gates::h(3));
  c.add(cx(0, 1, true)).add(gates::h(2));
  c.add(gates::rx(0, kPi / 2)).add(gates::h(1));
  c.set_parameter_names({"theta1", "theta2", "theta3"});
  return c;
}

/// Lowers every CNOT / CNOT-dagger to the native XX pattern; ASWAP and CZ are
/// first rewritten with CNOTs.
inline Circuit compile_ion_trap(const Circuit& circuit) {
  Circuit out(circuit.n_qubits());
  for (const auto& g : circuit.gates()) {
    switch (g.kind) {
      case GateKind::CNOT:
      case GateKind::CNOTdg:
        for (auto& h : ion_trap_decomposition(g)) out.add(std::move(h));
        break;
      case GateKind::ASWAP:
        out.append(compile_ion_trap(aswap_decomposed(circuit.n_qubits(), g.targets[0], g.targets[1], g.angles[0], g.angles[1])));
        break;
      case GateKind::CZ:
        out.add(gates::h(g.targets[1]));
        for (auto& h : ion_trap_decomposition(gates::cnot(g.targets[0], g.targets[1]))) out.add(std::move(h));
        out.add(gates::h(g.targets[1]));
        break;
      case GateKind::StatePrep:
        throw ValidationError("state-prep gates have no ion-trap decomposition");
      default: out.add(g);
    }
  }
  out.set_parameter_names(circuit.parameter_names());
  return out;
}

struct ResourceCount {
  int cnot_count = 0;
  int parameter_count = 0;
  int single_qubit_count = 0;
  int xx_count = 0;
  int other_two_qubit_count = 0;

  bool operator==(const ResourceCount&) const = default;
};

inline ResourceCount resource_count(const Circuit& c) {
  ResourceCount r;
  r.parameter_count = c.parameter_count();
  for (const auto& g : c.gates()) {
    if (is_entangler(g.kind)) {
      ++r.cnot_count;
    } else if (g.kind == GateKind::XX) {
      ++r.xx_count;
    } else if (arity(g.kind) == 1) {
      ++r.single_qubit_count;
    } else {
      ++r.other_two_qubit_count;
    }
  }
  return r;
}

inline const std::vector<std::string>& ansatz_names() {
  static const std::vector<std::string> names = {"spc-ne1", "spc-ne2", "spc-ne3", "ucc3", "ucc3-hi"};
  return names;
}

/// Ansatz by configuration name: spc-ne1, spc-ne2, spc-ne3, ucc3, ucc3-hi.
inline Ansatz make_ansatz(std::string_view name) {
  if (name == "spc-ne1") return {AnsatzFamily::SPC_Ne1, "spc-ne1", spc_ne1(), SymmetrySector::make(1, 0.5)};
  if (name == "spc-ne2") return {AnsatzFamily::SPC_Ne2, "spc-ne2", spc_ne2(), SymmetrySector::make(2, 0)};
  if (name == "spc-ne3") return {AnsatzFamily::SPC_Ne3, "spc-ne3", spc_ne3(), SymmetrySector::make(3, 0.5)};
  if (name == "ucc3") return {AnsatzFamily::UCC3_native, "ucc3", ucc3(false), SymmetrySector::make(2, 0)};
  if (name == "ucc3-hi") return {AnsatzFamily::UCC3_hidden_inverse, "ucc3-hi", ucc3(true), SymmetrySector::make(2, 0)};
  throw ValidationError(fmt::format("unknown ansatz '{}'", name));
}

}  // namespace qbench
