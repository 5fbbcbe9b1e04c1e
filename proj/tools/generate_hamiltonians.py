#!/usr/bin/env python3
"""Writes 4-qubit HOMO/LUMO active-space Hamiltonians for LiH, NaH, KH and RbH.

RHF/STO-3G, two active orbitals with the remaining electrons frozen in the
core, Jordan-Wigner mapping with qubits ordered (HOMO up, LUMO up, HOMO down,
LUMO down). Qubit 0 is the leftmost Pauli character.

    python3 tools/generate_hamiltonians.py data/hamiltonians
"""
import argparse
import itertools
import json
import os

import numpy as np
from pyscf import ao2mo, gto, mcscf, scf

MOLECULES = ["LiH", "NaH", "KH", "RbH"]
DISTANCES = [0.5, 1.0, 1.5, 2.0, 2.5]
PAULI = {
    "I": np.eye(2),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1.0, -1.0]),
}


def kron_all(ms):
    out = np.eye(1)
    for m in ms:
        out = np.kron(out, m)
    return out


def annihilator(j, n=4):
    lower = np.array([[0, 1], [0, 0]])  # |0><1|, occupied = |1>
    return kron_all([PAULI["Z"]] * j + [lower] + [np.eye(2)] * (n - j - 1))


def active_space(molecule, distance):
    metal = molecule[:-1]
    mol = gto.M(atom=f"{metal} 0 0 0; H 0 0 {distance}", basis="sto-3g", unit="Angstrom", verbose=0)
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-11
    mf.max_cycle = 200
    mf.kernel()
    if not mf.converged:
        mf = scf.newton(mf).run()
    cas = mcscf.CASCI(mf, 2, 2)
    h1, ecore = cas.get_h1eff()
    eri = ao2mo.restore(1, cas.get_h2eff(), 2)
    return mf, h1, ecore, eri


def qubit_matrix(h1, ecore, eri):
    # spin orbital (p, sigma) -> qubit 2*sigma + p
    a = [annihilator(q) for q in range(4)]
    q = lambda p, s: 2 * s + p
    h = ecore * np.eye(16, dtype=complex)
    for p, r in itertools.product(range(2), repeat=2):
        for s in range(2):
            h += h1[p, r] * a[q(p, s)].conj().T @ a[q(r, s)]
    for p, r, u, v in itertools.product(range(2), repeat=4):
        for s, t in itertools.product(range(2), repeat=2):
            h += 0.5 * eri[p, r, u, v] * (
                a[q(p, s)].conj().T @ a[q(u, t)].conj().T @ a[q(v, t)] @ a[q(r, s)])
    return h


def decompose(h):
    terms = []
    for labels in itertools.product("IXYZ", repeat=4):
        coeff = np.trace(kron_all([PAULI[c] for c in labels]) @ h).real / 16.0
        if abs(coeff) > 1e-12:
            terms.append({"pauli": "".join(labels), "coeff": float(coeff)})
    return terms


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("out_dir")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for molecule in MOLECULES:
        for d in DISTANCES:
            mf, h1, ecore, eri = active_space(molecule, d)
            h = qubit_matrix(h1, ecore, eri)
            hf = np.zeros(16)
            hf[int("1010", 2)] = 1.0
            e_hf = float(np.real(hf @ h @ hf))
            if abs(e_hf - mf.e_tot) > 1e-7:
                raise SystemExit(f"{molecule} {d}: reference energy {e_hf} != RHF {mf.e_tot}")
            doc = {
                "molecule": molecule,
                "bond_distance_angstrom": d,
                "n_qubits": 4,
                "terms": decompose(h),
                "provenance": f"pyscf RHF/STO-3G, HOMO/LUMO CASCI(2,2) embedding, Jordan-Wigner; E_RHF={mf.e_tot:.10f}",
            }
            path = os.path.join(args.out_dir, f"{molecule}_{d:.1f}.json")
            with open(path, "w") as f:
                json.dump(doc, f, indent=1)
                f.write("\n")
            print(path, f"E_RHF={mf.e_tot:.6f}", f"terms={len(doc['terms'])}")


if __name__ == "__main__":
    main()
