"""Regenerate the bundled molecular Hamiltonian files.

Needs ``openfermion`` and ``openfermionpyscf`` (not runtime dependencies):

    python scripts/make_molecules.py src/distvqe/data
"""

import sys
from pathlib import Path

from openfermion import MolecularData, get_fermion_operator, jordan_wigner
from openfermionpyscf import run_pyscf

MOLECULES = {
    "h2": ([("H", (0, 0, 0)), ("H", (0, 0, 0.74))], "H2 STO-3G, bond 0.74 A"),
    "lih": ([("Li", (0, 0, 0)), ("H", (0, 0, 0.5))], "LiH STO-3G, bond 0.5 A"),
}


def qubit_terms(geometry):
    mol = run_pyscf(MolecularData(geometry, "sto-3g", 1, 0), run_fci=True)
    op = jordan_wigner(get_fermion_operator(mol.get_molecular_hamiltonian()))
    op.compress(1e-12)
    n = mol.n_qubits
    lines = []
    for term, coeff in op.terms.items():
        word = ["I"] * n
        for q, p in term:
            word[q] = p
        lines.append(f"{float(coeff.real)!r} {''.join(word)}")
    return n, lines, mol.fci_energy


def main(out_dir):
    out = Path(out_dir)
    for name, (geometry, title) in MOLECULES.items():
        n, lines, fci = qubit_terms(geometry)
        header = [
            f"# {title}; Jordan-Wigner, {n} qubits, {len(lines)} terms",
            f"# FCI energy {float(fci)!r} Ha",
        ]
        (out / f"{name}.txt").write_text("\n".join(header + lines) + "\n")
        print(name, n, len(lines), fci)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else ".")
