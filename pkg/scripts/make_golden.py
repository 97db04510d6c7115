"""Regenerate tests/fixtures/golden_circuits.json from the dense gate-by-gate oracle."""

import json
import sys
from pathlib import Path

import numpy as np

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "tests"))
import oracles  # noqa: E402

CASES = [(1, 1, "linear"), (2, 1, "linear"), (3, 2, "linear"), (3, 2, "ring"), (4, 1, "ring")]


def main():
    rng = np.random.default_rng(2024)
    out = []
    for n, layers, ent in CASES:
        theta = rng.uniform(0, 2 * np.pi, 3 * n * layers)
        psi = oracles.circuit_state(n, layers, theta, ent)
        out.append(
            {
                "n_qubits": n,
                "layers": layers,
                "entangler": ent,
                "theta": theta.tolist(),
                "re": psi.real.tolist(),
                "im": psi.imag.tolist(),
            }
        )
    path = ROOT / "tests" / "fixtures" / "golden_circuits.json"
    path.write_text(json.dumps(out, indent=1) + "\n")
    print(f"wrote {len(out)} cases to {path}")


if __name__ == "__main__":
    main()
