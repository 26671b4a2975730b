"""Regenerate ``golden_biqsgd.json`` (run from the repository root).

The file pins ten iterations of Bi-QSGD on a small noiseless problem so that
any change to draw addressing, compression or aggregation order shows up.
"""

import json
from pathlib import Path

from artemis.oracle import gen_lsr
from artemis.protocol import Problem, Simulation, preset

SETUP = dict(N=4, n=50, d=8, noise_std=0.0, data_seed=0, seed=11, gamma=0.05, batch=1, iterations=10)


def build():
    ds = gen_lsr(SETUP["N"], SETUP["n"], SETUP["d"], SETUP["noise_std"], seed=SETUP["data_seed"])
    problem = Problem.build("lsr", ds, SETUP["batch"])
    sim = Simulation(problem, preset("Bi-QSGD", SETUP["d"], gamma=SETUP["gamma"]), seed=SETUP["seed"])
    rows = []
    for _ in range(SETUP["iterations"]):
        rec = sim.run_iteration()
        rows.append({"iteration": rec.iteration, "w": sim.w.tolist(), "up_bits": rec.up_bits,
                     "down_bits": rec.down_bits, "excess": rec.excess_loss})
    return rows


if __name__ == "__main__":
    out = Path(__file__).with_name("golden_biqsgd.json")
    out.write_text(json.dumps({"setup": SETUP, "trace": build()}, indent=1) + "\n")
    print(f"wrote {out}")
