"""
Step-size rules and communication budgets
=========================================

The theory module turns problem constants and compressor variances into a
largest admissible step size, a memory-rate range and a predicted noise
floor.  The harness then counts how many bits each variant spends to reach
a target accuracy.
"""
from artemis import theory
from artemis.harness import bits_to_target, figure_preset, run_experiment, theory_input

exp = run_experiment(figure_preset("lsr-noiseless", iterations=1500, runs=2))
r = exp.resolved

########################################################################
# Constants per variant

print(f"{'variant':>8} {'gamma_max':>10} {'alpha':>6} {'regime':>6}")
for v in r.variants:
    inp = theory_input(r, v)
    print(f"{v.name:>8} {theory.gamma_max(inp):10.4f} {v.alpha:6.3f} "
          f"{theory.table_regime(inp.N, max(inp.omega_up, inp.omega_dwn)):>6}")

########################################################################
# Bits to reach a target
# ----------------------
# Compressing both directions costs more iterations but far fewer bits.

for target in (1e-2, 1e-5, 1e-10):
    row = []
    for name, trace in exp.traces.items():
        b = bits_to_target(trace, target)
        row.append(f"{name}={'never' if b is None else f'{b / 8e6:.3f}MB'}")
    print(f"target {target:.0e}: " + ", ".join(row))
