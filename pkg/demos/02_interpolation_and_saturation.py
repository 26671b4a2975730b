"""
Linear convergence without noise, saturation with noise
=======================================================

On least squares with exact labels every worker's gradient vanishes at the
optimum, so compression noise vanishes too and all variants converge
linearly.  With label noise the compressed variants stall at a level that
grows with the compression variance and with the step size.
"""
from artemis.harness import estimate_plateau, figure_preset, run_experiment

########################################################################
# Interpolation regime

exp = run_experiment(figure_preset("lsr-noiseless", iterations=1500, runs=2))
print(f"step size {exp.resolved.gamma:.4f}")
for name, trace in exp.traces.items():
    print(f"{name:>8}: log10 excess at k=0, 500, 1500 ->",
          " ".join(f"{trace.mean_log10_excess[k]:7.2f}" for k in (0, 500, 1500)))

########################################################################
# Noisy labels
# ------------
# Plateaus are estimated on the last 10% of the run.

exp = run_experiment(figure_preset("lsr-noisy", variants=("SGD", "QSGD", "Bi-QSGD"), iterations=2000, runs=2))
for name, trace in exp.traces.items():
    p = estimate_plateau(trace)
    print(f"{name:>8}: plateau {p.level:.2e} (saturated: {p.saturated})")

########################################################################
# Halving the step size halves the plateau

base = exp.resolved.gamma
for g in (base, base / 2):
    t = run_experiment(figure_preset("lsr-noisy", variants=("SGD",), iterations=4000, runs=2, gamma=g))["SGD"]
    print(f"gamma={g:.4f}: SGD plateau {estimate_plateau(t).level:.2e}")
