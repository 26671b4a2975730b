"""
Partial participation: one memory per worker or one shared memory
=================================================================

Each round half of the workers answer.  If the server stores one memory
per worker (PP1) the absent workers' contributions are missing from the
aggregate, which adds a variance proportional to the heterogeneity.  A
single averaged memory (PP2) keeps the aggregate centred on the full
gradient and convergence stays linear.
"""
from artemis.harness import compare_pp_modes, estimate_plateau, figure_preset

cfg = figure_preset("pp2-noniid", variants=("Artemis",), iterations=2500, runs=2)
cmp = compare_pp_modes(cfg, draws=20_000)

for name, trace in cmp.traces.items():
    p = estimate_plateau(trace)
    print(f"{name:>12}: final log10 excess {trace.mean_log10_excess[-1]:7.2f}, plateau {p.level:.1e}")

########################################################################
# Variance of the sampled aggregate at the optimum

print(f"\nempirical {cmp.empirical_variance:.5f} +- {cmp.variance_se:.5f}")
print(f"predicted (1-p) B^2 / (N p) = {cmp.predicted_variance:.5f}")
