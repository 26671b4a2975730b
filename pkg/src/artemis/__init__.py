"""Distributed SGD with bidirectional compression, memory and partial participation."""

from .compression import Identity, Quantization, Sparsification, compress, omega, parse_kind
from .harness import (RunConfig, DatasetSpec, MetricsTrace, bits_to_target, compare_pp_modes,
                      estimate_plateau, figure_preset, run_experiment)
from .oracle import FULL, Dataset, Objective, estimate_constants, gen_logistic_noniid, gen_lsr, solve_optimum
from .protocol import PPMode, Problem, Simulation, VariantConfig, preset
from .theory import TheoryInput

__version__ = "0.1.0"
