"""Command-line entry point.

    artemis run --config exp.yaml [--out DIR]
    artemis run --preset lsr-noisy [--out DIR] [--iterations K] [--runs R] [--seed S]
    artemis theory --config exp.yaml
    artemis presets list

The output directory defaults to ``$ARTEMIS_OUT`` (or ``./artemis-out``).
Exit status: 0 on success, 1 when a run diverges, 2 on a configuration error.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import yaml

from . import harness, theory
from .protocol import DivergenceError

OUT_ENV = "ARTEMIS_OUT"
DEFAULT_OUT = "artemis-out"

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_CONFIG = 2


def load_config(path) -> dict:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise harness.ConfigError(f"cannot read {path}: {exc.strerror}") from None
    except yaml.YAMLError as exc:
        raise harness.ConfigError(f"{path}: malformed config ({exc})") from None
    if not isinstance(data, dict):
        raise harness.ConfigError(f"{path}: expected a mapping at top level")
    return data


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV) or DEFAULT_OUT)


def _overrides(args) -> dict:
    kw = {}
    for key in ("iterations", "runs", "seed"):
        val = getattr(args, key, None)
        if val is not None:
            kw[key] = val
    return kw


def cmd_run(args) -> int:
    if bool(args.config) == bool(args.preset):
        raise harness.ConfigError("give exactly one of --config or --preset")
    if args.config:
        cfg = harness.RunConfig.from_mapping(load_config(args.config))
    else:
        cfg = harness.figure_preset(args.preset)
    cfg = cfg.with_(**_overrides(args))
    out = Path(args.out) if args.out else (Path(cfg.out) if cfg.out else default_out())
    exp = harness.run_experiment(cfg, out=out)
    for name, trace in exp.traces.items():
        plateau = harness.estimate_plateau(trace) if len(trace) > 1 else None
        final = trace.mean_log10_excess[-1]
        line = f"{name:<14} gamma={trace.gamma:.4g} final_log10_excess={final:.3f} bits={trace.total_bits[-1]:.0f}"
        if plateau is not None:
            line += f" plateau={plateau.level:.3g} saturated={plateau.saturated}"
        print(line)
    print(f"wrote {out / (cfg.name + '.csv')}")
    return EXIT_OK


def _print_table(rows: dict, title: str | None = None):
    if title:
        print(f"[{title}]")
    width = max(len(k) for k in rows)
    for k, v in rows.items():
        if isinstance(v, float):
            v = f"{v:.6g}" if math.isfinite(v) else str(v)
        print(f"{k:<{width}}  {v}")


def cmd_theory(args) -> int:
    data = load_config(args.config)
    if "theory" in data:
        block = data["theory"]
        if not isinstance(block, dict):
            raise harness.ConfigError("theory block must be a mapping")
        try:
            inp = theory.TheoryInput(**block)
        except TypeError as exc:
            raise harness.ConfigError(str(exc)) from None
        _print_table(theory.summary(inp))
        return EXIT_OK
    cfg = harness.RunConfig.from_mapping(data)
    resolved = harness.resolve(cfg)
    c = resolved.constants
    _print_table({"L": c.L, "L_sto": c.L_sto, "mu": c.mu, "B2": c.B2, "sigma2_over_b": c.sigma2_over_b,
                  "gamma": resolved.gamma}, "problem")
    for v in resolved.variants:
        print()
        try:
            rows = theory.summary(harness.theory_input(resolved, v))
        except theory.TheoryError as exc:
            rows = {"error": str(exc)}
        _print_table(rows, v.name)
    return EXIT_OK


def cmd_presets(args) -> int:
    for name in harness.PRESETS:
        cfg = harness.figure_preset(name)
        print(f"{name:<20} {cfg.note}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="artemis", description="Bidirectional compression experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV traces")
    run.add_argument("--config", help="YAML experiment file")
    run.add_argument("--preset", help="named figure preset (see 'presets list')")
    run.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    run.add_argument("--iterations", type=int)
    run.add_argument("--runs", type=int)
    run.add_argument("--seed", type=int)
    run.set_defaults(func=cmd_run)

    th = sub.add_parser("theory", help="print the theoretical constants of a config")
    th.add_argument("--config", required=True)
    th.set_defaults(func=cmd_theory)

    pr = sub.add_parser("presets", help="list the figure presets")
    pr.add_argument("action", choices=["list"])
    pr.set_defaults(func=cmd_presets)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (harness.ConfigError, theory.TheoryError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
