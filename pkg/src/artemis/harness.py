"""Multi-seed experiments, trace statistics and CSV output.

An experiment is a :class:`RunConfig`: one dataset, one objective and a list
of variants that are run ``runs`` times each.  Run ``r`` of every variant uses
the same root seed, so the variants of one comparison see identical
participation, mini-batch and compression draws.
"""

from __future__ import annotations

import json
import logging
import math
import re
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import theory
from .compression import Identity, parse_kind
from .oracle import (FULL, Dataset, Objective, ProblemConstants, estimate_constants, excess_floor,
                     gen_logistic_noniid, gen_lsr, load_csv)
from .protocol import (DivergenceError, PPMode, Problem, Schedule, Simulation, VariantConfig,
                       default_alpha, preset, server_round, new_server)
from .rng import ChunkedUniforms

log = logging.getLogger(__name__)

CSV_COLUMNS = ("iteration", "variant", "mean_log10_excess", "std_log10_excess", "up_bits", "down_bits")
UNREACHABLE = None


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


# ---------------------------------------------------------------- configuration

@dataclass(frozen=True)
class DatasetSpec:
    """Where the data comes from.

    ``kind`` is ``"lsr"`` (Gaussian design, noise variance ``noise_var``),
    ``"logistic-noniid"`` (two alternating populations) or ``"csv"``.
    """

    kind: str = "lsr"
    N: int = 10
    n: int = 200
    d: int = 20
    noise_var: float = 0.0
    seed: int = 0
    path: str | None = None
    partition: str = "round-robin"
    header: bool = False
    labels: str | None = None

    def build(self) -> Dataset:
        kind = self.kind.lower()
        if kind == "lsr":
            return gen_lsr(self.N, self.n, self.d, math.sqrt(self.noise_var), seed=self.seed)
        if kind in ("logistic-noniid", "logistic"):
            return gen_logistic_noniid(self.N, self.n, seed=self.seed)
        if kind == "csv":
            if not self.path:
                raise ConfigError("csv dataset needs a path")
            return load_csv(self.path, self.N, self.partition, header=self.header, labels=self.labels)
        raise ConfigError(f"unknown dataset kind {self.kind!r}")


@dataclass(frozen=True)
class RunConfig:
    """One comparison: a dataset, an objective and the variants to run.

    ``variants`` holds preset names or explicit :class:`VariantConfig`.
    ``gamma`` is a number, ``"auto"`` (``gamma_factor`` times the smallest
    admissible bound over the variants) or ``"<c>/L"``.
    """

    name: str = "experiment"
    dataset: DatasetSpec = field(default_factory=DatasetSpec)
    objective: str = "lsr"
    variants: tuple = ("SGD", "QSGD", "Diana", "Bi-QSGD", "Artemis")
    compression: str = "quantization:1"
    batch: object = 1
    iterations: int = 1000
    runs: int = 5
    seed: int = 0
    gamma: object = "auto"
    gamma_factor: float = 0.5
    schedule: str = "constant"
    p: float = 1.0
    pp_mode: str = "PP2"
    alpha: float | None = None
    averaging: bool = False
    per_worker_downlink: bool = False
    pp2_scale: str = "N"
    smoothness: str = "local"
    out: str | None = None
    note: str = ""

    def __post_init__(self):
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.iterations < 0:
            raise ConfigError("iterations must be >= 0")
        if not self.variants:
            raise ConfigError("at least one variant is required")
        if self.smoothness not in ("local", "oracle"):
            raise ConfigError("smoothness must be 'local' or 'oracle'")
        if not 0.0 < self.p <= 1.0:
            raise ConfigError("p must lie in (0, 1]")
        if self.pp2_scale not in ("N", "pN"):
            raise ConfigError("pp2_scale must be 'N' or 'pN'")
        Objective.parse(self.objective)

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)

    @classmethod
    def from_mapping(cls, data: dict) -> "RunConfig":
        """Build from a parsed config file, rejecting unknown keys."""
        if not isinstance(data, dict):
            raise ConfigError("config must be a mapping")
        data = dict(data)
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config key(s): {', '.join(sorted(unknown))}")
        ds = data.get("dataset", {})
        if not isinstance(ds, dict):
            raise ConfigError("dataset must be a mapping")
        bad = set(ds) - set(DatasetSpec.__dataclass_fields__)
        if bad:
            raise ConfigError(f"unknown dataset key(s): {', '.join(sorted(bad))}")
        data["dataset"] = DatasetSpec(**ds)
        variants = data.get("variants", cls.variants)
        if isinstance(variants, (str, dict)):
            variants = [variants]
        data["variants"] = tuple(_variant_entry(v) for v in variants)
        batch = data.get("batch", 1)
        if isinstance(batch, str) and batch.lower() == FULL:
            data["batch"] = FULL
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None


def _variant_entry(v):
    if isinstance(v, str):
        return v
    if isinstance(v, dict):
        extra = set(v) - {"name", "preset", "uplink", "downlink", "alpha", "p", "pp_mode", "gamma", "schedule"}
        if extra:
            raise ConfigError(f"unknown variant key(s): {', '.join(sorted(extra))}")
        return dict(v)
    if isinstance(v, VariantConfig):
        return v
    raise ConfigError(f"cannot read variant {v!r}")


# ---------------------------------------------------------------- resolution

@dataclass
class Resolved:
    """A config with data, optimum, constants and concrete variants."""

    config: RunConfig
    problem: Problem
    constants: ProblemConstants
    variants: list
    gamma: float

    @property
    def L(self) -> float:
        c = self.constants
        return c.L if self.config.smoothness == "local" else c.L_oracle


def theory_input(resolved: Resolved, variant: VariantConfig, L: float | None = None) -> theory.TheoryInput:
    """Theory constants of ``variant`` on the resolved problem."""
    c = resolved.constants
    d = resolved.problem.dataset.dim
    w0 = np.zeros(d)
    diff = w0 - resolved.problem.w_star
    return theory.TheoryInput(
        N=resolved.problem.dataset.n_workers, omega_up=variant.uplink.omega(d),
        omega_dwn=variant.downlink.omega(d), L=resolved.L if L is None else L,
        mu=min(c.mu, resolved.L if L is None else L), B2=c.B2, sigma2_over_b=c.sigma2_over_b,
        p=variant.p, alpha=variant.alpha, gamma=variant.gamma, delta0_sq=float(diff @ diff),
        K=max(resolved.config.iterations, 1), pp_mode=variant.pp_mode.value)


def _make_variant(entry, cfg: RunConfig, dim: int, gamma: float) -> VariantConfig:
    common = dict(compression=cfg.compression, gamma=gamma, p=cfg.p, pp_mode=cfg.pp_mode,
                  schedule=cfg.schedule, alpha=cfg.alpha)
    if isinstance(entry, VariantConfig):
        return entry
    if isinstance(entry, str):
        return preset(entry, dim, **common)
    entry = dict(entry)
    base_name = entry.pop("preset", None)
    name = entry.pop("name", base_name or "custom")
    if base_name:
        over = {k: entry.pop(k) for k in list(entry) if k in ("p", "pp_mode", "alpha", "gamma", "schedule")}
        v = preset(base_name, dim, **{**common, **over})
    else:
        up = parse_kind(entry.pop("uplink", "identity"))
        down = parse_kind(entry.pop("downlink", "identity"))
        alpha = entry.pop("alpha", 0.0)
        if alpha == "auto":
            alpha = default_alpha(up, dim)
        v = VariantConfig(name, up, down, float(alpha), cfg.p, PPMode(cfg.pp_mode), gamma,
                          Schedule(cfg.schedule))
    for key in ("uplink", "downlink"):
        if key in entry:
            entry[key] = parse_kind(entry[key])
    if "pp_mode" in entry:
        entry["pp_mode"] = PPMode(entry["pp_mode"])
    return v.with_(name=name, **entry)


def resolve(cfg: RunConfig) -> Resolved:
    """Build the dataset, solve the optimum and fix the common step size."""
    try:
        dataset = cfg.dataset.build()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    objective = Objective.parse(cfg.objective)
    problem = Problem.build(objective, dataset, cfg.batch)
    constants = estimate_constants(objective, dataset, problem.w_star, cfg.batch)
    d = dataset.dim
    try:
        drafts = [_make_variant(v, cfg, d, 1.0) for v in cfg.variants]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    names = [v.name for v in drafts]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate variant names: {names}")
    L = constants.L if cfg.smoothness == "local" else constants.L_oracle
    gamma = _resolve_gamma(cfg, drafts, constants, dataset, L)
    explicit = [isinstance(v, dict) and "gamma" in v for v in cfg.variants]
    variants = [v if fixed or isinstance(raw, VariantConfig) else v.with_(gamma=gamma)
                for v, raw, fixed in zip(drafts, cfg.variants, explicit)]
    return Resolved(cfg, problem, constants, variants, gamma)


_PER_L = re.compile(r"^\s*([0-9.eE+-]+)?\s*/\s*(\d+(?:\.\d+)?)?\s*L\s*$")


def _resolve_gamma(cfg, variants, constants, dataset, L) -> float:
    g = cfg.gamma
    if isinstance(g, (int, float)) and not isinstance(g, bool):
        if g <= 0:
            raise ConfigError("gamma must be positive")
        return float(g)
    text = str(g).strip()
    if text == "auto":
        bounds = []
        for v in variants:
            inp = theory.TheoryInput(N=dataset.n_workers, omega_up=v.uplink.omega(dataset.dim),
                                     omega_dwn=v.downlink.omega(dataset.dim), L=L,
                                     mu=min(constants.mu, L), p=v.p, alpha=v.alpha)
            bounds.append(theory.gamma_max(inp))
        return cfg.gamma_factor * min(bounds)
    m = _PER_L.match(text)
    if m:
        num = float(m.group(1)) if m.group(1) else 1.0
        den = float(m.group(2)) if m.group(2) else 1.0
        return num / (den * L)
    raise ConfigError(f"cannot read step size {g!r}: use a number, 'auto' or 'c/L'")


# ---------------------------------------------------------------- traces

@dataclass
class MetricsTrace:
    """Per-iteration statistics of one variant over ``runs`` seeds."""

    variant: str
    gamma: float
    iterations: np.ndarray
    mean_log10_excess: np.ndarray
    std_log10_excess: np.ndarray
    mean_excess: np.ndarray
    up_bits: np.ndarray
    down_bits: np.ndarray
    sq_distance_mean: np.ndarray
    sq_distance_se: np.ndarray
    runs: int
    mean_log10_averaged_excess: np.ndarray | None = None
    final_w: list = field(default_factory=list)

    @property
    def total_bits(self) -> np.ndarray:
        return self.up_bits + self.down_bits

    def __len__(self) -> int:
        return len(self.iterations)


def aggregate(name: str, gamma: float, per_run: list, floor: float) -> MetricsTrace:
    """Reduce a list of per-run record lists to a :class:`MetricsTrace`."""
    excess = np.array([[r.excess_loss for r in recs] for recs in per_run])
    logs = np.log10(np.maximum(excess, floor))
    dist = np.array([[r.sq_distance for r in recs] for recs in per_run])
    up = np.array([[r.up_bits for r in recs] for recs in per_run], dtype=float).mean(axis=0)
    down = np.array([[r.down_bits for r in recs] for recs in per_run], dtype=float).mean(axis=0)
    R = len(per_run)
    se = dist.std(axis=0, ddof=1) / math.sqrt(R) if R > 1 else np.zeros(dist.shape[1])
    avg = None
    if per_run[0][0].averaged_excess is not None:
        a = np.array([[r.averaged_excess for r in recs] for recs in per_run])
        avg = np.log10(np.maximum(a, floor)).mean(axis=0)
    return MetricsTrace(name, gamma, np.arange(excess.shape[1]), logs.mean(axis=0), logs.std(axis=0),
                        excess.mean(axis=0), up, down, dist.mean(axis=0), se, R, avg)


def run_seed(base: int, r: int) -> int:
    return base + r


def run_variant(resolved: Resolved, variant: VariantConfig, iterations: int | None = None,
                runs: int | None = None) -> MetricsTrace:
    """Run one variant ``runs`` times and aggregate."""
    cfg = resolved.config
    K = cfg.iterations if iterations is None else iterations
    R = cfg.runs if runs is None else runs
    per_run, finals = [], []
    for r in range(R):
        sim = Simulation(resolved.problem, variant, seed=run_seed(cfg.seed, r),
                         per_worker_downlink=cfg.per_worker_downlink, averaging=cfg.averaging,
                         pp2_scale=cfg.pp2_scale)
        sim.run(K)
        per_run.append(sim.records)
        finals.append(sim.w.copy())
    trace = aggregate(variant.name, variant.gamma, per_run, excess_floor(resolved.problem.f_star))
    trace.final_w = finals
    return trace


@dataclass
class Experiment:
    """Result of :func:`run_experiment`."""

    resolved: Resolved
    traces: dict

    @property
    def config(self) -> RunConfig:
        return self.resolved.config

    def __getitem__(self, name: str) -> MetricsTrace:
        return self.traces[name]

    def metadata(self) -> dict:
        return experiment_metadata(self.resolved)


def run_experiment(cfg: RunConfig, out=None) -> Experiment:
    """Run every variant of ``cfg``; write CSV and metadata when ``out`` is set.

    Raises :class:`DivergenceError` (naming the variant and step size) when a
    run's excess loss exceeds the divergence guard.
    """
    resolved = resolve(cfg)
    traces = {}
    for v in resolved.variants:
        log.info("running %s (gamma=%g, %d runs x %d iterations)", v.name, v.gamma, cfg.runs, cfg.iterations)
        traces[v.name] = run_variant(resolved, v)
    exp = Experiment(resolved, traces)
    target = out if out is not None else cfg.out
    if target is not None:
        write_outputs(exp, target)
    return exp


# ---------------------------------------------------------------- output

def _fmt(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def trace_rows(traces: dict):
    for name, t in traces.items():
        for k in range(len(t)):
            row = [str(int(t.iterations[k])), name, _fmt(t.mean_log10_excess[k]), _fmt(t.std_log10_excess[k]),
                   _fmt(t.up_bits[k]), _fmt(t.down_bits[k])]
            if t.mean_log10_averaged_excess is not None:
                row.append(_fmt(t.mean_log10_averaged_excess[k]))
            yield row


def write_csv(traces: dict, path) -> Path:
    """One row per (variant, iteration); byte-identical for identical inputs."""
    path = Path(path)
    header = list(CSV_COLUMNS)
    if any(t.mean_log10_averaged_excess is not None for t in traces.values()):
        header.append("mean_log10_averaged_excess")
    lines = [",".join(header)]
    lines.extend(",".join(r) for r in trace_rows(traces))
    path.write_text("\n".join(lines) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, VariantConfig):
        return variant_dict(x)
    if isinstance(x, (str, int, bool)) or x is None:
        return x
    return str(x)


def variant_dict(v: VariantConfig) -> dict:
    return {"name": v.name, "uplink": str(v.uplink), "downlink": str(v.downlink), "alpha": v.alpha,
            "p": v.p, "pp_mode": v.pp_mode.value, "gamma": v.gamma, "schedule": v.schedule.value}


def experiment_metadata(resolved: Resolved) -> dict:
    cfg = resolved.config
    c = resolved.constants
    meta = {
        "config": asdict(cfg),
        "constants": {"L": c.L, "L_sto": c.L_sto, "mu": c.mu, "B2": c.B2, "sigma2": c.sigma2,
                      "sigma2_over_b": c.sigma2_over_b, "f_star": resolved.problem.f_star,
                      "w_star": resolved.problem.w_star.tolist()},
        "gamma": resolved.gamma,
        "variants": {},
    }
    for v in resolved.variants:
        try:
            consts = theory.summary(theory_input(resolved, v))
        except theory.TheoryError as exc:
            consts = {"error": str(exc)}
        meta["variants"][v.name] = {"variant": variant_dict(v), "theory": consts}
    return _jsonable(meta)


def write_outputs(exp: Experiment, out) -> tuple:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stem = exp.config.name
    csv_path = write_csv(exp.traces, out / f"{stem}.csv")
    meta_path = out / f"{stem}.json"
    meta_path.write_text(json.dumps(exp.metadata(), indent=2, sort_keys=True) + "\n")
    return csv_path, meta_path


# ---------------------------------------------------------------- trace analysis

@dataclass(frozen=True)
class Plateau:
    level: float
    saturated: bool
    slope: float


def estimate_plateau(trace, tail: float = 0.1, slope_window: float = 0.2, slope_tol: float = 1e-3) -> Plateau:
    """Mean excess loss over the last ``tail`` of the run, with a saturation flag.

    ``trace`` is a :class:`MetricsTrace` or a 1-d array of excess losses.  The
    flag is set when the least-squares slope of log10 excess loss over the
    last ``slope_window`` of the run is below ``slope_tol`` per iteration.
    """
    if isinstance(trace, MetricsTrace):
        excess = trace.mean_excess
        logs = trace.mean_log10_excess
    else:
        excess = np.asarray(trace, dtype=float)
        logs = np.log10(np.maximum(excess, np.finfo(float).tiny))
    n = len(excess)
    if n < 2:
        raise ValueError("need at least two points to estimate a plateau")
    start = min(n - 1, int(math.floor(n * (1 - tail))))
    level = float(np.mean(excess[start:]))
    s0 = min(n - 2, int(math.floor(n * (1 - slope_window))))
    x = np.arange(s0, n, dtype=float)
    slope = float(np.polyfit(x, logs[s0:], 1)[0])
    return Plateau(level, abs(slope) < slope_tol, slope)


def bits_to_target(trace: MetricsTrace, target: float):
    """Total bits at the first iteration whose mean excess loss is ``<= target``.

    Returns :data:`UNREACHABLE` (``None``) when the trace never gets there.
    """
    hits = np.flatnonzero(trace.mean_excess <= target)
    if hits.size == 0:
        return UNREACHABLE
    k = int(hits[0])
    return int(round(trace.up_bits[k] + trace.down_bits[k]))


def distance_bound_curve(resolved: Resolved, variant: VariantConfig, L: float | None = None) -> np.ndarray:
    """Upper bound on the mean squared distance at every iteration."""
    inp = theory_input(resolved, variant, L)
    k = np.arange(resolved.config.iterations + 1)
    return theory.distance_bound(inp, k)


def admissible(resolved: Resolved, variant: VariantConfig, L: float | None = None) -> bool:
    """Whether ``variant``'s step size lies inside the theoretical range."""
    inp = theory_input(resolved, variant, L)
    try:
        if variant.gamma > theory.gamma_max(inp):
            return False
        if inp.memory:
            lo, hi = theory.alpha_range(inp)
            if not lo - 1e-12 <= variant.alpha < hi:
                return False
        theory.constant_E(inp)
    except theory.TheoryError:
        return False
    return variant.schedule is Schedule.CONSTANT


# ---------------------------------------------------------------- partial participation

@dataclass
class PPComparison:
    traces: dict
    empirical_variance: float
    predicted_variance: float
    variance_se: float


def pp_aggregate_variance(problem: Problem, p: float, draws: int = 100_000, seed: int = 0):
    """Monte-Carlo variance of the server aggregate at ``w_*`` for plain SGD under PP1.

    Every draw samples the participants and runs one server round with exact
    local gradients; returns ``(mean ||g_hat - grad F(w_*)||^2, standard error)``.
    """
    ds = problem.dataset
    N, d = ds.n_workers, ds.dim
    variant = VariantConfig("SGD-PP1", p=p, pp_mode=PPMode.PP1, gamma=1.0)
    grads = np.array([s.X.T @ _residual(problem, s) / s.size for s in ds.shards])
    full = grads.mean(axis=0)
    draw = ChunkedUniforms(seed, "participation", N)
    zeros = np.zeros(d)
    server = new_server(zeros, N, variant)
    sq = np.empty(draws)
    for k in range(draws):
        u = draw(k)
        active = np.flatnonzero(u < p)
        server.w = zeros
        omega = server_round(server, grads[active], active, variant, zeros, N, 1.0)
        diff = omega.payload - full
        sq[k] = diff @ diff
    return float(sq.mean()), float(sq.std(ddof=1) / math.sqrt(draws))


def _residual(problem: Problem, shard):
    z = shard.X @ problem.w_star
    if problem.objective is Objective.LEAST_SQUARES:
        return z - shard.y
    from scipy.special import expit
    return -shard.y * expit(-shard.y * z)


def compare_pp_modes(cfg: RunConfig, draws: int = 100_000) -> PPComparison:
    """Run every variant under PP1 and PP2 with identical draws.

    Trace keys are ``"<variant>/PP1"`` and ``"<variant>/PP2"``.
    """
    base = resolve(cfg)
    traces = {}
    for v in base.variants:
        for mode in (PPMode.PP1, PPMode.PP2):
            vv = v.with_(name=f"{v.name}/{mode.value}", pp_mode=mode)
            traces[vv.name] = run_variant(base, vv)
    c = base.constants
    N = base.problem.dataset.n_workers
    predicted = (1 - cfg.p) * c.B2 / (N * cfg.p)
    emp, se = pp_aggregate_variance(base.problem, cfg.p, draws, cfg.seed) if cfg.p < 1 else (0.0, 0.0)
    return PPComparison(traces, emp, predicted, se)


# ---------------------------------------------------------------- figure presets

def _lsr_noisy(**kw) -> RunConfig:
    return RunConfig(name="lsr-noisy", dataset=DatasetSpec("lsr", N=20, n=200, d=20, noise_var=0.4),
                     objective="lsr", variants=("SGD", "QSGD", "Diana", "Bi-QSGD", "Artemis"),
                     batch=1, iterations=20_000, runs=5,
                     note="noisy least squares; 100 epochs of n/b = 200 iterations").with_(**kw)


def _lsr_noiseless(**kw) -> RunConfig:
    return RunConfig(name="lsr-noiseless", dataset=DatasetSpec("lsr", N=10, n=200, d=20, noise_var=0.0),
                     objective="lsr", variants=("SGD", "QSGD", "Diana", "Bi-QSGD", "Artemis"),
                     batch=1, iterations=3000, runs=5,
                     note="interpolation regime; every variant converges linearly").with_(**kw)


def _logistic_noniid(**kw) -> RunConfig:
    return RunConfig(name="logistic-noniid", dataset=DatasetSpec("logistic-noniid", N=10, n=200, d=2),
                     objective="logistic", variants=("SGD", "QSGD", "Diana", "Bi-QSGD", "Artemis"),
                     batch=FULL, iterations=5000, runs=5,
                     note="two heterogeneous populations, exact local gradients").with_(**kw)


def _logistic_noniid_avg(**kw) -> RunConfig:
    return _logistic_noniid(name="logistic-noniid-avg", batch=1, averaging=True, schedule="constant",
                            iterations=5000,
                            note="mini-batch gradients with Polyak-Ruppert averaging").with_(**kw)


def _pp(mode: str, **kw) -> RunConfig:
    return _logistic_noniid(name=f"{mode.lower()}-noniid", variants=("SGD", "Diana", "Bi-QSGD", "Artemis"),
                            p=0.5, pp_mode=mode, iterations=5000,
                            note=f"half of the workers participate each round, {mode} server memory").with_(**kw)


def _lsr_d16_bits(**kw) -> RunConfig:
    return RunConfig(name="lsr-d16-bits", dataset=DatasetSpec("lsr", N=10, n=200, d=16, noise_var=0.0),
                     objective="lsr", variants=("SGD", "QSGD", "Diana", "Bi-QSGD", "Artemis"),
                     batch=1, iterations=3000, runs=5,
                     note="bit budget of bidirectional quantization in dimension 16").with_(**kw)


PRESETS = {
    "lsr-noisy": _lsr_noisy,
    "lsr-noiseless": _lsr_noiseless,
    "logistic-noniid": _logistic_noniid,
    "logistic-noniid-avg": _logistic_noniid_avg,
    "pp1-noniid": lambda **kw: _pp("PP1", **kw),
    "pp2-noniid": lambda **kw: _pp("PP2", **kw),
    "lsr-d16-bits": _lsr_d16_bits,
}


def figure_preset(name: str, **overrides) -> RunConfig:
    """Named experiment; keyword arguments override any :class:`RunConfig` field."""
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
    return factory(**overrides)
