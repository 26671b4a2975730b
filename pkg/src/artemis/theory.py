"""Step-size bounds, memory-rate ranges and saturation constants.

All functions are pure and take a :class:`TheoryInput`.  The variant is read
from the input: ``alpha == 0`` is the memoryless family, ``alpha > 0`` the
family with memory.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, replace

_FLAT = 1e-12


class TheoryError(ValueError):
    """Raised when a configuration lies outside the range covered by the bounds."""


@dataclass(frozen=True)
class TheoryInput:
    N: int
    omega_up: float = 0.0
    omega_dwn: float = 0.0
    L: float = 1.0
    mu: float = 1.0
    B2: float = 0.0
    sigma2_over_b: float = 0.0
    p: float = 1.0
    alpha: float = 0.0
    gamma: float | None = None
    delta0_sq: float = 0.0
    K: int = 1
    pp_mode: str = "PP2"

    def __post_init__(self):
        if self.N < 1:
            raise TheoryError("N must be positive")
        for name in ("omega_up", "omega_dwn", "L", "mu", "B2", "sigma2_over_b", "alpha", "delta0_sq"):
            if getattr(self, name) < 0:
                raise TheoryError(f"{name} must be nonnegative")
        if not 0.0 < self.p <= 1.0:
            raise TheoryError("p must lie in (0, 1]")
        if self.L <= 0:
            raise TheoryError("L must be positive")
        if self.mu > self.L * (1 + 1e-12):
            raise TheoryError(f"mu ({self.mu}) cannot exceed L ({self.L})")

    @property
    def memory(self) -> bool:
        return self.alpha != 0.0

    def with_(self, **changes) -> "TheoryInput":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


def _gamma(inp: TheoryInput) -> float:
    if inp.gamma is None or inp.gamma <= 0:
        raise TheoryError("a positive step size gamma is required")
    return inp.gamma


def gamma_max(inp: TheoryInput, memory: bool | None = None) -> float:
    """Largest step size for which the linear-rate guarantee holds."""
    memory = inp.memory if memory is None else memory
    N, p, L = inp.N, inp.p, inp.L
    wu, wd = inp.omega_up, inp.omega_dwn
    if not memory:
        value = p * N / (L * (wd + 1) * (p * N + 2 * (wu + 1)))
    else:
        terms = [
            1.0 / ((wd + 1) * (1 + 2.0 / (N * p)) * L),
            # a nonpositive bracket makes this constraint vacuous
            _guarded(3.0, (wd + 1) * (3 + (8 * (wu - 1) - 2 * p) / (N * p)) * L),
            N / ((wd + 1) * (N + 4 * (wu + 1) / p - 2) * L),
        ]
        value = min(terms)
    if not value > 0 or not math.isfinite(value):
        raise TheoryError(f"no admissible step size for {inp}")
    return value


def _guarded(num: float, den: float) -> float:
    return num / den if den > 0 else math.inf


def table_regime(N: int, omega_up: float) -> str:
    """Coarse regime used by the summary table: ``N>>w``, ``N~w`` or ``w>>N``."""
    if omega_up == 0 or N >= 10 * omega_up:
        return "N>>w"
    if omega_up >= 10 * N:
        return "w>>N"
    return "N~w"


def gamma_max_summary(inp: TheoryInput) -> float:
    """Order-of-magnitude step-size bound from the summary table."""
    regime = table_regime(inp.N, inp.omega_up)
    wd1 = inp.omega_dwn + 1
    if regime == "N>>w":
        factor = 2 if inp.memory else 1
        return 1.0 / (factor * wd1 * inp.L)
    if regime == "N~w":
        factor = 5 if inp.memory else 3
        return 1.0 / (factor * wd1 * inp.L)
    factor = 4 if inp.memory else 2
    return inp.N / (factor * inp.omega_up * wd1 * inp.L)


def alpha_range(inp: TheoryInput) -> tuple:
    """``(alpha_min, alpha_max)``; ``alpha`` must satisfy ``alpha_min <= alpha < alpha_max``."""
    gamma = _gamma(inp)
    N, p, L = inp.N, inp.p, inp.L
    wu, wd = inp.omega_up, inp.omega_dwn
    lo = 1.0 / (2 * (wu + 1))
    num = 3 * N - gamma * L * (wd + 1) * (3 * N + 8 * (wu + 1) / p - 2)
    den = 2 * (wu + 1) * (N - gamma * L * (wd + 1) * (N + 2))
    if den <= 0:
        raise TheoryError(f"step size {gamma:g} too large: N - gamma L (w_dwn+1)(N+2) <= 0")
    hi = min(3.0 / (2 * (wu + 1)), num / den)
    if hi <= lo:
        raise TheoryError(f"empty memory-rate range at step size {gamma:g}: need "
                          f"gamma < N / (L (w_dwn+1)(N + 4(w_up+1)/p - 2))")
    return lo, hi


def constant_C_interval(inp: TheoryInput) -> tuple:
    """Admissible interval for the Lyapunov weight ``C`` (memory variants)."""
    if not inp.memory:
        return 0.0, 0.0
    gamma = _gamma(inp)
    N, p, L, a = inp.N, inp.p, inp.L, inp.alpha
    wu, wd = inp.omega_up, inp.omega_dwn
    lo = _c_lo(inp)
    hi_num = N - gamma * L * (wd + 1) * (N + 4 * (wu + 1) / p - 2)
    slack = 2 * a * (wu + 1) - 1
    if slack < -_FLAT:
        raise TheoryError(f"memory rate {a:g} below 1/(2(w_up+1))")
    if hi_num <= 0:
        raise TheoryError(f"step size {gamma:g} leaves no room for C")
    hi = math.inf if abs(slack) <= _FLAT else hi_num / (4 * gamma * L * p * a * slack)
    if hi < lo:
        raise TheoryError(f"empty interval for C: [{lo:g}, {hi:g}]")
    return lo, hi


def _c_lo(inp: TheoryInput) -> float:
    a, p, wu, wd = inp.alpha, inp.p, inp.omega_up, inp.omega_dwn
    den = a * p * (3 - 2 * a * (wu + 1))
    if den <= 0:
        raise TheoryError(f"memory rate {a:g} too large: 3 - 2 alpha (w_up+1) <= 0")
    return (wd + 1) * ((wu + 1) / p - 1) / den


def constant_C(inp: TheoryInput) -> float:
    """Reported ``C``: the lower end of the admissible interval (0 without memory).

    The lower end does not depend on ``gamma``; use
    :func:`constant_C_interval` to check that the interval is nonempty.
    """
    return _c_lo(inp) if inp.memory else 0.0


def constant_E(inp: TheoryInput) -> float:
    """Variance constant of the saturation level."""
    wu, wd, p = inp.omega_up, inp.omega_dwn, inp.p
    s2 = inp.sigma2_over_b
    if not inp.memory:
        return (wd + 1) * ((wu + 1) * s2 + (wu + 1 - p) * inp.B2)
    if inp.pp_mode == "PP1" and p < 1:
        raise TheoryError("no saturation bound for per-worker server memories under partial participation")
    if s2 == 0:
        return 0.0
    C = constant_C(inp)
    return s2 * ((wd + 1) * (2 * (wu + 1) / p - 1) + 2 * p * C * (2 * inp.alpha**2 * (wu + 1) - inp.alpha))


def predict_saturation(inp: TheoryInput) -> float:
    """Predicted limit of ``E||w_k - w_*||^2`` for a constant step size."""
    gamma = _gamma(inp)
    if inp.mu <= 0:
        raise TheoryError("saturation level needs mu > 0")
    E = constant_E(inp)
    if inp.memory:
        return 2 * gamma * E / (inp.mu * inp.N)
    return 2 * gamma * E / (inp.mu * inp.p * inp.N)


def distance_bound(inp: TheoryInput, k) -> float:
    """Upper bound on ``E||w_k - w_*||^2`` after ``k`` iterations."""
    gamma = _gamma(inp)
    C = constant_C(inp)
    bias = inp.delta0_sq + 2 * C * gamma**2 * inp.B2
    return (1 - gamma * inp.mu) ** k * bias + predict_saturation(inp)


@dataclass(frozen=True)
class AveragingRate:
    gamma: float
    bound: float


def gamma_opt_averaging(inp: TheoryInput) -> AveragingRate:
    """Step size and excess-loss bound for the averaged iterate after ``K`` steps."""
    if inp.K < 1:
        raise TheoryError("horizon K must be >= 1")
    g_max = gamma_max(inp)
    probe = inp.with_(gamma=g_max)
    E = constant_E(probe)
    C = constant_C(probe)
    N, K, d0 = inp.N, inp.K, inp.delta0_sq
    if E > 0:
        gamma = min(math.sqrt(N * d0 / (2 * E * K)), g_max)
    else:
        gamma = g_max
    bound = 2 * max(math.sqrt(2 * d0 * E / (N * K)), d0 / (g_max * K)) + 2 * g_max * C * inp.B2 / K
    return AveragingRate(gamma, bound)


def summary(inp: TheoryInput) -> dict:
    """Every constant for one configuration, as an ordered mapping."""
    out = {"memory": inp.memory, "regime": table_regime(inp.N, inp.omega_up)}
    out["gamma_max"] = gamma_max(inp)
    out["gamma_max_summary"] = gamma_max_summary(inp)
    probe = inp if inp.gamma else inp.with_(gamma=out["gamma_max"] / 2)
    out["gamma"] = probe.gamma
    if inp.memory:
        try:
            out["alpha_min"], out["alpha_max"] = alpha_range(probe)
        except TheoryError as exc:
            out["alpha_range"] = f"empty ({exc})"
        try:
            out["C_lo"], out["C_hi"] = constant_C_interval(probe)
        except TheoryError as exc:
            out["C_interval"] = f"empty ({exc})"
    try:
        out["E"] = constant_E(probe)
        out["saturation"] = predict_saturation(probe) if inp.mu > 0 else math.nan
    except TheoryError as exc:
        out["E"] = f"undefined ({exc})"
    if inp.K >= 1 and isinstance(out.get("E"), float):
        try:
            rate = gamma_opt_averaging(inp)
            out["gamma_opt_averaging"] = rate.gamma
            out["averaging_bound"] = rate.bound
        except TheoryError:
            pass
    return out
