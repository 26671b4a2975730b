"""Objectives, gradient oracles and datasets.

Two objectives are supported on data split across ``N`` workers:

* least squares, ``F_i(w) = 1/(2 n_i) sum_j (x_j.w - y_j)^2``
* logistic, ``F_i(w) = 1/n_i sum_j log(1 + exp(-y_j x_j.w))`` with labels in {-1, +1}

and the global objective is the plain average ``F = 1/N sum_i F_i``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import eigh
from scipy.optimize import linprog
from scipy.special import expit

from .rng import RngStream

FULL = "full"


class Objective(str, enum.Enum):
    LEAST_SQUARES = "lsr"
    LOGISTIC = "logistic"

    @classmethod
    def parse(cls, value) -> "Objective":
        if isinstance(value, cls):
            return value
        text = str(value).strip().lower()
        aliases = {"lsr": cls.LEAST_SQUARES, "least_squares": cls.LEAST_SQUARES,
                   "leastsquares": cls.LEAST_SQUARES, "logistic": cls.LOGISTIC,
                   "lr": cls.LOGISTIC}
        try:
            return aliases[text]
        except KeyError:
            raise ValueError(f"unknown objective {value!r}") from None


@dataclass(frozen=True)
class Shard:
    X: np.ndarray
    y: np.ndarray

    @property
    def size(self) -> int:
        return self.X.shape[0]


@dataclass(frozen=True)
class Dataset:
    shards: tuple
    true_model: np.ndarray | None = None
    description: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.shards:
            raise ValueError("a dataset needs at least one shard")
        dims = {s.X.shape[1] for s in self.shards}
        if len(dims) != 1:
            raise ValueError(f"shards disagree on dimension: {sorted(dims)}")
        for i, s in enumerate(self.shards):
            if s.size == 0:
                raise ValueError(f"shard {i} is empty")
            if s.y.shape != (s.size,):
                raise ValueError(f"shard {i}: labels do not match features")

    @property
    def n_workers(self) -> int:
        return len(self.shards)

    @property
    def dim(self) -> int:
        return self.shards[0].X.shape[1]

    @property
    def sizes(self) -> np.ndarray:
        return np.array([s.size for s in self.shards])

    def pooled(self):
        return (np.concatenate([s.X for s in self.shards]),
                np.concatenate([s.y for s in self.shards]))


# ---------------------------------------------------------------- losses

def shard_loss(objective: Objective, X, y, w) -> float:
    z = X @ w
    if objective is Objective.LEAST_SQUARES:
        r = z - y
        return 0.5 * float(r @ r) / len(y)
    return float(np.mean(np.logaddexp(0.0, -y * z)))


def shard_gradient(objective: Objective, X, y, w) -> np.ndarray:
    """Exact gradient of the mean loss over the rows of ``X``."""
    z = X @ w
    if objective is Objective.LEAST_SQUARES:
        coef = z - y
    else:
        coef = -y * expit(-y * z)
    return X.T @ coef / len(y)


def per_sample_gradients(objective: Objective, X, y, w) -> np.ndarray:
    z = X @ w
    if objective is Objective.LEAST_SQUARES:
        coef = z - y
    else:
        coef = -y * expit(-y * z)
    return coef[:, None] * X


def global_loss(objective: Objective, dataset: Dataset, w) -> float:
    return float(np.mean([shard_loss(objective, s.X, s.y, w) for s in dataset.shards]))


def global_gradient(objective: Objective, dataset: Dataset, w) -> np.ndarray:
    return np.mean([shard_gradient(objective, s.X, s.y, w) for s in dataset.shards], axis=0)


def batch_indices(uniforms, n: int) -> np.ndarray:
    """Map uniforms in [0, 1) to sample indices drawn with replacement."""
    return np.minimum((np.asarray(uniforms) * n).astype(np.int64), n - 1)


def stochastic_gradient(objective: Objective, shard: Shard, w, batch, rng) -> np.ndarray:
    """Mean of ``batch`` per-sample gradients drawn uniformly with replacement.

    ``batch == FULL`` returns the exact local gradient and ignores ``rng``.
    """
    w = np.asarray(w, dtype=float)
    if batch == FULL or batch is None:
        return shard_gradient(objective, shard.X, shard.y, w)
    if batch < 1:
        raise ValueError("batch size must be positive")
    u = rng.uniform(batch) if isinstance(rng, RngStream) else rng.random(batch)
    idx = batch_indices(u, shard.size)
    return shard_gradient(objective, shard.X[idx], shard.y[idx], w)


class GradientOracle:
    """Vectorised stochastic gradients for a subset of workers.

    Equal-sized shards are stacked into one ``(N, n, d)`` array so that a
    round costs a handful of numpy calls whatever the number of workers.
    """

    def __init__(self, objective: Objective, dataset: Dataset, batch=FULL):
        self.objective = Objective.parse(objective)
        self.dataset = dataset
        if batch not in (FULL, None):
            batch = int(batch)
            if batch < 1 or batch > int(dataset.sizes.min()):
                raise ValueError(f"batch size {batch} must lie in [1, min shard size]")
        else:
            batch = FULL
        self.batch = batch
        sizes = dataset.sizes
        self._stacked = bool(np.all(sizes == sizes[0]))
        if self._stacked:
            self._X = np.stack([s.X for s in dataset.shards])
            self._y = np.stack([s.y for s in dataset.shards])

    @property
    def full(self) -> bool:
        return self.batch == FULL

    def _coef(self, z, y):
        if self.objective is Objective.LEAST_SQUARES:
            return z - y
        return -y * expit(-y * z)

    def gradients(self, w, workers, uniforms=None) -> np.ndarray:
        """Stochastic gradients at ``w`` for ``workers``.

        ``uniforms`` holds one row of ``batch`` uniforms per entry of
        ``workers`` (unused for full batches).
        """
        workers = np.asarray(workers, dtype=np.int64)
        d = self.dataset.dim
        if workers.size == 0:
            return np.zeros((0, d))
        if self._stacked:
            if self.full:
                X = self._X[workers]
                y = self._y[workers]
            else:
                idx = batch_indices(uniforms, self._X.shape[1])
                X = self._X[workers[:, None], idx]
                y = self._y[workers[:, None], idx]
            z = np.einsum("mbd,d->mb", X, w)
            coef = self._coef(z, y)
            return np.einsum("mbd,mb->md", X, coef) / X.shape[1]
        out = np.empty((workers.size, d))
        for row, i in enumerate(workers):
            shard = self.dataset.shards[i]
            if self.full:
                X, y = shard.X, shard.y
            else:
                idx = batch_indices(uniforms[row], shard.size)
                X, y = shard.X[idx], shard.y[idx]
            out[row] = X.T @ self._coef(X @ w, y) / len(y)
        return out


# ---------------------------------------------------------------- generators

def gen_lsr(N: int, n: int, d: int, noise_std: float = 0.0, seed: int = 0,
            covariance=None) -> Dataset:
    """Least-squares data: Gaussian features, labels ``<w, x> + e`` with ``e ~ N(0, noise_std^2)``.

    The label noise is drawn once per point and frozen in the dataset, so the
    objective is the empirical risk.  ``noise_std = 0`` gives an interpolating
    problem where every per-sample gradient vanishes at the optimum.
    """
    if min(N, n, d) < 1:
        raise ValueError("N, n and d must be positive")
    if noise_std < 0:
        raise ValueError("noise_std must be nonnegative")
    g = RngStream(seed, "gen_lsr").generator()
    true_w = g.standard_normal(d)
    chol = None if covariance is None else np.linalg.cholesky(np.asarray(covariance, dtype=float))
    shards = []
    for _ in range(N):
        X = g.standard_normal((n, d))
        if chol is not None:
            X = X @ chol.T
        noise = g.standard_normal(n) * noise_std
        shards.append(Shard(X, X @ true_w + noise))
    return Dataset(tuple(shards), true_w,
                   {"generator": "lsr", "N": N, "n": n, "d": d, "noise_std": noise_std, "seed": seed})


LOGISTIC_MODELS = (np.array([10.0, 10.0]), np.array([10.0, -10.0]))
LOGISTIC_COVARIANCES = (np.eye(2), np.diag([1.0, 4.0]))


def gen_logistic_noniid(N: int, n: int, seed: int = 0, covariances=LOGISTIC_COVARIANCES,
                        models=LOGISTIC_MODELS) -> Dataset:
    """Two-population logistic data in dimension 2.

    Worker ``i`` (0-based) draws ``x ~ N(0, covariances[i % 2])`` and the label
    ``+1`` with probability ``sigmoid(<models[i % 2], x>)``, ``-1`` otherwise.
    """
    if N < 2 or N % 2:
        raise ValueError(f"the non-i.i.d. logistic generator needs an even number of workers, got {N}")
    g = RngStream(seed, "gen_logistic").generator()
    chols = [np.linalg.cholesky(np.asarray(c, dtype=float)) for c in covariances]
    shards = []
    for i in range(N):
        X = g.standard_normal((n, 2)) @ chols[i % 2].T
        prob = expit(X @ models[i % 2])
        y = np.where(g.random(n) < prob, 1.0, -1.0)
        shards.append(Shard(X, y))
    return Dataset(tuple(shards), None,
                   {"generator": "logistic_noniid", "N": N, "n": n, "seed": seed})


# ---------------------------------------------------------------- optimum & constants

@dataclass(frozen=True)
class Optimum:
    w: np.ndarray
    loss: float
    grad_norm: float


def solve_optimum(objective, dataset: Dataset, ridge: float | None = None,
                  tol: float = 1e-10, max_iter: int = 1_000_000) -> Optimum:
    """Minimiser of the global objective.

    Least squares solves the normal equations of ``F = 1/N sum F_i`` exactly
    (``ridge`` adds ``ridge * I`` for degenerate designs).  Logistic regression
    runs damped Newton steps until the gradient norm drops below ``tol``.
    """
    objective = Objective.parse(objective)
    d = dataset.dim
    if objective is Objective.LEAST_SQUARES:
        A = np.zeros((d, d))
        rhs = np.zeros(d)
        for s in dataset.shards:
            A += s.X.T @ s.X / s.size
            rhs += s.X.T @ s.y / s.size
        A /= dataset.n_workers
        rhs /= dataset.n_workers
        if ridge:
            A = A + ridge * np.eye(d)
        elif np.linalg.matrix_rank(A) < d:
            raise ValueError("least-squares design is rank deficient; pass ridge=1e-10")
        w = np.linalg.solve(A, rhs)
        # one step of iterative refinement
        w = w + np.linalg.solve(A, rhs - A @ w)
    else:
        if linearly_separable(*dataset.pooled()):
            raise ValueError("logistic loss has no finite minimiser: the data are linearly separable")
        w = np.zeros(d)
        resolution = 64 * np.finfo(float).eps
        for _ in range(max_iter):
            g = global_gradient(objective, dataset, w)
            gn = np.linalg.norm(g)
            if gn <= tol:
                break
            step = np.linalg.solve(logistic_hessian(dataset, w) + 1e-14 * np.eye(d), g)
            f0 = global_loss(objective, dataset, w)
            if g @ step <= resolution * (1.0 + abs(f0)):
                # the loss no longer resolves progress: judge by the gradient instead
                cand = w - step
                if np.linalg.norm(global_gradient(objective, dataset, cand)) < gn:
                    w = cand
                    continue
                break
            t = 1.0
            while t > 1e-12 and global_loss(objective, dataset, w - t * step) > f0 - 1e-4 * t * (g @ step):
                t *= 0.5
            if t <= 1e-12:
                # no descent from Newton direction: fall back to a gradient step
                w = w - g / hessian_bound(objective, dataset)
            else:
                w = w - t * step
            if np.linalg.norm(w) > 1e8:
                raise ValueError("logistic loss has no finite minimiser (linearly separable data?)")
        # polish: full Newton steps while the gradient keeps shrinking
        g = global_gradient(objective, dataset, w)
        for _ in range(5):
            cand = w - np.linalg.solve(logistic_hessian(dataset, w), g)
            g_new = global_gradient(objective, dataset, cand)
            if not np.linalg.norm(g_new) < np.linalg.norm(g):
                break
            w, g = cand, g_new
    g = global_gradient(objective, dataset, w)
    return Optimum(w, global_loss(objective, dataset, w), float(np.linalg.norm(g)))


def linearly_separable(X, y) -> bool:
    """Whether some ``w`` satisfies ``y_j <x_j, w> >= 1`` for every row."""
    res = linprog(np.zeros(X.shape[1]), A_ub=-(y[:, None] * X), b_ub=-np.ones(len(y)),
                  bounds=[(None, None)] * X.shape[1], method="highs")
    return res.status == 0


def logistic_hessian(dataset: Dataset, w) -> np.ndarray:
    d = dataset.dim
    H = np.zeros((d, d))
    for s in dataset.shards:
        z = s.X @ w
        weight = expit(z) * expit(-z)
        H += (s.X * weight[:, None]).T @ s.X / s.size
    return H / dataset.n_workers


def hessian_at(objective, dataset: Dataset, w) -> np.ndarray:
    objective = Objective.parse(objective)
    if objective is Objective.LOGISTIC:
        return logistic_hessian(dataset, w)
    d = dataset.dim
    H = np.zeros((d, d))
    for s in dataset.shards:
        H += s.X.T @ s.X / s.size
    return H / dataset.n_workers


def hessian_bound(objective, dataset: Dataset) -> float:
    """Largest smoothness constant among the local objectives."""
    objective = Objective.parse(objective)
    scale = 1.0 if objective is Objective.LEAST_SQUARES else 0.25
    return scale * max(float(np.linalg.eigvalsh(s.X.T @ s.X / s.size)[-1]) for s in dataset.shards)


def cocoercivity_constant(objective, dataset: Dataset, batch=FULL) -> float:
    """Smallest ``L`` with ``E||g(w1) - g(w2)||^2 <= L <grad F_i(w1) - grad F_i(w2), w1 - w2>``.

    For exact gradients this is the local smoothness constant.  For least
    squares with ``b`` samples drawn with replacement the second moment is
    ``S / b + (1 - 1/b) H^2`` with ``S = mean ||x||^2 x x^T``, and ``L`` is its
    largest generalised eigenvalue against ``H``.  For the logistic loss with
    mini-batches the almost-sure bound ``max ||x||^2 / 4`` is used.
    """
    objective = Objective.parse(objective)
    if batch == FULL or batch is None:
        return hessian_bound(objective, dataset)
    b = int(batch)
    if objective is Objective.LOGISTIC:
        return 0.25 * max(float(np.max(np.einsum("ij,ij->i", s.X, s.X))) for s in dataset.shards)
    worst = 0.0
    for s in dataset.shards:
        H = s.X.T @ s.X / s.size
        sq = np.einsum("ij,ij->i", s.X, s.X)
        S = (s.X * sq[:, None]).T @ s.X / s.size
        M = S / b + (1.0 - 1.0 / b) * H @ H
        try:
            top = float(eigh(M, H, eigvals_only=True)[-1])
        except np.linalg.LinAlgError:
            top = float(np.max(sq))  # singular local Hessian
        worst = max(worst, top)
    return worst


@dataclass(frozen=True)
class ProblemConstants:
    """``L`` smoothness of the local objectives, ``L_sto`` cocoercivity of the oracle."""

    L: float
    mu: float
    B2: float
    sigma2: float
    batch: object = FULL
    L_sto: float | None = None

    @property
    def sigma2_over_b(self) -> float:
        if self.batch == FULL:
            return 0.0
        return self.sigma2 / int(self.batch)

    @property
    def L_oracle(self) -> float:
        return self.L if self.L_sto is None else self.L_sto


def estimate_constants(objective, dataset: Dataset, w_star=None, batch=FULL) -> ProblemConstants:
    """Smoothness, strong convexity, heterogeneity and noise at the optimum.

    ``L`` is the largest local smoothness constant (for the logistic loss the
    global bound ``lambda_max(X^T X) / 4n``), ``L_sto`` the cocoercivity
    constant of the stochastic oracle (see :func:`cocoercivity_constant`),
    ``mu`` the smallest eigenvalue of the pooled Hessian at ``w_star``,
    ``B2 = 1/N sum ||grad F_i(w_star)||^2`` and ``sigma2`` the per-sample
    gradient variance at ``w_star`` averaged over workers.
    """
    objective = Objective.parse(objective)
    if w_star is None:
        w_star = solve_optimum(objective, dataset).w
    eig = np.linalg.eigvalsh(hessian_at(objective, dataset, w_star))
    L = hessian_bound(objective, dataset)
    mu = float(max(eig[0], 0.0))
    B2 = 0.0
    sigma2 = 0.0
    for s in dataset.shards:
        per = per_sample_gradients(objective, s.X, s.y, w_star)
        mean = per.mean(axis=0)
        B2 += float(mean @ mean)
        sigma2 += float(np.mean(np.sum((per - mean) ** 2, axis=1)))
    N = dataset.n_workers
    return ProblemConstants(L=L, mu=min(mu, L), B2=B2 / N, sigma2=sigma2 / N, batch=batch,
                            L_sto=cocoercivity_constant(objective, dataset, batch))


# ---------------------------------------------------------------- CSV ingestion

def load_csv(path, n_workers: int, partition="round-robin", header: bool = False,
             standardize: bool = True, feature: int = 0, labels=None) -> Dataset:
    """Read ``features..., label`` rows and split them across workers.

    ``partition`` is ``"round-robin"``, ``"quantile"`` (contiguous quantile
    groups of column ``feature``, one group per worker) or a path to a file
    with one integer worker id per data row.  ``labels="pm1"`` maps a {0, 1}
    label column to {-1, +1}.
    """
    path = Path(path)
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1 if header else 0, ndmin=2)
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric cell ({exc})") from None
    if raw.shape[1] < 2:
        raise ValueError(f"{path}: need at least one feature column and a label column")
    if not np.all(np.isfinite(raw)):
        raise ValueError(f"{path}: non-finite values")
    X, y = raw[:, :-1], raw[:, -1]
    if labels == "pm1":
        y = np.where(y > 0, 1.0, -1.0)
    if standardize:
        std = X.std(axis=0)
        X = (X - X.mean(axis=0)) / np.where(std > 0, std, 1.0)
    owner = assign_workers(raw[:, :-1], n_workers, partition, feature)
    shards = []
    for i in range(n_workers):
        rows = np.flatnonzero(owner == i)
        if rows.size == 0:
            raise ValueError(f"{path}: partition leaves worker {i} without data")
        shards.append(Shard(X[rows], y[rows]))
    return Dataset(tuple(shards), None, {"csv": str(path), "partition": str(partition), "N": n_workers})


def assign_workers(features, n_workers: int, partition, feature: int = 0) -> np.ndarray:
    m = features.shape[0]
    if partition == "round-robin":
        return np.arange(m) % n_workers
    if partition == "quantile":
        order = np.argsort(features[:, feature], kind="stable")
        owner = np.empty(m, dtype=np.int64)
        for i, chunk in enumerate(np.array_split(order, n_workers)):
            owner[chunk] = i
        return owner
    ids_path = Path(partition)
    if not ids_path.exists():
        raise ValueError(f"unknown partition {partition!r} (not a scheme and no such file)")
    text = ids_path.read_text().split()
    try:
        owner = np.array([int(t) for t in text], dtype=np.int64)
    except ValueError:
        raise ValueError(f"{ids_path}: worker ids must be integers") from None
    if owner.size != m:
        raise ValueError(f"{ids_path}: {owner.size} worker ids for {m} data rows")
    if owner.min() < 0 or owner.max() >= n_workers:
        raise ValueError(f"{ids_path}: worker ids must lie in [0, {n_workers})")
    return owner


def excess_floor(f_star: float) -> float:
    """Smallest excess loss distinguishable from rounding at ``f_star``."""
    return max(abs(f_star) * np.finfo(float).eps, math.ulp(0.0) * 2**60)
