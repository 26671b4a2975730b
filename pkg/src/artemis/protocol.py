"""The bidirectional-compression protocol as a deterministic state machine.

One call to :meth:`Simulation.run_iteration` performs a full round:

1. sample the active workers (independent Bernoulli(p) draws),
2. bring every active worker's model copy up to date (catch-up),
3. each active worker compresses ``g_i - h_i`` and updates its memory ``h_i``,
4. the server rebuilds the gradient estimate, compresses it for the downlink,
   steps the global model and pushes the broadcast into the replay buffer.

Workers are stored row-wise in arrays; every per-worker operation is the same
row-wise function whether it is applied to one worker or to all of them, and
sums over workers always run in worker-id order.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .compression import (FLOAT_BITS, IDENTITY, CompressedMessage, CompressionKind,
                          Identity, Quantization, compress_rows, parse_kind)
from .oracle import FULL, Dataset, GradientOracle, Objective, global_loss, solve_optimum
from .rng import ChunkedUniforms, RngStream


class ProtocolError(RuntimeError):
    """Raised when a message or state transition breaks the protocol."""


class DivergenceError(RuntimeError):
    """Raised when the excess loss blows past the divergence guard."""


class PPMode(str, enum.Enum):
    PP1 = "PP1"  # one memory per worker kept on the server
    PP2 = "PP2"  # a single aggregated memory on the server


class Schedule(str, enum.Enum):
    CONSTANT = "constant"
    INV_SQRT = "inv_sqrt"


@dataclass(frozen=True)
class VariantConfig:
    name: str
    uplink: CompressionKind = IDENTITY
    downlink: CompressionKind = IDENTITY
    alpha: float = 0.0
    p: float = 1.0
    pp_mode: PPMode = PPMode.PP2
    gamma: float = 0.1
    schedule: Schedule = Schedule.CONSTANT

    def __post_init__(self):
        if not 0.0 < self.p <= 1.0:
            raise ValueError(f"participation probability must lie in (0, 1], got {self.p}")
        if self.alpha < 0:
            raise ValueError("memory rate must be nonnegative")
        if self.gamma <= 0:
            raise ValueError("step size must be positive")
        object.__setattr__(self, "pp_mode", PPMode(self.pp_mode))
        object.__setattr__(self, "schedule", Schedule(self.schedule))

    @property
    def memory(self) -> bool:
        return self.alpha != 0.0

    def step_size(self, k: int) -> float:
        if self.schedule is Schedule.INV_SQRT:
            return self.gamma / math.sqrt(max(k, 1))
        return self.gamma

    def with_(self, **changes) -> "VariantConfig":
        return replace(self, **changes)


def default_alpha(uplink: CompressionKind, dim: int) -> float:
    """Memory rate ``1 / (2 (omega_up + 1))``, always inside the admissible range."""
    return 1.0 / (2.0 * (uplink.omega(dim) + 1.0))


PRESET_NAMES = ("SGD", "QSGD", "Diana", "Bi-QSGD", "Artemis", "SGD-mem")


def preset(name: str, dim: int, compression: CompressionKind | str = "quantization:1",
           gamma: float = 0.1, p: float = 1.0, pp_mode=PPMode.PP2,
           schedule=Schedule.CONSTANT, alpha: float | None = None) -> VariantConfig:
    """Named member of the algorithm family.

    ``SGD`` (no compression, no memory), ``QSGD`` (uplink only), ``Diana``
    (uplink + memory), ``Bi-QSGD`` (both directions), ``Artemis`` (both
    directions + memory) and ``SGD-mem`` (no compression, memory).
    """
    op = parse_kind(compression)
    table = {
        "sgd": (IDENTITY, IDENTITY, False),
        "qsgd": (op, IDENTITY, False),
        "diana": (op, IDENTITY, True),
        "bi-qsgd": (op, op, False),
        "artemis": (op, op, True),
        "sgd-mem": (IDENTITY, IDENTITY, True),
    }
    key = name.strip().lower()
    if key not in table:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESET_NAMES)}")
    up, down, memory = table[key]
    canonical = PRESET_NAMES[list(table).index(key)]
    if memory:
        rate = default_alpha(up, dim) if alpha is None else alpha
    else:
        rate = 0.0
    return VariantConfig(canonical, up, down, rate, p, PPMode(pp_mode), gamma, Schedule(schedule))


# ---------------------------------------------------------------- state

@dataclass
class WorkerState:
    """One device: its memory, last synchronised iteration and model copy."""

    h: np.ndarray
    last_sync: int
    model: np.ndarray


@dataclass
class WorkerPool:
    """All devices, one row per worker."""

    h: np.ndarray
    last_sync: np.ndarray
    models: np.ndarray

    @classmethod
    def fresh(cls, n_workers: int, w0: np.ndarray) -> "WorkerPool":
        d = w0.size
        return cls(np.zeros((n_workers, d)), np.zeros(n_workers, dtype=np.int64),
                   np.tile(w0, (n_workers, 1)))

    def worker(self, i: int) -> WorkerState:
        return WorkerState(self.h[i].copy(), int(self.last_sync[i]), self.models[i].copy())


@dataclass
class RingEntry:
    index: int          # the broadcast is Omega_{index}; it maps w_{index-1} to w_{index}
    payload: np.ndarray
    bits: int
    gamma: float


@dataclass
class ServerState:
    w: np.ndarray
    memories: np.ndarray | None       # PP1: one row per worker
    h: np.ndarray | None              # PP2: single aggregated memory
    ring: deque
    full_model_bits: int
    k: int = 0
    up_bits: int = 0
    down_bits: int = 0

    @property
    def ring_capacity(self) -> int:
        return self.ring.maxlen


def ring_capacity(dim: int, downlink: CompressionKind) -> int:
    """``floor(M1 / M2)`` with ``M1 = 32 d`` and ``M2`` the downlink message cost."""
    return max(1, (FLOAT_BITS * dim) // downlink.message_bits(dim))


def new_server(w0: np.ndarray, n_workers: int, variant: VariantConfig) -> ServerState:
    d = w0.size
    cap = ring_capacity(d, variant.downlink)
    if variant.pp_mode is PPMode.PP1:
        return ServerState(w0.copy(), np.zeros((n_workers, d)), None, deque(maxlen=cap), FLOAT_BITS * d)
    return ServerState(w0.copy(), None, np.zeros(d), deque(maxlen=cap), FLOAT_BITS * d)


# ---------------------------------------------------------------- protocol steps

def sample_participants(n_workers: int, p: float, rng) -> np.ndarray:
    """Sorted ids of the workers active this round (possibly empty)."""
    if not 0.0 < p <= 1.0:
        raise ValueError("p must lie in (0, 1]")
    if p == 1.0:
        return np.arange(n_workers)
    u = rng.uniform(n_workers) if isinstance(rng, RngStream) else np.asarray(rng)
    return np.flatnonzero(u < p)


def uplink_rows(grads, h, uplink: CompressionKind, alpha: float, uniforms):
    """Worker-side step for a block of workers.

    Returns ``(delta_hat, new_h, bits)`` where ``delta_hat = C_up(g - h)`` and
    ``new_h = h + alpha * delta_hat``.
    """
    delta = grads - h
    delta_hat, bits = compress_rows(delta, uplink, uniforms)
    new_h = h + alpha * delta_hat if alpha else h.copy()
    return delta_hat, new_h, bits


def worker_uplink_step(worker: WorkerState, grad, variant: VariantConfig, uniforms):
    """Single-worker uplink: returns the compressed message and the updated state."""
    delta_hat, new_h, bits = uplink_rows(np.asarray(grad, dtype=float)[None, :], worker.h[None, :],
                                         variant.uplink, variant.alpha,
                                         np.asarray(uniforms, dtype=float)[None, :])
    msg = CompressedMessage(delta_hat[0], int(bits[0]), variant.uplink)
    return msg, WorkerState(new_h[0], worker.last_sync, worker.model)


def ordered_sum(rows: np.ndarray, d: int) -> np.ndarray:
    """Sum of rows in worker-id order."""
    total = np.zeros(d)
    for r in rows:
        total += r
    return total


def server_round(server: ServerState, delta_hats, participants, variant: VariantConfig,
                 uniforms, n_workers: int, gamma: float, pp2_scale: str = "N") -> CompressedMessage:
    """Aggregate the uplink messages, compress the broadcast and step the model.

    ``delta_hats`` is either an array with one row per participant (in the
    order of ``participants``) or a mapping ``worker id -> CompressedMessage``.
    """
    participants = np.asarray(participants, dtype=np.int64)
    d = server.w.size
    if isinstance(delta_hats, dict):
        extra = set(delta_hats) - set(participants.tolist())
        if extra:
            raise ProtocolError(f"message from non-participant worker(s) {sorted(extra)}")
        missing = set(participants.tolist()) - set(delta_hats)
        if missing:
            raise ProtocolError(f"no message from participant(s) {sorted(missing)}")
        rows = np.array([delta_hats[i].payload for i in participants]).reshape(-1, d)
    else:
        rows = np.asarray(delta_hats, dtype=float).reshape(-1, d)
        if rows.shape[0] != participants.size:
            raise ProtocolError(f"{rows.shape[0]} messages for {participants.size} participants")
    scale = variant.p * n_workers
    if variant.pp_mode is PPMode.PP1:
        g_hat = ordered_sum(rows + server.memories[participants], d) / scale
        if variant.alpha:
            server.memories[participants] = server.memories[participants] + variant.alpha * rows
    else:
        total = ordered_sum(rows, d)
        g_hat = server.h + total / scale
        if variant.alpha:
            denom = n_workers if pp2_scale == "N" else scale
            server.h = server.h + variant.alpha * total / denom
    payload, bits = compress_rows(g_hat[None, :], variant.downlink, np.asarray(uniforms)[None, :])
    omega = CompressedMessage(payload[0], int(bits[0]), variant.downlink)
    server.w = server.w - gamma * omega.payload
    server.k += 1
    server.ring.append(RingEntry(server.k, omega.payload, omega.bits, gamma))
    return omega


def catch_up(server: ServerState, workers: WorkerPool, i: int) -> int:
    """Synchronise worker ``i`` with the server model; returns the bits charged."""
    missed = server.k - int(workers.last_sync[i])
    if missed < 0:
        raise ProtocolError(f"worker {i} is ahead of the server")
    if missed == 0:
        return 0
    if missed > server.ring_capacity:
        workers.models[i] = server.w
        bits = server.full_model_bits
    else:
        entries = list(server.ring)[-missed:]
        if len(entries) != missed or entries[0].index != workers.last_sync[i] + 1:
            raise AssertionError("replay buffer does not hold the missed updates")
        model = workers.models[i]
        for e in entries:
            model = model - e.gamma * e.payload
        workers.models[i] = model
        bits = sum(e.bits for e in entries)
    workers.last_sync[i] = server.k
    return bits


# ---------------------------------------------------------------- simulation

class Problem:
    """A dataset with its objective, batch size and solved optimum."""

    def __init__(self, objective, dataset: Dataset, batch, w_star, f_star: float):
        self.objective = Objective.parse(objective)
        self.dataset = dataset
        self.batch = batch
        self.w_star = np.asarray(w_star, dtype=float)
        self.f_star = float(f_star)
        sizes = dataset.sizes
        self._stacked = None
        if np.all(sizes == sizes[0]):
            self._stacked = (np.stack([s.X for s in dataset.shards]),
                             np.stack([s.y for s in dataset.shards]))

    @classmethod
    def build(cls, objective, dataset: Dataset, batch=FULL) -> "Problem":
        objective = Objective.parse(objective)
        opt = solve_optimum(objective, dataset)
        return cls(objective, dataset, batch, opt.w, opt.loss)

    def loss(self, w) -> float:
        if self._stacked is None:
            return global_loss(self.objective, self.dataset, w)
        X, y = self._stacked
        z = np.einsum("mnd,d->mn", X, w)
        if self.objective is Objective.LEAST_SQUARES:
            r = z - y
            return float(np.mean(0.5 * np.mean(r * r, axis=1)))
        return float(np.mean(np.mean(np.logaddexp(0.0, -y * z), axis=1)))

    def excess(self, w) -> float:
        return self.loss(w) - self.f_star


@dataclass
class IterationRecord:
    iteration: int
    excess_loss: float
    up_bits: int
    down_bits: int
    participant_count: int
    sq_distance: float
    averaged_excess: float | None = None


DIVERGENCE_LIMIT = 1e12


class Simulation:
    """Deterministic single-process simulation of one variant on one problem.

    Parameters
    ----------
    problem : Problem
        Data, objective and optimum.
    variant : VariantConfig
        Compression operators, memory rate, participation and step size.
    seed : int
        Root seed; every draw is addressed by (seed, purpose, iteration).
    w0 : ndarray, optional
        Starting point, zeros by default.
    per_worker_downlink : bool
        Charge each broadcast once per receiving worker instead of once.
    averaging : bool
        Track the Polyak-Ruppert average of the iterates.
    pp2_scale : {"N", "pN"}
        Denominator of the aggregated-memory update in PP2 mode.
    """

    def __init__(self, problem: Problem, variant: VariantConfig, seed: int = 0, w0=None,
                 per_worker_downlink: bool = False, averaging: bool = False, pp2_scale: str = "N"):
        self.problem = problem
        self.variant = variant
        self.seed = seed
        self.per_worker_downlink = per_worker_downlink
        self.averaging = averaging
        if pp2_scale not in ("N", "pN"):
            raise ValueError("pp2_scale must be 'N' or 'pN'")
        self.pp2_scale = pp2_scale
        ds = problem.dataset
        self.n_workers = ds.n_workers
        self.dim = ds.dim
        w0 = np.zeros(self.dim) if w0 is None else np.asarray(w0, dtype=float).copy()
        self.oracle = GradientOracle(problem.objective, ds, problem.batch)
        self.server = new_server(w0, self.n_workers, variant)
        self.workers = WorkerPool.fresh(self.n_workers, w0)
        self.rng = RngStream(seed)
        self._draw_participation = ChunkedUniforms(seed, "participation", self.n_workers)
        self._draw_uplink = ChunkedUniforms(seed, "uplink", (self.n_workers, self.dim))
        self._draw_downlink = ChunkedUniforms(seed, "downlink", self.dim)
        self._draw_batch = None
        if not self.oracle.full:
            self._draw_batch = ChunkedUniforms(seed, "batch", (self.n_workers, self.oracle.batch))
        self._w_sum = w0.copy()
        self.records = [self._record(0)]

    @property
    def k(self) -> int:
        return self.server.k

    @property
    def w(self) -> np.ndarray:
        return self.server.w

    def _record(self, count: int) -> IterationRecord:
        w = self.server.w
        excess = self.problem.excess(w)
        if not np.isfinite(excess) or excess > DIVERGENCE_LIMIT:
            raise DivergenceError(f"variant {self.variant.name} diverged at iteration {self.k} "
                                  f"with step size {self.variant.gamma:g} (excess loss {excess:.3g})")
        diff = w - self.problem.w_star
        avg = None
        if self.averaging:
            avg = self.problem.excess(self._w_sum / (self.k + 1))
        return IterationRecord(self.k, excess, self.server.up_bits, self.server.down_bits,
                               count, float(diff @ diff), avg)

    def run_iteration(self) -> IterationRecord:
        v = self.variant
        k = self.server.k
        n, d = self.n_workers, self.dim
        gamma = v.step_size(k)
        active = sample_participants(n, v.p, self._draw_participation(k))

        for i in active:
            self.server.down_bits += catch_up(self.server, self.workers, int(i))

        batch_u = None
        if not self.oracle.full:
            batch_u = self._draw_batch(k)[active]
        grads = self.oracle.gradients(self.server.w, active, batch_u)
        up_u = self._draw_uplink(k)[active]
        delta_hats, new_h, bits = uplink_rows(grads, self.workers.h[active], v.uplink, v.alpha, up_u)
        self.workers.h[active] = new_h
        self.server.up_bits += int(bits.sum())

        down_u = self._draw_downlink(k)
        omega = server_round(self.server, delta_hats, active, v, down_u, n, gamma, self.pp2_scale)
        receivers = active.size if self.per_worker_downlink else 1
        self.server.down_bits += omega.bits * receivers
        # active workers apply the broadcast to their own copy
        if active.size:
            self.workers.models[active] = self.workers.models[active] - gamma * omega.payload
            self.workers.last_sync[active] = self.server.k

        if self.averaging:
            self._w_sum = self._w_sum + self.server.w
        rec = self._record(int(active.size))
        self.records.append(rec)
        return rec

    def run(self, iterations: int) -> list:
        for _ in range(iterations):
            self.run_iteration()
        return self.records

    def memories_in_sync(self) -> bool:
        """Server-side memories equal the device memories (PP1 only)."""
        if self.server.memories is None:
            return True
        return bool(np.array_equal(self.server.memories, self.workers.h))


def run_iteration(sim: Simulation) -> IterationRecord:
    return sim.run_iteration()
