import json
from pathlib import Path

import numpy as np
import pytest

from artemis.compression import IDENTITY, Quantization, Sparsification, elias_bit_bound
from artemis.oracle import GradientOracle, gen_logistic_noniid, gen_lsr
from artemis.protocol import (PRESET_NAMES, DivergenceError, PPMode, Problem, ProtocolError,
                              Simulation, VariantConfig, WorkerPool, catch_up, default_alpha,
                              new_server, preset, ring_capacity, sample_participants, server_round,
                              uplink_rows, worker_uplink_step)
from artemis.rng import ChunkedUniforms, RngStream

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="module")
def lsr_problem():
    return Problem.build("lsr", gen_lsr(4, 40, 6, 0.3, seed=2), batch=2)


@pytest.fixture(scope="module")
def logistic_problem():
    return Problem.build("logistic", gen_logistic_noniid(4, 60, seed=1), batch="full")


# ---------------------------------------------------------------- configuration

def test_presets_cover_the_family():
    d = 10
    table = {v.name: v for v in (preset(n, d) for n in PRESET_NAMES)}
    assert table["SGD"].uplink == IDENTITY and not table["SGD"].memory
    assert table["QSGD"].downlink == IDENTITY and not table["QSGD"].memory
    assert table["Diana"].memory and table["Diana"].downlink == IDENTITY
    assert table["Bi-QSGD"].downlink == Quantization(1) and not table["Bi-QSGD"].memory
    assert table["Artemis"].memory and table["Artemis"].downlink == Quantization(1)
    assert table["SGD-mem"].memory and table["SGD-mem"].uplink == IDENTITY


def test_default_alpha_is_half_inverse():
    q = Quantization(1)
    assert default_alpha(q, 16) == pytest.approx(1 / (2 * (4 + 1)))
    assert preset("artemis", 16).alpha == pytest.approx(0.1)
    with pytest.raises(ValueError):
        preset("topk", 16)


def test_variant_validation():
    with pytest.raises(ValueError):
        VariantConfig("x", p=0.0)
    with pytest.raises(ValueError):
        VariantConfig("x", alpha=-1)
    with pytest.raises(ValueError):
        VariantConfig("x", gamma=0)
    v = VariantConfig("x", gamma=0.4, schedule="inv_sqrt")
    assert v.step_size(4) == pytest.approx(0.2)
    assert v.step_size(0) == pytest.approx(0.4)


# ---------------------------------------------------------------- single steps

def test_full_participation_is_everyone():
    np.testing.assert_array_equal(sample_participants(5, 1.0, np.zeros(5)), np.arange(5))


def test_participation_from_uniforms():
    u = np.array([0.1, 0.7, 0.49, 0.5])
    np.testing.assert_array_equal(sample_participants(4, 0.5, u), [0, 2])
    assert sample_participants(4, 0.5, np.ones(4) * 0.9).size == 0


def test_uplink_memory_update():
    g = np.array([[1.0, 2.0]])
    h = np.array([[0.5, 0.5]])
    dh, new_h, bits = uplink_rows(g, h, IDENTITY, 0.25, np.zeros((1, 2)))
    np.testing.assert_array_equal(dh, [[0.5, 1.5]])
    np.testing.assert_array_equal(new_h, [[0.625, 0.875]])
    assert bits.tolist() == [64]


def test_worker_step_matches_block_step():
    w = WorkerPool.fresh(1, np.zeros(3)).worker(0)
    v = preset("Diana", 3)
    u = RngStream(3).uniform(3)
    msg, nxt = worker_uplink_step(w, np.array([1.0, -2.0, 0.5]), v, u)
    dh, nh, _ = uplink_rows(np.array([[1.0, -2.0, 0.5]]), np.zeros((1, 3)), v.uplink, v.alpha, u[None])
    np.testing.assert_array_equal(msg.payload, dh[0])
    np.testing.assert_array_equal(nxt.h, nh[0])


def _server(mode, alpha, p=0.5, n=3, d=2):
    v = VariantConfig("t", alpha=alpha, p=p, pp_mode=mode, gamma=1.0)
    return new_server(np.zeros(d), n, v), v


def test_pp1_aggregate():
    server, v = _server(PPMode.PP1, 0.5)
    server.memories[:] = [[1.0, 0.0], [0.0, 1.0], [2.0, 2.0]]
    msgs = np.array([[1.0, 1.0], [3.0, -1.0]])
    omega = server_round(server, msgs, np.array([0, 2]), v, np.zeros(2), 3, 1.0)
    # (1/pN) sum_S (dhat_i + h_i)
    np.testing.assert_allclose(omega.payload, ((msgs[0] + [1, 0]) + (msgs[1] + [2, 2])) / 1.5)
    np.testing.assert_allclose(server.memories[2], [3.5, 1.5])
    np.testing.assert_allclose(server.memories[1], [0.0, 1.0])


def test_pp2_aggregate():
    server, v = _server(PPMode.PP2, 0.5)
    server.h[:] = [1.0, -1.0]
    msgs = np.array([[1.0, 1.0], [3.0, -1.0]])
    omega = server_round(server, msgs, np.array([0, 2]), v, np.zeros(2), 3, 1.0)
    np.testing.assert_allclose(omega.payload, np.array([1.0, -1.0]) + msgs.sum(0) / 1.5)
    np.testing.assert_allclose(server.h, np.array([1.0, -1.0]) + 0.5 * msgs.sum(0) / 3)


@pytest.mark.parametrize("mode, expected", [(PPMode.PP1, [0.0, 0.0]), (PPMode.PP2, [2.0, 3.0])])
def test_empty_round(mode, expected):
    server, v = _server(mode, 0.5)
    if server.h is not None:
        server.h[:] = [2.0, 3.0]
    omega = server_round(server, np.zeros((0, 2)), np.array([], dtype=int), v, np.zeros(2), 3, 1.0)
    np.testing.assert_array_equal(omega.payload, expected)
    assert server.k == 1


def test_server_rejects_bad_messages():
    from artemis.compression import CompressedMessage
    server, v = _server(PPMode.PP2, 0.0)
    msg = CompressedMessage(np.zeros(2), 64, IDENTITY)
    with pytest.raises(ProtocolError, match="non-participant"):
        server_round(server, {0: msg, 1: msg}, np.array([0]), v, np.zeros(2), 3, 1.0)
    with pytest.raises(ProtocolError, match="no message"):
        server_round(server, {0: msg}, np.array([0, 2]), v, np.zeros(2), 3, 1.0)
    with pytest.raises(ProtocolError):
        server_round(server, np.zeros((1, 2)), np.array([0, 2]), v, np.zeros(2), 3, 1.0)


def test_ring_capacity():
    assert ring_capacity(16, IDENTITY) == 1
    assert ring_capacity(16, Quantization(1)) == (32 * 16) // elias_bit_bound(16, 1) == 7


def test_catch_up_replays_or_sends_model():
    d = 16
    v = preset("Bi-QSGD", d, gamma=0.1)
    server = new_server(np.zeros(d), 2, v)
    workers = WorkerPool.fresh(2, np.zeros(d))
    rng = RngStream(0)
    for k in range(3):
        server_round(server, rng.at(iteration=k).normal((1, d)), np.array([0]), v,
                     rng.at(iteration=k, purpose="dw").uniform(d), 2, 0.1)
    bits = catch_up(server, workers, 1)
    assert bits == 3 * elias_bit_bound(d, 1)
    np.testing.assert_allclose(workers.models[1], server.w, atol=1e-15)
    assert catch_up(server, workers, 1) == 0
    for k in range(3, 3 + 8):
        server_round(server, rng.at(iteration=k).normal((1, d)), np.array([0]), v,
                     rng.at(iteration=k, purpose="dw").uniform(d), 2, 0.1)
    # 8 missed updates exceed the 7-slot buffer
    assert catch_up(server, workers, 1) == 32 * d
    np.testing.assert_array_equal(workers.models[1], server.w)


# ---------------------------------------------------------------- simulation

def test_identity_bit_accounting(lsr_problem):
    N, d = 4, 6
    sim = Simulation(lsr_problem, preset("SGD", d, gamma=0.05), seed=0)
    for k in range(1, 21):
        rec = sim.run_iteration()
        assert rec.up_bits + rec.down_bits == k * (N * 32 * d + 32 * d)


def test_per_worker_downlink_charging(lsr_problem):
    sim = Simulation(lsr_problem, preset("SGD", 6, gamma=0.05), seed=0, per_worker_downlink=True)
    sim.run(5)
    assert sim.records[-1].down_bits == 5 * 4 * 32 * 6


def test_catch_up_keeps_models_in_sync(logistic_problem):
    v = preset("Artemis", 2, gamma=0.05, p=0.5)
    sim = Simulation(logistic_problem, v, seed=3)
    for _ in range(60):
        sim.run_iteration()
        fresh = sim.workers.last_sync == sim.k
        np.testing.assert_allclose(sim.workers.models[fresh], np.broadcast_to(sim.w, (fresh.sum(), 2)),
                                   atol=1e-12)


def test_pp1_server_memories_track_devices(logistic_problem):
    v = preset("Artemis", 2, gamma=0.05, p=0.5, pp_mode="PP1")
    sim = Simulation(logistic_problem, v, seed=0)
    sim.run(40)
    assert sim.memories_in_sync()


def test_pp2_memory_is_worker_average(logistic_problem):
    v = preset("Artemis", 2, gamma=0.05, p=0.5)
    sim = Simulation(logistic_problem, v, seed=0)
    sim.run(40)
    np.testing.assert_allclose(sim.server.h, sim.workers.h.mean(axis=0), atol=1e-12)


def _vanilla_sgd(problem, gamma, seed, iterations):
    """Plain distributed SGD written without the protocol."""
    ds = problem.dataset
    oracle = GradientOracle(problem.objective, ds, problem.batch)
    draws = ChunkedUniforms(seed, "batch", (ds.n_workers, oracle.batch))
    w = np.zeros(ds.dim)
    path = [w]
    everyone = np.arange(ds.n_workers)
    for k in range(iterations):
        grads = oracle.gradients(w, everyone, draws(k))
        total = np.zeros(ds.dim)
        for g in grads:
            total += g
        w = w - gamma * (total / ds.n_workers)
        path.append(w)
    return np.array(path)


def test_degenerate_protocol_is_vanilla_sgd(lsr_problem):
    v = VariantConfig("Artemis-identity", IDENTITY, IDENTITY, alpha=0.0, p=1.0, gamma=0.05)
    sim = Simulation(lsr_problem, v, seed=9)
    path = [sim.w.copy()]
    for _ in range(100):
        sim.run_iteration()
        path.append(sim.w.copy())
    np.testing.assert_array_equal(np.array(path), _vanilla_sgd(lsr_problem, 0.05, 9, 100))


def test_pp_modes_agree_at_full_participation(lsr_problem):
    for name in ("Bi-QSGD", "Artemis"):
        a = Simulation(lsr_problem, preset(name, 6, gamma=0.05, pp_mode="PP1"), seed=1).run(50)
        b = Simulation(lsr_problem, preset(name, 6, gamma=0.05, pp_mode="PP2"), seed=1).run(50)
        xa = np.array([r.sq_distance for r in a])
        xb = np.array([r.sq_distance for r in b])
        if name == "Bi-QSGD":
            np.testing.assert_array_equal(xa, xb)
        else:
            np.testing.assert_allclose(xa, xb, rtol=1e-9)


def test_memory_transparent_without_compression(lsr_problem):
    a = Simulation(lsr_problem, preset("SGD", 6, gamma=0.05), seed=4).run(50)
    b = Simulation(lsr_problem, preset("SGD-mem", 6, gamma=0.05), seed=4).run(50)
    np.testing.assert_allclose([r.excess_loss for r in a], [r.excess_loss for r in b], rtol=1e-9)


def test_variants_share_draws(lsr_problem):
    sims = [Simulation(lsr_problem, preset(n, 6, gamma=0.05, p=0.5), seed=2) for n in PRESET_NAMES]
    assert len({s.records[0].excess_loss for s in sims}) == 1
    for s in sims:
        s.run(10)
    counts = {tuple(r.participant_count for r in s.records) for s in sims}
    assert len(counts) == 1


def test_same_seed_same_run(lsr_problem):
    v = preset("Artemis", 6, gamma=0.05, p=0.7)
    a = Simulation(lsr_problem, v, seed=5).run(30)
    b = Simulation(lsr_problem, v, seed=5).run(30)
    assert a == b


def test_divergence_guard(lsr_problem):
    sim = Simulation(lsr_problem, preset("SGD", 6, gamma=40.0), seed=0)
    with pytest.raises(DivergenceError, match="SGD.*step size 40"):
        sim.run(200)


def test_sparsified_uplink_runs(lsr_problem):
    v = preset("Artemis", 6, compression=Sparsification(0.5), gamma=0.02)
    sim = Simulation(lsr_problem, v, seed=0)
    sim.run(200)
    assert sim.records[-1].excess_loss < sim.records[0].excess_loss


def test_golden_trace():
    import sys
    sys.path.insert(0, str(DATA))
    from make_golden import build
    golden = json.loads((DATA / "golden_biqsgd.json").read_text())["trace"]
    for got, want in zip(build(), golden):
        assert got["iteration"] == want["iteration"]
        assert (got["up_bits"], got["down_bits"]) == (want["up_bits"], want["down_bits"])
        np.testing.assert_allclose(got["w"], want["w"], rtol=1e-12, atol=1e-15)
