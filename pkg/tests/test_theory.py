import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from artemis import theory
from artemis.theory import TheoryError, TheoryInput

omegas = st.floats(0.0, 50.0)


def _inp(**kw):
    base = dict(N=20, L=1.0, mu=0.5)
    base.update(kw)
    return TheoryInput(**base)


# ---------------------------------------------------------------- step size

def test_gamma_max_plain_sgd():
    for N in (1, 10, 1000):
        assert theory.gamma_max(_inp(N=N)) == pytest.approx(N / (N + 2))
    assert theory.gamma_max(_inp(N=10**6)) == pytest.approx(1.0, rel=1e-5)


def test_doubling_downlink_factor_halves_gamma_max():
    for alpha in (0.0, 0.1):
        a = theory.gamma_max(_inp(omega_up=2.0, omega_dwn=0.0, alpha=alpha))
        b = theory.gamma_max(_inp(omega_up=2.0, omega_dwn=1.0, alpha=alpha))
        assert b == pytest.approx(a / 2)


def test_gamma_max_memoryless_value():
    w = math.sqrt(20)
    expected = 20 / ((w + 1) * (20 + 2 * (w + 1)))
    got = theory.gamma_max(_inp(omega_up=w, omega_dwn=w))
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(0.11811, abs=1e-5)


def test_gamma_max_with_memory_is_three_way_minimum():
    N, wu, wd, p, L = 10, 3.0, 1.0, 0.5, 2.0
    terms = [1 / ((wd + 1) * (1 + 2 / (N * p)) * L),
             3 / ((wd + 1) * (3 + (8 * (wu - 1) - 2 * p) / (N * p)) * L),
             N / ((wd + 1) * (N + 4 * (wu + 1) / p - 2) * L)]
    inp = TheoryInput(N=N, omega_up=wu, omega_dwn=wd, p=p, L=L, mu=0.1, alpha=0.1)
    assert theory.gamma_max(inp) == pytest.approx(min(terms))


def test_vacuous_second_term():
    # omega_up = 0, N p small: the bracket of the second term turns negative
    inp = TheoryInput(N=1, omega_up=0.0, p=1.0, L=1.0, mu=0.1, alpha=0.5)
    third = 1 / (1 + 4 - 2)
    assert theory.gamma_max(inp) == pytest.approx(min(1 / 3, third))


@given(omegas, omegas, st.floats(0.01, 1.0), st.integers(1, 200))
def test_gamma_max_nonincreasing_in_omega(wu, wd, p, N):
    for alpha in (0.0, 0.05):
        g = theory.gamma_max(_inp(N=N, omega_up=wu, omega_dwn=wd, p=p, alpha=alpha))
        assert theory.gamma_max(_inp(N=N, omega_up=wu + 1, omega_dwn=wd, p=p, alpha=alpha)) <= g * (1 + 1e-12)
        assert theory.gamma_max(_inp(N=N, omega_up=wu, omega_dwn=wd + 1, p=p, alpha=alpha)) <= g * (1 + 1e-12)


@pytest.mark.parametrize("N, w, regime", [(100, 4, "N>>w"), (10, 5, "N~w"), (2, 50, "w>>N"), (5, 0, "N>>w")])
def test_table_regime(N, w, regime):
    assert theory.table_regime(N, w) == regime


def test_summary_bound_matches_exact_order():
    inp = _inp(N=1000, omega_up=1.0, omega_dwn=1.0)
    assert theory.gamma_max_summary(inp) == pytest.approx(theory.gamma_max(inp), rel=0.01)


def test_input_validation():
    with pytest.raises(TheoryError):
        TheoryInput(N=5, L=1.0, mu=2.0)
    with pytest.raises(TheoryError):
        TheoryInput(N=5, p=0.0)
    with pytest.raises(TheoryError):
        TheoryInput(N=5, B2=-1.0)


# ---------------------------------------------------------------- memory rate and C

def test_alpha_range_small_gamma():
    lo, hi = theory.alpha_range(_inp(gamma=1e-12))
    assert lo == 0.5
    assert hi == pytest.approx(1.5)


def test_alpha_min_is_half_inverse():
    for w in (0.0, 1.0, 7.5):
        assert theory.alpha_range(_inp(omega_up=w, gamma=1e-3))[0] == 0.5 / (w + 1)


def test_alpha_range_nonempty_below_third_term():
    for wu in (0.0, 1.0, 4.47, 20.0):
        for p in (0.3, 1.0):
            inp = _inp(N=10, omega_up=wu, omega_dwn=1.0, p=p, alpha=0.1)
            gm = theory.gamma_max(inp)
            for frac in np.linspace(0.01, 0.99, 25):
                lo, hi = theory.alpha_range(inp.with_(gamma=frac * gm))
                assert lo < hi


def test_alpha_range_empty_above_bound():
    inp = _inp(N=10, omega_up=4.0, omega_dwn=1.0, alpha=0.1)
    third = 10 / (2 * (10 + 4 * 5 - 2))
    with pytest.raises(TheoryError, match="gamma <"):
        theory.alpha_range(inp.with_(gamma=third * 1.01))


def test_c_lower_end_vanishes_without_compression():
    lo, hi = theory.constant_C_interval(_inp(alpha=0.5, gamma=0.1))
    assert lo == 0.0
    assert hi == math.inf  # 2 alpha (w + 1) - 1 = 0


def test_c_interval_consistent_on_grid():
    for wu in (0.5, 4.47):
        for p in (0.5, 1.0):
            inp = _inp(N=10, omega_up=wu, omega_dwn=1.0, p=p, alpha=0.1)
            gm = theory.gamma_max(inp)
            for frac in (0.05, 0.3, 0.6, 0.9):
                g = frac * gm
                lo_a, hi_a = theory.alpha_range(inp.with_(gamma=g))
                for a in np.linspace(lo_a, hi_a, 7)[:-1]:
                    lo, hi = theory.constant_C_interval(inp.with_(gamma=g, alpha=float(a)))
                    assert lo <= hi


# ---------------------------------------------------------------- E and saturation

def test_e_vanishes_with_memory_in_interpolation():
    inp = _inp(omega_up=4.0, omega_dwn=4.0, B2=3.0, sigma2_over_b=0.0, alpha=0.1, gamma=0.01)
    assert theory.constant_E(inp) == 0.0
    assert theory.predict_saturation(inp) == 0.0


def test_e_memoryless_heterogeneity_term():
    inp = _inp(omega_up=4.0, omega_dwn=2.0, B2=3.0)
    assert theory.constant_E(inp) == pytest.approx(3 * 4 * 3.0)


def test_e_plain_sgd():
    assert theory.constant_E(_inp(sigma2_over_b=2.5, B2=7.0)) == pytest.approx(2.5)


def test_e_with_memory_full_participation_form():
    wu, wd, a, s2 = 3.0, 1.0, 0.15, 2.0
    inp = _inp(omega_up=wu, omega_dwn=wd, alpha=a, sigma2_over_b=s2, gamma=0.01)
    C = theory.constant_C(inp)
    expected = s2 * ((2 * wu + 1) * (wd + 1) + 4 * a**2 * C * (wu + 1) - 2 * a * C)
    assert theory.constant_E(inp) == pytest.approx(expected)


def test_e_with_memory_partial_participation_form():
    wu, wd, a, s2, p = 3.0, 1.0, 0.15, 2.0, 0.4
    inp = _inp(omega_up=wu, omega_dwn=wd, alpha=a, sigma2_over_b=s2, gamma=0.01, p=p)
    C = theory.constant_C(inp)
    expected = (wd + 1) * (2 * (wu + 1) / p - 1) * s2 + 2 * p * C * (2 * a**2 * (wu + 1) - a) * s2
    assert theory.constant_E(inp) == pytest.approx(expected)


def test_pp1_memory_partial_participation_not_covered():
    with pytest.raises(TheoryError):
        theory.constant_E(_inp(alpha=0.1, p=0.5, sigma2_over_b=1.0, pp_mode="PP1", gamma=0.01))


@given(omegas, omegas, st.floats(0, 10), st.floats(0, 10), st.floats(0.05, 1.0), st.booleans())
def test_e_monotone(wu, wd, s2, b2, p, memory):
    def E(**kw):
        args = dict(omega_up=wu, omega_dwn=wd, sigma2_over_b=s2, B2=b2, p=p,
                    alpha=0.5 / (wu + 1) if memory else 0.0, gamma=1e-4)
        args.update(kw)
        if memory and "omega_up" in kw:
            args["alpha"] = 0.5 / (args["omega_up"] + 1)
        return theory.constant_E(_inp(**args))
    base = E()
    tol = 1e-9 * (1 + abs(base))
    assert E(omega_up=wu + 1) >= base - tol
    assert E(omega_dwn=wd + 1) >= base - tol
    assert E(sigma2_over_b=s2 + 1) >= base - tol
    assert E(B2=b2 + 1) >= base - tol


def test_saturation_scaling():
    inp = _inp(omega_up=2.0, omega_dwn=1.0, sigma2_over_b=1.0, B2=0.5, gamma=0.02)
    s = theory.predict_saturation(inp)
    assert theory.predict_saturation(inp.with_(gamma=0.01)) == pytest.approx(s / 2)
    assert theory.predict_saturation(inp.with_(N=40)) == pytest.approx(s / 2)
    mem = inp.with_(alpha=0.1)
    assert theory.predict_saturation(mem.with_(N=40)) == pytest.approx(theory.predict_saturation(mem) / 2)


def test_distance_bound_decays_to_saturation():
    inp = _inp(omega_up=1.0, sigma2_over_b=1.0, B2=1.0, gamma=0.05, delta0_sq=4.0, alpha=0.2)
    b = theory.distance_bound(inp, np.array([0, 10, 10_000]))
    assert b[0] > b[1] > b[2]
    assert b[2] == pytest.approx(theory.predict_saturation(inp))
    C = theory.constant_C(inp)
    assert b[0] == pytest.approx(4.0 + 2 * C * 0.05**2 * 1.0 + theory.predict_saturation(inp))


# ---------------------------------------------------------------- averaging

def test_averaging_without_noise():
    inp = _inp(omega_up=1.0, alpha=0.2, B2=0.7, delta0_sq=2.0, K=500)
    gm = theory.gamma_max(inp)
    rate = theory.gamma_opt_averaging(inp)
    C = theory.constant_C(inp.with_(gamma=gm))
    assert rate.gamma == gm
    assert rate.bound == pytest.approx(2 * 2.0 / (gm * 500) + 2 * gm * C * 0.7 / 500)


def test_averaging_bound_monotone_in_horizon():
    inp = _inp(omega_up=2.0, sigma2_over_b=1.0, B2=0.5, delta0_sq=3.0)
    bounds = [theory.gamma_opt_averaging(inp.with_(K=K)).bound for K in np.unique(np.logspace(0, 6, 40).astype(int))]
    assert all(a >= b for a, b in zip(bounds, bounds[1:]))


def test_averaging_sqrt_term_scaling():
    inp = _inp(sigma2_over_b=5.0, delta0_sq=1.0)
    a = theory.gamma_opt_averaging(inp.with_(K=10**6))
    b = theory.gamma_opt_averaging(inp.with_(K=4 * 10**6))
    # both in the sqrt branch: bound is 2 sqrt(2 d0 E / N K)
    assert b.bound == pytest.approx(a.bound / 2)
    assert a.gamma == pytest.approx(math.sqrt(20 * 1.0 / (2 * 5.0 * 10**6)))


def test_summary_contains_every_constant():
    out = theory.summary(_inp(omega_up=4.47, omega_dwn=4.47, alpha=0.1, sigma2_over_b=1.0, B2=0.1,
                              delta0_sq=1.0, K=100))
    for key in ("gamma_max", "alpha_min", "alpha_max", "C_lo", "C_hi", "E", "saturation",
                "gamma_opt_averaging", "averaging_bound"):
        assert key in out
