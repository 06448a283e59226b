import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fiberlip.core_metric import FiberlipError, LinearQuotient
from fiberlip.hoelder import ZERO, DegenerateScaleError
from fiberlip.norms import (
    NormContext,
    asymmetry_demo,
    lemma_homogeneity_check,
    lemma_trials,
    limit_check,
    norm_v1,
    norm_v2,
    parabola_limit_scenario,
    seminorm_v1,
    seminorm_v2,
    sup_norm,
)
from fiberlip.suite import random_family

Q = LinearQuotient([[1.0, 0.0]])


def ctx_for(K, slope=0.0):
    K = np.asarray(K, dtype=float)
    psi = np.stack([K, slope * K], 1)
    return NormContext(Q, K[:, None], psi, int(np.flatnonzero(K == 0)[0]))


def lstsq_fiber_distance(A, z, y):
    """Distance from z to {w : A w = y} via a least-squares particular solution
    and an orthonormal kernel basis from the SVD."""
    A = np.asarray(A, dtype=float)
    w0 = np.linalg.lstsq(A, y, rcond=None)[0]
    _, _, Vt = np.linalg.svd(A)
    N = Vt[np.linalg.matrix_rank(A):].T
    r = z - w0
    return float(np.linalg.norm(r - N @ (N.T @ r)))


def test_sup_norm_examples():
    K = [-2, -1, 0, 1, 3]
    ctx = ctx_for(K)
    assert sup_norm(ctx.member(ctx.psi), ctx) == 3.0
    ctx3 = ctx_for(K, 3.0)
    assert sup_norm(ctx3.member(ctx3.psi), ctx3) == pytest.approx(3 * math.sqrt(10))
    assert sup_norm(ZERO, ctx) == 0.0


def test_seminorm_v1_examples():
    ctx = ctx_for([0, 1])
    m = ctx.member(ctx.psi, 2.0)
    assert seminorm_v1(m, ctx) == pytest.approx(2.0)
    assert seminorm_v1(m, ctx, "reduced") == pytest.approx(2.0)
    one = ctx.member(ctx.psi, 1.0)
    assert seminorm_v1(one.scaled(-1.0), ctx) == pytest.approx(seminorm_v1(one, ctx))
    assert norm_v1(m, ctx).total == pytest.approx(sup_norm(m, ctx) + 2)
    assert norm_v1(m, ctx).total == pytest.approx(4.0)


def test_seminorm_v1_vanishes_on_anchor_fiber():
    ctx = NormContext(Q, np.array([[0.0]]), np.array([[0.0, 5.0]]), 0)
    assert seminorm_v1(ctx.member(ctx.psi), ctx) == 0.0


def test_seminorm_v2_examples():
    assert seminorm_v2(ctx_for([0]).member([[0.0, 0.0]]), ctx_for([0])) == 0.0
    ctx = ctx_for([0, 1, -2])
    m = ctx.member(ctx.psi, 1.0)
    assert seminorm_v2(m, ctx) == pytest.approx(2.0)
    assert seminorm_v2(m.scaled(3.0), ctx) == pytest.approx(6.0)
    assert norm_v2(m, ctx).total == pytest.approx(4.0)
    assert norm_v2(m.scaled(-2.0), ctx).total == pytest.approx(8.0)
    assert norm_v2(m.scaled(-2.0), ctx, "reduced").total == pytest.approx(8.0)
    assert norm_v2(ZERO, ctx).total == 0.0


def test_seminorm_v2_ignores_section_values():
    K = np.array([0.0, 1.0, -2.0])
    ctx = ctx_for(K)
    other = ctx.member(np.stack([K, np.sin(K)], 1), 1.7)
    assert seminorm_v2(other, ctx) == seminorm_v2(ctx.member(ctx.psi, 1.7), ctx)


def test_scale_zero_and_bad_path():
    ctx = ctx_for([0, 1])
    with pytest.raises(DegenerateScaleError):
        ctx.member(ctx.psi, 0.0)
    with pytest.raises(ValueError):
        seminorm_v1(ctx.member(ctx.psi), ctx, "sideways")


def test_context_validation():
    with pytest.raises(FiberlipError):
        NormContext(Q, np.array([[0.0]]), np.array([[1.0, 0.0]]), 0)
    with pytest.raises(FiberlipError):
        NormContext(Q, np.array([[0.0]]), np.array([[0.0, 0.0]]), 3)
    ctx = ctx_for([0, 1])
    with pytest.raises(FiberlipError):
        ctx.member([[0.0, 0.0], [2.0, 0.0]])
    assert ctx_for([0, 1], 3.0).psi_constant() == pytest.approx(math.sqrt(10) - 1)


def test_lemma_example():
    r = lemma_homogeneity_check([[1.0, 0.0]], [1.0, 4.0], 7.0, 2.0)
    assert r["lhs"] == pytest.approx(12.0) and r["rhs"] == pytest.approx(12.0) and r["ok"]
    r = lemma_homogeneity_check([[1.0, 0.0]], [1.0, 4.0], 7.0, 1.0)
    assert r["lhs"] == r["rhs"]
    with pytest.raises(DegenerateScaleError):
        lemma_homogeneity_check([[1.0, 0.0]], [1.0, 4.0], 7.0, 0.0)


def test_lemma_trials_against_lstsq_oracle():
    rng = np.random.default_rng(19)
    for _ in range(200):
        kappa = int(rng.integers(1, 7))
        m = int(rng.integers(1, kappa + 1))
        A = rng.normal(size=(m, kappa))
        x1, y2 = rng.normal(size=kappa) * 5, rng.normal(size=m) * 5
        lam = float(rng.uniform(-10, 10))
        r = lemma_homogeneity_check(A, x1, y2, lam)
        assert r["lhs"] == pytest.approx(abs(lam) * lstsq_fiber_distance(A, x1, y2), rel=1e-9, abs=1e-9)
        assert r["rhs"] == pytest.approx(lstsq_fiber_distance(A, lam * x1, lam * y2), rel=1e-9, abs=1e-9)
    assert all(r["ok"] for r in lemma_trials(1000, seed=7))


def test_limit_linear_section():
    base = np.array([0.0, 0.001, 0.01, 0.1])
    values = np.stack([base, 0 * base], 1)
    r = limit_check([[1.0, 0.0]], base, values, 0.0, [0.1, 0.01, 0.001])
    assert np.allclose(r["first"], [0.1, 0.01, 0.001])
    assert np.allclose(r["bound"], [0.1, 0.01, 0.001])
    assert r["bounded"] and r["decreasing"]


def test_parabola_limits():
    r = parabola_limit_scenario()
    hs = np.array(r["h"])
    assert np.allclose(r["bound"], hs * np.sqrt(1 + hs ** 2))
    assert r["bounded"] and r["decreasing"]
    assert r["first"][-1] < 1e-3 and r["second"][-1] < 1e-3


def test_limit_outside_base():
    with pytest.raises(FiberlipError):
        limit_check([[1.0, 0.0]], [0.0, 0.1], [[0, 0], [0.1, 0]], 0.0, [0.5])


def test_asymmetry_demo():
    r = asymmetry_demo()
    assert r["violation_rhs"] == 1.0
    assert r["violation_lhs"] == pytest.approx((math.sqrt(1908) - math.sqrt(1325)) / 7, abs=1e-12)
    assert r["violated"] and r["general_inequality_ok"]
    assert r["stated_lhs"] == pytest.approx(1.118, abs=1e-3)
    assert r["image_points_on_stated_fibers"] == {"f(y)": False, "f(z)": False}


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000), st.floats(-4, 4).filter(lambda d: abs(d) > 1e-3))
def test_norm_homogeneity_and_paths(seed, delta):
    ctx, members = random_family(seed, 2)
    for m in members:
        for nf in (norm_v1, norm_v2):
            base = nf(m, ctx).total
            assert nf(m.scaled(delta), ctx).total == pytest.approx(abs(delta) * base, rel=1e-9, abs=1e-9)
            assert nf(m, ctx, "reduced").total == pytest.approx(base, rel=1e-9, abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 5000))
def test_norm_triangle(seed):
    ctx, (a, b) = random_family(seed, 2)
    if a.scale + b.scale == 0:
        return
    s = a + b
    for nf in (norm_v1, norm_v2):
        assert nf(s, ctx).total <= nf(a, ctx).total + nf(b, ctx).total + 1e-9
