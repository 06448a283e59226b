import json

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from fiberlip.core_metric import (
    FiberlipError,
    LinearQuotient,
    linear_fibration,
    dist_to_fiber,
    dump_fibration,
    heisenberg_mul,
    koranyi_distance,
    validate_metric,
    validate_section,
)
from fiberlip.extension import HypothesisViolated
from fiberlip.hoelder import min_constant
from fiberlip.spaces import (
    ScenarioConfig,
    euclidean_linear_quotient,
    extension_scenario,
    generate,
    koranyi_heisenberg,
    random_finite_fibration,
    random_section,
    three_segment_space,
)


def test_three_segment_fibers():
    space = three_segment_space(81)
    F = space.fibration
    assert len(F.fiber(space.named["y"])) == 3
    half = space.base_index(0.5)
    assert len(F.fiber(half)) == 2
    pts = F.total.points[F.fiber(space.named["y"])]
    assert np.any(np.all(np.isclose(pts, [7.0, 40 / 7], atol=1e-12), axis=1))


def test_three_segment_includes_named_points_at_any_resolution():
    for res in (2, 5, 25):
        space = three_segment_space(res)
        assert set(space.named) == {"x", "y", "z", "f_x", "f_y", "f_z"}
        assert validate_metric(space.fibration.total).ok


def test_three_segment_merges_crossing_point():
    # resolution 25 samples x1 = 10/3 where the lower segments meet
    space = three_segment_space(25)
    j = space.base_index(10 / 3) if np.any(np.isclose(space.base_x1, 10 / 3)) else None
    assert j is not None
    assert len(space.fibration.fiber(j)) == 2


def test_euclidean_linear_sections_are_valid():
    F, secs = euclidean_linear_quotient(ScenarioConfig("euclidean_linear", 1, 5, {"m": 2, "kappa": 4}))
    assert all(validate_section(F, s) for s in secs.values())
    assert validate_metric(F.total).ok


def test_rank_deficient_quotient_rejected():
    with pytest.raises(FiberlipError):
        euclidean_linear_quotient(ScenarioConfig("euclidean_linear", 0, 3, {"matrix": [[1, 1], [2, 2]]}))


def test_koranyi_left_invariance():
    rng = np.random.default_rng(5)
    for _ in range(200):
        g, p, q = rng.normal(size=(3, 3))
        lhs = koranyi_distance(heisenberg_mul(g, p), heisenberg_mul(g, q))[0, 0]
        assert lhs == pytest.approx(koranyi_distance(p, q)[0, 0], abs=1e-9)


def test_koranyi_center_distance():
    for t in (0.25, 1.0, 4.0):
        assert koranyi_distance([0, 0, 0], [0, 0, t])[0, 0] == pytest.approx(2 * np.sqrt(t))


def test_koranyi_samples_form_a_metric():
    F, _ = koranyi_heisenberg(ScenarioConfig("koranyi_heisenberg", 0, 4))
    assert validate_metric(F.total).ok
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(60, 3))
    D = koranyi_distance(pts, pts)
    assert validate_metric(D).ok


def test_koranyi_exact_fiber_distance_against_minimization():
    F, _ = koranyi_heisenberg(ScenarioConfig("koranyi_heisenberg", 0, 3))
    rng = np.random.default_rng(8)
    for _ in range(10):
        p = rng.normal(size=3)
        y = int(rng.integers(F.n_base))
        a, b = F.base_coords[y]
        res = minimize_scalar(lambda t: koranyi_distance(p, [a, b, t])[0, 0],
                              bracket=(-10, 10), tol=1e-12)
        assert dist_to_fiber(F, p, y) == pytest.approx(res.fun, abs=1e-6)


def test_koranyi_flat_section_has_finite_constant():
    F, secs = koranyi_heisenberg(ScenarioConfig("koranyi_heisenberg", 0, 4))
    assert np.isfinite(min_constant(F, secs["zero"], 1.0))


def test_random_fibration_is_metric_and_deterministic():
    cfg = ScenarioConfig("random_finite", 42, params={"n_points": 60, "n_base": 15})
    F = random_finite_fibration(cfg)
    assert validate_metric(F.total).ok
    a = json.dumps(dump_fibration(F), sort_keys=True)
    b = json.dumps(dump_fibration(random_finite_fibration(cfg)), sort_keys=True)
    assert a == b
    assert generate(ScenarioConfig("random_finite", 42)) == generate(ScenarioConfig("random_finite", 42))


def test_random_fibration_singleton_fibers():
    F = random_finite_fibration(ScenarioConfig("random_finite", 3, params={"n_points": 20, "n_base": 20}))
    assert all(len(F.fiber(y)) == 1 for y in range(F.n_base))
    phi = random_section(F, np.random.default_rng(0))
    assert np.array_equal(F.fiber_of[phi.assign], np.arange(20))


def test_random_fibration_size_limits():
    with pytest.raises(FiberlipError):
        random_finite_fibration(ScenarioConfig("random_finite", params={"n_points": 600}))


def test_scenario_config_validation():
    with pytest.raises(FiberlipError):
        ScenarioConfig("unknown")
    with pytest.raises(FiberlipError):
        ScenarioConfig("three_segment", resolution=1)


def test_extension_scenario_shapes():
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 5, {"s": 2, "g": [[0.3, 0, 0], [0, 0.4, 0]]}))
    assert p.points.shape[1] == 4
    assert p.partial.shape == (36, 4)
    assert p.grid_shape == (5, 5, 5, 5)


def test_extension_scenario_certifies_partial_graph():
    cfg = ScenarioConfig("extension_scenario", 0, 5, {"g": [[3.0, 3.0, 0.0]], "L": 1.0})
    with pytest.raises(HypothesisViolated, match="hypothesis violated"):
        extension_scenario(cfg)
    cfg = ScenarioConfig("extension_scenario", 0, 5, {"k": 2.0, "rho_scale": 3.0})
    with pytest.raises(HypothesisViolated):
        extension_scenario(cfg)


def test_diagonal_partial_graph_constant():
    # g(a, b) = 0.5 (a + b) rises by |du| / sqrt(2) along (1, 1), so d = sqrt(1.5) |du|, D = |du|
    u = np.linspace(0, 1, 6)
    ub = np.stack(np.meshgrid(u, u, indexing="ij"), -1).reshape(-1, 2)
    vals = np.column_stack([ub, 0.5 * ub.sum(axis=1)])
    F, secs = linear_fibration(LinearQuotient(np.hstack([np.eye(2), np.zeros((2, 1))])), ub, {"phi": vals})
    assert min_constant(F, secs["phi"]) == pytest.approx(np.sqrt(1.5) - 1, abs=1e-12)
