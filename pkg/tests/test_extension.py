import numpy as np
import pytest
from sklearn.base import clone

from fiberlip.core_metric import FiberlipError
from fiberlip.extension import (
    ExtensionProblem,
    LevelSetExtension,
    delta,
    extension_constant,
    global_extension,
    level_set_profile,
    local_extension,
    verify_extension,
)
from fiberlip.spaces import ScenarioConfig, extension_scenario

ORIGIN = [0.0, 0.0, 0.0]


def plane_problem(k=1.0, L=1.0, rho_scale=None, partial=(ORIGIN,)):
    return ExtensionProblem(points=np.array(partial, dtype=float),
                            partial=np.array(partial, dtype=float), k=k, L=L,
                            rho_scale=rho_scale)


def test_constant():
    assert extension_constant(1, 1) == 6
    assert extension_constant(2, 1) == 16
    assert extension_constant(1, 2) == 8


def test_delta_examples():
    assert delta(plane_problem(), 0, ORIGIN, [3, 4, 7]) == pytest.approx(5.0)
    assert delta(plane_problem(k=2.0), 0, ORIGIN, [3, 4, 7]) == pytest.approx(10.0)
    with pytest.raises(FiberlipError):
        delta(plane_problem(), 1, ORIGIN, [3, 4, 7])


def test_local_extension_branches():
    p = plane_problem()
    assert local_extension(p, 0, ORIGIN, ORIGIN) == 0.0
    assert local_extension(p, 0, ORIGIN, [0, 0, 5]) == pytest.approx(5.0)
    assert local_extension(p, 0, ORIGIN, [3, 4, 1]) == pytest.approx(-18.0)
    assert local_extension(p, 0, ORIGIN, [0, 0, -5]) == pytest.approx(-15.0)


def test_profile_continuity_at_band_edges():
    for alpha in (2.0, 3.0):
        for d in (0.0, 0.4, 2.5):
            e = 2 * alpha * d
            assert level_set_profile(e, d, alpha) == pytest.approx(e, abs=1e-12)
            assert level_set_profile(-e, d, alpha) == pytest.approx(-3 * e, abs=1e-12)


def test_single_point_partial_graph():
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 11, {"partial_resolution": 1}))
    assert len(p.partial) == 1
    result = global_extension(p)
    est = p.estimator().fit(p.partial)
    assert np.allclose(result.f[:, 0], est.local_values(0, p.points)[:, 0])
    assert est.transform(p.partial)[0, 0] == 0.0
    report = verify_extension(p, result)
    assert report.ok and result.measured_lip <= 6


def test_flat_partial_graph_is_zero_set():
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 11))
    est = p.estimator().fit(p.partial)
    local = est.local_values(0, p.partial)
    off = ~np.eye(len(p.partial), dtype=bool)
    assert np.all(local[off] < 0)
    result = global_extension(p)
    assert result.zero_set_ok and result.measured_lip <= 6 * 1.05
    assert verify_extension(p, result).ok


def test_sloped_partial_graph():
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 13, {"g": [[0.5, 0.5, 0.0]]}))
    result = global_extension(p)
    report = verify_extension(p, result)
    assert result.containment_error == 0.0
    assert report.ok


def test_two_components_are_independent():
    g = [[0.3, 0.0, 0.0], [0.0, 0.4, 0.0]]
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 7, {"s": 2, "g": g}))
    result = global_extension(p, n_random=2000)
    assert result.f.shape == (len(p.points), 2)
    one = extension_scenario(ScenarioConfig("extension_scenario", 0, 7, {"s": 2, "g": g}))
    est = one.estimator().fit(one.partial)
    assert np.allclose(result.f[:, 1], est.local_values(1, one.points).max(axis=1))
    assert verify_extension(p, result).ok


def test_aggregation_is_monotone_in_partial_graph():
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 9))
    sub = p.estimator().fit(p.partial[::3]).transform(p.points)
    full = p.estimator().fit(p.partial).transform(p.points)
    assert np.all(full >= sub - 1e-15)


def test_understated_L_breaks_containment():
    # slope 3 needs L = sqrt(10) - 1; slope 2 would sit exactly on the band edge
    cfg = {"g": [[3.0, 0.0, 0.0]], "L": 1.0, "certify": False}
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 9, cfg))
    report = verify_extension(p, global_extension(p, n_random=2000))
    assert not report.containment_ok


def test_rho_outside_hypothesis_exceeds_bound():
    cfg = {"rho_scale": 4.0, "certify": False}
    p = extension_scenario(ScenarioConfig("extension_scenario", 0, 21, cfg))
    report = verify_extension(p, global_extension(p))
    assert not report.lip_ok


def test_empty_partial_graph():
    p = ExtensionProblem(points=np.zeros((1, 3)), partial=np.zeros((0, 3)))
    with pytest.raises(FiberlipError):
        global_extension(p)


def test_estimator_api():
    est = LevelSetExtension(s=1, k=2.0, L=1.0)
    params = est.get_params()
    assert params["k"] == 2.0 and params["rho_scale"] is None
    twin = clone(est).set_params(L=2.0)
    assert twin.L == 2.0 and est.L == 1.0
    X = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.5]])
    out = est.fit_transform(X)
    assert out.shape == (2, 1) and np.all(out == 0)
    assert est.K_bound_ == 16.0
    with pytest.raises(FiberlipError):
        LevelSetExtension(k=0.5).fit(X)
