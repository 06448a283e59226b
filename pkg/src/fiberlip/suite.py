"""The acceptance battery behind ``fiberlip suite``."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import extension as ext
from .core_metric import dist_to_fiber
from .hoelder import (
    HoelderParams,
    check_graph_avoids_cones,
    check_intrinsic_hoelder,
    check_vector_space_closure,
    min_constant,
)
from .norms import (
    ZERO,
    NormContext,
    asymmetry_demo,
    lemma_trials,
    norm_v1,
    norm_v2,
    parabola_limit_scenario,
    seminorm_v1,
    seminorm_v2,
)
from .spaces import (
    ScenarioConfig,
    euclidean_linear_quotient,
    extension_scenario,
    kernel_basis,
    koranyi_heisenberg,
    random_finite_fibration,
    random_quotient,
    random_section,
    three_segment_space,
)

HOMOGENEITY_DELTAS = (-3.0, -1.0, 0.5, 2.0)


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    detail: dict
    elapsed: float = 0.0

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.number}: {self.name} ({self.elapsed:.2f}s)"


def _timed(number, name, fn, budget=None) -> Criterion:
    t0 = time.perf_counter()
    passed, detail = fn()
    elapsed = time.perf_counter() - t0
    if budget is not None:
        detail["runtime_budget_s"] = budget
        passed = passed and elapsed < budget
    return Criterion(number, name, bool(passed), detail, elapsed)


# ---------------------------------------------------------------------------
# shared scenario builders


def random_family(seed: int, n_members: int = 4):
    """Seeded linear quotient, base sample, anchor and family members."""
    rng = np.random.default_rng(seed)
    kappa = int(rng.integers(2, 6))
    m = int(rng.integers(1, kappa))
    q = random_quotient(rng, m, kappa)
    base = rng.uniform(-2, 2, size=(int(rng.integers(3, 9)), m))
    N = kernel_basis(q)
    psi = base @ q.pinv.T + np.sin(base @ rng.normal(size=(m, N.shape[1]))) @ N.T
    anchor = int(rng.integers(len(base)))
    ctx = NormContext(q, base, psi, anchor)
    members = []
    for _ in range(n_members):
        W = rng.normal(size=(N.shape[1], m))
        values = psi + ((base - base[anchor]) @ W.T) @ N.T
        scale = float(rng.choice([-1, 1]) * rng.uniform(0.2, 3.0))
        members.append(ctx.member(values, scale))
    return ctx, members


def scenario_catalogue():
    """Named ``(fibration, section, alpha)`` scenarios for constant checks."""
    out = []
    for a in (1.0, 0.5):
        F, s = euclidean_linear_quotient(ScenarioConfig("euclidean_linear", 3, 7,
                                                        {"m": 1, "kappa": 3}))
        out.append((f"euclidean-phi-a{a}", F, s["phi"], a))
    ts = three_segment_space(33)
    out.append(("three-segment", ts.fibration, ts.sections["corrected"], 1.0))
    F, s = koranyi_heisenberg(ScenarioConfig("koranyi_heisenberg", 0, 5))
    out.append(("koranyi-tilted", F, s["tilted"], 1.0))
    for seed in range(4):
        F = random_finite_fibration(ScenarioConfig("random_finite", seed, params={
            "n_points": 40, "n_base": 12}))
        out.append((f"random-{seed}", F, random_section(F, np.random.default_rng(seed)), 0.7))
    return out


# ---------------------------------------------------------------------------
# criteria


def c1_asymmetry():
    r = asymmetry_demo()
    ok = r["violation_rhs"] == 1.0 and r["violation_lhs"] > 1 and r["general_inequality_ok"]
    return ok, {k: r[k] for k in ("violation_lhs", "violation_rhs", "general_inequality_ok",
                                  "stated_lhs", "recomputed_lhs_closed_form")}


def c2_lemma():
    rows = lemma_trials(1000, seed=7)
    n_ok = sum(r["ok"] for r in rows)
    return n_ok == 1000, {"ok": n_ok, "trials": 1000}


def c3_cones(n_cases: int = 200):
    agree = 0
    holds = 0
    for seed in range(n_cases):
        rng = np.random.default_rng(10_000 + seed)
        n = int(rng.integers(2, 129))
        m = int(rng.integers(1, n + 1))
        F = random_finite_fibration(ScenarioConfig("random_finite", seed, params={
            "n_points": n, "n_base": m}))
        phi = random_section(F, rng)
        alpha = float(rng.uniform(0.05, 1.0))
        # straddle the minimal constant so both outcomes occur
        mc = min_constant(F, phi, alpha)
        L = mc * rng.uniform(0.5, 1.5) if mc > 0 else float(np.exp(rng.uniform(-3, 2)))
        params = HoelderParams(max(L, 1e-3), alpha)
        a = check_graph_avoids_cones(F, phi, params)
        b = check_intrinsic_hoelder(F, phi, params).holds
        agree += a == b
        holds += b
    return agree == n_cases, {"agree": agree, "cases": n_cases, "hoelder_true": holds}


def c4_min_constant():
    rows = {}
    ok = True
    for name, F, phi, alpha in scenario_catalogue():
        c = min_constant(F, phi, alpha)
        above = check_intrinsic_hoelder(F, phi, (c + 1e-9, alpha)).holds
        below = c <= 1e-6 or not check_intrinsic_hoelder(F, phi, (c - 1e-6, alpha)).holds
        # independent pair scan through the public point-to-fiber routine
        best = 0.0
        for y1 in range(F.n_base):
            for y2 in range(F.n_base):
                if y1 != y2:
                    D = dist_to_fiber(F, int(phi.assign[y1]), y2)
                    d = F.total.dist(int(phi.assign[y1]), int(phi.assign[y2]))
                    best = max(best, (d - D) / D ** alpha)
        match = abs(best - c) <= 1e-12 * max(1.0, c)
        rows[name] = {"min_constant": c, "above": above, "below": below, "oracle_match": match}
        ok = ok and above and below and match
    return ok, rows


def c5_norms(n_families: int = 50):
    counts = dict(definite=0, homogeneity=0, triangle=0, paths=0, skipped=0)
    ok = True
    for seed in range(n_families):
        ctx, members = random_family(seed)
        definite = norm_v1(ZERO, ctx).total == 0 and norm_v2(ZERO, ctx).total == 0
        definite &= all(norm_v1(m, ctx).total > 0 and norm_v2(m, ctx).total > 0 for m in members)
        hom = True
        paths = True
        for m in members:
            for nf in (norm_v1, norm_v2):
                base = nf(m, ctx).total
                for d in HOMOGENEITY_DELTAS:
                    hom &= abs(nf(m.scaled(d), ctx).total - abs(d) * base) <= 1e-9 * max(1, base)
            for sf in (seminorm_v1, seminorm_v2):
                paths &= abs(sf(m, ctx, "direct") - sf(m, ctx, "reduced")) <= 1e-9
        tri = True
        for i, a in enumerate(members):
            for b in members[i:]:
                if a.scale + b.scale == 0:
                    counts["skipped"] += 1
                    continue
                s = a + b
                for nf in (norm_v1, norm_v2):
                    tri &= nf(s, ctx).total <= nf(a, ctx).total + nf(b, ctx).total + 1e-9
        for key, val in (("definite", definite), ("homogeneity", hom), ("triangle", tri),
                         ("paths", paths)):
            counts[key] += bool(val)
        ok = ok and definite and hom and tri and paths
    counts["families"] = n_families
    return ok, counts


def c6_extension(resolution_s1: int = 41, resolution_s2: int = 15):
    rows = {}
    ok = True
    for s, res in ((1, resolution_s1), (2, resolution_s2)):
        for k, L in ((1.0, 1.0), (1.0, 2.0), (2.0, 1.0)):
            g = [[0.5, 0.5, 0.0]] if s == 1 else [[0.3, 0.0, 0.1], [0.0, 0.4, -0.2]]
            if L == 2.0:
                g = [[1.5, 1.0, 0.0]] if s == 1 else [[1.2, 0.4, 0.0], [0.3, 1.1, 0.0]]
            problem = extension_scenario(ScenarioConfig("extension_scenario", 0, res, {
                "s": s, "k": k, "L": L, "g": g}))
            result = ext.global_extension(problem)
            report = ext.verify_extension(problem, result)
            rows[f"s={s},k={k},L={L}"] = report.to_dict()
            ok = ok and report.ok
    band = []
    for alpha in (2.0, 3.0, 5.0):
        for delta in (0.0, 0.3, 1.7):
            edge = 2 * alpha * delta
            for t, neighbour in ((edge, edge), (-edge, 3 * -edge)):
                band.append(abs(float(ext.level_set_profile(t, delta, alpha)) - neighbour))
    rows["branch_continuity_max_gap"] = max(band)
    ok = ok and max(band) <= 1e-12
    return ok, rows


def c7_limits():
    r = parabola_limit_scenario()
    ok = r["decreasing"] and r["bounded"] and r["first"][-1] < 1e-3 and r["second"][-1] < 1e-3
    return ok, r


def c8_closure(n_pairs: int = 20):
    certified = 0
    negative = 0
    for seed in range(n_pairs):
        ctx, (a, b) = random_family(500 + seed, 2)
        if a.scale + b.scale == 0:
            b = b.scaled(2.0)
        r = check_vector_space_closure([a, b], ctx.quotient, ctx.base)
        certified += r["sum_certified"] and r["scalar_ok"] and np.isfinite(r["sum_constant"])
        raw = a.values + b.values
        negative += not ctx.quotient.is_section(ctx.base, raw)
    return certified == n_pairs and negative == n_pairs, {
        "certified": int(certified), "unscaled_sum_rejected": int(negative), "pairs": n_pairs}


CRITERIA = (
    (1, "three-segment counterexample", c1_asymmetry, 1.0),
    (2, "scaling lemma identity", c2_lemma, 5.0),
    (3, "cone avoidance equivalence", c3_cones, 30.0),
    (4, "min_constant exactness", c4_min_constant, None),
    (5, "norm axioms", c5_norms, 10.0),
    (6, "level-set extension", c6_extension, 60.0),
    (7, "limit ratios", c7_limits, None),
    (8, "vector-space closure", c8_closure, None),
)


def run_suite(only=None) -> list[Criterion]:
    return [_timed(n, name, fn, budget) for n, name, fn, budget in CRITERIA
            if only is None or n in only]
