"""Seeded scenario generators.

Every generator is a pure function of its :class:`ScenarioConfig`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .core_metric import (
    Fibration,
    FiberlipError,
    LinearQuotient,
    MetricSpace,
    Section,
    dump_fibration,
    geodesic_matrix,
    koranyi_fibration,
    linear_fibration,
)
from .extension import ExtensionProblem, HypothesisViolated
from .hoelder import min_constant

KINDS = ("euclidean_linear", "three_segment", "koranyi_heisenberg", "random_finite",
         "extension_scenario")


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    seed: int = 0
    resolution: int = 9
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise FiberlipError(f"unknown scenario kind {self.kind!r}")
        if self.resolution < 2:
            raise FiberlipError("resolution must be at least 2")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


# ---------------------------------------------------------------------------
# Euclidean linear quotients


def random_quotient(rng: np.random.Generator, m: int, kappa: int) -> LinearQuotient:
    while True:
        A = rng.normal(size=(m, kappa))
        if np.linalg.cond(A) < 1e3:
            return LinearQuotient(A)


def kernel_basis(quotient: LinearQuotient) -> np.ndarray:
    """Orthonormal basis of ``ker A`` as columns."""
    _, sv, vt = np.linalg.svd(quotient.A)
    return vt[len(sv):].T


def euclidean_linear_quotient(config: ScenarioConfig) -> tuple[Fibration, dict[str, Section]]:
    """Linear quotient ``z -> A z`` sampled on two section graphs.

    ``psi`` is the minimal-norm section ``A^+ y``; ``phi`` adds a seeded
    linear kernel component.  ``params``: ``matrix`` or ``m``/``kappa``,
    ``bounds`` of the base grid.
    """
    rng = config.rng()
    p = config.params
    if "matrix" in p:
        q = LinearQuotient(p["matrix"])
    else:
        q = random_quotient(rng, int(p.get("m", 1)), int(p.get("kappa", 2)))
    m = q.A.shape[0]
    lo, hi = p.get("bounds", (-1.0, 1.0))
    axis = np.linspace(lo, hi, config.resolution)
    if m <= 2:
        base = np.stack(np.meshgrid(*([axis] * m), indexing="ij"), axis=-1).reshape(-1, m)
    else:
        base = rng.uniform(lo, hi, size=(config.resolution ** 2, m))
    psi = base @ q.pinv.T
    N = kernel_basis(q)
    W = rng.normal(size=(N.shape[1], m))
    phi = psi + (base @ W.T) @ N.T
    return linear_fibration(q, base, {"psi": psi, "phi": phi})


def graph_fibration(A, base, sections) -> tuple[Fibration, dict[str, Section]]:
    """Linear fibration sampled on caller-supplied section values.

    ``sections`` maps names to arrays of values or to callables of the base
    coordinates.
    """
    q = A if isinstance(A, LinearQuotient) else LinearQuotient(A)
    base = np.asarray(base, dtype=float).reshape(-1, q.A.shape[0])
    values = {
        name: np.asarray([fn(y) for y in base] if callable(fn) else fn, dtype=float)
        for name, fn in sections.items()
    }
    return linear_fibration(q, base, values)


# ---------------------------------------------------------------------------
# the three-segment space

SEGMENTS = (((0.0, 8.0), (8.0, 8.0)), ((1.0, 4.0), (8.0, 6.0)), ((0.0, 3.0), (8.0, 7.0)))
NAMED_X1 = (1.0, 6.0, 7.0, 8.0)


def segment_height(seg: int, x1: float) -> float | None:
    (a, ya), (b, yb) = SEGMENTS[seg]
    if not a <= x1 <= b:
        return None
    return ya + (yb - ya) * (x1 - a) / (b - a)


@dataclass(eq=False)
class ThreeSegmentSpace:
    fibration: Fibration
    sections: dict
    base_x1: np.ndarray
    named: dict

    def point_index(self, xy) -> int:
        pts = self.fibration.total.points
        hit = np.flatnonzero(np.all(np.abs(pts - np.asarray(xy, dtype=float)) <= 1e-12, axis=1))
        if len(hit) == 0:
            raise FiberlipError(f"{xy} is not a sample of the three-segment space")
        return int(hit[0])

    def base_index(self, x1: float) -> int:
        hit = np.flatnonzero(np.abs(self.base_x1 - x1) <= 1e-12)
        if len(hit) == 0:
            raise FiberlipError(f"x1={x1} is not a sampled base point")
        return int(hit[0])


def three_segment_space(resolution: int = 81) -> ThreeSegmentSpace:
    """Union of the segments (0,8)-(8,8), (1,4)-(8,6), (0,3)-(8,7) projected
    to the first coordinate over the base segment [0, 8].

    Every sampled fiber contains all of its points on the three segments, so
    sampled fiber distances are exact.  Coincident points (the two lower
    segments cross at x1 = 10/3) are merged.
    """
    if resolution < 2:
        raise FiberlipError("resolution must be at least 2")
    xs = np.union1d(np.linspace(0.0, 8.0, resolution), NAMED_X1)
    points, labels, seg_index = [], [], {}
    for j, x1 in enumerate(xs):
        seen = {}
        for seg in range(3):
            h = segment_height(seg, x1)
            if h is None:
                continue
            key = round(h, 12)
            if key not in seen:
                seen[key] = len(points)
                points.append((x1, h))
                labels.append(j)
            seg_index[seg, j] = seen[key]
    F = Fibration(MetricSpace(np.array(points), "three_segment"), tuple(xs.tolist()),
                  np.array(labels), base_coords=xs[:, None])
    # lower-middle segment where it exists, lowest segment before x1 = 1
    corrected = [seg_index[1, j] if (1, j) in seg_index else seg_index[2, j]
                 for j in range(len(xs))]
    space = ThreeSegmentSpace(F, {"corrected": Section(corrected)}, xs, {})
    space.named = {
        "x": space.base_index(1.0),
        "y": space.base_index(7.0),
        "z": space.base_index(6.0),
        "f_x": space.point_index((1.0, 4.0)),
        "f_y": space.point_index((8.0, 7.0)),
        "f_z": space.point_index((8.0, 6.0)),
    }
    return space


# ---------------------------------------------------------------------------
# Heisenberg group, quotient by the center


def koranyi_heisenberg(config: ScenarioConfig) -> tuple[Fibration, dict[str, Section]]:
    """Sampled Heisenberg group with the Korányi gauge metric, ``pi(a,b,t) = (a,b)``.

    ``params``: ``bounds`` (horizontal half-width), ``t_bounds``, ``t_levels``
    and ``slope`` for the section ``t = slope * a``.  Sections ``zero``
    (``t = 0``) and ``tilted`` are always included.
    """
    p = config.params
    h = float(p.get("bounds", 1.0))
    th = float(p.get("t_bounds", 1.0))
    slope = float(p.get("slope", 0.5))
    axis = np.linspace(-h, h, config.resolution)
    base = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    levels = np.union1d(np.linspace(-th, th, int(p.get("t_levels", 5))), [0.0])
    points, labels = [], []
    zero, tilted = [], []
    for j, (a, b) in enumerate(base):
        ts = np.union1d(levels, [slope * a])
        start = len(points)
        for t in ts:
            points.append((a, b, t))
            labels.append(j)
        zero.append(start + int(np.flatnonzero(ts == 0.0)[0]))
        tilted.append(start + int(np.flatnonzero(ts == slope * a)[0]))
    F = koranyi_fibration(np.array(points), base, np.array(labels))
    return F, {"zero": Section(zero), "tilted": Section(tilted)}


# ---------------------------------------------------------------------------
# random finite fibrations


def random_finite_fibration(config: ScenarioConfig) -> Fibration:
    """Shortest-path metric of a seeded random connected weighted graph with a
    seeded surjective fiber labelling.

    ``params``: ``n_points`` (<= 512), ``n_base`` (<= n_points), ``extra_edges``.
    """
    rng = config.rng()
    p = config.params
    n = int(p.get("n_points", 32))
    m = int(p.get("n_base", max(1, n // 4)))
    if not (1 <= n <= 512 and 1 <= m <= n):
        raise FiberlipError("need 1 <= n_base <= n_points <= 512")
    extra = int(p.get("extra_edges", n))
    # random spanning tree keeps the graph connected; extra edges shorten paths
    order = rng.permutation(n)
    edges = [(order[i], order[rng.integers(0, i)], rng.uniform(0.5, 2.0)) for i in range(1, n)]
    for _ in range(extra if n > 1 else 0):
        i, j = rng.choice(n, size=2, replace=False)
        edges.append((i, j, rng.uniform(0.5, 2.0)))
    D = geodesic_matrix(n, edges)
    labels = np.empty(n, dtype=int)
    perm = rng.permutation(n)
    labels[perm[:m]] = np.arange(m)
    labels[perm[m:]] = rng.integers(0, m, n - m)
    return Fibration(MetricSpace(np.arange(n, dtype=float), "graph_geodesic", D),
                     tuple(range(m)), labels)


def random_section(F: Fibration, rng: np.random.Generator) -> Section:
    return Section([int(rng.choice(F.fiber(y))) for y in range(F.n_base)])


# ---------------------------------------------------------------------------
# extension scenario


def extension_scenario(config: ScenarioConfig) -> ExtensionProblem:
    """Grid in ``R^(2+s)`` with ``pi`` the first two coordinates, ``tau`` the
    last ``s`` and the partial graph ``u -> (u, g(u))`` over a grid of the
    unit square.

    ``params``: ``s``, ``k``, ``L``, ``rho_scale`` (default ``k``), ``bounds``
    and ``fiber_bounds`` of the sample grid, ``partial_resolution`` and ``g``,
    a list of ``s`` affine rows ``[w_a, w_b, c]`` with
    ``g_i(a, b) = w_a a + w_b b + c``.  Set ``certify=False`` to skip the
    hypothesis check on ``g``.
    """
    p = config.params
    s = int(p.get("s", 1))
    k = float(p.get("k", 1.0))
    L = float(p.get("L", 1.0))
    rho_scale = float(p.get("rho_scale", k))
    g = np.asarray(p.get("g", [[0.0, 0.0, 0.0]] * s), dtype=float).reshape(s, 3)
    lo, hi = p.get("bounds", (-1.0, 2.0))
    flo, fhi = p.get("fiber_bounds", (-2.0, 2.0))
    res = config.resolution
    axes = [np.linspace(lo, hi, res)] * 2 + [np.linspace(flo, fhi, res)] * s
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, 2 + s)

    pres = int(p.get("partial_resolution", 6))
    u = np.linspace(0.0, 1.0, pres)
    ubase = np.stack(np.meshgrid(u, u, indexing="ij"), axis=-1).reshape(-1, 2)
    gvals = ubase @ g[:, :2].T + g[:, 2]
    partial = np.concatenate([ubase, gvals], axis=1)

    if p.get("certify", True):
        A = np.hstack([np.eye(2), np.zeros((2, s))])
        F, secs = linear_fibration(LinearQuotient(A), ubase, {"phi": partial})
        needed = min_constant(F, secs["phi"], 1.0)
        if needed > L:
            raise HypothesisViolated(
                f"hypothesis violated: partial graph needs L >= {needed:.6g} > {L}")
        if not (1.0 / k <= rho_scale <= k):
            raise HypothesisViolated(f"hypothesis violated: rho scale {rho_scale} outside [1/k, k]")

    return ExtensionProblem(
        points=np.concatenate([grid, partial]),
        partial=partial,
        s=s, k=k, L=L, rho_scale=rho_scale,
        grid_shape=(res,) * (2 + s),
        partial_base=ubase,
        seed=config.seed,
        meta={"g": g.tolist()},
    )


def generate(config: ScenarioConfig) -> dict[str, Any]:
    """Emit a fibration scenario as the JSON fibration spec."""
    if config.kind == "euclidean_linear":
        F, secs = euclidean_linear_quotient(config)
    elif config.kind == "three_segment":
        sp = three_segment_space(max(config.resolution, 2))
        F, secs = sp.fibration, sp.sections
    elif config.kind == "koranyi_heisenberg":
        F, secs = koranyi_heisenberg(config)
    elif config.kind == "random_finite":
        F = random_finite_fibration(config)
        secs = {"phi": random_section(F, config.rng())}
    else:
        raise FiberlipError("extension scenarios are emitted by the extend command")
    return dump_fibration(F, secs)
