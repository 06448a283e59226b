"""Metric spaces, fibrations and sections on finite samples.

A :class:`Fibration` is a sampled metric space ``X`` together with a
surjective label map ``X -> Y``.  Fiber distances are computed exactly
whenever the fibration carries an exact evaluator (linear quotients of
``R^k``, the Heisenberg center quotient) and by enumerating the sampled
fiber otherwise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import cdist

BACKENDS = ("matrix", "euclidean", "three_segment", "koranyi", "graph_geodesic")
DEFAULT_TOL = 1e-9


class FiberlipError(ValueError):
    """Base class for input errors raised by this package."""


class UnknownFiberError(FiberlipError, KeyError):
    pass


class InvalidSectionError(FiberlipError):
    pass


# ---------------------------------------------------------------------------
# distances


def koranyi_distance(P: np.ndarray, Q: np.ndarray) -> np.ndarray:
    """Pairwise Korányi gauge distance ``||p^{-1} q||`` on the Heisenberg group.

    Group law ``(x,y,t)(x',y',t') = (x+x', y+y', t+t'+(xy'-yx')/2)`` and
    gauge ``((x^2+y^2)^2 + 16 t^2)^(1/4)``.
    """
    P = np.atleast_2d(np.asarray(P, dtype=float))
    Q = np.atleast_2d(np.asarray(Q, dtype=float))
    dx = Q[None, :, 0] - P[:, None, 0]
    dy = Q[None, :, 1] - P[:, None, 1]
    dt = (
        Q[None, :, 2]
        - P[:, None, 2]
        - 0.5 * (P[:, None, 0] * Q[None, :, 1] - P[:, None, 1] * Q[None, :, 0])
    )
    r2 = dx * dx + dy * dy
    return (r2 * r2 + 16.0 * dt * dt) ** 0.25


def heisenberg_mul(p, q) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    return np.array(
        [p[0] + q[0], p[1] + q[1], p[2] + q[2] + 0.5 * (p[0] * q[1] - p[1] * q[0])]
    )


def geodesic_matrix(n: int, edges: Iterable[Sequence[float]]) -> np.ndarray:
    """Shortest-path completion of a weighted undirected graph on ``n`` nodes."""
    rows, cols, w = [], [], []
    for i, j, wt in edges:
        if wt <= 0:
            raise FiberlipError(f"edge ({i},{j}) has non-positive weight {wt}")
        rows.append(int(i))
        cols.append(int(j))
        w.append(float(wt))
    graph = csr_matrix((w, (rows, cols)), shape=(n, n))
    D = shortest_path(graph, method="D", directed=False)
    if not np.all(np.isfinite(D)):
        raise FiberlipError("graph is disconnected")
    return D


@dataclass(frozen=True, eq=False)
class MetricSpace:
    """A finite sample of a metric space.

    ``backend`` selects how distances are evaluated: ``"matrix"`` and
    ``"graph_geodesic"`` read the stored dense matrix; the others use a
    closed form on ``points``.
    """

    points: np.ndarray
    backend: str = "euclidean"
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.backend not in BACKENDS:
            raise FiberlipError(f"unknown backend {self.backend!r}")
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        object.__setattr__(self, "points", pts)
        if self.backend in ("matrix", "graph_geodesic"):
            if self.matrix is None:
                raise FiberlipError(f"backend {self.backend!r} needs a distance matrix")
            M = np.asarray(self.matrix, dtype=float)
            if M.shape != (len(pts), len(pts)):
                raise FiberlipError(
                    f"distance matrix shape {M.shape} does not match {len(pts)} points"
                )
            object.__setattr__(self, "matrix", M)
        elif self.backend == "koranyi" and pts.shape[1] != 3:
            raise FiberlipError("koranyi backend needs 3-dimensional points")

    def __len__(self) -> int:
        return len(self.points)

    def pairwise(self, rows=None, cols=None) -> np.ndarray:
        """Distances between the points indexed by ``rows`` and ``cols``."""
        rows = np.arange(len(self)) if rows is None else np.asarray(rows, dtype=int)
        cols = np.arange(len(self)) if cols is None else np.asarray(cols, dtype=int)
        if self.matrix is not None:
            return self.matrix[np.ix_(rows, cols)]
        return self.distance_coords(self.points[rows], self.points[cols])

    def distance_coords(self, P, Q) -> np.ndarray:
        """Closed-form distances between coordinate arrays (exact backends only)."""
        if self.backend == "koranyi":
            return koranyi_distance(P, Q)
        if self.backend in ("euclidean", "three_segment"):
            return cdist(np.atleast_2d(P), np.atleast_2d(Q))
        raise FiberlipError(f"backend {self.backend!r} has no closed form")

    def dist(self, i: int, j: int) -> float:
        return float(self.pairwise([i], [j])[0, 0])

    def dense(self) -> np.ndarray:
        return self.pairwise()


@dataclass
class ValidationReport:
    identity: list = field(default_factory=list)
    positivity: list = field(default_factory=list)
    symmetry: list = field(default_factory=list)
    triangle: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.identity or self.positivity or self.symmetry or self.triangle)

    def __bool__(self) -> bool:
        # truthy when violations were found, like a non-empty list
        return not self.ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "identity": self.identity,
            "positivity": self.positivity,
            "symmetry": self.symmetry,
            "triangle": self.triangle,
        }


def validate_metric(M: MetricSpace | np.ndarray, tol: float = DEFAULT_TOL,
                    max_reports: int = 100) -> ValidationReport:
    """List every identity, symmetry and triangle violation beyond ``tol``."""
    D = M.dense() if isinstance(M, MetricSpace) else np.asarray(M, dtype=float)
    n = len(D)
    report = ValidationReport()
    diag = np.abs(np.diag(D))
    report.identity = [int(i) for i in np.flatnonzero(diag > tol)[:max_reports]]
    off = ~np.eye(n, dtype=bool)
    bad = np.argwhere(off & (D <= tol))
    report.positivity = [(int(i), int(j)) for i, j in bad[:max_reports]]
    asym = np.argwhere(np.triu(np.abs(D - D.T) > tol, 1))
    report.symmetry = [(int(i), int(j)) for i, j in asym[:max_reports]]
    # D[i,j] <= D[i,r] + D[r,j]; one intermediate point at a time keeps memory O(n^2)
    for r in range(n):
        excess = D - (D[:, r:r + 1] + D[r:r + 1, :])
        for i, j in np.argwhere(excess > tol):
            if len(report.triangle) >= max_reports:
                break
            report.triangle.append((int(i), int(j), r))
    return report


# ---------------------------------------------------------------------------
# exact fiber evaluators


class LinearQuotient:
    """A full-row-rank linear map ``z -> A z`` on ``R^k``.

    The fiber over ``y`` is the affine subspace ``{z : A z = y}``; distances to
    it come from the orthogonal projection ``A^+ (A z - y)``.
    """

    def __init__(self, A):
        A = np.atleast_2d(np.asarray(A, dtype=float))
        if np.linalg.matrix_rank(A) < A.shape[0]:
            raise FiberlipError("quotient matrix is rank deficient")
        self.A = A
        self.pinv = A.T @ np.linalg.inv(A @ A.T)

    @property
    def kappa(self) -> int:
        return self.A.shape[1]

    def __call__(self, z) -> np.ndarray:
        return np.asarray(z, dtype=float) @ self.A.T

    def nearest(self, z, y) -> np.ndarray:
        """Closest point of the fiber over ``y`` to ``z`` (rows broadcast)."""
        z = np.asarray(z, dtype=float)
        return z - (self(z) - np.asarray(y, dtype=float)) @ self.pinv.T

    def fiber_distance(self, z, y, scale: float = 1.0) -> np.ndarray:
        """Distance from ``z`` to ``{w : A w = scale * y}``.

        ``scale`` realizes the fiber of ``(1/scale) * pi`` over ``y``.
        """
        resid = self(z) - scale * np.asarray(y, dtype=float)
        return np.linalg.norm(resid @ self.pinv.T, axis=-1)

    def is_section(self, base, values, scale: float = 1.0, tol: float = DEFAULT_TOL) -> bool:
        base = np.asarray(base, dtype=float).reshape(len(values), -1)
        resid = self(values) - scale * base
        return bool(np.all(np.abs(resid) <= tol * np.maximum(1.0, np.abs(scale * base))))


class _LinearEvaluator:
    def __init__(self, quotient: LinearQuotient, base_coords: np.ndarray):
        self.quotient = quotient
        self.base_coords = base_coords

    def __call__(self, coords: np.ndarray, label: int) -> np.ndarray:
        return self.quotient.fiber_distance(coords, self.base_coords[label])


class _HorizontalEvaluator:
    """Korányi distance to the center coset over ``(a, b)``: the horizontal
    Euclidean distance, attained by choosing the vertical coordinate freely."""

    def __init__(self, base_coords: np.ndarray):
        self.base_coords = base_coords

    def __call__(self, coords: np.ndarray, label: int) -> np.ndarray:
        return np.linalg.norm(coords[:, :2] - self.base_coords[label], axis=1)


# ---------------------------------------------------------------------------
# fibrations and sections


@dataclass(frozen=True, eq=False)
class Section:
    """A section stored as one X-point index per base label (base order)."""

    assign: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "assign", np.asarray(self.assign, dtype=int))

    def __len__(self) -> int:
        return len(self.assign)

    def __getitem__(self, y: int) -> int:
        return int(self.assign[y])


@dataclass(frozen=True, eq=False)
class Fibration:
    """Sampled total space, base labels and the label of every sample point.

    ``fiber_of[i]`` is the base index of point ``i``.  ``exact`` optionally
    maps ``(coords, base_index)`` to exact fiber distances.
    """

    total: MetricSpace
    base_ids: tuple
    fiber_of: np.ndarray
    base_coords: np.ndarray | None = None
    exact: Callable[[np.ndarray, int], np.ndarray] | None = None
    quotient: LinearQuotient | None = None

    def __post_init__(self):
        labels = np.asarray(self.fiber_of, dtype=int)
        object.__setattr__(self, "fiber_of", labels)
        object.__setattr__(self, "base_ids", tuple(self.base_ids))
        if len(labels) != len(self.total):
            raise FiberlipError("fiber_of must label every point of X")
        m = len(self.base_ids)
        if labels.size and (labels.min() < 0 or labels.max() >= m):
            raise FiberlipError("fiber label out of range")
        counts = np.bincount(labels, minlength=m)
        if np.any(counts == 0):
            missing = [self.base_ids[i] for i in np.flatnonzero(counts == 0)]
            raise FiberlipError(f"fiber map is not surjective; empty fibers {missing[:5]}")
        object.__setattr__(
            self, "_fibers", [np.flatnonzero(labels == j) for j in range(m)]
        )

    @property
    def n_base(self) -> int:
        return len(self.base_ids)

    def fiber(self, y: int) -> np.ndarray:
        return self._fibers[self.base_index(y)]

    def base_index(self, y) -> int:
        if isinstance(y, (int, np.integer)) and 0 <= y < self.n_base:
            return int(y)
        raise UnknownFiberError(f"no such fiber: {y!r}")

    def label_index(self, label: Hashable) -> int:
        try:
            return self.base_ids.index(label)
        except ValueError:
            raise UnknownFiberError(f"no such fiber: {label!r}") from None

    def fiber_distances(self, rows, cols=None) -> np.ndarray:
        """``out[a, b] = d(x_rows[a], pi^{-1}(cols[b]))``."""
        rows = np.asarray(rows, dtype=int)
        cols = np.arange(self.n_base) if cols is None else np.asarray(cols, dtype=int)
        out = np.empty((len(rows), len(cols)))
        if self.exact is not None:
            coords = self.total.points[rows]
            for b, y in enumerate(cols):
                out[:, b] = self.exact(coords, int(y))
        else:
            for b, y in enumerate(cols):
                out[:, b] = self.total.pairwise(rows, self._fibers[y]).min(axis=1)
        return out


def dist_to_fiber(F: Fibration, x, y: int) -> float:
    """Distance from ``x`` (point index or coordinates) to the fiber over ``y``."""
    y = F.base_index(y)
    if isinstance(x, (int, np.integer)):
        return float(F.fiber_distances([x], [y])[0, 0])
    coords = np.atleast_2d(np.asarray(x, dtype=float))
    if F.exact is not None:
        return float(F.exact(coords, y)[0])
    if F.total.matrix is not None:
        raise FiberlipError("coordinate queries need a closed-form backend")
    return float(F.total.distance_coords(coords, F.total.points[F.fiber(y)]).min())


def validate_section(F: Fibration, phi: Section | Sequence[int]) -> bool:
    assign = np.asarray(phi.assign if isinstance(phi, Section) else phi, dtype=int)
    if assign.shape != (F.n_base,):
        return False
    if assign.min(initial=0) < 0 or assign.max(initial=0) >= len(F.total):
        return False
    return bool(np.array_equal(F.fiber_of[assign], np.arange(F.n_base)))


def require_section(F: Fibration, phi) -> Section:
    phi = phi if isinstance(phi, Section) else Section(phi)
    if not validate_section(F, phi):
        raise InvalidSectionError("map is not a section: pi(phi(y)) != y for some y")
    return phi


# ---------------------------------------------------------------------------
# constructors


def linear_fibration(quotient: LinearQuotient, base_coords,
                     sections: Mapping[str, np.ndarray],
                     base_ids: Sequence | None = None,
                     tol: float = DEFAULT_TOL) -> tuple[Fibration, dict[str, Section]]:
    """Fibration of ``R^k`` over sampled base points, sampled on section graphs.

    ``sections[name]`` holds the values ``phi(y)`` (one row per base point).
    Coincident graph points are merged, so sections sharing a value share the
    X index.
    """
    base = np.asarray(base_coords, dtype=float).reshape(-1, quotient.A.shape[0])
    points: list[np.ndarray] = []
    labels: list[int] = []
    index: dict[tuple, int] = {}
    out: dict[str, Section] = {}
    for name, values in sections.items():
        values = np.asarray(values, dtype=float).reshape(len(base), quotient.kappa)
        if not quotient.is_section(base, values, tol=tol):
            raise InvalidSectionError(f"{name!r} is not a section of the quotient")
        assign = []
        for y, v in enumerate(values):
            key = (y, *v.tolist())
            if key not in index:
                index[key] = len(points)
                points.append(v)
                labels.append(y)
            assign.append(index[key])
        out[name] = Section(assign)
    ids = tuple(range(len(base))) if base_ids is None else tuple(base_ids)
    F = Fibration(
        MetricSpace(np.array(points), "euclidean"),
        ids,
        np.array(labels),
        base_coords=base,
        exact=_LinearEvaluator(quotient, base),
        quotient=quotient,
    )
    return F, out


def koranyi_fibration(points, base_coords, fiber_of, base_ids=None) -> Fibration:
    base = np.asarray(base_coords, dtype=float)
    ids = tuple(range(len(base))) if base_ids is None else tuple(base_ids)
    return Fibration(
        MetricSpace(points, "koranyi"), ids, fiber_of,
        base_coords=base, exact=_HorizontalEvaluator(base),
    )


# ---------------------------------------------------------------------------
# JSON fibration spec

SCHEMA = "fiberlip/1"


def load_fibration(source: str | Mapping[str, Any]) -> tuple[Fibration, dict[str, Section]]:
    """Build a fibration and its named sections from the JSON spec.

    ``source`` is JSON text or an already-parsed mapping.  Base labels are
    normalized to strings.  Raises :class:`FiberlipError` on structural
    problems and ``json.JSONDecodeError`` on malformed text.
    """
    spec = json.loads(source) if isinstance(source, str) else source
    try:
        space = spec["space"]
        backend = space.get("backend", "matrix")
        points = np.asarray(space.get("points", []), dtype=float)
        fibers = spec["fibers"]
    except (KeyError, TypeError, AttributeError) as exc:
        raise FiberlipError(f"malformed fibration spec: missing {exc}") from None
    n = len(points) if len(points) else len(space.get("dist", []))
    if backend == "graph_geodesic" and "dist" not in space:
        matrix = geodesic_matrix(n, space.get("edges", []))
    else:
        matrix = space.get("dist")
    if len(points) == 0:
        points = np.zeros((n, 1))
    total = MetricSpace(points, backend, None if matrix is None else np.asarray(matrix, float))

    point_labels = {}
    for key, label in fibers.items():
        i = int(key)
        if not 0 <= i < n:
            raise FiberlipError(f"fiber entry for unknown point {key}")
        point_labels[i] = str(label)
    if len(point_labels) != n:
        raise FiberlipError("fiber map is not total on X")

    base_coords_spec = spec.get("base_coords")
    if base_coords_spec is not None:
        base_ids = [str(k) for k in base_coords_spec]
    else:
        base_ids = sorted(set(point_labels.values()), key=_label_key)
    for sec in spec.get("sections", {}).values():
        for label in sec:
            if str(label) not in base_ids:
                base_ids.append(str(label))
    lookup = {b: j for j, b in enumerate(base_ids)}
    for label in point_labels.values():
        if label not in lookup:
            raise FiberlipError(f"point label {label!r} missing from base_coords")
    fiber_of = np.array([lookup[point_labels[i]] for i in range(n)], dtype=int)

    base = None
    exact = None
    quotient = None
    if base_coords_spec is not None:
        base = np.asarray([base_coords_spec[b] for b in base_ids], dtype=float)
        if base.ndim == 1:
            base = base[:, None]
        if "pi" in spec:
            quotient = LinearQuotient(spec["pi"])
            exact = _LinearEvaluator(quotient, base)
        elif backend == "koranyi":
            exact = _HorizontalEvaluator(base)
    F = Fibration(total, base_ids, fiber_of, base_coords=base, exact=exact, quotient=quotient)

    sections = {}
    for name, assign in spec.get("sections", {}).items():
        arr = np.full(F.n_base, -1, dtype=int)
        for label, idx in assign.items():
            arr[lookup[str(label)]] = int(idx)
        if np.any(arr < 0):
            raise FiberlipError(f"section {name!r} is not defined on every base label")
        sections[name] = Section(arr)
    return F, sections


def dump_fibration(F: Fibration, sections: Mapping[str, Section] | None = None) -> dict:
    """Inverse of :func:`load_fibration` (labels written as strings)."""
    ids = [str(b) for b in F.base_ids]
    space: dict[str, Any] = {"backend": F.total.backend, "points": F.total.points.tolist()}
    if F.total.matrix is not None:
        space["dist"] = F.total.matrix.tolist()
    out: dict[str, Any] = {
        "schema": SCHEMA,
        "space": space,
        "fibers": {str(i): ids[j] for i, j in enumerate(F.fiber_of)},
        "sections": {
            name: {ids[y]: int(p) for y, p in enumerate(s.assign)}
            for name, s in (sections or {}).items()
        },
    }
    if F.base_coords is not None:
        out["base_coords"] = {b: F.base_coords[j].tolist() for j, b in enumerate(ids)}
    if F.quotient is not None:
        out["pi"] = F.quotient.A.tolist()
    return out


def _label_key(label: str):
    try:
        return (0, float(label), label)
    except ValueError:
        return (1, 0.0, label)
