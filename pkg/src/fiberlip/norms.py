"""Norms on scaled families of intrinsically Lipschitz sections.

A family member is the element ``scale * values`` where ``values`` is a
section of the linear quotient ``pi(z) = A z`` on a finite base sample ``K``.
The fiber of ``(1/scale) * pi`` over ``y`` is ``{w : A w = scale * y}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_metric import DEFAULT_TOL, FiberlipError, LinearQuotient, linear_fibration
from .hoelder import (
    ZERO,
    DegenerateScaleError,
    ScaledFamilyMember,
    min_constant,
)
from .spaces import three_segment_space


@dataclass(eq=False)
class NormContext:
    """Linear quotient, base sample ``K``, base section ``psi`` and anchor index."""

    quotient: LinearQuotient
    base: np.ndarray
    psi: np.ndarray
    anchor: int

    def __post_init__(self):
        m = self.quotient.A.shape[0]
        self.base = np.asarray(self.base, dtype=float).reshape(-1, m)
        self.psi = np.asarray(self.psi, dtype=float).reshape(len(self.base), -1)
        if len(self.base) == 0:
            raise FiberlipError("base sample is empty")
        if not 0 <= self.anchor < len(self.base):
            raise FiberlipError("anchor is not a base index")
        if not self.quotient.is_section(self.base, self.psi):
            raise FiberlipError("psi is not a section of the quotient")

    @property
    def anchor_point(self) -> np.ndarray:
        return self.psi[self.anchor]

    def psi_constant(self) -> float:
        """Intrinsic Lipschitz constant of ``psi`` on ``K``, at least 1."""
        F, secs = linear_fibration(self.quotient, self.base, {"psi": self.psi})
        return max(1.0, min_constant(F, secs["psi"], 1.0))

    def member(self, values, scale: float = 1.0) -> ScaledFamilyMember:
        values = np.asarray(values, dtype=float).reshape(self.psi.shape)
        if not self.quotient.is_section(self.base, values):
            raise FiberlipError("member values are not a section of the quotient")
        return ScaledFamilyMember(values, scale, self.psi, self.anchor)


@dataclass(frozen=True)
class NormResult:
    sup_part: float
    semi_part: float

    @property
    def total(self) -> float:
        return self.sup_part + self.semi_part

    def to_dict(self) -> dict:
        return {"sup_part": self.sup_part, "semi_part": self.semi_part, "total": self.total}


def _check(member, ctx: NormContext):
    if member.scale == 0:
        raise DegenerateScaleError("scale must be nonzero")
    if member.values.shape != ctx.psi.shape:
        raise FiberlipError("section is not defined on every point of the base sample")


def sup_norm(member, ctx: NormContext) -> float:
    """``max_{y in K} |scale * phi(y)|``."""
    if member is ZERO:
        return 0.0
    _check(member, ctx)
    return float(np.max(np.linalg.norm(member.element, axis=1)))


def seminorm_v1(member, ctx: NormContext, path: str = "direct") -> float:
    """``sup_y d(scale * phi(y), (1/scale pi)^{-1}(pi(anchor)))``.

    ``path="direct"`` measures against the dilated fiber; ``path="reduced"``
    uses ``|scale| * sup_y d(phi(y), pi^{-1}(pi(anchor)))``.
    """
    if member is ZERO:
        return 0.0
    _check(member, ctx)
    q, lam = ctx.quotient, member.scale
    target = ctx.base[ctx.anchor]
    if path == "direct":
        return float(np.max(q.fiber_distance(member.element, target, scale=lam)))
    if path == "reduced":
        return abs(lam) * float(np.max(q.fiber_distance(member.values, target)))
    raise ValueError(f"unknown evaluation path {path!r}")


def seminorm_v2(member, ctx: NormContext, path: str = "direct") -> float:
    """``sup_y d(scale * anchor, (1/scale pi)^{-1}(y))``; independent of the
    member's section values."""
    if member is ZERO:
        return 0.0
    _check(member, ctx)
    q, lam = ctx.quotient, member.scale
    x_hat = ctx.psi[ctx.anchor]
    if path == "direct":
        return float(np.max(q.fiber_distance(lam * x_hat[None, :], ctx.base, scale=lam)))
    if path == "reduced":
        return abs(lam) * float(np.max(q.fiber_distance(x_hat[None, :], ctx.base)))
    raise ValueError(f"unknown evaluation path {path!r}")


def norm_v1(member, ctx: NormContext, path: str = "direct") -> NormResult:
    return NormResult(sup_norm(member, ctx), seminorm_v1(member, ctx, path))


def norm_v2(member, ctx: NormContext, path: str = "direct") -> NormResult:
    return NormResult(sup_norm(member, ctx), seminorm_v2(member, ctx, path))


def lemma_homogeneity_check(A, x1, y2, lam: float, tol: float = DEFAULT_TOL) -> dict:
    """Compare ``|lam| d(x1, pi^{-1}(y2))`` with ``d(lam x1, (1/lam pi)^{-1}(y2))``."""
    if lam == 0:
        raise DegenerateScaleError("lambda must be nonzero")
    q = A if isinstance(A, LinearQuotient) else LinearQuotient(A)
    x1 = np.asarray(x1, dtype=float)
    y2 = np.atleast_1d(np.asarray(y2, dtype=float))
    lhs = abs(lam) * float(q.fiber_distance(x1, y2))
    # nearest point of {w : A w = lam y2} to lam x1, then the plain distance
    foot = q.nearest(lam * x1, lam * y2)
    rhs = float(np.linalg.norm(lam * x1 - foot))
    return {"lhs": lhs, "rhs": rhs, "ok": abs(lhs - rhs) <= tol * max(1.0, lhs)}


def lemma_trials(trials: int = 1000, seed: int = 7, max_kappa: int = 6) -> list[dict]:
    """Seeded random instances of :func:`lemma_homogeneity_check`."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(trials):
        kappa = int(rng.integers(1, max_kappa + 1))
        m = int(rng.integers(1, kappa + 1))
        A = rng.normal(size=(m, kappa))
        while np.linalg.matrix_rank(A) < m:
            A = rng.normal(size=(m, kappa))
        lam = 0.0
        while lam == 0.0:
            lam = float(rng.uniform(-10, 10))
        out.append(lemma_homogeneity_check(A, rng.normal(size=kappa) * 5,
                                           rng.normal(size=m) * 5, lam))
    return out


def limit_check(A, base, values, t: float, hs, tol: float = 1e-12) -> dict:
    """Ratios ``d(h phi(t+h), (1/h pi)^{-1}(t)) / h`` and
    ``d(h phi(t), (1/h pi)^{-1}(t+h)) / h`` on a sampled real-interval base.

    ``base`` holds the sampled base values, ``values`` the section there.  Each
    ratio is returned with its bound ``d(phi(t+h), phi(t))``.
    """
    q = A if isinstance(A, LinearQuotient) else LinearQuotient(A)
    base = np.asarray(base, dtype=float).ravel()
    values = np.asarray(values, dtype=float).reshape(len(base), -1)

    def at(s):
        hit = np.flatnonzero(np.abs(base - s) <= tol * max(1.0, abs(s)))
        if len(hit) == 0:
            raise FiberlipError(f"base point {s} outside the sampled base")
        return values[hit[0]]

    phi_t = at(t)
    first, second, bound = [], [], []
    for h in hs:
        if not h > 0:
            raise FiberlipError("h must be positive")
        phi_th = at(t + h)
        first.append(float(q.fiber_distance(h * phi_th, [t], scale=h)) / h)
        second.append(float(q.fiber_distance(h * phi_t, [t + h], scale=h)) / h)
        bound.append(float(np.linalg.norm(phi_th - phi_t)))
    first_a, second_a, bound_a = map(np.array, (first, second, bound))
    return {
        "h": [float(h) for h in hs],
        "first": first,
        "second": second,
        "bound": bound,
        "bounded": bool(np.all(first_a <= bound_a * (1 + 1e-12))
                        and np.all(second_a <= bound_a * (1 + 1e-12))),
        "decreasing": bool(np.all(np.diff(first_a) < 0) and np.all(np.diff(second_a) < 0)),
    }


def parabola_limit_scenario(t: float = 0.0, exponents=range(1, 5)) -> dict:
    """``phi(y) = (y, y^2)`` over the first-coordinate quotient, sampled at
    ``t`` and ``t +- 10^-e``."""
    hs = [10.0 ** -e for e in exponents]
    base = np.array(sorted({t, *(t + h for h in hs)}))
    values = np.stack([base, base ** 2], axis=1)
    out = limit_check([[1.0, 0.0]], base, values, t, hs)
    out["t"] = t
    return out


def asymmetry_demo(resolution: int = 81) -> dict:
    """Distance-to-fiber differences on the three-segment space.

    The difference ``d(p, pi^{-1}(x)) - d(q, pi^{-1}(x))`` is bounded by
    ``d(p, q)``; the roles cannot be swapped, witnessed at the base points
    1, 7, 6 with the image points (1,4), (8,7), (8,6).
    """
    space = three_segment_space(resolution)
    F = space.fibration
    X = F.total
    nx = space.named

    # D[p, x] - D[q, x] <= d(p, q) for every pair of graph points and base label
    phi = space.sections["corrected"].assign
    D = F.fiber_distances(phi)
    d = X.pairwise(phi, phi)
    worst = -np.inf
    for j in range(F.n_base):
        diff = D[:, j][:, None] - D[:, j][None, :] - d
        worst = max(worst, float(diff.max()))
    general_ok = worst <= 1e-12

    fx, fy, fz = nx["f_x"], nx["f_y"], nx["f_z"]
    lhs = F.fiber_distances([fx], [nx["y"]])[0, 0] - F.fiber_distances([fx], [nx["z"]])[0, 0]
    rhs = X.dist(fy, fz)

    # nearest-fiber variant: move f(y), f(z) into the fibers over 7 and 6
    near_y = F.fiber(nx["y"])[np.argmin(X.pairwise([fy], F.fiber(nx["y"]))[0])]
    near_z = F.fiber(nx["z"])[np.argmin(X.pairwise([fz], F.fiber(nx["z"]))[0])]
    return {
        "general_inequality_ok": bool(general_ok),
        "general_worst_excess": worst,
        "n_triples": int(len(phi) ** 2 * F.n_base),
        "violation_lhs": float(lhs),
        "violation_rhs": float(rhs),
        "violated": bool(lhs > rhs),
        "stated_lhs": math.sqrt(5 / 4),
        "recomputed_lhs_closed_form": (math.sqrt(1908) - math.sqrt(1325)) / 7,
        "image_points_on_stated_fibers": {
            "f(y)": bool(F.fiber_of[fy] == nx["y"]),
            "f(z)": bool(F.fiber_of[fz] == nx["z"]),
        },
        "nearest_fiber_variant": {
            "f(y)": X.points[near_y].tolist(),
            "f(z)": X.points[near_z].tolist(),
            "lhs": float(lhs),
            "rhs": X.dist(int(near_y), int(near_z)),
        },
        "seminorm_v2_note": "the second seminorm does not depend on the section values",
        "points": {k: X.points[v].tolist() for k, v in nx.items() if k.startswith("f_")},
    }
