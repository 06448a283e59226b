"""Intrinsic Hölder / Lipschitz conditions for sections of a fibration.

For a section ``phi`` with graph points ``x_y = phi(y)`` the basic quantities
are the pair matrices

    d[i, j] = d(phi(y_i), phi(y_j))
    D[i, j] = d(phi(y_i), pi^{-1}(y_j))

and the intrinsic ``(L, alpha)`` condition reads ``d <= L D^alpha + D``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core_metric import (
    DEFAULT_TOL,
    Fibration,
    FiberlipError,
    LinearQuotient,
    Section,
    linear_fibration,
    require_section,
)


@dataclass(frozen=True)
class HoelderParams:
    L: float
    alpha: float = 1.0

    def __post_init__(self):
        if not self.L > 0:
            raise FiberlipError(f"L must be positive, got {self.L}")
        if not 0 < self.alpha <= 1:
            raise FiberlipError(f"alpha must lie in (0, 1], got {self.alpha}")


@dataclass(frozen=True)
class HoelderCertificate:
    holds: bool
    witness: tuple[int, int] | None
    slack: float

    def to_dict(self, base_ids=None) -> dict:
        w = self.witness
        if w is not None and base_ids is not None:
            w = (base_ids[w[0]], base_ids[w[1]])
        return {"holds": self.holds, "witness": None if w is None else list(w),
                "slack": self.slack}


@dataclass(frozen=True)
class ConeSpec:
    """Intrinsic cone with vertex ``vertex`` (plain) or anchored at
    ``anchor`` relative to the section ``psi`` (``kind="wrt_psi"``)."""

    vertex: int
    L: float
    alpha: float = 1.0
    kind: str = "plain"
    psi: Section | None = None
    anchor: int | None = None

    def __post_init__(self):
        HoelderParams(self.L, self.alpha)
        if self.kind not in ("plain", "wrt_psi"):
            raise FiberlipError(f"unknown cone kind {self.kind!r}")
        if self.kind == "wrt_psi":
            if self.psi is None or self.anchor is None:
                raise FiberlipError("wrt_psi cones need psi and anchor")
            if self.anchor not in set(self.psi.assign.tolist()):
                raise FiberlipError("cone anchor is not on the graph of psi")


def _params(params) -> HoelderParams:
    if isinstance(params, HoelderParams):
        return params
    return HoelderParams(*params)


def graph_pair_matrices(F: Fibration, phi: Section) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(d, D)`` over ordered base pairs for the graph of ``phi``."""
    idx = phi.assign
    return F.total.pairwise(idx, idx), F.fiber_distances(idx)


def _certificate(lhs: np.ndarray, rhs: np.ndarray, mask: np.ndarray, tol: float,
                 ) -> HoelderCertificate:
    if not np.any(mask):
        return HoelderCertificate(True, None, 0.0)
    excess = np.where(mask, lhs - rhs, -np.inf)
    worst = float(np.max(excess))
    violating = excess > tol * np.maximum(1.0, np.abs(lhs))
    if not np.any(violating):
        return HoelderCertificate(True, None, worst)
    # argmax returns the first maximum, i.e. the lexicographically smallest pair
    flat = int(np.argmax(np.where(violating, excess, -np.inf)))
    witness = tuple(int(v) for v in np.unravel_index(flat, excess.shape))
    return HoelderCertificate(False, witness, worst)


def check_intrinsic_hoelder(F: Fibration, phi, params, tol: float = 0.0
                            ) -> HoelderCertificate:
    """Certify ``d(phi(y1), phi(y2)) <= L D^alpha + D`` on all ordered pairs.

    The witness is the worst pair ``(y1, y2)`` as base indices.  ``tol`` is a
    relative slack shared with :func:`cone_membership`.
    """
    phi = require_section(F, phi)
    p = _params(params)
    d, D = graph_pair_matrices(F, phi)
    off = ~np.eye(F.n_base, dtype=bool)
    return _certificate(d, p.L * D ** p.alpha + D, off, tol)


def _pair_ratios(F: Fibration, phi: Section, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    d, D = graph_pair_matrices(F, phi)
    off = ~np.eye(F.n_base, dtype=bool)
    if np.any(D[off] <= 0):
        raise RuntimeError("vanishing fiber distance between distinct fibers")
    return d[off], D[off]


def min_constant(F: Fibration, phi, alpha: float = 1.0) -> float:
    """Least ``L >= 0`` for which the intrinsic ``(L, alpha)`` condition holds."""
    phi = require_section(F, phi)
    HoelderParams(1.0, alpha)
    if F.n_base < 2:
        return 0.0
    d, D = _pair_ratios(F, phi, alpha)
    return float(max(0.0, np.max((d - D) / D ** alpha)))


def cone_membership(F: Fibration, cone: ConeSpec, x, tol: float = 0.0):
    """Whether ``x`` (a point index or array of indices) lies in the cone.

    plain:   ``L d(x, pi^{-1}(pi(v)))^alpha + d(x, pi^{-1}(pi(v))) < d(x, v)``
    wrt_psi: ``d(x, psi(pi(x))) > L d(a, psi(pi(x)))^alpha + d(a, psi(pi(x)))``
    """
    xs = np.atleast_1d(np.asarray(x, dtype=int))
    if cone.kind == "plain":
        v = cone.vertex
        D = F.fiber_distances(xs, [F.fiber_of[v]])[:, 0]
        lhs = F.total.pairwise(xs, [v])[:, 0]
    else:
        foot = cone.psi.assign[F.fiber_of[xs]]
        lhs = np.array([F.total.dist(int(a), int(b)) for a, b in zip(xs, foot)])
        D = F.total.pairwise([cone.anchor], foot)[0]
    rhs = cone.L * D ** cone.alpha + D
    member = lhs - rhs > tol * np.maximum(1.0, np.abs(lhs))
    return bool(member[0]) if np.ndim(x) == 0 else member


def graph_cone_violations(F: Fibration, phi, params, tol: float = 0.0
                          ) -> list[tuple[int, int]]:
    """Graph points inside graph-vertex cones, as ``(vertex_y, point_y)``."""
    phi = require_section(F, phi)
    p = _params(params)
    hits = []
    for yv in range(F.n_base):
        cone = ConeSpec(int(phi.assign[yv]), p.L, p.alpha)
        inside = cone_membership(F, cone, phi.assign, tol=tol)
        hits.extend((yv, int(yp)) for yp in np.flatnonzero(inside))
    return hits


def check_graph_avoids_cones(F: Fibration, phi, params, tol: float = 0.0) -> bool:
    return not graph_cone_violations(F, phi, params, tol=tol)


def _anchor_base(F: Fibration, phi: Section, psi: Section, anchor: int) -> int:
    y_hat = int(F.fiber_of[anchor])
    if phi.assign[y_hat] != anchor or psi.assign[y_hat] != anchor:
        raise FiberlipError("anchor not shared by phi and psi")
    return y_hat


def _wrt_terms(F: Fibration, phi: Section, psi: Section, anchor: int):
    y_hat = _anchor_base(F, phi, psi, anchor)
    lhs = np.array([F.total.dist(int(a), int(b)) for a, b in zip(phi.assign, psi.assign)])
    D = F.total.pairwise([anchor], psi.assign)[0]
    return y_hat, lhs, D


def check_hoelder_wrt(F: Fibration, phi, psi, anchor: int, params, tol: float = 0.0
                      ) -> HoelderCertificate:
    """Certify ``d(phi(y), psi(y)) <= L d(a, psi(y))^alpha + d(a, psi(y))``.

    ``anchor`` is the X index of the shared graph point; witnesses are
    ``(y_hat, y)``.
    """
    phi = require_section(F, phi)
    psi = require_section(F, psi)
    p = _params(params)
    y_hat, lhs, D = _wrt_terms(F, phi, psi, anchor)
    cert = _certificate(lhs[None, :], (p.L * D ** p.alpha + D)[None, :],
                        np.ones((1, F.n_base), dtype=bool), tol)
    if cert.witness is not None:
        cert = HoelderCertificate(False, (y_hat, cert.witness[1]), cert.slack)
    return cert


def min_constant_wrt(F: Fibration, phi, psi, anchor: int, alpha: float = 1.0) -> float:
    phi = require_section(F, phi)
    psi = require_section(F, psi)
    y_hat, lhs, D = _wrt_terms(F, phi, psi, anchor)
    keep = np.arange(F.n_base) != y_hat
    if not np.any(keep):
        return 0.0
    return float(max(0.0, np.max((lhs[keep] - D[keep]) / D[keep] ** alpha)))


def check_equivalence_bounded(F: Fibration, phi, alpha: float = 1.0,
                              tol: float = DEFAULT_TOL) -> dict:
    """Minimal constants of the additive form ``L D^a + D`` and the pure
    power form ``K D^a``, with the ordering ``L <= K <= L + diam^(1-a)``.

    ``diam`` is the largest fiber distance between distinct graph fibers.
    """
    phi = require_section(F, phi)
    if F.n_base < 2:
        return {"L_form": 0.0, "K_form": 0.0, "diam": 0.0, "bound_ok": True}
    d, D = _pair_ratios(F, phi, alpha)
    L_form = float(max(0.0, np.max((d - D) / D ** alpha)))
    K_form = float(np.max(d / D ** alpha))
    diam = float(np.max(D))
    bound_ok = (L_form <= K_form + tol) and (K_form <= L_form + diam ** (1 - alpha) + tol)
    return {"L_form": L_form, "K_form": K_form, "diam": diam, "bound_ok": bool(bound_ok)}


def check_foliated_equivalence(F: Fibration, phi, foliation: dict, params1, params2
                               ) -> dict:
    """Evaluate both sides of the foliated characterization at given constants.

    ``foliation`` maps each graph point index ``x`` to a section through ``x``.
    """
    phi = require_section(F, phi)
    missing = [int(x) for x in phi.assign if int(x) not in foliation]
    if missing:
        raise FiberlipError(f"foliation misses graph points {missing[:5]}")
    dir12 = all(
        check_hoelder_wrt(F, phi, foliation[int(x)], int(x), params1).holds
        for x in phi.assign
    )
    dir21 = check_intrinsic_hoelder(F, phi, params2).holds
    return {"dir12": bool(dir12), "dir21": bool(dir21)}


# ---------------------------------------------------------------------------
# scaled families over linear quotients


class DegenerateScaleError(FiberlipError):
    pass


@dataclass(frozen=True, eq=False)
class ScaledFamilyMember:
    """The element ``scale * values`` of the family attached to ``(psi, anchor)``.

    ``values`` is a section of the unscaled quotient (one row per base point),
    so the element itself is a section of ``(1/scale) * pi`` that meets
    ``scale * psi`` at ``scale * psi(anchor)``.  ``anchor`` is a base index.
    """

    values: np.ndarray
    scale: float
    base_values: np.ndarray
    anchor: int

    def __post_init__(self):
        if self.scale == 0:
            raise DegenerateScaleError("scale must be nonzero")
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))
        object.__setattr__(self, "base_values", np.asarray(self.base_values, dtype=float))
        if not np.allclose(self.values[self.anchor], self.base_values[self.anchor],
                           rtol=0, atol=DEFAULT_TOL):
            raise FiberlipError("anchor not shared by the member and its base section")
        # remove rounding drift so the anchor is the same X point in both graphs
        values = self.values.copy()
        values[self.anchor] = self.base_values[self.anchor]
        object.__setattr__(self, "values", values)

    @property
    def element(self) -> np.ndarray:
        return self.scale * self.values

    def scaled(self, delta: float):
        """``delta * member``; returns the zero sentinel for ``delta == 0``."""
        if delta == 0:
            return ZERO
        return ScaledFamilyMember(self.values, delta * self.scale, self.base_values, self.anchor)

    def __add__(self, other):
        if other is ZERO:
            return self
        if other.anchor != self.anchor or not np.array_equal(other.base_values, self.base_values):
            raise FiberlipError("members belong to different families")
        lam = self.scale + other.scale
        if lam == 0:
            raise DegenerateScaleError("degenerate scale: scales sum to zero")
        values = (self.element + other.element) / lam
        return ScaledFamilyMember(values, lam, self.base_values, self.anchor)

    def __radd__(self, other):
        return self.__add__(other)


class _Zero:
    """The zero element adjoined to the union of scaled families."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def scaled(self, delta):
        return self

    def __add__(self, other):
        return other

    __radd__ = __add__

    def __repr__(self):
        return "ZERO"


ZERO = _Zero()


def member_fibration(quotient: LinearQuotient, base, member: ScaledFamilyMember):
    """Fibration of ``(1/scale) * pi`` sampled on the element and ``scale * psi``."""
    lam = member.scale
    base = np.asarray(base, dtype=float).reshape(len(member.values), -1)
    return linear_fibration(
        quotient, lam * base, {"phi": member.element, "psi": lam * member.base_values}
    )


def member_constant(quotient: LinearQuotient, base, member: ScaledFamilyMember,
                    alpha: float = 1.0) -> float:
    """Least ``L`` making the element Hölder w.r.t. ``scale * psi`` at the anchor."""
    F, secs = member_fibration(quotient, base, member)
    anchor_pt = secs["psi"][member.anchor]
    return min_constant_wrt(F, secs["phi"], secs["psi"], anchor_pt, alpha)


def check_vector_space_closure(members, quotient: LinearQuotient, base,
                               alpha: float = 1.0, delta: float = -1.0) -> dict:
    """Sum two members, certify the sum in the family at the summed scale, and
    check that ``delta * member`` stays in the family at the scaled scale."""
    m1, m2 = members
    total = m1 + m2  # raises DegenerateScaleError when scales cancel
    base = np.asarray(base, dtype=float).reshape(len(m1.values), -1)
    on_scaled = quotient.is_section(base, total.element, scale=total.scale)
    sum_constant = member_constant(quotient, base, total, alpha)
    F, secs = member_fibration(quotient, base, total)
    cert = check_hoelder_wrt(F, secs["phi"], secs["psi"], secs["psi"][total.anchor],
                             (sum_constant + DEFAULT_TOL, alpha))
    sm = m1.scaled(delta)
    scalar_ok = (
        sm is ZERO
        or (quotient.is_section(base, sm.element, scale=sm.scale)
            and np.isfinite(member_constant(quotient, base, sm, alpha)))
    )
    return {
        "sum_member": total,
        "sum_constant": sum_constant,
        "sum_certified": bool(on_scaled and cert.holds and np.isfinite(sum_constant)),
        "scalar_ok": bool(scalar_ok),
    }
