"""Extension of partially defined intrinsically Lipschitz graphs as zero sets.

Given a partial graph ``P`` in ``X`` and a level function ``tau: X -> R^s``,
each graph point ``x0`` yields a local function per component ``i``::

    f_x0(x) = 2 (t - a delta(x))   if |t| <= 2 a delta(x)
              t                    if t >  2 a delta(x)
              3 t                  if t < -2 a delta(x)

with ``t = tau_i(x) - tau_i(x0)``, ``a = kL + 1`` and ``delta(x)`` the
``rho``-distance from ``x0`` to the level-set point over ``pi(x)``.  The
extension is ``f_i = max_{x0 in P} f_x0``; it vanishes on ``P`` and is
``2k(Lk+2)``-Lipschitz.

:class:`LevelSetExtension` exposes the construction as a scikit-learn
transformer: ``fit`` takes the partial graph and ``transform`` evaluates
``f``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core_metric import FiberlipError

CHUNK_ENTRIES = 1_000_000  # (sample, graph point) pairs per block


class HypothesisViolated(FiberlipError):
    pass


def level_set_profile(dtau, delta, alpha):
    """Three-branch profile of a local extension; boundary ties take the band branch."""
    dtau = np.asarray(dtau, dtype=float)
    delta = np.asarray(delta, dtype=float)
    band = 2.0 * alpha * delta
    return np.where(
        dtau > band, dtau, np.where(dtau < -band, 3.0 * dtau, 2.0 * (dtau - alpha * delta))
    )


def euclidean_rows(P, Q):
    """Row-wise Euclidean distance ``|P[..] - Q[..]|`` (broadcasting)."""
    return np.linalg.norm(np.asarray(P, dtype=float) - np.asarray(Q, dtype=float), axis=-1)


def extension_constant(k: float, L: float) -> float:
    return 2.0 * k * (L * k + 2.0)


class LevelSetExtension(TransformerMixin, BaseEstimator):
    """Zero-set extension of a partial intrinsically Lipschitz graph.

    Parameters
    ----------
    s : int
        Number of level components; ``tau`` defaults to the last ``s``
        coordinates and ``pi`` to the remaining leading ones.
    k, L : float
        Hypothesis constant of ``rho``/``tau`` and intrinsic Lipschitz
        constant of the partial graph.
    rho_scale : float, optional
        ``rho = rho_scale * d`` when ``rho`` is not given; defaults to ``k``.
    rho, tau, pi, level_section : callable, optional
        ``rho(P, Q)`` row-wise, ``tau(X) -> (n, s)``, ``pi(X) -> (n, m)`` and
        ``level_section(i, tau0, U) -> X-points`` with ``tau0`` of shape
        ``(..., s)`` and ``U`` of shape ``(..., m)``.
    """

    def __init__(self, s=1, k=1.0, L=1.0, rho_scale=None, rho=None, tau=None,
                 pi=None, level_section=None):
        self.s = s
        self.k = k
        self.L = L
        self.rho_scale = rho_scale
        self.rho = rho
        self.tau = tau
        self.pi = pi
        self.level_section = level_section

    # default desk-scenario structure ------------------------------------------

    def _tau(self, X):
        return self.tau(X) if self.tau is not None else X[..., -self.s:]

    def _pi(self, X):
        return self.pi(X) if self.pi is not None else X[..., :-self.s]

    def _rho(self, P, Q):
        if self.rho is not None:
            return self.rho(P, Q)
        c = self.k if self.rho_scale is None else self.rho_scale
        return c * euclidean_rows(P, Q)

    def _level_point(self, i, tau0, U):
        if self.level_section is not None:
            return self.level_section(i, tau0, U)
        # coordinate level sets: the point over U with all levels equal to tau0
        shape = np.broadcast_shapes(U.shape[:-1], tau0.shape[:-1])
        return np.concatenate(
            [np.broadcast_to(U, shape + U.shape[-1:]),
             np.broadcast_to(tau0, shape + (self.s,))], axis=-1)

    # estimator API ------------------------------------------------------------

    def fit(self, X, y=None):
        """Store the partial graph ``X`` (one X-point per row)."""
        if not (self.k >= 1 and self.L >= 1):
            raise FiberlipError("extension needs k >= 1 and L >= 1")
        X = check_array(X, dtype=float)
        if X.shape[0] == 0:
            raise FiberlipError("empty partial graph")
        self.graph_ = X
        self.tau0_ = np.asarray(self._tau(X), dtype=float).reshape(len(X), self.s)
        self.alpha_ = self.k * self.L + 1.0
        self.K_bound_ = extension_constant(self.k, self.L)
        self.n_features_in_ = X.shape[1]
        return self

    def delta(self, i, X):
        """``delta[c, j] = rho(x0_j, level point over pi(X[c]) at tau(x0_j))``."""
        check_is_fitted(self)
        U = np.asarray(self._pi(X), dtype=float)
        pts = self._level_point(i, self.tau0_[None, :, :], U[:, None, :])
        return self._rho(self.graph_[None, :, :], pts)

    def local_values(self, i, X):
        """``out[c, j] = f_{x0_j, i}(X[c])``."""
        X = check_array(X, dtype=float)
        dtau = np.asarray(self._tau(X), dtype=float)[:, None, i] - self.tau0_[None, :, i]
        return level_set_profile(dtau, self.delta(i, X), self.alpha_)

    def transform(self, X):
        """Evaluate ``f = (f_1, ..., f_s)`` at the rows of ``X``."""
        check_is_fitted(self)
        X = check_array(X, dtype=float)
        out = np.empty((len(X), self.s))
        chunk = max(64, CHUNK_ENTRIES // len(self.graph_))
        for start in range(0, len(X), chunk):
            part = X[start:start + chunk]
            for i in range(self.s):
                out[start:start + chunk, i] = self.local_values(i, part).max(axis=1)
        return out


# ---------------------------------------------------------------------------
# problem / result records


@dataclass(eq=False)
class ExtensionProblem:
    """Sampled geodesic space plus the data of the extension hypotheses.

    ``points`` are the X samples (``partial`` rows included), ``grid_shape``
    the axis sizes when the first ``prod(grid_shape)`` rows form a C-ordered
    grid.  ``metric`` measures distances in X row-wise.
    """

    points: np.ndarray
    partial: np.ndarray
    s: int = 1
    k: float = 1.0
    L: float = 1.0
    rho_scale: float | None = None
    grid_shape: tuple | None = None
    partial_base: np.ndarray | None = None
    metric: Callable = euclidean_rows
    rho: Callable | None = None
    tau: Callable | None = None
    pi: Callable | None = None
    level_section: Callable | None = None
    seed: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        return self.k * self.L + 1.0

    @property
    def K_bound(self) -> float:
        return extension_constant(self.k, self.L)

    def estimator(self) -> LevelSetExtension:
        return LevelSetExtension(
            s=self.s, k=self.k, L=self.L, rho_scale=self.rho_scale, rho=self.rho,
            tau=self.tau, pi=self.pi, level_section=self.level_section,
        )


@dataclass
class ExtensionResult:
    f: np.ndarray
    K_bound: float
    measured_lip: float
    component_lip: list
    measured_fiber_lower: float
    zero_set_ok: bool
    containment_error: float
    n_pairs: int
    n_fiber_pairs: int

    def to_dict(self) -> dict:
        return {
            "K_bound": self.K_bound,
            "measured_lip": self.measured_lip,
            "component_lip": list(self.component_lip),
            "fiber_lower": self.measured_fiber_lower,
            "zero_set_ok": self.zero_set_ok,
            "containment_error": self.containment_error,
            "n_pairs": self.n_pairs,
            "n_fiber_pairs": self.n_fiber_pairs,
        }


# ---------------------------------------------------------------------------
# operations


def delta(problem: ExtensionProblem, i: int, x0, x) -> float:
    """``rho(x0, phi_{i, tau(x0)}(pi(x)))``."""
    if not 0 <= i < problem.s:
        raise FiberlipError(f"no level section for component {i}")
    est = problem.estimator().fit(np.atleast_2d(x0))
    return float(est.delta(i, np.atleast_2d(np.asarray(x, dtype=float)))[0, 0])


def local_extension(problem: ExtensionProblem, i: int, x0, x) -> float:
    est = problem.estimator().fit(np.atleast_2d(x0))
    return float(est.local_values(i, np.atleast_2d(np.asarray(x, dtype=float)))[0, 0])


def sample_pairs(problem: ExtensionProblem, n_random: int = 20000):
    """Grid-neighbour pairs plus seeded random pairs, and same-fiber pairs."""
    n = len(problem.points)
    rng = np.random.default_rng(problem.seed)
    pairs = []
    if problem.grid_shape is not None:
        pairs.append(_neighbour_pairs(problem.grid_shape))
    a = rng.integers(0, n, n_random)
    b = rng.integers(0, n, n_random)
    pairs.append(np.stack([a, b], axis=1))
    pairs = np.concatenate(pairs)
    pairs = pairs[pairs[:, 0] != pairs[:, 1]]

    base = np.asarray(problem.estimator()._pi(problem.points))
    _, groups = np.unique(np.round(base, 12), axis=0, return_inverse=True)
    groups = groups.ravel()
    fiber_pairs = []
    if problem.grid_shape is not None:
        nb = _neighbour_pairs(problem.grid_shape)
        fiber_pairs.append(nb[groups[nb[:, 0]] == groups[nb[:, 1]]])
    order = np.argsort(groups, kind="stable")
    starts = np.searchsorted(groups[order], np.arange(groups.max() + 1))
    sizes = np.bincount(groups)
    g = rng.integers(0, len(sizes), n_random)
    keep = sizes[g] > 1
    g = g[keep]
    ia = order[starts[g] + rng.integers(0, sizes[g])]
    ib = order[starts[g] + rng.integers(0, sizes[g])]
    fiber_pairs.append(np.stack([ia, ib], axis=1))
    fiber_pairs = np.concatenate(fiber_pairs)
    fiber_pairs = fiber_pairs[fiber_pairs[:, 0] != fiber_pairs[:, 1]]
    return pairs, fiber_pairs


def _neighbour_pairs(shape) -> np.ndarray:
    """Index pairs of C-ordered grid points one step apart (incl. diagonals)."""
    shape = tuple(int(v) for v in shape)
    idx = np.arange(int(np.prod(shape))).reshape(shape)
    out = []
    for offset in np.ndindex(*(3,) * len(shape)):
        off = np.array(offset) - 1
        # keep one orientation of each unordered pair
        nz = off[np.flatnonzero(off)]
        if len(nz) == 0 or nz[0] < 0:
            continue
        src = tuple(slice(max(0, -o), n - max(0, o)) for o, n in zip(off, shape))
        dst = tuple(slice(max(0, o), n - max(0, -o)) for o, n in zip(off, shape))
        out.append(np.stack([idx[src].ravel(), idx[dst].ravel()], axis=1))
    return np.concatenate(out)


def global_extension(problem: ExtensionProblem, n_random: int = 20000) -> ExtensionResult:
    """Build ``f`` on every sample and measure its constants."""
    if len(problem.partial) == 0:
        raise FiberlipError("empty partial graph")
    est = problem.estimator().fit(problem.partial)
    f = est.transform(problem.points)
    on_graph = est.transform(problem.partial)
    containment_error = float(np.max(np.abs(on_graph)))

    pairs, fiber_pairs = sample_pairs(problem, n_random)
    P = problem.points
    # repeated samples (a partial point that is also a grid point) carry no ratio
    pairs = pairs[problem.metric(P[pairs[:, 0]], P[pairs[:, 1]]) > 0]
    fiber_pairs = fiber_pairs[problem.metric(P[fiber_pairs[:, 0]], P[fiber_pairs[:, 1]]) > 0]
    d = problem.metric(P[pairs[:, 0]], P[pairs[:, 1]])
    df = np.abs(f[pairs[:, 0]] - f[pairs[:, 1]])
    component_lip = [float(np.max(df[:, i] / d)) for i in range(problem.s)]
    measured_lip = float(np.max(df.max(axis=1) / d))

    dfib = problem.metric(P[fiber_pairs[:, 0]], P[fiber_pairs[:, 1]])
    dff = np.abs(f[fiber_pairs[:, 0]] - f[fiber_pairs[:, 1]]).max(axis=1)
    fiber_lower = float(np.min(dff / dfib)) if len(dfib) else float("nan")

    return ExtensionResult(
        f=f,
        K_bound=problem.K_bound,
        measured_lip=measured_lip,
        component_lip=component_lip,
        measured_fiber_lower=fiber_lower,
        zero_set_ok=containment_error <= 1e-12,
        containment_error=containment_error,
        n_pairs=len(pairs),
        n_fiber_pairs=len(fiber_pairs),
    )


@dataclass
class VerificationReport:
    lip_ok: bool
    component_lip_ok: list
    containment_ok: bool
    fiber_lower_ok: bool
    fiber_lower_reference: float
    eps_grid: float
    details: dict

    @property
    def ok(self) -> bool:
        return self.lip_ok and self.containment_ok and self.fiber_lower_ok

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "lip_ok": self.lip_ok,
            "component_lip_ok": self.component_lip_ok,
            "containment_ok": self.containment_ok,
            "fiber_lower_ok": self.fiber_lower_ok,
            "fiber_lower_reference": self.fiber_lower_reference,
            "eps_grid": self.eps_grid,
            **self.details,
        }


def verify_extension(problem: ExtensionProblem, result: ExtensionResult,
                     eps_grid: float = 0.05, zero_tol: float = 1e-12) -> VerificationReport:
    """Compare measured constants with ``K = 2k(Lk+2)``.

    Per-component bounds are the asserted ones; the joint sup-norm constant
    is reported alongside.
    """
    limit = result.K_bound * (1.0 + eps_grid)
    comp_ok = [c <= limit for c in result.component_lip]
    upper = max(result.measured_lip, np.finfo(float).tiny)
    return VerificationReport(
        lip_ok=all(comp_ok),
        component_lip_ok=comp_ok,
        containment_ok=result.containment_error <= zero_tol,
        fiber_lower_ok=bool(result.measured_fiber_lower > 0),
        fiber_lower_reference=1.0 / upper,
        eps_grid=eps_grid,
        details={
            "K_bound": result.K_bound,
            "measured_lip": result.measured_lip,
            "component_lip": result.component_lip,
            "joint_within_bound": result.measured_lip <= limit,
            "fiber_lower": result.measured_fiber_lower,
            "containment_error": result.containment_error,
        },
    )
