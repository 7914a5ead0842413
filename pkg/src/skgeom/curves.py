"""Curves in R^N: arc length, Frenet apparatus and canal-surface tests.

A :class:`ParametricCurve` wraps a callable ``x -> point``.  Derivatives up
to third order are taken from user supplied callables when present and
otherwise from fourth-order central difference stencils.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize
from scipy.interpolate import PchipInterpolator

from .errors import (
    DegenerateFrameError,
    DomainError,
    SingularParametrizationError,
)

__all__ = [
    "ParametricCurve",
    "FrenetFrame",
    "OsculatingSphere",
    "CanalSurfaceSpec",
    "CanalTestResult",
    "arc_length",
    "reparametrize_by_arc_length",
    "curvature",
    "torsion",
    "frenet",
    "canonical_form",
    "osculating_sphere",
    "canal_self_intersection_test",
    "noise_tube_radius",
    "fd_step",
]

KAPPA_DEGENERATE = 1e-12

# Gauss-Legendre nodes used for panel integration of the speed.
_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def fd_step(x, order=1):
    """Finite-difference step for a derivative of the given order at ``x``."""
    scale = max(1.0, abs(float(x)))
    return (1e-2 if order >= 3 else 1e-3) * scale


def _d_first(f, x, h):
    return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h)


def _d_second(f, x, h):
    return (-f(x + 2 * h) + 16 * f(x + h) - 30 * f(x) + 16 * f(x - h) - f(x - 2 * h)) / (12 * h * h)


def _d_third(f, x, h):
    return (
        -f(x + 3 * h) + 8 * f(x + 2 * h) - 13 * f(x + h)
        + 13 * f(x - h) - 8 * f(x - 2 * h) + f(x - 3 * h)
    ) / (8 * h ** 3)


@dataclass(frozen=True)
class ParametricCurve:
    """A map from an interval of the real line into R^N.

    Parameters
    ----------
    func : callable
        ``func(x) -> array_like`` of shape ``(N,)``.
    domain : tuple of float
        Closed parameter interval ``(x_lo, x_hi)``.
    d1, d2, d3 : callable, optional
        Analytical derivatives.  Missing ones are approximated by central
        differences, preferring to difference the highest analytical
        derivative available.
    """

    func: Callable
    domain: tuple
    d1_func: Optional[Callable] = None
    d2_func: Optional[Callable] = None
    d3_func: Optional[Callable] = None
    dim: int = field(default=0)

    def __post_init__(self):
        lo, hi = (float(v) for v in self.domain)
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise DomainError(f"invalid curve domain {self.domain!r}")
        object.__setattr__(self, "domain", (lo, hi))
        if self.dim == 0:
            p = np.asarray(self.func(0.5 * (lo + hi)), dtype=float)
            object.__setattr__(self, "dim", int(p.size))
        if self.dim < 2:
            raise DomainError("curves must live in R^N with N >= 2")

    def __call__(self, x):
        return self.eval(x)

    def eval(self, x):
        return np.asarray(self.func(float(x)), dtype=float)

    def d1(self, x):
        x = float(x)
        if self.d1_func is not None:
            return np.asarray(self.d1_func(x), dtype=float)
        return _d_first(self.eval, x, fd_step(x, 1))

    def d2(self, x):
        x = float(x)
        if self.d2_func is not None:
            return np.asarray(self.d2_func(x), dtype=float)
        if self.d1_func is not None:
            return _d_first(self.d1, x, fd_step(x, 1))
        return _d_second(self.eval, x, fd_step(x, 2))

    def d3(self, x):
        x = float(x)
        if self.d3_func is not None:
            return np.asarray(self.d3_func(x), dtype=float)
        if self.d2_func is not None:
            return _d_first(self.d2, x, fd_step(x, 1))
        if self.d1_func is not None:
            return _d_second(self.d1, x, fd_step(x, 2))
        return _d_third(self.eval, x, fd_step(x, 3))

    def speed(self, x):
        return float(np.linalg.norm(self.d1(x)))

    def contains(self, x, slack=1e-12):
        lo, hi = self.domain
        span = hi - lo
        return lo - slack * span <= x <= hi + slack * span


@dataclass(frozen=True)
class FrenetFrame:
    """Moving trihedron at a curve point (vectors padded to R^3 when N=2)."""

    t: np.ndarray
    p: np.ndarray
    b: np.ndarray
    kappa: float
    tau: float


class OsculatingSphere(tuple):
    """``(center, radius, circle_fallback)`` triple."""

    __slots__ = ()

    def __new__(cls, center, radius, circle_fallback):
        return super().__new__(cls, (center, radius, circle_fallback))

    center = property(lambda self: self[0])
    radius = property(lambda self: self[1])
    circle_fallback = property(lambda self: self[2])


def _check_interval(curve, x0, x1):
    for x in (x0, x1):
        if not curve.contains(x):
            raise DomainError(f"x={x} outside curve domain {curve.domain}")


def _speed_checked(curve, x):
    s = curve.speed(x)
    if not np.isfinite(s):
        raise DomainError(f"non-finite derivative at x={x}")
    return s


def arc_length(curve: ParametricCurve, x0: float, x1: float) -> float:
    """Length of ``curve`` between parameters ``x0`` and ``x1``.

    Uses adaptive quadrature of the speed.  The result is signed, i.e.
    ``arc_length(c, b, a) == -arc_length(c, a, b)``.
    """
    x0, x1 = float(x0), float(x1)
    _check_interval(curve, x0, x1)
    if x0 == x1:
        return 0.0
    val, _ = integrate.quad(
        lambda x: _speed_checked(curve, x), x0, x1, epsabs=1e-10, epsrel=1e-12, limit=200
    )
    if not np.isfinite(val):
        raise DomainError("arc length integral did not converge")
    return float(val)


def _speed_table(curve, n_table):
    lo, hi = curve.domain
    edges = np.linspace(lo, hi, n_table)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    speeds = np.array([[curve.speed(x) for x in row] for row in nodes])
    if not np.all(np.isfinite(speeds)):
        raise DomainError("non-finite derivative on the curve domain")
    node_speed_max = speeds.max()
    edge_speed = np.array([curve.speed(x) for x in edges])
    if np.min(np.concatenate([speeds.ravel(), edge_speed])) <= 1e-12 * max(node_speed_max, 1e-300):
        raise SingularParametrizationError("curve speed vanishes on its domain")
    panel = (speeds * _GL_W[None, :]).sum(axis=1) * half
    cum = np.concatenate([[0.0], np.cumsum(panel)])
    return edges, cum


def reparametrize_by_arc_length(curve: ParametricCurve, n_table: int = 2048) -> ParametricCurve:
    """Return the unit-speed reparametrization ``y(l) = S(x(l))``.

    The inverse ``x(l)`` comes from a monotone cubic interpolant of a
    cumulative-length table, polished with two Newton steps.  The returned
    curve has analytical first and second derivatives by the chain rule and
    its domain is ``[0, L]``.
    """
    edges, cum = _speed_table(curve, n_table)
    lo, hi = curve.domain
    total = float(cum[-1])
    guess = PchipInterpolator(cum, edges)

    def length_to(x):
        k = int(np.clip(np.searchsorted(edges, x) - 1, 0, len(edges) - 2))
        a = edges[k]
        if x == a:
            return cum[k]
        half = 0.5 * (x - a)
        nodes = a + half + half * _GL_X
        return cum[k] + half * sum(w * curve.speed(t) for w, t in zip(_GL_W, nodes))

    def x_of(ell):
        ell = float(np.clip(ell, 0.0, total))
        x = float(guess(ell))
        for _ in range(2):
            x = float(np.clip(x - (length_to(x) - ell) / curve.speed(x), lo, hi))
        return x

    def y(ell):
        return curve.eval(x_of(ell))

    def y1(ell):
        x = x_of(ell)
        d = curve.d1(x)
        return d / np.linalg.norm(d)

    def y2(ell):
        x = x_of(ell)
        d, dd = curve.d1(x), curve.d2(x)
        v2 = d @ d
        return (dd - (d @ dd) / v2 * d) / v2

    return ParametricCurve(y, (0.0, total), d1_func=y1, d2_func=y2, dim=curve.dim)


def _pad3(v):
    v = np.asarray(v, dtype=float)
    if v.size == 3:
        return v
    if v.size == 2:
        return np.array([v[0], v[1], 0.0])
    return v


def curvature(curve: ParametricCurve, x: float) -> float:
    """Curvature for a general parametrization (valid in any R^N)."""
    d1, d2 = curve.d1(x), curve.d2(x)
    s2 = d1 @ d1
    if s2 <= 0.0:
        raise SingularParametrizationError(f"zero speed at x={x}")
    num = max(s2 * (d2 @ d2) - (d1 @ d2) ** 2, 0.0)
    return float(np.sqrt(num) / s2 ** 1.5)


def torsion(curve: ParametricCurve, x: float) -> float:
    """Torsion of a curve in R^2 or R^3 (zero for plane curves)."""
    if curve.dim > 3:
        raise DomainError("torsion is implemented for N <= 3")
    d1, d2, d3 = (_pad3(curve.d1(x)), _pad3(curve.d2(x)), _pad3(curve.d3(x)))
    c = np.cross(d1, d2)
    cc = c @ c
    if cc <= (KAPPA_DEGENERATE * (d1 @ d1) ** 1.5) ** 2 * (d1 @ d1):
        return 0.0
    return float((c @ d3) / cc)


def frenet(curve: ParametricCurve, x: float) -> FrenetFrame:
    """Frenet frame, curvature and torsion at parameter ``x``.

    Raises
    ------
    DegenerateFrameError
        When the curvature is below ``1e-12``; the curvature value is
        attached to the exception.
    """
    d1, d2 = curve.d1(x), curve.d2(x)
    speed = np.linalg.norm(d1)
    if speed <= 0.0:
        raise SingularParametrizationError(f"zero speed at x={x}")
    kappa = curvature(curve, x)
    if kappa < KAPPA_DEGENERATE:
        raise DegenerateFrameError(f"curvature {kappa:.3g} too small for a frame", kappa)
    t = d1 / speed
    pn = d2 - (d2 @ t) * t
    p = pn / np.linalg.norm(pn)
    t3, p3 = _pad3(t), _pad3(p)
    if t3.size == 3:
        b = np.cross(t3, p3)
        tau = torsion(curve, x)
    else:
        b = np.full_like(t3, np.nan)
        tau = float("nan")
    return FrenetFrame(t=t3, p=p3, b=b, kappa=kappa, tau=tau)


def canonical_form(kappa0: float, tau0: float, ell: float) -> np.ndarray:
    """Leading terms of a curve in its own Frenet frame at arc length ``ell``."""
    return np.array([ell, kappa0 * ell ** 2 / 2.0, kappa0 * tau0 * ell ** 3 / 6.0])


def osculating_sphere(curve: ParametricCurve, x: float, tau_tol: float = 1e-10) -> OsculatingSphere:
    """Centre and radius of the osculating sphere at ``x``.

    With vanishing torsion the osculating circle is returned instead and
    ``circle_fallback`` is set.
    """
    fr = frenet(curve, x)
    s = _pad3(curve.eval(x))
    rho = 1.0 / fr.kappa
    h = fd_step(x, 1)
    dk_dx = _d_first(lambda u: curvature(curve, u), float(x), h)
    rho_dot = -(dk_dx / curve.speed(x)) / fr.kappa ** 2
    if not np.isfinite(fr.tau) or abs(fr.tau) < tau_tol:
        return OsculatingSphere(s + rho * fr.p, rho, True)
    m = rho_dot / fr.tau
    return OsculatingSphere(s + rho * fr.p + m * fr.b, float(np.hypot(rho, m)), False)


@dataclass(frozen=True)
class CanalSurfaceSpec:
    """Tube of constant radius ``r`` around a spine curve."""

    spine: ParametricCurve
    r: float

    def __post_init__(self):
        if not (self.r > 0 and np.isfinite(self.r)):
            raise DomainError("tube radius must be positive")


@dataclass(frozen=True)
class CanalTestResult:
    safe: bool
    worst_margin: float
    min_radius_of_curvature: float
    min_fold_distance: float

    def __bool__(self):
        return self.safe


def _fold_distance(spine, xs, pts, tangents, ell, band):
    """Smallest distance between two distinct folds of the spine.

    A fold pair is a local minimum of the chord length between two spine
    points (orthogonal to the spine at both ends unless an end is a domain
    endpoint) whose arc-length separation exceeds ``band``.
    """
    diff = pts[None, :, :] - pts[:, None, :]
    dist = np.linalg.norm(diff, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        u = diff / dist[..., None]
    ci = np.abs(np.einsum("ik,ijk->ij", tangents, u))
    cj = np.abs(np.einsum("jk,ijk->ij", tangents, u))
    sep = np.abs(ell[None, :] - ell[:, None])
    n = len(xs)
    iu, ju = np.triu_indices(n, 1)
    mask = sep[iu, ju] > band
    iu, ju = iu[mask], ju[mask]
    if iu.size == 0:
        return np.inf
    score = ci[iu, ju] + cj[iu, ju]
    cand = np.argsort(score)[:256]
    lo, hi = spine.domain
    best = np.inf
    seen = []
    for k in cand:
        if score[k] > 0.5:
            break
        i, j = iu[k], ju[k]
        if any(abs(i - a) <= 2 and abs(j - b) <= 2 for a, b in seen):
            continue
        seen.append((i, j))
        if len(seen) > 48:
            break

        def obj(v):
            d = spine.eval(v[1]) - spine.eval(v[0])
            return 0.5 * (d @ d), np.array([-(spine.d1(v[0]) @ d), spine.d1(v[1]) @ d])

        # local minimum of the chord length; it may sit on an endpoint of an open spine
        sol = optimize.minimize(obj, [xs[i], xs[j]], jac=True, method="L-BFGS-B",
                                bounds=[(lo, hi), (lo, hi)],
                                options={"ftol": 1e-15, "gtol": 1e-12, "maxiter": 200})
        a, b = sol.x
        d = spine.eval(b) - spine.eval(a)
        dn = np.linalg.norm(d)
        if dn == 0.0:
            continue
        g = obj((a, b))[1] / (dn * np.array([spine.speed(a), spine.speed(b)]))
        at_end = np.array([a in (lo, hi), b in (lo, hi)])
        ok = np.all((np.abs(g) < 1e-6) | at_end)
        if not ok:
            continue
        if abs(arc_length(spine, a, b)) <= band:
            continue
        best = min(best, dn)
    return best


def canal_self_intersection_test(spec: CanalSurfaceSpec, samples: int = 512) -> CanalTestResult:
    """Check the two non-intersection conditions of a canal surface.

    The tube is safe when the radius of curvature of the spine exceeds
    ``r`` everywhere and any two distinct folds of the spine are at least
    ``2r`` apart.  ``worst_margin`` is the smaller of ``min(rho) - r`` and
    ``min_fold / 2 - r``; it is positive exactly when the tube is safe
    (up to the strict/non-strict boundary case).
    """
    spine, r = spec.spine, float(spec.r)
    lo, hi = spine.domain
    xs = np.linspace(lo, hi, int(samples))
    kap = np.array([curvature(spine, x) for x in xs])
    with np.errstate(divide="ignore"):
        rho = np.where(kap > KAPPA_DEGENERATE, 1.0 / np.maximum(kap, 1e-300), np.inf)
    rho_min = float(np.min(rho))
    pts = np.array([spine.eval(x) for x in xs])
    d1 = np.array([spine.d1(x) for x in xs])
    tangents = d1 / np.linalg.norm(d1, axis=1, keepdims=True)
    speed = np.linalg.norm(d1, axis=1)
    ell = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(xs))])
    fold = float(_fold_distance(spine, xs, pts, tangents, ell, 4.0 * r))
    margin = min(rho_min - r, fold / 2.0 - r)
    safe = bool(rho_min > r and fold >= 2.0 * r)
    return CanalTestResult(safe, float(margin), rho_min, fold)


def noise_tube_radius(sigma_n: float, N: int, b_n: float) -> float:
    """Radius of the noise sphere, ``sqrt((N-1)/N * b_n * sigma_n^2)``."""
    if sigma_n < 0 or N < 2 or b_n <= 0:
        raise DomainError("need sigma_n >= 0, N >= 2 and b_n > 0")
    return float(np.sqrt((N - 1) / N * b_n * sigma_n ** 2))
