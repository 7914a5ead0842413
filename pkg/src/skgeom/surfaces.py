"""Parametric surfaces: fundamental forms, curvature and classification.

Surfaces are maps ``S(u1, u2)`` into R^N.  The metric part of the theory
works for any N; second fundamental form and curvature need N = 3.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .curves import ParametricCurve
from .errors import (
    AllowableTransformError,
    DomainError,
    InternalInconsistencyError,
    SingularPointError,
    UnsupportedCodimensionError,
)

__all__ = [
    "ParametricSurface",
    "FundamentalForms",
    "CurvatureReport",
    "ClassificationReport",
    "metric_tensor",
    "second_fundamental_form",
    "unit_normal",
    "principal_curvatures",
    "normal_curvature",
    "christoffel_symbols",
    "christoffel_from_metric",
    "geodesic_curvature_of_coordinate_curves",
    "classify_surface",
    "ruled_developable_test",
    "weingarten_residual",
    "gauss_formula_residual",
    "covariant_metric_transform",
    "is_conformal",
    "plane",
    "sphere",
    "cylinder",
]


def _h(u, rel=1e-4):
    return rel * max(1.0, abs(float(u)))


def _diff(f, u, h):
    return (-f(u + 2 * h) + 8 * f(u + h) - 8 * f(u - h) + f(u - 2 * h)) / (12 * h)


def _diff2(f, u, h):
    return (-f(u + 2 * h) + 16 * f(u + h) - 30 * f(u) + 16 * f(u - h) - f(u - 2 * h)) / (12 * h * h)


@dataclass(frozen=True)
class ParametricSurface:
    """A map from a rectangle of the (u1, u2) plane into R^N.

    Parameters
    ----------
    func : callable
        ``func(u1, u2) -> array`` of shape ``(N,)``.
    domain : ((lo1, hi1), (lo2, hi2))
    jac : callable, optional
        ``jac(u1, u2) -> (S_1, S_2)``, the first partials.
    hess : callable, optional
        ``hess(u1, u2) -> (S_11, S_12, S_22)``.
    """

    func: Callable
    domain: tuple
    jac: Optional[Callable] = None
    hess: Optional[Callable] = None
    dim: int = field(default=0)
    name: str = ""

    def __post_init__(self):
        (a, b), (c, d) = self.domain
        dom = ((float(a), float(b)), (float(c), float(d)))
        if not (dom[0][1] > dom[0][0] and dom[1][1] > dom[1][0]):
            raise DomainError(f"degenerate surface domain {self.domain!r}")
        object.__setattr__(self, "domain", dom)
        if self.dim == 0:
            p = np.asarray(self.func(0.5 * (a + b), 0.5 * (c + d)), dtype=float)
            object.__setattr__(self, "dim", int(p.size))

    def __call__(self, u1, u2):
        return self.eval(u1, u2)

    def eval(self, u1, u2):
        return np.asarray(self.func(float(u1), float(u2)), dtype=float)

    def partials(self, u1, u2):
        """First partial derivatives ``(S_1, S_2)``."""
        u1, u2 = float(u1), float(u2)
        if self.jac is not None:
            s1, s2 = self.jac(u1, u2)
            return np.asarray(s1, dtype=float), np.asarray(s2, dtype=float)
        s1 = _diff(lambda t: self.eval(t, u2), u1, _h(u1))
        s2 = _diff(lambda t: self.eval(u1, t), u2, _h(u2))
        return s1, s2

    def second_partials(self, u1, u2):
        """Second partial derivatives ``(S_11, S_12, S_22)``."""
        u1, u2 = float(u1), float(u2)
        if self.hess is not None:
            return tuple(np.asarray(v, dtype=float) for v in self.hess(u1, u2))
        if self.jac is not None:
            s11 = _diff(lambda t: self.partials(t, u2)[0], u1, _h(u1))
            s12 = _diff(lambda t: self.partials(u1, t)[0], u2, _h(u2))
            s22 = _diff(lambda t: self.partials(u1, t)[1], u2, _h(u2))
            return s11, s12, s22
        s11 = _diff2(lambda t: self.eval(t, u2), u1, _h(u1, 1e-3))
        s22 = _diff2(lambda t: self.eval(u1, t), u2, _h(u2, 1e-3))
        s12 = _diff(lambda t: _diff(lambda s: self.eval(s, t), u1, _h(u1, 1e-3)), u2, _h(u2, 1e-3))
        return s11, s12, s22

    def grid(self, n=16):
        """Cell-centre sample points of an ``n x n`` grid on the domain."""
        (a, b), (c, d) = self.domain
        e1 = np.linspace(a, b, n + 1)
        e2 = np.linspace(c, d, n + 1)
        c1 = 0.5 * (e1[1:] + e1[:-1])
        c2 = 0.5 * (e2[1:] + e2[:-1])
        return [(x, y) for x in c1 for y in c2]


@dataclass(frozen=True)
class FundamentalForms:
    """Metric ``G`` and (for N = 3) second fundamental form ``B`` at a point."""

    G: np.ndarray
    B: Optional[np.ndarray] = None

    @property
    def g11(self):
        return float(self.G[0, 0])

    @property
    def g12(self):
        return float(self.G[0, 1])

    @property
    def g22(self):
        return float(self.G[1, 1])

    @property
    def g(self):
        return float(self.G[0, 0] * self.G[1, 1] - self.G[0, 1] ** 2)

    @property
    def ginv(self):
        g = self.g
        return np.array([[self.G[1, 1], -self.G[0, 1]], [-self.G[0, 1], self.G[0, 0]]]) / g

    def _bpart(self):
        if self.B is None:
            raise UnsupportedCodimensionError("second fundamental form not available")
        return self.B

    @property
    def b11(self):
        return float(self._bpart()[0, 0])

    @property
    def b12(self):
        return float(self._bpart()[0, 1])

    @property
    def b22(self):
        return float(self._bpart()[1, 1])

    @property
    def b(self):
        B = self._bpart()
        return float(B[0, 0] * B[1, 1] - B[0, 1] ** 2)


@dataclass(frozen=True)
class CurvatureReport:
    kappa1: float
    kappa2: float
    K: float
    H: float
    principal_dirs: tuple
    is_umbilic: bool


@dataclass(frozen=True)
class ClassificationReport:
    developable: bool
    minimal: bool
    coords_are_LoC: bool
    coords_are_geodesic: bool
    max_violation: dict
    n_points: int


def _metric_from_partials(s1, s2):
    G = np.array([[s1 @ s1, s1 @ s2], [s1 @ s2, s2 @ s2]])
    g = G[0, 0] * G[1, 1] - G[0, 1] ** 2
    if not np.all(np.isfinite(G)) or g <= 1e-20 * max(G[0, 0] * G[1, 1], 1e-300):
        raise SingularPointError("Jacobian has rank < 2 at this point")
    return G


def metric_tensor(surface: ParametricSurface, u) -> FundamentalForms:
    """First fundamental form ``G = J^T J`` at ``u``."""
    s1, s2 = surface.partials(*u)
    return FundamentalForms(G=_metric_from_partials(s1, s2))


def unit_normal(surface: ParametricSurface, u) -> np.ndarray:
    """``n = S_1 x S_2 / |S_1 x S_2|``."""
    if surface.dim != 3:
        raise UnsupportedCodimensionError("unit normal needs a surface in R^3")
    s1, s2 = surface.partials(*u)
    c = np.cross(s1, s2)
    nc = np.linalg.norm(c)
    if nc <= 1e-10 * max(np.linalg.norm(s1) * np.linalg.norm(s2), 1e-300):
        raise SingularPointError("Jacobian has rank < 2 at this point")
    return c / nc


def second_fundamental_form(surface: ParametricSurface, u) -> FundamentalForms:
    """Both fundamental forms at ``u``; ``b_ab = n . S_ab``."""
    if surface.dim != 3:
        raise UnsupportedCodimensionError("second fundamental form needs N = 3")
    s1, s2 = surface.partials(*u)
    G = _metric_from_partials(s1, s2)
    n = np.cross(s1, s2)
    n /= np.linalg.norm(n)
    s11, s12, s22 = surface.second_partials(*u)
    B = np.array([[n @ s11, n @ s12], [n @ s12, n @ s22]])
    return FundamentalForms(G=G, B=B)


def _null_direction(M):
    r1 = np.array([M[0, 1], -M[0, 0]])
    r2 = np.array([M[1, 1], -M[1, 0]])
    d = r1 if np.linalg.norm(r1) >= np.linalg.norm(r2) else r2
    if np.linalg.norm(d) == 0.0:
        return None
    return d


def _metric_unit(d, G):
    return d / np.sqrt(d @ G @ d)


def principal_curvatures(forms: FundamentalForms) -> CurvatureReport:
    """Principal, Gaussian and mean curvature from the fundamental forms.

    ``kappa1`` is the root of larger magnitude.  Directions are returned in
    parameter space, normalized to unit length in the metric.
    """
    G, B = forms.G, forms._bpart()
    ginv = forms.ginv
    H = 0.5 * float(np.sum(B * ginv))
    K = forms.b / forms.g
    disc = H * H - K
    scale = H * H + abs(K)
    if disc < 0:
        if disc < -1e-12 * max(scale, 1e-300) and disc < -1e-12:
            raise InternalInconsistencyError(f"negative discriminant {disc:.3g}")
        disc = 0.0
    root = np.sqrt(disc)
    ka, kb = H + root, H - root
    k1, k2 = (ka, kb) if abs(ka) >= abs(kb) else (kb, ka)
    # judged on the discriminant, since its square root amplifies rounding
    umbilic = disc <= 1e-12 * scale
    e1 = _metric_unit(np.array([1.0, 0.0]), G)
    e2 = np.array([-G[0, 1], G[0, 0]])
    e2 = _metric_unit(e2, G)
    if umbilic:
        dirs = (e1, e2)
    else:
        d1 = _null_direction(B - k1 * G)
        d1 = e1 if d1 is None else _metric_unit(d1, G)
        # second direction: metric-orthogonal complement of the first
        d2 = np.array([-(G[0, 1] * d1[0] + G[1, 1] * d1[1]), G[0, 0] * d1[0] + G[0, 1] * d1[1]])
        d2 = _metric_unit(d2, G)
        dirs = (d1, d2)
    return CurvatureReport(float(k1), float(k2), float(K), float(H), dirs, bool(umbilic))


def normal_curvature(forms: FundamentalForms, direction) -> float:
    """Normal curvature ``b(d, d) / g(d, d)`` in parameter direction ``d``."""
    d = np.asarray(direction, dtype=float)
    if not np.any(d):
        raise DomainError("direction must be non-zero")
    return float(d @ forms._bpart() @ d / (d @ forms.G @ d))


def _second_kind(first, ginv):
    # first[a, b, l] = Gamma_{ab l}; result[c, a, b] = g^{c l} Gamma_{ab l}
    return np.einsum("cl,abl->cab", ginv, first)


def christoffel_symbols(surface: ParametricSurface, u) -> np.ndarray:
    """Christoffel symbols of the second kind, indexed ``[gamma, alpha, beta]``.

    Computed from the embedding as ``Gamma_{ab l} = S_ab . S_l``.
    """
    s1, s2 = surface.partials(*u)
    G = _metric_from_partials(s1, s2)
    s11, s12, s22 = surface.second_partials(*u)
    S = (s1, s2)
    Sab = ((s11, s12), (s12, s22))
    first = np.array([[[Sab[a][b] @ S[l] for l in range(2)] for b in range(2)] for a in range(2)])
    return _second_kind(first, FundamentalForms(G).ginv)


def christoffel_from_metric(metric: Callable, u, h: float = 1e-5) -> np.ndarray:
    """Christoffel symbols from a metric callback ``metric(u1, u2) -> 2x2``.

    Only the metric is used; derivatives are central differences with step
    ``h``.
    """
    u1, u2 = float(u[0]), float(u[1])
    G = np.asarray(metric(u1, u2), dtype=float)
    dG = np.array([
        (np.asarray(metric(u1 + h, u2)) - np.asarray(metric(u1 - h, u2))) / (2 * h),
        (np.asarray(metric(u1, u2 + h)) - np.asarray(metric(u1, u2 - h))) / (2 * h),
    ])  # dG[k, i, j] = d g_ij / d u^k
    first = np.empty((2, 2, 2))
    for a in range(2):
        for b in range(2):
            for l in range(2):
                first[a, b, l] = 0.5 * (dG[a, b, l] + dG[b, l, a] - dG[l, a, b])
    g = G[0, 0] * G[1, 1] - G[0, 1] ** 2
    if g <= 0:
        raise SingularPointError("metric is not positive definite")
    return _second_kind(first, FundamentalForms(G).ginv)


def geodesic_curvature_of_coordinate_curves(surface: ParametricSurface, u):
    """Geodesic curvature of the u1- and u2-coordinate curves through ``u``."""
    forms = metric_tensor(surface, u)
    gam = christoffel_symbols(surface, u)
    rg = np.sqrt(forms.g)
    kg1 = gam[1, 0, 0] * rg / forms.g11 ** 1.5
    kg2 = -gam[0, 1, 1] * rg / forms.g22 ** 1.5
    return float(kg1), float(kg2)


def classify_surface(surface: ParametricSurface, grid=16, tol: float = 1e-6) -> ClassificationReport:
    """Evaluate the developable, minimal, LoC and geodesic predicates.

    Each predicate must hold at every cell centre of a ``grid x grid``
    sampling; the tolerance is ``tol * (1 + |kappa1|)`` (squared for the
    Gaussian curvature).  ``max_violation`` holds the worst normalized ratio
    per predicate, so values below one mean the predicate holds.
    """
    if isinstance(grid, int):
        if grid < 8:
            raise DomainError("classification grid must be at least 8x8")
        pts = surface.grid(grid)
    else:
        pts = list(grid)
    worst = {"developable": 0.0, "minimal": 0.0, "coords_are_LoC": 0.0, "coords_are_geodesic": 0.0}
    for u in pts:
        forms = second_fundamental_form(surface, u)
        rep = principal_curvatures(forms)
        s = 1.0 + abs(rep.kappa1)
        t = tol * s
        worst["developable"] = max(worst["developable"], abs(rep.K) / (tol * s * s))
        worst["minimal"] = max(worst["minimal"], abs(rep.H) / t)
        sq = np.sqrt(forms.g11 * forms.g22)
        loc = max(abs(forms.g12) / sq / tol, abs(forms.b12) / sq / t)
        worst["coords_are_LoC"] = max(worst["coords_are_LoC"], loc)
        kg1, kg2 = geodesic_curvature_of_coordinate_curves(surface, u)
        worst["coords_are_geodesic"] = max(worst["coords_are_geodesic"], max(abs(kg1), abs(kg2)) / t)
    flags = {k: bool(v < 1.0) for k, v in worst.items()}
    return ClassificationReport(max_violation=worst, n_points=len(pts), **flags)


def ruled_developable_test(indicatrix: ParametricCurve, generator: ParametricCurve,
                           samples: int = 64, tol: float = 1e-8) -> bool:
    """Developability test ``|y' z z'| = 0`` for the ruled surface ``y + v z``."""
    lo = max(indicatrix.domain[0], generator.domain[0])
    hi = min(indicatrix.domain[1], generator.domain[1])
    if hi <= lo:
        raise DomainError("curves share no parameter interval")
    for s in np.linspace(lo, hi, samples):
        z = generator.eval(s)
        if abs(np.linalg.norm(z) - 1.0) > 1e-6:
            raise DomainError("generator must have unit length")
        yd, zd = indicatrix.d1(s), generator.d1(s)
        det = np.linalg.det(np.array([yd, z, zd]))
        scale = max(1.0, np.linalg.norm(yd) * np.linalg.norm(zd))
        if abs(det) >= tol * scale:
            return False
    return True


def weingarten_residual(surface: ParametricSurface, u) -> float:
    """``max_a |n_a + b_a^b S_b|`` with ``n_a`` by finite differences."""
    u1, u2 = float(u[0]), float(u[1])
    forms = second_fundamental_form(surface, (u1, u2))
    s1, s2 = surface.partials(u1, u2)
    mixed = forms.B @ forms.ginv  # mixed[a, b] = b_a^b
    n1 = _diff(lambda t: unit_normal(surface, (t, u2)), u1, 0.1 * _h(u1))
    n2 = _diff(lambda t: unit_normal(surface, (u1, t)), u2, 0.1 * _h(u2))
    res = 0.0
    for a, na in enumerate((n1, n2)):
        res = max(res, np.linalg.norm(na + mixed[a, 0] * s1 + mixed[a, 1] * s2))
    return float(res)


def gauss_formula_residual(surface: ParametricSurface, u) -> float:
    """``max_ab |S_ab - Gamma^c_ab S_c - b_ab n|``.

    The Christoffel symbols come from the metric alone, so the check couples
    the intrinsic and extrinsic computations.
    """
    u1, u2 = float(u[0]), float(u[1])
    forms = second_fundamental_form(surface, (u1, u2))
    n = unit_normal(surface, (u1, u2))
    s1, s2 = surface.partials(u1, u2)
    s11, s12, s22 = surface.second_partials(u1, u2)
    gam = christoffel_from_metric(lambda a, b: metric_tensor(surface, (a, b)).G, (u1, u2))
    Sab = ((s11, s12), (s12, s22))
    res = 0.0
    for a in range(2):
        for b in range(2):
            r = Sab[a][b] - gam[0, a, b] * s1 - gam[1, a, b] * s2 - forms.B[a, b] * n
            res = max(res, np.linalg.norm(r))
    return float(res)


def covariant_metric_transform(forms: FundamentalForms, jac) -> FundamentalForms:
    """Transform covariant tensors under ``u = u(ubar)`` with ``jac = du/dubar``."""
    J = np.asarray(jac, dtype=float)
    if J.shape != (2, 2) or abs(np.linalg.det(J)) < 1e-14 * max(1.0, np.abs(J).max() ** 2):
        raise AllowableTransformError("coordinate change has a singular Jacobian")
    G = J.T @ forms.G @ J
    B = None if forms.B is None else J.T @ forms.B @ J
    return FundamentalForms(G=G, B=B)


def is_conformal(forms_a: FundamentalForms, forms_b: FundamentalForms, tol: float = 1e-8):
    """Whether ``G_b = eta * G_a`` for a scalar ``eta > 0``; returns ``(flag, eta)``."""
    eta = np.trace(forms_b.G) / np.trace(forms_a.G)
    ok = eta > 0 and np.allclose(forms_b.G, eta * forms_a.G, rtol=tol, atol=tol * np.abs(forms_b.G).max())
    return bool(ok), float(eta)


# Reference surfaces used by tests and examples ------------------------------

def plane():
    return ParametricSurface(
        lambda u, v: np.array([u, v, 0.0]), ((-1, 1), (-1, 1)),
        jac=lambda u, v: (np.array([1.0, 0, 0]), np.array([0, 1.0, 0])),
        hess=lambda u, v: (np.zeros(3), np.zeros(3), np.zeros(3)),
        name="plane",
    )


def sphere(r=1.0):
    """Sphere in colatitude/longitude coordinates, away from the poles."""
    def f(t, p):
        return r * np.array([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)])

    def jac(t, p):
        return (
            r * np.array([np.cos(t) * np.cos(p), np.cos(t) * np.sin(p), -np.sin(t)]),
            r * np.array([-np.sin(t) * np.sin(p), np.sin(t) * np.cos(p), 0.0]),
        )

    def hess(t, p):
        return (
            -f(t, p),
            r * np.array([-np.cos(t) * np.sin(p), np.cos(t) * np.cos(p), 0.0]),
            r * np.array([-np.sin(t) * np.cos(p), -np.sin(t) * np.sin(p), 0.0]),
        )

    return ParametricSurface(f, ((0.3, np.pi - 0.3), (-np.pi, np.pi)), jac=jac, hess=hess,
                             name=f"sphere(r={r})")


def cylinder(r=1.0):
    """Cylinder ``(r cos u, r sin u, v)``."""
    def f(u, v):
        return np.array([r * np.cos(u), r * np.sin(u), v])

    def jac(u, v):
        return np.array([-r * np.sin(u), r * np.cos(u), 0.0]), np.array([0.0, 0.0, 1.0])

    def hess(u, v):
        return np.array([-r * np.cos(u), -r * np.sin(u), 0.0]), np.zeros(3), np.zeros(3)

    return ParametricSurface(f, ((-np.pi, np.pi), (-1, 1)), jac=jac, hess=hess,
                             name=f"cylinder(r={r})")
