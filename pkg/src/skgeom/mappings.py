"""Concrete 3:2 Shannon-Kotel'nikov mappings and the linear baseline.

Every mapping is a surface ``S(z1, z2)`` embedded in the source space R^3.
Channel symbols ``z`` are decoded by evaluating ``S``; encoding projects a
source vector onto the surface (see :mod:`skgeom.channel`).

The spiral mappings share the radial law ``p(z1) = sqrt(alpha1 |z1| / (eta
Delta))``, which makes the spiral approximately arc-length parametrized in
``z1``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, UnsupportedConfigurationError
from .surfaces import ParametricSurface

__all__ = [
    "MappingParams",
    "MappingSystem",
    "helicoid",
    "helicoid_arclength_variant",
    "rcasd",
    "mscds",
    "snasu",
    "bpam_linear",
    "build_mapping",
    "mapping_from_config",
    "MAPPING_NAMES",
]

PI = np.pi
# Tail radii holding all but 1e-6 of the probability mass (sigma = 1).
_TAIL_GAUSS = 4.892  # |N(0,1)|
_TAIL_RAYLEIGH = np.sqrt(2 * np.log(1e6))  # radius of a 2-D Gaussian
_TAIL_CHI3 = 5.6  # radius of a 3-D Gaussian


@dataclass(frozen=True)
class MappingParams:
    """Free parameters of a mapping.

    ``delta`` is the fold spacing and ``alpha1``, ``alpha2`` the channel
    amplification factors.  The remaining fields are mapping specific and
    ignored by mappings that do not use them.
    """

    delta: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    eta: float = 0.16
    R: float = PI
    a: float = 0.0
    alpha0: float = 0.0
    B: float = 1.0
    theta0: float = -PI / 2
    phase: float = PI / 2
    psi: float = PI / 2

    def __post_init__(self):
        for name in ("delta", "alpha1", "alpha2", "eta", "R", "B"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be positive, got {v!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise DomainError(f"unknown parameters {sorted(unknown)}")
        return cls(**{k: float(v) for k, v in d.items()})

    def with_(self, **kw):
        return replace(self, **kw)


@dataclass(frozen=True)
class MappingSystem:
    """A named mapping with its embedding, derivatives and channel domain.

    ``S``, ``jac`` and ``hess`` are vectorized over broadcastable arrays
    ``z1, z2`` and return arrays with a trailing axis of length 3.
    ``extras["radial"]`` marks embeddings that depend on ``z1`` through
    ``sqrt(|z1|)``.
    """

    name: str
    M: int
    N: int
    params: MappingParams
    S: Callable
    jac: Callable
    hess: Optional[Callable]
    z_domain: tuple
    extras: dict = field(default_factory=dict)

    @property
    def surface(self) -> ParametricSurface:
        def f(u, v):
            return self.S(np.float64(u), np.float64(v))

        def j(u, v):
            return self.jac(np.float64(u), np.float64(v))

        h = None
        if self.hess is not None:
            def h(u, v):
                return self.hess(np.float64(u), np.float64(v))

        return ParametricSurface(f, self.z_domain, jac=j, hess=h, dim=3, name=self.name)

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return self.S(z[..., 0], z[..., 1])

    def jacobian(self, z):
        """Jacobian, shape ``(..., 3, 2)``."""
        z = np.asarray(z, dtype=float)
        s1, s2 = self.jac(z[..., 0], z[..., 1])
        return np.stack([s1, s2], axis=-1)

    def clamp(self, z):
        """Clamp channel points to ``z_domain``; returns ``(z, was_clamped)``."""
        z = np.asarray(z, dtype=float)
        lo = np.array([self.z_domain[0][0], self.z_domain[1][0]])
        hi = np.array([self.z_domain[0][1], self.z_domain[1][1]])
        zc = np.clip(z, lo, hi)
        return zc, np.any(zc != z, axis=-1)

    def to_config(self):
        return {"name": self.name, "params": self.params.to_dict()}

    def to_json(self):
        return json.dumps(self.to_config(), sort_keys=True)


def _stack(*c):
    return np.stack(np.broadcast_arrays(*c), axis=-1)


# Helicoid ------------------------------------------------------------------

def helicoid(params: MappingParams, sigma_x: float = 1.0) -> MappingSystem:
    """Helicoid ``((R a1/pi) z1 cos(a2 z2), (R a1/pi) z1 sin(a2 z2), (D a2/pi) z2)``."""
    R, D, a1, a2 = params.R, params.delta, params.alpha1, params.alpha2
    k1 = R * a1 / PI
    k3 = D * a2 / PI

    def S(z1, z2):
        c, s = np.cos(a2 * z2), np.sin(a2 * z2)
        return _stack(k1 * z1 * c, k1 * z1 * s, k3 * z2)

    def jac(z1, z2):
        c, s = np.cos(a2 * z2), np.sin(a2 * z2)
        zero = np.zeros_like(c * z1)
        return (_stack(k1 * c, k1 * s, zero),
                _stack(-k1 * a2 * z1 * s, k1 * a2 * z1 * c, k3 + zero))

    def hess(z1, z2):
        c, s = np.cos(a2 * z2), np.sin(a2 * z2)
        zero = np.zeros_like(c * z1)
        return (_stack(zero, zero, zero),
                _stack(-k1 * a2 * s + zero, k1 * a2 * c + zero, zero),
                _stack(-k1 * a2 * a2 * z1 * c, -k1 * a2 * a2 * z1 * s, zero))

    z1max = 1.2 * PI * _TAIL_RAYLEIGH * sigma_x / (R * a1)
    z2max = (PI * _TAIL_GAUSS * sigma_x / D + PI) / a2
    return MappingSystem("helicoid", 3, 2, params, S, jac, hess,
                         ((-z1max, z1max), (-z2max, z2max)))


def helicoid_arclength_variant(params: MappingParams, sigma_x: float = 1.0) -> MappingSystem:
    """Helicoid with the second coordinate rescaled so that ``g22 = 1``.

    ``S(z1, z2) = H(z1, z2 / phi(z1))`` with ``H`` the helicoid and
    ``phi(z1) = sqrt((D a2)^2 + (R a1 a2 z1)^2) / pi``.
    """
    base = helicoid(params, sigma_x)
    R, D, a1, a2 = params.R, params.delta, params.alpha1, params.alpha2

    def phi(z1):
        return np.sqrt((D * a2) ** 2 + (R * a1 * a2 * z1) ** 2) / PI

    def S(z1, z2):
        return base.S(z1, z2 / phi(z1))

    def jac(z1, z2):
        f = phi(z1)
        w = z2 / f
        df = (R * a1 * a2) ** 2 * z1 / (PI ** 2 * f)
        h1, h2 = base.jac(z1, w)
        dw1 = (-z2 * df / f ** 2)[..., None]
        return h1 + h2 * dw1, h2 / f[..., None]

    hmax = base.z_domain[1][1] * a2 * D / PI
    return MappingSystem("helicoid_arclength", 3, 2, params, S, jac, None,
                         (base.z_domain[0], (-hmax, hmax)))


# Spiral mappings -------------------------------------------------------------

def _radial(z1, alpha1, eta, delta):
    """``p``, sign, ``dp/dz1`` magnitude ``q1`` and ``d2p/dz1^2``."""
    c2 = alpha1 / (eta * delta)
    s = np.where(z1 < 0, -1.0, 1.0)
    p = np.sqrt(c2 * np.abs(z1))
    with np.errstate(divide="ignore", invalid="ignore"):
        q1 = c2 / (2 * p)
        p2 = -c2 * c2 / (4 * p ** 3)
    return p, s, q1, p2


def rcasd(params: MappingParams, sigma_x: float = 1.0) -> MappingSystem:
    """Right cylinder with an Archimedes spiral directrix.

    ``S = (s a p cos p, s a p sin p, alpha2 z2)`` with ``a = Delta/pi`` and
    ``s = sign(z1)``; the negative arm is the point reflection of the
    positive one so that the two arms interleave.
    """
    D, a1, a2, eta = params.delta, params.alpha1, params.alpha2, params.eta
    a = D / PI

    def S(z1, z2):
        p, s, _, _ = _radial(z1, a1, eta, D)
        return _stack(s * a * p * np.cos(p), s * a * p * np.sin(p), a2 * z2 + 0 * p)

    def jac(z1, z2):
        p, s, q1, _ = _radial(z1, a1, eta, D)
        c, sn = np.cos(p), np.sin(p)
        zero = np.zeros_like(p * z2)
        tp = (a * (c - p * sn), a * (sn + p * c))
        return (_stack(tp[0] * q1, tp[1] * q1, zero), _stack(zero, zero, a2 + zero))

    def hess(z1, z2):
        p, s, q1, p2 = _radial(z1, a1, eta, D)
        c, sn = np.cos(p), np.sin(p)
        zero = np.zeros_like(p * z2)
        tp = np.array([a * (c - p * sn), a * (sn + p * c)])
        tpp = np.array([a * (-2 * sn - p * c), a * (2 * c - p * sn)])
        s11 = s * (tpp * q1 ** 2 + tp * p2)
        return (_stack(s11[0], s11[1], zero), _stack(zero, zero, zero), _stack(zero, zero, zero))

    # |z1| = eta pi^2 r^2 / (Delta alpha1) with r the radius in the x1,x2 plane
    z1max = 1.2 * eta * PI ** 2 * (_TAIL_RAYLEIGH * sigma_x) ** 2 / (D * a1)
    z2max = 1.2 * _TAIL_GAUSS * sigma_x / a2
    return MappingSystem("rcasd", 3, 2, params, S, jac, hess,
                         ((-z1max, z1max), (-z2max, z2max)), extras={"radial": True})


def mscds(params: MappingParams, sigma_x: float = 1.0) -> MappingSystem:
    """Monge surface with a cylindrical directrix surface, ``theta0 = +-pi/2``.

    In the x1,x2 plane ``T = (D/pi)(cos p, sin p) + Bt (-sin p, cos p)`` with
    ``Bt = (D/pi)(alpha0 - p) - a (alpha2 z2)^2 sin(theta0)``; the third
    coordinate is ``B alpha2 z2 sin(theta0)``.  Negative ``z1`` uses the point
    reflection ``-T`` as for the RCASD.
    """
    if not (np.isclose(params.theta0, PI / 2) or np.isclose(params.theta0, -PI / 2)):
        raise UnsupportedConfigurationError("MS-CDS supports theta0 = +pi/2 or -pi/2 only")
    D, a1, a2, eta = params.delta, params.alpha1, params.alpha2, params.eta
    am, al0, Bc = params.a, params.alpha0, params.B
    st = float(np.sign(params.theta0))
    k = D / PI

    def parts(z1, z2):
        p, s, q1, p2 = _radial(z1, a1, eta, D)
        c, sn = np.cos(p), np.sin(p)
        bt = k * (al0 - p) - am * (a2 * z2) ** 2 * st
        bt_z2 = -2 * am * a2 * a2 * z2 * st
        bt_z22 = -2 * am * a2 * a2 * st
        return p, s, q1, p2, c, sn, bt, bt_z2, bt_z22

    def S(z1, z2):
        p, s, _, _, c, sn, bt, _, _ = parts(z1, z2)
        return _stack(s * (k * c - bt * sn), s * (k * sn + bt * c), Bc * a2 * z2 * st + 0 * p)

    def jac(z1, z2):
        p, s, q1, _, c, sn, bt, bt_z2, _ = parts(z1, z2)
        zero = np.zeros_like(bt)
        s1 = _stack(-bt * c * q1, -bt * sn * q1, zero)
        s2 = _stack(s * bt_z2 * (-sn), s * bt_z2 * c, Bc * a2 * st + zero)
        return s1, s2

    def hess(z1, z2):
        p, s, q1, p2, c, sn, bt, bt_z2, bt_z22 = parts(z1, z2)
        zero = np.zeros_like(bt)
        tp = np.array([-bt * c, -bt * sn])
        tpp = np.array([k * c + bt * sn, k * sn - bt * c])
        s11 = s * (tpp * q1 ** 2 + tp * p2)
        s12 = np.array([-bt_z2 * c, -bt_z2 * sn]) * q1
        s22 = s * bt_z22 * np.array([-sn, c])
        return (_stack(s11[0], s11[1], zero), _stack(s12[0], s12[1], zero),
                _stack(s22[0], s22[1], zero))

    z1max = 1.2 * eta * PI ** 2 * (_TAIL_RAYLEIGH * sigma_x) ** 2 / (D * a1)
    z2max = 1.2 * _TAIL_GAUSS * sigma_x / (a2 * Bc)
    return MappingSystem("mscds", 3, 2, params, S, jac, hess,
                         ((-z1max, z1max), (-z2max, z2max)), extras={"radial": True})


def snasu(params: MappingParams, sigma_x: float = 1.0) -> MappingSystem:
    """Double Snail Surface with ``a = b = c = 2 Delta / pi``.

    With ``theta = alpha2 z2 + phase`` the positive branch is
    ``a p (sin p cos theta, cos p cos theta, -sin theta)`` and the negative
    branch ``-a p (sin(p - psi) cos theta, cos(p - psi) cos theta, -sin theta)``.
    For every ``z1`` the ``z2`` coordinate sweeps a great circle through the
    poles of the sphere of radius ``a p``; the two branches interleave.
    """
    D, a1, a2, eta = params.delta, params.alpha1, params.alpha2, params.eta
    ph, psi = params.phase, params.psi
    a = 2 * D / PI

    def frame(z1, z2):
        z1, z2 = np.broadcast_arrays(np.asarray(z1, dtype=float), np.asarray(z2, dtype=float))
        p, s, q1, p2 = _radial(z1, a1, eta, D)
        th = a2 * z2 + ph
        sig = s  # the negative branch is the point reflection shifted by psi
        pp = np.where(s < 0, p - psi, p)
        sp, cp = np.sin(pp), np.cos(pp)
        ux, uy = sig * sp, sig * cp
        vx, vy = uy, -ux  # du/dp
        return p, s, q1, p2, th, ux, uy, vx, vy, sig

    def S(z1, z2):
        p, s, q1, p2, th, ux, uy, vx, vy, sig = frame(z1, z2)
        ct, stt = np.cos(th), np.sin(th)
        return _stack(a * p * ux * ct, a * p * uy * ct, -sig * a * p * stt)

    def _w(z1, z2):
        p, s, q1, p2, th, ux, uy, vx, vy, sig = frame(z1, z2)
        ct, stt = np.cos(th), np.sin(th)
        Wp = np.array([a * (ux * ct + p * vx * ct), a * (uy * ct + p * vy * ct), -sig * a * stt])
        Wpp = np.array([2 * a * vx * ct - a * p * ux * ct, 2 * a * vy * ct - a * p * uy * ct, 0 * p])
        Wt = np.array([-a * p * ux * stt, -a * p * uy * stt, -sig * a * p * ct])
        Wtt = -np.array([a * p * ux * ct, a * p * uy * ct, -sig * a * p * stt])
        Wpt = np.array([-a * ux * stt - a * p * vx * stt, -a * uy * stt - a * p * vy * stt, -sig * a * ct])
        return p, s, q1, p2, Wp, Wpp, Wt, Wtt, Wpt

    def jac(z1, z2):
        p, s, q1, p2, Wp, Wpp, Wt, Wtt, Wpt = _w(z1, z2)
        s1 = Wp * (s * q1)
        s2 = Wt * a2
        return _stack(*s1), _stack(*s2)

    def hess(z1, z2):
        p, s, q1, p2, Wp, Wpp, Wt, Wtt, Wpt = _w(z1, z2)
        s11 = Wpp * q1 ** 2 + Wp * p2
        s12 = Wpt * (a2 * s * q1)
        s22 = Wtt * a2 ** 2
        return _stack(*s11), _stack(*s12), _stack(*s22)

    z1max = 1.2 * eta * D * (_TAIL_CHI3 * sigma_x / a) ** 2 / a1
    z2max = PI / a2
    return MappingSystem("snasu", 3, 2, params, S, jac, hess,
                         ((-z1max, z1max), (-z2max, z2max)), extras={"a": a, "radial": True})


# Linear baseline -------------------------------------------------------------

def bpam_linear(params: Optional[MappingParams] = None, M: int = 3, N: int = 2,
                power: float = 1.0, sigma_x: float = 1.0) -> MappingSystem:
    """Block pulse amplitude modulation keeping the first ``N`` components.

    Each kept component is scaled by ``g = sqrt(power) / sigma_x`` so that
    every channel carries ``power``.  ``S(z) = (z1/g, z2/g, 0)`` is the plane
    of reconstruction points for the noiseless decoder.
    """
    if (M, N) != (3, 2):
        raise UnsupportedConfigurationError("bpam_linear is implemented for 3:2")
    g = np.sqrt(power) / sigma_x
    p = MappingParams(delta=1.0, alpha1=g, alpha2=g) if params is None else params
    g1, g2 = p.alpha1, p.alpha2

    def S(z1, z2):
        return _stack(z1 / g1, z2 / g2, 0 * z1 * z2)

    def jac(z1, z2):
        zero = np.zeros_like(np.asarray(z1 * z2, dtype=float))
        return _stack(1 / g1 + zero, zero, zero), _stack(zero, 1 / g2 + zero, zero)

    def hess(z1, z2):
        zero = np.zeros(np.shape(z1 * z2) + (3,))
        return zero, zero, zero

    zm = 1.2 * _TAIL_GAUSS * sigma_x
    return MappingSystem("bpam", 3, 2, p, S, jac, hess,
                         ((-zm * g1, zm * g1), (-zm * g2, zm * g2)))


_BUILDERS = {
    "helicoid": helicoid,
    "helicoid_arclength": helicoid_arclength_variant,
    "rcasd": rcasd,
    "mscds": mscds,
    "snasu": snasu,
    "bpam": bpam_linear,
}
MAPPING_NAMES = tuple(_BUILDERS)


def build_mapping(name: str, params: Optional[MappingParams] = None, sigma_x: float = 1.0) -> MappingSystem:
    """Construct a mapping by name."""
    key = name.lower().replace("-", "").replace("_", "")
    lookup = {k.replace("_", ""): v for k, v in _BUILDERS.items()}
    if key not in lookup:
        raise UnsupportedConfigurationError(f"unknown mapping {name!r}; choose from {MAPPING_NAMES}")
    fn = lookup[key]
    if fn is bpam_linear:
        return bpam_linear(params, sigma_x=sigma_x)
    return fn(params if params is not None else MappingParams(), sigma_x=sigma_x)


def mapping_from_config(cfg) -> MappingSystem:
    """Inverse of :meth:`MappingSystem.to_config` (accepts a dict or JSON text)."""
    if isinstance(cfg, str):
        cfg = json.loads(cfg)
    return build_mapping(cfg["name"], MappingParams.from_dict(cfg.get("params", {})))
