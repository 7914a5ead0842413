"""Analytical distortion, power and channel-density models.

Conventions: the source is i.i.d. Gaussian with standard deviation
``sigma_x``; there are ``M = 3`` source and ``N = 2`` channel dimensions;
distortion is the mean squared error per source component and power is the
mean power per channel dimension, ``P = (var(z1) + var(z2)) / 2``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize, special, stats

from .errors import DomainError, NormalizationError, RangeError
from .mappings import MappingParams, MappingSystem, build_mapping

__all__ = [
    "DistortionBreakdown",
    "ChannelStats",
    "ChannelPower",
    "opta_sdr",
    "bpam_distortion",
    "bpam_sdr",
    "m1_channel_distortion_3rd",
    "one_n_weak_noise_2nd",
    "mn_pointwise_distortion",
    "curvature_correction_ratio",
    "uniform_approximation_bound",
    "helicoid_approximation_fit",
    "approximation_distortion",
    "channel_power",
    "channel_stats",
    "weak_channel_distortion_integral",
    "closed_form_weak_distortion",
    "mscds_I1",
    "snasu_inverse_moment",
    "second_order_channel_term",
    "principal_curvatures_vec",
    "analytical_breakdown",
    "splitting_slope",
    "rcasd_kappa",
    "rcasd_high_snr_delta",
    "rcasd_delta_exact",
    "rcasd_alpha1_on_boundary",
    "snasu_z1_pdf",
    "snasu_z2_pdf",
    "to_db",
    "from_db",
]

PI = np.pi


def to_db(x):
    return 10.0 * np.log10(x)


def from_db(x):
    return 10.0 ** (np.asarray(x, dtype=float) / 10.0)


@dataclass(frozen=True)
class DistortionBreakdown:
    """Approximation, first-order channel and curvature-correction terms."""

    eps_approx: float
    eps_ch_weak: float
    eps_ch_2nd: float = 0.0

    def __post_init__(self):
        for k in ("eps_approx", "eps_ch_weak", "eps_ch_2nd"):
            v = getattr(self, k)
            if not v >= 0:
                raise DomainError(f"{k} must be non-negative, got {v!r}")

    @property
    def total(self):
        return self.eps_approx + self.eps_ch_weak + self.eps_ch_2nd

    def sdr(self, sigma_x=1.0):
        return sigma_x ** 2 / self.total


@dataclass(frozen=True)
class ChannelStats:
    """Distribution of one channel symbol.

    ``pdf`` is vectorized; ``sampler(rng, n)`` draws ``n`` values.
    ``support`` bounds the region holding all but about 1e-9 of the mass.
    """

    variance: float
    family: str
    pdf: Callable
    sampler: Callable
    support: tuple

    def check_normalized(self, tol=1e-4):
        lo, hi = self.support
        pts = [0.0] if lo < 0 < hi else None
        mass, _ = integrate.quad(self.pdf, lo, hi, points=pts, limit=400, epsabs=1e-12)
        if abs(mass - 1.0) > tol:
            raise NormalizationError(f"{self.family} density integrates to {mass:.6g}")
        return mass


@dataclass(frozen=True)
class ChannelPower:
    channels: tuple
    P: float

    @property
    def variances(self):
        return tuple(c.variance for c in self.channels)


# Reference curves --------------------------------------------------------------

def opta_sdr(snr, M: int = 3, N: int = 2):
    """Optimal performance theoretically attainable, ``(1 + snr)^(N/M)``."""
    snr = np.asarray(snr, dtype=float)
    if np.any(snr < 0):
        raise DomainError("snr must be non-negative")
    out = (1.0 + snr) ** (N / M)
    return float(out) if out.ndim == 0 else out


def bpam_distortion(snr, M: int = 3, N: int = 2, sigma_x: float = 1.0):
    """Per-component MSE of linear transmission of ``N`` of ``M`` components.

    The receiver uses the linear MMSE estimate, so each transmitted
    component contributes ``sigma^2 / (1 + snr)`` and each dropped one
    ``sigma^2``.
    """
    if N > M:
        raise DomainError("bpam_distortion covers M >= N")
    snr = np.asarray(snr, dtype=float)
    s2 = sigma_x ** 2
    out = ((M - N) * s2 + N * s2 / (1.0 + snr)) / M
    return float(out) if out.ndim == 0 else out


def bpam_sdr(snr, M: int = 3, N: int = 2, sigma_x: float = 1.0):
    return sigma_x ** 2 / bpam_distortion(snr, M, N, sigma_x)


# Pointwise curvature expansions ---------------------------------------------------

def m1_channel_distortion_3rd(g11, kappa, tau, sigma_n, order=3):
    """Channel error of an M:1 curve up to ``order`` (1, 2 or 3) in the noise.

    ``g11 sigma^2 + 3/4 kappa^2 sigma^4 + 5/12 kappa^2 tau^2 sigma^6``; valid for
    a scaled arc-length parametrization with ``|S'|^2 = g11``.
    """
    s2 = sigma_n ** 2
    out = g11 * s2
    if order >= 2:
        out += 0.75 * kappa ** 2 * s2 ** 2
    if order >= 3:
        out += 5.0 / 12.0 * kappa ** 2 * tau ** 2 * s2 ** 3
    return out


def one_n_weak_noise_2nd(g11, kappa, sigma_n, third=False):
    """Weak-noise error of a 1:N curve with the circle approximation."""
    if g11 <= 0:
        raise DomainError("g11 must be positive")
    s2 = sigma_n ** 2
    corr = 1.0 + 0.25 * s2 * kappa ** 2
    if third:
        corr += 5.0 / 48.0 * s2 ** 2 * kappa ** 4
    return s2 / g11 * corr


def mn_pointwise_distortion(direction_metrics, sigma_n, mode="reduction", M: Optional[int] = None):
    """Pointwise distortion density for orthogonal (LoC-type) coordinates.

    Parameters
    ----------
    direction_metrics : sequence of (g_ii, kappa_i)
    mode : {"reduction", "expansion"}
    M : int
        Source dimension.  Defaults to the number of directions for
        expansion; required for reduction.
    """
    dm = list(direction_metrics)
    if not dm:
        raise DomainError("need at least one coordinate direction")
    s2 = sigma_n ** 2
    if mode == "expansion":
        M = len(dm) if M is None else M
        return s2 / M * sum(1.0 / g * (1.0 + 0.25 * s2 * k ** 2) for g, k in dm)
    if mode == "reduction":
        if M is None:
            raise DomainError("source dimension M required for reduction")
        return s2 / M * sum(g + 0.75 * s2 * k ** 2 for g, k in dm)
    raise DomainError(f"unknown mode {mode!r}")


def curvature_correction_ratio(g, kappa, sigma_n2, mode="reduction"):
    """Ratio of the second-order to the first-order term for one direction."""
    if mode == "reduction":
        return 0.75 * sigma_n2 * kappa ** 2 / g
    if mode == "expansion":
        return 0.25 * sigma_n2 * kappa ** 2
    raise DomainError(f"unknown mode {mode!r}")


# Approximation distortion ----------------------------------------------------------

def uniform_approximation_bound(M, N, delta):
    """Lower bound ``(M-N) / (4 M (M-N+2)) Delta^2`` for uniform mappings."""
    return (M - N) / (4.0 * M * (M - N + 2)) * delta ** 2


def helicoid_approximation_fit(delta):
    """Cubic fit of the Helicoid approximation distortion (``sigma_x = 1``)."""
    return -0.0036 * delta ** 3 + 0.024 * delta ** 2 + 0.0056 * delta


def approximation_distortion(mapping, delta, sigma_x=1.0):
    """Approximation distortion for a mapping name or :class:`MappingSystem`."""
    name = mapping if isinstance(mapping, str) else mapping.name
    if delta < 0:
        raise DomainError("delta must be non-negative")
    if name.startswith("helicoid"):
        if delta > 3.0 or not np.isclose(sigma_x, 1.0):
            raise RangeError("Helicoid fit is valid for delta in [0, 3] and sigma_x = 1")
        return helicoid_approximation_fit(delta)
    if name == "bpam":
        return sigma_x ** 2 / 3.0
    return uniform_approximation_bound(3, 2, delta)


# Channel densities ---------------------------------------------------------------

def _gaussian(var):
    s = np.sqrt(var)
    return ChannelStats(var, "gaussian", lambda z: stats.norm.pdf(z, scale=s),
                        lambda rng, n: rng.normal(0.0, s, n), (-6.5 * s, 6.5 * s))


def _laplace(var):
    b = np.sqrt(var / 2.0)
    return ChannelStats(var, "laplace", lambda z: np.exp(-np.abs(z) / b) / (2 * b),
                        lambda rng, n: rng.laplace(0.0, b, n), (-21.5 * b, 21.5 * b))


def _double_rayleigh(v):
    def pdf(z):
        z = np.asarray(z, dtype=float)
        return 0.5 * np.abs(z) / v ** 2 * np.exp(-z ** 2 / (2 * v ** 2))

    def sample(rng, n):
        return rng.rayleigh(v, n) * rng.choice([-1.0, 1.0], n)

    return ChannelStats(2 * v * v, "double-rayleigh", pdf, sample, (-6.5 * v, 6.5 * v))


def _double_gamma(c, b):
    def pdf(z):
        z = np.abs(np.asarray(z, dtype=float))
        return 0.5 * stats.gamma.pdf(z, c, scale=b)

    def sample(rng, n):
        return rng.gamma(c, b, n) * rng.choice([-1.0, 1.0], n)

    hi = 32.0 * b  # shape-3/2 tail beyond 32 b is below 1e-12
    return ChannelStats(c * (c + 1) * b * b, "double-gamma", pdf, sample, (-hi, hi))


def _sine(alpha2):
    def pdf(z):
        z = np.asarray(z, dtype=float)
        inside = np.abs(alpha2 * z) <= PI
        return np.where(inside, alpha2 / 4.0 * np.abs(np.sin(alpha2 * z)), 0.0)

    def sample(rng, n):
        u = np.arccos(1.0 - 2.0 * rng.random(n))
        return u * rng.choice([-1.0, 1.0], n) / alpha2

    var = (PI ** 2 - 4.0) / (2.0 * alpha2 ** 2)
    return ChannelStats(var, "sine", pdf, sample, (-PI / alpha2, PI / alpha2))


def snasu_z1_pdf(params: MappingParams, z, sigma_x=1.0):
    """Double-gamma density of the first Snail Surface channel."""
    a = 2 * params.delta / PI
    b = 2 * params.eta * params.delta * sigma_x ** 2 / (a * a * params.alpha1)
    return _double_gamma(1.5, b).pdf(z)


def snasu_z2_pdf(params: MappingParams, z):
    """Sine density ``(alpha2/4) |sin(alpha2 z)|`` on ``|z| <= pi/alpha2``."""
    return _sine(params.alpha2).pdf(z)


def rcasd_kappa(sigma_x=1.0, eta=0.16):
    """Constant ``2 (2 eta pi^2 sigma_x^2)^2`` of the spiral channel power."""
    return 2.0 * (2.0 * eta * PI ** 2 * sigma_x ** 2) ** 2


def channel_stats(mapping, params: Optional[MappingParams] = None, sigma_x=1.0, plus_half=True,
                  power=1.0):
    """Per-channel distributions of the channel symbols for a mapping.

    Parameters
    ----------
    plus_half : bool
        Helicoid only: add the empirical ``1/2`` to the second channel
        variance before scaling.
    power : float
        BPAM only: power per channel.
    """
    name = mapping if isinstance(mapping, str) else mapping.name
    p = params if params is not None else (mapping.params if not isinstance(mapping, str) else None)
    s2 = sigma_x ** 2
    if name == "bpam":
        return (_gaussian(power), _gaussian(power))
    D, a1, a2, eta = p.delta, p.alpha1, p.alpha2, p.eta
    if name.startswith("helicoid"):
        v = PI * sigma_x / (p.R * a1)
        y2 = (PI * sigma_x / D) ** 2 + (0.5 if plus_half else 0.0)
        return (_double_rayleigh(v), _gaussian(y2 / a2 ** 2))
    if name == "rcasd":
        return (_laplace(rcasd_kappa(sigma_x, eta) / (D * a1) ** 2), _gaussian(s2 / a2 ** 2))
    if name == "mscds":
        return (_laplace(rcasd_kappa(sigma_x, eta) / (D * a1) ** 2), _gaussian(s2 / (a2 * p.B) ** 2))
    if name == "snasu":
        a = 2 * D / PI
        b = 2 * eta * D * s2 / (a * a * a1)
        return (_double_gamma(1.5, b), _sine(a2))
    raise DomainError(f"no channel model for {name!r}")


def channel_power(mapping, params: Optional[MappingParams] = None, sigma_x=1.0, plus_half=True,
                  power=1.0) -> ChannelPower:
    """Channel statistics and mean power per channel dimension."""
    ch = channel_stats(mapping, params, sigma_x, plus_half, power)
    return ChannelPower(ch, 0.5 * (ch[0].variance + ch[1].variance))


# Weak-noise channel distortion ------------------------------------------------------

def _graded_nodes(lo, hi, n_uniform=96, n_geom=40, order=8):
    """Gauss-Legendre nodes on [lo, hi] split at 0 and graded towards 0."""
    gx, gw = np.polynomial.legendre.leggauss(order)
    xs, ws = [], []
    for a, b in ((lo, min(hi, 0.0)), (max(lo, 0.0), hi)):
        if b <= a:
            continue
        L = b - a
        t = np.unique(np.concatenate([np.linspace(0, 1, n_uniform + 1), np.geomspace(1e-12, 1, n_geom)]))
        # grade towards the end that touches 0
        edges = a + L * t if a == 0.0 else b - L * t[::-1]
        edges = np.unique(edges)
        mid, half = 0.5 * (edges[1:] + edges[:-1]), 0.5 * np.diff(edges)
        xs.append((mid[:, None] + half[:, None] * gx).ravel())
        ws.append((half[:, None] * gw).ravel())
    return np.concatenate(xs), np.concatenate(ws)


def _trace_metric(mapping, z1, z2):
    s1, s2 = mapping.jac(z1, z2)
    return np.sum(s1 * s1, axis=-1) + np.sum(s2 * s2, axis=-1)


def weak_channel_distortion_integral(mapping: MappingSystem, stats_pair=None, sigma_n=1.0,
                                     method="quadrature", z_cut=0.0, n_mc=10 ** 6, seed=0,
                                     M=3):
    """``(sigma_n^2 / M) E[trace G(z)]`` under the channel densities.

    Parameters
    ----------
    stats_pair : (ChannelStats, ChannelStats), optional
        Defaults to :func:`channel_stats` of the mapping.
    method : {"quadrature", "montecarlo"}
        Tensor Gauss-Legendre quadrature (graded towards ``z = 0``) or
        plain Monte-Carlo with ``n_mc`` samples from a seeded generator.
    z_cut : float
        Exclude ``|z1| < z_cut``.  Needed where ``trace G`` has a
        non-integrable singularity at ``z1 = 0``.
    """
    st = channel_stats(mapping) if stats_pair is None else stats_pair
    if method == "montecarlo":
        rng = np.random.default_rng(seed)
        z1 = st[0].sampler(rng, n_mc)
        z2 = st[1].sampler(rng, n_mc)
        keep = np.abs(z1) >= z_cut
        tr = np.where(keep, _trace_metric(mapping, np.where(keep, z1, 1.0), z2), 0.0)
        return sigma_n ** 2 / M * float(np.mean(tr))
    if method != "quadrature":
        raise DomainError(f"unknown method {method!r}")
    x1, w1 = _graded_nodes(*st[0].support)
    x2, w2 = _graded_nodes(*st[1].support)
    f1, f2 = st[0].pdf(x1) * w1, st[1].pdf(x2) * w2
    for f in (f1, f2):
        if abs(f.sum() - 1.0) > 1e-3:
            raise NormalizationError(f"channel density integrates to {f.sum():.6g}")
    keep = np.abs(x1) >= z_cut
    x1, f1 = x1[keep], f1[keep]
    total = 0.0
    chunk = max(1, 2_000_000 // len(x2))
    for k in range(0, len(x1), chunk):
        tr = _trace_metric(mapping, x1[k:k + chunk, None], x2[None, :])
        total += float(f1[k:k + chunk] @ tr @ f2)
    return sigma_n ** 2 / M * total


def snasu_inverse_moment(params: MappingParams, sigma_x=1.0, variant="exact"):
    """``E[1/|z1|]`` for the Snail Surface channel-one density.

    ``"exact"`` uses the gamma identity ``E[1/x] = 1/(b (c - 1))``;
    ``"series"`` the third-order expansion ``4 (1 + var(z1))``.
    """
    a = 2 * params.delta / PI
    b = 2 * params.eta * params.delta * sigma_x ** 2 / (a * a * params.alpha1)
    if variant == "exact":
        return 1.0 / (b * 0.5)
    if variant == "series":
        return 4.0 * (1.0 + 3.75 * b * b)
    raise DomainError(f"unknown variant {variant!r}")


def mscds_I1(params: MappingParams, sigma_x=1.0, z_cut=0.0, method="closed"):
    """``E[g11]`` of the MS-CDS over ``|z1| >= z_cut``.

    The ``z2`` moments are taken in closed form.  With ``p = c sqrt(z1)`` the
    remaining integral splits into exponential-integral, error-function and
    exponential pieces (``method="closed"``); ``method="quadrature"``
    integrates over ``z1`` numerically.  A positive cut is needed unless
    ``alpha0 = a = 0`` because ``g11`` grows like ``1/|z1|`` at the origin.
    """
    D, a1, a2, eta = params.delta, params.alpha1, params.alpha2, params.eta
    k = D / PI
    st = float(np.sign(params.theta0))
    c2 = a1 / (eta * D)
    s2 = sigma_x ** 2 / (a2 * params.B) ** 2
    E = params.a * a2 ** 2 * s2 * st
    F = params.a ** 2 * a2 ** 4 * 3 * s2 * s2
    b = np.sqrt(rcasd_kappa(sigma_x, eta) / (D * a1) ** 2 / 2.0)  # Laplace scale
    lo = max(z_cut, 0.0)
    K0 = k * k * params.alpha0 ** 2 - 2 * k * params.alpha0 * E + F
    if lo == 0.0 and K0 != 0.0:
        raise DomainError("E[g11] diverges without a cut at z1 = 0")
    if method == "quadrature":
        def integrand(z):
            u = k * (params.alpha0 - np.sqrt(c2 * z))
            return c2 / (4 * z) * (u * u - 2 * u * E + F) * np.exp(-z / b) / b

        val, _ = integrate.quad(integrand, lo, np.inf, limit=400, epsabs=0, epsrel=1e-11)
        return val
    if method != "closed":
        raise DomainError(f"unknown method {method!r}")
    K1 = -2 * k * k * params.alpha0 + 2 * k * E
    K2 = k * k
    beta = 1.0 / (c2 * b)
    p0 = np.sqrt(c2 * lo)
    t0 = 0.0 if K0 == 0.0 else K0 * 0.5 * special.exp1(beta * p0 * p0)
    t1 = K1 * 0.5 * np.sqrt(PI / beta) * special.erfc(np.sqrt(beta) * p0)
    t2 = K2 * np.exp(-beta * p0 * p0) / (2 * beta)
    return c2 / (2 * b) * (t0 + t1 + t2)


def closed_form_weak_distortion(mapping: MappingSystem, sigma_n, sigma_x=1.0, variant="exact",
                                z_cut=None):
    """First-order channel distortion from the per-mapping closed forms.

    ``variant="printed"`` selects the Snail Surface expression with the
    ``6 alpha2^2`` second-channel term and the series inverse moment;
    ``"exact"`` uses ``3 alpha2^2`` and the exact gamma inverse moment.
    """
    p, name = mapping.params, mapping.name
    s2 = sigma_n ** 2
    if name == "helicoid":
        vz1 = channel_stats(mapping, sigma_x=sigma_x)[0].variance
        return s2 / (3 * PI ** 2) * ((p.delta * p.alpha2) ** 2 + (p.R * p.alpha1) ** 2 * (1 + p.alpha2 ** 2 * vz1))
    if name == "rcasd":
        return s2 * (p.alpha1 ** 2 + p.alpha2 ** 2) / 3.0
    if name == "mscds":
        I2 = p.alpha2 ** 2 * (p.B ** 2 + 4 * p.a ** 2 * sigma_x ** 2 / p.B ** 2)
        cut = sigma_n if z_cut is None else z_cut
        return s2 * (mscds_I1(p, sigma_x, cut) + I2) / 3.0
    if name == "snasu":
        D, a1, a2, eta = p.delta, p.alpha1, p.alpha2, p.eta
        inv = snasu_inverse_moment(p, sigma_x, "series" if variant == "printed" else "exact")
        I1 = a1 * D / (eta * PI ** 2) * inv + 2 * a1 ** 2 / (3 * PI ** 2 * eta ** 2)
        I2 = (6.0 if variant == "printed" else 3.0) * a2 ** 2 * sigma_x ** 2
        return s2 * (I1 + I2) / 3.0
    if name == "bpam":
        raise DomainError("BPAM has no weak-noise model; use bpam_distortion")
    raise DomainError(f"no closed form for {name!r}")


# Second-order (curvature) term -----------------------------------------------------

def principal_curvatures_vec(mapping: MappingSystem, z1, z2):
    """Principal curvatures at arrays of channel points (vectorized)."""
    s1, s2 = mapping.jac(z1, z2)
    s11, s12, s22 = mapping.hess(z1, z2)
    n = np.cross(s1, s2)
    n /= np.linalg.norm(n, axis=-1, keepdims=True)
    g11, g12, g22 = (np.sum(s1 * s1, -1), np.sum(s1 * s2, -1), np.sum(s2 * s2, -1))
    b11, b12, b22 = (np.sum(n * s11, -1), np.sum(n * s12, -1), np.sum(n * s22, -1))
    g = g11 * g22 - g12 ** 2
    K = (b11 * b22 - b12 ** 2) / g
    H = 0.5 * (b11 * g22 - 2 * b12 * g12 + b22 * g11) / g
    r = np.sqrt(np.maximum(H * H - K, 0.0))
    return H + r, H - r


def second_order_channel_term(mapping: MappingSystem, sigma_n, stats_pair=None, n=20000, seed=0,
                              M=3, z_cut=None):
    """Mean curvature correction ``(sigma_n^2/M) E[sum 3/4 sigma_n^2 kappa_i^2]``.

    Estimated by Monte-Carlo over the channel densities with a fixed seed.
    """
    if mapping.hess is None:
        raise DomainError("mapping has no second derivatives")
    st = channel_stats(mapping) if stats_pair is None else stats_pair
    rng = np.random.default_rng(seed)
    z1 = st[0].sampler(rng, n)
    z2 = st[1].sampler(rng, n)
    cut = sigma_n if z_cut is None else z_cut
    z1 = z1[np.abs(z1) >= cut]
    z2 = z2[: len(z1)]
    k1, k2 = principal_curvatures_vec(mapping, z1, z2)
    s2 = sigma_n ** 2
    return s2 / M * float(np.mean(0.75 * s2 * (k1 ** 2 + k2 ** 2)))


def analytical_breakdown(mapping: MappingSystem, snr, sigma_x=1.0, power=1.0, second_order=True,
                         variant="exact") -> DistortionBreakdown:
    """Analytical distortion split at channel SNR ``snr`` (power ratio)."""
    sigma_n = np.sqrt(power / snr)
    if mapping.name == "bpam":
        return DistortionBreakdown(sigma_x ** 2 / 3.0, bpam_distortion(snr, sigma_x=sigma_x) - sigma_x ** 2 / 3.0)
    approx = approximation_distortion(mapping, mapping.params.delta, sigma_x)
    weak = closed_form_weak_distortion(mapping, sigma_n, sigma_x, variant)
    second = second_order_channel_term(mapping, sigma_n) if (second_order and mapping.hess is not None) else 0.0
    return DistortionBreakdown(approx, weak, second)


# Asymptotics -------------------------------------------------------------------

def splitting_slope(m: int, n: int, mode: str = "reduction"):
    """Dominating high-SNR exponent of a split ``m:n`` composite mapping."""
    if n < 1 or m < n:
        raise DomainError("need m >= n >= 1")
    if m == n:
        return 1.0 / m
    if mode == "reduction":
        return 1.0 / m
    if mode == "expansion":
        return float(n)
    raise DomainError(f"unknown mode {mode!r}")


def rcasd_high_snr_delta(snr, sigma_x=1.0, eta=0.16):
    """Quartic-root approximation ``(6 kappa / snr)^(1/4)`` of the optimal Delta."""
    return (6.0 * rcasd_kappa(sigma_x, eta) / snr) ** 0.25


def rcasd_delta_exact(snr, sigma_x=1.0, eta=0.16):
    """Positive root of ``D^4/18 - sqrt(k) s^2 D / (3 snr) - k / (3 snr) = 0``."""
    k = rcasd_kappa(sigma_x, eta)

    def f(d):
        return d ** 4 / 18.0 - np.sqrt(k) * sigma_x ** 2 * d / (3 * snr) - k / (3 * snr)

    hi = 1.0
    while f(hi) < 0:
        hi *= 2.0
    return optimize.bisect(f, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=400)


def rcasd_alpha1_on_boundary(delta, alpha2, p_max=1.0, sigma_x=1.0, eta=0.16):
    """``alpha1`` that puts the RCASD exactly on the power constraint."""
    den = delta ** 2 * (2 * alpha2 ** 2 * p_max - sigma_x ** 2)
    if den <= 0:
        raise DomainError("alpha2 too small to meet the power constraint")
    return float(np.sqrt(alpha2 ** 2 * rcasd_kappa(sigma_x, eta) / den))
