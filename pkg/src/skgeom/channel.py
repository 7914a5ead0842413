"""Monte-Carlo simulation of a 3:2 mapping over an AWGN channel.

Sources are projected onto the mapping surface (coarse nearest-node search
followed by Gauss-Newton refinement), Gaussian noise is added to the channel
symbols, and the receiver evaluates the surface at the clamped noisy point.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .distortion import (DistortionBreakdown, analytical_breakdown, channel_power, from_db,
                         to_db)
from .errors import DomainError, InternalInconsistencyError, SkGeomError
from .mappings import MappingSystem

__all__ = ["SimConfig", "SimResult", "Encoder", "encode", "decode", "run_simulation",
           "slope_estimate", "worker_count"]

ANOMALY_FACTOR = 3.0
_BLOCK = 8192


def worker_count(default=None):
    """Worker cap from ``SKGEOM_THREADS`` (falls back to ``default`` or the CPU count)."""
    env = os.environ.get("SKGEOM_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise DomainError(f"SKGEOM_THREADS must be an integer, got {env!r}") from None
    return default or min(8, os.cpu_count() or 1)


@dataclass(frozen=True)
class SimConfig:
    """Simulation settings.  ``snr_db = inf`` gives a noiseless channel."""

    mapping: MappingSystem
    snr_db: float
    sigma_x: float = 1.0
    n_samples: int = 100_000
    seed: int = 0
    grid_size: int = 96
    refine_iters: int = 20
    p_max: float = 1.0
    workers: Optional[int] = None

    def __post_init__(self):
        if self.n_samples < 1000:
            raise DomainError("n_samples must be at least 1000")
        if not (self.sigma_x > 0 and self.p_max > 0):
            raise DomainError("sigma_x and p_max must be positive")
        if self.grid_size < 4 or self.refine_iters < 0:
            raise DomainError("grid_size >= 4 and refine_iters >= 0 required")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    @property
    def sigma_n(self):
        if np.isinf(self.snr_db) and self.snr_db > 0:
            return 0.0
        return float(np.sqrt(self.p_max / from_db(self.snr_db)))


@dataclass(frozen=True)
class SimResult:
    snr_db: float
    sdr_db: float
    mse: float
    channel_power: tuple
    anomaly_rate: float
    breakdown: Optional[DistortionBreakdown]
    n_samples: int
    encoder_fail_rate: float = 0.0
    clamp_rate: float = 0.0
    extras: dict = field(default_factory=dict)

    @property
    def sdr_analytical_db(self):
        if self.breakdown is None:
            return float("nan")
        return float(to_db(self.breakdown.sdr(self.extras.get("sigma_x", 1.0))))


# Encoder ---------------------------------------------------------------------

def _axis_nodes(mapping, axis, n_min, spacing, n_probe=4097, n_lines=17, n_cap=20000):
    """Nodes along one channel axis with embedded spacing at most ``spacing``.

    Placement follows the upper envelope of the embedding speed over a set of
    probe lines, plus a uniform floor so that slow stretches still get nodes.
    """
    (lo1, hi1), (lo2, hi2) = mapping.z_domain
    lo, hi = (lo1, hi1) if axis == 0 else (lo2, hi2)
    olo, ohi = (lo2, hi2) if axis == 0 else (lo1, hi1)
    t = np.linspace(lo, hi, n_probe)
    env = np.zeros(n_probe - 1)
    for o in np.linspace(olo, ohi, n_lines):
        pts = mapping.S(t, np.full_like(t, o)) if axis == 0 else mapping.S(np.full_like(t, o), t)
        env = np.maximum(env, np.linalg.norm(np.diff(pts, axis=0), axis=1))
    total = env.sum()
    n = int(np.clip(np.ceil(1.25 * total / spacing) + 1, n_min, n_cap))
    if not np.isfinite(total) or total <= 0:
        return np.linspace(lo, hi, n)
    dens = env + 0.25 * total / len(env)
    cum = np.concatenate([[0.0], np.cumsum(dens)])
    return np.interp(np.linspace(0.0, cum[-1], n), cum, t)


class Encoder:
    """Nearest-point projection onto a mapping surface.

    The coarse stage queries a KD-tree of surface nodes placed on a tensor
    grid with at least ``grid_size`` nodes per axis and node spacing at most
    half the fold distance.  The three best distinct basins are refined by
    damped Newton / Gauss-Newton steps and the best result is kept.
    """

    def __init__(self, mapping: MappingSystem, grid_size=96, refine_iters=20, max_nodes=3_000_000):
        self.mapping = mapping
        self.refine_iters = refine_iters
        self.radial = bool(mapping.extras.get("radial", False))
        if mapping.name == "bpam":
            spacing = np.inf
        else:
            spacing = 0.5 * mapping.params.delta
        u1 = _axis_nodes(mapping, 0, grid_size, spacing)
        u2 = _axis_nodes(mapping, 1, grid_size, spacing)
        if self.radial:
            # every node of a z1 = 0 row maps to the same point and carries no z2 information
            u1 = u1[np.abs(u1) > 1e-9 * np.abs(u1).max()]
        while len(u1) * len(u2) > max_nodes:
            if len(u1) >= len(u2):
                u1 = u1[::2]
            else:
                u2 = u2[::2]
        self.u1, self.u2 = u1, u2
        Z1, Z2 = np.meshgrid(u1, u2, indexing="ij")
        self.nodes = np.stack([Z1.ravel(), Z2.ravel()], axis=-1)
        self.tree = cKDTree(mapping.S(Z1, Z2).reshape(-1, 3))
        self.shape = Z1.shape

    def _candidates(self, x, n_basins=3, k=16):
        k = min(k, len(self.nodes))
        _, idx = self.tree.query(x, k=k)
        idx = np.atleast_2d(idx)
        i1, i2 = np.unravel_index(idx, self.shape)
        chosen = np.repeat(idx[:, :1], n_basins, axis=1)
        c1, c2 = np.repeat(i1[:, :1], n_basins, axis=1), np.repeat(i2[:, :1], n_basins, axis=1)
        count = np.ones(len(x), dtype=int)
        slots = np.arange(n_basins)
        for j in range(1, k):
            near = (np.abs(c1 - i1[:, j:j + 1]) <= 1) & (np.abs(c2 - i2[:, j:j + 1]) <= 1)
            far = ~np.any(near & (slots < count[:, None]), axis=1)
            take = np.flatnonzero(far & (count < n_basins))
            col = count[take]
            chosen[take, col], c1[take, col], c2[take, col] = idx[take, j], i1[take, j], i2[take, j]
            count[take] += 1
        return self.nodes[chosen]  # (n, n_basins, 2)

    def _model(self, w, second):
        """Embedding, Jacobian and optional second derivatives in refinement coordinates.

        Radial mappings are refined in ``t = sign(z1) sqrt(|z1|)`` where the
        surface is smooth through ``z1 = 0``.
        """
        m = self.mapping
        if not self.radial:
            z = w
            S, J = m(z), m.jacobian(z)
            return z, S, J, (m.hess(z[:, 0], z[:, 1]) if second else None)
        t = np.where(np.abs(w[:, 0]) < 1e-150, 1e-150, w[:, 0])
        z = np.stack([t * np.abs(t), w[:, 1]], axis=-1)
        s1, s2 = m.jac(z[:, 0], z[:, 1])
        dz = 2 * np.abs(t)[:, None]
        J = np.stack([s1 * dz, s2], axis=-1)
        if not second:
            return z, m(z), J, None
        s11, s12, s22 = m.hess(z[:, 0], z[:, 1])
        h11 = s11 * dz ** 2 + s1 * 2 * np.sign(t)[:, None]
        return z, m(z), J, (h11, s12 * dz, s22)

    def _to_w(self, z):
        if not self.radial:
            return z.copy()
        return np.stack([np.sign(z[:, 0]) * np.sqrt(np.abs(z[:, 0])), z[:, 1]], axis=-1)

    def _clamp_w(self, w):
        (lo1, hi1), (lo2, hi2) = self.mapping.z_domain
        if self.radial:
            lo1, hi1 = -np.sqrt(-lo1), np.sqrt(hi1)
        return np.clip(w, [lo1, lo2], [hi1, hi2])

    def _embed(self, w):
        m = self.mapping
        if not self.radial:
            return m(w)
        return m(np.stack([w[:, 0] * np.abs(w[:, 0]), w[:, 1]], axis=-1))

    def refine(self, x, z):
        """Damped Newton / Gauss-Newton from ``z``; returns ``(z, sq_residual, converged)``.

        The full Newton matrix is used where it is positive definite and the
        Gauss-Newton matrix elsewhere; steps are halved until the residual
        does not increase.  Rows are dropped from the iteration once converged.
        """
        m = self.mapping
        w = self._clamp_w(self._to_w(m.clamp(z)[0]))
        second = m.hess is not None
        zc = np.empty_like(w)
        f = np.empty(len(x))
        conv = np.zeros(len(x), dtype=bool)
        tol = 1e-8 * (1.0 + np.linalg.norm(x, axis=-1))
        act = np.arange(len(x))
        for it in range(self.refine_iters + 1):
            xa, wa = x[act], w[act]
            za, S, J, H = self._model(wa, second and it < self.refine_iters)
            zc[act] = za
            r = xa - S
            fa = np.sum(r * r, axis=-1)
            f[act] = fa
            grad = np.matmul(r[:, None, :], J)[:, 0]
            # the attainable gradient floor grows with |J|
            jn = np.maximum(1.0, np.linalg.norm(J, axis=(1, 2)))
            ca = np.linalg.norm(grad, axis=-1) < tol[act] * jn
            conv[act] = ca
            if it == self.refine_iters:
                break
            keep = ~ca
            act, xa, wa, fa = act[keep], xa[keep], wa[keep], fa[keep]
            if act.size == 0:
                break
            J, r, grad = J[keep], r[keep], grad[keep]
            A = np.matmul(J.transpose(0, 2, 1), J)
            if second:
                h11, h12, h22 = (np.sum(r * h[keep], axis=-1) for h in H)
                N = A - np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)
                pd = (N[:, 0, 0] > 0) & (np.linalg.det(N) > 0)
                A[pd] = N[pd]
            A += (1e-12 * np.trace(A, axis1=1, axis2=2) + 1e-300)[:, None, None] * np.eye(2)
            step = np.linalg.solve(A, grad[..., None])[..., 0]
            todo = np.ones(len(act), dtype=bool)
            for _h in range(12):
                sub = np.flatnonzero(todo)
                wn = self._clamp_w(wa[sub] + step[sub])
                rn = xa[sub] - self._embed(wn)
                fn = np.sum(rn * rn, axis=-1)
                ok = fn <= fa[sub]
                wa[sub[ok]] = wn[ok]
                todo[sub[ok]] = False
                if not todo.any():
                    break
                step *= 0.5
            w[act] = wa
        zc = m.clamp(zc)[0]
        return zc, f, conv | self._on_boundary(zc)

    def _on_boundary(self, z):
        (lo1, hi1), (lo2, hi2) = self.mapping.z_domain
        return (z[:, 0] <= lo1) | (z[:, 0] >= hi1) | (z[:, 1] <= lo2) | (z[:, 1] >= hi2)

    def __call__(self, x):
        """Project sources ``x`` (shape ``(n, 3)``); returns ``(z, ok)``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if not np.all(np.isfinite(x)):
            raise DomainError("source vectors must be finite")
        cand = self._candidates(x)
        nb = cand.shape[1]
        z, f, ok = self.refine(np.repeat(x, nb, axis=0), cand.reshape(-1, 2).copy())
        f = f.reshape(-1, nb)
        best = np.argmin(f, axis=1)
        rows = np.arange(len(x))
        return z.reshape(-1, nb, 2)[rows, best], ok.reshape(-1, nb)[rows, best]


def encode(mapping: MappingSystem, x, grid_size=96, refine_iters=20):
    """Project one source vector or an ``(n, 3)`` batch onto the mapping."""
    x = np.asarray(x, dtype=float)
    z, ok = Encoder(mapping, grid_size, refine_iters)(x.reshape(-1, 3))
    if x.ndim == 1:
        return z[0], bool(ok[0])
    return z, ok


def decode(mapping: MappingSystem, z_received, sigma_n=0.0, sigma_x=1.0):
    """Reconstruct ``S(z)`` at the clamped received point; returns ``(x_hat, clamped)``.

    The linear baseline uses the linear MMSE estimate instead.
    """
    z = np.asarray(z_received, dtype=float)
    zc, clamped = mapping.clamp(z)
    xh = mapping(zc)
    if mapping.name == "bpam" and sigma_n > 0:
        g2 = np.array([mapping.params.alpha1, mapping.params.alpha2]) ** 2 * sigma_x ** 2
        shrink = g2 / (g2 + sigma_n ** 2)
        xh = xh * np.concatenate([shrink, [1.0]])
    return xh, clamped


# Simulation --------------------------------------------------------------------

def _block_rng(seed, block):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, block])))


def _run_block(cfg: SimConfig, enc: Encoder, block, size):
    rng = _block_rng(cfg.seed, block)
    x = rng.normal(0.0, cfg.sigma_x, (size, 3))
    noise = rng.normal(0.0, 1.0, (size, 2)) * cfg.sigma_n
    z, ok = enc(x)
    m = cfg.mapping
    xh, clamped = decode(m, z + noise, cfg.sigma_n, cfg.sigma_x)
    err = np.sum((x - xh) ** 2, axis=-1)
    if not np.all(np.isfinite(err)):
        bad = int(np.flatnonzero(~np.isfinite(err))[0])
        raise InternalInconsistencyError(f"non-finite error for sample {block * _BLOCK + bad}")
    if cfg.sigma_n > 0 and m.name != "bpam":
        # linear prediction of the realized displacement, taken in the encoder's
        # coordinates where radial surfaces are regular through z1 = 0
        w0 = enc._to_w(z)
        _, s0, J, _ = enc._model(w0, False)
        dw = enc._to_w(m.clamp(z + noise)[0]) - w0
        lin = np.sum(np.einsum("nij,nj->ni", J, dw) ** 2, axis=-1)
        anom = np.sum((xh - s0) ** 2, axis=-1) > ANOMALY_FACTOR * lin + 1e-300
    else:
        anom = np.zeros(size, dtype=bool)
    return np.array([err.sum(), *(z ** 2).sum(axis=0), anom.sum(), (~ok).sum(), clamped.sum()])


def run_simulation(config: SimConfig, encoder: Optional[Encoder] = None) -> SimResult:
    """Estimate the SDR of a mapping at one channel SNR.

    Samples are processed in fixed blocks whose random streams depend only
    on ``(seed, block index)``, so results do not depend on the worker count.
    """
    cfg = config
    m = cfg.mapping
    enc = encoder or Encoder(m, cfg.grid_size, cfg.refine_iters)
    n_blocks = -(-cfg.n_samples // _BLOCK)
    sizes = [min(_BLOCK, cfg.n_samples - b * _BLOCK) for b in range(n_blocks)]
    workers = min(worker_count(cfg.workers), n_blocks)
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            parts = list(ex.map(lambda b: _run_block(cfg, enc, b, sizes[b]), range(n_blocks)))
    else:
        parts = [_run_block(cfg, enc, b, sizes[b]) for b in range(n_blocks)]
    tot = np.sum(np.stack(parts), axis=0)  # pairwise summation in block order
    n = cfg.n_samples
    mse = tot[0] / n
    sdr = cfg.sigma_x ** 2 * m.M / tot[0] * n
    power = (tot[1] / n, tot[2] / n)
    breakdown = None
    snr = from_db(cfg.snr_db)
    if np.isfinite(snr) and m.name != "helicoid_arclength":
        try:
            breakdown = analytical_breakdown(m, snr, cfg.sigma_x, cfg.p_max, second_order=False)
        except SkGeomError:  # analytical model outside its range
            breakdown = None
    model = None
    if m.name != "bpam" and m.name != "helicoid_arclength":
        try:
            model = channel_power(m, sigma_x=cfg.sigma_x).P
        except DomainError:  # user-defined mapping without a channel model
            model = None
    if model is not None:
        emp = 0.5 * (power[0] + power[1])
        if abs(emp / model - 1.0) > 0.05:
            warnings.warn(f"{m.name}: empirical power {emp:.4g} differs from model {model:.4g} by more than 5%",
                          stacklevel=2)
    return SimResult(
        snr_db=float(cfg.snr_db), sdr_db=float(to_db(sdr)), mse=float(mse), channel_power=power,
        anomaly_rate=float(tot[3] / n), breakdown=breakdown, n_samples=n,
        encoder_fail_rate=float(tot[4] / n), clamp_rate=float(tot[5] / n),
        extras={"sigma_x": float(cfg.sigma_x)},
    )


def slope_estimate(results: Sequence, min_points=4, min_span_db=15.0):
    """Least-squares slope of SDR (dB) against SNR (dB) over the top half of the grid.

    ``results`` holds :class:`SimResult` objects or ``(snr_db, sdr_db)`` pairs.
    """
    pts = [(r.snr_db, r.sdr_db) if isinstance(r, SimResult) else tuple(r) for r in results]
    pts = sorted((float(a), float(b)) for a, b in pts)
    if len(pts) < min_points or pts[-1][0] - pts[0][0] < min_span_db:
        raise DomainError(f"need at least {min_points} points spanning {min_span_db} dB")
    top = np.array(pts[len(pts) // 2:])
    return float(np.polyfit(top[:, 0], top[:, 1], 1)[0])
