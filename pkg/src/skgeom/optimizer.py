"""Power-constrained minimization of the analytical distortion of a mapping.

For a fixed channel SNR the total distortion ``eps_approx + eps_channel`` is
minimized over the fold spacing and the channel amplification factors
subject to ``P(params) <= p_max``.  Each of several Latin-hypercube starts
runs a Nelder-Mead descent on a quadratic penalty, the best candidate is
polished on the constraint boundary with SLSQP, and the KKT conditions are
reported.
"""

from __future__ import annotations

import types
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize
from scipy.stats import qmc

from .channel import worker_count
from .distortion import (approximation_distortion, channel_power, closed_form_weak_distortion,
                         from_db, second_order_channel_term, to_db)
from .errors import DomainError, InfeasibleError, SkGeomError
from .mappings import MappingParams, build_mapping

__all__ = ["OptProblem", "OptResult", "SweepPoint", "model_terms", "optimize_mapping", "sweep",
           "second_order_term"]

DEFAULT_BOUNDS = {"delta": (0.01, 3.0), "alpha1": (0.01, 50.0), "alpha2": (0.01, 50.0)}


@dataclass(frozen=True)
class OptProblem:
    """A per-SNR design problem.

    Parameters not listed in ``free`` are taken from ``base``.  ``variant``
    selects the Snail Surface channel model (``"exact"`` or ``"printed"``).
    """

    mapping: str
    base: MappingParams = field(default_factory=MappingParams)
    free: tuple = ("delta", "alpha1", "alpha2")
    bounds: dict = field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    p_max: float = 1.0
    sigma_x: float = 1.0
    variant: str = "exact"
    plus_half: bool = True
    n_starts: int = 16
    seed: int = 0
    workers: Optional[int] = None

    def __post_init__(self):
        if self.p_max <= 0 or self.sigma_x <= 0:
            raise DomainError("p_max and sigma_x must be positive")
        if self.n_starts < 1:
            raise DomainError("n_starts must be positive")
        for k in self.free:
            lo, hi = self.bounds[k]
            if not 0 < lo < hi:
                raise DomainError(f"bad bounds for {k}: {(lo, hi)}")

    def params(self, x) -> MappingParams:
        return self.base.with_(**{k: float(v) for k, v in zip(self.free, x)})


@dataclass(frozen=True)
class OptResult:
    params: MappingParams
    D: float
    eps_approx: float
    eps_ch: float
    power: float
    lam: float
    kkt_residual: float
    active: bool
    snr_db: float
    p_max: float = 1.0
    sigma_x: float = 1.0
    n_feasible_starts: int = 0

    @property
    def sdr_db(self):
        return float(to_db(self.sigma_x ** 2 / self.D))

    @property
    def slack(self):
        """Complementary slackness product ``lam (p_max - P)``."""
        return self.lam * (self.p_max - self.power)


def model_terms(problem: OptProblem, params: MappingParams, snr):
    """``(eps_approx, eps_channel, power)`` of the analytical model."""
    name = problem.mapping
    sigma_n = np.sqrt(problem.p_max / snr)
    ns = types.SimpleNamespace(name=name, params=params)
    ea = approximation_distortion(name, params.delta, problem.sigma_x)
    ec = closed_form_weak_distortion(ns, sigma_n, problem.sigma_x, problem.variant)
    P = channel_power(name, params, problem.sigma_x, problem.plus_half).P
    return ea, ec, P


def _log_bounds(problem):
    b = np.array([problem.bounds[k] for k in problem.free], dtype=float)
    return np.log(b[:, 0]), np.log(b[:, 1])


def _evaluate(problem, snr, y):
    lo, hi = _log_bounds(problem)
    y = np.clip(y, lo, hi)
    try:
        ea, ec, P = model_terms(problem, problem.params(np.exp(y)), snr)
    except (SkGeomError, ValueError, FloatingPointError):
        return np.inf, np.inf
    D = ea + ec
    return (D, P) if np.isfinite(D) and np.isfinite(P) else (np.inf, np.inf)


def _penalized_descent(problem, snr, y0, max_rounds=12):
    """Nelder-Mead on ``D + mu max(0, P - p_max)^2`` with escalating ``mu``."""
    lo, hi = _log_bounds(problem)
    pm = problem.p_max
    y = np.clip(np.asarray(y0, float), lo, hi)
    mu = 10.0
    D0, _ = _evaluate(problem, snr, y)
    scale = D0 if np.isfinite(D0) and D0 > 0 else 1.0
    for _ in range(max_rounds):
        def f(v, mu=mu):
            D, P = _evaluate(problem, snr, v)
            return D / scale + mu * max(0.0, P / pm - 1.0) ** 2

        res = optimize.minimize(f, y, method="Nelder-Mead", bounds=list(zip(lo, hi)),
                                options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 4000})
        y = np.clip(res.x, lo, hi)
        _, P = _evaluate(problem, snr, y)
        if P / pm - 1.0 < 1e-8:
            break
        mu *= 10.0
    D, P = _evaluate(problem, snr, y)
    return y, D, P


def _polish(problem, snr, y):
    """SLSQP on the log-parameters with the power constraint as an inequality."""
    lo, hi = _log_bounds(problem)
    pm = problem.p_max
    D0, _ = _evaluate(problem, snr, y)

    def f(v):
        return _evaluate(problem, snr, v)[0] / D0

    def c(v):
        return 1.0 - _evaluate(problem, snr, v)[1] / pm

    res = optimize.minimize(f, y, method="SLSQP", bounds=list(zip(lo, hi)),
                            constraints=[{"type": "ineq", "fun": c}],
                            options={"ftol": 1e-15, "maxiter": 500})
    yn = np.clip(res.x, lo, hi)
    Dn, Pn = _evaluate(problem, snr, yn)
    # the penalty stage may end marginally infeasible, so allow a tiny increase in D
    if np.isfinite(Dn) and Pn <= pm * (1 + 1e-9) and Dn <= D0 * (1 + 1e-6):
        return yn
    return y


def _grad(fun, y, h=1e-6):
    g = np.zeros_like(y)
    for i in range(len(y)):
        e = np.zeros_like(y)
        e[i] = h
        g[i] = (fun(y + e) - fun(y - e)) / (2 * h)
    return g


def _kkt(problem, snr, y):
    """Multiplier, relative stationarity residual and activity at ``y``."""
    lo, hi = _log_bounds(problem)
    pm = problem.p_max
    D, P = _evaluate(problem, snr, y)
    gD = _grad(lambda v: _evaluate(problem, snr, v)[0] / D, y)
    gP = _grad(lambda v: _evaluate(problem, snr, v)[1] / pm, y)
    # components sitting on a box bound are free to have a one-signed gradient
    at_lo, at_hi = y <= lo + 1e-9, y >= hi - 1e-9
    active = P >= pm * (1 - 1e-6)
    if active:
        mask = ~(at_lo | at_hi)
        lam = -float(gD[mask] @ gP[mask] / (gP[mask] @ gP[mask])) if mask.any() else 0.0
        lam = max(lam, 0.0)
    else:
        lam = 0.0
    r = gD + lam * gP
    r[at_lo] = np.minimum(r[at_lo], 0.0)
    r[at_hi] = np.maximum(r[at_hi], 0.0)
    # stationarity in log coordinates, relative to the objective
    resid = float(np.linalg.norm(r) / max(1.0, np.linalg.norm(gD)))
    return lam * D / pm, resid, bool(active)


def optimize_mapping(problem: OptProblem, snr_db: float, warm_start: Optional[MappingParams] = None) -> OptResult:
    """Minimize the analytical distortion at ``snr_db`` under the power constraint."""
    if not 0.0 <= snr_db <= 60.0:
        raise DomainError("snr_db must lie in [0, 60]")
    snr = float(from_db(snr_db))
    lo, hi = _log_bounds(problem)
    starts = lo + (hi - lo) * qmc.LatinHypercube(d=len(lo), seed=problem.seed).random(problem.n_starts)
    if warm_start is not None:
        w = np.log([getattr(warm_start, k) for k in problem.free])
        starts = np.vstack([np.clip(w, lo, hi), starts])
    # starts are pure-Python bound, so threads only help when asked for explicitly
    workers = min(problem.workers or 1, worker_count(), len(starts))
    run = lambda y0: _penalized_descent(problem, snr, y0)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            outs = list(ex.map(run, starts))
    else:
        outs = [run(y0) for y0 in starts]
    tol = problem.p_max * (1 + 1e-6)
    feas = [(D, tuple(y)) for y, D, P in outs if np.isfinite(D) and P <= tol]
    if not feas:
        raise InfeasibleError(f"{problem.mapping}: none of {len(starts)} starts met the power constraint")
    _, yb = min(feas)  # ties broken by lexicographic parameter order
    y = _polish(problem, snr, np.array(yb))
    params = problem.params(np.exp(y))
    ea, ec, P = model_terms(problem, params, snr)
    lam, resid, active = _kkt(problem, snr, y)
    return OptResult(params=params, D=ea + ec, eps_approx=ea, eps_ch=ec, power=P, lam=lam,
                     kkt_residual=resid, active=active, snr_db=float(snr_db),
                     p_max=problem.p_max, sigma_x=problem.sigma_x, n_feasible_starts=len(feas))


@dataclass(frozen=True)
class SweepPoint:
    snr_db: float
    result: Optional[OptResult]
    error: Optional[str] = None

    @property
    def sdr_db(self):
        return self.result.sdr_db if self.result is not None else float("nan")


def sweep(problem: OptProblem, snr_grid: Sequence[float]) -> list:
    """Optimize along a monotone SNR grid, warm-starting from the previous optimum.

    Failures are recorded in the returned points and the sweep continues.
    """
    grid = [float(s) for s in snr_grid]
    d = np.diff(grid)
    if len(grid) > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise DomainError("snr grid must be strictly monotone")
    out, warm = [], None
    for s in grid:
        try:
            r = optimize_mapping(problem, s, warm)
            warm = r.params
            out.append(SweepPoint(s, r))
        except SkGeomError as e:
            out.append(SweepPoint(s, None, f"{type(e).__name__}: {e}"))
    return out


def second_order_term(result: OptResult, mapping: str, p_max=1.0, sigma_x=1.0):
    """Curvature correction of the analytical model at an optimum (Monte-Carlo)."""
    m = build_mapping(mapping, result.params, sigma_x)
    if m.hess is None:
        return 0.0
    return second_order_channel_term(m, np.sqrt(p_max / from_db(result.snr_db)))
