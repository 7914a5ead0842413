"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -v``; the verdicts are repeated in
the terminal summary under "acceptance criteria".
"""

import json
import time

import numpy as np
import pytest

from conftest import circle, helix, record
from skgeom import cli
from skgeom.channel import Encoder, SimConfig, run_simulation, slope_estimate
from skgeom.curves import CanalSurfaceSpec, canal_self_intersection_test, curvature, noise_tube_radius, torsion
from skgeom.distortion import (channel_stats, closed_form_weak_distortion, curvature_correction_ratio, from_db,
                               opta_sdr, bpam_sdr, second_order_channel_term, to_db,
                               weak_channel_distortion_integral)
from skgeom.mappings import MappingParams, build_mapping
from skgeom.optimizer import OptProblem, optimize_mapping, sweep
from skgeom.surfaces import (ParametricSurface, classify_surface, cylinder, metric_tensor, plane,
                             principal_curvatures, second_fundamental_form, sphere)

pytestmark = pytest.mark.filterwarnings("ignore:.*empirical power")


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _fd(surface):
    """The same embedding with every derivative taken numerically."""
    return ParametricSurface(surface.func, surface.domain)


# 1 -----------------------------------------------------------------------------

def test_criterion_1_geometry_oracles():
    t0 = time.perf_counter()
    worst = 0.0

    def check(val, ref, abs_floor=0.0):
        nonlocal worst
        err = abs(val - ref) if ref == 0 else _rel(val, ref)
        worst = max(worst, err if ref != 0 else (err if err > abs_floor else 0.0))

    for r, c in [(1.0, 0.5), (2.0, 1.0), (0.5, 2.0), (1.0, 0.0001)]:
        for analytic in (True, False):
            cur = helix(r, c, analytic)
            for t in (-1.0, 0.4, 2.2):
                check(curvature(cur, t), r / (r * r + c * c))
                check(torsion(cur, t), c / (r * r + c * c))
    pts = [(0.7, 0.3), (1.4, -1.2), (2.3, 2.0)]
    for surf_fn, kind, rr in [(plane, "plane", None), (sphere, "sphere", 1.0), (sphere, "sphere", 2.0),
                              (cylinder, "cylinder", 1.0), (cylinder, "cylinder", 2.0)]:
        base = surf_fn() if rr is None else surf_fn(rr)
        for s in (base, _fd(base)):
            for u in pts:
                f = second_fundamental_form(s, u)
                rep = principal_curvatures(f)
                if kind == "plane":
                    G, B, k = np.eye(2), np.zeros((2, 2)), (0.0, 0.0)
                elif kind == "sphere":
                    G = np.diag([rr ** 2, (rr * np.sin(u[0])) ** 2])
                    B, k = G / rr, (1 / rr, 1 / rr)
                else:
                    G = np.diag([rr ** 2, 1.0])
                    B, k = np.diag([rr, 0.0]), (1 / rr, 0.0)
                sgn = 1.0 if np.sum(f.B * B) >= 0 else -1.0  # normal orientation is a convention
                for i in range(2):
                    for j in range(2):
                        check(f.G[i, j], G[i, j], 1e-7)
                        check(sgn * f.B[i, j], B[i, j], 1e-7)
                check(sgn * rep.kappa1, k[0], 1e-7)
                check(sgn * rep.kappa2, k[1], 1e-7)
                check(rep.K, k[0] * k[1], 1e-7)
                check(sgn * rep.H, 0.5 * (k[0] + k[1]), 1e-7)
    dt = time.perf_counter() - t0
    ok = worst <= 1e-5 and dt < 10
    assert record(1, ok, f"worst relative error {worst:.2e} (tol 1e-5), {dt:.1f} s (limit 10 s)")


# 2 -----------------------------------------------------------------------------

P_RCASD = MappingParams(delta=0.6072, alpha1=5.5433, alpha2=2.0439)
P_SNASU = MappingParams(delta=0.4891, alpha1=2.7486, alpha2=2.0384)
P_HELIX = MappingParams(delta=0.6296, alpha1=2.4679, alpha2=3.8982)
P_MSCDS = MappingParams(delta=0.569, alpha1=6.023, alpha2=1.821, a=0.3, B=1.2)


def test_criterion_2_classification():
    t0 = time.perf_counter()
    rc = classify_surface(build_mapping("rcasd", P_RCASD).surface, grid=16, tol=1e-6)
    he = classify_surface(build_mapping("helicoid", P_HELIX).surface, grid=16, tol=1e-6)
    sn = classify_surface(build_mapping("snasu", P_SNASU).surface, grid=16, tol=1e-6)
    dt = time.perf_counter() - t0
    got = {
        "rcasd developable": rc.developable, "rcasd LoC": rc.coords_are_LoC,
        "helicoid minimal": he.minimal, "helicoid not developable": not he.developable,
        "snasu not LoC": not sn.coords_are_LoC, "snasu not geodesic": not sn.coords_are_geodesic,
    }
    ok = all(got.values()) and dt < 5
    assert record(2, ok, ", ".join(f"{k}={v}" for k, v in got.items()) + f", {dt:.1f} s (limit 5 s)")


# 3 -----------------------------------------------------------------------------

def _spiral(p, z1):
    c2 = p.alpha1 / (p.eta * p.delta)
    phi = np.sqrt(c2 * abs(z1))
    return phi, c2 / (2 * phi)


def test_criterion_3_formula_regression():
    t0 = time.perf_counter()
    form_err, dist_err, lines = 0.0, 0.0, []
    zs = [(0.8, 0.3), (2.2, -0.6), (-1.5, 0.4)]

    def forms(name, p, closed_g, closed_b11=None):
        nonlocal form_err
        m = build_mapping(name, p)
        for z in zs:
            f = second_fundamental_form(_fd(m.surface), z)
            g11, g22 = closed_g(z)
            form_err = max(form_err, _rel(f.g11, g11), _rel(f.g22, g22), abs(f.g12) / np.sqrt(g11 * g22))
            if closed_b11 is not None:
                form_err = max(form_err, _rel(abs(f.b11), abs(closed_b11(z))),
                               abs(f.b12) / np.sqrt(g11 * g22), abs(f.b22) / np.sqrt(g11 * g22))
            # the implemented second form with analytic derivatives
            fa = second_fundamental_form(m.surface, z)
            sgn = 1.0 if np.sum(fa.B * f.B) >= 0 else -1.0
            form_err = max(form_err, np.abs(sgn * fa.B - f.B).max() / np.abs(f.B).max())

    p = P_HELIX
    k = p.R / np.pi
    forms("helicoid", p, lambda z: ((k * p.alpha1) ** 2,
                                    (k * p.alpha1 * p.alpha2 * z[0]) ** 2 + (p.delta * p.alpha2 / np.pi) ** 2))
    p = P_RCASD
    a = p.delta / np.pi
    forms("rcasd", p, lambda z: ((a * _spiral(p, z[0])[1]) ** 2 * (1 + _spiral(p, z[0])[0] ** 2), p.alpha2 ** 2),
          lambda z: a * _spiral(p, z[0])[1] ** 2 * (2 + _spiral(p, z[0])[0] ** 2)
          / np.sqrt(1 + _spiral(p, z[0])[0] ** 2))
    p = P_MSCDS

    def g_ms(z):
        phi, dphi = _spiral(p, z[0])
        bt = p.delta / np.pi * (p.alpha0 - phi) + p.a * (p.alpha2 * z[1]) ** 2
        return (bt * dphi) ** 2, p.B ** 2 * p.alpha2 ** 2 + 4 * p.a ** 2 * p.alpha2 ** 4 * z[1] ** 2
    forms("mscds", p, g_ms)
    p = P_SNASU
    a2 = 2 * p.delta / np.pi

    def g_sn(z):
        phi, dphi = _spiral(p, z[0])
        return ((a2 * dphi) ** 2 * (1 + phi ** 2 * np.cos(p.alpha2 * z[1] + p.phase) ** 2),
                (a2 * p.alpha2 * phi) ** 2)
    forms("snasu", p, g_sn)
    lines.append(f"forms {form_err:.1e}")

    # first-order channel distortion: closed form against the numeric expectation of trace(G)
    sn = np.sqrt(1e-3)
    for name, p in [("helicoid", P_HELIX), ("rcasd", P_RCASD), ("snasu", P_SNASU)]:
        m = build_mapping(name, p)
        cut = sn if name == "rcasd" else 0.0
        num = weak_channel_distortion_integral(m, sigma_n=sn, z_cut=cut)
        e = _rel(closed_form_weak_distortion(m, sn), num)
        dist_err = max(dist_err, e)
        lines.append(f"{name} distortion {100 * e:.2f}%")

    # channel powers: closed forms against encoded Gaussian sources (10^6 samples)
    for name, p, chans in [("mscds", P_MSCDS, (1,)), ("snasu", P_SNASU, (0, 1))]:
        m = build_mapping(name, p)
        emp = run_simulation(SimConfig(m, np.inf, n_samples=1_000_000, seed=5)).channel_power
        stats = channel_stats(name, p)
        for ch in chans:
            e = _rel(stats[ch].variance, emp[ch])
            dist_err = max(dist_err, e)
            lines.append(f"{name} power ch{ch + 1} {100 * e:.2f}%")
    dt = time.perf_counter() - t0
    ok = form_err <= 1e-6 and dist_err <= 0.03 and dt < 120
    assert record(3, ok, "; ".join(lines) + f"; {dt:.0f} s (limit 120 s)")


# 4 -----------------------------------------------------------------------------

def test_criterion_4_optimized_parameters():
    t0 = time.perf_counter()
    rc = optimize_mapping(OptProblem("rcasd"), 30.0).params
    sn = optimize_mapping(OptProblem("snasu"), 30.0).params
    dt = time.perf_counter() - t0
    checks = [("rcasd delta", rc.delta, 0.608), ("rcasd alpha1", rc.alpha1, 3.33),
              ("snasu delta", sn.delta, 0.539), ("snasu alpha1", sn.alpha1, 4.76), ("snasu alpha2", sn.alpha2, 2.57)]
    parts = [f"{k} {v:.4g} vs {ref} ({100 * (v / ref - 1):+.1f}%)" for k, v, ref in checks]
    ok = all(_rel(v, ref) <= 0.10 for _, v, ref in checks) and dt < 120
    assert record(4, ok, "; ".join(parts) + f"; {dt:.0f} s (limit 120 s)")


# 5 -----------------------------------------------------------------------------

def _optimized_sim(name, grid, n=100_000):
    out = []
    for pt in sweep(OptProblem(name), grid):
        m = build_mapping(name, pt.result.params)
        out.append(run_simulation(SimConfig(m, pt.snr_db, n_samples=n, seed=0)))
    return out


@pytest.mark.slow
def test_criterion_5_high_snr_slopes():
    t0 = time.perf_counter()
    grid = [10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0]
    rc = _optimized_sim("rcasd", grid)
    sn = _optimized_sim("snasu", grid[:7])
    bp_m = build_mapping("bpam")
    bp = [run_simulation(SimConfig(bp_m, s, n_samples=100_000, seed=0)) for s in grid[2:]]
    # the top half of a 20..50 grid is 35..50; of a 10..40 grid it is 25..40
    s_rc = slope_estimate(rc[2:])
    s_bp = slope_estimate(bp)
    s_rc_mid = slope_estimate(rc[:7])
    s_sn_mid = slope_estimate(sn)
    hi = [35.0, 40.0, 45.0, 50.0]
    s_opta = float(np.polyfit(hi, to_db(opta_sdr(from_db(np.array(hi)))), 1)[0])
    dt = time.perf_counter() - t0
    ok = (abs(s_rc - 0.5) <= 0.05 and abs(s_bp) <= 0.05 and abs(s_opta - 2 / 3) <= 1e-3
          and s_sn_mid > s_rc_mid and dt < 900)
    assert record(5, ok, f"rcasd {s_rc:.3f} (0.5+-0.05), bpam {s_bp:.3f} (0+-0.05), opta {s_opta:.4f} (2/3), "
                         f"snasu {s_sn_mid:.3f} > rcasd {s_rc_mid:.3f} over 25-40 dB; {dt:.0f} s (limit 900 s)")


# 6 -----------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_6_simulation_matches_theory():
    grid = [25.0, 30.0, 35.0, 40.0, 45.0, 50.0]
    worst, parts = 0.0, []
    for name in ("helicoid", "rcasd", "snasu"):
        pts = sweep(OptProblem(name), grid)
        gaps = []
        for pt in pts:
            m = build_mapping(name, pt.result.params)
            sim = run_simulation(SimConfig(m, pt.snr_db, n_samples=100_000, seed=0))
            gaps.append(sim.sdr_db - pt.result.sdr_db)
        worst = max(worst, max(abs(g) for g in gaps))
        parts.append(f"{name} " + " ".join(f"{g:+.2f}" for g in gaps))
    ok = worst <= 1.0
    assert record(6, ok, "sim minus analytical dB at 25..50 dB: " + "; ".join(parts) + f"; worst {worst:.2f} (tol 1)")


# 7 -----------------------------------------------------------------------------

def test_criterion_7_curvature_correction_scaling():
    ratio = curvature_correction_ratio(1.0, 1.0, 1e-3)
    # the same ratio measured on an optimized spiral at sigma_n^2 = 1e-3
    m = build_mapping("rcasd", P_RCASD)
    sn = np.sqrt(1e-3)
    mc = second_order_channel_term(m, sn, n=20000, seed=0) / closed_form_weak_distortion(m, sn)
    ok = 1e-3 / 3 <= ratio <= 3e-3
    assert record(7, ok, f"ratio {ratio:.2e} at kappa=1, g=1 (target 1e-3 within x3); "
                         f"optimized spiral {mc:.2e} for reference")


# 8 -----------------------------------------------------------------------------

def test_criterion_8_canal_surface():
    worst = 0.0
    for rho in (0.5, 1.0, 2.5):
        spine = circle(rho)
        lo, hi = 0.5 * rho, 1.5 * rho
        assert canal_self_intersection_test(CanalSurfaceSpec(spine, lo)).safe
        assert not canal_self_intersection_test(CanalSurfaceSpec(spine, hi)).safe
        while hi - lo > 1e-9 * rho:
            mid = 0.5 * (lo + hi)
            if canal_self_intersection_test(CanalSurfaceSpec(spine, mid), samples=64).safe:
                lo = mid
            else:
                hi = mid
        worst = max(worst, abs(0.5 * (lo + hi) - rho) / rho)
    exact = all(noise_tube_radius(s, n, b) == np.sqrt((n - 1) / n * b * s ** 2)
                for s in (0.0, 0.1, 1.0, 3.0) for n in (2, 3, 5) for b in (0.5, 1.0, 4.0))
    ok = worst <= 1e-6 and exact and noise_tube_radius(1.0, 2, 4.0) == np.sqrt(2.0)
    assert record(8, ok, f"transition error {worst:.1e} relative (tol 1e-6); noise radius exact={exact}")


# 9 -----------------------------------------------------------------------------

def test_criterion_9_determinism(tmp_path, monkeypatch):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"mapping": ["rcasd", "snasu", "bpam"], "snr": "30:35:5", "n_samples": 5000,
                               "seed": 123}))
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    monkeypatch.setenv("SKGEOM_THREADS", "1")
    ca = cli.main(["sweep", "--config", str(cfg), "--out", str(a)])
    monkeypatch.setenv("SKGEOM_THREADS", "4")
    cb = cli.main(["sweep", "--config", str(cfg), "--out", str(b)])
    same = a.read_bytes() == b.read_bytes()
    ok = ca == 0 and cb == 0 and same
    assert record(9, ok, f"two sweeps (1 and 4 threads) byte-identical={same}, "
                         f"{len(a.read_text().splitlines()) - 1} rows")
