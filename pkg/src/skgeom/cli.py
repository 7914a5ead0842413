"""Command-line front end.

Subcommands ``analyze``, ``optimize``, ``simulate``, ``sweep`` and
``baselines`` read an optional JSON experiment file (``--config``) whose
fields may be overridden by flags, and write plot-ready CSV.

Exit codes: 0 success, 1 I/O error, 2 usage error or partial failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Optional

import numpy as np

from .channel import SimConfig, run_simulation, worker_count
from .curves import CanalSurfaceSpec, ParametricCurve, canal_self_intersection_test, noise_tube_radius
from .distortion import (analytical_breakdown, bpam_sdr, channel_stats, from_db, opta_sdr,
                         principal_curvatures_vec, to_db)
from .errors import SkGeomError
from .mappings import MAPPING_NAMES, MappingParams, build_mapping
from .optimizer import OptProblem, second_order_term, sweep
from .surfaces import classify_surface

__all__ = ["ExperimentConfig", "SWEEP_COLUMNS", "load_config", "parse_snr_grid", "write_csv",
           "read_csv", "cmd_analyze", "cmd_optimize", "cmd_simulate", "cmd_sweep", "cmd_baselines",
           "curvature_summary", "main"]

SWEEP_COLUMNS = ("snr_db", "mapping", "delta", "alpha1", "alpha2", "extras", "sdr_analytical_db",
                 "sdr_simulated_db", "opta_db", "bpam_db", "anomaly_rate", "eps_approx", "eps_ch_weak",
                 "eps_ch_2nd")
_TEXT_COLUMNS = {"mapping", "extras"}


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative experiment record; every field but ``mapping`` has a default.

    ``params`` is either a dict of mapping parameters or ``"optimize"``.
    ``snr`` is ``(start, stop, step)`` or ``"start:stop:step"`` in dB with
    ``stop`` inclusive.
    """

    mapping: tuple
    params: object = "optimize"
    snr: tuple = (10.0, 40.0, 5.0)
    n_samples: int = 100_000
    seed: int = 0
    sigma_x: float = 1.0
    p_max: float = 1.0
    out: Optional[str] = None
    simulate: bool = True
    variant: str = "exact"
    M: int = 3
    N: int = 2

    def snr_grid(self):
        return parse_snr_grid(self.snr)


def parse_snr_grid(spec):
    """``"a:b:step"`` or ``(a, b, step)`` to a list of SNRs (``b`` inclusive)."""
    if isinstance(spec, str):
        parts = spec.split(":")
        if len(parts) == 1:
            parts = [parts[0], parts[0], "1"]
        if len(parts) != 3:
            raise UsageError(f"bad SNR grid {spec!r}; expected a:b:step")
        spec = parts
    try:
        a, b, step = (float(v) for v in spec)
    except (TypeError, ValueError):
        raise UsageError(f"bad SNR grid {spec!r}") from None
    if step <= 0:
        raise UsageError("SNR step must be positive")
    if b < a:
        return []
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return [round(a + i * step, 10) for i in range(n)]


def _mapping_tuple(v):
    if isinstance(v, str):
        v = [s for s in v.split(",") if s]
    names = tuple(str(s).lower() for s in v)
    for n in names:
        if n.replace("-", "_") not in MAPPING_NAMES:
            raise UsageError(f"unknown mapping {n!r}; choose from {', '.join(MAPPING_NAMES)}")
    return names


def load_config(path=None, overrides=None) -> ExperimentConfig:
    """Read a JSON experiment file and apply flag overrides."""
    data = {}
    if path:
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except json.JSONDecodeError as e:
            raise UsageError(f"config {path}: {e}") from None
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(data) - known
    if unknown:
        raise UsageError(f"unknown config fields: {sorted(unknown)}")
    if "mapping" not in data:
        raise UsageError("a mapping name is required")
    data["mapping"] = _mapping_tuple(data["mapping"])
    if "snr" in data and not isinstance(data["snr"], str):
        data["snr"] = tuple(data["snr"])
    parse_snr_grid(data.get("snr", ExperimentConfig.snr))
    p = data.get("params", "optimize")
    if p != "optimize":
        try:
            MappingParams.from_dict(p)
        except (SkGeomError, TypeError, AttributeError) as e:
            raise UsageError(f"invalid mapping params: {e}") from None
    if int(data.get("n_samples", 1000)) < 1000:
        raise UsageError("n_samples must be at least 1000")
    return ExperimentConfig(**data)


# CSV ---------------------------------------------------------------------------

def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return f"{float(v):.6g}"


def _round6(v):
    return None if v is None or not np.isfinite(v) else float(f"{float(v):.6g}")


def write_csv(rows, path=None, columns=SWEEP_COLUMNS):
    """Write dict rows with a header; ``path=None`` returns the text."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in columns])
    text = buf.getvalue()
    if path is None:
        return text
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    return text


def read_csv(path_or_text):
    """Parse a CSV written by :func:`write_csv` back into dict rows."""
    if "\n" in path_or_text:
        text = path_or_text
    else:
        with open(path_or_text, encoding="utf-8") as fh:
            text = fh.read()
    rd = csv.reader(io.StringIO(text))
    header = next(rd)
    rows = []
    for rec in rd:
        row = {}
        for k, v in zip(header, rec):
            row[k] = v if k in _TEXT_COLUMNS else (None if v == "" else float(v))
        rows.append(row)
    return rows


def _extras(name, p: MappingParams):
    default = MappingParams()
    keys = {"mscds": ("a", "alpha0", "B", "theta0"), "helicoid": ("R",), "snasu": ("phase", "psi")}.get(name, ())
    items = [f"{k}={getattr(p, k):.6g}" for k in keys if getattr(p, k) != getattr(default, k) or name == "mscds"]
    return ";".join(items)


# Geometry report -----------------------------------------------------------------

def curvature_summary(mapping, n=4000, seed=0):
    """Largest and density-weighted mean ``|kappa1|`` over typical channel points."""
    if mapping.name == "bpam":
        return 0.0, 0.0
    st = channel_stats(mapping)
    rng = np.random.default_rng(seed)
    z1, z2 = st[0].sampler(rng, n), st[1].sampler(rng, n)
    k1, k2 = principal_curvatures_vec(mapping, z1, z2)
    k = np.maximum(np.abs(k1), np.abs(k2))
    k = k[np.isfinite(k)]
    return float(k.max()), float(k.mean())


def _spine(mapping):
    """Positive ``z1`` coordinate curve through the bulk of channel two."""
    p = mapping.params
    z2 = -p.phase / p.alpha2 if mapping.name == "snasu" else 0.0
    s1 = np.sqrt(channel_stats(mapping)[0].variance)
    lo, hi = 0.05 * s1, min(3.0 * s1, mapping.z_domain[0][1])
    return ParametricCurve(lambda t: mapping.S(np.float64(t), np.float64(z2)), (lo, hi), dim=3)


def _resolve_params(cfg: ExperimentConfig, name, snr_db):
    if cfg.params != "optimize":
        return MappingParams.from_dict(cfg.params), None
    if name == "bpam":
        return None, None
    r = sweep(_problem(cfg, name), [snr_db])[0]
    if r.result is None:
        raise SkGeomError(r.error)
    return r.result.params, r.result


def _problem(cfg, name, base=None):
    return OptProblem(name, base=base or MappingParams(), p_max=cfg.p_max, sigma_x=cfg.sigma_x,
                      variant=cfg.variant, seed=cfg.seed)


def cmd_analyze(cfg: ExperimentConfig, out=None, grid_n=12, noise_radius=None):
    """Classification, curvature and canal-margin report plus a ``kappa1(Delta, alpha1)`` CSV."""
    out = out or sys.stdout
    snr_db = cfg.snr_grid()[0] if cfg.snr_grid() else 30.0
    sigma_n = float(np.sqrt(cfg.p_max / from_db(snr_db)))
    rows = []
    for name in cfg.mapping:
        params, _ = _resolve_params(cfg, name, snr_db)
        m = build_mapping(name, params, cfg.sigma_x)
        rep = classify_surface(m.surface, grid=16)
        kmax, kmean = curvature_summary(m)
        print(f"mapping: {name}", file=out)
        print("params: " + ", ".join(f"{k}={v:.6g}" for k, v in m.params.to_dict().items()), file=out)
        print(f"developable: {rep.developable}  minimal: {rep.minimal}  "
              f"lines_of_curvature: {rep.coords_are_LoC}  geodesic_coords: {rep.coords_are_geodesic}", file=out)
        print(f"max |kappa1|: {kmax:.6g}  mean |kappa1|: {kmean:.6g}", file=out)
        if name != "bpam":
            r = noise_radius if noise_radius is not None else noise_tube_radius(sigma_n, 2, 1.0)
            res = canal_self_intersection_test(CanalSurfaceSpec(_spine(m), r))
            print(f"canal margin at noise radius {r:.6g}: {res.worst_margin:.6g} "
                  f"({'safe' if res.safe else 'unsafe'})", file=out)
        base = m.params
        for d in np.linspace(0.2, 2.0, grid_n):
            for a1 in np.linspace(0.5, 10.0, grid_n):
                if name == "bpam":
                    kx, km = 0.0, 0.0
                else:
                    kx, km = curvature_summary(build_mapping(name, base.with_(delta=d, alpha1=a1)), n=1000)
                rows.append({"mapping": name, "delta": d, "alpha1": a1, "kappa1_max": kx, "kappa1_mean": km})
    if cfg.out:
        write_csv(rows, cfg.out, ("mapping", "delta", "alpha1", "kappa1_max", "kappa1_mean"))
    return rows


def cmd_optimize(cfg: ExperimentConfig, out=None):
    out = out or sys.stdout
    rows, failed = [], 0
    for name in cfg.mapping:
        if name == "bpam":
            continue
        for pt in sweep(_problem(cfg, name), cfg.snr_grid()):
            if pt.result is None:
                failed += 1
                print(f"{name} {pt.snr_db:g} dB failed: {pt.error}", file=sys.stderr)
                continue
            r = pt.result
            rows.append({"snr_db": pt.snr_db, "mapping": name, "delta": r.params.delta,
                         "alpha1": r.params.alpha1, "alpha2": r.params.alpha2, "D": r.D,
                         "sdr_db": r.sdr_db, "lam": r.lam, "kkt_residual": r.kkt_residual,
                         "active": float(r.active)})
    cols = ("snr_db", "mapping", "delta", "alpha1", "alpha2", "D", "sdr_db", "lam", "kkt_residual", "active")
    text = write_csv(rows, cfg.out, cols)
    if cfg.out is None:
        out.write(text)
    return rows, failed


def _sweep_rows(cfg: ExperimentConfig, simulate=True):
    """Rows of the sweep schema; failures are recorded as rows with empty results."""
    grid = cfg.snr_grid()
    jobs, failed = [], 0
    for name in cfg.mapping:
        if name == "bpam":
            for s in grid:
                jobs.append((s, name, build_mapping("bpam", sigma_x=cfg.sigma_x), None))
            continue
        if cfg.params != "optimize":
            p = MappingParams.from_dict(cfg.params)
            for s in grid:
                jobs.append((s, name, build_mapping(name, p, cfg.sigma_x), None))
            continue
        for pt in sweep(_problem(cfg, name), grid):
            if pt.result is None:
                failed += 1
                jobs.append((pt.snr_db, name, None, pt.error))
            else:
                jobs.append((pt.snr_db, name, build_mapping(name, pt.result.params, cfg.sigma_x), pt.result))

    def run(job):
        s, name, m, res = job
        row = {"snr_db": _round6(s), "mapping": name, "extras": "",
               "opta_db": _round6(to_db(opta_sdr(from_db(s), cfg.M, cfg.N))),
               "bpam_db": _round6(to_db(bpam_sdr(from_db(s), cfg.M, cfg.N, cfg.sigma_x)))}
        if m is None:
            return row, True
        p = m.params
        row.update(delta=_round6(p.delta), alpha1=_round6(p.alpha1), alpha2=_round6(p.alpha2),
                   extras=_extras(name, p))
        try:
            if name == "bpam":
                snr = from_db(s)
                total = 1.0 / bpam_sdr(snr, cfg.M, cfg.N, cfg.sigma_x) * cfg.sigma_x ** 2
                row.update(sdr_analytical_db=_round6(row["bpam_db"]), eps_approx=_round6(cfg.sigma_x ** 2 / 3),
                           eps_ch_weak=_round6(total - cfg.sigma_x ** 2 / 3), eps_ch_2nd=0.0)
            else:
                if res is None:
                    br = analytical_breakdown(m, from_db(s), cfg.sigma_x, cfg.p_max)
                    ea, ec, e2 = br.eps_approx, br.eps_ch_weak, br.eps_ch_2nd
                    sdr_an = to_db(cfg.sigma_x ** 2 / (ea + ec))
                else:
                    ea, ec = res.eps_approx, res.eps_ch
                    e2 = second_order_term(res, name, cfg.p_max, cfg.sigma_x)
                    sdr_an = res.sdr_db
                row.update(sdr_analytical_db=_round6(sdr_an), eps_approx=_round6(ea), eps_ch_weak=_round6(ec),
                           eps_ch_2nd=_round6(e2))
            if simulate and cfg.simulate:
                sim = run_simulation(SimConfig(m, s, cfg.sigma_x, cfg.n_samples, cfg.seed, p_max=cfg.p_max,
                                               workers=1))
                row.update(sdr_simulated_db=_round6(sim.sdr_db), anomaly_rate=_round6(sim.anomaly_rate))
        except SkGeomError as e:
            print(f"{name} {s:g} dB failed: {e}", file=sys.stderr)
            return row, True
        return row, False

    workers = min(worker_count(), max(1, len(jobs)))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    rows = [r for r, _ in results]
    failed = sum(1 for _, bad in results if bad)
    order = {n: i for i, n in enumerate(cfg.mapping)}
    rows.sort(key=lambda r: (r["snr_db"], order[r["mapping"]]))
    return rows, failed


def cmd_sweep(cfg: ExperimentConfig, out=None):
    """Optimize and simulate every mapping on the SNR grid; rows in SNR order."""
    out = out or sys.stdout
    rows, failed = _sweep_rows(cfg, simulate=True)
    text = write_csv(rows, cfg.out)
    if cfg.out is None:
        out.write(text)
    return rows, failed


def cmd_simulate(cfg: ExperimentConfig, out=None):
    """Simulate with given or optimized parameters (same schema as ``sweep``)."""
    out = out or sys.stdout
    return cmd_sweep(replace(cfg, simulate=True), out)


def cmd_baselines(cfg: ExperimentConfig, out=None):
    """OPTA and BPAM reference curves."""
    out = out or sys.stdout
    rows = []
    for s in cfg.snr_grid():
        snr = from_db(s)
        rows.append({"snr_db": s, "opta_db": to_db(opta_sdr(snr, cfg.M, cfg.N)),
                     "bpam_db": to_db(bpam_sdr(snr, cfg.M, cfg.N, cfg.sigma_x))})
    text = write_csv(rows, cfg.out, ("snr_db", "opta_db", "bpam_db"))
    if cfg.out is None:
        out.write(text)
    return rows, 0


# Entry point --------------------------------------------------------------------

def _parser():
    ap = argparse.ArgumentParser(prog="skgeom", description="Geometry, optimization and simulation of 3:2 analog mappings.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("analyze", "optimize", "simulate", "sweep", "baselines"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON experiment file")
        p.add_argument("--mapping", help="mapping name or comma-separated list")
        p.add_argument("--snr", help="SNR grid a:b:step in dB")
        p.add_argument("--samples", type=int, help="Monte-Carlo samples per point")
        p.add_argument("--seed", type=int, help="random seed (unsigned 64-bit)")
        p.add_argument("--out", help="output CSV path")
        p.add_argument("--params", help="mapping parameters as JSON, or 'optimize'")
        if name == "baselines":
            p.add_argument("--M", type=int, default=None)
            p.add_argument("--N", type=int, default=None)
        if name == "analyze":
            p.add_argument("--noise-radius", type=float, default=None)
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    ov = {"mapping": args.mapping, "out": args.out, "n_samples": args.samples, "seed": args.seed}
    if args.snr is not None:
        ov["snr"] = args.snr
    if args.params is not None:
        ov["params"] = args.params if args.params == "optimize" else None
        if args.params != "optimize":
            try:
                ov["params"] = json.loads(args.params)
            except json.JSONDecodeError as e:
                print(f"error: --params is not valid JSON: {e}", file=sys.stderr)
                return 2
    if args.command == "baselines":
        ov.setdefault("mapping", None)
        ov["mapping"] = ov["mapping"] or "bpam"
        ov["M"], ov["N"] = getattr(args, "M", None), getattr(args, "N", None)
    try:
        cfg = load_config(args.config, ov)
        if cfg.out:
            d = os.path.dirname(os.path.abspath(cfg.out))
            if not os.path.isdir(d) or not os.access(d, os.W_OK):
                raise OSError(f"cannot write to {cfg.out}")
        if args.command == "analyze":
            cmd_analyze(cfg, noise_radius=args.noise_radius)
            return 0
        fn = {"optimize": cmd_optimize, "simulate": cmd_simulate, "sweep": cmd_sweep,
              "baselines": cmd_baselines}[args.command]
        _, failed = fn(cfg)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SkGeomError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return 1
    return 2 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
