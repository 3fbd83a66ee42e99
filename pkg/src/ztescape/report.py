"""Run rate methods on a parameter point or sweep and write comparison reports."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bath import BathSpec
from .config import EXIT_OK, EXIT_PARTIAL, ExperimentConfig, soft_warnings
from .errors import EscapeError
from .fpsolver import (EnergyDistribution, EnergyGrid, build_operator, evolve, rate_fp_numeric,
                       write_profile_csv)
from .langevin import EnsembleConfig, ensemble_run, write_survival_csv
from .model import well_from_barrier
from .rates import (METHODS, RateResult, kramers_flux, rate_asymptotic, rate_laguerre_root,
                    rate_perturbative, tunneling_rate_env, tunneling_rate_isolated)

log = logging.getLogger(__name__)

ACTIVATION_PREFERENCE = ("asymptotic", "perturbative", "laguerre_root", "kramers_quadrature",
                         "fp_numeric", "langevin_mc")
TUNNEL_PREFERENCE = ("tunnel_isolated", "tunnel_env")
MC_DEFAULT_SPAN = 400.0  # observation window after burn-in, in units of 1/Omega0


@dataclass
class ComparisonReport:
    """Per-method results for one ``(ys, gamma)`` point.

    ``errors`` maps methods that failed to their messages; every requested method
    appears in exactly one of ``results`` and ``errors``.
    """

    config: ExperimentConfig
    ys: float
    gamma: float
    results: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.errors else EXIT_OK

    def ratios(self) -> dict:
        """``rate_a/rate_b`` for every ordered pair of completed methods with ``rate_b > 0``."""
        out = {}
        done = [m for m in METHODS if m in self.results]
        for a in done:
            for b in done:
                if a != b and self.results[b].rate > 0.0:
                    out[f"{a}/{b}"] = self.results[a].rate / self.results[b].rate
        return out

    def activation_over_tunnel(self) -> Optional[float]:
        act = next((m for m in ACTIVATION_PREFERENCE if m in self.results), None)
        tun = next((m for m in TUNNEL_PREFERENCE if m in self.results), None)
        if act is None or tun is None or self.results[tun].rate == 0.0:
            return None
        return self.results[act].rate / self.results[tun].rate

    def to_json_dict(self, timestamp: Optional[str] = None) -> dict:
        omega0 = self.config.omega0
        methods = {}
        for m in self.config.methods:
            if m in self.results:
                entry = self.results[m].as_dict()
                entry["rate_over_omega0"] = self.results[m].rate / omega0
                entry["status"] = "ok"
            else:
                entry = {"method": m, "status": "error", "error": self.errors[m]}
            methods[m] = entry
        return _clean({
            "version": __version__,
            "timestamp": timestamp or datetime.now(timezone.utc).isoformat(),
            "config": {k: v for k, v in self.config.as_dict().items() if k not in ("out", "workers")},
            "config_hash": self.config.config_hash(),
            "seed": self.config.seed,
            "point": {"ys": self.ys, "gamma_over_omega0": self.gamma, "gamma": self.gamma * omega0},
            "results": methods,
            "ratios": self.ratios(),
            "warnings": self.warnings,
            "status": "partial" if self.errors else "ok",
        })

    def rates_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "rate", "rbar", "lo", "hi"])
        for m in self.config.methods:
            if m not in self.results:
                continue
            r = self.results[m]
            lo, hi = r.interval if r.interval is not None else (None, None)
            w.writerow([m] + [_fmt(v) for v in (r.rate, r.rbar, lo, hi)])
        return buf.getvalue()


def _fmt(value) -> str:
    return "" if value is None else repr(float(value))


def _clean(obj):
    """Make ``obj`` strictly JSON-serialisable (numpy scalars, tuples, non-finite floats)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else str(value)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _atomic_via(path, writer, *args) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    os.close(fd)
    try:
        writer(tmp, *args)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _mc_config(cfg: ExperimentConfig, ys: float, gamma: float) -> EnsembleConfig:
    well = well_from_barrier(ys, cfg.mass, cfg.omega0, cfg.hbar)
    bath = BathSpec.from_gamma(gamma * cfg.omega0, cfg.mass, omega_c=cfg.cutoff * cfg.omega0)
    burn = 3.0 / (gamma * cfg.omega0)
    t_max = cfg.t_max if cfg.t_max is not None else burn + MC_DEFAULT_SPAN / cfg.omega0
    return EnsembleConfig(well, bath, cfg.ntraj, t_max, seed=cfg.seed, mode=cfg.mc_mode)


def compute_method(method: str, cfg: ExperimentConfig, ys: float, gamma: float):
    """One method at one point; returns ``(RateResult, extras)``."""
    g = gamma * cfg.omega0
    if method == "asymptotic":
        return rate_asymptotic(ys, g), {}
    if method == "perturbative":
        return rate_perturbative(ys, g), {}
    if method == "laguerre_root":
        return rate_laguerre_root(ys, g), {}
    if method == "kramers_quadrature":
        return kramers_flux(ys, g), {}
    if method == "fp_numeric":
        return rate_fp_numeric(ys, g, cfg.grid_cells), {}
    if method == "tunnel_isolated":
        return tunneling_rate_isolated(ys, cfg.omega0), {}
    if method == "tunnel_env":
        return tunneling_rate_env(ys, gamma, cfg.omega0), {}
    if method == "langevin_mc":
        run = ensemble_run(_mc_config(cfg, ys, gamma))
        return run.rate, {"ensemble": run}
    raise ValueError(f"unknown method {method!r}")


def evaluate_point(cfg: ExperimentConfig, ys: float, gamma: float) -> ComparisonReport:
    """Run every requested method, collecting failures instead of raising."""
    point = cfg.at(ys, gamma)
    report = ComparisonReport(point, ys, gamma, warnings=soft_warnings(ys, gamma))
    for m in cfg.methods:
        try:
            result, extras = compute_method(m, point, ys, gamma)
        except (EscapeError, ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("method %s failed at ys=%s gamma=%s: %s", m, ys, gamma, exc)
            report.errors[m] = f"{type(exc).__name__}: {exc}"
            continue
        report.results[m] = result
        report.extras.update(extras)
    return report


def write_point(report: ComparisonReport, out_dir, timestamp: Optional[str] = None) -> None:
    out_dir = Path(out_dir)
    data = report.to_json_dict(timestamp)
    atomic_write(out_dir / "report.json", json.dumps(data, sort_keys=True, indent=2) + "\n")
    atomic_write(out_dir / "rates.csv", report.rates_csv())
    run = report.extras.get("ensemble")
    if run is not None:
        _atomic_via(out_dir / "survival.csv", write_survival_csv, run.survival)
        _atomic_via(out_dir / "first_passage.csv", run.write_first_passage_csv)
    cfg = report.config
    if cfg.profile and "fp_numeric" in report.results and report.gamma > 0.0:
        g = report.gamma * cfg.omega0
        grid = EnergyGrid(report.ys, cfg.grid_cells)
        op = build_operator(grid, g)
        evo = evolve(EnergyDistribution.thermal(grid), op, t_end=5.0 / (2.0 * g), snapshot_every=10)
        _atomic_via(out_dir / "profile.csv", write_profile_csv, grid, evo.snapshots)


def run_point(cfg: ExperimentConfig, out_dir=None, timestamp: Optional[str] = None) -> ComparisonReport:
    """Evaluate the single point of ``cfg`` and write ``report.json`` and ``rates.csv``."""
    if cfg.is_sweep:
        raise ValueError("run_point needs a single (ys, gamma) point; use run_sweep")
    report = evaluate_point(cfg, cfg.ys[0], cfg.gamma[0])
    write_point(report, out_dir if out_dir is not None else cfg.out, timestamp)
    return report


@dataclass
class SweepResult:
    reports: list
    rows: list
    ratios: list
    strictly_increasing: Optional[bool]

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if any(r.errors for r in self.reports) else EXIT_OK


def _point_dir(out_dir: Path, ys: float, gamma: float) -> Path:
    return out_dir / "points" / f"ys={ys!r}_gamma={gamma!r}"


def run_sweep(cfg: ExperimentConfig, out_dir=None, timestamp: Optional[str] = None) -> SweepResult:
    """Evaluate every point of the sweep axis and write ``sweep.csv`` plus a summary.

    Points run concurrently (``cfg.workers``), each writing its own directory; the
    merged CSV is assembled afterwards in axis order.
    """
    points = cfg.points()
    if not points:
        raise ValueError("empty sweep axis")
    out_dir = Path(out_dir if out_dir is not None else cfg.out)

    def task(pt):
        rep = evaluate_point(cfg, *pt)
        write_point(rep, _point_dir(out_dir, *pt), timestamp)
        return rep

    if cfg.workers > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            reports = list(pool.map(task, points))
    else:
        reports = [task(pt) for pt in points]

    rows = []
    for rep in reports:
        for m in cfg.methods:
            if m in rep.results:
                rows.append((rep.ys, rep.gamma, m, rep.results[m].rate))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ys", "gamma", "method", "rate"])
    for ys, g, m, r in rows:
        w.writerow([repr(ys), repr(g), m, repr(r)])
    atomic_write(out_dir / "sweep.csv", buf.getvalue())

    ratios = [(rep.ys, rep.gamma, rep.activation_over_tunnel()) for rep in reports]
    increasing = None
    if len(cfg.ys) > 1 and all(r is not None for *_, r in ratios):
        vals = [r for *_, r in sorted(ratios)]
        increasing = all(b > a for a, b in zip(vals, vals[1:]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["ys", "gamma", "activation_over_tunnel"])
    for ys, g, r in ratios:
        w.writerow([repr(ys), repr(g), _fmt(r)])
    atomic_write(out_dir / "sweep_ratios.csv", buf.getvalue())
    summary = {
        "version": __version__,
        "config_hash": cfg.config_hash(),
        "axis": "ys" if len(cfg.ys) > 1 else "gamma",
        "activation_over_tunnel": [{"ys": y, "gamma": g, "ratio": r} for y, g, r in ratios],
        "ratio_strictly_increasing_in_ys": increasing,
        "failed_points": [{"ys": r.ys, "gamma": r.gamma, "errors": r.errors} for r in reports if r.errors],
    }
    atomic_write(out_dir / "sweep_summary.json", json.dumps(_clean(summary), sort_keys=True, indent=2) + "\n")
    return SweepResult(reports, rows, ratios, increasing)
