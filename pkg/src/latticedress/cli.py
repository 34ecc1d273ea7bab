"""Pipeline orchestration and machine-readable reporting.

Commands:
  dress   build the generators and the transformed Hamiltonian, emit tables
  verify  oracle equivalence, eigenstate residual slopes, momentum commutation
  scan    equal-time and spacelike field-commutator scans
  all     dress + verify + scan

Exit codes: 0 all enabled checks pass, 1 a check failed or the dressing hit
a zero denominator, 2 usage or configuration error.

The JSON report is byte-stable for identical inputs and package version;
wall-clock timing goes to stderr, not into the report.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import bad_part, series_rows
from .checks import (
    ScanError,
    eigenstate_residuals,
    equal_time_scan,
    momentum_commutation_defect,
    momentum_operator,
    spacelike_scan,
)
from .config import ConfigError, RunConfig, load_config
from .dressing import ZeroDenominatorError, dress, residual_bad_norm
from .models import FieldSpecies, ModelSpec, build_model
from .modes import LatticeSpec
from .numerics import (
    BasisError,
    FockBasis,
    conjugate_numeric,
    matrix_of,
    restricted_norm,
)

SCHEMA_VERSION = 1
COMMANDS = ("dress", "verify", "scan", "all")


def _finite(x):
    if x is None or (isinstance(x, float) and not math.isfinite(x)):
        return None
    return x


def model_from_config(cfg: RunConfig) -> ModelSpec:
    lattice = LatticeSpec(dim=cfg.dim, sites_per_dim=cfg.sites_per_dim,
                          physical_length=cfg.physical_length)
    species = None
    if cfg.species is not None:
        species = [FieldSpecies(s.name, s.mass) for s in cfg.species]
    return build_model(
        cfg.interaction,
        lattice=lattice,
        species=species,
        g=cfg.coupling_strength,
        coupling=cfg.coupling,
        max_order=cfg.order,
        policy=cfg.policy,
    )


def _basis_from_config(model: ModelSpec, cfg: RunConfig) -> FockBasis:
    return FockBasis(model.system, cfg.per_mode_cutoff, cfg.total_cutoff,
                     dimension_limit=cfg.dimension_limit)


def _verdict(check, expected, got, tolerance, ok):
    return {
        "check": check,
        "expected": _finite(expected),
        "got": _finite(got),
        "tolerance": _finite(tolerance),
        "pass": bool(ok),
    }


def _slope_ok(slope, target, tol):
    return slope is not None and abs(slope - target) <= tol


def run_dress(model: ModelSpec, cfg: RunConfig, report: dict) -> list[dict]:
    result = dress(model)
    report["dressing"] = {
        "policy": model.policy,
        "order": model.max_order,
        "min_denominator": _finite(result.min_denominator),
        "near_resonances": [
            {"order": d["order"], "signature": _sig_json(d["signature"]),
             "denominator": d["denominator"]}
            for d in result.diagnostics
        ],
        "K": series_rows(result.K),
        "generators": [series_rows(r) for r in result.generators],
        "removed": [
            series_rows_from_map(terms, order=n + 1)
            for n, terms in enumerate(result.removed)
        ],
        "bad_terms_left": series_rows(bad_part(result.K)),
        "vacuum_energy_order2": _coeff_json(
            result.vacuum_energy_coefficient(2) if model.max_order >= 2 else 0j),
        "umklapp_count": len(model.umklapp_signatures),
    }
    if model.max_order >= 2 and model.name in ("phi3", "phi3-full", "scalar-yukawa"):
        from .dressing import extract_energy_correction
        table = []
        for m in model.system.modes:
            table.append({
                "species": m.species, "k": list(m.k),
                "delta": extract_energy_correction(result, m.species, m.k),
            })
        report["dressing"]["energy_corrections"] = table

    verdicts = []
    if model.policy == "shirokov":
        left = residual_bad_norm(result)
        verdicts.append(_verdict("no_bad_terms", 0.0, left, 1e-10, left <= 1e-10))
    report["_result"] = result  # stripped before serialization
    return verdicts


def series_rows_from_map(terms, order):
    rows = []
    for (creators, annihilators), c in sorted(terms.items()):
        rows.append({
            "order": order,
            "type": [len(creators), len(annihilators)],
            "creators": [{"species": m.species, "k": list(m.k)} for m in creators],
            "annihilators": [{"species": m.species, "k": list(m.k)} for m in annihilators],
            "re": c.real,
            "im": c.imag,
        })
    return rows


def _sig_json(sig):
    creators, annihilators = sig
    return {
        "creators": [{"species": m.species, "k": list(m.k)} for m in creators],
        "annihilators": [{"species": m.species, "k": list(m.k)} for m in annihilators],
    }


def _coeff_json(c):
    return {"re": c.real, "im": c.imag}


def run_verify(model: ModelSpec, cfg: RunConfig, report: dict, result) -> list[dict]:
    verdicts = []
    n = model.max_order

    momentum = cfg.checks["momentum"]
    if momentum.enabled:
        tol = momentum.params["tolerance"]
        defect = momentum_commutation_defect(result.K, model)
        verdicts.append(_verdict("momentum_commutation", 0.0, defect, tol,
                                 defect <= tol))

    basis = _basis_from_config(model, cfg)
    report["verify"] = {"basis_dimension": basis.dimension}

    oracle = cfg.checks["oracle"]
    if oracle.enabled:
        block = oracle.params["block"]
        tol = oracle.params["slope_tolerance"]
        lams = [l for l in cfg.lambdas if l > 0]
        diffs = []
        for lam in lams:
            mh = matrix_of(model.hamiltonian(), basis, lam)
            mr = matrix_of(result.generator, basis, lam)
            mk = matrix_of(result.K, basis, lam).toarray()
            conj = conjugate_numeric(mr, mh)
            diffs.append(restricted_norm(conj - mk, basis, block))
        slope = _fit_slope(lams, diffs)
        report["verify"]["oracle"] = {
            "lambdas": lams, "differences": diffs, "slope": _finite(slope),
        }
        verdicts.append(_verdict("oracle_equivalence_slope", n + 1, slope, tol,
                                 _slope_ok(slope, n + 1, tol) or all(
                                     d < 1e-12 for d in diffs)))

    residuals = cfg.checks["residuals"]
    if residuals.enabled:
        tol = residuals.params["slope_tolerance"]
        rep = eigenstate_residuals(model, basis, result, cfg.lambdas)
        report["verify"]["residuals"] = {
            "rows": rep.rows(),
            "vacuum_slope": _finite(rep.vacuum_slope),
            "one_particle_slopes": {
                repr(m): _finite(s) for m, s in sorted(rep.one_particle_slopes.items())
            },
            "cutoff_sensitive": rep.cutoff_sensitive,
        }
        slopes = rep.all_slopes()
        all_floor = all(v <= rep.zero_floor for v in rep.vacuum) and all(
            v <= rep.zero_floor for r in rep.one_particle.values() for v in r)
        ok = all_floor or (
            bool(slopes) and all(abs(s - (n + 1)) <= tol for s in slopes))
        got = min(slopes, default=None)
        verdicts.append(_verdict("residual_slopes", n + 1, got, tol, ok))
        if 0.0 in cfg.lambdas:
            i = cfg.lambdas.index(0.0)
            worst0 = max([rep.vacuum[i]] + [r[i] for r in rep.one_particle.values()])
            verdicts.append(_verdict("residuals_at_zero_coupling", 0.0, worst0,
                                     1e-12, worst0 < 1e-12))
    return verdicts


def _fit_slope(lams, values):
    xs = [math.log(l) for l, v in zip(lams, values) if v > 1e-13]
    ys = [math.log(v) for v in values if v > 1e-13]
    if len(xs) < 2:
        return None
    return float(np.polyfit(xs, ys, 1)[0])


def run_scan(model: ModelSpec, cfg: RunConfig, report: dict, result) -> list[dict]:
    verdicts = []
    basis = _basis_from_config(model, cfg)
    report.setdefault("scan", {})

    et = cfg.checks["equal_time"]
    if et.enabled:
        sites = model.system.lattice.sites()
        pairs = [(a, b) for i, a in enumerate(sites) for b in sites[i + 1:]]
        rep = equal_time_scan(model, basis, result,
                              times=et.params["times"],
                              lambdas=et.params["lambdas"],
                              site_pairs=pairs,
                              block=et.params["block"],
                              horizon_units=cfg.time_horizon)
        worst = max((p.magnitude for p in rep.points), default=0.0)
        tol = et.params["tolerance"]
        report["scan"]["equal_time"] = {"rows": rep.rows(), "max_magnitude": worst}
        verdicts.append(_verdict("equal_time_locality", 0.0, worst, tol, worst < tol))

    sl = cfg.checks["spacelike"]
    if sl.enabled:
        grid = [tuple(g) for g in sl.params["grid"]]
        if not grid:
            grid = [_default_spacelike_point(model)]
        rep = spacelike_scan(model, basis, result,
                             lambdas=sl.params["lambdas"], grid=grid,
                             block=sl.params["block"],
                             horizon_units=cfg.time_horizon)
        report["scan"]["spacelike"] = {
            "rows": rep.rows(),
            "slope": _finite(rep.slope),
            "noise_floor": rep.noise_floor,
        }
        target = sl.params["slope"]
        tol = sl.params["slope_tolerance"]
        lam_max = max(sl.params["lambdas"])
        signal = max((p.subtracted for p in rep.points
                      if p.spacelike and p.lam == lam_max), default=0.0)
        ok = _slope_ok(rep.slope, target, tol) and signal > 10.0 * rep.noise_floor
        verdicts.append(_verdict("spacelike_nonlocality_slope", target,
                                 rep.slope, tol, ok))
    return verdicts


def _default_spacelike_point(model: ModelSpec):
    """x = origin, y = the most distant site, tau = one lattice spacing."""
    lat = model.system.lattice
    origin = (0,) * lat.dim
    far = max(lat.sites(), key=lambda s: lat.min_image_distance(origin, s))
    return (origin, far, lat.spacing)


def run(cfg: RunConfig, command: str, out_dir: str | Path = ".") -> int:
    """Execute a pipeline command; write report files; return the exit code."""
    if command not in COMMANDS:
        raise ValueError(f"unknown command {command!r}; expected one of {COMMANDS}")
    t0 = time.monotonic()
    report: dict = {
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "command": command,
        "config": cfg.echo(),
        "verdicts": [],
        "failures": [],
    }
    exit_code = 0
    try:
        model = model_from_config(cfg)
        verdicts = run_dress(model, cfg, report)
        result = report.pop("_result")
        if command in ("verify", "all"):
            verdicts += run_verify(model, cfg, report, result)
        if command in ("scan", "all"):
            verdicts += run_scan(model, cfg, report, result)
        report["verdicts"] = verdicts
        for v in verdicts:
            if not v["pass"]:
                report["failures"].append({"check": v["check"], "reason": "tolerance"})
        if report["failures"]:
            exit_code = 1
    except ZeroDenominatorError as exc:
        report["failures"].append({
            "check": "dressing",
            "reason": "zero_denominator",
            "order": exc.order,
            "policy": exc.policy,
            "signatures": [
                {**_sig_json(sig), "denominator": den}
                for sig, den in exc.signatures
            ],
        })
        exit_code = 1
    except (BasisError, ScanError) as exc:
        report["failures"].append({"check": "setup", "reason": str(exc)})
        exit_code = 1

    emit_report(report, out_dir, cfg.formats)
    print(f"[latticedress] {command}: exit {exit_code} "
          f"({time.monotonic() - t0:.2f}s)", file=sys.stderr)
    return exit_code


def emit_report(report: dict, out_dir: str | Path, formats) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if "json" in formats:
        path = out_dir / "report.json"
        path.write_text(
            json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n",
            encoding="utf-8",
        )
        written.append(path)
    if "csv" in formats:
        for kind in ("equal_time", "spacelike"):
            rows = report.get("scan", {}).get(kind, {}).get("rows")
            if not rows:
                continue
            path = out_dir / f"{kind}.csv"
            with open(path, "w", newline="", encoding="utf-8") as fh:
                writer = csv.writer(fh)
                writer.writerow(["separation", "tau", "lambda", "magnitude",
                                 "baseline", "subtracted"])
                for r in rows:
                    writer.writerow([r["separation"], r["tau"], r["lambda"],
                                     r["magnitude"], r["baseline"], r["subtracted"]])
            written.append(path)
    return written


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="latticedress",
        description="Dressing transformation engine on a finite momentum lattice",
    )
    parser.add_argument("--config", required=True, help="path to the YAML config")
    parser.add_argument("--command", required=True, choices=COMMANDS)
    parser.add_argument("--out-dir", default=".", help="report output directory")
    parser.add_argument("--seed", type=int, default=0,
                        help="seed for randomized self-tests (never affects physics)")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    try:
        cfg = load_config(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return 2
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run(cfg, args.command, args.out_dir)


if __name__ == "__main__":
    sys.exit(main())
