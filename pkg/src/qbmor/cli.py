"""Command-line driver: build systems, reduce them with the full method
roster, simulate, sweep, and emit comparison tables.

Subcommands
-----------

* ``reduce``   -- build every requested reduced model, re-verify guaranteed
  interpolation conditions, serialize models and the condition ledger.
* ``simulate`` -- time-domain simulation of the full system (or a stored
  model) under the configured Gaussian-process input.
* ``sweep``    -- frequency sweeps of the first (and optionally second)
  transfer function.
* ``compare``  -- the full pipeline: shared-input simulations, sweeps and
  the method table.  Unstable reduced models are reported with ``inf``
  time-domain errors and the run continues.

Configuration comes from an INI-style file (sections ``[system]``,
``[reduction]``, ``[frequency]``, ``[time]``, ``[input]``, ``[output]``)
with every value overridable on the command line.  Identical configuration
and seed produce byte-identical CSV outputs.  The exit code of ``reduce``
and ``compare`` is nonzero when any guaranteed-condition self-check fails.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import re
import sys as _sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import storage
from .benchmarks import HeatedRodConfig, TodaConfig, build_heated_rod, build_toda
from .errors import QbmorError
from .interpolation import BasisCost, build_method_basis
from .metrics import (
    ErrorReport,
    emit_table,
    hinf_from_values,
    relerr_curve_from_values,
    relerr_l2,
    relerr_linf,
    trajectory_csv,
    write_curve_csv,
    write_surface_csv,
)
from .pod import pod_from_budget
from .projection import project, split_congruence, verify_interpolation
from .simulate import sample_gp_input, simulate
from .transfer import sweep_level1, tf1_grid, tf2_grid

DEFAULT_METHODS = (
    "SymInt(V,equi)", "SymInt(V,avg)", "SymInt(VW,equi)", "SymInt(VW,avg)",
    "GenInt(V,equi)", "GenInt(V,avg)", "GenInt(VW,equi)", "GenInt(VW,avg)",
    "POD(equi-cost)", "POD(avg)",
)

_METHOD_RE = re.compile(
    r"^(SymInt|GenInt)\((V|VW),(equi|avg)\)$|^POD\((equi-cost|avg)\)$")


def parse_method(tag: str) -> dict:
    tag = tag.strip()
    match = _METHOD_RE.match(tag)
    if not match:
        raise ValueError(f"unknown method tag {tag!r}")
    if tag.startswith("POD"):
        return {"tag": tag, "kind": "pod", "flavor": match.group(4)}
    return {
        "tag": tag, "kind": "interpolation",
        "scheme": "sym" if match.group(1) == "SymInt" else "gen",
        "sidedness": match.group(2),
        "selection": match.group(3),
    }


@dataclass
class RunConfig:
    system: str = "heated_rod"  # heated_rod | toda | load
    n: int = 200
    tau: float = 1.0
    ell: int = 100
    path: str = ""
    methods: tuple = DEFAULT_METHODS
    r: int = 24
    oversample: int | None = None
    split: bool | None = None  # None: on for the particle chain only
    split_row: int | None = None
    omega_min: float = 1e-3
    omega_max: float = 1e3
    sweep_points: int = 500
    sweep_points_2d: int | None = None
    t_final: float | None = None
    step: float = 1e-2
    mean: float | None = None
    smoothing: float | None = None
    seed: int = 0
    outdir: str = ""
    jobs: int = 1

    def resolve(self) -> "RunConfig":
        """Fill benchmark-dependent defaults for values left unset."""
        toda = self.system == "toda"
        if self.t_final is None:
            self.t_final = 100.0 if toda else 30.0
        if self.mean is None:
            self.mean = 0.0 if toda else 2.0
        if self.smoothing is None:
            self.smoothing = 2.0 if toda else 0.25
        if self.split is None:
            self.split = toda
        if self.sweep_points_2d is None:
            self.sweep_points_2d = self.sweep_points
        if not self.outdir:
            self.outdir = os.environ.get("QBMOR_OUTDIR", "qbmor_out")
        for tag in self.methods:
            parse_method(tag)
        if self.r < 1:
            raise ValueError("reduced order must be positive")
        if not self.omega_min < self.omega_max:
            raise ValueError("need omega_min < omega_max")
        return self

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["methods"] = list(self.methods)
        return out


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if not path:
        return cfg
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)

    def grab(section, key, cast, attr=None):
        if parser.has_option(section, key):
            setattr(cfg, attr or key, cast(parser.get(section, key)))

    grab("system", "kind", str, "system")
    grab("system", "n", int)
    grab("system", "tau", float)
    grab("system", "ell", int)
    grab("system", "path", str)
    if parser.has_option("reduction", "methods"):
        cfg.methods = tuple(
            t.strip() for t in parser.get("reduction", "methods").split(";")
            if t.strip())
    grab("reduction", "r", int)
    grab("reduction", "oversample", int)
    if parser.has_option("reduction", "split"):
        cfg.split = parser.getboolean("reduction", "split")
    grab("reduction", "split_row", int)
    grab("frequency", "omega_min", float)
    grab("frequency", "omega_max", float)
    grab("frequency", "sweep_points", int)
    grab("frequency", "sweep_points_2d", int)
    grab("time", "t_final", float)
    grab("time", "step", float)
    grab("input", "mean", float)
    grab("input", "smoothing", float)
    grab("input", "seed", int)
    grab("output", "dir", str, "outdir")
    grab("output", "jobs", int)
    return cfg


def build_system(cfg: RunConfig):
    if cfg.system == "heated_rod":
        return build_heated_rod(HeatedRodConfig(n=cfg.n, tau=cfg.tau))
    if cfg.system == "toda":
        return build_toda(TodaConfig(ell=cfg.ell))
    if cfg.system == "load":
        if not cfg.path:
            raise ValueError("system kind 'load' needs a path")
        return storage.load_system(cfg.path)
    raise ValueError(f"unknown system kind {cfg.system!r}")


# ---------------------------------------------------------------------------
# method construction
# ---------------------------------------------------------------------------

def _reference_cost(sys, base_r: int, selection: str,
                    oversample: int | None) -> BasisCost:
    """Workload of the matching one-sided symmetric construction, counted
    without running it: two factorizations and m + m^2 solve columns per
    point."""
    width = (2 if sys.is_real() else 1) * (sys.m + sys.m ** 2)
    npts = max(base_r // width, 1)
    if selection == "avg":
        from .interpolation import default_oversample
        npts = oversample or default_oversample(sys, "sym", base_r)
    return BasisCost(factorizations=2 * npts,
                     solve_columns=npts * (sys.m + sys.m ** 2))


def build_one_method(sys, cfg: RunConfig, tag: str):
    """One reduced model per method tag; raises on per-method failure."""
    spec = parse_method(tag)
    do_split = bool(cfg.split) and getattr(sys, "split_row", None) is not None
    split_row = cfg.split_row or getattr(sys, "split_row", None)
    base_r = cfg.r
    if do_split:
        if cfg.r % 2:
            raise ValueError("split congruence doubles the order: r must be even")
        base_r = cfg.r // 2
    freq_range = (cfg.omega_min, cfg.omega_max)
    if spec["kind"] == "interpolation":
        basis = build_method_basis(sys, spec["scheme"], spec["sidedness"],
                                   spec["selection"], base_r, freq_range,
                                   oversample=cfg.oversample)
        basis.method_tag = tag + ("+split" if do_split else "")
    else:
        cost = _reference_cost(sys, base_r,
                               "avg" if spec["flavor"] == "avg" else "equi",
                               cfg.oversample)
        basis = pod_from_budget(sys, base_r, cfg.step, cost, method_tag=tag)
    if do_split:
        split_tag = basis.method_tag
        basis = split_congruence(basis, split_row)
        basis.method_tag = split_tag if split_tag.endswith("+split") \
            else split_tag + "+split"
        if basis.r != cfg.r:
            raise ValueError(
                f"split basis has order {basis.r}, expected {cfg.r}")
    model = project(sys, basis)
    verify_interpolation(sys, model)
    return model


def _build_methods(sys, cfg: RunConfig):
    """Build every method, isolating failures.  Returns a list of
    (tag, model_or_None, error_or_None)."""
    def one(tag):
        try:
            return tag, build_one_method(sys, cfg, tag), None
        except (QbmorError, ValueError) as exc:
            return tag, None, f"{type(exc).__name__}: {exc}"

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            return list(pool.map(one, cfg.methods))
    return [one(tag) for tag in cfg.methods]


def _condition_rows(tag, model):
    rows = []
    for chk in model.condition_checks:
        pts = ";".join(format(p, ".12g") for p in chk.condition.points)
        rows.append([tag, chk.condition.kind, pts,
                     format(chk.relative_error, ".6e"),
                     "pass" if chk.passed else "FAIL"])
    return rows


def _write_conditions(path, all_rows):
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "condition", "points", "relative_error",
                         "status"])
        writer.writerows(all_rows)


def _sanitize(tag: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", tag)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_reduce(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sys_full = build_system(cfg)
    results = _build_methods(sys_full, cfg)
    rows = []
    failed_checks = 0
    for tag, model, err in results:
        if model is None:
            print(f"{tag}: ERROR {err}")
            continue
        storage.save_reduced_model(model, outdir / "models" / _sanitize(tag))
        bad = sum(not c.passed for c in model.condition_checks)
        failed_checks += bad
        rows.extend(_condition_rows(tag, model))
        print(f"{tag}: r={model.r}, "
              f"{len(model.condition_checks) - bad}/{len(model.condition_checks)} "
              f"conditions verified")
    _write_conditions(outdir / "conditions.csv", rows)
    (outdir / "run_manifest.json").write_text(
        json.dumps({"command": "reduce", "config": cfg.to_dict()}, indent=1))
    return 1 if failed_checks else 0


def _gp_input(cfg: RunConfig, m: int, times):
    return sample_gp_input(cfg.mean, cfg.smoothing, times, cfg.seed, m)


def cmd_simulate(cfg: RunConfig, model_path: str | None = None) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    target = storage.load_reduced_model(model_path) if model_path \
        else build_system(cfg)
    sys_obj = getattr(target, "system", target)
    times = cfg.step * np.arange(int(round(cfg.t_final / cfg.step)) + 1)
    u = _gp_input(cfg, sys_obj.m, times)
    traj = simulate(target, u, cfg.t_final, cfg.step)
    name = "model_trajectory.csv" if model_path else "full_trajectory.csv"
    trajectory_csv(outdir / name, traj)
    status = "unstable" if traj.unstable else "ok"
    print(f"simulated {sys_obj.label or 'system'}: {status}, "
          f"wrote {outdir / name}")
    return 0


def cmd_sweep(cfg: RunConfig, model_path: str | None = None,
              level: int = 1) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    target = storage.load_reduced_model(model_path) if model_path \
        else build_system(cfg)
    sys_obj = getattr(target, "system", target)
    omegas = np.logspace(np.log10(cfg.omega_min), np.log10(cfg.omega_max),
                         cfg.sweep_points)
    norms, skipped = sweep_level1(sys_obj, omegas)
    write_curve_csv(outdir / "sweep_level1.csv", omegas, {"norm": norms})
    print(f"level-1 sweep: {len(omegas) - len(skipped)} points "
          f"({len(skipped)} skipped)")
    if level >= 2:
        from .transfer import sweep_level2
        omegas2 = np.logspace(np.log10(cfg.omega_min), np.log10(cfg.omega_max),
                              cfg.sweep_points_2d)
        norms2, skipped2 = sweep_level2(sys_obj, omegas2, omegas2)
        write_surface_csv(outdir / "sweep_level2.csv", omegas2, omegas2, norms2)
        print(f"level-2 sweep: {norms2.size - len(skipped2)} points "
              f"({len(skipped2)} skipped)")
    return 0


def cmd_compare(cfg: RunConfig) -> int:
    outdir = Path(cfg.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    sys_full = build_system(cfg)
    times = cfg.step * np.arange(int(round(cfg.t_final / cfg.step)) + 1)
    u = _gp_input(cfg, sys_full.m, times)

    print(f"simulating full model ({sys_full.label}, n={sys_full.n})")
    full_traj = simulate(sys_full, u, cfg.t_final, cfg.step)
    if full_traj.unstable:
        print("full model simulation unstable; aborting", file=_sys.stderr)
        return 2
    y_max = np.max(np.abs(full_traj.outputs))
    blowup = 1e6 * max(y_max, 1e-12)

    omegas1 = np.logspace(np.log10(cfg.omega_min), np.log10(cfg.omega_max),
                          cfg.sweep_points)
    omegas2 = np.logspace(np.log10(cfg.omega_min), np.log10(cfg.omega_max),
                          cfg.sweep_points_2d)
    print(f"sweeping full transfer functions ({cfg.sweep_points} / "
          f"{cfg.sweep_points_2d}^2 points)")
    full1, full1_ok = tf1_grid(sys_full, omegas1)
    full2, full2_ok = tf2_grid(sys_full, omegas2, omegas2)
    norms1 = np.array([np.linalg.norm(full1[i], 2) if full1_ok[i] else np.nan
                       for i in range(omegas1.size)])
    write_curve_csv(outdir / "full_sigma_level1.csv", omegas1,
                    {"norm": norms1})

    results = _build_methods(sys_full, cfg)
    reports = []
    ledger_rows = []
    failed_checks = 0
    statuses = {}
    for tag, model, err in results:
        if model is None:
            print(f"{tag}: ERROR {err}")
            statuses[tag] = err
            reports.append(ErrorReport(tag, np.inf, np.inf, np.inf, np.inf,
                                       stable=False))
            continue
        bad = sum(not c.passed for c in model.condition_checks)
        failed_checks += bad
        ledger_rows.extend(_condition_rows(tag, model))
        storage.save_reduced_model(model, outdir / "models" / _sanitize(tag))

        red_traj = simulate(model, u, cfg.t_final, cfg.step, blowup=blowup)
        stable = not red_traj.unstable
        if stable:
            peak = np.max(np.abs(red_traj.outputs))
            stable = bool(np.isfinite(peak) and peak <= blowup)
        e_l2 = relerr_l2(full_traj, red_traj) if stable else np.inf
        e_linf = relerr_linf(full_traj, red_traj) if stable else np.inf

        red1, red1_ok = tf1_grid(model.system, omegas1)
        red2, red2_ok = tf2_grid(model.system, omegas2, omegas2)
        hinf1 = hinf_from_values(full1, full1_ok, red1, red1_ok)
        hinf2 = hinf_from_values(full2, full2_ok, red2, red2_ok)
        curve, _ = relerr_curve_from_values(full1, full1_ok, red1, red1_ok)
        surface, _ = relerr_curve_from_values(full2, full2_ok, red2, red2_ok)
        mdir = outdir / "methods" / _sanitize(tag)
        mdir.mkdir(parents=True, exist_ok=True)
        write_curve_csv(mdir / "relerr_level1.csv", omegas1, {"relerr": curve})
        write_surface_csv(mdir / "relerr_level2.csv", omegas2, omegas2, surface)
        trajectory_csv(mdir / "trajectory.csv", red_traj)

        reports.append(ErrorReport(tag, e_l2, e_linf, hinf1, hinf2,
                                   stable=stable))
        statuses[tag] = "ok" if stable else "unstable"
        print(f"{tag}: relerr_L2={e_l2:.4e} relerr_Linf={e_linf:.4e} "
              f"hinf1={hinf1:.4e} hinf2={hinf2:.4e}"
              + ("" if stable else " [unstable]"))

    trajectory_csv(outdir / "full_trajectory.csv", full_traj)
    emit_table(reports, outdir / "table.csv")
    _write_conditions(outdir / "conditions.csv", ledger_rows)
    (outdir / "run_manifest.json").write_text(json.dumps({
        "command": "compare",
        "config": cfg.to_dict(),
        "statuses": statuses,
        "failed_condition_checks": failed_checks,
    }, indent=1))
    print(f"wrote {outdir / 'table.csv'}")
    return 1 if failed_checks else 0


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(sub):
    sub.add_argument("--config", help="INI configuration file")
    sub.add_argument("--system", choices=["heated_rod", "toda", "load"])
    sub.add_argument("--n", type=int, help="rod grid size")
    sub.add_argument("--tau", type=float, help="rod delay")
    sub.add_argument("--ell", type=int, help="chain particle count")
    sub.add_argument("--path", help="directory of a stored system")
    sub.add_argument("--r", type=int, help="reduced order")
    sub.add_argument("--methods", help="semicolon-separated method tags")
    sub.add_argument("--oversample", type=int)
    sub.add_argument("--split", dest="split", action="store_true",
                     default=None)
    sub.add_argument("--no-split", dest="split", action="store_false",
                     default=None)
    sub.add_argument("--split-row", type=int, dest="split_row")
    sub.add_argument("--omega-min", type=float, dest="omega_min")
    sub.add_argument("--omega-max", type=float, dest="omega_max")
    sub.add_argument("--sweep-points", type=int, dest="sweep_points")
    sub.add_argument("--sweep-points-2d", type=int, dest="sweep_points_2d")
    sub.add_argument("--t-final", type=float, dest="t_final")
    sub.add_argument("--step", type=float)
    sub.add_argument("--mean", type=float)
    sub.add_argument("--smoothing", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--outdir")
    sub.add_argument("--jobs", type=int)


def _merge(cfg: RunConfig, args) -> RunConfig:
    for attr in ("system", "n", "tau", "ell", "path", "r", "oversample",
                 "split", "split_row", "omega_min", "omega_max",
                 "sweep_points", "sweep_points_2d", "t_final", "step",
                 "mean", "smoothing", "seed", "outdir", "jobs"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "methods", None):
        cfg.methods = tuple(t.strip() for t in args.methods.split(";")
                            if t.strip())
    return cfg


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qbmor",
        description="structure-preserving reduction of quadratic-bilinear systems")
    subs = parser.add_subparsers(dest="command", required=True)
    for name in ("reduce", "simulate", "sweep", "compare"):
        sub = subs.add_parser(name)
        _add_common(sub)
        if name in ("simulate", "sweep"):
            sub.add_argument("--model", help="stored reduced model directory")
        if name == "sweep":
            sub.add_argument("--level", type=int, default=1, choices=[1, 2])
    args = parser.parse_args(argv)
    cfg = _merge(load_config(args.config), args).resolve()
    if args.command == "reduce":
        return cmd_reduce(cfg)
    if args.command == "simulate":
        return cmd_simulate(cfg, model_path=args.model)
    if args.command == "sweep":
        return cmd_sweep(cfg, model_path=args.model, level=args.level)
    return cmd_compare(cfg)


if __name__ == "__main__":
    raise SystemExit(main())
