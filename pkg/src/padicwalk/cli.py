"""Command line entry point: ``padicwalk {law,kernel,converge,simulate,critical}``.

Every run writes a data file (``<command>.csv`` or ``<command>.json``) and
a ``<command>.manifest.json`` next to it.  The data file depends only on
the arguments; the manifest also records versions, timings and checks.
Without ``--out`` (and without ``PADICWALK_OUT_DIR``) the data goes to
stdout and no manifest is written.

Exit codes: 0 when every check passed, 2 for invalid parameters, and the
code listed in ``CHECK_CODES`` for the first failed check.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import platform
import sys
import time
from dataclasses import asdict, dataclass, field
from typing import Any, Sequence

import numpy as np

from . import criticality, kernels, montecarlo, scaling
from ._fdd import Ball
from .groups import K_MAX_DEFAULT
from .laws import make_law

OUT_ENV = "PADICWALK_OUT_DIR"
EXIT_DOMAIN = 2
CHECK_CODES = {
    "normalization": 3,
    "kernel_mass": 4,
    "l1_monotone": 5,
    "report": 6,
    "overflow_bound": 7,
    "moment_bound": 8,
}
NORM_TOL = 1e-13


@dataclass
class RunManifest:
    subcommand: str
    params: dict[str, Any]
    seed: int | None
    versions: dict[str, str]
    budgets: dict[str, float] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    wall_clock: float = 0.0

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable)


def _versions() -> dict[str, str]:
    from importlib.metadata import PackageNotFoundError, version
    try:
        pkg = version("artifact")
    except PackageNotFoundError:
        pkg = "unknown"
    return {"artifact": pkg, "python": platform.python_version(), "numpy": np.__version__,
            "mc_engine": montecarlo.ENGINE}


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    return str(x)


def _floats(s: str) -> list[float]:
    return [float(v) for v in s.split(",") if v.strip()]


def _ints(s: str) -> list[int]:
    return [int(v) for v in s.split(",") if v.strip()]


# ---------------------------------------------------------------- arguments
def _law_args(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--family", choices=("1d", "iso2d", "aniso2d"), default="1d")
    ap.add_argument("--p", type=int, default=2)
    ap.add_argument("--b", type=float, default=1.0)
    ap.add_argument("--p0", type=float, default=None, help="holding probability (1d); default 0.5")
    ap.add_argument("--h", type=float, default=None, help="anisotropy in (0, 1) (aniso2d)")


def _scale_args(ap: argparse.ArgumentParser) -> None:
    g = ap.add_mutually_exclusive_group()
    g.add_argument("--sigma", type=float, default=None, help="limit diffusion constant")
    g.add_argument("--D", type=float, default=None, help="time-scale constant in lambda(m) = D p^(m b)")


def _out_args(ap: argparse.ArgumentParser) -> None:
    ap.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV}, else stdout)")
    ap.add_argument("--format", choices=("csv", "json"), default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="padicwalk", description="Radial random walks on p-adic groups.")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("law", help="one-step and n-step shell laws, char function, moments")
    _law_args(a)
    a.add_argument("--n", type=int, default=1, help="largest step count")
    a.add_argument("--moments", type=_floats, default=[], help="comma-separated orders r")
    a.add_argument("--shells", type=int, default=12, help="number of shell indices listed")
    _out_args(a)

    k = sub.add_parser("kernel", help="heat kernel on shells, masses and moments")
    _law_args(k)
    _scale_args(k)
    k.add_argument("--t", type=_floats, default=[1.0])
    k.add_argument("--shells", type=_ints, default=None, help="lo,hi shell range (default -8,8)")
    k.add_argument("--moments", type=_floats, default=[])
    _out_args(k)

    c = sub.add_parser("converge", help="pre-limit vs limit distances along m")
    _law_args(c)
    _scale_args(c)
    c.add_argument("--m", type=_ints, default=[2, 4, 6, 8])
    c.add_argument("--t", type=_floats, default=[0.25, 1.0, 4.0])
    c.add_argument("--fdd", action="store_true", help="add two-time nested-ball comparisons")
    _out_args(c)

    s = sub.add_parser("simulate", help="Monte Carlo shell histograms")
    _law_args(s)
    _scale_args(s)
    s.add_argument("--paths", type=int, default=100_000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--n", type=_ints, default=[1], help="recorded step counts")
    s.add_argument("--m", type=int, default=None, help="embed at level m and use --t")
    s.add_argument("--t", type=_floats, default=[1.0])
    s.add_argument("--kmax", type=int, default=K_MAX_DEFAULT)
    s.add_argument("--engine", choices=("auto", "compiled", "numpy"), default="auto")
    s.add_argument("--moments", type=_floats, default=[])
    _out_args(s)

    r = sub.add_parser("critical", help="component diffusion constants and the endpoint scan")
    r.add_argument("--p", type=int, default=2)
    r.add_argument("--b", type=float, default=1.0)
    r.add_argument("--D", type=float, default=1.0)
    r.add_argument("--h", type=_floats, default=None, help="h grid (default dense near 1)")
    r.add_argument("--kmax", type=int, default=6, help="coarse shells in the endpoint scan")
    r.add_argument("--gnuplot", action="store_true", help="also write two-column sigma files")
    _out_args(r)
    return ap


def _law(args):
    if args.family == "aniso2d":
        if args.h is None:
            raise ValueError("aniso2d needs --h")
        if args.h == 1:
            raise ValueError("h=1 is the isotropic family")
        return make_law("aniso2d", args.p, args.b, h=args.h)
    if args.h is not None:
        raise ValueError(f"--h does not apply to {args.family}")
    if args.family == "1d":
        return make_law("1d", args.p, args.b, P0=0.5 if args.p0 is None else args.p0)
    if args.p0 is not None:
        raise ValueError("--p0 applies to 1d only")
    return make_law("iso2d", args.p, args.b)


def _scale(args) -> dict[str, float]:
    if args.sigma is None and args.D is None:
        return {"sigma": 1.0}
    if args.sigma is not None:
        if args.sigma <= 0:
            raise ValueError("sigma must be positive")
        return {"sigma": args.sigma}
    if args.D <= 0:
        raise ValueError("D must be positive")
    return {"D": args.D}


# ---------------------------------------------------------------- commands
def cmd_law(args, man: RunManifest) -> list[dict[str, Any]]:
    law = _law(args)
    if args.n < 1 or args.shells < 1:
        raise ValueError("--n and --shells must be >= 1")
    rows = []
    total = law.total_mass()
    rows.append({"section": "normalization", "n": 1, "index": "", "r": "", "value": total})
    man.checks["normalization"] = abs(total - 1) <= NORM_TOL
    for i in range(args.shells):
        rows.append({"section": "shell_prob", "n": 1, "index": i, "r": "", "value": law.shell_prob(i)})
    for i in range(args.shells):
        rows.append({"section": "char", "n": 1, "index": -i, "r": "", "value": 1.0 - law.multiplier(i)})
    for n in range(1, args.n + 1):
        masses = law.shell_masses(n, args.shells)
        for i, v in enumerate(masses):
            rows.append({"section": "nstep_shell", "n": n, "index": i, "r": "", "value": float(v)})
    for r in args.moments:
        for n in range(1, args.n + 1):
            rows.append({"section": "moment", "n": n, "index": "", "r": r, "value": law.moment_closed_form(n, r)})
    return rows


def cmd_kernel(args, man: RunManifest) -> list[dict[str, Any]]:
    law = _law(args)
    sc = _scale(args)
    pl = scaling.PreLimitLaw.build(law, 0, **sc)
    spec = pl.spec
    lo, hi = (args.shells or [-8, 8])[:2]
    rows = []
    ok_mass, ok_bound = True, True
    for t in args.t:
        if t <= 0:
            raise ValueError("t must be positive")
        mass, budget = kernels.kernel_mass(spec, t)
        man.budgets[f"mass_t={t}"] = budget
        ok_mass &= abs(mass - 1) <= budget
        rows.append({"section": "mass", "t": t, "shell": "", "r": "", "value": mass, "extra": budget})
        v0, _ = kernels.heat_kernel_shell(spec, t, kernels.INF * -1)
        rows.append({"section": "density", "t": t, "shell": "origin", "r": "", "value": v0, "extra": ""})
        for J in range(lo, hi + 1):
            v, _ = kernels.heat_kernel_shell(spec, t, J)
            rows.append({"section": "density", "t": t, "shell": J, "r": "", "value": v,
                         "extra": kernels.shell_mass(spec, t, J)})
        for r in args.moments:
            m = kernels.kernel_moment(spec, t, r)
            bound = kernels.kernel_moment_bound(spec, t, r)
            ok_bound &= m <= bound
            rows.append({"section": "moment", "t": t, "shell": "", "r": r, "value": m, "extra": bound})
    man.checks["kernel_mass"] = bool(ok_mass)
    if args.moments:
        man.checks["moment_bound"] = bool(ok_bound)
    man.params["sigma"] = spec.sigma
    return rows


def cmd_converge(args, man: RunManifest) -> list[dict[str, Any]]:
    law = _law(args)
    sc = _scale(args)
    if any(m < 0 for m in args.m) or any(t <= 0 for t in args.t):
        raise ValueError("need m >= 0 and t > 0")
    table = scaling.convergence_table(law, args.m, args.t, **sc)
    rows = [{"section": "distance", **r, "prob_m": "", "prob_limit": "", "fdd_diff": ""} for r in table]
    ok = True
    for t in args.t:
        col = [r["l1_dual"] for r in table if r["t"] == t]
        ok &= all(b < a for a, b in zip(col, col[1:]))
    man.checks["l1_monotone"] = bool(ok)
    if args.fdd:
        dim = law.dim
        for m in args.m:
            pl = scaling.PreLimitLaw.build(law, m, **sc)
            for t in args.t:
                hist = [(t / 2, Ball.centred(0, dim)), (t, Ball.centred(1, dim))]
                cmp = scaling.fdd_compare(pl, None, hist)
                rows.append({"section": "fdd", "family": law.family, "p": law.p, "b": law.b,
                             "h": getattr(law, "h", None), "P0": getattr(law, "P0", None),
                             "sigma": pl.sigma, "m": m, "t": t, "l1_dual": "", "sup_grid": "",
                             "prob_m": cmp.prob_m, "prob_limit": cmp.prob_limit, "fdd_diff": cmp.diff})
    return rows


def cmd_simulate(args, man: RunManifest) -> list[dict[str, Any]]:
    law = _law(args)
    if args.paths < 1 or args.workers < 1:
        raise ValueError("--paths and --workers must be >= 1")
    man.seed = args.seed
    if args.m is not None:
        sc = _scale(args)
        pl = scaling.PreLimitLaw.build(law, args.m, **sc)
        steps = [pl.steps(t) for t in args.t]
        cfg = montecarlo.SimConfig(law, args.paths, tuple(steps), args.seed, args.workers, args.kmax, args.engine)
        res = montecarlo.simulate_embedded(cfg, pl.scheme, args.t)
    else:
        cfg = montecarlo.SimConfig(law, args.paths, tuple(args.n), args.seed, args.workers, args.kmax, args.engine)
        res = montecarlo.simulate_primitive(cfg)
    rows = [{"section": "histogram", **r} for r in res.rows()]
    for r in args.moments:
        for est in montecarlo.empirical_moment(res, r):
            rows.append({"section": "moment", "kind": "moment", "label": est.label, "index": "",
                         "shell": "", "count": est.n_used, "overflow": est.overflow, "freq": est.mean,
                         "wilson_lo": est.stderr, "wilson_hi": int(est.heavy_tail)})
    over = max(h.overflow for h in res.histograms)
    bound = res.overflow_bound
    man.budgets["overflow_bound"] = bound
    # union bound on the overflow probability, with a 4-sigma allowance
    man.checks["overflow_bound"] = over <= bound * args.paths + 4 * np.sqrt(bound * args.paths) + 1
    man.params["engine_used"] = res.engine
    return rows


def cmd_critical(args, man: RunManifest) -> dict[str, list[dict[str, Any]]]:
    rep = criticality.diffusion_report(args.p, args.b, args.D, args.h)
    scan = criticality.endpoint_scan(args.p, args.b, args.D, args.h, args.kmax)
    checks = rep.checks()
    man.checks["report"] = all(checks.values())
    man.params["report_checks"] = checks
    summary = [{"quantity": k, "value": v} for k, v in rep.summary().items()]
    return {"summary": summary, "sigma": rep.rows(), "endpoint": scan}


COMMANDS = {"law": cmd_law, "kernel": cmd_kernel, "converge": cmd_converge,
            "simulate": cmd_simulate, "critical": cmd_critical}


# ---------------------------------------------------------------- output
def _csv_text(rows: list[dict[str, Any]]) -> str:
    buf = io.StringIO()
    if rows:
        cols: list[str] = []
        for r in rows:
            cols.extend(k for k in r if k not in cols)
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\r\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: ("" if r.get(k) is None else _cell(r.get(k, ""))) for k in cols})
    return buf.getvalue()


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    return v


def _write(tables: dict[str, list[dict[str, Any]]], name: str, fmt: str, out: str | None) -> list[str]:
    if out is None:
        for key, rows in tables.items():
            if fmt == "csv":
                if len(tables) > 1:
                    sys.stdout.write(f"# {key}\n")
                sys.stdout.write(_csv_text(rows))
            else:
                sys.stdout.write(json.dumps({key: rows}, default=_jsonable) + "\n")
        return []
    os.makedirs(out, exist_ok=True)
    paths = []
    if fmt == "json":
        path = os.path.join(out, f"{name}.json")
        with open(path, "w") as fh:
            json.dump(tables if len(tables) > 1 else next(iter(tables.values())), fh, indent=1,
                      default=_jsonable)
        paths.append(path)
    else:
        for key, rows in tables.items():
            suffix = "" if len(tables) == 1 else f"_{key}"
            path = os.path.join(out, f"{name}{suffix}.csv")
            with open(path, "w", newline="") as fh:
                fh.write(_csv_text(rows))
            paths.append(path)
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    out = args.out if args.out is not None else os.environ.get(OUT_ENV)
    params = {k: v for k, v in vars(args).items() if k not in ("out", "format", "command")}
    man = RunManifest(args.command, params, None, _versions())
    t0 = time.perf_counter()
    try:
        result = COMMANDS[args.command](args, man)
    except ValueError as exc:
        print(f"padicwalk {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    tables = result if isinstance(result, dict) else {args.command: result}
    man.wall_clock = time.perf_counter() - t0
    man.outputs = _write(tables, args.command, args.format, out)
    if args.command == "critical" and args.gnuplot and out is not None:
        rep = criticality.diffusion_report(args.p, args.b, args.D, args.h)
        man.outputs += criticality.write_gnuplot(rep, out)
    if out is not None:
        with open(os.path.join(out, f"{args.command}.manifest.json"), "w") as fh:
            fh.write(man.to_json())
    failed = [k for k, ok in man.checks.items() if not ok]
    if failed:
        print(f"padicwalk {args.command}: failed checks: {', '.join(failed)}", file=sys.stderr)
        return CHECK_CODES[failed[0]]
    return 0


if __name__ == "__main__":
    sys.exit(main())
