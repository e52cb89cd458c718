"""Command-line interface: ``nstars {derive,analytic,simulate,fit,compare}``.

Every command accepts ``--config FILE`` holding ``key=value`` lines that map
one-to-one onto long flags (``min_count=100`` is ``--min-count 100``);
flags given on the command line win.  Exit codes: 0 ok, 2 invalid input,
3 insufficient data.
"""

from __future__ import annotations

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import analytic as an
from . import simulator as sim
from . import stats
from .errors import DivergentMoment, InsufficientData, NStarsError
from .params import ModelParams, check_conditions, derive

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_INSUFFICIENT = 3


class InputError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits; ``div`` for a divergent (infinite) value."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if x is None:
        return ""
    if math.isinf(x):
        return "div"
    return format(float(x), ".17g")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([v if isinstance(v, str) else fmt(v) for v in row])


def write_manifest(path: Path, items) -> None:
    with open(path, "w", newline="") as fh:
        for k, v in items:
            fh.write(f"{k}={v if isinstance(v, str) else fmt(v)}\n")


def _rel_err(empirical, analytic):
    if analytic is None or math.isinf(analytic) or analytic == 0:
        return ""
    return abs(empirical - analytic) / abs(analytic)


# ---------------------------------------------------------------------------
# argument handling


def _subcommand_flags(command):
    parser = build_parser()
    for action in parser._subparsers._group_actions:
        sub = action.choices.get(command)
        if sub is not None:
            return set(sub._option_string_actions)
    return set()


def _config_argv(argv):
    """Expand ``--config FILE`` into flags placed before the explicit ones.

    Keys the chosen subcommand does not know are skipped, so one file can
    serve several commands.
    """
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, rest = pre.parse_known_args(argv)
    if not known.config:
        return list(argv)
    try:
        lines = Path(known.config).read_text().splitlines()
    except OSError as exc:
        raise InputError(f"cannot read config file: {exc}") from exc
    command = rest[0] if rest and not rest[0].startswith("-") else None
    accepted = _subcommand_flags(command) if command else None
    extra = []
    for ln in lines:
        ln = ln.split("#", 1)[0].strip()
        if not ln:
            continue
        if "=" not in ln:
            raise InputError(f"config line is not key=value: {ln!r}")
        key, val = (s.strip() for s in ln.split("=", 1))
        flag = "--" + key.replace("_", "-")
        if accepted is not None and flag not in accepted:
            continue
        if val.lower() in ("true", "false"):
            if val.lower() == "true":
                extra.append(flag)
            continue
        extra += [flag, val]
    # the subcommand name must stay first
    if command:
        return [command] + extra + rest[1:]
    return extra + rest


def _add_params(p, required=True):
    p.add_argument("--N", type=int, required=required, help="star size (>= 3)")
    p.add_argument("--p", type=float, required=required, help="probability of a new vertex")
    p.add_argument("--q", type=float, required=required, help="preferential choice in Option II")
    p.add_argument("--r", type=float, required=required, help="preferential choice in Option I")


def _params(args) -> ModelParams:
    return ModelParams(args.N, args.p, args.q, args.r)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nstars", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("derive", help="print derived constants and finiteness conditions")
    _add_params(p)
    p.add_argument("--config")

    p = sub.add_parser("analytic", help="write the limit distribution and moments as CSV")
    _add_params(p)
    p.add_argument("--w1max", type=int, default=256)
    p.add_argument("--w2max", type=int, default=4096)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--swapped", action="store_true",
                   help="also write moments_w2.csv (roles of w1 and w2 exchanged)")
    p.add_argument("--config")

    p = sub.add_parser("simulate", help="run the evolution and write empirical CSVs")
    _add_params(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--seeds", type=str, default=None,
                   help="comma-separated seeds; one output subdirectory per seed")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--config")

    p = sub.add_parser("fit", help="log-log fit of second moment against mean")
    p.add_argument("--moments", type=Path, required=True)
    p.add_argument("--min-count", type=int, default=30)
    p.add_argument("--weighting", choices=("count", "uniform"), default="count")
    _add_params(p, required=False)
    p.add_argument("--swapped", action="store_true",
                   help="theoretical constant for the fixed-w2 direction")
    p.add_argument("--config")

    p = sub.add_parser("compare", help="join analytic and empirical moments by w1")
    _add_params(p)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--w1max", type=int, default=256)
    p.add_argument("--min-count", type=int, default=30)
    p.add_argument("--out", type=Path, default=Path("."))
    p.add_argument("--config")
    return ap


# ---------------------------------------------------------------------------
# commands


def cmd_derive(args, out=None) -> int:
    out = out or sys.stdout
    d = derive(_params(args))
    c = check_conditions(d)
    for key in ("N", "p", "q", "r", "a11", "a12", "a1", "a2", "b1", "b2", "a", "b"):
        out.write(f"{key}={fmt(getattr(d, key))}\n")
    for key in ("e_finite", "m_finite", "m_finite_swapped", "e_exponent", "m_exponent"):
        out.write(f"{key}={fmt(getattr(c, key))}\n")
    return EXIT_OK


def _analytic_moment_rows(d, upto):
    rows = []
    for w1 in range(upto + 1):
        try:
            E = an.expectation_closed(d, w1)
        except DivergentMoment:
            E = math.inf
        M = an.DIVERGENT if math.isinf(E) else an.second_moment_closed(d, w1)
        rows.append((w1, an.marginal_closed(d, w1), E, M))
    return rows


def cmd_analytic(args, out=None) -> int:
    out = out or sys.stdout
    params = _params(args)
    params.validate_analytic()
    if args.w1max < 1 or args.w2max < 1:
        raise InputError("--w1max and --w2max must be >= 1")
    d = derive(params)
    args.out.mkdir(parents=True, exist_ok=True)
    table = an.joint_table(d, args.w1max, args.w2max)
    vals = table.values
    with open(args.out / "joint.csv", "w", newline="") as fh:
        fh.write("w1,w2,x\n")
        for w1 in range(args.w1max + 1):
            fh.writelines(f"{w1},{w2},{fmt(vals[w1, w2])}\n" for w2 in range(args.w2max + 1))
    write_csv(args.out / "moments.csv", ("w1", "marginal", "E", "M"),
              _analytic_moment_rows(d, args.w1max))
    if args.swapped:
        write_csv(args.out / "moments_w2.csv", ("w2", "marginal", "E", "M"),
                  _analytic_moment_rows(an.swap_roles(d), args.w2max))
    n = max(args.w1max, args.w2max)
    tails = []
    for i in range(n + 1):
        tc = an.tail_coefficients(d, i, i)
        tails.append((i, tc.A_of_w2, tc.C_of_w1))
    write_csv(args.out / "tails.csv", ("index", "A", "C"), tails)
    C = an.taylor_constant(d)
    write_manifest(args.out / "manifest.txt", [
        ("command", "analytic"), ("N", params.N), ("p", params.p), ("q", params.q),
        ("r", params.r), ("w1max", args.w1max), ("w2max", args.w2max),
        ("version", __version__), ("taylor_constant", C),
        ("taylor_constant_swapped", an.taylor_constant(an.swap_roles(d))),
    ])
    out.write(f"taylor_constant={fmt(C)}\n")
    return EXIT_OK


def _simulate_one(params, steps, seed, min_count, outdir: Path):
    outdir.mkdir(parents=True, exist_ok=True)
    state, summary = sim.run(sim.SimConfig(params, steps, seed))
    j = stats.empirical_joint(state)
    w1, w2, c = j.arrays()
    write_csv(outdir / "empirical_joint.csv", ("w1", "w2", "count"), zip(w1, w2, c))
    for axis, name in (("fix_w1", "moments_w1.csv"), ("fix_w2", "moments_w2.csv")):
        rows = stats.conditional_moments(j, axis, min_count)
        write_csv(outdir / name, ("value", "count", "marginal", "mean", "second_moment"),
                  ((r.w1, r.count, r.marginal, r.mean, r.second_moment) for r in rows))
    items = [("command", "simulate"), ("N", params.N), ("p", params.p), ("q", params.q),
             ("r", params.r), ("steps", steps), ("seed", seed), ("min_count", min_count),
             ("version", __version__), ("vertices", summary.vertices),
             ("nstars", summary.nstars), ("n1stars", summary.n1stars)]
    items += [(f"branch_{k.replace('/', '_')}", v) for k, v in summary.branch_counts.items()]
    items.append(("digest", summary.digest))
    write_manifest(outdir / "manifest.txt", items)
    return seed, summary.digest


def cmd_simulate(args, out=None) -> int:
    out = out or sys.stdout
    params = _params(args)
    params.validate_simulation()
    sim.SimConfig(params, args.steps, args.seed)
    if args.min_count < 1:
        raise InputError("--min-count must be >= 1")
    if args.seeds is None:
        _, digest = _simulate_one(params, args.steps, args.seed, args.min_count, args.out)
        out.write(f"seed={args.seed}\ndigest={digest}\n")
        return EXIT_OK
    try:
        seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    except ValueError as exc:
        raise InputError(f"bad --seeds list: {args.seeds!r}") from exc
    for s in seeds:
        sim.SimConfig(params, args.steps, s)
    workers = args.workers or min(len(seeds), os.cpu_count() or 1)
    jobs = [(params, args.steps, s, args.min_count, args.out / f"seed_{s}") for s in seeds]
    if workers <= 1:
        results = [_simulate_one(*job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_simulate_one, *zip(*jobs)))
    for seed, digest in results:
        out.write(f"seed={seed} digest={digest}\n")
    return EXIT_OK


def read_moments_csv(path: Path):
    """Rows of a moments CSV from ``simulate`` or ``analytic`` as MomentRows."""
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        cols = set(reader.fieldnames or ())
        key = next((k for k in ("value", "w1", "w2") if k in cols), None)
        mean = "mean" if "mean" in cols else "E"
        second = "second_moment" if "second_moment" in cols else "M"
        if key is None or mean not in cols or second not in cols:
            raise InputError(f"{path}: unrecognised moments header {reader.fieldnames}")

        def num(s):
            return math.inf if s == "div" else float(s)

        rows = []
        for rec in reader:
            try:
                rows.append(an.MomentRow(
                    w1=int(rec[key]),
                    marginal=num(rec["marginal"]) if rec.get("marginal") else math.nan,
                    mean=num(rec[mean]),
                    second_moment=num(rec[second]),
                    count=int(rec["count"]) if rec.get("count") else None,
                ))
            except (TypeError, ValueError) as exc:
                raise InputError(f"{path}: bad row {rec}") from exc
    return rows


def cmd_fit(args, out=None) -> int:
    out = out or sys.stdout
    theoretical = None
    given = [v is not None for v in (args.N, args.p, args.q, args.r)]
    if any(given):
        if not all(given):
            raise InputError("--N, --p, --q and --r must be given together")
        d = derive(_params(args).validate_analytic())
        theoretical = an.taylor_constant(an.swap_roles(d) if args.swapped else d)
    rows = read_moments_csv(args.moments)
    fit = stats.loglog_fit(rows, args.min_count, theoretical, weighting=args.weighting)
    out.write(f"slope={fit.slope:.3f}\n")
    out.write(f"intercept={fit.intercept:.3f}\n")
    out.write(f"r_squared={fit.r_squared:.6f}\n")
    out.write(f"points_used={fit.points_used}\n")
    if theoretical is not None:
        out.write(f"theoretical_C={fmt(theoretical)}\n")
    if fit.excluded:
        out.write("excluded=" + ";".join(str(v) for v in fit.excluded) + "\n")
    return EXIT_OK


def cmd_compare(args, out=None) -> int:
    out = out or sys.stdout
    params = _params(args)
    params.validate_analytic()
    sim.SimConfig(params, args.steps, args.seed)
    if args.min_count < 1:
        raise InputError("--min-count must be >= 1")
    d = derive(params)
    state, summary = sim.run(sim.SimConfig(params, args.steps, args.seed))
    emp = stats.conditional_moments(stats.empirical_joint(state), "fix_w1", args.min_count)
    emp = [r for r in emp if r.w1 <= args.w1max]
    if not emp:
        raise InsufficientData("no w1 bin reaches --min-count")
    rows = []
    for r in emp:
        am = an.marginal_closed(d, r.w1)
        aE = an.expectation_closed(d, r.w1)
        aM = an.second_moment_closed(d, r.w1)
        rows.append((r.w1, am, r.marginal, _rel_err(r.marginal, am),
                     aE, r.mean, _rel_err(r.mean, aE),
                     aM, r.second_moment, _rel_err(r.second_moment, aM)))
    args.out.mkdir(parents=True, exist_ok=True)
    write_csv(args.out / "compare.csv",
              ("w1", "analytic_marginal", "empirical_marginal", "rel_err",
               "analytic_E", "empirical_E", "rel_err_E",
               "analytic_M", "empirical_M", "rel_err_M"), rows)
    write_manifest(args.out / "manifest.txt", [
        ("command", "compare"), ("N", params.N), ("p", params.p), ("q", params.q),
        ("r", params.r), ("steps", args.steps), ("seed", args.seed),
        ("w1max", args.w1max), ("min_count", args.min_count),
        ("version", __version__), ("digest", summary.digest),
        ("taylor_constant", an.taylor_constant(d)),
    ])
    out.write(f"rows={len(rows)}\ndigest={summary.digest}\n")
    return EXIT_OK


COMMANDS = {
    "derive": cmd_derive,
    "analytic": cmd_analytic,
    "simulate": cmd_simulate,
    "fit": cmd_fit,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        argv = _config_argv(argv)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args)
    except InsufficientData as exc:
        print(f"insufficient data: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT
    except (NStarsError, InputError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
