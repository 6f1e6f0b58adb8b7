"""Command-line interface: ``ssmlab {solve,game,threshold,sweep,simulate}``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import games, schemas
from .chain import HashDistribution
from .errors import DomainError, NumericalError, SimulationError, SSMError
from .propagation import parse_prop
from .revenue import VARIANTS, default_variant, relative_revenue
from .simkit import share_sigma, simulate

EXIT_OK, EXIT_DOMAIN, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
QUANTITIES = ("shares", "pne-class", "commitment-type", "sse-surplus", "coalition-penalty")
FMT = "%.9f"


def parse_alpha(text: str) -> HashDistribution:
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise DomainError(f"cannot parse alpha list {text!r}") from None
    return HashDistribution(vals)


def _emit(doc, name, out):
    doc = json.loads(json.dumps(doc))
    schemas.validate(doc, name)
    out.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _commit_doc(c: games.Commitment) -> dict:
    resp = None if c.response is None else games.StrategyProfile(c.response).label
    return {"s1": c.s1, "response": resp, "values": None if c.v is None else list(c.v), "n_pne": c.n_pne}


# -- commands ----------------------------------------------------------------


def cmd_solve(args, out):
    alpha = parse_alpha(args.alpha)
    prop = parse_prop(args.prop, alpha.m)
    prof = relative_revenue(alpha, prop, args.variant)
    _emit(
        {
            "alpha": list(alpha.alphas),
            "prop": prop.label,
            "variant": prof.variant,
            "shares": prof.shares.tolist(),
            "rates": prof.rates.tolist(),
            "residual": prof.residual,
        },
        "solve",
        out,
    )


def cmd_game(args, out):
    alpha = parse_alpha(args.alpha)
    prop = parse_prop(args.prop, alpha.m)
    base = {"alpha": list(alpha.alphas)}
    if args.what == "table":
        table = games.utility_table(alpha, prop, args.variant)
        if args.format == "csv":
            w = csv.writer(out, lineterminator="\n")
            w.writerow(["profile"] + [f"U{i + 1}" for i in range(alpha.m)])
            for k, u in table.items():
                w.writerow([k] + [FMT % v for v in u])
            return
        doc = dict(base, variant=args.variant or default_variant(), utilities={k: v.tolist() for k, v in table.items()})
        _emit(doc, "table", out)
    elif args.what == "pne":
        pne = games.enumerate_pne(alpha, prop, args.variant)
        _emit(dict(base, pne=[x.label for x in pne]), "pne", out)
    elif args.what == "sse":
        r = games.stackelberg(alpha, grid_step=args.grid_step, mode=args.mode, variant_game=args.partition, prop=prop, variant=args.variant)
        doc = dict(
            base,
            mode=r.mode,
            best=_commit_doc(r.best),
            optimal=[_commit_doc(c) for c in r.optimal],
            no_pne_commitments=r.no_pne,
            follower_gap=r.follower_gap,
        )
        _emit(doc, "sse", out)
    elif args.what == "coalitions":
        cs = games.penalizing_coalitions(alpha, args.victim - 1, prop, args.variant)
        doc = dict(base, victim=args.victim, coalitions=[{"members": [i + 1 for i in C], "penalty": p} for C, p in cs])
        _emit(doc, "coalitions", out)
    else:
        r = games.stackelberg(alpha, grid_step=args.grid_step, mode=args.mode, variant_game=args.partition, prop=prop, variant=args.variant)
        t = games.commitment_type(alpha, r, prop=prop, variant=args.variant, variant_game=args.partition)
        _emit(dict(base, commitment_type=t), "type", out)


def cmd_threshold(args, out):
    r = games.uniform_profitability_threshold(args.miners, args.tol, variant=args.variant)
    pareto = None
    if r.welfare_ssm is not None:
        pareto = all(s > h for s, h in zip(r.welfare_ssm, r.welfare_honest))
    doc = {
        "miners": r.m,
        "eta": r.eta,
        "welfare_ssm": r.welfare_ssm,
        "welfare_honest": r.welfare_honest,
        "gain_below": r.gain_below,
        "gain_above": r.gain_above,
        "pareto": pareto,
    }
    _emit(doc, "threshold", out)


def cmd_simulate(args, out):
    alpha = parse_alpha(args.alpha)
    prop = parse_prop(args.prop, alpha.m)
    specs = [s.strip() for s in args.strategies.split(",")]
    if args.blocks < 10_000:
        raise DomainError("--blocks must be at least 10000")
    if args.replicas < 1:
        raise DomainError("--replicas must be positive")
    runs = [simulate(alpha, specs, prop, args.blocks, args.seed, r) for r in range(args.replicas)]
    shares = np.array([r.shares for r in runs])
    mean = shares.mean(axis=0)
    if len(runs) > 1:
        half = 1.96 * shares.std(axis=0, ddof=1) / math.sqrt(len(runs))
    else:
        n = int(runs[0].counts.sum())
        half = np.array([1.96 * share_sigma(p, n) for p in mean])
    doc = {
        "alpha": list(alpha.alphas),
        "strategies": list(runs[0].kinds),
        "prop": prop.label,
        "blocks": args.blocks,
        "seed": args.seed,
        "replicas": args.replicas,
        "mean": mean.tolist(),
        "ci95": half.tolist(),
        "runs": [{"counts": r.counts.tolist(), "shares": r.shares.tolist(), "settle_steps": r.settle_steps} for r in runs],
    }
    _emit(doc, "simulate", out)


# -- sweeps ------------------------------------------------------------------


def _axis(text):
    try:
        i, lo, hi = text.split(":")
        return int(i) - 1, float(lo), float(hi)
    except ValueError:
        raise DomainError(f"bad --free {text!r}; expected I:LO:HI") from None


def _fixed(text):
    try:
        i, v = text.split("=")
        return int(i) - 1, float(v)
    except ValueError:
        raise DomainError(f"bad --fixed {text!r}; expected I=VALUE") from None


def sweep_points(free, fixed, step):
    """Grid points in deterministic order (first free axis slowest)."""
    if not 1e-3 <= step <= 0.05:
        raise DomainError("--step must lie in [1e-3, 0.05]")
    idx = [i for i, _, _ in free] + [i for i, _ in fixed]
    if not idx:
        raise DomainError("sweep needs at least one --free or --fixed axis")
    if len(set(idx)) != len(idx) or min(idx) < 0:
        raise DomainError("each miner index must appear once, starting at 1")
    m = max(idx) + 1
    if sorted(idx) != list(range(m)):
        raise DomainError("free and fixed axes must cover miners 1..M")
    axes = []
    for i, lo, hi in free:
        n = int(math.floor((hi - lo) / step + 1e-9))
        axes.append([round(lo + k * step, 12) for k in range(n + 1)])
    pts = []
    for combo in np.array(np.meshgrid(*axes, indexing="ij")).reshape(len(axes), -1).T if axes else [()]:
        a = [0.0] * m
        for (i, _, _), v in zip(free, combo):
            a[i] = float(v)
        for i, v in fixed:
            a[i] = v
        pts.append(tuple(a))
    return m, pts


def sweep_columns(m, quantity):
    cols = {
        "shares": [f"share{i + 1}" for i in range(m)] + ["share_honest"],
        "pne-class": ["pne", "n_pne"],
        "commitment-type": ["type", "s1_star", "v1"],
        "sse-surplus": ["s1_star", "v1", "best_pne_u1", "worst_pne_u1", "surplus_best", "surplus_worst"],
        "coalition-penalty": ["coalitions", "min_penalty"],
    }[quantity]
    return [f"alpha{i + 1}" for i in range(m)] + cols + ["error"]


def _fmt(v):
    if isinstance(v, float):
        return FMT % v
    return str(v)


def sweep_row(point, quantity, prop_spec, variant):
    """One CSV row; failures land in the error column."""
    m = len(point)
    ncols = len(sweep_columns(m, quantity)) - m - 1
    head = [FMT % a for a in point]
    try:
        alpha = HashDistribution(point)
        prop = parse_prop(prop_spec, m)
        if quantity == "shares":
            vals = relative_revenue(alpha, prop, variant).shares.tolist()
        elif quantity == "pne-class":
            pne = games.enumerate_pne(alpha, prop, variant)
            vals = ["|".join(x.label for x in pne), len(pne)]
        elif quantity == "coalition-penalty":
            cs = games.penalizing_coalitions(alpha, 0, prop, variant)
            label = "|".join("+".join(str(i + 1) for i in C) for C, _ in cs)
            vals = [label, min((p for _, p in cs), default=float("nan"))]
        else:
            r = games.stackelberg(alpha, prop=prop, variant=variant)
            if quantity == "commitment-type":
                vals = [games.commitment_type(alpha, r, prop=prop, variant=variant), r.best.s1, r.best.value]
            else:
                table = games.utility_table(alpha, prop, variant)
                u1 = [table[x.label][0] for x in games.enumerate_pne(alpha, table=table)]
                best, worst = (max(u1), min(u1)) if u1 else (float("nan"), float("nan"))
                vals = [r.best.s1, r.best.value, best, worst, r.best.value - best, r.best.value - worst]
        return head + [_fmt(v) for v in vals] + [""]
    except SSMError as exc:
        return head + [""] * ncols + [str(exc).replace("\n", " ")]


def _chunk(args):
    pts, quantity, prop_spec, variant = args
    return [sweep_row(p, quantity, prop_spec, variant) for p in pts]


def run_sweep(points, quantity, prop_spec="uniform", variant=None, jobs=1):
    """Rows for every point, in input order; static partition over ``jobs`` workers."""
    variant = variant or default_variant()
    if quantity not in QUANTITIES:
        raise DomainError(f"unknown quantity {quantity!r}")
    if jobs <= 1 or len(points) < 2:
        return _chunk((points, quantity, prop_spec, variant))
    jobs = min(jobs, len(points))
    size = math.ceil(len(points) / jobs)
    parts = [(points[k : k + size], quantity, prop_spec, variant) for k in range(0, len(points), size)]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return [row for rows in ex.map(_chunk, parts) for row in rows]


def write_sweep(fh, m, quantity, rows, prop_spec, variant):
    cols = sweep_columns(m, quantity)
    fh.write(f"# ssmlab sweep quantity={quantity} prop={prop_spec} variant={variant}; columns: {' '.join(cols)}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(cols)
    w.writerows(rows)


def cmd_sweep(args, out):
    free = [_axis(t) for t in args.free]
    fixed = [_fixed(t) for t in args.fixed]
    m, pts = sweep_points(free, fixed, args.step)
    variant = args.variant or default_variant()
    rows = run_sweep(pts, args.quantity, args.prop, variant, args.jobs)
    if args.out in (None, "-"):
        write_sweep(out, m, args.quantity, rows, args.prop, variant)
    else:
        with open(args.out, "w", encoding="utf-8", newline="") as fh:
            write_sweep(fh, m, args.quantity, rows, args.prop, variant)


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ssmlab", description="Semi-selfish mining revenue and game analysis.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--prop", default="uniform", help="uniform | gamma=G | table=FILE")
    common.add_argument("--variant", choices=VARIANTS, default=None, help="S22 revenue row (default: $SSMLAB_VARIANT or appendix)")
    sub = p.add_subparsers(dest="cmd", required=True)

    s = sub.add_parser("solve", parents=[common], help="steady-state relative revenue")
    s.add_argument("--alpha", required=True)
    s.set_defaults(func=cmd_solve)

    g = sub.add_parser("game", parents=[common], help="binary and partition game analysis")
    g.add_argument("what", choices=["table", "pne", "sse", "coalitions", "type"])
    g.add_argument("--alpha", required=True)
    g.add_argument("--format", choices=["json", "csv"], default="json")
    g.add_argument("--victim", type=int, default=1)
    g.add_argument("--grid-step", type=float, default=1e-3)
    g.add_argument("--mode", choices=["sse", "pessimistic"], default=None)
    g.add_argument("--partition", choices=games.PARTITION_VARIANTS, default="literal")
    g.set_defaults(func=cmd_game)

    t = sub.add_parser("threshold", parents=[common], help="uniform profitability threshold")
    t.add_argument("--miners", type=int, required=True)
    t.add_argument("--tol", type=float, default=1e-6)
    t.set_defaults(func=cmd_threshold)

    w = sub.add_parser("sweep", parents=[common], help="grid sweep to CSV")
    w.add_argument("--free", action="append", default=[], help="I:LO:HI (1-based miner index)")
    w.add_argument("--fixed", action="append", default=[], help="I=VALUE")
    w.add_argument("--step", type=float, default=0.005)
    w.add_argument("--quantity", choices=QUANTITIES, default="shares")
    w.add_argument("--out", default=None)
    w.add_argument("--jobs", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    m = sub.add_parser("simulate", parents=[common], help="Monte Carlo simulation")
    m.add_argument("--alpha", required=True)
    m.add_argument("--strategies", required=True, help="comma list of honest|sm|ssm")
    m.add_argument("--blocks", type=int, default=1_000_000)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--replicas", type=int, default=1)
    m.set_defaults(func=cmd_simulate)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        if getattr(args, "variant", None) is None:
            args.variant = default_variant()
        args.func(args, out)
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (NumericalError, SimulationError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def run(argv=None) -> str:
    """Run the CLI and return stdout (raises ``SystemExit`` on nonzero exit)."""
    buf = io.StringIO()
    code = main(argv, buf)
    if code:
        raise SystemExit(code)
    return buf.getvalue()


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
