"""Command-line interface: ``pdbinopt {solve,gen-rrg,oracle}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from . import io as pio
from .constraints import ConstraintFunction
from .kcut import kcut_solve
from .oracle import CapacityError, brute_force_kcut, brute_force_min
from .problems import (cnf_to_poly, decode_cut, decode_mis, decode_sat, maxcut_to_poly,
                       mis_to_poly)
from .solver import ConfigError, SolverConfig, solve

PROBLEMS = ("maxcut", "mis", "maxksat", "maxkcut")
DEFAULT_TIME_LIMIT = 180.0


class UsageError(Exception):
    pass


def _num(v: float) -> str:
    v = float(v)
    return str(int(v)) if v.is_integer() else repr(v)


def _load(problem: str, path: str):
    try:
        if problem == "maxksat":
            return pio.read_dimacs_cnf(path)
        return pio.read_gset(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    except pio.ParseError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _config(args) -> SolverConfig:
    try:
        g = ConstraintFunction.parse(args.g) if args.g else None
        return SolverConfig.for_problem(
            args.problem, alpha=args.alpha, beta=args.beta, delta=args.delta,
            epsilon=args.eps, y0=args.y0, batch=args.batch, t_max=args.tmax,
            time_limit=args.time_limit, seed=args.seed, g_kind=g)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_solve(args) -> int:
    inst = _load(args.problem, args.input)
    cfg = _config(args)
    threads = args.threads or os.cpu_count() or 1
    name = Path(args.input).stem
    feasible = None
    try:
        if args.problem == "maxkcut":
            if args.k < 2:
                raise UsageError("--k must be at least 2")
            rep = kcut_solve(inst, args.k, cfg, threads=threads)
            obj, labels = rep.cut_value, rep.assignment
        else:
            if args.problem == "maxcut":
                p, sense = maxcut_to_poly(inst), "max"
            elif args.problem == "mis":
                p, sense = mis_to_poly(inst, args.lam), "max"
            else:
                p, sense = cnf_to_poly(inst), "min"
            rep = solve(p, cfg, sense=sense, threads=threads)
            labels = rep.best_binary
            if args.problem == "maxcut":
                obj = decode_cut(labels, inst)
            elif args.problem == "mis":
                obj, feasible = decode_mis(labels, inst)
            else:
                obj = decode_sat(labels, inst)
    except ConfigError as exc:
        raise UsageError(str(exc)) from None

    record = pio.ResultRecord(instance=name, problem=args.problem, objective=float(obj),
                              time_to_best=rep.time_to_best, iterations=rep.iterations_run,
                              config=cfg.fingerprint(), feasible=feasible)
    if args.out:
        pio.write_results([record], args.out, args.csv)
    if args.trace:
        with open(args.trace, "w") as fh:
            for row in rep.trace_records():
                fh.write(json.dumps(row) + "\n")
    if args.assignment:
        with open(args.assignment, "w") as fh:
            fh.writelines(f"{i} {int(c)}\n" for i, c in enumerate(labels))
            fh.write(json.dumps({"objective": float(obj), "problem": args.problem}) + "\n")
    if rep.status == "numeric_failure":
        print("numeric failure in every run", file=sys.stderr)
        return 1
    extra = "" if feasible is None else f" feasible={str(feasible).lower()}"
    print(f"obj={_num(obj)} time={rep.time_to_best:.3f}{extra}")
    return 0


def cmd_gen_rrg(args) -> int:
    try:
        G = pio.gen_rrg(args.n, args.d, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = pio.format_gset(G)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_oracle(args) -> int:
    inst = _load(args.problem, args.input)
    try:
        if args.problem == "maxkcut":
            labels, opt = brute_force_kcut(inst, args.k)
        elif args.problem == "maxcut":
            labels, val = brute_force_min(maxcut_to_poly(inst))
            opt = -val
        elif args.problem == "mis":
            labels, val = brute_force_min(mis_to_poly(inst, args.lam))
            opt = -val
        else:
            labels, opt = brute_force_min(cnf_to_poly(inst))
    except CapacityError as exc:
        raise UsageError(str(exc)) from None
    print(f"opt={_num(opt)}")
    print("argmin=" + "".join(str(int(c)) for c in labels))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pdbinopt",
                                 description="Primal-dual binary optimization solver")
    sub = ap.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve an instance")
    s.add_argument("--problem", choices=PROBLEMS, required=True)
    s.add_argument("--input", required=True)
    s.add_argument("--k", type=int, default=3, help="parts for maxkcut")
    s.add_argument("--lambda", dest="lam", type=float, default=4.0, help="MIS edge penalty")
    s.add_argument("--alpha", type=float)
    s.add_argument("--beta", type=float)
    s.add_argument("--delta", type=float, default=0.01)
    s.add_argument("--eps", type=float)
    s.add_argument("--y0", type=float)
    s.add_argument("--batch", type=int)
    s.add_argument("--tmax", type=int)
    s.add_argument("--time-limit", type=float, default=DEFAULT_TIME_LIMIT)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--g", help="quadratic | entropy | evenpoly:<d>")
    s.add_argument("--threads", type=int, default=None,
                   help="worker threads (default: CPU count); results do not depend on it")
    s.add_argument("--out", help="JSONL result file")
    s.add_argument("--csv", help="CSV summary (instance,obj,time); needs --out")
    s.add_argument("--trace", help="JSONL checkpoint trace")
    s.add_argument("--assignment", help="per-node labels, one 'node label' line each")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("gen-rrg", help="random d-regular graph in Gset format")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--d", type=int, required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--out")
    r.set_defaults(func=cmd_gen_rrg)

    o = sub.add_parser("oracle", help="exact optimum of a small instance by enumeration")
    o.add_argument("--problem", choices=PROBLEMS, required=True)
    o.add_argument("--input", required=True)
    o.add_argument("--k", type=int, default=3)
    o.add_argument("--lambda", dest="lam", type=float, default=4.0)
    o.set_defaults(func=cmd_oracle)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
