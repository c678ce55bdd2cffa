"""Command-line front end.

Subcommands: generate (write a seeded instance file), solve (one method
on one instance at one fee), bench (sweep fees x seeds x methods to a
CSV), gap (equilibrium diagnostics for a point file). Exit codes:
0 success, 1 solver non-convergence, 2 usage or validation error.

The environment variable NZS_THREADS caps bench parallelism (default:
all cores); each cell is serial, so reruns are reproducible cell-wise.
"""

import argparse
import csv
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from .instances import (fee_game, gen_sparse_experiment, reformulate_bilinear)
from .diagnostics import gap_report
from .icl import solve_icl
from .serialize import (read_instance, read_point, write_instance,
                        write_point, write_report)
from .solvers import SolverConfig, solve_eg, solve_ogda

CSV_HEADER = ["method", "rho", "seed", "queries_h", "queries_g",
              "queries_cert", "iterations", "certified_sq_distance",
              "wall_ms"]

DEFAULT_SEEDS = list(range(0, 1000, 111))
T1_RHOS = [0.0, 0.0003, 0.0006, 0.0009, 0.0012, 0.0015, 0.0018]
T4_RHOS = [0.0, 0.003, 0.006, 0.009, 0.012, 0.015, 0.018]


def _threads():
    raw = os.environ.get("NZS_THREADS", "")
    if raw.strip():
        return max(1, int(raw))
    return max(1, os.cpu_count() or 1)


def run_method(M, meta, rho, method, eps):
    """Solve one fee instance with one method; returns (report, row dict)."""
    mu, nu = float(meta["mu"]), float(meta["nu"])
    norm = float(meta.get("norm", 1.0))
    norm_abs = float(meta["norm_abs"])
    game = fee_game(M, rho, mu, nu)
    # smoothness bound that varies smoothly in rho, so baseline stepsizes
    # and certificates are fee-stable
    L = norm + rho * norm_abs + max(mu, nu)
    t0 = time.perf_counter()
    if method in ("eg", "ogda"):
        spec = game.game_spec(L=L, monotone_modulus=min(mu, nu) / 2)
        solver = solve_eg if method == "eg" else solve_ogda
        rep = solver(spec, SolverConfig(epsilon=eps))
    elif method == "icl":
        beta = 0.5 * rho * norm_abs  # = |(A+B)/2| for fee games
        ref = reformulate_bilinear(game, beta)
        spec = ref.game_spec(L=L + 2 * max(ref.beta1, ref.beta2))
        rep = solve_icl(spec, eps)
    else:
        raise ValueError(f"unknown method {method!r}")
    wall_ms = 1000.0 * (time.perf_counter() - t0)
    led = rep.ledger
    row = {
        "method": method, "rho": rho, "seed": int(meta.get("seed", -1)),
        "queries_h": led.main_queries(),
        "queries_g": led.g_queries,
        "queries_cert": led.cert_queries,
        "iterations": rep.iterations,
        "certified_sq_distance": rep.certified_sq_distance,
        "wall_ms": round(wall_ms, 3),
    }
    return rep, row


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_generate(args):
    if args.nnz > args.n * args.m:
        print("error: nnz exceeds n*m", file=sys.stderr)
        return 2
    _, data = gen_sparse_experiment(args.n, args.m, args.nnz, args.seed,
                                    args.mu, args.nu, normalize=args.normalize)
    M = data.pop("M")
    write_instance(args.out, M, data)
    print(f"wrote {args.out}: {args.m}x{args.n}, nnz={M.nnz}, "
          f"seed={args.seed}, norm={data['norm']:.6g}")
    return 0


def cmd_solve(args):
    M, meta = read_instance(args.instance)
    rep, row = run_method(M, meta, args.rho, args.method, args.eps)
    row["eps"] = args.eps
    row["status"] = rep.status
    out = args.out or (args.instance + f".{args.method}.report.json")
    write_report(out, row)
    if args.point_out:
        write_point(args.point_out, rep.point)
    cert = row["certified_sq_distance"]
    cert_txt = "n/a" if cert is None else f"{cert:.3e}"
    print(f"{args.method} rho={args.rho}: status={rep.status} "
          f"queries_h={row['queries_h']} certified={cert_txt} -> {out}")
    return 0 if rep.status == "converged" else 1


def _bench_cell(cell):
    n, m, nnz, seed, mu, nu, rho, method, eps = cell
    try:
        _, data = gen_sparse_experiment(n, m, nnz, seed, mu, nu,
                                        normalize=True)
        M = data.pop("M")
        _, row = run_method(M, data, rho, method, eps)
        return row
    except Exception as exc:  # mark the cell failed, keep sweeping
        return {"method": method, "rho": rho, "seed": seed,
                "queries_h": "", "queries_g": "", "queries_cert": "",
                "iterations": "", "certified_sq_distance": "",
                "wall_ms": "", "error": str(exc)}


def bench_rows(n, m, nnz, seeds, rhos, methods, mu, nu, eps, threads=None):
    cells = [(n, m, nnz, seed, mu, nu, rho, method, eps)
             for seed in seeds for rho in rhos for method in methods]
    threads = threads or _threads()
    if threads > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_bench_cell, cells))
    else:
        rows = [_bench_cell(c) for c in cells]
    rows.sort(key=lambda r: (r["method"], float(r["rho"]), int(r["seed"])))
    return rows


def summarize(rows):
    """Mean and 2-sigma of the h-query counts per (method, rho) cell."""
    groups = {}
    for r in rows:
        if r.get("error") or r["queries_h"] == "":
            continue
        groups.setdefault((r["method"], float(r["rho"])), []).append(
            float(r["queries_h"]))
    out = []
    for (method, rho), vals in sorted(groups.items()):
        arr = np.asarray(vals)
        out.append({"method": method, "rho": rho, "mean": float(arr.mean()),
                    "two_sigma": float(2.0 * arr.std(ddof=0)),
                    "runs": len(vals)})
    return out


def cmd_bench(args):
    if args.scale == "desk":
        n = m = 1000
        nnz = 10_000
    else:
        n = m = 10_000
        nnz = 100_000
    mu = 1e-4
    nu = 1.0 if args.table == "t1" else 0.01
    rhos = args.rho_list if args.rho_list is not None else (
        T1_RHOS if args.table == "t1" else T4_RHOS)
    seeds = args.seeds if args.seeds is not None else DEFAULT_SEEDS
    methods = args.methods.split(",")
    rows = bench_rows(n, m, nnz, seeds, rhos, methods, mu, nu, args.eps,
                      threads=args.threads)
    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_HEADER, extrasaction="ignore")
        writer.writeheader()
        writer.writerows(rows)
    failed = [r for r in rows if r.get("error")]
    print(f"wrote {args.out}: {len(rows)} rows ({len(failed)} failed cells)")
    for s in summarize(rows):
        print(f"  {s['method']:>4} rho={s['rho']:<7g} queries_h = "
              f"{s['mean']:.1f} +- {s['two_sigma']:.1f}  ({s['runs']} runs)")
    for r in failed:
        print(f"  FAILED {r['method']} rho={r['rho']} seed={r['seed']}: "
              f"{r['error']}", file=sys.stderr)
    return 0


def cmd_gap(args):
    M, meta = read_instance(args.instance)
    point = read_point(args.point)
    game = fee_game(M, args.rho, float(meta["mu"]), float(meta["nu"]))
    spec = game.game_spec()
    if not (spec.X.contains(point.x, 1e-8) and spec.Y.contains(point.y, 1e-8)):
        print("error: point is infeasible for the instance", file=sys.stderr)
        return 2
    rep = gap_report(spec, point)
    print(f"potential gap     : {rep.delta_value:.6e} "
          f"(+ residual {rep.delta_residual:.1e})")
    print(f"deviation gain    : {rep.deviation_gain:.6e} "
          f"(+ residual {rep.deviation_residual:.1e}) [{rep.method}]")
    if args.out:
        write_report(args.out, {
            "delta_value": rep.delta_value,
            "delta_residual": rep.delta_residual,
            "deviation_gain": rep.deviation_gain,
            "deviation_residual": rep.deviation_residual,
            "method": rep.method,
        })
    return 0


# ---------------------------------------------------------------------------

def _parse_float_list(text):
    return [float(tok) for tok in text.split(",") if tok.strip()]


def _parse_int_list(text):
    return [int(tok) for tok in text.split(",") if tok.strip()]


def build_parser():
    p = argparse.ArgumentParser(
        prog="nzs",
        description="solvers and benchmarks for monotone near-zero-sum games")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded sparse instance file")
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--m", type=int, required=True)
    g.add_argument("--nnz", type=int, required=True)
    g.add_argument("--seed", type=int, required=True)
    g.add_argument("--mu", type=float, default=1e-4)
    g.add_argument("--nu", type=float, default=1.0)
    g.add_argument("--normalize", action=argparse.BooleanOptionalAction,
                   default=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("solve", help="solve one instance with one method")
    s.add_argument("--method", choices=("icl", "ogda", "eg"), required=True)
    s.add_argument("--instance", required=True)
    s.add_argument("--rho", type=float, default=0.0)
    s.add_argument("--eps", type=float, default=1e-7)
    s.add_argument("--out")
    s.add_argument("--point-out", dest="point_out")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="fee sweep benchmark to CSV")
    b.add_argument("--table", choices=("t1", "t4"), default="t1")
    b.add_argument("--scale", choices=("desk", "paper"), default="desk")
    b.add_argument("--seeds", type=_parse_int_list, default=None)
    b.add_argument("--rho-list", type=_parse_float_list, default=None)
    b.add_argument("--methods", default="icl,ogda,eg")
    b.add_argument("--eps", type=float, default=1e-7)
    b.add_argument("--threads", type=int, default=None)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_bench)

    q = sub.add_parser("gap", help="diagnostics for a point on an instance")
    q.add_argument("--instance", required=True)
    q.add_argument("--point", required=True)
    q.add_argument("--rho", type=float, default=0.0)
    q.add_argument("--out")
    q.set_defaults(func=cmd_gap)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 2
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
