"""Command-line harness: generate, solve, sweep, verify.

Exit codes: 0 success, 1 usage error, 2 solver error, 3 verification
failure.  All flags are long names.  The default seed comes from the
``LSQ_SEED`` environment variable when ``--seed`` is absent.

Index conventions: the text file formats (.lsm/.vec) and the ``--entries``
flag are 1-based; JSON reports store 0-based indices and say so with an
``index_base`` field.
"""

import argparse
import csv
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict
from time import perf_counter

import numpy as np

from . import report as report_mod
from . import storage
from .errors import LsqError
from .instances import Instance, InstanceSpec, generate_instance
from .lsaccess import LsMatrix
from .oracle import (MAX_ORACLE_DIM, MAX_ORACLE_SKETCH_ROWS,
                     enumerate_rejection_distribution, exact_ls_distribution,
                     residual_report, tv_distance)
from .linalg import pseudoinverse_apply
from .rng import stream
from .solver import (SolverConfig, sample_solutions, solution_norm,
                     solve_pipeline)

# refuse sketches past these sizes unless --force is given
R_BUDGET = 5000
C_BUDGET = 20000

_SWEEP_COLUMNS = ["seed", "m", "n", "k", "kappa", "r", "c", "rel_residual",
                  "tv_distance", "t_sketch_ms", "t_svd_ms", "t_lambda_ms",
                  "t_sample_ms", "reject_rounds_mean"]


class _Parser(argparse.ArgumentParser):
    """argparse with usage failures mapped to exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _default_seed() -> int:
    return int(os.environ.get("LSQ_SEED", "0"))


def _add_instance_flags(p: _Parser, require: bool) -> None:
    p.add_argument("--m", type=int, required=require)
    p.add_argument("--n", type=int, required=require)
    p.add_argument("--k", type=int, required=require)
    p.add_argument("--kappa", type=float, required=require)
    p.add_argument("--projection-fraction", type=float, default=0.9)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--flavor", choices=["synthetic-lowrank", "portfolio-returns"],
                   default="synthetic-lowrank")
    p.add_argument("--frob-target", type=float, default=None)


def _add_solver_flags(p: _Parser) -> None:
    p.add_argument("--mode", choices=["manual", "theoretical"], default="manual")
    p.add_argument("--r", type=int, default=None)
    p.add_argument("--c", type=int, default=None)
    p.add_argument("--epsilon", type=float, default=0.25)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--lambda-backend", choices=["exact", "sampled"],
                   default="exact")
    p.add_argument("--sigma-floor", type=float, default=None)
    p.add_argument("--rejection-cap", type=int, default=None)
    p.add_argument("--force", action="store_true",
                   help="override the sketch size budget "
                        f"(r <= {R_BUDGET}, c <= {C_BUDGET})")


def build_parser() -> _Parser:
    parser = _Parser(prog="lsqsolve",
                     description="Sketch-based pseudoinverse regression with "
                                 "length-square sampling access.")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a seeded instance to files")
    _add_instance_flags(g, require=True)
    g.add_argument("--seed", type=int, default=None)
    g.add_argument("--out-matrix", required=True)
    g.add_argument("--out-vector", required=True)

    s = sub.add_parser("solve", help="solve one instance and write a report")
    _add_instance_flags(s, require=False)
    s.add_argument("--matrix", default=None, help=".lsm file instead of generating")
    s.add_argument("--rhs", default=None, help=".vec file instead of generating")
    _add_solver_flags(s)
    s.add_argument("--seed", type=int, default=None)
    s.add_argument("--samples", type=int, default=0,
                   help="draw this many solution indices")
    s.add_argument("--entries", default=None,
                   help="comma-separated 1-based solution entries to query")
    s.add_argument("--verify", action="store_true",
                   help="run the exact oracle suite on the result")
    s.add_argument("--report", default=None, help="write the JSON run report here")
    s.add_argument("--omit-timings", action="store_true",
                   help="canonical report without wall-clock timings")

    w = sub.add_parser("sweep", help="grid of (r, c, seed) cells to CSV")
    _add_instance_flags(w, require=True)
    w.add_argument("--r-list", required=True, help="comma-separated r values")
    w.add_argument("--c-list", required=True, help="comma-separated c values")
    w.add_argument("--seed-list", required=True, help="comma-separated seeds")
    w.add_argument("--epsilon", type=float, default=0.25)
    w.add_argument("--eta", type=float, default=0.1)
    w.add_argument("--lambda-backend", choices=["exact", "sampled"],
                   default="exact")
    w.add_argument("--samples", type=int, default=100,
                   help="solution samples per cell for rejection statistics")
    w.add_argument("--csv", required=True)
    w.add_argument("--report", default=None)
    w.add_argument("--jobs", type=int, default=1)
    w.add_argument("--check-scaling", action="store_true",
                   help="fail (exit 3) on residual monotonicity or timing "
                        "scaling violations")
    w.add_argument("--force", action="store_true")

    v = sub.add_parser("verify", help="replay a run report and re-check it")
    v.add_argument("--report", required=True)
    v.add_argument("--out", default=None,
                   help="write the updated report (with verification) here")
    return parser


# -- shared helpers ----------------------------------------------------------


def _instance_from_args(args, seed: int) -> Instance:
    spec = InstanceSpec(m=args.m, n=args.n, k=args.k, kappa=args.kappa,
                        projection_fraction=args.projection_fraction,
                        noise=args.noise, seed=seed, flavor=args.flavor,
                        frob_target=args.frob_target)
    return generate_instance(spec)


def _check_budget(r: int, c: int, force: bool) -> None:
    if not force and (r > R_BUDGET or c > C_BUDGET):
        raise LsqError(
            f"plan asks for r={r}, c={c} beyond the budget "
            f"(r <= {R_BUDGET}, c <= {C_BUDGET}); pass --force to override")


def _run_verification(dense, b, handle, epsilon) -> dict:
    """Exact oracle suite on one solved instance; all desk-scale checks."""
    checks = {}
    m, n = dense.shape
    gated = (m <= MAX_ORACLE_DIM and n <= MAX_ORACLE_DIM
             and handle.sketch.r <= MAX_ORACLE_SKETCH_ROWS)
    if not gated:
        return {"skipped": True,
                "reason": "instance exceeds the oracle size gate"}
    rep = residual_report(dense, b, handle, epsilon=epsilon)
    x = pseudoinverse_apply(dense, b, 0.0)
    x_tilde = handle.materialize()
    law_tv = tv_distance(enumerate_rejection_distribution(handle),
                         exact_ls_distribution(x_tilde))
    solution_tv = tv_distance(exact_ls_distribution(x_tilde),
                              exact_ls_distribution(x)) \
        if np.linalg.norm(x) > 0.0 else float("inf")
    euclid_bound = 2.0 * float(np.linalg.norm(x_tilde - x)) \
        / max(float(np.linalg.norm(x_tilde)), float(np.linalg.norm(x)))
    checks["rejection_law_tv"] = law_tv
    checks["rejection_law_ok"] = bool(law_tv <= 1e-12)
    checks["solution_tv"] = solution_tv
    checks["solution_tv_bound"] = euclid_bound
    checks["solution_tv_ok"] = bool(solution_tv <= euclid_bound + 1e-12)
    checks["rel_residual"] = rep.rel_residual
    checks["projection_fraction"] = rep.projection_fraction
    checks["lambda_ratio_sum"] = rep.lambda_ratio_sum
    checks["lambda_ratio_bound"] = rep.lambda_ratio_bound
    checks["lambda_ratio_ok"] = bool(rep.lambda_ratio_sum
                                     <= rep.lambda_ratio_bound)
    checks["chain_lhs"] = rep.lambda_perturbation
    checks["chain_rhs_measured"] = rep.chain_rhs_measured
    checks["chain_ok"] = bool(rep.lambda_perturbation
                              <= rep.chain_rhs_measured + 1e-9)
    checks["hypothesis_ok"] = rep.hypothesis_ok
    checks["skipped"] = False
    checks["ok"] = bool(checks["rejection_law_ok"] and checks["solution_tv_ok"]
                        and checks["lambda_ratio_ok"] and checks["chain_ok"])
    return checks


def _solve_once(ls, b, config):
    handle, timings = solve_pipeline(ls, b, config)
    timings_ms = {f"t_{k}_ms": v * 1000.0 for k, v in timings.items()}
    return handle, timings_ms


# -- commands ----------------------------------------------------------------


def _cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    inst = _instance_from_args(args, seed)
    storage.save_matrix_lsm(args.out_matrix, inst.dense)
    storage.save_vector_vec(args.out_vector, inst.b)
    print(f"wrote {args.out_matrix} ({args.m} x {args.n}, rank {args.k}) "
          f"and {args.out_vector} (seed {seed})")
    return 0


def _cmd_solve(args, parser: _Parser) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    from_files = args.matrix is not None or args.rhs is not None
    if from_files and (args.matrix is None or args.rhs is None):
        parser.error("--matrix and --rhs must be given together")
    if from_files:
        if args.k is None or args.kappa is None:
            parser.error("--k and --kappa are required with --matrix/--rhs")
        dense = storage.load_matrix_lsm(args.matrix)
        b = storage.load_vector_vec(args.rhs)
        instance_desc = {"kind": "files", "matrix": args.matrix,
                         "rhs": args.rhs, "k": args.k, "kappa": args.kappa}
        inst = None
    else:
        for field in ("m", "n", "k", "kappa"):
            if getattr(args, field) is None:
                parser.error(f"--{field} is required when generating inline")
        inst = _instance_from_args(args, seed)
        dense = inst.dense
        b = inst.b
        instance_desc = {"kind": "generated", "spec": asdict(inst.spec)}
    if args.mode == "manual" and (args.r is None or args.c is None):
        parser.error("--r and --c are required in manual mode")

    config = SolverConfig(epsilon=args.epsilon, eta=args.eta, kappa=args.kappa,
                          k=args.k, mode=args.mode, r=args.r, c=args.c,
                          lambda_backend=args.lambda_backend,
                          rejection_cap=args.rejection_cap,
                          sigma_floor=args.sigma_floor, seed=seed)
    ls = inst.ls_matrix() if inst is not None else LsMatrix(dense)
    if args.mode == "theoretical":
        from .sketch import plan_sketch
        pre_plan = plan_sketch(n=ls.n, k=args.k, kappa=args.kappa,
                               frob=ls.frobenius_norm(), epsilon=args.epsilon,
                               eta=args.eta, mode="theoretical")
        _check_budget(pre_plan.r, pre_plan.c, args.force)
    else:
        _check_budget(args.r, args.c, args.force)

    handle, timings_ms = _solve_once(ls, b, config)

    entries = None
    if args.entries:
        try:
            idx1 = [int(tok) for tok in args.entries.split(",") if tok]
        except ValueError:
            parser.error("--entries expects comma-separated integers")
        idx0 = np.asarray(idx1, dtype=np.int64) - 1
        if np.any(idx0 < 0) or np.any(idx0 >= ls.n):
            parser.error("--entries indices outside 1..n")
        values = handle.query_entries(idx0)
        entries = {"indices": idx0, "values": values}

    samples = None
    t_sample = 0.0
    if args.samples > 0:
        t0 = perf_counter()
        idx, rounds = sample_solutions(handle, stream(seed, "samples"),
                                       args.samples)
        t_sample = perf_counter() - t0
        samples = {"count": args.samples, "indices": idx, "rounds": rounds,
                   "rounds_mean": float(rounds.mean())}
    timings_ms["t_sample_ms"] = t_sample * 1000.0

    verification = None
    if args.verify:
        verification = _run_verification(dense, b, handle, args.epsilon)

    rep = report_mod.build_report(
        instance=instance_desc,
        config={"epsilon": args.epsilon, "eta": args.eta, "kappa": args.kappa,
                "k": args.k, "mode": args.mode, "r": args.r, "c": args.c,
                "lambda_backend": args.lambda_backend, "seed": seed,
                "sigma_floor": args.sigma_floor,
                "rejection_cap": args.rejection_cap},
        plan={"r": handle.plan.r, "c": handle.plan.c,
              "theoretical_r": handle.plan.theoretical_r,
              "theoretical_c": handle.plan.theoretical_c,
              "mode": handle.plan.mode, "frob": handle.plan.frob},
        handle=handle,
        timings_ms=None if args.omit_timings else timings_ms,
        samples=samples, entries=entries, verification=verification)
    rep["index_base"] = 0

    if args.report:
        report_mod.write_report(args.report, rep)

    print(f"detected rank {handle.spectrum.detected_rank}, "
          f"||w|| = {handle.w_norm:.6g}, r = {handle.plan.r}, c = {handle.plan.c}")
    if verification is not None and not verification.get("skipped", False):
        print(f"rel residual {verification['rel_residual']:.4g}, "
              f"rejection-law TV {verification['rejection_law_tv']:.3g}")
    if args.report:
        print(f"report: {args.report}")
    if verification is not None and not verification.get("skipped", False) \
            and not verification["ok"]:
        print("verification FAILED", file=sys.stderr)
        return 3
    return 0


def _sweep_cell(params: dict) -> dict:
    """One sweep cell; self-contained so it can run in a worker process."""
    spec = InstanceSpec(**params["spec"])
    inst = generate_instance(spec)
    ls = inst.ls_matrix()
    config = SolverConfig(epsilon=params["epsilon"], eta=params["eta"],
                          kappa=spec.kappa, k=spec.k, mode="manual",
                          r=params["r"], c=params["c"],
                          lambda_backend=params["lambda_backend"],
                          seed=spec.seed)
    handle, timings = solve_pipeline(ls, inst.b, config)
    row = {"seed": spec.seed, "m": spec.m, "n": spec.n, "k": spec.k,
           "kappa": spec.kappa, "r": params["r"], "c": params["c"]}
    gated = (spec.m <= MAX_ORACLE_DIM and spec.n <= MAX_ORACLE_DIM
             and handle.sketch.r <= MAX_ORACLE_SKETCH_ROWS)
    if gated:
        x = pseudoinverse_apply(inst.dense, inst.b, 0.0)
        x_tilde = handle.materialize()
        x_norm = float(np.linalg.norm(x))
        row["rel_residual"] = float(np.linalg.norm(x_tilde - x) / x_norm) \
            if x_norm > 0 else float("nan")
        row["tv_distance"] = tv_distance(exact_ls_distribution(x_tilde),
                                         exact_ls_distribution(x)) \
            if x_norm > 0 else float("nan")
    else:
        row["rel_residual"] = float("nan")
        row["tv_distance"] = float("nan")
    row["t_sketch_ms"] = timings["sketch"] * 1000.0
    row["t_svd_ms"] = timings["svd"] * 1000.0
    row["t_lambda_ms"] = timings["lambda"] * 1000.0
    if params["samples"] > 0:
        t0 = perf_counter()
        _, rounds = sample_solutions(handle, stream(spec.seed, "samples"),
                                     params["samples"])
        row["t_sample_ms"] = (perf_counter() - t0) * 1000.0
        row["reject_rounds_mean"] = float(rounds.mean())
    else:
        row["t_sample_ms"] = float("nan")
        row["reject_rounds_mean"] = float("nan")
    return row


def _scaling_checks(rows: list[dict]) -> dict:
    """Residual monotonicity in r (fixed c) and the SVD-time scaling slope."""
    checks = {}
    by_c = {}
    for row in rows:
        by_c.setdefault(row["c"], {}).setdefault(row["r"], []).append(
            row["rel_residual"])
    monotone = True
    for c_val, groups in by_c.items():
        if len(groups) < 2:
            continue
        rs = sorted(groups)
        medians = [float(np.median(groups[r])) for r in rs]
        if any(not (m2 <= m1 * 1.05 + 1e-12) for m1, m2 in zip(medians, medians[1:])
               if not (math.isnan(m1) or math.isnan(m2))):
            monotone = False
        checks.setdefault("residual_medians", {})[str(c_val)] = dict(
            zip(map(str, rs), medians))
    checks["residual_monotone"] = monotone

    cells = {}
    for row in rows:
        cells.setdefault((row["r"], row["c"]), []).append(row["t_svd_ms"])
    if len(cells) >= 2:
        xs = np.array([math.log(r * r * c) for (r, c) in cells])
        ys = np.array([math.log(max(float(np.median(ts)), 1e-9))
                       for ts in cells.values()])
        slope = float(np.polyfit(xs, ys, 1)[0])
        checks["svd_time_slope"] = slope
        checks["svd_time_slope_ok"] = bool(0.8 <= slope <= 1.2)
    return checks


def _cmd_sweep(args, parser: _Parser) -> int:
    try:
        r_list = [int(x) for x in args.r_list.split(",") if x]
        c_list = [int(x) for x in args.c_list.split(",") if x]
        seed_list = [int(x) for x in args.seed_list.split(",") if x]
    except ValueError:
        parser.error("--r-list/--c-list/--seed-list expect comma-separated ints")
    if not r_list or not c_list or not seed_list:
        parser.error("the sweep grid is empty")
    for r in r_list:
        for c in c_list:
            _check_budget(r, c, args.force)

    cells = []
    for r in r_list:
        for c in c_list:
            for seed in seed_list:
                cells.append({
                    "spec": {"m": args.m, "n": args.n, "k": args.k,
                             "kappa": args.kappa,
                             "projection_fraction": args.projection_fraction,
                             "noise": args.noise, "seed": seed,
                             "flavor": args.flavor,
                             "frob_target": args.frob_target},
                    "r": r, "c": c, "epsilon": args.epsilon, "eta": args.eta,
                    "lambda_backend": args.lambda_backend,
                    "samples": args.samples})
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(_sweep_cell, cells))
    else:
        rows = [_sweep_cell(cell) for cell in cells]

    with open(args.csv, "w", newline="", encoding="ascii") as fh:
        writer = csv.DictWriter(fh, fieldnames=_SWEEP_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(row[k]) if isinstance(row[k], float)
                             else row[k] for k in _SWEEP_COLUMNS})

    checks = _scaling_checks(rows)
    if args.report:
        report_mod.write_report(args.report,
                                {"format": "lsqsolve-sweep/1",
                                 "grid": rows, "checks": checks})
    print(f"wrote {len(rows)} rows to {args.csv}")
    if "svd_time_slope" in checks:
        print(f"svd time slope vs r^2 c: {checks['svd_time_slope']:.3f}")
    if args.check_scaling:
        ok = checks.get("residual_monotone", True) and \
            checks.get("svd_time_slope_ok", True)
        if not ok:
            print("scaling checks FAILED", file=sys.stderr)
            return 3
    return 0


def _cmd_verify(args) -> int:
    rep = report_mod.load_report(args.report)
    inst_desc = rep["instance"]
    config_desc = rep["config"]
    if inst_desc["kind"] == "generated":
        spec_kwargs = dict(inst_desc["spec"])
        inst = generate_instance(InstanceSpec(**spec_kwargs))
        dense, b = inst.dense, inst.b
        ls = inst.ls_matrix()
    else:
        dense = storage.load_matrix_lsm(inst_desc["matrix"])
        b = storage.load_vector_vec(inst_desc["rhs"])
        ls = LsMatrix(dense)

    config = SolverConfig(epsilon=config_desc["epsilon"],
                          eta=config_desc["eta"],
                          kappa=config_desc["kappa"], k=config_desc["k"],
                          mode=config_desc["mode"], r=config_desc["r"],
                          c=config_desc["c"],
                          lambda_backend=config_desc["lambda_backend"],
                          rejection_cap=config_desc["rejection_cap"],
                          sigma_floor=config_desc["sigma_floor"],
                          seed=config_desc["seed"])
    handle, _ = _solve_once(ls, b, config)

    replay = report_mod.handle_payload(handle)
    stored = rep["solution"]
    replay_json = report_mod.dump_report(replay)
    stored_json = report_mod.dump_report(stored)
    replay_ok = replay_json == stored_json

    samples_ok = True
    if "samples" in rep:
        idx, rounds = sample_solutions(
            handle, stream(config_desc["seed"], "samples"),
            rep["samples"]["count"])
        samples_ok = (list(map(int, idx)) == list(map(int, rep["samples"]["indices"]))
                      and list(map(int, rounds)) == list(map(int, rep["samples"]["rounds"])))

    oracle_checks = _run_verification(dense, b, handle,
                                      config_desc["epsilon"])
    verification = {"replay_ok": replay_ok, "samples_ok": samples_ok,
                    "oracle": oracle_checks}
    rep["verification"] = verification
    out = args.out or args.report
    report_mod.write_report(out, rep)

    ok = replay_ok and samples_ok and (oracle_checks.get("skipped", False)
                                       or oracle_checks["ok"])
    print(f"replay {'ok' if replay_ok else 'MISMATCH'}, "
          f"samples {'ok' if samples_ok else 'MISMATCH'}, "
          f"oracle {'skipped' if oracle_checks.get('skipped') else ('ok' if oracle_checks.get('ok') else 'FAILED')}")
    if not ok:
        return 3
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "generate":
            return _cmd_generate(args)
        if args.command == "solve":
            return _cmd_solve(args, parser)
        if args.command == "sweep":
            return _cmd_sweep(args, parser)
        if args.command == "verify":
            return _cmd_verify(args)
    except LsqError as exc:
        print(f"lsqsolve: solver error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"lsqsolve: {exc}", file=sys.stderr)
        return 2
    parser.error(f"unknown command {args.command!r}")
    return 1


if __name__ == "__main__":
    sys.exit(main())
