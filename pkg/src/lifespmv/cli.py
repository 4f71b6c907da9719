"""Command-line interface.

Subcommands: gen (synthesize a problem container), spmv (run one kernel
with a chosen restructuring/partitioning), solve (run the NNLS solver),
tune (pick a restructuring by timing), bench (solver wall time across
thread counts), verify (randomized oracle suite).

Exit codes: 0 success, 1 verification failure, 2 bad input or
configuration, 3 incompatible strategy combination.  LIFE_THREADS serves
as the default for --threads wherever it applies; explicit flags win.
"""

import argparse
import csv
import os
import sys
import time

import numpy as np

from . import engine, io, sbbnnls, verify
from .datagen import Dims, GenConfig, generate
from .errors import (
    LifeError,
    PlanTensorMismatch,
    StrategyRequiresSorted,
)
from .restructure import autotune, sort_by
from .tensor import precompute_offsets, zeros_signal, zeros_weights

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_BAD_STRATEGY = 3

_PARTITION_NAMES = {"coeff": "coefficient", "atom": "atom", "voxel": "voxel"}


def _default_threads():
    env = os.environ.get("LIFE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def _add_threads_flag(parser):
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $LIFE_THREADS or 1)")


def _threads(args):
    return args.threads if args.threads is not None else _default_threads()


def cmd_gen(args):
    dims = Dims(n_atoms=args.atoms, n_voxels=args.voxels,
                n_fibers=args.fibers, n_dirs=args.dirs, n_coeffs=args.coeffs)
    config = GenConfig(dims=dims, mean_run_length=args.run_len,
                       weight_density=args.density, noise_sigma=args.noise,
                       seed=args.seed)
    problem = generate(config)
    io.save(problem, args.out)
    size = os.path.getsize(args.out)
    print(f"wrote {args.out}: atoms={dims.n_atoms} voxels={dims.n_voxels} "
          f"fibers={dims.n_fibers} dirs={dims.n_dirs} coeffs={dims.n_coeffs} "
          f"({size} bytes)")
    return EXIT_OK


def _resolve_restructure(problem, args, threads):
    if args.restructure == "auto":
        choice = autotune(problem, args.op, threads)
        print(f"autotune picked {choice.key} "
              f"(means: {', '.join(f'{k}={v:.6f}s' for k, v in sorted(choice.measured_times.items()))})")
        return choice.key
    return args.restructure


def cmd_spmv(args):
    threads = _threads(args)
    problem = io.load(args.infile)
    key = _resolve_restructure(problem, args, threads)
    tensor = problem.tensor if key == "none" else sort_by(problem.tensor, key)[0]
    offsets = precompute_offsets(tensor)
    strategy = engine.PartitionStrategy(_PARTITION_NAMES[args.partition],
                                        sync_free=args.sync_free)
    plan = engine.build_plan(offsets, strategy, threads)

    dims = problem.dims
    if args.op == "dsc":
        vec = problem.w_true if problem.w_true is not None else np.ones(dims.n_fibers)
        out = zeros_signal(dims)
        run = lambda: engine.dsc_parallel(offsets, problem.dictionary, vec,
                                          out, plan)
    else:
        vec = problem.y if problem.y is not None else np.ones(dims.signal_len)
        out = zeros_weights(dims)
        run = lambda: engine.wc_parallel(offsets, problem.dictionary, vec,
                                         out, plan)

    run()  # warm compiled kernels outside the timed repeats
    partition_name = args.partition + ("+syncfree" if args.sync_free else "")
    rows = []
    elapsed = []
    for i in range(1, args.repeat + 1):
        out[:] = 0.0
        stats = run()
        elapsed.append(stats.elapsed)
        print(f"run {i}: {stats.elapsed:.6f}s "
              f"(skipped {stats.skipped_coefficients})")
        rows.append(io.ReportRow(iteration=i, op=args.op, restructure=key,
                                 partition=partition_name, threads=threads,
                                 elapsed_s=stats.elapsed,
                                 skipped=stats.skipped_coefficients))
    print(f"mean: {sum(elapsed) / len(elapsed):.6f}s over {args.repeat} runs")
    if args.report:
        io.export_report(rows, args.report)
        print(f"report written to {args.report}")
    return EXIT_OK


def cmd_solve(args):
    problem = io.load(args.infile)
    config = sbbnnls.SolverConfig(max_iters=args.iters,
                                  grad_tol=args.grad_tol,
                                  threads=_threads(args))
    w, trace = sbbnnls.solve(problem, config=config)
    print(f"terminated: {trace.termination} after {trace.iterations} "
          f"iterations")
    print(f"objective: {trace.initial_objective:.6e} -> "
          f"{trace.final_objective:.6e}")
    print(f"kernel calls: {trace.total_dsc_calls} DSC, "
          f"{trace.total_wc_calls} WC")
    if args.trace:
        with open(args.trace, "w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(["iteration", "objective", "alpha", "grad_norm",
                             "zeros", "dsc_s", "wc_s"])
            for r in trace.records:
                writer.writerow([r.iteration, repr(r.objective),
                                 repr(r.alpha), repr(r.grad_norm), r.zeros,
                                 repr(r.dsc_seconds), repr(r.wc_seconds)])
        print(f"trace written to {args.trace}")
    if args.out_weights:
        np.savetxt(args.out_weights, w, fmt="%.17g")
        print(f"weights written to {args.out_weights}")
    return EXIT_OK


def cmd_tune(args):
    problem = io.load(args.infile)
    choice = autotune(problem, args.op, _threads(args), trials=args.trials)
    for key in sorted(choice.measured_times):
        print(f"{key}: {choice.measured_times[key]:.6f}s mean "
              f"over {args.trials} runs")
    print(f"selected: {choice.key}")
    return EXIT_OK


def cmd_verify(args):
    results = verify.run_suite(seeds=args.seeds, scale=args.scale)
    width = max(len(r.name) for r in results)
    print(f"{'property family':<{width}}  seeds  result")
    for r in results:
        print(f"{r.name:<{width}}  {r.passed}/{r.total}  "
              f"{'PASS' if r.ok else 'FAIL'}")
    if all(r.ok for r in results):
        print("verification passed")
        return EXIT_OK
    print("verification FAILED")
    return EXIT_VERIFY_FAILED


def cmd_bench(args):
    problem = io.load(args.infile)
    thread_list = [int(t) for t in args.threads_list.split(",") if t]
    if not thread_list or any(t < 1 for t in thread_list):
        raise ValueError("--threads-list needs positive integers")

    def measure(threads):
        config = sbbnnls.SolverConfig(max_iters=args.iters, grad_tol=0.0,
                                      threads=threads)
        t0 = time.perf_counter()
        sbbnnls.solve(problem, config=config)
        return time.perf_counter() - t0

    # one short warm-up solve so kernel compilation never lands in a
    # measured cell
    sbbnnls.solve(problem, config=sbbnnls.SolverConfig(
        max_iters=1, grad_tol=0.0, threads=max(thread_list)))
    baseline = measure(1)
    results = []
    for t in thread_list:
        elapsed = baseline if t == 1 else measure(t)
        results.append((t, elapsed))
        print(f"threads={t}: {elapsed:.4f}s "
              f"(speedup {baseline / elapsed:.2f}x)")
    with open(args.report, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["threads", "iters", "elapsed_s",
                         "speedup_vs_1thread"])
        for t, elapsed in results:
            writer.writerow([t, args.iters, repr(elapsed),
                             repr(baseline / elapsed)])
    print(f"report written to {args.report}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lifespmv",
        description="Decomposed-tensor SpMV kernels and NNLS solver")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic problem container")
    p.add_argument("--voxels", type=int, default=128)
    p.add_argument("--fibers", type=int, default=64)
    p.add_argument("--atoms", type=int, default=32)
    p.add_argument("--dirs", type=int, default=96,
                   help="diffusion directions per voxel (default 96)")
    p.add_argument("--coeffs", type=int, default=4096)
    p.add_argument("--run-len", type=float, default=4.0,
                   help="mean voxel-run length after sorting")
    p.add_argument("--density", type=float, default=0.5,
                   help="fraction of fibers with nonzero true weight")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("spmv", help="run one SpMV kernel repeatedly")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--op", choices=["dsc", "wc"], required=True)
    p.add_argument("--restructure",
                   choices=["none", "atom", "voxel", "fiber", "auto"],
                   default="none")
    p.add_argument("--partition", choices=["coeff", "atom", "voxel"],
                   default="coeff")
    p.add_argument("--sync-free", action="store_true",
                   help="snap chunks to voxel runs (voxel restructure only)")
    _add_threads_flag(p)
    p.add_argument("--repeat", type=int, default=1)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_spmv)

    p = sub.add_parser("solve", help="run the NNLS solver")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--iters", type=int, default=sbbnnls.DEFAULT_MAX_ITERS)
    _add_threads_flag(p)
    p.add_argument("--grad-tol", type=float, default=1e-12)
    p.add_argument("--trace", default=None, help="per-iteration CSV")
    p.add_argument("--out-weights", default=None,
                   help="final weights, one per line")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("tune", help="time restructuring candidates")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--op", choices=["dsc", "wc"], required=True)
    _add_threads_flag(p)
    p.add_argument("--trials", type=int, default=3)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("verify", help="run the randomized oracle suite")
    p.add_argument("--scale", choices=["small"], default="small")
    p.add_argument("--seeds", type=int, default=20)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bench", help="solver wall time across thread counts")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--threads-list", default="1,2,4,8")
    p.add_argument("--iters", type=int, default=10)
    p.add_argument("--report", required=True)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StrategyRequiresSorted, PlanTensorMismatch) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_STRATEGY
    except (LifeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
