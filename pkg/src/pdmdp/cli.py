"""Command-line interface: ``pdmdp {solve,compare,verify,gen,bench}``.

Exit codes: 0 success, 1 input error, 2 not converged, 3 verification mismatch.
"""

import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import instance_io, oracles
from .errors import IterationCapExceeded, NotConverged, PdMdpError
from .mdp import SolverConfig, bellman_residual, greedy_policy
from .policy_iteration import bound_report, pi_value_oracle, sequential_pi, tied_states
from .primal_dual import solve_pd
from .variants import iterate_variant, run_variant

logger = logging.getLogger("pdmdp")

EXIT_OK, EXIT_INPUT, EXIT_NOT_CONVERGED, EXIT_MISMATCH = 0, 1, 2, 3
ALGOS = ("pd", "vi", "gs", "gsj", "pi")
BENCH_HEADER = ["n", "m", "gamma", "seed", "pd_iters", "blocks", "naive_cap", "scherrer_bound", "status"]
VERIFY_TOL = 1e-7


class InputError(Exception):
    pass


def _fmt(values):
    return " ".join(repr(float(x)) for x in values)


def _load(args):
    inst = instance_io.load(args.file)
    if getattr(args, "gamma", None) is not None:
        inst = inst.with_gamma(args.gamma)
    return inst


def _csv_writer(stream):
    return csv.writer(stream, lineterminator="\n")


def _env_seed():
    raw = os.environ.get("PD_MDP_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"PD_MDP_SEED is not an integer: {raw!r}") from None


def cmd_solve(args):
    inst = _load(args)
    trace_lines = None
    if args.algo == "pd":
        config = SolverConfig(tol=args.tol, max_iter=args.max_iter, assert_lemmas=args.assert_lemmas)
        trace = solve_pd(inst, config)
        v, policy, iterations = trace.final_v, trace.final_policy, trace.iterations
        trace_lines = trace.jsonl_lines()
    elif args.algo == "pi":
        result = sequential_pi(inst)
        v, policy, iterations = result.v, result.policy, result.iters
    else:
        result = run_variant(
            inst,
            args.algo,
            tol=args.tol,
            max_sweeps=1000 if args.max_iter is None else args.max_iter,
            mode=args.gsj_mode,
        )
        v, policy, iterations = result.v, greedy_policy(result.v, inst), result.sweeps
        trace_lines = _variant_trace(result, inst)
    if args.trace and trace_lines is not None:
        with open(args.trace, "w", encoding="utf-8") as fp:
            for line in trace_lines:
                fp.write(line + "\n")
    print(f"algorithm: {args.algo}")
    print(f"iterations: {iterations}")
    print(f"value: {_fmt(v)}")
    print(f"policy: {' '.join(str(int(a)) for a in policy)}")
    print(f"residual: {bellman_residual(v, inst)!r}")
    return EXIT_OK


def _variant_trace(result, inst):
    for k, v in enumerate(result.iterates[1:], start=1):
        yield json.dumps({"iter": k, "objective": float(v.sum()), "residual": bellman_residual(v, inst)})
    yield json.dumps(
        {
            "final_v": [float(x) for x in result.v],
            "final_policy": [int(a) for a in greedy_policy(result.v, inst)],
            "iterations": result.sweeps,
        }
    )


def cmd_compare(args):
    algos = [a.strip() for a in args.algos.split(",") if a.strip()]
    unknown = set(algos) - {"pd", "vi", "gs", "gsj"}
    if unknown or not algos:
        raise InputError(f"unknown algorithms: {sorted(unknown) or args.algos!r}")
    inst = _load(args)
    v_star, _ = pi_value_oracle(inst)
    rows = []
    for algo in algos:
        if algo == "pd":
            iterates = solve_pd(inst).iterates[1:]
        else:
            iterates = []
            for v in iterate_variant(inst, algo, mode=args.gsj_mode):
                iterates.append(v)
                if len(iterates) >= args.sweeps or bellman_residual(v, inst) <= args.tol:
                    break
        for k, v in enumerate(iterates, start=1):
            rows.append(
                [algo, k, repr(float(v.sum())), repr(bellman_residual(v, inst)), repr(float(np.abs(v_star - v).max()))]
            )
    writer = _csv_writer(sys.stdout)
    writer.writerow(["algo", "iter", "objective", "residual", "err_inf"])
    writer.writerows(rows)
    return EXIT_OK


def cmd_verify(args):
    inst = _load(args)
    if args.oracle == "enumerate":
        if inst.m**inst.n > oracles.ENUMERATION_LIMIT:
            raise InputError(
                f"enumeration needs {inst.m}**{inst.n} policy evaluations, "
                f"above the limit of {oracles.ENUMERATION_LIMIT}; use --oracle pi"
            )
        v_oracle, _ = oracles.enumerate_optimal(inst)
    else:
        v_oracle, _ = pi_value_oracle(inst)
    trace = solve_pd(inst)
    gap = float(np.abs(trace.final_v - v_oracle).max())
    ties = set(tied_states(v_oracle, inst).tolist()) | set(tied_states(trace.final_v, inst).tolist())
    oracle_policy = greedy_policy(v_oracle, inst)
    disagree = [
        i for i in range(inst.n) if i not in ties and trace.final_policy[i] != oracle_policy[i]
    ]
    if gap <= VERIFY_TOL and not disagree:
        print(f"PASS {args.file}: max |v_pd - v_{args.oracle}| = {gap:.3e}, pd iterations {trace.iterations}")
        return EXIT_OK
    print(f"FAIL {args.file}: max |v_pd - v_{args.oracle}| = {gap:.3e}", file=sys.stderr)
    print(f"  v_pd     = {_fmt(trace.final_v)}", file=sys.stderr)
    print(f"  v_oracle = {_fmt(v_oracle)}", file=sys.stderr)
    print(f"  policy disagreements at states {disagree}", file=sys.stderr)
    return EXIT_MISMATCH


def cmd_gen(args):
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is None:
        raise InputError("--seed is required (or set PD_MDP_SEED)")
    try:
        spec = instance_io.GeneratorSpec(
            n=args.states,
            m=args.actions,
            gamma=args.gamma,
            seed=seed,
            sparsity=args.sparsity,
            cost_range=tuple(args.cost_range),
        )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    inst = instance_io.random_mdp(spec)
    if args.out:
        instance_io.save(inst, args.out)
    else:
        sys.stdout.write(instance_io.dumps(inst))
    return EXIT_OK


def trial_seed(base, n, m, gamma, trial):
    """64-bit seed for one benchmark trial, independent of scheduling."""
    key = [base, n, m, int(round(gamma * 10**9)), trial]
    return int(np.random.SeedSequence(key).generate_state(1, dtype=np.uint64)[0])


def run_trial(job):
    n, m, gamma, seed, sparsity = job
    row = {"n": n, "m": m, "gamma": gamma, "seed": seed}
    try:
        inst = instance_io.random_mdp(instance_io.GeneratorSpec(n, m, gamma, seed, sparsity))
        report = bound_report(inst, solve_pd(inst))
    except Exception as exc:  # a failed trial becomes a row, not a crash
        row.update(pd_iters="", blocks="", naive_cap="", scherrer_bound="", status=f"error:{type(exc).__name__}")
        return row
    row.update(
        pd_iters=report.measured_pd_iters,
        blocks=";".join(str(b) for b in report.per_block_pi_iters),
        naive_cap=report.naive_cap,
        scherrer_bound=repr(report.scherrer_bound),
        status="ok",
    )
    return row


def _int_list(values):
    return [int(x) for v in values for x in str(v).split(",") if x]


def _float_list(values):
    return [float(x) for v in values for x in str(v).split(",") if x]


def cmd_bench(args):
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is None:
        raise InputError("--seed is required (or set PD_MDP_SEED)")
    try:
        states, actions, gammas = _int_list(args.states_list), _int_list(args.actions_list), _float_list(args.gammas)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.trials < 0 or args.jobs < 1:
        raise InputError("--trials must be >= 0 and --jobs >= 1")
    if any(n < 1 for n in states) or any(m < 1 for m in actions) or any(not 0 <= g < 1 for g in gammas):
        raise InputError("states and actions must be positive and gammas in [0, 1)")
    jobs = [
        (n, m, g, trial_seed(seed, n, m, g, t), args.sparsity)
        for n in states
        for m in actions
        for g in gammas
        for t in range(args.trials)
    ]
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            rows = list(pool.map(run_trial, jobs, chunksize=8))
    else:
        rows = [run_trial(job) for job in jobs]
    out = open(args.out, "w", encoding="utf-8", newline="") if args.out else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=BENCH_HEADER, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if args.out:
            out.close()
    if rows and all(r["status"] != "ok" for r in rows):
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="pdmdp", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver iterations to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve an instance file")
    p.add_argument("file")
    p.add_argument("--algo", choices=ALGOS, default="pd")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=None)
    p.add_argument("--trace", metavar="PATH")
    p.add_argument("--assert-lemmas", action="store_true")
    p.add_argument("--gamma", type=float, default=None, help="override the file's discount factor")
    p.add_argument("--gsj-mode", choices=("sweep", "alternating"), default="sweep")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="per-iteration convergence CSV for several algorithms")
    p.add_argument("file")
    p.add_argument("--algos", default="pd,vi,gs,gsj")
    p.add_argument("--sweeps", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--gsj-mode", choices=("sweep", "alternating"), default="sweep")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("verify", help="check the primal-dual solution against an oracle")
    p.add_argument("file")
    p.add_argument("--oracle", choices=("pi", "enumerate"), default="pi")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a seeded random instance")
    p.add_argument("--states", type=int, required=True)
    p.add_argument("--actions", type=int, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--sparsity", type=float, default=1.0)
    p.add_argument("--cost-range", type=float, nargs=2, default=(0.0, 1.0), metavar=("LO", "HI"))
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("bench", help="iteration-count campaign on random instances")
    p.add_argument("--states-list", nargs="+", required=True)
    p.add_argument("--actions-list", nargs="+", required=True)
    p.add_argument("--gammas", nargs="+", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--sparsity", type=float, default=1.0)
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, stream=sys.stderr)
    try:
        return args.func(args)
    except (NotConverged, IterationCapExceeded) as exc:
        residual = getattr(exc, "residual", None)
        extra = "" if residual is None else f" (residual {residual!r})"
        print(f"not converged: {exc}{extra}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (PdMdpError, InputError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
