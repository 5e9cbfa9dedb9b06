"""Command-line interface.

Subcommands: validate, gen-synthetic, rank, loss, grad, train,
evaluate, compare-stationary. Exit codes: 0 success, 1 usage error,
2 invalid data, 3 runtime failure. Stochastic commands (gen-synthetic,
train) require an explicit --seed for reproducibility.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from walkrank.dataset import DatasetError, gen_synthetic, load_dataset, save_dataset
from walkrank.derivatives import seed_derivative_bound
from walkrank.experiment import (
    RunConfig,
    compare_stationary,
    evaluate_loss,
    rank_table,
    run_experiment,
    write_rank_csv,
)
from walkrank.graphs import FeasibleBall, validate_feasibility
from walkrank.oracle import grad_exact, grad_inexact, loss_exact, loss_inexact


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _load_phi(path, m):
    if path is None:
        return np.ones(m)
    with open(path, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    phi = np.asarray(raw, dtype=float)
    if phi.shape != (m,):
        raise DatasetError(f"{path}: expected {m} weights, got shape {phi.shape}")
    return phi


def _print_json(obj):
    print(json.dumps(obj, indent=2))


def cmd_validate(args):
    dataset = load_dataset(args.dataset)
    ball = FeasibleBall(center=np.ones(dataset.m), radius=args.radius)
    report = validate_feasibility(dataset.queries, ball)
    _print_json(
        {
            "queries": len(dataset.queries),
            "m1": dataset.m1,
            "m2": dataset.m2,
            "alpha": dataset.alpha,
            "feasible": report.ok,
            "min_slack": report.min_slack,
            "slack_radius": report.slack_radius,
            "failures": report.failures,
        }
    )
    return 0 if report.ok else 2


def cmd_gen_synthetic(args):
    dataset = gen_synthetic(
        num_queries=args.num_queries,
        p=args.p,
        s=args.s,
        m1=args.m1,
        m2=args.m2,
        judgment_count=args.judgments,
        seed=args.seed,
        alpha=args.alpha,
        structure=args.structure,
    )
    save_dataset(dataset, args.out)
    print(f"wrote {args.out} ({len(dataset.queries)} queries)")
    return 0


def cmd_rank(args):
    dataset = load_dataset(args.dataset)
    phi = _load_phi(args.phi_file, dataset.m)
    rows = rank_table(dataset, phi, args.method, args.N)
    write_rank_csv(rows, args.out)
    print(f"wrote {args.out} ({len(rows)} rows)")
    return 0


def cmd_loss(args):
    dataset = load_dataset(args.dataset)
    phi = _load_phi(args.phi_file, dataset.m)
    if args.delta1 is None:
        lv = loss_exact(dataset, phi)
    else:
        lv = loss_inexact(dataset, phi, args.delta1)
    _print_json({"value": lv.value, "accuracy": lv.accuracy})
    return 0


def cmd_grad(args):
    dataset = load_dataset(args.dataset)
    phi = _load_phi(args.phi_file, dataset.m)
    if args.delta2 is None:
        ge = grad_exact(dataset, phi)
    else:
        ball = FeasibleBall(center=np.ones(dataset.m), radius=args.radius)
        bound = seed_derivative_bound(dataset.queries, ball, dataset.alpha).value
        ge = grad_inexact(dataset, phi, args.delta2, bound)
    _print_json({"vector": [float(v) for v in ge.vector], "accuracy": ge.accuracy})
    return 0


def cmd_train(args):
    dataset = load_dataset(args.dataset)
    cfg = RunConfig(
        method=args.method,
        seed=args.seed,
        out_dir=args.out_dir,
        radius=args.radius,
        epsilon=args.epsilon,
        L=args.L,
        L0=args.L0,
        max_iters_override=args.max_iters_override,
        max_outer_iters=args.max_outer_iters,
        step_size=args.step_size,
        N1=args.N1,
        N2=args.N2,
        stop_tol=args.stop_tol,
        gbp_max_iters=args.gbp_max_iters,
    )
    summary = run_experiment(dataset, cfg)
    _print_json(summary)
    return 0


def cmd_evaluate(args):
    dataset = load_dataset(args.dataset)
    phi = _load_phi(args.phi_file, dataset.m)
    out = {}
    splits = ("train", "test") if args.split == "all" else (args.split,)
    for split in splits:
        try:
            out[f"{split}_loss"] = evaluate_loss(dataset.subset(split), phi)
        except DatasetError:
            out[f"{split}_loss"] = None
    _print_json(out)
    return 0


def cmd_compare_stationary(args):
    dataset = load_dataset(args.dataset)
    phi = _load_phi(args.phi_file, dataset.m)
    table = compare_stationary(dataset, phi, args.max_N, out_path=args.out)
    print(f"wrote {args.out} ({len(table)} rows)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="walkrank", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a dataset file and ball feasibility")
    p.add_argument("dataset")
    p.add_argument("--radius", type=float, default=0.99)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("gen-synthetic", help="generate a random dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--num-queries", type=int, required=True)
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--s", type=int, required=True)
    p.add_argument("--m1", type=int, required=True)
    p.add_argument("--m2", type=int, required=True)
    p.add_argument("--judgments", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--alpha", type=float, default=0.15)
    p.add_argument("--structure", choices=("random", "cycle"), default="random")
    p.set_defaults(func=cmd_gen_synthetic)

    p = sub.add_parser("rank", help="stationary scores for every node")
    p.add_argument("dataset")
    p.add_argument("--method", choices=("series", "power", "exact"), default="series")
    p.add_argument("--N", type=int, default=100)
    p.add_argument("--phi-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("loss", help="loss at given weights (exact unless --delta1)")
    p.add_argument("dataset")
    p.add_argument("--phi-file")
    p.add_argument("--delta1", type=float)
    p.set_defaults(func=cmd_loss)

    p = sub.add_parser("grad", help="loss gradient at given weights (exact unless --delta2)")
    p.add_argument("dataset")
    p.add_argument("--phi-file")
    p.add_argument("--delta2", type=float)
    p.add_argument("--radius", type=float, default=0.99)
    p.set_defaults(func=cmd_grad)

    p = sub.add_parser("train", help="train weights and emit trace/summary")
    p.add_argument("dataset")
    p.add_argument("--method", choices=("gfn", "agm", "gbp"), required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--radius", type=float, default=0.99)
    p.add_argument("--epsilon", type=float, default=1e-6)
    p.add_argument("--L", type=float, default=1e-4)
    p.add_argument("--L0", type=float, default=1e-4)
    p.add_argument("--max-iters-override", type=int)
    p.add_argument("--max-outer-iters", type=int, default=100)
    p.add_argument("--step-size", type=float, default=50.0)
    p.add_argument("--N1", type=int, default=100)
    p.add_argument("--N2", type=int, default=100)
    p.add_argument("--stop-tol", type=float, default=1e-5)
    p.add_argument("--gbp-max-iters", type=int, default=1000)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="loss of given weights per split")
    p.add_argument("dataset")
    p.add_argument("--phi-file")
    p.add_argument("--split", choices=("train", "test", "all"), default="all")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare-stationary", help="series vs power convergence table")
    p.add_argument("dataset")
    p.add_argument("--max-N", type=int, default=60)
    p.add_argument("--phi-file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_compare_stationary)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except DatasetError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
