"""Command-line entry point: ``ebnsl <command> ...``."""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from .core import CapacityError, CredibleSet, InfeasibleCandidate, ParseError, epsilon_from_bayes_factor
from .cpt_scoring import bic_full
from .data import counts, load_csv, save_csv
from .formats import (
    attach_parameters,
    credible_set_to_dict,
    network_to_dict,
    network_to_dot,
    read_network,
    read_score_table,
    write_network,
    write_score_table,
)
from .noisyor import FitConfig, fit_noisyor, hot_start, penalty_noisyor
from .pipeline import ground_truth_eval, noisy_or_share
from .pruning import build_score_table
from .search import DEFAULT_MAX_NETWORKS, enumerate_credible
from .synth import forward_sample, gen_single_noisyor, inference_error_eval, run_recovery

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CAPACITY = 4
EXIT_INFEASIBLE = 5
EXIT_IO = 6


class UsageError(Exception):
    pass


def _epsilon(args) -> float:
    if args.bf is not None and args.epsilon is not None:
        raise UsageError("--bf and --epsilon are mutually exclusive")
    if args.epsilon is not None:
        if args.epsilon < 0:
            raise UsageError("--epsilon must be non-negative")
        return args.epsilon
    if args.bf is not None:
        if args.bf <= 1:
            raise UsageError("--bf must exceed 1")
        return epsilon_from_bayes_factor(args.bf)
    return math.log(20)


def _fit_config(args) -> FitConfig:
    try:
        return FitConfig(
            threshold=args.threshold,
            max_iter=args.max_iter,
            clamp=args.clamp,
            initial_step=args.step,
            shrink=args.shrink,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _add_window(p):
    # no argparse mutual-exclusion group: conflicts are reported by _epsilon
    p.add_argument("--bf", type=float, help="Bayes factor; epsilon = ln(BF) (default BF 20)")
    p.add_argument("--epsilon", type=float, help="score window above the optimum")


def _add_fit(p):
    d = FitConfig()
    g = p.add_argument_group("noisy-OR fitting")
    g.add_argument("--threshold", type=float, default=d.threshold)
    g.add_argument("--max-iter", type=int, default=d.max_iter)
    g.add_argument("--clamp", type=float, default=d.clamp)
    g.add_argument("--step", type=float, default=d.initial_step, help="initial line-search step")
    g.add_argument("--shrink", type=float, default=d.shrink, help="line-search shrink factor")


def _add_scoring(p):
    _add_window(p)
    p.add_argument("--max-parents", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    _add_fit(p)


def _score(args, data, eps):
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    if args.max_parents is not None and args.max_parents < 0:
        raise UsageError("--max-parents must be non-negative")
    return build_score_table(data, eps, _fit_config(args), args.max_parents, args.threads)


def cmd_scores(args) -> int:
    eps = _epsilon(args)
    data = load_csv(args.data)
    report = _score(args, data, eps)
    write_score_table(report.table, args.out)
    stats = report.stats()
    print(f"epsilon {eps:.6f}  variables {data.n}  instances {data.N}")
    print(f"parent-set candidates {stats['parent_set_candidates']}")
    for rep, c in sorted(stats["scored"].items()):
        print(f"scored {rep}: {c}")
    for rule, c in stats["pruned"].items():
        print(f"pruned {rule}: {c}")
    print(f"pruned at merge: {stats['merged_away']}")
    print(f"retained entries: {stats['retained']} -> {args.out}")
    return EXIT_OK


def cmd_learn(args) -> int:
    eps = _epsilon(args)
    source = Path(args.input)
    dataset = None
    if source.suffix.lower() == ".csv":
        dataset = load_csv(source)
        table = _score(args, dataset, eps).table
    else:
        table = read_score_table(source)
        if args.data:
            dataset = load_csv(args.data)
    cap = None if args.max_networks == 0 else args.max_networks
    cs = enumerate_credible(table, eps, cap)
    if dataset is not None:
        cs = CredibleSet(cs.epsilon, cs.opt, tuple(attach_parameters(n, dataset) for n in cs.networks), cs.truncated)
    out = credible_set_to_dict(cs)
    out["noisy_or_share"] = noisy_or_share(cs)
    if args.out:
        Path(args.out).write_text(json.dumps(out, indent=2) + "\n", encoding="utf-8")
    if args.dot_dir:
        d = Path(args.dot_dir)
        d.mkdir(parents=True, exist_ok=True)
        for i, net in enumerate(cs.networks):
            (d / f"network_{i:05d}.dot").write_text(network_to_dot(net, f"score {net.score:.6f}"), encoding="utf-8")
    print(f"OPT {cs.opt:.6f}")
    print(f"epsilon {cs.epsilon:.6f}")
    print(f"credible networks {len(cs)}")
    print(f"truncated {str(cs.truncated).lower()}")
    if cs.networks:
        best = cs.networks[0]
        print("best network:")
        for e in best.nodes:
            ps = ",".join(table.names[p] for p in e.parents) or "-"
            print(f"  {table.names[e.child]:<12} {e.rep.value} {e.score:14.6f}  parents {ps}")
    return EXIT_OK


def cmd_fit(args) -> int:
    data = load_csv(args.data)
    parents = [p for p in (args.parents or "").split(",") if p]
    if not parents:
        raise UsageError("--parents needs at least one variable (noisy-OR requires a parent)")
    try:
        child = data.index(args.child)
        pidx = tuple(sorted(data.index(p) for p in parents))
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None
    if child in pidx:
        raise UsageError("the child cannot be one of its parents")
    cfg = _fit_config(args)
    cv = counts(data, child, pidx)
    full = bic_full(data, child, pidx, cv=cv)
    fit = fit_noisyor(cv, hot_start(None, pidx), cfg)
    nor_score = fit.objective + penalty_noisyor(pidx, data.N)
    report = {
        "child": args.child,
        "parents": [data.names[p] for p in pidx],
        "q": dict(zip((data.names[p] for p in pidx), fit.params.q)),
        "objective": fit.objective,
        "iterations": fit.iterations,
        "bic_full_cpt": full.score,
        "bic_noisy_or": nor_score,
    }
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        for name, q in report["q"].items():
            print(f"q[{name}] = {q:.6f}")
        print(f"objective {fit.objective:.6f}  iterations {fit.iterations}")
        print(f"BIC full CPT {full.score:.6f}")
        print(f"BIC noisy-OR {nor_score:.6f}")
    return EXIT_OK


def cmd_generate(args) -> int:
    if args.parent_size < 1:
        raise UsageError("--parent-size must be at least 1")
    gt = gen_single_noisyor(args.parent_size, args.seed)
    write_network(gt.network, args.out)
    print(f"wrote {gt.network.n}-node ground truth to {args.out}; q = {list(gt.true_q.q)}")
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.num_samples < 1:
        raise UsageError("--num-samples must be at least 1")
    net = read_network(args.network)
    save_csv(forward_sample(net, args.num_samples, args.seed), args.out)
    print(f"wrote {args.num_samples} instances to {args.out}")
    return EXIT_OK


def _recovery_table(report) -> str:
    lines = ["parent size  N      trials  median rel. error  median cond. KL"]
    for r in report["rows"]:
        lines.append(
            f"{r['parent_size']:>11}  {r['N']:<6} {r['trials']:>6}  {r['median_relative_error']:>17.4f}"
            f"  {r['median_conditional_kl']:>15.4f}"
        )
    return "\n".join(lines)


def cmd_eval(args) -> int:
    if args.trials < 1 or args.num_samples < 1:
        raise UsageError("--trials and --num-samples must be positive")
    if args.learned and not args.truth:
        raise UsageError("--learned requires --truth")
    if args.truth:
        truth = read_network(args.truth)
        if args.learned:
            learned = read_network(args.learned)
            if args.data:
                learned = attach_parameters(learned, load_csv(args.data))
            report = {"experiment": "inference-error", **inference_error_eval(learned, truth, args.trials, args.seed)}
            text = "\n".join(f"{k}: {v}" for k, v in report.items())
        else:
            eps = _epsilon(args)
            cap = None if args.max_networks == 0 else args.max_networks
            report = {
                "experiment": "ground-truth-inference",
                **ground_truth_eval(truth, args.num_samples, args.seed, eps, args.trials, _fit_config(args), None, cap),
            }
            lines = [f"credible networks {report['credible_networks']}  OPT {report['opt']:.6f}"]
            lines.append("network  score          noisy-OR nodes  median rel. error  median abs. error")
            for label in ("best", "worst", "cpt"):
                r = report[label]
                lines.append(
                    f"{label:<8} {r['score']:<14.6f} {r['noisy_or_nodes']:>14}  {r['median_relative_error']:>17.4f}"
                    f"  {r['median_absolute_error']:>17.4f}"
                )
            text = "\n".join(lines)
    else:
        sizes = args.parent_size or [2, 3, 4, 5, 6, 7]
        if min(sizes) < 1:
            raise UsageError("--parent-size values must be at least 1")
        report = run_recovery(sizes, args.num_samples, args.trials, args.seed, _fit_config(args))
        text = _recovery_table(report)
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebnsl", description="Exact BN structure learning with noisy-OR local structure")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scores", help="score, prune and merge candidate parent sets")
    p.add_argument("data", help="binary CSV file")
    p.add_argument("--out", required=True, help="score file to write")
    _add_scoring(p)
    p.set_defaults(func=cmd_scores)

    p = sub.add_parser("learn", help="enumerate the credible set of networks")
    p.add_argument("input", help="score file, or a .csv dataset to score first")
    p.add_argument("--data", help="CSV used to attach CPT parameters when reading a score file")
    p.add_argument("--max-networks", type=int, default=DEFAULT_MAX_NETWORKS, help="0 = unbounded")
    p.add_argument("--out", help="credible-set JSON")
    p.add_argument("--dot-dir", help="write one DOT file per network here")
    _add_scoring(p)
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("fit", help="fit a noisy-OR for one candidate parent set")
    p.add_argument("data")
    p.add_argument("--child", required=True)
    p.add_argument("--parents", required=True, help="comma-separated parent names")
    p.add_argument("--json", action="store_true")
    _add_fit(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("generate", help="write a single noisy-OR ground-truth network")
    p.add_argument("--parent-size", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="forward-sample a dataset from a network JSON")
    p.add_argument("--network", required=True)
    p.add_argument("--num-samples", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("eval", help="parameter-recovery or inference-error reports")
    p.add_argument("--parent-size", type=int, nargs="+", help="recovery experiment sizes (default 2..7)")
    p.add_argument("--num-samples", type=int, default=1000)
    p.add_argument("--trials", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="ground-truth network JSON (inference experiment)")
    p.add_argument("--learned", help="learned network or credible-set JSON to compare with --truth")
    p.add_argument("--data", help="CSV used to attach CPT parameters to --learned")
    p.add_argument("--max-networks", type=int, default=DEFAULT_MAX_NETWORKS, help="0 = unbounded")
    p.add_argument("--out", help="JSON report")
    _add_window(p)
    _add_fit(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"ebnsl: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InfeasibleCandidate as exc:
        print(
            "ebnsl: infeasible noisy-OR candidate: a record has the child equal to 1 while every "
            f"candidate parent is 0, so the noisy-OR likelihood is zero ({exc})",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    except ParseError as exc:
        print(f"ebnsl: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except CapacityError as exc:
        print(f"ebnsl: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY
    except OSError as exc:
        print(f"ebnsl: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
