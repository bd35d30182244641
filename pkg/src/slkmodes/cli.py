"""Batch command line: ``slk run``, ``slk sweep`` and ``slk gen``.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from .affinity import KNN_METHODS, build_knn_affinity, estimate_bandwidth, resolve_threads
from .core import SlkConfig
from .dataset import FORMATS, Dataset, load_dataset, write_csv
from .errors import SlkError, UsageError
from .metrics import accuracy, nmi
from .optimizer import run_slk
from .report import write_result
from .synth import GENERATORS, generate

log = logging.getLogger("slkmodes")


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _add_data_args(p):
    p.add_argument("--data", required=True, help="feature file")
    p.add_argument("--format", choices=FORMATS, default="csv")
    p.add_argument("--csv-header", action="store_true", help="skip the first CSV line")
    p.add_argument("--labels", help="ground-truth labels (one integer per line, or IDX)")
    p.add_argument("--clusters", type=int, required=True)
    p.add_argument("--knn", type=int, default=5)
    p.add_argument("--knn-method", choices=KNN_METHODS, default="exact")
    p.add_argument("--mode-update", choices=("ms", "bo"), default="bo")
    p.add_argument("--inner-tol", type=float, default=1e-6)
    p.add_argument("--outer-max", type=int, default=50)
    p.add_argument("--threads", type=int, default=1, help="worker count; 0 means one per CPU")
    p.add_argument("--output", help="result file (default: <data>.result)")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="slk", description="Scalable Laplacian K-modes clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="cluster one dataset")
    _add_data_args(run)
    run.add_argument("--lambda", dest="lam", type=float, default=2.0)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--trace-csv", help="write the convergence trace here")

    sweep = sub.add_parser("sweep", help="grid over lambda and seeds, pick the best run")
    _add_data_args(sweep)
    sweep.add_argument("--lambdas", type=_float_list, default=[1.0, 2.0, 3.0, 4.0])
    sweep.add_argument("--seeds", type=_int_list, default=[0, 1, 2])
    sweep.add_argument("--val-fraction", type=float, default=0.1)
    sweep.add_argument("--val-seed", type=int, default=0)
    sweep.add_argument("--trace-csv", help="write the winning run's trace here")

    gen = sub.add_parser("gen", help="write a synthetic dataset")
    gen.add_argument("generator", choices=GENERATORS)
    gen.add_argument("--n", type=int, default=300)
    gen.add_argument("--clusters", type=int, default=3)
    gen.add_argument("--sep", type=float, default=10.0)
    gen.add_argument("--noise", type=float, default=0.05)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--output", help="output prefix; writes PREFIX.csv and PREFIX.labels")
    return parser


def _load(args) -> Dataset:
    return load_dataset(args.data, args.format, args.labels, csv_header=args.csv_header)


def _config(args, lam, seed) -> SlkConfig:
    return SlkConfig(
        num_clusters=args.clusters, lam=lam, k_n=args.knn, mode_variant=args.mode_update,
        inner_tol=args.inner_tol, outer_max=args.outer_max, seed=seed, knn_method=args.knn_method,
        threads=resolve_threads(args.threads),
    )


def _config_echo(cfg: SlkConfig, args) -> dict:
    return {
        "data": args.data, "clusters": cfg.num_clusters, "lambda": cfg.lam, "knn": cfg.k_n,
        "knn_method": cfg.knn_method, "mode_update": cfg.mode_variant, "seed": cfg.seed,
        "inner_tol": cfg.inner_tol, "outer_max": cfg.outer_max,
    }


def _scores(ds, labels, L) -> dict:
    if ds.labels is None:
        return {}
    return {"nmi": nmi(labels, ds.labels), "acc": accuracy(labels, ds.labels, max(L, int(ds.labels.max()) + 1))}


def _finish(args, ds, cfg, result) -> None:
    scores = _scores(ds, result.labels, cfg.num_clusters)
    output = args.output or f"{args.data}.result"
    write_result(output, result, _config_echo(cfg, args), scores)
    if args.trace_csv:
        result.trace.write_csv(args.trace_csv)
    print(f"result written to {output}")
    print(f"outer_iterations={result.outer_iterations} inner_iterations={result.inner_iterations} "
          f"relaxed={result.relaxed:.6g} discrete={result.discrete:.6g}")
    if scores:
        print(f"NMI={scores['nmi']:.3f} ACC={scores['acc']:.3f}")


def cmd_run(args) -> int:
    ds = _load(args)
    cfg = _config(args, args.lam, args.seed)
    result = run_slk(ds, cfg)
    _finish(args, ds, cfg, result)
    return 0


def validation_split(n: int, fraction: float, seed: int) -> np.ndarray:
    if not 0 < fraction <= 1:
        raise UsageError("validation fraction must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    size = max(1, int(round(fraction * n)))
    return np.sort(rng.choice(n, size=size, replace=False))


def sweep(ds: Dataset, make_config, lambdas, seeds, val_fraction=0.1, val_seed=0):
    """Run every (lambda, seed) pair.

    With labels the winner has the best accuracy on a held-out validation
    subset; without labels it has the lowest final relaxed objective.
    Returns (rows, winner_row) where rows carry the ClusterResult under "result".
    """
    first = make_config(lambdas[0], seeds[0])
    aff = build_knn_affinity(ds, first.k_n, first.knn_method)
    ks = estimate_bandwidth(ds, aff)
    val = validation_split(ds.n, val_fraction, val_seed) if ds.labels is not None else None
    rows = []
    for lam in lambdas:
        for seed in seeds:
            cfg = make_config(lam, seed)
            result = run_slk(ds, cfg, aff=aff, ks=ks)
            row = {"lambda": lam, "seed": seed, "relaxed": result.relaxed, "result": result, "config": cfg}
            if val is not None:
                L = max(cfg.num_clusters, int(ds.labels.max()) + 1)
                row["val_acc"] = accuracy(result.labels[val], ds.labels[val], L)
                row.update(_scores(ds, result.labels, cfg.num_clusters))
            rows.append(row)
    if val is not None:
        winner = max(rows, key=lambda r: r["val_acc"])
    else:
        winner = min(rows, key=lambda r: r["relaxed"])
    return rows, winner


def cmd_sweep(args) -> int:
    ds = _load(args)
    if not args.lambdas or not args.seeds:
        raise UsageError("sweep needs at least one lambda and one seed")
    if not 0 < args.val_fraction <= 1:
        raise UsageError("validation fraction must lie in (0, 1]")
    rows, winner = sweep(ds, lambda lam, seed: _config(args, lam, seed), args.lambdas, args.seeds,
                         args.val_fraction, args.val_seed)
    labelled = ds.labels is not None
    print("lambda\tseed\trelaxed" + ("\tval_acc\tacc\tnmi" if labelled else ""))
    for r in rows:
        line = f"{r['lambda']:g}\t{r['seed']}\t{r['relaxed']:.6g}"
        if labelled:
            line += f"\t{r['val_acc']:.3f}\t{r['acc']:.3f}\t{r['nmi']:.3f}"
        print(line)
    criterion = "validation accuracy" if labelled else "minimum relaxed objective"
    print(f"winner lambda={winner['lambda']:g} seed={winner['seed']} (by {criterion})")
    _finish(args, ds, winner["config"], winner["result"])
    return 0


def cmd_gen(args) -> int:
    ds = generate(args.generator, args.n, args.clusters, args.sep, args.noise, args.seed)
    prefix = args.output or args.generator.replace("-", "_")
    write_csv(ds, f"{prefix}.csv", f"{prefix}.labels")
    print(f"wrote {ds.n}x{ds.d} features to {prefix}.csv and labels to {prefix}.labels")
    return 0


COMMANDS = {"run": cmd_run, "sweep": cmd_sweep, "gen": cmd_gen}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"slk {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (SlkError, OSError) as exc:
        print(f"slk {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
