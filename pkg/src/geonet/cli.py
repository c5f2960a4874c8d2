"""``geonet`` command line: graph generation, encoding, benchmarks and experiments.

Exit status is 0 on success, 1 for usage errors and 2 for runtime failures.
Report-writing commands pick CSV or JSON from the ``--out`` extension.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2
REPORT_SUFFIXES = (".csv", ".json")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _probability(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0 <= value <= 1:
        raise argparse.ArgumentTypeError(f"must be in [0, 1], got {value}")
    return value


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError(f"expected positive integers, got {text!r}")
    return values


def _report_path(text: str) -> Path:
    path = Path(text)
    if path.suffix.lower() not in REPORT_SUFFIXES:
        raise argparse.ArgumentTypeError(f"extension must be .csv or .json, got {text!r}")
    return path


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="geonet", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen-graph", help="generate a random graph as an edge list")
    g.add_argument("--model", choices=("er", "ws", "ba"), default="er")
    g.add_argument("--n", type=_positive_int, required=True)
    g.add_argument("--p", type=_probability, default=0.05, help="ER edge probability")
    g.add_argument("--k", type=int, default=4, help="WS ring degree (even)")
    g.add_argument("--beta", type=_probability, default=0.1, help="WS rewiring probability")
    g.add_argument("--m", type=_positive_int, default=2, help="BA edges per new node")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", type=Path, required=True)

    e = sub.add_parser("encode", help="gap-encode an edge-list file")
    e.add_argument("--graph", type=Path, required=True)
    e.add_argument("--partition", default="range", help="louvain, range or range:<k>")
    e.add_argument("--workers", type=_positive_int, default=1)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out", type=Path, required=True, help="serialized encoding")
    e.add_argument("--report", type=_report_path, help="optional size summary (.csv or .json)")

    b = sub.add_parser("bench", help="gap encoding vs adjacency matrix on ER graphs")
    b.add_argument("--sizes", type=_int_list, default=[100, 500, 1000, 2000, 5000])
    b.add_argument("--p", type=_probability, default=0.05)
    b.add_argument("--repeats", type=_positive_int, default=3)
    b.add_argument("--partition", default="range")
    b.add_argument("--workers", type=_positive_int, default=1)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", type=_report_path, required=True)

    t = sub.add_parser("train", help="activation experiment on a 2-D toy dataset")
    t.add_argument("--dataset", choices=("xor", "circles", "moons"), required=True)
    t.add_argument("--activation", default="poly:3", help="poly:<d>, rbf:<units>, lrelu:<alpha> or prelu")
    t.add_argument("--epochs", type=_positive_int, default=500)
    t.add_argument("--lr", type=float, default=1e-2)
    t.add_argument("--seeds", type=_positive_int, default=5, help="number of consecutive seeds")
    t.add_argument("--seed", type=int, default=0, help="first seed")
    t.add_argument("--grid", type=Path, help="decision-boundary grid CSV")
    t.add_argument("--out", type=_report_path, required=True)

    for name, helptext in (("dimred", "MNIST: reduce then classify"), ("prune", "MNIST: train, prune, fine-tune")):
        d = sub.add_parser(name, help=helptext)
        if name == "dimred":
            d.add_argument("--method", default="baseline", help="baseline, pca:<k> or ae:<latent>")
        else:
            d.add_argument("--fraction", type=_probability, default=0.5)
            d.add_argument("--fine-tune-epochs", type=_positive_int, default=2)
            d.add_argument("--sensitivity", type=Path, help="write the layer-sensitivity report (JSON)")
        d.add_argument("--data-dir", type=Path, help="IDX directory (default $GEONET_DATA_DIR)")
        d.add_argument("--n-train", type=_positive_int, default=10_000)
        d.add_argument("--n-test", type=_positive_int, default=2_000)
        d.add_argument("--epochs", type=_positive_int, default=5)
        d.add_argument("--seed", type=int, default=0)
        d.add_argument("--out", type=_report_path, required=True)

    m = sub.add_parser("metrics", help="clustering coefficient and path length of an edge list")
    m.add_argument("--graph", type=Path, required=True)
    m.add_argument("--partition", help="also report modularity under this strategy")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--out", type=_report_path, required=True)
    return parser


def write_report(path: Path, rows: list[dict], doc: dict) -> None:
    """CSV gets the flat ``rows``; JSON gets the full ``doc``."""
    if path.suffix.lower() == ".csv":
        fields = list(dict.fromkeys(k for r in rows for k in r))
        with open(path, "w", newline="") as f:
            w = csv.DictWriter(f, fieldnames=fields)
            w.writeheader()
            w.writerows(rows)
    else:
        with open(path, "w") as f:
            json.dump(doc, f, indent=2, sort_keys=True)


def _cmd_gen_graph(args) -> None:
    from .graphs import gen_ba, gen_er, gen_ws, save_edge_list
    from .numkit import make_rng

    rng = make_rng(args.seed)
    if args.model == "er":
        g = gen_er(args.n, args.p, rng)
    elif args.model == "ws":
        g = gen_ws(args.n, args.k, args.beta, rng)
    else:
        g = gen_ba(args.n, args.m, rng)
    save_edge_list(g, args.out)
    print(f"{args.model}: n={g.n} m={g.m} -> {args.out}")


def _cmd_encode(args) -> None:
    from .gapcode import adjacency_bytes, encode_parallel, serialize
    from .graphs import load_edge_list
    from .numkit import make_rng
    from .partition import partition_by_strategy

    g = load_edge_list(args.graph)
    part = partition_by_strategy(g, args.partition, make_rng(args.seed))
    blob = serialize(encode_parallel(g, part, args.workers))
    args.out.write_bytes(blob)
    enc_row = {"n": g.n, "m": g.m, "partition": args.partition, "k": part.k, "bytes": len(blob),
               "adjacency_bytes": adjacency_bytes(g.n)}
    if args.report:
        write_report(args.report, [enc_row], enc_row)
    print(json.dumps(enc_row))


def _cmd_bench(args) -> None:
    from .bench import bench_scalability, write_bench_csv, write_bench_json

    records = bench_scalability(args.sizes, args.p, args.repeats, args.partition, args.seed, args.workers)
    config = {"sizes": args.sizes, "p": args.p, "repeats": args.repeats, "partition": args.partition,
              "workers": args.workers, "seed": args.seed}
    if args.out.suffix.lower() == ".csv":
        write_bench_csv(records, args.out)
    else:
        write_bench_json(records, args.out, config)
    print(f"{len(records)} rows -> {args.out}")


def _cmd_train(args) -> None:
    from .bench import ActivationConfig, run_activation_experiment

    config = ActivationConfig(epochs=args.epochs, lr=args.lr, seed=args.seed,
                              seeds=tuple(range(args.seed, args.seed + args.seeds)))
    report = run_activation_experiment(args.dataset, args.activation, config, args.grid)
    write_report(args.out, report.runs, report.to_dict())
    print(f"{args.dataset} {args.activation}: median accuracy {report.summary['median_accuracy']:.4f}")


def _cmd_dimred(args, method: str) -> None:
    from .bench import DimredConfig, run_dimred_experiment

    config = DimredConfig(epochs=args.epochs, n_train=args.n_train, n_test=args.n_test, seed=args.seed,
                          finetune_epochs=getattr(args, "fine_tune_epochs", 2))
    report = run_dimred_experiment(method, args.data_dir, config)
    run = report.runs[0]
    sensitivity = run.pop("sensitivity", None)
    if getattr(args, "sensitivity", None) is not None:
        with open(args.sensitivity, "w") as f:
            json.dump(sensitivity, f, indent=2)
    write_report(args.out, report.runs, report.to_dict())
    print(f"{method}: accuracy {report.summary['accuracy']:.4f}")


def _cmd_metrics(args) -> None:
    from .graphs import clustering_coefficient, load_edge_list, path_length_summary
    from .numkit import make_rng
    from .partition import modularity, partition_by_strategy

    g = load_edge_list(args.graph)
    row: dict = {"n": g.n, "m": g.m, "clustering_coefficient": clustering_coefficient(g)}
    try:
        row["average_path_length"], row["reachable_fraction"] = path_length_summary(g)
    except ValueError:
        row["average_path_length"], row["reachable_fraction"] = None, 0.0
    if args.partition:
        part = partition_by_strategy(g, args.partition, make_rng(args.seed))
        row.update(partition=args.partition, k=part.k, modularity=modularity(g, part))
    write_report(args.out, [row], row)
    print(json.dumps(row))


def cli_main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        if not argv:
            parser.print_usage(sys.stderr)
            raise UsageError("geonet: error: a subcommand is required")
        args = parser.parse_args(argv)
        if args.command is None:
            parser.error("a subcommand is required")
        if args.command == "dimred":
            from .bench import parse_dimred_method

            try:
                kind, _ = parse_dimred_method(args.method)
            except ValueError as exc:
                parser.error(f"argument --method: {exc}")
            if kind == "prune":
                parser.error("argument --method: use the prune subcommand for pruning")
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        if args.command == "gen-graph":
            _cmd_gen_graph(args)
        elif args.command == "encode":
            _cmd_encode(args)
        elif args.command == "bench":
            _cmd_bench(args)
        elif args.command == "train":
            _cmd_train(args)
        elif args.command == "dimred":
            _cmd_dimred(args, args.method)
        elif args.command == "prune":
            _cmd_dimred(args, f"prune:{args.fraction}")
        else:
            _cmd_metrics(args)
    except (OSError, ValueError, RuntimeError) as exc:
        print(f"geonet {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
