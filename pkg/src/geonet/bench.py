"""Experiment runners and the graph-encoding scalability benchmark.

Every runner returns a report whose ``config`` block is enough to re-run it.
Timing fields are the only values expected to differ between identical runs.
"""

from __future__ import annotations

import csv
import json
import platform
import statistics
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from .datasets import Dataset, gen_circles, gen_moons, gen_xor, load_mnist, split
from .dimred import AEConfig, ae_encode, ae_train, pca_fit, pca_transform
from .gapcode import adjacency_bytes, adjacency_encode, encode, encode_parallel, ideal_parallel_time, serialize
from .graphs import gen_er
from .network import TrainConfig, build_classifier, build_mlp, evaluate, train
from .numkit import make_rng
from .partition import partition_by_strategy
from .pruning import PruneMask, fine_tune, layer_sensitivity, magnitude_prune, select_probe

BENCH_COLUMNS = ("n", "p", "method", "partition", "encode_ms_median", "bytes", "inter_edges", "seed", "repeats")
ADJACENCY_CAP = 20_000
WARMUP_RUNS = 1
GENERATORS = {"xor": gen_xor, "circles": gen_circles, "moons": gen_moons}
TIMING_KEYS = {"wall_time_s", "encode_ms_median", "train_time_s", "reduce_time_s", "prune_time_s",
               "finetune_time_s", "ideal_parallel_ms"}


@dataclass
class BenchRecord:
    n: int
    p: float
    method: str
    partition: str
    encode_ms_median: float
    bytes: int
    inter_edges: int
    seed: int
    repeats: int
    skipped: bool = False

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.bytes <= 0:
            raise ValueError("bytes must be positive")
        if not self.skipped and not self.encode_ms_median >= 0:
            raise ValueError("encode time must be >= 0")

    def row(self) -> dict:
        out = {c: getattr(self, c) for c in BENCH_COLUMNS}
        if self.skipped:
            out["encode_ms_median"] = "skipped"
        return out


@dataclass
class ExperimentReport:
    name: str
    config: dict
    runs: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    environment: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def write_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)


def environment_stamp(seed: int) -> dict:
    return {"artifact_version": __version__, "seed": seed, "python": platform.python_version(),
            "numpy": np.__version__}


def strip_timings(doc):
    """Copy of a report dict without timing fields, for run-to-run comparisons."""
    if isinstance(doc, dict):
        return {k: strip_timings(v) for k, v in doc.items() if k not in TIMING_KEYS}
    if isinstance(doc, list):
        return [strip_timings(v) for v in doc]
    return doc


def _median_ms(fn, repeats: int) -> float:
    for _ in range(WARMUP_RUNS):
        fn()
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append((time.perf_counter() - t0) * 1e3)
    return statistics.median(times)


# -- graph encoding benchmark ------------------------------------------------

def bench_scalability(sizes, p: float = 0.05, repeats: int = 3, partition_strategy: str = "range", seed: int = 0,
                      workers: int = 1, adjacency_cap: int = ADJACENCY_CAP) -> list[BenchRecord]:
    """Time gap encoding against a bit-packed adjacency matrix on ER graphs.

    Each size gets its own graph from ``PCG64([seed, n])``. Timings are the
    median of ``repeats`` runs after one warm-up. Above ``adjacency_cap`` the
    adjacency row carries its analytic size and is marked skipped. With
    ``workers > 1`` an extra ``gap-parallel:<workers>`` row is recorded.
    """
    sizes = list(sizes)
    if not sizes:
        raise ValueError("sizes must be non-empty")
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    if not 0 <= p <= 1:
        raise ValueError(f"p must be in [0, 1], got {p}")
    records = []
    for n in sizes:
        g = gen_er(n, p, make_rng([seed, n]))
        part = partition_by_strategy(g, partition_strategy)
        enc = encode(g, part)
        blob = serialize(enc)
        common = dict(n=n, p=p, partition=partition_strategy, inter_edges=enc.n_inter, seed=seed, repeats=repeats)
        ms = _median_ms(lambda: serialize(encode(g, part)), repeats)
        records.append(BenchRecord(method="gap", encode_ms_median=ms, bytes=len(blob), **common))
        if workers > 1:
            ms_par = _median_ms(lambda: serialize(encode_parallel(g, part, workers)), repeats)
            records.append(BenchRecord(method=f"gap-parallel:{workers}", encode_ms_median=ms_par,
                                       bytes=len(blob), **common))
        if n > adjacency_cap:
            records.append(BenchRecord(method="adjacency", encode_ms_median=float("nan"), bytes=adjacency_bytes(n),
                                       skipped=True, **common))
        else:
            adj = adjacency_encode(g)
            ms_adj = _median_ms(lambda: adjacency_encode(g), repeats)
            records.append(BenchRecord(method="adjacency", encode_ms_median=ms_adj, bytes=len(adj), **common))
    return records


def parallel_model(records: list[BenchRecord], k: int) -> list[dict]:
    """Idealised ``T_total / k`` figures for each gap row (model values, not measurements)."""
    return [{"n": r.n, "k": k, "ideal_parallel_ms": ideal_parallel_time(r.encode_ms_median, k)}
            for r in records if r.method == "gap"]


def write_bench_csv(records: list[BenchRecord], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=BENCH_COLUMNS)
        w.writeheader()
        for r in records:
            w.writerow(r.row())


def write_bench_json(records: list[BenchRecord], path, config: dict | None = None) -> None:
    doc = {"columns": list(BENCH_COLUMNS), "warmup_runs": WARMUP_RUNS, "config": config or {},
           "records": [asdict(r) for r in records]}
    with open(path, "w") as f:
        json.dump(doc, f, indent=2)


# -- activation experiment ---------------------------------------------------

@dataclass
class ActivationConfig(TrainConfig):
    epochs: int = 500
    lr: float = 1e-2
    n_samples: int = 400
    hidden: int = 16
    seeds: tuple[int, ...] = (0, 1, 2, 3, 4)
    grid_size: int = 200


def decision_grid(net, data: Dataset, size: int = 200) -> np.ndarray:
    """``(size*size, 3)`` rows of ``x, y, predicted class`` over the data's bounding box."""
    lo, hi = data.features.min(axis=0), data.features.max(axis=0)
    xs = np.linspace(lo[0], hi[0], size)
    ys = np.linspace(lo[1], hi[1], size)
    gx, gy = np.meshgrid(xs, ys)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return np.column_stack([pts, net.predict(pts)])


def write_grid_csv(grid: np.ndarray, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["x", "y", "class"])
        for x, y, c in grid.tolist():
            w.writerow([repr(x), repr(y), int(c)])


def run_activation_experiment(dataset: str, activation: str, config: ActivationConfig | None = None,
                              grid_path=None) -> ExperimentReport:
    """Train the reference classifier once per seed; accuracy is measured on a held-out half.

    The decision grid comes from the first seed's network.
    """
    config = config or ActivationConfig()
    if dataset not in GENERATORS:
        raise ValueError(f"unknown dataset {dataset!r}; choose from {sorted(GENERATORS)}")
    report = ExperimentReport("activation", {"dataset": dataset, "activation": activation, **asdict(config)},
                              environment=environment_stamp(config.seeds[0]))
    grid = None
    for seed in config.seeds:
        rng = make_rng(seed)
        data = GENERATORS[dataset](config.n_samples, rng=rng)
        tr, te = split(data, 0.5, rng)
        net = build_classifier(activation, 2, data.n_classes, config.hidden, rng, tr.features)
        cfg = TrainConfig(config.epochs, config.batch_size, config.optimizer, config.lr,
                          config.weight_decay, config.dropout_p, seed)
        tr_report = train(net, tr, cfg)
        acc = evaluate(net, te).accuracy
        report.runs.append({"seed": seed, "accuracy": acc, "final_loss": tr_report.final_loss,
                            "wall_time_s": tr_report.wall_time_s})
        if grid is None:
            grid = decision_grid(net, data, config.grid_size)
    accs = [r["accuracy"] for r in report.runs]
    report.summary = {"median_accuracy": float(np.median(accs)), "grid_rows": len(grid)}
    if grid_path is not None:
        write_grid_csv(grid, grid_path)
        report.summary["grid_csv"] = str(grid_path)
    return report


# -- MNIST dimensionality-reduction and pruning experiment -------------------

@dataclass
class DimredConfig(TrainConfig):
    epochs: int = 5
    hidden: int = 128
    n_train: int = 10_000
    n_test: int = 2_000
    ae_epochs: int = 5
    finetune_epochs: int = 2


def _mlp_run(tr: Dataset, te: Dataset, config: DimredConfig):
    net = build_mlp([tr.n_features, config.hidden, 10], make_rng(config.seed))
    rep = train(net, tr, TrainConfig(config.epochs, config.batch_size, config.optimizer, config.lr,
                                     config.weight_decay, config.dropout_p, config.seed))
    return net, evaluate(net, te).accuracy, rep.wall_time_s


def parse_dimred_method(method: str) -> tuple[str, float | None]:
    name, _, arg = method.partition(":")
    if name == "baseline" and not arg:
        return name, None
    try:
        if name in ("pca", "ae"):
            value = int(arg)
            if value >= 1:
                return name, value
        elif name == "prune":
            value = float(arg)
            if 0 <= value <= 1:
                return name, value
    except ValueError:
        pass
    raise ValueError(f"bad method {method!r}; expected baseline, pca:<k>, ae:<latent> or prune:<fraction>")


def run_dimred_experiment(method: str, data_dir=None, config: DimredConfig | None = None,
                          data: tuple[Dataset, Dataset] | None = None) -> ExperimentReport:
    """Reduce then train, or train then prune and fine-tune, on an MNIST subset.

    ``data`` may pass an already-loaded ``(train, test)`` pair; otherwise
    IDX files are read from ``data_dir`` (or ``$GEONET_DATA_DIR``).
    """
    config = config or DimredConfig()
    kind, arg = parse_dimred_method(method)
    if data is None:
        data = load_mnist(data_dir, config.n_train, config.n_test)
    tr, te = data
    report = ExperimentReport("dimred", {"method": method, "data_dir": None if data_dir is None else str(data_dir),
                                         **asdict(config)},
                              environment=environment_stamp(config.seed))
    # the config echoes the requested sizes; the run records what was actually loaded
    run: dict = {"method": method, "n_train": len(tr), "n_test": len(te)}
    if kind == "baseline":
        _, acc, t = _mlp_run(tr, te, config)
        run.update(accuracy=acc, train_time_s=t)
    elif kind == "pca":
        t0 = time.perf_counter()
        model = pca_fit(tr.features, int(arg))
        tr_r, te_r = tr.with_features(pca_transform(model, tr.features)), te.with_features(pca_transform(model, te.features))
        reduce_t = time.perf_counter() - t0
        _, acc, t = _mlp_run(tr_r, te_r, config)
        run.update(accuracy=acc, train_time_s=t, reduce_time_s=reduce_t,
                   explained_variance_ratio=model.explained_variance_ratio)
    elif kind == "ae":
        t0 = time.perf_counter()
        ae_cfg = AEConfig(epochs=config.ae_epochs, batch_size=config.batch_size, lr=config.lr, seed=config.seed,
                          hidden=config.hidden)
        ae, loss = ae_train(tr.features, int(arg), ae_cfg)
        tr_r, te_r = tr.with_features(ae_encode(ae, tr.features)), te.with_features(ae_encode(ae, te.features))
        reduce_t = time.perf_counter() - t0
        _, acc, t = _mlp_run(tr_r, te_r, config)
        run.update(accuracy=acc, train_time_s=t, reduce_time_s=reduce_t, reconstruction_loss=loss)
    else:
        net, base_acc, t = _mlp_run(tr, te, config)
        t0 = time.perf_counter()
        pruned, mask = magnitude_prune(net, float(arg))
        prune_t = time.perf_counter() - t0
        ft_cfg = TrainConfig(config.finetune_epochs, config.batch_size, config.optimizer, config.lr,
                             config.weight_decay, config.dropout_p, config.seed)
        tuned, ft = fine_tune(pruned, mask, tr, ft_cfg)
        kept = PruneMask.from_network(tuned)
        zeros_kept = all(np.all(tuned.layers[i].params["W"][m == 0] == 0) for i, m in mask.masks.items())
        run.update(accuracy=evaluate(tuned, te).accuracy, baseline_accuracy=base_acc, train_time_s=t,
                   prune_time_s=prune_t, finetune_time_s=ft.wall_time_s, pruned_weights=mask.zero_count,
                   total_weights=mask.total, mask_zeros_preserved=bool(zeros_kept and kept.zero_count == mask.zero_count),
                   sensitivity=layer_sensitivity(tuned, te.subset(select_probe(te, seed=config.seed))).to_dict())
    report.runs.append(run)
    report.summary = {"accuracy": run["accuracy"]}
    return report
