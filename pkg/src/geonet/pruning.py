"""Pruning a trained network viewed as a DAG of units and weighted edges.

Three criteria are offered: global weight magnitude, mean unit activation on
a probe set, and per-layer sensitivity to ablation. Fine-tuning keeps the
resulting masks enforced after every optimizer step.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field

import numpy as np

from .activations import RBFLayer
from .datasets import Dataset
from .layers import Identity
from .network import Network, TrainConfig, evaluate, train
from .numkit import make_rng

PROBE_SIZE = 512


class PruningError(ValueError):
    pass


@dataclass
class PruneMask:
    """Binary keep-masks keyed by layer index; 1 keeps a weight, 0 removes it."""

    masks: dict[int, np.ndarray]

    def sparsity(self) -> dict[int, float]:
        return {i: float(1.0 - m.mean()) for i, m in self.masks.items()}

    @property
    def zero_count(self) -> int:
        return int(sum(m.size - np.count_nonzero(m) for m in self.masks.values()))

    @property
    def total(self) -> int:
        return int(sum(m.size for m in self.masks.values()))

    def apply(self, net: Network) -> None:
        for i, m in self.masks.items():
            w = net.layers[i].params["W"]
            if m.shape != w.shape:
                raise ValueError(f"mask for layer {i} has shape {m.shape}, weights are {w.shape}")
            net.layers[i].mask = m.astype(np.float64)
            net.layers[i].apply_mask()

    @classmethod
    def from_network(cls, net: Network) -> "PruneMask":
        return cls({i: (np.ones_like(net.layers[i].params["W"]) if net.layers[i].mask is None
                        else net.layers[i].mask.copy()) for i in net.weighted_layers()})


def magnitude_prune(net: Network, fraction: float) -> tuple[Network, PruneMask]:
    """Zero the globally smallest ``floor(fraction * total)`` weights.

    Ties are broken by (layer index, row, column); biases are never pruned.
    The input network is left untouched.
    """
    if not 0 <= fraction <= 1:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    pruned = copy.deepcopy(net)
    idx = pruned.weighted_layers()
    mags = np.concatenate([np.abs(pruned.layers[i].params["W"]).ravel() for i in idx])
    n_prune = int(np.floor(fraction * len(mags)))
    keep = np.ones(len(mags))
    keep[np.argsort(mags, kind="stable")[:n_prune]] = 0.0
    masks, offset = {}, 0
    for i in idx:
        shape = pruned.layers[i].params["W"].shape
        size = int(np.prod(shape))
        masks[i] = keep[offset:offset + size].reshape(shape)
        offset += size
    mask = PruneMask(masks)
    mask.apply(pruned)
    return pruned, mask


@dataclass
class SensitivityReport:
    probe_indices: list[int]
    units: list[dict] = field(default_factory=list)
    layers: list[dict] = field(default_factory=list)
    baseline_accuracy: float | None = None

    def to_dict(self) -> dict:
        return {
            "probe_indices": list(map(int, self.probe_indices)),
            "baseline_accuracy": self.baseline_accuracy,
            "units": self.units,
            "layers": self.layers,
        }


def select_probe(data: Dataset, size: int = PROBE_SIZE, seed: int = 0) -> np.ndarray:
    n = min(size, len(data))
    return np.sort(make_rng(seed).choice(len(data), size=n, replace=False))


def _hidden_groups(net: Network):
    """Yield ``(producer, consumer)`` layer index pairs around each hidden unit group.

    The units are the values entering ``consumer``; ``producer`` is the
    weighted layer that created them. An RBF layer's own Gaussian units are
    reported with ``consumer`` equal to ``producer``.
    """
    weighted = net.weighted_layers()
    for i in weighted:
        if isinstance(net.layers[i], RBFLayer):
            yield i, i
    for a, b in zip(weighted, weighted[1:]):
        yield a, b


def activation_prune(net: Network, probe: Dataset, threshold: float) -> tuple[Network, PruneMask, SensitivityReport]:
    """Remove hidden units whose mean |activation| over ``probe`` is below ``threshold``."""
    if len(probe) == 0:
        raise ValueError("probe set is empty")
    if threshold < 0:
        raise ValueError("threshold must be >= 0")
    pruned = copy.deepcopy(net)
    mask = PruneMask.from_network(pruned)
    report = SensitivityReport(list(range(len(probe))))
    inputs = _layer_inputs(pruned, probe.features)
    for producer, consumer in _hidden_groups(pruned):
        if producer == consumer:
            acts = pruned.layers[producer].activations(inputs[producer])
        else:
            acts = inputs[consumer]
        mean_abs = np.mean(np.abs(acts), axis=0)
        dead = np.flatnonzero(mean_abs < threshold)
        if len(dead) and len(dead) == len(mean_abs):
            name = f"layer {producer} ({pruned.layers[producer].kind})"
            raise PruningError(f"threshold {threshold} would remove every unit produced by {name}")
        if producer == consumer:
            mask.masks[producer][dead, :] = 0.0
        else:
            if not isinstance(pruned.layers[producer], RBFLayer):
                mask.masks[producer][:, dead] = 0.0
            if not isinstance(pruned.layers[consumer], RBFLayer):
                mask.masks[consumer][dead, :] = 0.0
        report.units.append({"layer": producer, "consumer": consumer,
                             "mean_abs_activation": mean_abs.tolist(), "pruned": dead.tolist()})
    mask.apply(pruned)
    return pruned, mask, report


def _layer_inputs(net: Network, x) -> list[np.ndarray]:
    inputs = []
    for layer in net.layers:
        inputs.append(x)
        x = layer.forward(x)[0]
    return inputs


def layer_sensitivity(net: Network, probe: Dataset) -> SensitivityReport:
    """Accuracy change when each hidden layer is swapped for the identity.

    Every layer except the output layer is listed once; layers whose input
    and output sizes differ cannot be bypassed and are flagged instead.
    """
    baseline = evaluate(net, probe).accuracy
    report = SensitivityReport(list(range(len(probe))), baseline_accuracy=baseline)
    for i, layer in enumerate(net.layers[:-1]):
        entry = {"layer": i, "kind": layer.kind, "ablatable": layer.in_dim == layer.out_dim}
        if entry["ablatable"]:
            ablated = Network(net.layers[:i] + [Identity(layer.in_dim)] + net.layers[i + 1:])
            acc = evaluate(ablated, probe).accuracy
            entry.update(accuracy=acc, drop=baseline - acc)
        report.layers.append(entry)
    return report


def fine_tune(net: Network, mask: PruneMask, data: Dataset, config: TrainConfig | None = None):
    """Retrain a pruned network with ``mask`` enforced; returns ``(network, report)``."""
    tuned = copy.deepcopy(net)
    mask.apply(tuned)
    report = train(tuned, data, config or TrainConfig())
    return tuned, report
