"""Feed-forward networks, losses, SGD/Adam and the shared training loop."""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .activations import LeakyReLU, PolynomialLayer, PReLU, RBFLayer, parse_activation, rbf_init_centers
from .datasets import Dataset
from .layers import Affine, Identity, Layer
from .numkit import ShapeError, make_rng

FORMAT_NAME = "geonet.network"
FORMAT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite loss {loss} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class Network:
    def __init__(self, layers: list[Layer]):
        if not layers:
            raise ValueError("a network needs at least one layer")
        for i, (a, b) in enumerate(zip(layers, layers[1:])):
            if a.out_dim != b.in_dim:
                raise ShapeError(f"layer {i} outputs {a.out_dim} values but layer {i + 1} expects {b.in_dim}")
        self.layers = list(layers)

    @property
    def in_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.layers[-1].out_dim

    def weighted_layers(self) -> list[int]:
        return [i for i, layer in enumerate(self.layers) if layer.has_weights]

    def forward(self, x, train: bool = False, dropout_p: float = 0.0, rng=None):
        """Run the network; returns ``(output, caches)``.

        In training mode inverted dropout is applied to the input of every
        weighted layer except the first.
        """
        if not 0 <= dropout_p < 1:
            raise ValueError(f"dropout_p must be in [0, 1), got {dropout_p}")
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"network expects {self.in_dim} input columns, got shape {x.shape}")
        use_dropout = train and dropout_p > 0
        if use_dropout and rng is None:
            raise ValueError("dropout in training mode needs an rng")
        caches = []
        seen_weights = False
        for layer in self.layers:
            drop = None
            if use_dropout and layer.has_weights and seen_weights:
                drop = (rng.random(x.shape) >= dropout_p) / (1.0 - dropout_p)
                x = x * drop
            seen_weights = seen_weights or layer.has_weights
            x, cache = layer.forward(x)
            caches.append((cache, drop))
        return x, caches

    def backward(self, caches, grad_out) -> list[dict]:
        grads = [None] * len(self.layers)
        for i in range(len(self.layers) - 1, -1, -1):
            cache, drop = caches[i]
            grad_out, grads[i] = self.layers[i].backward(cache, grad_out)
            if drop is not None:
                grad_out = grad_out * drop
        return grads

    def predict_scores(self, x, chunk: int = 4096) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        parts = [self.forward(x[i:i + chunk])[0] for i in range(0, len(x), chunk)]
        return np.vstack(parts) if parts else np.zeros((0, self.out_dim))

    def predict(self, x) -> np.ndarray:
        return np.argmax(self.predict_scores(x), axis=1)

    def parameter_count(self) -> int:
        return sum(p.size for layer in self.layers for p in layer.params.values())

    def __repr__(self):
        return "Network([" + ", ".join(map(repr, self.layers)) + "])"


# -- losses ------------------------------------------------------------------

def cross_entropy_loss(logits, labels):
    """Mean softmax cross-entropy and its gradient with respect to the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n, c = logits.shape
    if len(labels) != n:
        raise ShapeError(f"{n} logit rows but {len(labels)} labels")
    if n and (labels.min() < 0 or labels.max() >= c):
        raise ValueError(f"labels must lie in [0, {c})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    log_probs = shifted - log_norm[:, None]
    rows = np.arange(n)
    loss = -log_probs[rows, labels].mean()
    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    return float(max(loss, 0.0)), grad / n


def reconstruction_loss(outputs, targets):
    """``(1/n) * sum_i |x_i - x_hat_i|^2`` and its gradient."""
    diff = np.asarray(outputs, dtype=np.float64) - np.asarray(targets, dtype=np.float64)
    n = len(diff)
    return float(np.sum(diff * diff) / n), 2.0 * diff / n


# -- optimizers --------------------------------------------------------------

@dataclass
class SGD:
    lr: float = 1e-2
    weight_decay: float = 0.0
    steps: int = 0
    kind: str = field(default="sgd", init=False)

    def step(self, net: Network, grads: list[dict]) -> None:
        self.steps += 1
        for layer, layer_grads in zip(net.layers, grads):
            for name, g in (layer_grads or {}).items():
                param = layer.params[name]
                if self.weight_decay and name in layer.weight_names:
                    g = g + self.weight_decay * param
                param -= self.lr * g
            layer.apply_mask()
            layer.constrain()


@dataclass
class Adam:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    steps: int = 0
    m: dict = field(default_factory=dict, repr=False)
    v: dict = field(default_factory=dict, repr=False)
    kind: str = field(default="adam", init=False)

    def step(self, net: Network, grads: list[dict]) -> None:
        self.steps += 1
        t = self.steps
        corr1 = 1.0 - self.beta1**t
        corr2 = 1.0 - self.beta2**t
        for i, (layer, layer_grads) in enumerate(zip(net.layers, grads)):
            for name, g in (layer_grads or {}).items():
                param = layer.params[name]
                if self.weight_decay and name in layer.weight_names:
                    g = g + self.weight_decay * param
                key = (i, name)
                if key not in self.m:
                    self.m[key] = np.zeros_like(param)
                    self.v[key] = np.zeros_like(param)
                m, v = self.m[key], self.v[key]
                m *= self.beta1
                m += (1.0 - self.beta1) * g
                v *= self.beta2
                v += (1.0 - self.beta2) * g * g
                param -= self.lr * (m / corr1) / (np.sqrt(v / corr2) + self.eps)
            layer.apply_mask()
            layer.constrain()


def make_optimizer(kind: str, lr: float, weight_decay: float = 0.0):
    if kind == "adam":
        return Adam(lr=lr, weight_decay=weight_decay)
    if kind == "sgd":
        return SGD(lr=lr, weight_decay=weight_decay)
    raise ValueError(f"unknown optimizer {kind!r}")


# -- training ----------------------------------------------------------------

@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    optimizer: str = "adam"
    lr: float = 1e-3
    weight_decay: float = 1e-4
    dropout_p: float = 0.0
    seed: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class TrainingReport:
    epoch_loss: list[float]
    epoch_accuracy: list[float]
    wall_time_s: float
    steps: int

    @property
    def final_loss(self) -> float:
        return self.epoch_loss[-1] if self.epoch_loss else float("nan")


def fit(net: Network, inputs, targets, loss_fn, config: TrainConfig, labels=None) -> TrainingReport:
    """Minibatch training of ``net`` on ``loss_fn(outputs, targets)``.

    If ``labels`` is given, per-epoch training accuracy is tracked from the
    minibatch outputs.
    """
    inputs = np.asarray(inputs, dtype=np.float64)
    n = len(inputs)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if config.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    rng = make_rng(config.seed)
    opt = make_optimizer(config.optimizer, config.lr, config.weight_decay)
    for layer in net.layers:
        layer.apply_mask()
    losses, accuracies = [], []
    start = time.perf_counter()
    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total, correct = 0.0, 0
        for b, lo in enumerate(range(0, n, config.batch_size)):
            idx = order[lo:lo + config.batch_size]
            out, caches = net.forward(inputs[idx], train=True, dropout_p=config.dropout_p, rng=rng)
            loss, grad = loss_fn(out, targets[idx])
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch, b, loss)
            opt.step(net, net.backward(caches, grad))
            total += loss * len(idx)
            if labels is not None:
                correct += int(np.sum(np.argmax(out, axis=1) == labels[idx]))
        losses.append(total / n)
        if labels is not None:
            accuracies.append(correct / n)
    return TrainingReport(losses, accuracies, time.perf_counter() - start, opt.steps)


def train(net: Network, data: Dataset, config: TrainConfig | None = None) -> TrainingReport:
    config = config or TrainConfig()
    if len(data) == 0:
        raise ValueError("cannot train on an empty dataset")
    if data.n_features != net.in_dim:
        raise ShapeError(f"dataset has {data.n_features} features, network expects {net.in_dim}")
    return fit(net, data.features, data.labels, cross_entropy_loss, config, labels=data.labels)


@dataclass
class Evaluation:
    accuracy: float
    confusion: np.ndarray


def evaluate(net: Network, data: Dataset) -> Evaluation:
    if len(data) == 0:
        raise ValueError("cannot evaluate on an empty dataset")
    if data.n_features != net.in_dim:
        raise ShapeError(f"dataset has {data.n_features} features, network expects {net.in_dim}")
    pred = net.predict(data.features)
    k = max(data.n_classes, net.out_dim)
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (data.labels, pred), 1)
    return Evaluation(float(np.mean(pred == data.labels)), confusion)


# -- builders ----------------------------------------------------------------

def build_classifier(activation: str, n_in: int, n_classes: int, hidden: int = 16, rng=None,
                     train_features=None) -> Network:
    """Reference classifier: ``n_in -> hidden units of the activation -> n_classes``.

    ``poly``/``lrelu``/``prelu`` put the activation between two affine maps.
    ``rbf:<units>`` is a single RBF layer whose centres are sampled from
    ``train_features`` and whose readout produces the class scores.
    """
    rng = rng if rng is not None else make_rng(0)
    kind, arg = parse_activation(activation)
    if kind == "rbf":
        if train_features is None:
            raise ValueError("rbf networks need training features to place centres")
        return Network([rbf_init_centers(train_features, arg, rng, out_dim=n_classes)])
    first = Affine(n_in, hidden, rng)
    if kind == "poly":
        middle = PolynomialLayer(hidden, hidden, arg, rng)
    elif kind == "lrelu":
        middle = LeakyReLU(hidden, arg)
    else:
        middle = PReLU(hidden)
    return Network([first, middle, Affine(hidden, n_classes, rng)])


def build_mlp(sizes: list[int], rng=None, alpha: float = 0.01) -> Network:
    """Affine layers joined by leaky ReLU, e.g. ``[784, 128, 10]``."""
    rng = rng if rng is not None else make_rng(0)
    layers: list[Layer] = []
    for i, (a, b) in enumerate(zip(sizes, sizes[1:])):
        layers.append(Affine(a, b, rng))
        if i < len(sizes) - 2:
            layers.append(LeakyReLU(b, alpha))
    return Network(layers)


# -- serialization -----------------------------------------------------------

def _pack(array) -> dict:
    array = np.asarray(array, dtype=np.float64)
    return {"shape": list(array.shape), "data": array.ravel().tolist()}


def _unpack(blob) -> np.ndarray:
    return np.asarray(blob["data"], dtype=np.float64).reshape(blob["shape"])


def layer_to_dict(layer: Layer) -> dict:
    doc = dict(layer.config())
    doc["params"] = {name: _pack(p) for name, p in layer.params.items()}
    if isinstance(layer, RBFLayer):
        doc["centers"] = _pack(layer.centers)
        doc["sigma"] = _pack(layer.sigma)
    doc["mask"] = None if layer.mask is None else _pack(layer.mask)
    return doc


def layer_from_dict(doc: dict) -> Layer:
    kind = doc["type"]
    params = {name: _unpack(blob) for name, blob in doc.get("params", {}).items()}
    if kind == "affine":
        layer = Affine(doc["in_dim"], doc["out_dim"], weights=params["W"], bias=params["b"])
    elif kind == "poly":
        layer = PolynomialLayer(doc["in_dim"], doc["out_dim"], doc["degree"], weights=params["W"], bias=params["b"])
    elif kind == "rbf":
        layer = RBFLayer(_unpack(doc["centers"]), _unpack(doc["sigma"]), doc["out_dim"], weights=params["W"],
                         bias=params["b"], trainable_centers=doc.get("trainable_centers", False))
    elif kind == "lrelu":
        layer = LeakyReLU(doc["in_dim"], doc["alpha"])
    elif kind == "prelu":
        layer = PReLU(doc["in_dim"], doc["alpha"])
    elif kind == "identity":
        layer = Identity(doc["in_dim"])
    else:
        raise ValueError(f"unknown layer type {kind!r}")
    if doc.get("mask") is not None:
        layer.mask = _unpack(doc["mask"])
        if layer.mask.shape != layer.params["W"].shape:
            raise ShapeError(f"mask shape {layer.mask.shape} does not match weights {layer.params['W'].shape}")
    return layer


def network_to_dict(net: Network) -> dict:
    return {"format": FORMAT_NAME, "version": FORMAT_VERSION, "layers": [layer_to_dict(l) for l in net.layers]}


def network_from_dict(doc: dict) -> Network:
    if doc.get("format") != FORMAT_NAME:
        raise ValueError(f"not a network document (format={doc.get('format')!r})")
    if doc.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported network document version {doc.get('version')}")
    return Network([layer_from_dict(d) for d in doc["layers"]])


def save_network(net: Network, path) -> None:
    with open(path, "w") as f:
        json.dump(network_to_dict(net), f)


def load_network(path) -> Network:
    with open(path) as f:
        return network_from_dict(json.load(f))
