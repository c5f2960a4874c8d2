"""Layer base class and the parameter-free / affine building blocks.

Layers keep no per-call state: ``forward`` returns ``(output, cache)`` and
``backward`` consumes that cache, so a layer can be evaluated from several
threads at once. Parameters change only through the optimizer.
"""

from __future__ import annotations

import numpy as np

from .numkit import ShapeError


def xavier_uniform(rng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, (fan_in, fan_out))


class Layer:
    kind = "layer"
    # parameters subject to weight decay and pruning
    weight_names: tuple[str, ...] = ()

    def __init__(self, in_dim: int, out_dim: int):
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.params: dict[str, np.ndarray] = {}
        self.mask: np.ndarray | None = None

    @property
    def has_weights(self) -> bool:
        return "W" in self.params

    def _check_input(self, x: np.ndarray) -> None:
        if x.ndim != 2 or x.shape[1] != self.in_dim:
            raise ShapeError(f"{self.kind} layer expects {self.in_dim} input columns, got shape {x.shape}")

    def forward(self, x):
        raise NotImplementedError

    def backward(self, cache, grad_out):
        raise NotImplementedError

    def apply_mask(self) -> None:
        if self.mask is not None:
            self.params["W"] *= self.mask

    def constrain(self) -> None:
        """Project parameters back into their valid range after an update."""

    def config(self) -> dict:
        return {"type": self.kind, "in_dim": self.in_dim, "out_dim": self.out_dim}

    def __repr__(self):
        return f"{type(self).__name__}({self.in_dim}->{self.out_dim})"


class Affine(Layer):
    kind = "affine"
    weight_names = ("W",)

    def __init__(self, in_dim: int, out_dim: int, rng=None, weights=None, bias=None):
        super().__init__(in_dim, out_dim)
        if weights is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            weights = xavier_uniform(rng, in_dim, out_dim)
        self.params["W"] = np.array(weights, dtype=np.float64).reshape(in_dim, out_dim)
        self.params["b"] = np.zeros(out_dim) if bias is None else np.array(bias, dtype=np.float64).reshape(out_dim)

    def forward(self, x):
        self._check_input(x)
        return x @ self.params["W"] + self.params["b"], x

    def backward(self, x, grad_out):
        grads = {"W": x.T @ grad_out, "b": grad_out.sum(axis=0)}
        return grad_out @ self.params["W"].T, grads


class Identity(Layer):
    """Stand-in used when a square layer is ablated."""

    kind = "identity"

    def __init__(self, dim: int):
        super().__init__(dim, dim)

    def forward(self, x):
        self._check_input(x)
        return x, None

    def backward(self, cache, grad_out):
        return grad_out, {}
