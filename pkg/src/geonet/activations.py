"""Polynomial neurons, radial basis function units and leaky/parametric ReLU."""

from __future__ import annotations

import numpy as np

from .layers import Layer, xavier_uniform
from .numkit import ShapeError

DEFAULT_ALPHA = 0.01
MIN_SIGMA = 1e-6


class PolynomialLayer(Layer):
    """``y_j = sum_i W[i, j] * x_i**degree + b_j``.

    The power is a plain integer power, so even degrees discard the sign of
    the input.
    """

    kind = "poly"
    weight_names = ("W",)

    def __init__(self, in_dim: int, out_dim: int, degree: int = 3, rng=None, weights=None, bias=None):
        if int(degree) != degree or degree < 1:
            raise ValueError(f"polynomial degree must be a positive integer, got {degree}")
        super().__init__(in_dim, out_dim)
        self.degree = int(degree)
        if weights is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            weights = xavier_uniform(rng, in_dim, out_dim)
        self.params["W"] = np.array(weights, dtype=np.float64).reshape(in_dim, out_dim)
        self.params["b"] = np.zeros(out_dim) if bias is None else np.array(bias, dtype=np.float64).reshape(out_dim)

    def forward(self, x):
        self._check_input(x)
        powered = x**self.degree
        return powered @ self.params["W"] + self.params["b"], (x, powered)

    def backward(self, cache, grad_out):
        x, powered = cache
        grads = {"W": powered.T @ grad_out, "b": grad_out.sum(axis=0)}
        dpow = self.degree * x ** (self.degree - 1)
        return (grad_out @ self.params["W"].T) * dpow, grads

    def config(self):
        return {**super().config(), "degree": self.degree}


class RBFLayer(Layer):
    """Gaussian units ``exp(-|x - c|^2 / (2 sigma^2))`` followed by a linear readout.

    Centres and spreads are frozen unless ``trainable_centers`` is set, in
    which case they join ``params`` and receive gradients.
    """

    kind = "rbf"
    weight_names = ("W",)

    def __init__(self, centers, sigma, out_dim: int, rng=None, weights=None, bias=None,
                 trainable_centers: bool = False):
        centers = np.array(centers, dtype=np.float64)
        if centers.ndim != 2:
            raise ShapeError("centers must be a (n_units, in_dim) matrix")
        n_units, in_dim = centers.shape
        sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (n_units,)).copy()
        if np.any(sigma <= 0) or not np.all(np.isfinite(sigma)):
            raise ValueError("every RBF spread must be positive and finite")
        super().__init__(in_dim, out_dim)
        self.n_units = n_units
        self.trainable_centers = trainable_centers
        if weights is None:
            rng = rng if rng is not None else np.random.default_rng(0)
            weights = xavier_uniform(rng, n_units, out_dim)
        self.params["W"] = np.array(weights, dtype=np.float64).reshape(n_units, out_dim)
        self.params["b"] = np.zeros(out_dim) if bias is None else np.array(bias, dtype=np.float64).reshape(out_dim)
        self.centers = centers
        self.sigma = sigma
        if trainable_centers:
            self.params["centers"] = self.centers
            self.params["sigma"] = self.sigma

    def activations(self, x) -> np.ndarray:
        self._check_input(x)
        diff = x[:, None, :] - self.centers[None, :, :]
        sq = np.einsum("bud,bud->bu", diff, diff)
        return np.exp(-sq / (2.0 * self.sigma**2))

    def forward(self, x):
        phi = self.activations(x)
        return phi @ self.params["W"] + self.params["b"], (x, phi)

    def backward(self, cache, grad_out):
        x, phi = cache
        grads = {"W": phi.T @ grad_out, "b": grad_out.sum(axis=0)}
        gphi = grad_out @ self.params["W"].T
        coeff = gphi * phi / self.sigma**2  # (batch, units)
        diff = x[:, None, :] - self.centers[None, :, :]
        grad_x = -np.einsum("bu,bud->bd", coeff, diff)
        if self.trainable_centers:
            grads["centers"] = np.einsum("bu,bud->ud", coeff, diff)
            sq = np.einsum("bud,bud->bu", diff, diff)
            grads["sigma"] = np.sum(coeff * sq, axis=0) / self.sigma
        return grad_x, grads

    def constrain(self):
        np.maximum(self.sigma, MIN_SIGMA, out=self.sigma)

    def config(self):
        return {**super().config(), "n_units": self.n_units, "trainable_centers": self.trainable_centers}


def rbf_init_centers(features, n_units: int, rng=None, out_dim: int = 2, trainable_centers: bool = False) -> RBFLayer:
    """Pick ``n_units`` distinct training points as centres.

    Every unit gets the same spread: the mean pairwise distance among the
    chosen centres (1.0 when there is a single centre).
    """
    features = np.asarray(getattr(features, "features", features), dtype=np.float64)
    n = len(features)
    if not 1 <= n_units <= n:
        raise ValueError(f"n_units must be in [1, {n}], got {n_units}")
    rng = rng if rng is not None else np.random.default_rng(0)
    chosen = rng.choice(n, size=n_units, replace=False)
    centers = features[chosen]
    if n_units == 1:
        sigma = 1.0
    else:
        iu = np.triu_indices(n_units, k=1)
        dists = np.linalg.norm(centers[:, None, :] - centers[None, :, :], axis=-1)[iu]
        sigma = float(dists.mean())
        if sigma <= 0:
            sigma = 1.0
    return RBFLayer(centers, sigma, out_dim, rng=rng, trainable_centers=trainable_centers)


class LeakyReLU(Layer):
    """``f(x) = x`` for ``x > 0`` and ``alpha * x`` otherwise."""

    kind = "lrelu"

    def __init__(self, dim: int, alpha: float = DEFAULT_ALPHA):
        if not 0 < alpha < 1:
            raise ValueError(f"leaky slope must be in (0, 1), got {alpha}")
        super().__init__(dim, dim)
        self.alpha = float(alpha)

    def _slope(self):
        return self.alpha

    def forward(self, x):
        self._check_input(x)
        return np.where(x > 0, x, self._slope() * x), x

    def backward(self, x, grad_out):
        return grad_out * np.where(x > 0, 1.0, self._slope()), {}

    def config(self):
        return {**super().config(), "alpha": self.alpha}


class PReLU(LeakyReLU):
    """Leaky ReLU whose single negative-side slope is learned."""

    kind = "prelu"

    def __init__(self, dim: int, alpha: float = DEFAULT_ALPHA):
        super().__init__(dim, alpha)
        self.params["alpha"] = np.array([alpha], dtype=np.float64)

    def _slope(self):
        return self.params["alpha"][0]

    @property
    def alpha_value(self) -> float:
        return float(self.params["alpha"][0])

    def backward(self, x, grad_out):
        neg = x <= 0
        grad_alpha = np.array([np.sum(grad_out[neg] * x[neg])])
        return grad_out * np.where(neg, self._slope(), 1.0), {"alpha": grad_alpha}

    def constrain(self):
        np.clip(self.params["alpha"], 1e-6, 1 - 1e-6, out=self.params["alpha"])

    def config(self):
        return {**super().config(), "alpha": self.alpha_value}


def leaky_relu(x, alpha: float = DEFAULT_ALPHA):
    if not 0 < alpha < 1:
        raise ValueError(f"leaky slope must be in (0, 1), got {alpha}")
    x = np.asarray(x, dtype=np.float64)
    return np.where(x > 0, x, alpha * x)


def leaky_relu_grad(x, upstream, alpha: float = DEFAULT_ALPHA):
    x = np.asarray(x, dtype=np.float64)
    return np.asarray(upstream) * np.where(x > 0, 1.0, alpha)


def parse_activation(spec: str) -> tuple[str, float | int | None]:
    """Parse ``poly:<degree>``, ``rbf:<n_units>``, ``lrelu:<alpha>`` or ``prelu``."""
    kind, _, arg = spec.strip().partition(":")
    kind = kind.lower()
    try:
        if kind == "poly":
            degree = int(arg) if arg else 3
            if degree < 1:
                raise ValueError
            return kind, degree
        if kind == "rbf":
            units = int(arg) if arg else 16
            if units < 1:
                raise ValueError
            return kind, units
        if kind == "lrelu":
            alpha = float(arg) if arg else DEFAULT_ALPHA
            if not 0 < alpha < 1:
                raise ValueError
            return kind, alpha
        if kind == "prelu" and not arg:
            return kind, None
    except ValueError:
        pass
    raise ValueError(f"bad activation spec {spec!r}; expected poly:<d>, rbf:<units>, lrelu:<alpha> or prelu")
