"""PCA by covariance eigendecomposition, and a dense autoencoder."""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .activations import LeakyReLU
from .layers import Affine
from .network import Network, TrainConfig, fit, reconstruction_loss
from .numkit import ShapeError, as_matrix, make_rng, sym_eigen

PCA_FORMAT = "geonet.pca"


@dataclass
class PCAModel:
    mean: np.ndarray
    components: np.ndarray  # (features, k), orthonormal columns
    eigenvalues: np.ndarray  # all eigenvalues, descending
    k: int

    @property
    def explained_variance_ratio(self) -> float:
        return explained_variance_ratio(self.eigenvalues, self.k)

    def to_dict(self) -> dict:
        return {
            "format": PCA_FORMAT,
            "version": 1,
            "k": self.k,
            "mean": self.mean.tolist(),
            "components": {"shape": list(self.components.shape), "data": self.components.ravel().tolist()},
            "eigenvalues": self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "PCAModel":
        if doc.get("format") != PCA_FORMAT or doc.get("version") != 1:
            raise ValueError("not a version-1 PCA document")
        comps = np.asarray(doc["components"]["data"], dtype=np.float64).reshape(doc["components"]["shape"])
        return cls(np.asarray(doc["mean"]), comps, np.asarray(doc["eigenvalues"]), int(doc["k"]))

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f)


def explained_variance_ratio(eigenvalues, k: int) -> float:
    vals = np.clip(np.asarray(eigenvalues, dtype=np.float64), 0.0, None)
    total = vals.sum()
    return float(vals[:k].sum() / total) if total > 0 else 1.0


def covariance(data, center: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """``(1/n) X^T X`` of the (optionally mean-centred) data, plus the mean used."""
    x = as_matrix(data, "data")
    mean = x.mean(axis=0) if center else np.zeros(x.shape[1])
    xc = x - mean
    return xc.T @ xc / len(x), mean


def pca_fit(data, k: int, center: bool = True, method: str = "auto") -> PCAModel:
    """Fit PCA keeping the top ``k`` eigenvectors of the 1/n covariance.

    ``center=False`` uses the raw second-moment matrix instead; transforms
    then skip the mean shift as well.
    """
    x = as_matrix(data, "data")
    n, d = x.shape
    if n < 2:
        raise ValueError("PCA needs at least two samples")
    if not 1 <= k <= d:
        raise ValueError(f"k must be in [1, {d}], got {k}")
    cov, mean = covariance(x, center)
    vals, vecs = sym_eigen(cov, method=method)
    return PCAModel(mean, vecs[:, :k].copy(), vals, k)


def pca_transform(model: PCAModel, x) -> np.ndarray:
    x = as_matrix(x, "x")
    if x.shape[1] != len(model.mean):
        raise ShapeError(f"model expects {len(model.mean)} features, got {x.shape[1]}")
    return (x - model.mean) @ model.components


def pca_inverse(model: PCAModel, z) -> np.ndarray:
    z = as_matrix(z, "z")
    if z.shape[1] != model.k:
        raise ShapeError(f"model has {model.k} components, got {z.shape[1]} columns")
    return z @ model.components.T + model.mean


# -- autoencoder -------------------------------------------------------------

@dataclass
class Autoencoder:
    encoder: Network
    decoder: Network
    latent: int

    def __post_init__(self):
        if self.encoder.out_dim != self.latent or self.decoder.in_dim != self.latent:
            raise ShapeError("encoder output and decoder input must both equal the latent size")
        if self.decoder.out_dim != self.encoder.in_dim:
            raise ShapeError("decoder must reconstruct the encoder's input dimension")

    @property
    def network(self) -> Network:
        return Network(self.encoder.layers + self.decoder.layers)


@dataclass
class AEConfig(TrainConfig):
    hidden: int = 128
    weight_decay: float = 0.0


def build_autoencoder(in_dim: int, latent: int, hidden: int = 128, rng=None) -> Autoencoder:
    """``in -> hidden -> latent -> hidden -> in`` with leaky-ReLU hidden layers and a linear output."""
    if latent < 1:
        raise ValueError("latent size must be >= 1")
    rng = rng if rng is not None else make_rng(0)
    encoder = Network([Affine(in_dim, hidden, rng), LeakyReLU(hidden), Affine(hidden, latent, rng)])
    decoder = Network([Affine(latent, hidden, rng), LeakyReLU(hidden), Affine(hidden, in_dim, rng)])
    return Autoencoder(encoder, decoder, latent)


def ae_loss(ae: Autoencoder, data) -> float:
    x = as_matrix(data, "data")
    return reconstruction_loss(ae_decode(ae, ae_encode(ae, x)), x)[0]


def ae_train(data, latent: int, config: AEConfig | None = None) -> tuple[Autoencoder, float]:
    """Train an autoencoder on ``data``; returns it with its final reconstruction loss."""
    config = config or AEConfig()
    x = as_matrix(data, "data")
    if len(x) == 0:
        raise ValueError("cannot train an autoencoder on empty data")
    ae = build_autoencoder(x.shape[1], latent, config.hidden, make_rng(config.seed))
    fit(ae.network, x, x, reconstruction_loss, config)
    return ae, ae_loss(ae, x)


def ae_encode(ae: Autoencoder, x) -> np.ndarray:
    return ae.encoder.predict_scores(as_matrix(x, "x"))


def ae_decode(ae: Autoencoder, z) -> np.ndarray:
    return ae.decoder.predict_scores(as_matrix(z, "z"))
