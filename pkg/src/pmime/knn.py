"""k-nearest-neighbor (KSG) estimators of mutual and conditional mutual information.

Both estimators use the max-norm in every space. The k-th neighbor radius
is found in the joint space and reused to count neighbors, strictly inside
that radius, in the marginal spaces (Kraskov et al. algorithm 1; the
conditional form is the four-term digamma combination over the joint,
xz, yz and z spaces). All values are in nats and are not clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import digamma

from .exceptions import TooFewSamples
from .neighbors import BACKENDS, kth_neighbor_distance, neighbor_counts

__all__ = [
    "EstimatorConfig",
    "mutual_information",
    "conditional_mutual_information",
    "add_jitter",
]


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings shared by the MI and CMI estimators.

    Attributes
    ----------
    k_nn : int
        Number of neighbors in the joint space.
    tie_jitter_scale : float
        Standard deviation of the tie-breaking noise added by
        :func:`add_jitter`. The estimators themselves never perturb input.
    backend : str
        Neighbor-search backend, see :mod:`pmime.neighbors`.
    """

    k_nn: int = 5
    tie_jitter_scale: float = 1e-10
    backend: str = "sweep"

    def __post_init__(self):
        if self.k_nn < 1:
            raise ValueError(f"k_nn must be >= 1, got {self.k_nn}")
        if self.tie_jitter_scale < 0:
            raise ValueError("tie_jitter_scale must be nonnegative")
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}; choose from {BACKENDS}")


DEFAULT_CONFIG = EstimatorConfig()


def add_jitter(data, scale: float, seed) -> np.ndarray:
    """Return ``data`` plus seeded Gaussian noise of standard deviation ``scale``."""
    data = np.asarray(data, dtype=np.float64)
    if scale == 0:
        return data.copy()
    rng = np.random.default_rng(seed)
    return data + scale * rng.standard_normal(data.shape)


def _block(a, name):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    if a.ndim != 2:
        raise ValueError(f"{name} must be 1-D or 2-D, got ndim={a.ndim}")
    return a


def _check_rows(cfg, *blocks):
    n = blocks[0].shape[0]
    for b in blocks[1:]:
        if b.shape[0] != n:
            raise ValueError(f"blocks have different row counts: {[x.shape[0] for x in blocks]}")
    if n <= cfg.k_nn:
        raise TooFewSamples(f"need more than k_nn={cfg.k_nn} samples, got {n}")
    return n


def _psi_mean(*counts_and_signs):
    total = None
    for counts, sign in counts_and_signs:
        term = digamma(counts + 1.0)
        if sign < 0:
            term = -term
        total = term if total is None else total + term
    return float(np.mean(total))


def mutual_information(x, y, cfg: EstimatorConfig = DEFAULT_CONFIG) -> float:
    """KSG estimate of I(x; y) in nats.

    ``x`` and ``y`` are sample blocks of shape ``(n,)`` or ``(n, d)``.
    Swapping the arguments gives a bit-identical result.
    """
    x = _block(x, "x")
    y = _block(y, "y")
    n = _check_rows(cfg, x, y)
    joint = np.hstack([x, y])
    eps = kth_neighbor_distance(joint, cfg.k_nn, cfg.backend)
    nx = neighbor_counts(x, eps, cfg.backend)
    ny = neighbor_counts(y, eps, cfg.backend)
    return float(digamma(cfg.k_nn) + digamma(n)) - _psi_mean((nx, 1), (ny, 1))


def conditional_mutual_information(x, y, z=None, cfg: EstimatorConfig = DEFAULT_CONFIG) -> float:
    """KSG estimate of I(x; y | z) in nats.

    An empty or missing ``z`` reduces to :func:`mutual_information` exactly.
    """
    if z is None:
        return mutual_information(x, y, cfg)
    z = _block(z, "z")
    if z.shape[1] == 0:
        return mutual_information(x, y, cfg)
    x = _block(x, "x")
    y = _block(y, "y")
    _check_rows(cfg, x, y, z)
    joint = np.hstack([x, y, z])
    eps = kth_neighbor_distance(joint, cfg.k_nn, cfg.backend)
    nxz = neighbor_counts(np.hstack([x, z]), eps, cfg.backend)
    nyz = neighbor_counts(np.hstack([y, z]), eps, cfg.backend)
    nz = neighbor_counts(z, eps, cfg.backend)
    return float(digamma(cfg.k_nn)) - _psi_mean((nxz, 1), (nyz, 1), (nz, -1))
