"""Seeded benchmark systems with known directed coupling graphs.

Four generators are provided:

* ``VAR5``   linear VAR(4) process in five variables,
* ``NLVAR3`` nonlinear VAR(1) process in three variables,
* ``HENON``  a chain of ``K`` coupled Henon maps,
* ``LORENZ3`` three coupled Lorenz oscillators, observed through their
  x-components and integrated with an adaptive Dormand-Prince RK4(5) pair.

Ground truth adjacency is indexed ``[driver, target]`` (0-based).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np
from scipy.integrate import solve_ivp

from .exceptions import DivergedAfterRetries, IntegrationFailure
from .series import MultivariateSeries

__all__ = [
    "SystemKind",
    "SystemSpec",
    "GroundTruth",
    "gen_var5",
    "gen_nlvar3",
    "gen_henon",
    "gen_lorenz3",
    "generate",
    "realization_seed",
    "simulate_var5",
    "simulate_nlvar3",
    "henon_iterate",
    "lorenz3_rhs",
    "var5_companion",
    "LORENZ_DT",
]

logger = logging.getLogger(__name__)

LORENZ_DT = 0.05
DEFAULT_BURN_IN = {"VAR5": 1000, "NLVAR3": 1000, "HENON": 1000, "LORENZ3": 2000}
HENON_MAX_RETRIES = 20
HENON_DIVERGENCE = 1e5


class SystemKind(str, Enum):
    VAR5 = "VAR5"
    NLVAR3 = "NLVAR3"
    HENON = "HENON"
    LORENZ3 = "LORENZ3"


@dataclass(frozen=True)
class SystemSpec:
    """Everything needed to regenerate one realization bit-for-bit.

    ``burn_in`` counts discarded samples; for ``LORENZ3`` one sample is
    ``LORENZ_DT`` time units, so the default 2000 is 100 time units.
    """

    kind: SystemKind
    n: int
    K: int | None = None
    C: float | None = None
    seed: int = 0
    burn_in: int | None = None

    def __post_init__(self):
        kind = SystemKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if self.n < 64:
            raise ValueError(f"n must be >= 64, got {self.n}")
        K = {SystemKind.VAR5: 5, SystemKind.NLVAR3: 3, SystemKind.LORENZ3: 3}.get(kind, self.K)
        if self.K is not None and K != self.K:
            raise ValueError(f"{kind.value} has K={K}, got K={self.K}")
        if kind is SystemKind.HENON:
            if K is None or K < 2:
                raise ValueError(f"HENON needs K >= 2, got {K}")
            C = 0.0 if self.C is None else float(self.C)
            if not 0.0 <= C <= 1.0:
                raise ValueError(f"HENON coupling must lie in [0, 1], got {C}")
        elif kind is SystemKind.LORENZ3:
            C = 0.0 if self.C is None else float(self.C)
            if C < 0:
                raise ValueError(f"LORENZ3 coupling must be >= 0, got {C}")
        else:
            C = None
        object.__setattr__(self, "K", K)
        object.__setattr__(self, "C", C)
        if self.burn_in is None:
            object.__setattr__(self, "burn_in", DEFAULT_BURN_IN[kind.value])
        elif self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")

    def for_realization(self, r: int) -> "SystemSpec":
        return replace(self, seed=realization_seed(self.seed, r))

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "n": self.n, "K": self.K, "C": self.C,
                "seed": self.seed, "burn_in": self.burn_in}


@dataclass(frozen=True)
class GroundTruth:
    adjacency: np.ndarray

    @classmethod
    def from_edges(cls, K, edges):
        """Build from 1-based ``(driver, target)`` pairs."""
        adj = np.zeros((K, K), dtype=bool)
        for i, j in edges:
            adj[i - 1, j - 1] = True
        adj.setflags(write=False)
        return cls(adj)

    @classmethod
    def chain(cls, K):
        return cls.from_edges(K, [(i - 1, i) for i in range(2, K + 1)])

    @property
    def K(self) -> int:
        return self.adjacency.shape[0]

    @property
    def edges(self) -> list:
        """Sorted 1-based ``(driver, target)`` pairs."""
        return [(int(i) + 1, int(j) + 1) for i, j in zip(*np.nonzero(self.adjacency))]

    def permute(self, order):
        adj = self.adjacency[np.ix_(order, order)].copy()
        adj.setflags(write=False)
        return GroundTruth(adj)


def realization_seed(seed: int, r: int) -> int:
    """Seed of realization ``r`` in a batch with master ``seed``."""
    return int(seed) ^ int(r)


def _rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


# -- VAR5 -------------------------------------------------------------------

# _VAR5[lag - 1][target, source]
_VAR5 = np.zeros((4, 5, 5))
for _target, _terms in {
    0: [(0, 1, 0.4), (0, 2, -0.5), (4, 1, 0.4)],
    1: [(1, 1, 0.4), (0, 4, -0.3), (4, 2, 0.4)],
    2: [(2, 1, 0.5), (2, 2, -0.7), (4, 3, -0.3)],
    3: [(3, 3, 0.8), (0, 2, 0.4), (1, 2, 0.3)],
    4: [(4, 1, 0.7), (4, 2, -0.5), (3, 1, -0.4)],
}.items():
    for _source, _lag, _coef in _terms:
        _VAR5[_lag - 1, _target, _source] = _coef
_VAR5.setflags(write=False)

VAR5_TRUTH = [(1, 2), (1, 4), (2, 4), (4, 5), (5, 1), (5, 2), (5, 3)]
NLVAR3_TRUTH = [(1, 2), (1, 3), (2, 3)]


def var5_coefficients() -> np.ndarray:
    """Lag matrices, shape ``(4, 5, 5)``; ``[lag - 1, target, source]``."""
    return _VAR5


def var5_companion() -> np.ndarray:
    """20 x 20 companion matrix of the VAR5 process."""
    p, K = _VAR5.shape[:2]
    comp = np.zeros((p * K, p * K))
    comp[:K, :] = np.hstack(list(_VAR5))
    comp[K:, :-K] = np.eye((p - 1) * K)
    return comp


def simulate_var5(noise: np.ndarray) -> np.ndarray:
    """Iterate the VAR5 recursion from zero history, one row of noise per step."""
    steps = noise.shape[0]
    x = np.zeros((steps + 4, 5))
    for t in range(steps):
        x[t + 4] = sum(_VAR5[lag] @ x[t + 3 - lag] for lag in range(4)) + noise[t]
    return x[4:]


def gen_var5(n: int, seed: int, burn_in: int | None = None):
    spec = SystemSpec(SystemKind.VAR5, n, seed=seed, burn_in=burn_in)
    return generate(spec)


# -- NLVAR3 -----------------------------------------------------------------

def _bump(x):
    return 3.4 * x * (1.0 - x * x) * np.exp(-x * x)


def simulate_nlvar3(x0, noise: np.ndarray) -> np.ndarray:
    """Iterate the NLVAR3 recursion from state ``x0``; ``noise`` is unscaled."""
    x = np.empty((noise.shape[0] + 1, 3))
    x[0] = x0
    for t in range(noise.shape[0]):
        x1, x2, x3 = x[t]
        e = 0.4 * noise[t]
        x[t + 1, 0] = _bump(x1) + e[0]
        x[t + 1, 1] = _bump(x2) + 0.5 * x1 * x2 + e[1]
        x[t + 1, 2] = _bump(x3) + 0.3 * x2 + 0.5 * x1 * x1 + e[2]
    return x[1:]


def gen_nlvar3(n: int, seed: int, burn_in: int | None = None):
    return generate(SystemSpec(SystemKind.NLVAR3, n, seed=seed, burn_in=burn_in))


# -- coupled Henon maps -----------------------------------------------------

def henon_iterate(x_prev2: np.ndarray, x_prev1: np.ndarray, C: float, steps: int) -> np.ndarray:
    """Iterate a chain of Henon maps; returns ``(steps, K)``.

    The first map is autonomous; map ``i`` is driven by map ``i - 1``
    through the convex combination inside the square.
    """
    a = np.array(x_prev2, dtype=np.float64)
    b = np.array(x_prev1, dtype=np.float64)
    out = np.empty((steps, a.shape[0]))
    for t in range(steps):
        drive = b.copy()
        drive[1:] = C * b[:-1] + (1.0 - C) * b[1:]
        new = 1.4 - drive * drive + 0.3 * a
        out[t] = new
        a, b = b, new
        if not np.all(np.abs(new) < HENON_DIVERGENCE):
            return out[: t + 1]
    return out


def gen_henon(K: int, C: float, n: int, seed: int, burn_in: int | None = None):
    return generate(SystemSpec(SystemKind.HENON, n, K=K, C=C, seed=seed, burn_in=burn_in))


# -- coupled Lorenz oscillators --------------------------------------------

def lorenz3_rhs(t, s, C):
    """Vector field of three coupled Lorenz oscillators, state ``(x_i, y_i, z_i)``."""
    x1, y1, z1, x2, y2, z2, x3, y3, z3 = s
    return [
        -10.0 * x1 + 10.0 * y1,
        -x1 * z1 + 28.0 * x1 - y1,
        x1 * y1 - 8.0 / 3.0 * z1,
        -10.0 * x2 + 10.0 * y2 + C * (x1 - x2),
        -x2 * z2 + 28.0 * x2 - y2,
        x2 * y2 - 8.0 / 3.0 * z2,
        -10.0 * x3 + 10.0 * y3 + C * (x2 - x3),
        -x3 * z3 + 28.0 * x3 - y3,
        x3 * y3 - 8.0 / 3.0 * z3,
    ]


def integrate_lorenz3(state0, C, n, burn_in, rtol=1e-6, atol=1e-9):
    """Sample the x-components every ``LORENZ_DT`` after ``burn_in`` samples."""
    t_eval = (burn_in + np.arange(n)) * LORENZ_DT
    sol = solve_ivp(
        lorenz3_rhs, (0.0, t_eval[-1]), state0, method="RK45",
        t_eval=t_eval, args=(C,), rtol=rtol, atol=atol,
    )
    if sol.status != 0:
        raise IntegrationFailure(sol.message)
    return sol.y[[0, 3, 6]].T


def gen_lorenz3(C: float, n: int, seed: int, burn_in: int | None = None, rtol=1e-6, atol=1e-9):
    spec = SystemSpec(SystemKind.LORENZ3, n, C=C, seed=seed, burn_in=burn_in)
    return generate(spec, rtol=rtol, atol=atol)


# -- dispatch ---------------------------------------------------------------

def generate(spec: SystemSpec, rtol: float = 1e-6, atol: float = 1e-9):
    """Generate ``(MultivariateSeries, GroundTruth)`` for ``spec``."""
    rng = _rng(spec.seed)
    n, burn = spec.n, spec.burn_in
    kind = spec.kind
    if kind is SystemKind.VAR5:
        data = simulate_var5(rng.standard_normal((burn + n, 5)))[burn:]
        truth = GroundTruth.from_edges(5, VAR5_TRUTH)
    elif kind is SystemKind.NLVAR3:
        data = simulate_nlvar3(np.zeros(3), rng.standard_normal((burn + n, 3)))[burn:]
        truth = GroundTruth.from_edges(3, NLVAR3_TRUTH)
    elif kind is SystemKind.HENON:
        for attempt in range(HENON_MAX_RETRIES):
            x0 = rng.uniform(-0.1, 0.1, size=(2, spec.K))
            data = henon_iterate(x0[0], x0[1], spec.C, burn + n)
            if data.shape[0] == burn + n:
                break
            logger.info("Henon realization seed=%d diverged, redrawing (attempt %d)", spec.seed, attempt + 1)
        else:
            raise DivergedAfterRetries(
                f"coupled Henon maps (K={spec.K}, C={spec.C}) diverged {HENON_MAX_RETRIES} times"
            )
        data = data[burn:]
        truth = GroundTruth.chain(spec.K)
    elif kind is SystemKind.LORENZ3:
        state0 = rng.uniform(-10.0, 10.0, size=9)
        data = integrate_lorenz3(state0, spec.C, n, burn, rtol=rtol, atol=atol)
        truth = GroundTruth.chain(3)
    else:  # pragma: no cover
        raise ValueError(f"unknown system {kind}")
    return MultivariateSeries(data), truth
