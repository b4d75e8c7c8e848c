"""Mixed (non-uniform) embedding and the causality index R.

For a target variable ``y`` the engine selects, from all lagged variables
``(var, lag)`` with ``1 <= lag <= L``, the components that best explain the
next value of ``y``. Three variants are supported:

``PMIME``
    greedy forward selection by full conditional mutual information.
``M_PMIME``
    exhaustive subset traversal for iterations ``1 < k <= m``, then the
    PMIME greedy step.
``LM_PMIME``
    exhaustive traversal for ``1 < k <= m``, then greedy steps scored by a
    low-dimensional approximation of the conditional mutual information.

Growth stops when ``I(y; v^{k-1}) / I(y; v^k) > A``. The strength of
``X -> Y`` is ``I(y; v^x | v^rest) / I(y; v)``, and zero whenever no lag of
``X`` was embedded.
"""

from __future__ import annotations

import itertools
import logging
import math
import zlib
from dataclasses import asdict, dataclass
from enum import Enum

import numpy as np

from .exceptions import CombinationBudgetExceeded, ConfigError
from .knn import EstimatorConfig, conditional_mutual_information, mutual_information
from .series import (
    LaggedVariable,
    MultivariateSeries,
    align,
    build_candidate_set,
    standardize,
)

__all__ = [
    "Variant",
    "MethodConfig",
    "StepRecord",
    "EmbeddingVector",
    "CausalityResult",
    "EmbeddingProblem",
    "prepare_series",
    "select_first",
    "greedy_step_cmi",
    "lowdim_score",
    "traversal_step",
    "stopping_ratio",
    "stopping_check",
    "build_embedding",
    "causality_index",
    "causality_matrix",
]

logger = logging.getLogger(__name__)


class Variant(str, Enum):
    PMIME = "pmime"
    M_PMIME = "m-pmime"
    LM_PMIME = "lm-pmime"

    @classmethod
    def parse(cls, value) -> "Variant":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower().replace("_", "-")
        for v in cls:
            if key in (v.value, v.name.lower().replace("_", "-")):
                return v
        raise ConfigError(f"unknown method {value!r}; choose from {[v.value for v in cls]}")

    @property
    def label(self) -> str:
        return self.value.upper()


STOP_RULES = ("chain", "joint")


@dataclass(frozen=True)
class MethodConfig:
    """Method variant and every tunable of the embedding search.

    ``coeffs`` overrides the adaptive ``(beta, gamma, delta)`` weights of the
    low-dimensional criterion with constants; ``None`` keeps the adaptive
    ``1/|v|`` and ``1/(|v|(|v|-1))`` weights.
    """

    variant: Variant = Variant.LM_PMIME
    L: int = 5
    A: float = 0.95
    m: int = 2
    k_nn: int = 5
    coeffs: tuple | None = None
    horizon: int = 1
    tie_jitter_scale: float = 1e-10
    seed: int = 0
    backend: str = "sweep"
    max_iter: int = 20
    combination_budget: int = 10**6
    stop_rule: str = "chain"

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if self.stop_rule not in STOP_RULES:
            raise ConfigError(f"unknown stop_rule {self.stop_rule!r}; choose from {STOP_RULES}")
        if self.L < 1:
            raise ConfigError(f"L must be >= 1, got {self.L}")
        if not 0.0 < self.A < 1.0:
            raise ConfigError(f"A must lie in (0, 1), got {self.A}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.max_iter < 1:
            raise ConfigError(f"max_iter must be >= 1, got {self.max_iter}")
        if self.coeffs is not None:
            coeffs = tuple(float(c) for c in self.coeffs)
            if len(coeffs) != 3:
                raise ConfigError(f"coeffs must be (beta, gamma, delta), got {self.coeffs}")
            object.__setattr__(self, "coeffs", coeffs)
        try:
            self.estimator_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def estimator_config(self) -> EstimatorConfig:
        return EstimatorConfig(k_nn=self.k_nn, tie_jitter_scale=self.tie_jitter_scale, backend=self.backend)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["variant"] = self.variant.value
        d["coeffs"] = None if self.coeffs is None else list(self.coeffs)
        return d


@dataclass(frozen=True)
class StepRecord:
    """One proposed augmentation of the embedding.

    ``mi`` is the raw ``I(y; v^k)`` of the proposed vector and ``prev_mi``
    the ``I(y; v^{k-1})`` it is compared with. For greedy steps ``prev_mi``
    is ``mi - I(y; w | v^{k-1})``: both terms share one neighbor radius, so
    the ratio is not distorted by the dimension-dependent estimator bias.
    ``ratio`` is the clipped stopping ratio and ``stop`` whether the proposal
    was rejected and the search ended.
    """

    iteration: int
    strategy: str
    members: tuple
    criterion: float
    mi: float
    prev_mi: float
    ratio: float
    stop: bool


@dataclass(frozen=True)
class EmbeddingVector:
    target: int
    members: tuple
    log: tuple = ()
    terminated_by: str = "threshold"

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def variables(self) -> set:
        return {lv.var for lv in self.members}

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "members": [[lv.var, lv.lag] for lv in self.members],
            "terminated_by": self.terminated_by,
            "log": [
                {
                    "iteration": s.iteration,
                    "strategy": s.strategy,
                    "members": [[lv.var, lv.lag] for lv in s.members],
                    "criterion": s.criterion,
                    "mi": s.mi,
                    "prev_mi": s.prev_mi,
                    "ratio": s.ratio if math.isfinite(s.ratio) else "inf",
                    "stop": s.stop,
                }
                for s in self.log
            ],
        }


@dataclass(frozen=True)
class CausalityResult:
    """``R[i, j]`` is the strength of driver ``i`` on target ``j``."""

    R: np.ndarray
    embeddings: tuple
    labels: tuple = ()

    @property
    def adjacency(self) -> np.ndarray:
        return self.R > 0


def _column_jitter(column, scale, seed):
    # seeded by content so relabeling variables permutes the noise with them
    digest = zlib.crc32(np.ascontiguousarray(column).tobytes())
    rng = np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, digest])
    return column + scale * rng.standard_normal(column.shape[0])


def prepare_series(series: MultivariateSeries, cfg: MethodConfig) -> MultivariateSeries:
    """Standardize once and add the tie-breaking jitter."""
    z = standardize(series)
    if cfg.tie_jitter_scale == 0:
        return z
    data = np.column_stack([_column_jitter(z.data[:, j], cfg.tie_jitter_scale, cfg.seed) for j in range(z.K)])
    return MultivariateSeries(data, z.labels)


class EmbeddingProblem:
    """Aligned lag matrix for one target plus memoized information terms.

    ``prepared`` must already be standardized (see :func:`prepare_series`).
    Cached terms depend only on the data, ``L``, ``horizon`` and the
    estimator settings, so one problem can serve several method variants.
    """

    def __init__(self, prepared: MultivariateSeries, target_index: int, cfg: MethodConfig):
        self.cfg = cfg
        self.target_index = target_index
        self.K = prepared.K
        self.candidates = tuple(build_candidate_set(prepared.K, cfg.L))
        aligned = align(prepared, target_index, self.candidates, cfg.horizon)
        self.y = np.ascontiguousarray(aligned.target)
        self.X = np.ascontiguousarray(aligned.matrix)
        self.est = cfg.estimator_config()
        if self.y.shape[0] <= self.est.k_nn:
            raise ConfigError(
                f"only {self.y.shape[0]} aligned samples for k_nn={self.est.k_nn}; series too short"
            )
        self._mi_y = {}
        self._cmi_target = {}
        self._mi_pair = {}
        self._cmi_y = {}
        self._cmi_pair = {}
        self.evaluations = 0

    @property
    def n_candidates(self) -> int:
        return len(self.candidates)

    def cols(self, idx) -> np.ndarray:
        return self.X[:, list(idx)]

    def mi_target(self, idx) -> float:
        """I(y; candidates ``idx``); exact under reordering of ``idx``."""
        key = tuple(sorted(idx))
        if key not in self._mi_y:
            self.evaluations += 1
            self._mi_y[key] = mutual_information(self.y, self.cols(key), self.est)
        return self._mi_y[key]

    def cmi_target(self, w, embedded) -> float:
        """I(y; w | embedded); ``w`` is one candidate index or several."""
        x = (w,) if isinstance(w, (int, np.integer)) else tuple(sorted(w))
        if not embedded:
            return self.mi_target(x)
        key = (x, tuple(sorted(embedded)))
        if key not in self._cmi_target:
            self.evaluations += 1
            self._cmi_target[key] = conditional_mutual_information(
                self.y, self.cols(x), self.cols(key[1]), self.est
            )
        return self._cmi_target[key]

    def mi_change(self, old, new) -> float:
        """``I(y; new) - I(y; old)`` through the chain rule on ``old | new``.

        Both conditional terms live in the joint space of ``y``, ``old`` and
        ``new``, so they share neighbor radii and their biases largely cancel.
        """
        old, new = set(old), set(new)
        gained = sorted(new - old)
        lost = sorted(old - new)
        change = self.cmi_target(gained, sorted(old)) if gained else 0.0
        if lost:
            change -= self.cmi_target(lost, sorted(new))
        return change

    def mi_pair(self, a: int, b: int) -> float:
        key = (min(a, b), max(a, b))
        if key not in self._mi_pair:
            self.evaluations += 1
            self._mi_pair[key] = mutual_information(self.X[:, key[0]], self.X[:, key[1]], self.est)
        return self._mi_pair[key]

    def cmi_pair_given_target(self, a: int, b: int) -> float:
        """I(w_a; w_b | y)."""
        key = (min(a, b), max(a, b))
        if key not in self._cmi_y:
            self.evaluations += 1
            self._cmi_y[key] = conditional_mutual_information(
                self.X[:, key[0]], self.X[:, key[1]], self.y, self.est
            )
        return self._cmi_y[key]

    def cmi_pair_given(self, a: int, b: int, c: int) -> float:
        """I(w_a; w_b | w_c)."""
        key = (min(a, b), max(a, b), c)
        if key not in self._cmi_pair:
            self.evaluations += 1
            self._cmi_pair[key] = conditional_mutual_information(
                self.X[:, key[0]], self.X[:, key[1]], self.X[:, c], self.est
            )
        return self._cmi_pair[key]


def _argmax_first(scores):
    best, best_i = -math.inf, None
    for i, s in enumerate(scores):
        if best_i is None or s > best:
            best, best_i = s, i
    return best_i, best


def select_first(problem: EmbeddingProblem, candidates=None):
    """Candidate index maximizing I(y; w); the earliest candidate wins ties.

    Returns ``(index, score)``.
    """
    candidates = list(range(problem.n_candidates)) if candidates is None else list(candidates)
    if not candidates:
        raise ValueError("candidate set is empty")
    i, score = _argmax_first([problem.mi_target((c,)) for c in candidates])
    return candidates[i], score


def greedy_step_cmi(problem: EmbeddingProblem, remaining, embedded):
    """Remaining candidate maximizing I(y; w | embedded). Returns ``(index, score)``."""
    remaining = list(remaining)
    if not remaining:
        raise ValueError("no remaining candidates")
    if not embedded:
        raise ValueError("greedy step needs a nonempty embedding")
    if len(remaining) == 1:
        return remaining[0], problem.cmi_target(remaining[0], list(embedded))
    i, score = _argmax_first([problem.cmi_target(w, list(embedded)) for w in remaining])
    return remaining[i], score


def lowdim_coefficients(size: int, coeffs=None):
    """``(beta, gamma, delta)`` for an embedding of ``size`` members."""
    if coeffs is not None:
        return coeffs
    beta = gamma = 1.0 / size if size > 0 else 0.0
    delta = 1.0 / (size * (size - 1)) if size > 1 else 0.0
    return beta, gamma, delta


def lowdim_score(problem: EmbeddingProblem, w: int, embedded, coeffs=None) -> float:
    """Low-dimensional surrogate of I(y; w | embedded).

    ``I(w;y) - beta * sum_i I(w;w_i) + gamma * sum_i I(w;w_i|y)
    - delta * sum_{i != j} I(w;w_j|w_i)``; no term involves more than three
    scalar columns.
    """
    embedded = list(embedded)
    score = problem.mi_target((w,))
    if not embedded:
        return score
    beta, gamma, delta = lowdim_coefficients(len(embedded), coeffs)
    redundancy = sum(problem.mi_pair(w, wi) for wi in embedded)
    conditional = sum(problem.cmi_pair_given_target(w, wi) for wi in embedded)
    score += -beta * redundancy + gamma * conditional
    if len(embedded) > 1:
        pairs = sum(
            problem.cmi_pair_given(w, wj, wi)
            for wi in embedded
            for wj in embedded
            if wi != wj
        )
        score -= delta * pairs
    return score


def traversal_step(problem: EmbeddingProblem, k: int):
    """Best ``k``-subset of all candidates by I(y; subset).

    Subsets are enumerated lexicographically and the first maximum wins.
    Returns ``(subset, score)``.
    """
    n = problem.n_candidates
    if not 1 <= k <= n:
        raise ValueError(f"subset size {k} outside [1, {n}]")
    total = math.comb(n, k)
    if total > problem.cfg.combination_budget:
        raise CombinationBudgetExceeded(total, problem.cfg.combination_budget)
    best, best_subset = -math.inf, None
    for subset in itertools.combinations(range(n), k):
        s = problem.mi_target(subset)
        if best_subset is None or s > best:
            best, best_subset = s, subset
    return best_subset, best


def stopping_ratio(I_prev: float, I_curr: float) -> float:
    """``max(I_prev, 0) / max(I_curr, 0)``; infinite when nothing is explained."""
    prev, curr = max(I_prev, 0.0), max(I_curr, 0.0)
    if curr <= 0.0:
        return math.inf
    return prev / curr


def stopping_check(I_prev: float, I_curr: float, A: float) -> bool:
    """True when the augmentation adds too little and the search should stop."""
    return stopping_ratio(I_prev, I_curr) > A


def _uses_traversal(cfg: MethodConfig, k: int) -> bool:
    return cfg.variant is not Variant.PMIME and 1 < k <= cfg.m


def _search(problem: EmbeddingProblem) -> EmbeddingVector:
    cfg = problem.cfg
    cands = problem.candidates
    log = []

    def record(k, strategy, idx, criterion, mi, prev_mi, stop):
        members = tuple(cands[i] for i in idx)
        ratio = stopping_ratio(prev_mi, mi)
        log.append(StepRecord(k, strategy, members, float(criterion), float(mi), float(prev_mi), ratio, stop))

    def result(idx, how):
        return EmbeddingVector(problem.target_index, tuple(cands[i] for i in idx), tuple(log), how)

    first, first_mi = select_first(problem)
    stop = stopping_check(0.0, first_mi, cfg.A)
    record(1, "first", [first], first_mi, first_mi, 0.0, stop)
    if stop:
        return result([], "threshold")

    v = [first]
    I_prev = first_mi
    max_k = min(cfg.max_iter, problem.n_candidates)
    for k in range(2, max_k + 1):
        if _uses_traversal(cfg, k):
            subset, I_curr = traversal_step(problem, k)
            new_v, criterion, strategy = list(subset), I_curr, "traversal"
            prev = I_prev if cfg.stop_rule == "joint" else I_curr - problem.mi_change(v, new_v)
        else:
            remaining = [c for c in range(problem.n_candidates) if c not in v]
            if cfg.variant is Variant.LM_PMIME:
                scores = [lowdim_score(problem, w, v, cfg.coeffs) for w in remaining]
                i, criterion = _argmax_first(scores)
                w, strategy = remaining[i], "greedy-lowdim"
            else:
                w, criterion = greedy_step_cmi(problem, remaining, v)
                strategy = "greedy-cmi"
            new_v = v + [w]
            I_curr = problem.mi_target(new_v)
            prev = I_prev if cfg.stop_rule == "joint" else I_curr - problem.mi_change(v, new_v)
        stop = stopping_check(prev, I_curr, cfg.A)
        record(k, strategy, new_v, criterion, I_curr, prev, stop)
        if stop:
            return result(v, "threshold")
        v, I_prev = new_v, I_curr

    if max_k == cfg.max_iter and max_k < problem.n_candidates:
        logger.warning("target %d: embedding hit the %d-iteration cap", problem.target_index, cfg.max_iter)
        return result(v, "max_iter")
    return result(v, "exhausted")


def build_embedding(target_index: int, series: MultivariateSeries, cfg: MethodConfig, prepared: bool = False):
    """Mixed embedding vector explaining the next value of ``target_index``.

    Pass ``prepared=True`` when ``series`` already went through
    :func:`prepare_series`.
    """
    if not prepared:
        series = prepare_series(series, cfg)
    return _search(EmbeddingProblem(series, target_index, cfg))


def causality_index(problem: EmbeddingProblem, embedding: EmbeddingVector, driver_index: int) -> float:
    """``I(y; v^x | v^rest) / I(y; v)`` clipped at zero; 0 if the driver is absent."""
    members = list(embedding.members)
    if not any(lv.var == driver_index for lv in members):
        return 0.0
    pos = {lv: i for i, lv in enumerate(problem.candidates)}
    idx = [pos[lv] for lv in members]
    total = problem.mi_target(idx)
    if total <= 0.0:
        return 0.0
    x_idx = [pos[lv] for lv in members if lv.var == driver_index]
    rest = [pos[lv] for lv in members if lv.var != driver_index]
    if rest:
        part = conditional_mutual_information(problem.y, problem.cols(x_idx), problem.cols(rest), problem.est)
    else:
        part = total
    return max(part, 0.0) / total


def _target_column(prepared, target, cfg, problems):
    if problems is not None and target in problems:
        problem = problems[target]
    else:
        problem = EmbeddingProblem(prepared, target, cfg)
        if problems is not None:
            problems[target] = problem
    # a shared problem may have been built for another variant
    problem.cfg = cfg
    emb = _search(problem)
    col = np.zeros(prepared.K)
    for i in range(prepared.K):
        if i != target:
            col[i] = causality_index(problem, emb, i)
    return col, emb


def causality_matrix(series: MultivariateSeries, cfg: MethodConfig, n_jobs=None, problems=None) -> CausalityResult:
    """Causality strengths for every ordered pair; rows drive columns.

    ``problems`` is an optional dict (target index -> :class:`EmbeddingProblem`)
    reused across calls on the same series so that cached information terms
    are shared, e.g. between method variants with equal ``L`` and ``k_nn``.
    """
    prepared = prepare_series(series, cfg)
    targets = range(prepared.K)
    if n_jobs in (None, 1) or problems is not None:
        out = [_target_column(prepared, j, cfg, problems) for j in targets]
    else:
        from joblib import Parallel, delayed

        out = Parallel(n_jobs=n_jobs)(delayed(_target_column)(prepared, j, cfg, None) for j in targets)
    R = np.column_stack([col for col, _ in out])
    np.fill_diagonal(R, 0.0)
    return CausalityResult(R=R, embeddings=tuple(e for _, e in out), labels=series.labels)


def problem_key(cfg: MethodConfig) -> tuple:
    """Settings that determine the cached contents of an :class:`EmbeddingProblem`."""
    return (cfg.L, cfg.horizon, cfg.k_nn, cfg.tie_jitter_scale, cfg.seed, cfg.backend)
