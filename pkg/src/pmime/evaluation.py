"""Detection metrics and Monte-Carlo batches over the benchmark systems."""

from __future__ import annotations

import csv
import json
import logging
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .embedding import MethodConfig, causality_matrix, problem_key
from .exceptions import DivergedAfterRetries, ShapeMismatch
from .simulators import GroundTruth, SystemSpec, generate

__all__ = [
    "ConfusionCounts",
    "BatchSummary",
    "score_matrix",
    "metrics",
    "run_batch",
    "run_batches",
    "summaries_to_csv",
]

logger = logging.getLogger(__name__)

REGENERATION_ATTEMPTS = 5


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def __add__(self, other):
        return ConfusionCounts(self.tp + other.tp, self.fp + other.fp, self.tn + other.tn, self.fn + other.fn)

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "tn": self.tn, "fn": self.fn}


def score_matrix(R, truth) -> ConfusionCounts:
    """Tally off-diagonal pairs; ``R[i, j] > 0`` predicts the edge ``i -> j``."""
    R = np.asarray(R)
    adj = truth.adjacency if isinstance(truth, GroundTruth) else np.asarray(truth, dtype=bool)
    if R.ndim != 2 or R.shape != adj.shape or R.shape[0] != R.shape[1]:
        raise ShapeMismatch(f"R has shape {R.shape}, ground truth {adj.shape}")
    off = ~np.eye(R.shape[0], dtype=bool)
    pred = (R > 0) & off
    true = adj & off
    return ConfusionCounts(
        tp=int((pred & true).sum()),
        fp=int((pred & ~true & off).sum()),
        tn=int((~pred & ~true & off).sum()),
        fn=int((~pred & true).sum()),
    )


def _ratio(num, den):
    # 0/0 is reported as 0 rather than NaN
    return num / den if den else 0.0


def metrics(c: ConfusionCounts):
    """``(sensitivity, specificity, f1)``; a zero denominator yields 0."""
    return (
        _ratio(c.tp, c.tp + c.fn),
        _ratio(c.tn, c.tn + c.fp),
        _ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn),
    )


@dataclass(frozen=True)
class BatchSummary:
    """Pooled result of one method on one system over several realizations.

    Metrics are computed from the pooled confusion counts; per-realization
    counts are kept in ``confusions``.
    """

    system: SystemSpec
    method: MethodConfig
    mean_R: np.ndarray
    confusions: tuple
    seeds: tuple = ()
    labels: tuple = ()
    realization_R: tuple = field(default=(), repr=False)

    @property
    def pooled(self) -> ConfusionCounts:
        total = ConfusionCounts()
        for c in self.confusions:
            total = total + c
        return total

    @property
    def sensitivity(self) -> float:
        return metrics(self.pooled)[0]

    @property
    def specificity(self) -> float:
        return metrics(self.pooled)[1]

    @property
    def f1(self) -> float:
        return metrics(self.pooled)[2]

    @property
    def n_realizations(self) -> int:
        return len(self.confusions)

    def to_dict(self) -> dict:
        sens, spec, f1 = metrics(self.pooled)
        return {
            "system": self.system.to_dict(),
            "method": self.method.to_dict(),
            "n_realizations": self.n_realizations,
            "labels": list(self.labels),
            "mean_R": self.mean_R.tolist(),
            "metrics": {"sensitivity": sens, "specificity": spec, "f1": f1},
            "counts": self.pooled.to_dict(),
            "realizations": [
                {
                    "index": r,
                    "seed": self.seeds[r] if self.seeds else None,
                    "counts": c.to_dict(),
                    "metrics": dict(zip(("sensitivity", "specificity", "f1"), metrics(c))),
                }
                for r, c in enumerate(self.confusions)
            ],
        }

    def to_json(self, header: dict | None = None) -> str:
        payload = {"config": header or {}, **self.to_dict()}
        return json.dumps(payload, indent=2, sort_keys=False)


def _generate(spec: SystemSpec, r: int):
    realization = spec.for_realization(r)
    for attempt in range(REGENERATION_ATTEMPTS):
        try:
            series, truth = generate(realization)
            return realization, series, truth
        except DivergedAfterRetries:
            logger.warning("realization %d (seed %d) diverged; regenerating", r, realization.seed)
            realization = replace(realization, seed=realization.seed + (attempt + 1) * (1 << 32))
    raise DivergedAfterRetries(f"realization {r} diverged after {REGENERATION_ATTEMPTS} regenerations")


def _one_realization(spec: SystemSpec, cfgs, r: int):
    realization, series, truth = _generate(spec, r)
    shared = {}
    out = []
    for cfg in cfgs:
        # per-realization jitter seed keeps realizations independent
        run_cfg = replace(cfg, seed=realization.seed)
        problems = shared.setdefault(problem_key(run_cfg), {})
        res = causality_matrix(series, run_cfg, problems=problems)
        out.append((res.R, score_matrix(res.R, truth)))
    return realization.seed, series.labels, out


def run_batches(spec: SystemSpec, cfgs, n_realizations: int, workers: int | None = None):
    """Run several methods over the same realizations.

    Realization ``r`` is generated from ``spec.seed ^ r`` so results do not
    depend on scheduling. Methods sharing lag and estimator settings reuse
    cached information terms. Returns one :class:`BatchSummary` per method.
    """
    if n_realizations < 1:
        raise ValueError("n_realizations must be >= 1")
    cfgs = list(cfgs)
    workers = _resolve_workers(workers)
    if workers > 1:
        from joblib import Parallel, delayed

        results = Parallel(n_jobs=workers)(
            delayed(_one_realization)(spec, cfgs, r) for r in range(n_realizations)
        )
    else:
        results = [_one_realization(spec, cfgs, r) for r in range(n_realizations)]

    seeds = tuple(seed for seed, _, _ in results)
    labels = results[0][1]
    summaries = []
    for m, cfg in enumerate(cfgs):
        Rs = tuple(res[2][m][0] for res in results)
        confusions = tuple(res[2][m][1] for res in results)
        mean_R = np.mean(np.stack(Rs), axis=0)
        np.fill_diagonal(mean_R, 0.0)
        summaries.append(BatchSummary(spec, cfg, mean_R, confusions, seeds, labels, Rs))
    return summaries


def run_batch(spec: SystemSpec, cfg: MethodConfig, n_realizations: int, workers: int | None = None) -> BatchSummary:
    return run_batches(spec, [cfg], n_realizations, workers)[0]


def _resolve_workers(workers):
    if workers is None:
        workers = int(os.environ.get("PMIME_WORKERS", "1") or 1)
    return max(1, int(workers))


CSV_COLUMNS = [
    "experiment", "system", "n", "K", "C", "method", "L", "A", "m", "k_nn",
    "realizations", "sensitivity", "specificity", "f1", "tp", "fp", "tn", "fn",
]


def summary_row(summary: BatchSummary, experiment: str = "") -> dict:
    sens, spec, f1 = metrics(summary.pooled)
    s, m = summary.system, summary.method
    return {
        "experiment": experiment,
        "system": s.kind.value,
        "n": s.n,
        "K": s.K,
        "C": "" if s.C is None else s.C,
        "method": m.variant.label,
        "L": m.L,
        "A": m.A,
        "m": m.m,
        "k_nn": m.k_nn,
        "realizations": summary.n_realizations,
        "sensitivity": f"{sens:.3f}",
        "specificity": f"{spec:.3f}",
        "f1": f"{f1:.3f}",
        **summary.pooled.to_dict(),
    }


def summaries_to_csv(rows, path, header: dict | None = None) -> None:
    """Write table rows (see :func:`summary_row`) preceded by ``# key=value`` lines."""
    with open(path, "w", newline="") as fh:
        for key, value in (header or {}).items():
            fh.write(f"# {key}={value}\n")
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
