"""End-to-end acceptance checks.

Each test evaluates one criterion at its stated tolerance and prints a
single PASS/FAIL line; the lines are repeated in the pytest terminal
summary. Run directly with ``python3 tests/test_acceptance.py`` to get
only the criterion lines.
"""

import math
import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))
from conftest import record_criterion  # noqa: E402

from pmime.embedding import MethodConfig, causality_matrix  # noqa: E402
from pmime.evaluation import run_batches  # noqa: E402
from pmime.knn import EstimatorConfig, conditional_mutual_information, mutual_information  # noqa: E402
from pmime.neighbors import kth_neighbor_distance, neighbor_counts  # noqa: E402
from pmime.series import MultivariateSeries  # noqa: E402
from pmime.simulators import (  # noqa: E402
    SystemSpec,
    generate,
    integrate_lorenz3,
    realization_seed,
    var5_companion,
)

REALIZATIONS = 20
VARIANTS = ("pmime", "m-pmime", "lm-pmime")


def _batch(spec, **method):
    cfgs = [MethodConfig(variant=v, **method) for v in VARIANTS]
    return {s.method.variant.value: s for s in run_batches(spec, cfgs, REALIZATIONS)}


def _fmt(summaries, field):
    return ", ".join(f"{k}={getattr(s, field):.3f}" for k, s in summaries.items())


def _check(number, passed, detail):
    record_criterion(number, passed, detail)
    assert passed, detail


# 1 ---------------------------------------------------------------------------

def test_criterion_01_gaussian_mi_oracle():
    start = time.perf_counter()
    cfg = EstimatorConfig(k_nn=5)
    worst = 0.0
    exact_reduction = True
    parts = []
    for rho in (0.3, 0.6, 0.9):
        truth = -0.5 * math.log(1 - rho**2)
        cov = [[1.0, rho], [rho, 1.0]]
        estimates = []
        for seed in range(50):
            xy = np.random.default_rng(seed).multivariate_normal([0.0, 0.0], cov, size=2000)
            mi = mutual_information(xy[:, 0], xy[:, 1], cfg)
            cmi = conditional_mutual_information(xy[:, 0], xy[:, 1], np.empty((2000, 0)), cfg)
            exact_reduction &= mi == cmi
            estimates.append(mi)
        err = abs(np.mean(estimates) - truth)
        worst = max(worst, err)
        parts.append(f"rho={rho}: {np.mean(estimates):.4f} vs {truth:.4f}")
    elapsed = time.perf_counter() - start
    passed = worst <= 0.05 and exact_reduction and elapsed < 30
    _check(1, passed, f"{'; '.join(parts)}; CMI(empty z)==MI: {exact_reduction}; {elapsed:.1f}s")


# 2 ---------------------------------------------------------------------------

def test_criterion_02_brute_force_equivalence():
    rng = np.random.default_rng(2)
    mismatches = 0
    for _ in range(100):
        n = int(rng.integers(10, 301))
        d = int(rng.integers(1, 5))
        pts = rng.standard_normal((n, d))
        if rng.random() < 0.3:
            pts = np.round(pts, 1)  # exercise distance ties
        k = int(rng.integers(1, 6))
        ref_eps = kth_neighbor_distance(pts, k, "brute")
        ref_counts = neighbor_counts(pts[:, :1], ref_eps, "brute")
        for backend in ("sweep", "kdtree"):
            eps = kth_neighbor_distance(pts, k, backend)
            counts = neighbor_counts(pts[:, :1], ref_eps, backend)
            full = neighbor_counts(pts, ref_eps, backend)
            if not (
                np.array_equal(eps, ref_eps)
                and np.array_equal(counts, ref_counts)
                and np.array_equal(full, neighbor_counts(pts, ref_eps, "brute"))
            ):
                mismatches += 1
    _check(2, mismatches == 0, f"{mismatches} mismatching backend results over 100 instances")


# 3 ---------------------------------------------------------------------------

def test_criterion_03_henon_strong_coupling():
    start = time.perf_counter()
    results = {}
    for K in (3, 6):
        results[K] = _batch(SystemSpec("HENON", 1024, K=K, C=0.3), L=5, A=0.95, m=2)
    elapsed = time.perf_counter() - start
    f1s = [s.f1 for res in results.values() for s in res.values()]
    passed = min(f1s) >= 0.95 and elapsed < 600
    detail = "; ".join(f"K={K}: F1 {_fmt(res, 'f1')}" for K, res in results.items())
    _check(3, passed, f"{detail}; {elapsed:.0f}s")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_henon_weak_coupling_ordering():
    res = _batch(SystemSpec("HENON", 1024, K=3, C=0.1), L=5, A=0.95, m=2)
    p, mp, lm = (res[v].f1 for v in VARIANTS)
    passed = lm >= mp >= p and lm >= 0.85 and p <= 0.5
    _check(4, passed, f"F1 {_fmt(res, 'f1')} (need LM>=M>=P, LM>=0.85, P<=0.5)")


# 5 ---------------------------------------------------------------------------

def test_criterion_05_var5_specificity():
    res = _batch(SystemSpec("VAR5", 512), L=6, A=0.97, m=2)
    gain = res["lm-pmime"].specificity - res["pmime"].specificity
    f1 = res["lm-pmime"].f1
    passed = gain >= 0.1 and abs(f1 - 0.693) <= 0.10
    _check(5, passed, f"specificity {_fmt(res, 'specificity')}; LM-PMIME F1={f1:.3f} (target 0.693+-0.10)")


# 6 ---------------------------------------------------------------------------

def test_criterion_06_nlvar3():
    res = _batch(SystemSpec("NLVAR3", 512), L=6, A=0.97, m=3)
    lm, p = res["lm-pmime"].f1, res["pmime"].f1
    passed = abs(lm - 0.873) <= 0.10 and lm > p
    _check(6, passed, f"F1 {_fmt(res, 'f1')} (target LM 0.873+-0.10, above PMIME)")


# 7 ---------------------------------------------------------------------------

def test_criterion_07_lorenz_sensitivity():
    res = _batch(SystemSpec("LORENZ3", 512, C=3.0), L=5, A=0.95, m=3)
    lm, p = res["lm-pmime"].sensitivity, res["pmime"].sensitivity
    passed = lm >= 0.7 and p <= 0.4
    _check(7, passed, f"sensitivity {_fmt(res, 'sensitivity')} (need LM>=0.7, PMIME<=0.4)")


# 8 ---------------------------------------------------------------------------

def _built_embeddings(count, seed=8):
    """Engine-built embeddings over randomly drawn systems, seeds and variants."""
    rng = np.random.default_rng(seed)
    systems = [
        ("HENON", dict(K=3, C=0.3)),
        ("HENON", dict(K=3, C=0.1)),
        ("VAR5", {}),
        ("NLVAR3", {}),
        ("LORENZ3", dict(C=3.0)),
    ]
    out = []
    while len(out) < count:
        kind, kw = systems[rng.integers(len(systems))]
        series, _ = generate(SystemSpec(kind, 256, seed=int(rng.integers(2**31)), **kw))
        cfg = MethodConfig(variant=VARIANTS[rng.integers(3)], seed=int(rng.integers(2**31)))
        res = causality_matrix(series, cfg)
        out += [(res.R, j, emb) for j, emb in enumerate(res.embeddings)]
    return out[:count]


def test_criterion_08_property_suite():
    failures = []

    # R >= 0 and R[i, j] > 0 exactly when variable i is in target j's embedding
    for R, j, emb in _built_embeddings(200):
        if (R < 0).any():
            failures.append("negative R")
        for i in range(R.shape[0]):
            if i != j and (R[i, j] > 0) != (i in emb.variables()):
                failures.append(f"biconditional broken for {i}->{j}, R={R[i, j]}, members={list(emb.members)}")

    # PMIME and M-PMIME coincide at m=1
    series, _ = generate(SystemSpec("HENON", 512, K=3, C=0.2, seed=81))
    a = causality_matrix(series, MethodConfig(variant="pmime", m=1, seed=3))
    b = causality_matrix(series, MethodConfig(variant="m-pmime", m=1, seed=3))
    if not (np.array_equal(a.R, b.R) and [e.members for e in a.embeddings] == [e.members for e in b.embeddings]):
        failures.append("PMIME != M-PMIME at m=1")

    # relabeling variables conjugates R
    series, _ = generate(SystemSpec("VAR5", 300, seed=82))
    perm = [3, 0, 4, 2, 1]
    for variant in VARIANTS:
        cfg = MethodConfig(variant=variant, L=3, seed=5)
        R = causality_matrix(series, cfg).R
        Rp = causality_matrix(series.permute(perm), cfg).R
        if not np.array_equal(Rp, R[np.ix_(perm, perm)]):
            failures.append(f"permutation equivariance broken for {variant}")

    # seed determinism of every generator and of end-to-end runs
    specs = [
        SystemSpec("VAR5", 128, seed=9),
        SystemSpec("NLVAR3", 128, seed=9),
        SystemSpec("HENON", 128, K=4, C=0.3, seed=9),
        SystemSpec("LORENZ3", 128, C=2.0, seed=9),
    ]
    for spec in specs:
        if not np.array_equal(generate(spec)[0].data, generate(spec)[0].data):
            failures.append(f"{spec.kind.value} generator not deterministic")
    spec = SystemSpec("HENON", 256, K=3, C=0.3, seed=10)
    cfgs = [MethodConfig(variant=v) for v in VARIANTS]
    first = [s.to_json() for s in run_batches(spec, cfgs, 2)]
    second = [s.to_json() for s in run_batches(spec, cfgs, 2)]
    if first != second:
        failures.append("end-to-end batch not deterministic")

    detail = "all properties hold" if not failures else f"{len(failures)} failure(s): {failures[0]}"
    _check(8, not failures, detail)


# 9 ---------------------------------------------------------------------------

def test_criterion_09_null_system():
    positives = total = 0
    off = ~np.eye(3, dtype=bool)
    for r in range(REALIZATIONS):
        seed = realization_seed(0, r)
        data = np.random.default_rng(seed).standard_normal((1024, 3))
        R = causality_matrix(MultivariateSeries(data), MethodConfig(variant="lm-pmime", seed=seed)).R
        positives += int((R[off] > 0).sum())
        total += int(off.sum())
    rate = positives / total
    _check(9, rate <= 0.15, f"LM-PMIME off-diagonal positive rate {rate:.3f} ({positives}/{total}), need <= 0.15")


# 10 --------------------------------------------------------------------------

def test_criterion_10_integrator_and_stationarity():
    # initial states drawn exactly as the generator draws them for the
    # 20 realizations of the C=3 batch
    drifts = []
    for r in range(REALIZATIONS):
        state0 = np.random.Generator(np.random.PCG64(realization_seed(0, r))).uniform(-10.0, 10.0, size=9)
        coarse = integrate_lorenz3(state0, 3.0, 100, 0, rtol=1e-6, atol=1e-9)
        fine = integrate_lorenz3(state0, 3.0, 100, 0, rtol=0.5e-6, atol=0.5e-9)
        drifts.append(float(np.max(np.abs(coarse - fine))))
    worst = max(drifts)
    over = sum(d >= 1e-3 for d in drifts)
    radius = float(np.max(np.abs(np.linalg.eigvals(var5_companion()))))
    _check(
        10,
        worst < 1e-3 and radius < 1,
        f"tolerance-halving drift max {worst:.2e}, {over}/{len(drifts)} states >= 1e-3; "
        f"VAR5 spectral radius {radius:.4f}",
    )

if __name__ == "__main__":  # pragma: no cover
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
