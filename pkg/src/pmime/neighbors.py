"""Exact max-norm neighbor search backends.

Every backend returns identical results: k-th neighbor distances are taken
from the same floating point max-norm distances, and counts use the same
strict ``<`` comparison. Backends differ only in how candidate pairs are
pruned.

``"sweep"``
    Points are sorted along their first coordinate and each query scans
    outward, stopping once the coordinate gap alone exceeds the current
    radius. One-dimensional counts bisect a sorted copy instead.
    Numba-compiled; the default.
``"kdtree"``
    ``scipy.spatial.cKDTree`` with ``p=inf``.
``"brute"``
    All-pairs distance matrix in numpy. Reference implementation.
"""

from __future__ import annotations

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

BACKENDS = ("sweep", "kdtree", "brute")


@njit(cache=True)
def _sweep_kth(pts, k):
    n, d = pts.shape
    order = np.argsort(pts[:, 0], kind="mergesort")
    ps = np.empty_like(pts)
    for i in range(n):
        ps[i] = pts[order[i]]
    out = np.empty(n)
    best = np.empty(k)
    for i in range(n):
        for q in range(k):
            best[q] = np.inf
        x0 = ps[i, 0]
        lo = i - 1
        hi = i + 1
        up = True
        down = True
        while up or down:
            if up:
                if hi >= n or ps[hi, 0] - x0 >= best[k - 1]:
                    up = False
                else:
                    dist = 0.0
                    for c in range(d):
                        a = abs(ps[hi, c] - ps[i, c])
                        if a > dist:
                            dist = a
                    if dist < best[k - 1]:
                        q = k - 1
                        while q > 0 and best[q - 1] > dist:
                            best[q] = best[q - 1]
                            q -= 1
                        best[q] = dist
                    hi += 1
            if down:
                if lo < 0 or x0 - ps[lo, 0] >= best[k - 1]:
                    down = False
                else:
                    dist = 0.0
                    for c in range(d):
                        a = abs(ps[lo, c] - ps[i, c])
                        if a > dist:
                            dist = a
                    if dist < best[k - 1]:
                        q = k - 1
                        while q > 0 and best[q - 1] > dist:
                            best[q] = best[q - 1]
                            q -= 1
                        best[q] = dist
                    lo -= 1
        out[order[i]] = best[k - 1]
    return out


@njit(cache=True)
def _sweep_count(pts, radii):
    n, d = pts.shape
    order = np.argsort(pts[:, 0], kind="mergesort")
    ps = np.empty_like(pts)
    rs = np.empty(n)
    for i in range(n):
        ps[i] = pts[order[i]]
        rs[i] = radii[order[i]]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        r = rs[i]
        x0 = ps[i, 0]
        cnt = 0
        j = i + 1
        while j < n and ps[j, 0] - x0 < r:
            dist = 0.0
            for c in range(d):
                a = abs(ps[j, c] - ps[i, c])
                if a > dist:
                    dist = a
            if dist < r:
                cnt += 1
            j += 1
        j = i - 1
        while j >= 0 and x0 - ps[j, 0] < r:
            dist = 0.0
            for c in range(d):
                a = abs(ps[j, c] - ps[i, c])
                if a > dist:
                    dist = a
            if dist < r:
                cnt += 1
            j -= 1
        out[order[i]] = cnt
    return out


@njit(cache=True)
def _sorted_count_1d(x, radii):
    # |x_j - x_i| < r is monotone along sorted x, so both ends bisect exactly
    n = x.shape[0]
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        r = radii[i]
        if r <= 0:
            continue
        v = x[i]
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            if v - xs[mid] < r:
                hi = mid
            else:
                lo = mid + 1
        first = lo
        lo, hi = 0, n
        while lo < hi:
            mid = (lo + hi) // 2
            if xs[mid] - v < r:
                lo = mid + 1
            else:
                hi = mid
        out[i] = lo - first - 1
    return out


def _as_points(points):
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    return np.ascontiguousarray(pts)


def _brute_distances(pts):
    n = pts.shape[0]
    dist = np.zeros((n, n))
    for c in range(pts.shape[1]):
        np.maximum(dist, np.abs(pts[:, c][None, :] - pts[:, c][:, None]), out=dist)
    return dist


def kth_neighbor_distance(points, k: int, backend: str = "sweep") -> np.ndarray:
    """Max-norm distance from each point to its ``k``-th nearest other point."""
    pts = _as_points(points)
    n = pts.shape[0]
    if not 1 <= k < n:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if backend == "sweep":
        return _sweep_kth(pts, k)
    if backend == "kdtree":
        # self sits at distance 0, so the (k+1)-th hit is the k-th other point
        dist, _ = cKDTree(pts).query(pts, k=k + 1, p=np.inf)
        return np.ascontiguousarray(dist[:, k])
    if backend == "brute":
        dist = _brute_distances(pts)
        np.fill_diagonal(dist, np.inf)
        return np.partition(dist, k - 1, axis=1)[:, k - 1]
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")


def neighbor_counts(points, radii, backend: str = "sweep") -> np.ndarray:
    """Number of other points strictly closer than ``radii[i]`` to point ``i``.

    Distances use the max-norm; the query point itself is never counted.
    """
    pts = _as_points(points)
    radii = np.ascontiguousarray(radii, dtype=np.float64)
    if radii.shape != (pts.shape[0],):
        raise ValueError(f"radii shape {radii.shape} does not match {pts.shape[0]} points")
    if backend == "sweep":
        if pts.shape[1] == 1:
            return _sorted_count_1d(np.ascontiguousarray(pts[:, 0]), radii)
        return _sweep_count(pts, radii)
    if backend == "kdtree":
        positive = radii > 0
        counts = np.zeros(pts.shape[0], dtype=np.int64)
        if positive.any():
            # ball queries are inclusive; step just below r for strictness
            r = np.nextafter(radii[positive], 0.0)
            hits = cKDTree(pts).query_ball_point(pts[positive], r, p=np.inf, return_length=True)
            counts[positive] = np.asarray(hits, dtype=np.int64) - 1
        return counts
    if backend == "brute":
        dist = _brute_distances(pts)
        np.fill_diagonal(dist, np.inf)
        return (dist < radii[:, None]).sum(axis=1).astype(np.int64)
    raise ValueError(f"unknown backend {backend!r}; choose from {BACKENDS}")
