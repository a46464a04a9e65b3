"""Naive reference implementations used as independent oracles.

Deliberately written in the most direct way possible (plain sums, two-pass
formulas, a from-scratch k-means) and kept free of any imports from the
package under test.
"""

from __future__ import annotations

import math


def naive_mean(xs) -> float:
    return sum(xs) / len(xs)


def naive_pstdev(xs) -> float:
    m = naive_mean(xs)
    return math.sqrt(sum((x - m) ** 2 for x in xs) / len(xs))


def naive_median(xs) -> float:
    ordered = sorted(xs)
    n = len(ordered)
    mid = n // 2
    if n % 2:
        return float(ordered[mid])
    return (ordered[mid - 1] + ordered[mid]) / 2


def naive_pearson(xs, ys) -> float:
    mx, my = naive_mean(xs), naive_mean(ys)
    num = sum((a - mx) * (b - my) for a, b in zip(xs, ys))
    den = math.sqrt(sum((a - mx) ** 2 for a in xs)) * math.sqrt(
        sum((b - my) ** 2 for b in ys)
    )
    return num / den


def naive_slope(xs, ys) -> float:
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxy = sum(a * b for a, b in zip(xs, ys))
    sxx = sum(a * a for a in xs)
    return (n * sxy - sx * sy) / (n * sxx - sx * sx)


def naive_outlier_keys(keys, xs, threshold: float) -> set[str]:
    m = naive_mean(xs)
    s = naive_pstdev(xs)
    return {k for k, x in zip(keys, xs) if abs(x - m) / s >= threshold}


def naive_minmax(xs) -> list[float]:
    lo, hi = min(xs), max(xs)
    if hi == lo:
        return [0.0 for _ in xs]
    return [(x - lo) / (hi - lo) for x in xs]


def naive_kmeans_partition(keys, columns, k: int, max_iterations: int = 100) -> list[frozenset]:
    """From-scratch k-means matching the engine's deterministic rules:

    min-max normalized coordinates, initial centroids at the k rows sitting
    at evenly spaced quantiles of the first column (ties broken by key),
    nearest-centroid assignment with lowest-index tie-breaking, and empty
    clusters keeping their previous centroid.
    """
    n = len(keys)
    norm = [naive_minmax(col) for col in columns]
    points = [tuple(col[i] for col in norm) for i in range(n)]

    order = sorted(range(n), key=lambda i: (norm[0][i], keys[i]))
    centroids = [points[order[round(i * (n - 1) / (k - 1))]] for i in range(k)]

    def dist2(p, q):
        return sum((a - b) ** 2 for a, b in zip(p, q))

    assignment = [-1] * n
    for _ in range(max_iterations):
        new_assignment = [
            min(range(k), key=lambda c: dist2(points[i], centroids[c])) for i in range(n)
        ]
        if new_assignment == assignment:
            break
        assignment = new_assignment
        for c in range(k):
            members = [points[i] for i in range(n) if assignment[i] == c]
            if members:
                centroids[c] = tuple(
                    sum(p[d] for p in members) / len(members) for d in range(len(columns))
                )
    return [
        frozenset(keys[i] for i in range(n) if assignment[i] == c) for c in range(k)
    ]
