"""Ward clustering of map coordinates and per-cluster typicality scores."""

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InputError

WARD_VARIANTS = ("D", "D2")


@dataclass
class Dendrogram:
    """Agglomerative merge history.

    ``merges`` holds one (left, right, height) triple per merge; leaves
    are numbered 0..n-1 and merge t creates node n+t. Heights are
    nondecreasing.
    """

    merges: list
    labels: list

    @property
    def n_leaves(self) -> int:
        return len(self.labels)


def ward_cluster(coords, labels=None, variant: str = "D2") -> Dendrogram:
    """Agglomerative clustering with Ward's minimum-variance criterion.

    Each step merges the pair of clusters whose union increases the
    total within-cluster sum of squares the least; ties go to the pair
    with the lowest node ids. The default "D2" variant reports the
    square root of twice that increase as the merge height (so two
    singletons merge at their Euclidean distance); the "D" variant runs
    the classical recurrence on unsquared distances instead.

    Parameters
    ----------
    coords : ndarray of shape (n, d)
        Finite coordinates, one row per item. Duplicate rows are fine
        and merge at height zero.
    labels : sequence of str, optional
    variant : str
        "D2" (default) or "D".
    """
    coords = np.asarray(coords, dtype=float)
    if coords.ndim == 1:
        coords = coords[:, None]
    if coords.ndim != 2 or coords.shape[0] == 0:
        raise InputError(f"expected a nonempty 2-d array, got shape {coords.shape}")
    if not np.all(np.isfinite(coords)):
        raise InputError("coordinates contain non-finite entries")
    if variant not in WARD_VARIANTS:
        raise InputError(f"variant must be one of {WARD_VARIANTS}, got {variant!r}")
    n = coords.shape[0]
    if labels is None:
        labels = [str(i) for i in range(n)]
    labels = list(labels)
    if len(labels) != n:
        raise InputError(f"{len(labels)} labels for {n} points")

    if variant == "D2":
        merges = _ward_by_cluster_means(coords)
    else:
        merges = _ward_by_recurrence(coords)
    return Dendrogram(merges=merges, labels=labels)


def _ward_by_cluster_means(coords):
    """Merge by explicit size/mean bookkeeping; height = sqrt(2 * cost)."""
    n = coords.shape[0]
    sizes = {i: 1 for i in range(n)}
    means = {i: coords[i].copy() for i in range(n)}
    merges = []
    next_id = n
    while len(sizes) > 1:
        best = None
        for a, b in combinations(sorted(sizes), 2):
            na, nb = sizes[a], sizes[b]
            gap = means[a] - means[b]
            cost = na * nb / (na + nb) * float(gap @ gap)
            if best is None or cost < best[0]:
                best = (cost, a, b)
        cost, a, b = best
        merges.append((a, b, float(np.sqrt(2.0 * cost))))
        na, nb = sizes[a], sizes[b]
        means[next_id] = (na * means[a] + nb * means[b]) / (na + nb)
        sizes[next_id] = na + nb
        for node in (a, b):
            del sizes[node], means[node]
        next_id += 1
    return merges


def _ward_by_recurrence(coords):
    """Classical update on unsquared Euclidean distances."""
    n = coords.shape[0]
    sizes = {i: 1 for i in range(n)}
    dist = {}
    for a, b in combinations(range(n), 2):
        dist[(a, b)] = float(np.linalg.norm(coords[a] - coords[b]))
    merges = []
    next_id = n
    while len(sizes) > 1:
        best = None
        for a, b in combinations(sorted(sizes), 2):
            d = dist[(a, b)]
            if best is None or d < best[0]:
                best = (d, a, b)
        d_ab, a, b = best
        merges.append((a, b, d_ab))
        na, nb = sizes[a], sizes[b]
        for k in sorted(sizes):
            if k in (a, b):
                continue
            nk = sizes[k]
            d_ka = dist[tuple(sorted((k, a)))]
            d_kb = dist[tuple(sorted((k, b)))]
            dist[(k, next_id)] = (
                (na + nk) * d_ka + (nb + nk) * d_kb - nk * d_ab
            ) / (na + nb + nk)
        sizes[next_id] = na + nb
        for node in (a, b):
            del sizes[node]
        dist = {
            pair: d for pair, d in dist.items() if a not in pair and b not in pair
        }
        next_id += 1
    return merges


def cut_tree(dendrogram: Dendrogram, k: int) -> np.ndarray:
    """Assignment into ``k`` clusters by dropping the k-1 highest merges.

    Cluster ids are 0..k-1 in order of first appearance by leaf index.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise InputError(f"k must be in [1, {n}], got {k}")
    parent = list(range(n + len(dendrogram.merges)))

    def find(node):
        while parent[node] != node:
            parent[node] = parent[parent[node]]
            node = parent[node]
        return node

    for t, (a, b, _height) in enumerate(dendrogram.merges[: n - k]):
        parent[find(a)] = n + t
        parent[find(b)] = n + t
    assignment = np.empty(n, dtype=int)
    relabel = {}
    for i in range(n):
        root = find(i)
        if root not in relabel:
            relabel[root] = len(relabel)
        assignment[i] = relabel[root]
    assert len(relabel) == k
    return assignment


def aggregate_by_cluster(counts, assignment, n_clusters: int | None = None):
    """Sum table rows within clusters: (clusters x categories) counts."""
    counts = np.asarray(counts, dtype=float)
    assignment = np.asarray(assignment, dtype=int)
    if counts.shape[0] != assignment.size:
        raise InputError(
            f"{assignment.size} assignments for {counts.shape[0]} rows"
        )
    if n_clusters is None:
        n_clusters = int(assignment.max()) + 1
    out = np.zeros((n_clusters, counts.shape[1]))
    for cluster in range(n_clusters):
        out[cluster] = counts[assignment == cluster].sum(axis=0)
    return out


@dataclass
class TypicalityTable:
    """Standardized over-representation of categories within clusters.

    ``z[i, j]`` compares the observed count of category ``j`` in
    cluster ``i`` to the count expected from the margins, scaled by the
    binomial standard deviation; NaN marks excluded lines. ``ranked``
    lists, per cluster, the top categories as (label, z) pairs in
    descending z order.
    """

    z: np.ndarray
    ranked: list
    cluster_sizes: np.ndarray
    category_totals: np.ndarray
    total: float
    cluster_labels: list
    category_labels: list
    excluded_categories: list


def typicality_zscores(
    counts,
    top_m: int = 3,
    cluster_labels=None,
    category_labels=None,
) -> TypicalityTable:
    """Typicality z-scores of categories per cluster.

    The score for cluster ``i`` and category ``j`` is the observed
    count minus the margin-expected count, divided by the standard
    deviation of a draw of the cluster total at the category's overall
    rate. Categories with a zero total, and categories present in every
    single observation (zero variance), are excluded with a warning;
    their z entries are NaN.
    """
    counts = np.asarray(counts, dtype=float)
    if counts.ndim != 2:
        raise InputError(f"expected a 2-d table, got shape {counts.shape}")
    if np.any(counts < 0) or not np.all(np.isfinite(counts)):
        raise InputError("counts must be finite and nonnegative")
    if top_m < 1:
        raise InputError(f"top_m must be at least 1, got {top_m}")
    n_clusters, n_categories = counts.shape
    if cluster_labels is None:
        cluster_labels = [f"cluster {i + 1}" for i in range(n_clusters)]
    if category_labels is None:
        category_labels = [f"category {j + 1}" for j in range(n_categories)]
    cluster_labels = list(cluster_labels)
    category_labels = list(category_labels)

    k_i = counts.sum(axis=1)
    k_j = counts.sum(axis=0)
    k = float(counts.sum())
    if k <= 0:
        raise InputError("counts sum to zero")
    if np.any(k_i <= 0):
        empty = [cluster_labels[i] for i in np.flatnonzero(k_i <= 0)]
        warnings.warn(f"clusters with no observations: {empty}", stacklevel=2)
    excluded = (k_j <= 0) | (k_j >= k)
    if excluded.any():
        names = [category_labels[j] for j in np.flatnonzero(excluded)]
        warnings.warn(
            f"categories without typicality variance excluded: {names}",
            stacklevel=2,
        )

    z = np.full((n_clusters, n_categories), np.nan)
    for j in range(n_categories):
        if excluded[j]:
            continue
        expected = k_i * k_j[j] / k
        variance = expected * (1.0 - k_j[j] / k)
        live = variance > 0
        z[live, j] = (counts[live, j] - expected[live]) / np.sqrt(variance[live])

    ranked = []
    for i in range(n_clusters):
        order = [
            (category_labels[j], float(z[i, j]))
            for j in np.argsort(-z[i], kind="stable")
            if not np.isnan(z[i, j])
        ]
        ranked.append(order[:top_m])
    return TypicalityTable(
        z=z,
        ranked=ranked,
        cluster_sizes=k_i,
        category_totals=k_j,
        total=k,
        cluster_labels=cluster_labels,
        category_labels=category_labels,
        excluded_categories=[
            category_labels[j] for j in np.flatnonzero(excluded)
        ],
    )
