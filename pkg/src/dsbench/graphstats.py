"""Graph-based statistics: edge-count tests, nearest-neighbour tests,
cross-match family, and the kernel measure of multi-sample dissimilarity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import UnsupportedConfigError
from .graphs import KNN_DIRECTED, Graph, Matching, knn_graph
from .permnull import moments_from_edges, pattern_counts_from_edges

PINV_FLAG = "pinv"
_COND_TOL = 1e-12


class DegenerateNullError(ValueError):
    """Raised when a null variance needed for standardization is zero."""


@dataclass(frozen=True)
class EdgeCounts:
    """Within counts per sample and between counts per sample pair.

    between follows the (i, j), i < j pattern order; directed edges are
    counted individually."""

    within: np.ndarray
    between: np.ndarray
    total: int


def edge_counts(graph: Graph, labels: np.ndarray, k: int) -> EdgeCounts:
    counts = pattern_counts_from_edges(graph.edges, labels, k)
    return EdgeCounts(within=counts[:k], between=counts[k:],
                      total=graph.n_edges)


def null_moments(graph: Graph, sizes):
    """Exact permutation-null mean and covariance of the pattern counts."""
    return moments_from_edges(graph.edges, graph.n_nodes, sizes)


def _safe_inverse_quadform(x: np.ndarray, mean: np.ndarray,
                           cov: np.ndarray) -> tuple[float, bool]:
    """(x - mean)' cov^{-1} (x - mean); pseudo-inverse on singular cov."""
    diff = x - mean
    w, v = np.linalg.eigh(cov)
    wmax = np.max(np.abs(w)) if w.size else 0.0
    if wmax == 0.0:
        return 0.0, True
    keep = w > _COND_TOL * wmax
    flagged = not keep.all()
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    y = v.T @ diff
    return float((y ** 2 * inv).sum()), flagged


def _std(value, mean, var):
    if var <= 0:
        raise DegenerateNullError("zero null variance")
    return (value - mean) / np.sqrt(var)


def edgecount_test(graph: Graph, labels: np.ndarray, sizes, variant: str,
                   kappa: float = 1.0, moments=None):
    """Two-sample edge-count statistics on a similarity graph.

    variant: 'fr' standardized between count, 'cf' quadratic form of the
    within counts, 'ccs' standardized weighted within count, 'zc' max-type
    combination.  Returns (value, flags)."""
    if len(sizes) != 2:
        raise UnsupportedConfigError("edge-count tests are two-sample only")
    counts = pattern_counts_from_edges(graph.edges, labels, 2)
    mean, cov = moments if moments is not None else null_moments(graph, sizes)
    r1, r2, rb = counts
    n1, n2 = sizes
    n = n1 + n2
    flags: tuple[str, ...] = ()
    if variant == "fr":
        value = _std(rb, mean[2], cov[2, 2])
    elif variant == "cf":
        value, flagged = _safe_inverse_quadform(
            counts[:2], mean[:2], cov[:2, :2])
        if flagged:
            flags = (PINV_FLAG,)
    elif variant == "ccs":
        w = np.array([n1 / n, n2 / n])
        rw = w @ counts[:2]
        value = _std(rw, w @ mean[:2], w @ cov[:2, :2] @ w)
    elif variant == "zc":
        w = np.array([n1 / n, n2 / n])
        rw = w @ counts[:2]
        zw = _std(rw, w @ mean[:2], w @ cov[:2, :2] @ w)
        v = np.array([1.0, -1.0])
        rd = v @ counts[:2]
        zd = _std(rd, v @ mean[:2], v @ cov[:2, :2] @ v)
        value = max(kappa * zw, abs(zd))
    else:
        raise ValueError(f"unknown edge-count variant {variant!r}")
    return float(value), flags


def sc_test(graph: Graph, labels: np.ndarray, sizes, variant: str,
            moments=None):
    """Multi-sample edge-count statistics (S and S_A quadratic forms)."""
    k = len(sizes)
    counts = pattern_counts_from_edges(graph.edges, labels, k)
    mean, cov = moments if moments is not None else null_moments(graph, sizes)
    flags: tuple[str, ...] = ()
    if variant == "s":
        sw, f1 = _safe_inverse_quadform(counts[:k], mean[:k], cov[:k, :k])
        sb, f2 = _safe_inverse_quadform(counts[k:], mean[k:], cov[k:, k:])
        if f1 or f2:
            flags = (PINV_FLAG,)
        return float(sw + sb), flags
    if variant == "sa":
        idx = np.arange(len(counts) - 1)
        value, flagged = _safe_inverse_quadform(
            counts[idx], mean[idx], cov[np.ix_(idx, idx)])
        if flagged:
            flags = (PINV_FLAG,)
        return float(value), flags
    raise ValueError(f"unknown sc variant {variant!r}")


def sh_statistic(dist: np.ndarray, labels: np.ndarray, sizes,
                 k_nn: int) -> float:
    """Mean within-sample proportion of directed K-NN edges."""
    if len(sizes) != 2:
        raise UnsupportedConfigError("sh test is two-sample only")
    graph = knn_graph(dist, k_nn)
    same = labels[graph.edges[:, 0]] == labels[graph.edges[:, 1]]
    n = dist.shape[0]
    return float(same.sum() / (k_nn * n))


def bqs_statistic(dist: np.ndarray, labels: np.ndarray, sizes) -> float:
    """Sum of within-sample K-NN edge counts over all K = 1..N-1."""
    if len(sizes) != 2:
        raise UnsupportedConfigError("bqs test is two-sample only")
    n = dist.shape[0]
    d = dist.copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind="stable")[:, :n - 1]
    same = labels[order] == labels[:, None]
    weights = np.arange(n - 1, 0, -1, dtype=np.float64)
    return float((same @ weights).sum())


def crossmatch_counts(matching: Matching, labels: np.ndarray,
                      k: int) -> np.ndarray:
    """Pattern counts of the matching edges (within first, then between)."""
    edges = matching.pairs
    return pattern_counts_from_edges(edges, labels, k)


def _matching_moments(matching: Matching, n_nodes: int, sizes):
    return moments_from_edges(matching.pairs, n_nodes, sizes)


def rosenbaum_statistic(matching: Matching, labels: np.ndarray,
                        sizes) -> float:
    """Raw cross-match count a12 (high values indicate similarity)."""
    if len(sizes) != 2:
        raise UnsupportedConfigError("rosenbaum test is two-sample only")
    counts = crossmatch_counts(matching, labels, 2)
    return float(counts[2])


def petrie_statistic(matching: Matching, labels: np.ndarray, sizes,
                     n_nodes: int) -> float:
    """Standardized total between-sample pair count of the matching."""
    k = len(sizes)
    counts = crossmatch_counts(matching, labels, k)
    mean, cov = _matching_moments(matching, n_nodes, sizes)
    total = counts[k:].sum()
    mu = mean[k:].sum()
    var = cov[k:, k:].sum()
    return float(_std(total, mu, var))


def mmcm_statistic(matching: Matching, labels: np.ndarray, sizes,
                   n_nodes: int):
    """Mahalanobis cross-match statistic.

    For two samples the signed standardized deficit (E - a12)/sd is
    returned, which is a strictly monotone transform of the cross-match
    count; for four samples the quadratic form of (a12, a13, a23, a24).
    Returns (value, flags)."""
    k = len(sizes)
    counts = crossmatch_counts(matching, labels, k)
    mean, cov = _matching_moments(matching, n_nodes, sizes)
    if k == 2:
        value = _std(mean[2] - counts[2], 0.0, cov[2, 2])
        return float(value), ()
    if k == 4:
        # between-pattern order: (1,2),(1,3),(1,4),(2,3),(2,4),(3,4)
        sel = np.array([0, 1, 3, 4]) + k
        value, flagged = _safe_inverse_quadform(
            counts[sel], mean[sel], cov[np.ix_(sel, sel)])
        return float(value), ((PINV_FLAG,) if flagged else ())
    raise UnsupportedConfigError("mmcm is defined here for k = 2 or 4")


def kmd_statistic(graph: Graph, labels: np.ndarray, sizes) -> float:
    """Graph-based estimate of the kernel measure of multi-sample
    dissimilarity with the discrete kernel."""
    n = graph.n_nodes
    sizes = np.asarray(sizes)
    cross_mean = float((sizes * (sizes - 1)).sum()) / (n * (n - 1))
    denom = 1.0 - cross_mean
    if denom <= 0:
        raise UnsupportedConfigError("kmd undefined when all labels agree")
    if graph.kind == KNN_DIRECTED:
        src = graph.edges[:, 0]
        dst = graph.edges[:, 1]
    else:
        src = np.concatenate([graph.edges[:, 0], graph.edges[:, 1]])
        dst = np.concatenate([graph.edges[:, 1], graph.edges[:, 0]])
    out_deg = np.zeros(n, dtype=np.float64)
    np.add.at(out_deg, src, 1.0)
    same = (labels[src] == labels[dst]).astype(np.float64)
    per_node = np.zeros(n, dtype=np.float64)
    np.add.at(per_node, src, same)
    if (out_deg == 0).any():
        raise UnsupportedConfigError("kmd needs every node to have out-edges")
    t1 = float((per_node / out_deg).mean())
    return (t1 - cross_mean) / denom
