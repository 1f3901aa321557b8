"""Statistics built directly from inter-point distances."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import MultiSample, UnsupportedConfigError, cross_distances, pool
from .graphs import assignment, halton_grid

PHI_KINDS = ("cramer", "bahr", "log", "fraca", "fracb")


def phi_kernel(kind: str, z: np.ndarray) -> np.ndarray:
    """Dissimilarity transforms applied to squared Euclidean distances.

    cramer is sqrt(z)/2 and bahr is 1 - exp(-z/2), the conventions of the
    classical Cramer-test implementations; with cramer the statistic is half
    the two-sample energy distance."""
    if kind == "cramer":
        return np.sqrt(z) / 2.0
    if kind == "bahr":
        return 1.0 - np.exp(-z / 2.0)
    if kind == "log":
        return np.log1p(z)
    if kind == "fraca":
        return 1.0 - 1.0 / (1.0 + z)
    if kind == "fracb":
        return 1.0 - 1.0 / (1.0 + z) ** 2
    raise ValueError(f"unknown phi kernel {kind!r}")


def _slices(sizes):
    out = []
    start = 0
    for n in sizes:
        out.append(slice(start, start + n))
        start += n
    return out


def g_alpha(dist_block: np.ndarray, alpha: float) -> float:
    """Mean of pairwise distances raised to alpha (V-statistic mean)."""
    if alpha == 1.0:
        return float(dist_block.mean())
    return float((dist_block ** alpha).mean())


def energy(ms: MultiSample, dist: np.ndarray) -> float:
    """k-sample energy statistic on the pooled distance matrix."""
    sl = _slices(ms.sizes)
    sizes = ms.sizes
    g = [[dist[sl[i], sl[j]].mean() for j in range(ms.k)] for i in range(ms.k)]
    total = 0.0
    for i in range(ms.k):
        for j in range(i + 1, ms.k):
            ni, nj = sizes[i], sizes[j]
            total += ni * nj / (ni + nj) * (2 * g[i][j] - g[i][i] - g[j][j])
    return float(total)


def bf_statistic(ms: MultiSample, dist: np.ndarray, kind: str) -> float:
    """Two-sample energy-form statistic with phi(squared distance)."""
    if ms.k != 2:
        raise UnsupportedConfigError("bf statistic is two-sample only")
    sl = _slices(ms.sizes)
    n1, n2 = ms.sizes
    phi = phi_kernel(kind, dist ** 2)
    g12 = phi[sl[0], sl[1]].mean()
    g11 = phi[sl[0], sl[0]].mean()
    g22 = phi[sl[1], sl[1]].mean()
    return float(n1 * n2 / (n1 + n2) * (2 * g12 - g11 - g22))


def bg2(ms: MultiSample, dist: np.ndarray) -> float:
    """Squared distance between the two mean within/cross distance vectors."""
    if ms.k != 2:
        raise UnsupportedConfigError("bg2 is two-sample only")
    n1, n2 = ms.sizes
    if n1 < 2 or n2 < 2:
        raise UnsupportedConfigError("bg2 needs at least two points per sample")
    sl = _slices(ms.sizes)
    d11 = dist[sl[0], sl[0]]
    d22 = dist[sl[1], sl[1]]
    mu11 = d11.sum() / (n1 * (n1 - 1))
    mu22 = d22.sum() / (n2 * (n2 - 1))
    mu12 = dist[sl[0], sl[1]].mean()
    return float((mu11 - mu12) ** 2 + (mu12 - mu22) ** 2)


@dataclass(frozen=True)
class DiscoResult:
    total: float
    between: float
    within: float
    f_stat: float


def disco(ms: MultiSample, dist: np.ndarray, alpha: float) -> DiscoResult:
    """Distance-components decomposition of the pooled dispersion."""
    if not 0 < alpha <= 2:
        raise ValueError("alpha must be in (0, 2]")
    sl = _slices(ms.sizes)
    sizes = ms.sizes
    n = ms.total_n
    k = ms.k
    g = [[g_alpha(dist[sl[i], sl[j]], alpha) for j in range(k)]
         for i in range(k)]
    total = n / 2.0 * g_alpha(dist, alpha)
    within = sum(sizes[j] / 2.0 * g[j][j] for j in range(k))
    between = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            between += sizes[i] * sizes[j] / (2.0 * n) * (
                2 * g[i][j] - g[i][i] - g[j][j])
    f_stat = (between / (k - 1)) / (within / (n - k)) if within > 0 else math.inf
    return DiscoResult(total=float(total), between=float(between),
                       within=float(within), f_stat=float(f_stat))


def ds_rank_energy(ms: MultiSample, pooled_values: np.ndarray) -> float:
    """Rank energy: pooled points mapped to a Halton grid by optimal
    transport with squared-distance cost, then the energy statistic of the
    assigned grid points."""
    if ms.k != 2:
        raise UnsupportedConfigError("rank energy is two-sample only")
    n = ms.total_n
    grid = halton_grid(n, ms.p).values
    cost = cross_distances(pooled_values, grid) ** 2
    sigma = assignment(cost)
    ranks = grid[sigma]
    n1 = ms.sizes[0]
    r1, r2 = ranks[:n1], ranks[n1:]
    d12 = cross_distances(r1, r2).mean()
    d11 = cross_distances(r1, r1).mean()
    d22 = cross_distances(r2, r2).mean()
    n2 = n - n1
    return float(n1 * n2 / (n1 + n2) * (2 * d12 - d11 - d22))


def wasserstein1(ms: MultiSample, dist: np.ndarray) -> float:
    """Exact empirical 1-Wasserstein distance; needs equal sample sizes."""
    if ms.k != 2:
        raise UnsupportedConfigError("wasserstein is two-sample only")
    n1, n2 = ms.sizes
    if n1 != n2:
        raise UnsupportedConfigError(
            "wasserstein distance needs equal sample sizes")
    sl = _slices(ms.sizes)
    cost = dist[sl[0], sl[1]]
    sigma = assignment(cost)
    return float(cost[np.arange(n1), sigma].mean())


def _bd_two_sample(dxx: np.ndarray, dxy: np.ndarray, dyy: np.ndarray) -> float:
    """Empirical ball divergence of two samples from their distance blocks."""
    n = dxx.shape[0]
    m = dyy.shape[0]
    a_term = 0.0
    for i in range(n):
        own = np.sort(dxx[i])
        other = np.sort(dxy[i])
        radii = dxx[i]
        ax = np.searchsorted(own, radii, side="right") / n
        ay = np.searchsorted(other, radii, side="right") / m
        a_term += float(((ax - ay) ** 2).sum())
    a_term /= n * n
    c_term = 0.0
    for k in range(m):
        own = np.sort(dyy[k])
        other = np.sort(dxy[:, k])
        radii = dyy[k]
        cy = np.searchsorted(own, radii, side="right") / m
        cx = np.searchsorted(other, radii, side="right") / n
        c_term += float(((cx - cy) ** 2).sum())
    c_term /= m * m
    return a_term + c_term


def ball_divergence(ms: MultiSample, dist: np.ndarray) -> float:
    """Sum of the pairwise empirical ball divergences over all sample pairs."""
    sl = _slices(ms.sizes)
    total = 0.0
    for i in range(ms.k):
        for j in range(i + 1, ms.k):
            total += _bd_two_sample(dist[sl[i], sl[i]],
                                    dist[sl[i], sl[j]],
                                    dist[sl[j], sl[j]])
    return float(total)


def lhz(ms: MultiSample) -> float:
    """Plug-in estimate of the characteristic distance of two samples.

    Conditional characteristic functions are estimated by sample means of
    cos/sin inner products; both V-statistic terms are averaged over all
    within-sample index pairs."""
    if ms.k != 2:
        raise UnsupportedConfigError("lhz is two-sample only")
    z, _ = pool(ms)
    gram = z.values @ z.values.T
    n1 = ms.sizes[0]
    idx1 = np.arange(0, n1)
    idx2 = np.arange(n1, ms.total_n)

    def cf_parts(source_idx, eval_idx):
        # mean over k in source of exp(1i (G[k,i] - G[k,j])), for i,j in eval
        theta = gram[np.ix_(source_idx, eval_idx)]
        c = np.cos(theta)
        s = np.sin(theta)
        m = len(source_idx)
        real = (c.T @ c + s.T @ s) / m
        imag = (s.T @ c - c.T @ s) / m
        return real, imag

    total = 0.0
    for eval_idx in (idx1, idx2):
        rx, ix = cf_parts(idx1, eval_idx)
        ry, iy = cf_parts(idx2, eval_idx)
        total += float(((rx - ry) ** 2 + (ix - iy) ** 2).mean())
    return total


def engineer_metric(ms: MultiSample, q: float = 2.0) -> float:
    """L_q engineer metric of the sample mean vectors."""
    if ms.k != 2:
        raise UnsupportedConfigError("engineer metric is two-sample only")
    if q <= 0:
        raise ValueError("q must be positive")
    m1 = ms.samples[0].values.mean(axis=0)
    m2 = ms.samples[1].values.mean(axis=0)
    return float((np.abs(m1 - m2) ** q).sum() ** min(q, 1.0 / q))


_BG_CELL_CAP = 10 ** 7


def bg_partition(ms: MultiSample, eps: float = 0.8) -> float:
    """L1 distance of the empirical distributions on a rectangle partition.

    The pooled bounding box is split into roughly N^eps cells (equal per-axis
    counts).  Occupied cells are hashed instead of enumerating the partition;
    configurations whose full partition would exceed the enumeration cap are
    rejected, mirroring the method's breakdown for high dimensions."""
    if ms.k != 2:
        raise UnsupportedConfigError("bg partition test is two-sample only")
    n = ms.total_n
    p = ms.p
    per_axis = max(2, int(round(n ** (eps / p))))
    if per_axis ** p > _BG_CELL_CAP:
        raise UnsupportedConfigError(
            f"partition of {per_axis}^{p} cells exceeds the enumeration cap")
    z, _ = pool(ms)
    lo = z.values.min(axis=0)
    hi = z.values.max(axis=0)
    width = np.where(hi > lo, hi - lo, 1.0)
    idx = np.floor((z.values - lo) / width * per_axis).astype(np.int64)
    np.clip(idx, 0, per_axis - 1, out=idx)
    keys = np.zeros(n, dtype=np.int64)
    for d in range(p):
        keys = keys * per_axis + idx[:, d]
    n1 = ms.sizes[0]
    u1, c1 = np.unique(keys[:n1], return_counts=True)
    u2, c2 = np.unique(keys[n1:], return_counts=True)
    f1 = dict(zip(u1.tolist(), (c1 / n1).tolist()))
    f2 = dict(zip(u2.tolist(), (c2 / (n - n1)).tolist()))
    cells = set(f1) | set(f2)
    return float(sum(abs(f1.get(c, 0.0) - f2.get(c, 0.0)) for c in cells))
