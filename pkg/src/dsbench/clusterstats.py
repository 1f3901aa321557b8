"""Clustering-based tests (MADD + k-medoids, FS/RI family) and
classifier-based statistics (K-NN two-sample test, tree classification
error, projected mean-difference)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .core import MultiSample, UnsupportedConfigError, cross_distances, pool

PSI_KINDS = ("psi1", "psi2", "psi3", "psi4", "psi5")
H_KINDS = ("h1", "h2")

NONCONVERGED_FLAG = "kmedoids_nonconverged"
ZERO_DIRECTION_FLAG = "zero_direction"


@dataclass(frozen=True)
class MaddConfig:
    psi: str = "psi5"
    h: str = "h2"

    def __post_init__(self):
        if self.psi not in PSI_KINDS:
            raise ValueError(f"unknown psi {self.psi!r}")
        if self.h not in H_KINDS:
            raise ValueError(f"unknown h {self.h!r}")


def _psi(kind: str, t: np.ndarray) -> np.ndarray:
    if kind == "psi1":
        return t ** 2
    if kind == "psi2":
        return 1.0 - np.exp(-t)
    if kind == "psi3":
        return 1.0 - np.exp(-t ** 2)
    if kind == "psi4":
        return np.log1p(t)
    return t


def _h(kind: str, t: np.ndarray) -> np.ndarray:
    if kind == "h1":
        return np.sqrt(t)
    return t


def madd(values: np.ndarray, cfg: MaddConfig) -> np.ndarray:
    """Mean absolute difference of distance profiles.

    rho(i, j) averages |phi(i, m) - phi(j, m)| over the other points m,
    with phi the h(mean psi |component difference|) dissimilarity."""
    n, p = values.shape
    if n < 3:
        raise UnsupportedConfigError("madd needs at least three points")
    acc = np.zeros((n, n))
    for col in range(p):
        acc += _psi(cfg.psi, np.abs(values[:, col, None] - values[None, :, col]))
    phi = _h(cfg.h, acc / p)
    # sum_m |phi_im - phi_jm| over all m, then drop the m=i and m=j terms
    rows_per_chunk = max(1, 10 ** 7 // (n * n))
    s = np.empty((n, n))
    for start in range(0, n, rows_per_chunk):
        stop = min(n, start + rows_per_chunk)
        s[start:stop] = np.abs(
            phi[start:stop, None, :] - phi[None, :, :]).sum(axis=2)
    rho = (s - 2.0 * phi) / (n - 2)
    np.fill_diagonal(rho, 0.0)
    return rho


def cluster_madd(rho: np.ndarray, n_clusters: int, rng):
    """Seeded k-medoids (alternating assignment / medoid update) on a
    dissimilarity matrix.  Returns (labels 0..l-1, flags)."""
    n = rho.shape[0]
    if not 2 <= n_clusters <= n:
        raise UnsupportedConfigError("cluster count out of range")
    medoids = np.sort(rng.choice(n, size=n_clusters, replace=False))
    labels = np.argmin(rho[:, medoids], axis=1)
    for _ in range(100):
        # repair empty clusters with the worst-assigned point
        for c in range(n_clusters):
            if not (labels == c).any():
                worst = int(np.argmax(rho[np.arange(n), medoids[labels]]))
                medoids[c] = worst
                labels = np.argmin(rho[:, medoids], axis=1)
        new_medoids = medoids.copy()
        for c in range(n_clusters):
            members = np.flatnonzero(labels == c)
            within = rho[np.ix_(members, members)].sum(axis=1)
            new_medoids[c] = members[int(np.argmin(within))]
        new_labels = np.argmin(rho[:, new_medoids], axis=1)
        if (new_medoids == medoids).all() and (new_labels == labels).all():
            return labels, ()
        medoids, labels = new_medoids, new_labels
    return labels, (NONCONVERGED_FLAG,)


def contingency(sample_labels: np.ndarray, cluster_labels: np.ndarray,
                k: int, n_clusters: int) -> np.ndarray:
    table = np.zeros((k, n_clusters), dtype=np.int64)
    for s, c in zip(sample_labels, cluster_labels):
        table[s - 1, c] += 1
    return table


def fs_from_table(table: np.ndarray) -> float:
    """Generalized Fisher statistic: -log multivariate hypergeometric
    probability of the contingency table given its margins."""
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    n = table.sum()
    if (cols > 0).sum() < 2:
        raise UnsupportedConfigError(
            "degenerate clustering: fewer than two occupied clusters")
    logp = (sum(math.lgamma(r + 1) for r in rows)
            + sum(math.lgamma(c + 1) for c in cols)
            - math.lgamma(n + 1)
            - sum(math.lgamma(t + 1) for t in table.ravel()))
    return -logp


def ri_from_table(table: np.ndarray) -> float:
    """Proportion of point pairs on which clustering and sample membership
    disagree (zero for a perfect clustering)."""
    n = table.sum()

    def c2(x):
        return x * (x - 1) / 2.0

    same_sample = sum(c2(r) for r in table.sum(axis=1))
    same_cluster = sum(c2(c) for c in table.sum(axis=0))
    same_both = sum(c2(t) for t in table.ravel())
    return float((same_sample + same_cluster - 2 * same_both) / c2(n))


def dunn_index(rho: np.ndarray, labels: np.ndarray) -> float:
    """Min inter-cluster distance over max intra-cluster diameter."""
    clusters = np.unique(labels)
    if len(clusters) < 2:
        raise UnsupportedConfigError("dunn index needs at least two clusters")
    max_diam = 0.0
    for c in clusters:
        members = np.flatnonzero(labels == c)
        if len(members) > 1:
            max_diam = max(max_diam,
                           float(rho[np.ix_(members, members)].max()))
    min_between = math.inf
    for i, a in enumerate(clusters):
        for b in clusters[i + 1:]:
            ma = np.flatnonzero(labels == a)
            mb = np.flatnonzero(labels == b)
            min_between = min(min_between,
                              float(rho[np.ix_(ma, mb)].min()))
    if max_diam == 0.0:
        return math.inf
    return min_between / max_diam


def _cluster_counts_to_try(k: int) -> range:
    return range(2, 2 * k + 1)


def _estimate_clusters(rho: np.ndarray, k: int, rng):
    """Cluster count from a Dunn-index sweep (ties go to fewer clusters)."""
    best_ell, best_dunn = None, -math.inf
    all_flags: tuple[str, ...] = ()
    for ell in _cluster_counts_to_try(k):
        if ell > rho.shape[0]:
            break
        labels, flags = cluster_madd(rho, ell, rng)
        all_flags += flags
        if len(np.unique(labels)) < 2:
            continue
        d = dunn_index(rho, labels)
        if d > best_dunn:
            best_dunn, best_ell = d, ell
    if best_ell is None:
        raise UnsupportedConfigError("no usable clustering found")
    return best_ell, all_flags


def fs_ri_statistic(ms: MultiSample, cfg: MaddConfig, variant: str, rng,
                    ms_clusters: int | None = None):
    """FS / RI statistics and their modified, multi-scale, and aggregated
    versions.  variant in {fs, ri, mfs, mri, msfs, msri, afs_knw, afs_est,
    ari_knw, ari_est}; ms_clusters gives the cluster count for the
    multi-scale versions.  Returns (value, flags)."""
    z, labels = pool(ms)
    flags: tuple[str, ...] = ()
    if variant in ("afs_knw", "afs_est", "ari_knw", "ari_est"):
        ri = variant.startswith("ari")
        vals = []
        for i in range(ms.k):
            for j in range(i + 1, ms.k):
                pair = MultiSample((ms.samples[i], ms.samples[j]))
                sub_variant = ("ri" if ri else "fs")
                if variant.endswith("est"):
                    sub_variant = "m" + sub_variant
                v, f = fs_ri_statistic(pair, cfg, sub_variant, rng)
                vals.append(v)
                flags += f
        # the extreme pairwise statistic in the method's own direction
        return (min(vals) if ri else max(vals)), flags

    rho = madd(z.values, cfg)
    if variant in ("fs", "ri"):
        ell = ms.k
    elif variant in ("mfs", "mri"):
        ell, fl = _estimate_clusters(rho, ms.k, rng)
        flags += fl
    elif variant in ("msfs", "msri"):
        if ms_clusters is None:
            raise ValueError("multi-scale variants need a cluster count")
        ell = ms_clusters
    else:
        raise ValueError(f"unknown variant {variant!r}")
    cl, fl = cluster_madd(rho, ell, rng)
    flags += fl
    table = contingency(labels, cl, ms.k, ell)
    if variant.endswith("ri"):
        return ri_from_table(table), flags
    return fs_from_table(table), flags


def _stratified_split(labels: np.ndarray, rng):
    """50/50 train/test split stratified by label; odd counts favour train."""
    train = []
    test = []
    for lab in np.unique(labels):
        idx = np.flatnonzero(labels == lab)
        perm = rng.permutation(len(idx))
        n_train = (len(idx) + 1) // 2
        train.append(idx[perm[:n_train]])
        test.append(idx[perm[n_train:]])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def knn_predict(train_x: np.ndarray, train_y: np.ndarray, test_x: np.ndarray,
                k: int) -> np.ndarray:
    """Majority-vote K-NN; distance ties resolved by training order, vote
    ties by the smaller class label."""
    d = cross_distances(test_x, train_x)
    order = np.argsort(d, axis=1, kind="stable")[:, :k]
    votes = train_y[order]
    n_classes = int(train_y.max()) + 1
    preds = np.empty(len(test_x), dtype=np.int64)
    for i in range(len(test_x)):
        counts = np.bincount(votes[i], minlength=n_classes)
        preds[i] = int(np.argmax(counts))
    return preds


def c2st_knn(ms: MultiSample, rng) -> float:
    """Test-set accuracy of a K-NN classifier for the sample membership."""
    if ms.total_n < 10:
        raise UnsupportedConfigError("c2st needs at least ten points")
    z, labels = pool(ms)
    train, test = _stratified_split(labels, rng)
    if len(test) == 0:
        raise UnsupportedConfigError("empty test split")
    train_labels = labels[train]
    if len(np.unique(train_labels)) < ms.k:
        raise UnsupportedConfigError("a class is missing from the training split")
    k = max(1, int(math.isqrt(len(train))))
    preds = knn_predict(z.values[train], train_labels, z.values[test], k)
    return float((preds == labels[test]).mean())


# ---------------------------------------------------------------------------
# CART with Gini splits (also reused by the harness for method-choice rules)


@dataclass
class TreeNode:
    feature: int = -1
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    prediction: int = -1
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    frac = counts / n
    return 1.0 - float((frac ** 2).sum())


def _best_split(x: np.ndarray, y: np.ndarray, n_classes: int, min_leaf: int):
    n, p = x.shape
    parent_counts = np.bincount(y, minlength=n_classes)
    parent_gini = _gini(parent_counts)
    best = None
    for feat in range(p):
        order = np.argsort(x[:, feat], kind="stable")
        xs = x[order, feat]
        ys = y[order]
        left_counts = np.zeros(n_classes)
        right_counts = parent_counts.astype(float).copy()
        for i in range(n - 1):
            left_counts[ys[i]] += 1
            right_counts[ys[i]] -= 1
            if xs[i] == xs[i + 1]:
                continue
            nl = i + 1
            nr = n - nl
            if nl < min_leaf or nr < min_leaf:
                continue
            gain = parent_gini - (nl * _gini(left_counts)
                                  + nr * _gini(right_counts)) / n
            if gain > 1e-12 and (best is None or gain > best[0] + 1e-12):
                best = (gain, feat, (xs[i] + xs[i + 1]) / 2.0)
    return best


def cart_fit(x: np.ndarray, y: np.ndarray, max_depth: int = 10,
             min_leaf: int = 5) -> TreeNode:
    """CART classifier with Gini impurity; deterministic tie handling."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n_classes = int(y.max()) + 1

    def build(idx, depth):
        node = TreeNode(n_samples=len(idx))
        counts = np.bincount(y[idx], minlength=n_classes)
        node.prediction = int(np.argmax(counts))
        if (depth >= max_depth or len(idx) < 2 * min_leaf
                or _gini(counts) == 0.0):
            return node
        found = _best_split(x[idx], y[idx], n_classes, min_leaf)
        if found is None:
            return node
        _, feat, thr = found
        node.feature = feat
        node.threshold = thr
        mask = x[idx, feat] <= thr
        node.left = build(idx[mask], depth + 1)
        node.right = build(idx[~mask], depth + 1)
        return node

    return build(np.arange(len(y)), 0)


def cart_predict(tree: TreeNode, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    out = np.empty(len(x), dtype=np.int64)
    for i, row in enumerate(x):
        node = tree
        while not node.is_leaf:
            node = node.left if row[node.feature] <= node.threshold else node.right
        out[i] = node.prediction
    return out


def ymrzl(ms: MultiSample, rng) -> float:
    """Held-out classification error of a CART trained on sample membership."""
    if ms.total_n < 10:
        raise UnsupportedConfigError("ymrzl needs at least ten points")
    z, labels = pool(ms)
    train, test = _stratified_split(labels, rng)
    if len(test) == 0:
        raise UnsupportedConfigError("empty test split")
    if len(np.unique(labels[train])) < ms.k:
        raise UnsupportedConfigError("a class is missing from the training split")
    tree = cart_fit(z.values[train], labels[train], max_depth=10, min_leaf=5)
    preds = cart_predict(tree, z.values[test])
    return float((preds != labels[test]).mean())


def diproperm(ms: MultiSample, univariate: str = "md"):
    """Two-sample statistic of the pooled data projected onto the
    mean-difference direction.  Returns (value, flags)."""
    if ms.k != 2:
        raise UnsupportedConfigError("diproperm is two-sample only")
    x1 = ms.samples[0].values
    x2 = ms.samples[1].values
    w = x2.mean(axis=0) - x1.mean(axis=0)
    norm = float(np.linalg.norm(w))
    if norm == 0.0:
        return 0.0, (ZERO_DIRECTION_FLAG,)
    w = w / norm
    p1 = x1 @ w
    p2 = x2 @ w
    if univariate == "md":
        return float(p2.mean() - p1.mean()), ()
    if univariate == "t":
        n1, n2 = len(p1), len(p2)
        sp2 = (((p1 - p1.mean()) ** 2).sum()
               + ((p2 - p2.mean()) ** 2).sum()) / (n1 + n2 - 2)
        if sp2 <= 0:
            return 0.0, (ZERO_DIRECTION_FLAG,)
        return float((p2.mean() - p1.mean())
                     / math.sqrt(sp2 * (1 / n1 + 1 / n2))), ()
    if univariate == "auc":
        n1, n2 = len(p1), len(p2)
        ranks = rankdata(np.concatenate([p1, p2]))
        u = ranks[n1:].sum() - n2 * (n2 + 1) / 2.0
        return float(u / (n1 * n2)), ()
    raise ValueError(f"unknown univariate statistic {univariate!r}")
