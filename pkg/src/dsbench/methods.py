"""Method registry: every statistic under a canonical id with its
extremeness direction, evaluated against a per-repetition context that
caches the shared heavy structures (distance matrix, graphs, matching,
Gram and MADD matrices)."""

from __future__ import annotations

import zlib
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import clusterstats, graphstats, interpoint, kernelstats
from .core import (DISSIMILARITY, SIMILARITY, MultiSample, StatValue, pool)
from .core import distance_matrix as _distance_matrix
from .graphs import Graph, Matching, kmst, knn_graph, min_weight_matching


class Context:
    """Per-repetition cache of structures shared between methods."""

    def __init__(self, ms: MultiSample, seed: int = 0):
        self.ms = ms
        self.seed = seed
        pooled, labels = pool(ms)
        self.pooled = pooled
        self.labels = labels
        self._dist = None
        self._graphs: dict = {}
        self._moments: dict = {}
        self._matching: Matching | None = None
        self._gram = None
        self._madd: dict = {}

    @property
    def dist(self) -> np.ndarray:
        if self._dist is None:
            self._dist = _distance_matrix(self.pooled)
        return self._dist

    def graph(self, spec: str) -> Graph:
        """'1mst', '5mst', '1nn', '5nn', 'heuristic_nn', or 'mst'."""
        if spec not in self._graphs:
            n = self.ms.total_n
            if spec == "mst":
                g = kmst(self.dist, 1)
            elif spec == "heuristic_nn":
                k = min(max(1, round(0.1 * n)), n - 1)
                g = knn_graph(self.dist, k)
            elif spec.endswith("mst"):
                g = kmst(self.dist, int(spec[:-3]))
            elif spec.endswith("nn"):
                g = knn_graph(self.dist, min(int(spec[:-2]), n - 1))
            else:
                raise ValueError(f"unknown graph spec {spec!r}")
            self._graphs[spec] = g
        return self._graphs[spec]

    def graph_moments(self, spec: str):
        if spec not in self._moments:
            g = self.graph(spec)
            self._moments[spec] = graphstats.null_moments(g, self.ms.sizes)
        return self._moments[spec]

    @property
    def matching(self) -> Matching:
        if self._matching is None:
            self._matching = min_weight_matching(self.dist)
        return self._matching

    @property
    def gram(self) -> kernelstats.GramMatrix:
        if self._gram is None:
            self._gram = kernelstats.gram(self.dist)
        return self._gram

    def madd(self, cfg: clusterstats.MaddConfig) -> np.ndarray:
        key = (cfg.psi, cfg.h)
        if key not in self._madd:
            self._madd[key] = clusterstats.madd(self.pooled.values, cfg)
        return self._madd[key]

    def method_rng(self, method_id: str):
        """Deterministic per-(repetition, method) generator."""
        tag = zlib.crc32(method_id.encode())
        ss = np.random.SeedSequence(self.seed, spawn_key=(tag,))
        return np.random.default_rng(ss)


@dataclass(frozen=True)
class Method:
    method_id: str
    direction: str
    fn: Callable[[Context], float | tuple]
    min_k: int = 2
    max_k: int = 2

    def applicable(self, k: int) -> bool:
        return self.min_k <= k <= self.max_k


REGISTRY: dict[str, Method] = {}


def _register(method_id, direction, fn, min_k=2, max_k=2):
    if method_id in REGISTRY:
        raise ValueError(f"duplicate method id {method_id!r}")
    REGISTRY[method_id] = Method(method_id, direction, fn, min_k, max_k)


def evaluate(method_id: str, ctx: Context) -> StatValue:
    """Evaluate one method, capturing computational errors as flagged
    missing values instead of raising."""
    method = REGISTRY[method_id]
    if not method.applicable(ctx.ms.k):
        return StatValue(method_id, float("nan"), method.direction,
                         error=f"not applicable for k={ctx.ms.k}")
    try:
        result = method.fn(ctx)
    except Exception as exc:  # captured per repetition, never fatal
        return StatValue(method_id, float("nan"), method.direction,
                         error=f"{type(exc).__name__}: {exc}")
    if isinstance(result, tuple):
        value, flags = result
    else:
        value, flags = result, ()
    if not np.isfinite(value):
        return StatValue(method_id, float("nan"), method.direction,
                         error="non-finite statistic", flags=tuple(flags))
    return StatValue(method_id, float(value), method.direction,
                     flags=tuple(flags))


def evaluate_all(method_ids, ctx: Context) -> list[StatValue]:
    return [evaluate(mid, ctx) for mid in method_ids]


# ---------------------------------------------------------------------------
# registrations

_register("energy", DISSIMILARITY,
          lambda c: interpoint.energy(c.ms, c.dist), max_k=99)

for _kind in ("log", "fraca", "fracb"):
    _register(f"bf_{_kind}", DISSIMILARITY,
              lambda c, kind=_kind: interpoint.bf_statistic(c.ms, c.dist, kind))
_register("bahr", DISSIMILARITY,
          lambda c: interpoint.bf_statistic(c.ms, c.dist, "bahr"))

_register("bg2", DISSIMILARITY, lambda c: interpoint.bg2(c.ms, c.dist))

for _v in ("f", "b"):
    for _a in (0.5, 1.0, 1.5):
        def _disco_fn(c, v=_v, a=_a):
            r = interpoint.disco(c.ms, c.dist, a)
            return r.f_stat if v == "f" else r.between
        _register(f"disco_{_v}_{_a:g}", DISSIMILARITY, _disco_fn, max_k=99)

_register("ds", DISSIMILARITY,
          lambda c: interpoint.ds_rank_energy(c.ms, c.pooled.values))
_register("wasserstein", DISSIMILARITY,
          lambda c: interpoint.wasserstein1(c.ms, c.dist))
_register("ball", DISSIMILARITY,
          lambda c: interpoint.ball_divergence(c.ms, c.dist), max_k=99)
_register("lhz", DISSIMILARITY, lambda c: interpoint.lhz(c.ms))
_register("engineer", DISSIMILARITY,
          lambda c: interpoint.engineer_metric(c.ms))

for _e in (0.5, 0.8, 0.9):
    _register(f"bg_{_e:g}", DISSIMILARITY,
              lambda c, e=_e: interpoint.bg_partition(c.ms, e))

for _g in ("1mst", "5mst", "1nn", "5nn"):
    _register(f"fr_{_g}", SIMILARITY,
              lambda c, g=_g: graphstats.edgecount_test(
                  c.graph(g), c.labels, c.ms.sizes, "fr",
                  moments=c.graph_moments(g)))
    _register(f"cf_{_g}", DISSIMILARITY,
              lambda c, g=_g: graphstats.edgecount_test(
                  c.graph(g), c.labels, c.ms.sizes, "cf",
                  moments=c.graph_moments(g)))
    _register(f"ccs_{_g}", DISSIMILARITY,
              lambda c, g=_g: graphstats.edgecount_test(
                  c.graph(g), c.labels, c.ms.sizes, "ccs",
                  moments=c.graph_moments(g)))
    for _kap in (1.0, 1.14, 1.31):
        _register(f"zc_{_g}_k{_kap:g}", DISSIMILARITY,
                  lambda c, g=_g, kap=_kap: graphstats.edgecount_test(
                      c.graph(g), c.labels, c.ms.sizes, "zc", kappa=kap,
                      moments=c.graph_moments(g)))

for _g in ("1mst", "5mst"):
    for _v in ("s", "sa"):
        _register(f"sc_{_g}_{_v}", DISSIMILARITY,
                  lambda c, g=_g, v=_v: graphstats.sc_test(
                      c.graph(g), c.labels, c.ms.sizes, v,
                      moments=c.graph_moments(g)), max_k=99)

for _k in (1, 5):
    _register(f"sh_{_k}nn", DISSIMILARITY,
              lambda c, k=_k: graphstats.sh_statistic(
                  c.dist, c.labels, c.ms.sizes, min(k, c.ms.total_n - 1)))
_register("bqs", DISSIMILARITY,
          lambda c: graphstats.bqs_statistic(c.dist, c.labels, c.ms.sizes))

_register("rosenbaum", SIMILARITY,
          lambda c: graphstats.rosenbaum_statistic(
              c.matching, c.labels, c.ms.sizes))
_register("petrie", SIMILARITY,
          lambda c: graphstats.petrie_statistic(
              c.matching, c.labels, c.ms.sizes, c.ms.total_n), max_k=99)
_register("mmcm", DISSIMILARITY,
          lambda c: graphstats.mmcm_statistic(
              c.matching, c.labels, c.ms.sizes, c.ms.total_n), max_k=4)

for _g in ("1nn", "5nn", "heuristic_nn", "mst"):
    _register(f"kmd_{_g}", DISSIMILARITY,
              lambda c, g=_g: graphstats.kmd_statistic(
                  c.graph(g), c.labels, c.ms.sizes), max_k=99)

_register("mmd", DISSIMILARITY,
          lambda c: kernelstats.mmd_ustat(c.gram, c.ms.sizes))
_register("blockmmd", DISSIMILARITY,
          lambda c: kernelstats.block_mmd(c.ms, c.gram))
for _v in ("gpk", "zd", "zw1", "zw2"):
    _register("gpk" if _v == "gpk" else f"gpk_{_v}", DISSIMILARITY,
              lambda c, v=_v: kernelstats.gpk_statistic(c.gram, c.ms.sizes, v))

# Clustering tests: the discordance statistics (RI family) point down under
# alternatives (perfect clustering gives zero), so they carry the
# similarity direction; the FS family points up.
_FS_DIR = {"fs": DISSIMILARITY, "mfs": DISSIMILARITY, "msfs": DISSIMILARITY,
           "afs": DISSIMILARITY, "ri": SIMILARITY, "mri": SIMILARITY,
           "msri": SIMILARITY, "ari": SIMILARITY}


def _fsri_fn(variant, psi, h, ms_clusters=None):
    cfg = clusterstats.MaddConfig(psi, h)

    def fn(c, variant=variant, cfg=cfg, ms_clusters=ms_clusters):
        rng = c.method_rng(f"{variant}_{cfg.psi}_{cfg.h}_{ms_clusters}")
        return clusterstats.fs_ri_statistic(c.ms, cfg, variant, rng,
                                            ms_clusters=ms_clusters)
    return fn


for _variant in ("fs", "ri", "mfs", "mri"):
    for _psi in clusterstats.PSI_KINDS:
        for _hh in clusterstats.H_KINDS:
            _register(f"{_variant}_{_psi}_{_hh}", _FS_DIR[_variant],
                      _fsri_fn(_variant, _psi, _hh), max_k=99)

for _variant in ("msfs", "msri"):
    for _psi in ("psi2", "psi3"):
        for _hh in clusterstats.H_KINDS:
            for _kp in (1, 2, 3, 4, 5, 6, 7):
                _register(f"{_variant}_{_psi}_{_hh}_k{_kp}",
                          _FS_DIR[_variant],
                          _fsri_fn(_variant, _psi, _hh, ms_clusters=_kp + 1),
                          min_k=4, max_k=99)

for _variant in ("afs", "ari"):
    for _mode in ("knw", "est"):
        for _psi in ("psi2", "psi3"):
            for _hh in ("h1",):
                _register(f"{_variant}_{_mode}_{_psi}_{_hh}",
                          _FS_DIR[_variant],
                          _fsri_fn(f"{_variant}_{_mode}", _psi, _hh),
                          min_k=3, max_k=99)

_register("c2st_knn", DISSIMILARITY,
          lambda c: clusterstats.c2st_knn(c.ms, c.method_rng("c2st_knn")),
          max_k=99)
_register("ymrzl", SIMILARITY,
          lambda c: clusterstats.ymrzl(c.ms, c.method_rng("ymrzl")))
for _u in ("md", "t", "auc"):
    _register(f"diproperm_{_u}", DISSIMILARITY,
              lambda c, u=_u: clusterstats.diproperm(c.ms, u))


# Curated default method sets: one entry per method family and
# pre-selected variant, mirroring the study's choices.
DEFAULT_TWO_SAMPLE = (
    "energy", "bf_log", "bf_fraca", "bf_fracb", "bahr", "bg2",
    "disco_f_0.5", "disco_b_0.5", "ds", "wasserstein", "ball", "lhz",
    "engineer", "bg_0.8",
    "fr_1mst", "fr_5mst", "cf_5mst", "ccs_5mst",
    "zc_5mst_k1", "zc_5mst_k1.31",
    "sc_5mst_s", "sc_5mst_sa",
    "sh_1nn", "sh_5nn", "bqs",
    "rosenbaum", "petrie", "mmcm",
    "kmd_heuristic_nn", "kmd_mst",
    "mmd", "blockmmd", "gpk", "gpk_zd", "gpk_zw1", "gpk_zw2",
    "fs_psi2_h1", "fs_psi3_h1", "mfs_psi3_h1", "ri_psi2_h1", "mri_psi2_h1",
    "c2st_knn", "ymrzl", "diproperm_md", "diproperm_t", "diproperm_auc",
)

DEFAULT_FOUR_SAMPLE = (
    "energy", "disco_f_0.5", "disco_b_0.5", "ball",
    "sc_5mst_s", "sc_5mst_sa", "petrie", "mmcm",
    "kmd_heuristic_nn", "kmd_mst",
    "fs_psi2_h1", "fs_psi3_h1", "mfs_psi3_h1", "ri_psi2_h1", "mri_psi2_h1",
    "msfs_psi3_h1_k4", "msri_psi3_h2_k7",
    "afs_knw_psi2_h1", "ari_knw_psi2_h1",
    "c2st_knn",
)


def default_methods(k: int) -> tuple[str, ...]:
    if k == 2:
        return DEFAULT_TWO_SAMPLE
    return DEFAULT_FOUR_SAMPLE
