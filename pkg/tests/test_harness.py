import itertools

import numpy as np
import pytest

from dsbench.core import DISSIMILARITY, SIMILARITY
from dsbench.datagen import ScenarioSpec
from dsbench.harness import (MeanDiffRow, PesrRow, acceptable, bench,
                             choice_tree, greedy_cover, mean_diff_to_ideal,
                             pesr, pesr_table, run_scenario, scale_bench)


def spec(**kw):
    base = dict(dgp="normal", deviation="null", magnitude=0.0, n_total=20,
                p=2, balance="balanced")
    base.update(kw)
    return ScenarioSpec(**base)


class TestMonteCarloErrorBudget:
    def test_worst_case_proportion_se_at_500_reps(self):
        assert abs(np.sqrt(0.25 / 500) - 0.0224) < 5e-4

    def test_null_rate_se_at_500_reps(self):
        assert abs(np.sqrt(0.05 * 0.95 / 500) - 0.01) < 3e-4


class TestPesr:
    def test_null_vs_null_near_alpha(self):
        rng = np.random.default_rng(0)
        vals = [pesr(rng.normal(size=500), rng.normal(size=500),
                     DISSIMILARITY) for _ in range(20)]
        assert 0.02 < np.mean(vals) < 0.08

    def test_all_alt_beyond_threshold(self):
        null = np.linspace(0, 1, 500)
        alt = np.full(500, 5.0)
        assert pesr(null, alt, DISSIMILARITY) == 1.0

    def test_similarity_uses_low_tail(self):
        null = np.linspace(0, 1, 500)
        assert pesr(null, np.full(500, -1.0), SIMILARITY) == 1.0
        assert pesr(null, np.full(500, 2.0), SIMILARITY) == 0.0

    def test_missing_rule_alt(self):
        null = np.linspace(0, 1, 500)
        alt = np.full(500, 5.0)
        alt[:101] = np.nan
        assert pesr(null, alt, DISSIMILARITY) is None
        alt[:100] = 5.0  # exactly 100 invalid is still allowed
        alt[100] = np.nan
        assert pesr(null, alt, DISSIMILARITY) is not None

    def test_missing_rule_null(self):
        null = np.linspace(0, 1, 500)
        null[:150] = np.nan
        assert pesr(null, np.full(500, 5.0), DISSIMILARITY) is None

    def test_ties_not_extreme(self):
        null = np.full(500, 3.0)
        alt = np.full(500, 3.0)
        assert pesr(null, alt, DISSIMILARITY) == 0.0
        assert pesr(null, alt, SIMILARITY) == 0.0


def rowset(values_by_magnitude):
    """values_by_magnitude: {magnitude: {method: pesr}}"""
    rows = []
    for mag, by_method in values_by_magnitude.items():
        s = spec(deviation="shift", magnitude=mag)
        for method, value in by_method.items():
            rows.append(PesrRow(s, method, value))
    return rows


class TestMeanDiff:
    def test_worked_example(self):
        rows = rowset({0.5: {"m1": 0.9, "m2": 0.7},
                       1.0: {"m1": 0.8, "m2": 0.9}})
        diffs = {r.method: r.mean_diff for r in mean_diff_to_ideal(rows)}
        assert abs(diffs["m1"] - 0.05) < 1e-12
        assert abs(diffs["m2"] - 0.10) < 1e-12

    def test_single_method_diff_zero(self):
        rows = rowset({0.5: {"m1": 0.4}, 1.0: {"m1": 0.9}})
        diffs = mean_diff_to_ideal(rows)
        assert all(r.mean_diff == 0.0 for r in diffs)

    def test_missing_cell_penalized(self):
        by_mag = {m: {"m1": 0.5, "m2": 0.5} for m in
                  (0.1, 0.25, 0.5, 0.75, 1.0, 1.5)}
        by_mag[0.1] = {"m1": 0.5, "m2": None}
        diffs = {r.method: r.mean_diff for r in
                 mean_diff_to_ideal(rowset(by_mag))}
        assert abs(diffs["m2"] - 1.0 / 6.0) < 1e-12
        assert diffs["m1"] == 0.0


class TestAcceptable:
    def test_cutoff_example(self):
        rows = [MeanDiffRow(("g",), "a", 0.02),
                MeanDiffRow(("g",), "b", 0.12),
                MeanDiffRow(("g",), "c", 0.13)]
        cov = acceptable(rows)
        assert cov[(("g",), "a")] and cov[(("g",), "b")]
        assert not cov[(("g",), "c")]

    def test_unique_best_with_gap(self):
        rows = [MeanDiffRow(("g",), "a", 0.0),
                MeanDiffRow(("g",), "b", 0.5)]
        cov = acceptable(rows)
        assert cov[(("g",), "a")] and not cov[(("g",), "b")]

    def test_tied_best_both_acceptable(self):
        rows = [MeanDiffRow(("g",), "a", 0.3),
                MeanDiffRow(("g",), "b", 0.3)]
        cov = acceptable(rows)
        assert cov[(("g",), "a")] and cov[(("g",), "b")]


class TestGreedyCover:
    def test_worked_example(self):
        cover = {}
        sets = {"a": {1, 2, 3}, "b": {3, 4}, "c": {4}}
        for method, covered in sets.items():
            for g in (1, 2, 3, 4):
                cover[(g, method)] = g in covered
        order = greedy_cover(cover)
        assert [m for m, _, _ in order] == ["a", "b"]
        assert order[-1][2] == 1.0

    def test_tie_broken_by_mean_diff(self):
        cover = {}
        for g in (1, 2):
            cover[(g, "x")] = g == 1
            cover[(g, "y")] = g == 2
        order = greedy_cover(cover, tie_break={"x": 0.9, "y": 0.1})
        assert order[0][0] == "y"

    def test_cumulative_nondecreasing(self):
        rng = np.random.default_rng(1)
        cover = {(g, f"m{m}"): bool(rng.random() < 0.3)
                 for g in range(30) for m in range(8)}
        order = greedy_cover(cover)
        fracs = [c for _, _, c in order]
        assert all(a <= b for a, b in zip(fracs, fracs[1:]))

    def test_approximation_guarantee_small(self):
        rng = np.random.default_rng(2)
        for _ in range(10):
            cover = {(g, f"m{m}"): bool(rng.random() < 0.25)
                     for g in range(20) for m in range(6)}
            order = greedy_cover(cover)
            for t in (1, 2, 3):
                greedy_cov = order[t - 1][2] if len(order) >= t else \
                    (order[-1][2] if order else 0.0)
                best = 0
                for combo in itertools.combinations(range(6), t):
                    got = sum(1 for g in range(20)
                              if any(cover[(g, f"m{m}")] for m in combo))
                    best = max(best, got)
                assert greedy_cov >= (1 - 1 / np.e) * best / 20 - 1e-12


class TestPipelineInvariants:
    def test_ideal_dominates_and_one_method_acceptable(self):
        rng = np.random.default_rng(7)
        by_mag = {m: {f"m{j}": float(rng.random()) for j in range(5)}
                  for m in (0.1, 0.5, 1.0)}
        rows = rowset(by_mag)
        diffs = mean_diff_to_ideal(rows)
        by_group = {}
        for r in diffs:
            by_group.setdefault(r.group, []).append(r.mean_diff)
        for vals in by_group.values():
            assert min(vals) >= 0.0
        cov = acceptable(diffs)
        groups = {g for g, _ in cov}
        for g in groups:
            assert any(cov[(g, f"m{j}")] for j in range(5))

    def test_greedy_reaches_one_when_union_covers(self):
        rng = np.random.default_rng(8)
        cover = {(g, f"m{m}"): bool(rng.random() < 0.4)
                 for g in range(25) for m in range(6)}
        for g in range(25):  # patch union coverage
            if not any(cover[(g, f"m{m}")] for m in range(6)):
                cover[(g, "m0")] = True
        order = greedy_cover(cover)
        assert order[-1][2] == 1.0


class TestChoiceTree:
    def _cover(self, best_by_cell):
        cover = {}
        for (n, p, bal), best in best_by_cell.items():
            for dev in ("shift", "scale"):
                group = ("normal", dev, n, p, bal, "1+1", False, 2)
                for m in ("m1", "m2"):
                    cover[(group, m)] = m == best
        return cover

    def test_single_method_single_leaf(self):
        cover = self._cover({(50, 2, "balanced"): "m1",
                             (100, 2, "balanced"): "m1"})
        tree = choice_tree(cover)
        assert tree["method"] == "m1"
        assert 0.0 <= tree["coverage"] <= 1.0

    def test_split_on_p_when_best_flips(self):
        cover = self._cover({(100, 2, "balanced"): "m1",
                             (100, 50, "balanced"): "m2"})
        tree = choice_tree(cover)
        assert tree["feature"] == "p"
        leaves = {tree["left"]["method"], tree["right"]["method"]}
        assert leaves == {"m1", "m2"}

    def test_leaf_coverages_in_unit_interval(self):
        rng = np.random.default_rng(3)
        cells = {(n, p, bal): rng.choice(["m1", "m2"])
                 for n in (50, 100) for p in (2, 10)
                 for bal in ("balanced", "unbalanced")}
        tree = choice_tree(self._cover(cells))

        def walk(node):
            if "method" in node:
                assert 0.0 <= node["coverage"] <= 1.0
                return
            walk(node["left"])
            walk(node["right"])

        walk(tree)


class TestRunScenario:
    def test_values_shape_and_determinism(self):
        s = spec(n_total=30)
        r1 = run_scenario(s, ("energy", "mmd"), 8, 99, scenario_index=3)
        r2 = run_scenario(s, ("energy", "mmd"), 8, 99, scenario_index=3)
        assert r1.values.shape == (8, 2)
        assert (r1.values == r2.values).all()

    def test_parallel_matches_serial(self):
        s = spec(n_total=30)
        r1 = run_scenario(s, ("energy", "sh_1nn"), 8, 5, scenario_index=1)
        r2 = run_scenario(s, ("energy", "sh_1nn"), 8, 5, scenario_index=1,
                          jobs=2)
        assert (r1.values == r2.values).all()

    def test_failing_method_isolated(self):
        s = spec(n_total=30, balance="unbalanced")  # 6 / 24 split
        r = run_scenario(s, ("wasserstein", "energy"), 5, 1)
        assert all(err[0] for err in r.errors)          # wasserstein fails
        assert np.isfinite(r.values[:, 1]).all()        # energy unaffected

    def test_unknown_method_rejected(self):
        with pytest.raises(KeyError):
            run_scenario(spec(), ("no_such_method",), 2, 0)


class TestPesrTable:
    def test_requires_matching_null(self):
        s = spec(deviation="shift", magnitude=1.0)
        res = run_scenario(s, ("energy",), 5, 2)
        from dsbench.harness import MissingNullError
        with pytest.raises(MissingNullError):
            pesr_table([res])

    def test_null_and_alt_produce_rows(self):
        null = run_scenario(spec(), ("energy",), 30, 3, scenario_index=0)
        alt = run_scenario(spec(deviation="shift", magnitude=2.0),
                           ("energy",), 30, 3, scenario_index=1)
        rows = pesr_table([null, alt])
        assert len(rows) == 1
        assert rows[0].value is not None and rows[0].value > 0.5


class TestBench:
    def test_contract_and_scaling(self):
        rows = bench(("engineer", "energy"), [(30, 2)], master_seed=0,
                     min_reps=10, min_total=0.05)
        assert all(r.runs >= 10 for r in rows)
        by_method = {r.method: r for r in rows}
        assert set(by_method) == {"energy", "engineer"}
        scaled, summary = scale_bench(rows)
        values = sorted(scaled.values())
        assert values[0] == 0.0 and values[-1] == 1.0
        assert set(summary) == {"energy", "engineer"}

    def test_single_method_scales_to_zero(self):
        rows = bench(("engineer",), [(20, 2)], master_seed=0, min_reps=3,
                     min_total=0.0)
        scaled, summary = scale_bench(rows)
        assert set(scaled.values()) == {0.0}
        assert summary["engineer"] == 0.0

    def test_min_total_enforced(self):
        rows = bench(("engineer",), [(20, 2)], master_seed=0, min_reps=3,
                     min_total=0.2)
        row = rows[0]
        assert row.runs * row.median_seconds >= 0.05  # comfortably beyond 3
