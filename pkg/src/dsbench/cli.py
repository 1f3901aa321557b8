"""Command-line front end: simulate / report / bench subcommands."""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .datagen import ConfigError, ScenarioSpec
from .harness import (MissingNullError, ScenarioResult, acceptable, bench,
                      choice_tree, greedy_cover, mean_diff_to_ideal,
                      overall_mean_diff, pesr_table, run_scenario,
                      scale_bench)
from .methods import REGISTRY

_GROUP_FIELDS = ("dgp", "deviation", "n", "p", "balance", "grouping",
                 "with_target", "k")


def _fmt(x) -> str:
    if x is None:
        return "NA"
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _load_config(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def _check_methods(methods) -> None:
    for mid in methods:
        if mid not in REGISTRY:
            raise ConfigError(f"unknown method id {mid!r}")


def cmd_simulate(args) -> int:
    config = _load_config(args.config)
    methods = tuple(config["methods"])
    _check_methods(methods)
    reps = int(args.reps if args.reps is not None else config.get("reps", 500))
    specs = [ScenarioSpec.from_dict(d) for d in config["scenarios"]]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"seed": args.seed, "reps": reps, "methods": list(methods),
                "scenarios": []}
    for index, spec in enumerate(specs):
        result = run_scenario(spec, methods, reps, args.seed,
                              scenario_index=index, jobs=args.jobs)
        fname = f"scenario_{index:04d}.csv"
        rows = []
        for rep in range(reps):
            for m, mid in enumerate(methods):
                err = result.errors[rep][m]
                value = None if err else float(result.values[rep, m])
                rows.append((rep, mid, value, err))
        _write_csv(out / fname, ("repetition", "method", "value", "error"),
                   rows)
        manifest["scenarios"].append(
            {"index": index, "id": spec.scenario_id, "file": fname,
             "spec": spec.to_dict()})
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def _load_results(dump_dir: Path):
    with open(dump_dir / "manifest.json", "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    methods = tuple(manifest["methods"])
    results = []
    for entry in manifest["scenarios"]:
        spec = ScenarioSpec.from_dict(entry["spec"])
        reps = manifest["reps"]
        values = np.full((reps, len(methods)), np.nan)
        errors = [[""] * len(methods) for _ in range(reps)]
        with open(dump_dir / entry["file"], "r", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            next(reader)
            for rep_s, mid, value, err in reader:
                rep = int(rep_s)
                m = methods.index(mid)
                if value != "NA":
                    values[rep, m] = float(value)
                errors[rep][m] = err
        results.append(ScenarioResult(
            spec=spec, scenario_index=entry["index"], methods=methods,
            values=values, errors=tuple(tuple(e) for e in errors)))
    return results


def _group_row(group: tuple) -> tuple:
    return group  # (dgp, deviation, n, p, balance, grouping, with_target, k)


def cmd_report(args) -> int:
    dump_dir = Path(args.dump)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results = _load_results(dump_dir)
    try:
        rows = pesr_table(results)
    except MissingNullError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    pesr_rows = []
    for row in rows:
        s = row.spec
        pesr_rows.append((s.scenario_id, s.dgp, s.deviation, s.magnitude,
                          s.n_total, s.p, s.balance, s.grouping,
                          int(s.with_target), s.k, row.method, row.value))
    _write_csv(out / "pesr.csv",
               ("scenario_id", "dgp", "deviation", "magnitude", "n", "p",
                "balance", "grouping", "with_target", "k", "method", "pesr"),
               pesr_rows)
    if not rows:
        print("warning: no alternative scenarios in dump; "
              "only pesr.csv was written", file=sys.stderr)
        for name in ("meandiff.csv", "acceptable.csv"):
            _write_csv(out / name, _GROUP_FIELDS + ("method", name[:-4]), [])
        for name, payload in (("cover.json", []), ("tree.json", None)):
            with open(out / name, "w", encoding="utf-8") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        return 0
    diffs = mean_diff_to_ideal(rows)
    _write_csv(out / "meandiff.csv",
               _GROUP_FIELDS + ("method", "mean_diff"),
               [(*_group_row(d.group), d.method, d.mean_diff) for d in diffs])
    cover = acceptable(diffs)
    _write_csv(out / "acceptable.csv",
               _GROUP_FIELDS + ("method", "acceptable"),
               [(*_group_row(g), m, int(ok))
                for (g, m), ok in sorted(cover.items())])
    tie = overall_mean_diff(diffs)
    order = greedy_cover(cover, tie)
    with open(out / "cover.json", "w", encoding="utf-8") as fh:
        json.dump([{"method": m, "new_groups": g, "cumulative_coverage": c}
                   for m, g, c in order], fh, indent=2, sort_keys=True)
        fh.write("\n")
    tree = choice_tree(cover, tie)
    with open(out / "tree.json", "w", encoding="utf-8") as fh:
        json.dump(tree, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def cmd_bench(args) -> int:
    config = _load_config(args.config)
    methods = tuple(config["methods"])
    _check_methods(methods)
    grid = [tuple(cell) for cell in config["grid"]]
    rows = bench(methods, grid, master_seed=args.seed,
                 min_reps=int(config.get("min_reps", 10)),
                 min_total=float(config.get("min_total_s", 1.0)))
    scaled, summary = scale_bench(rows)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    csv_rows = []
    for row in sorted(rows, key=lambda r: (r.method, r.n_total, r.p)):
        csv_rows.append(("cell", row.method, row.n_total, row.p, row.runs,
                         row.median_seconds,
                         scaled[(row.method, row.n_total, row.p)]))
    for method in sorted(summary):
        csv_rows.append(("summary", method, None, None, None, None,
                         summary[method]))
    _write_csv(out / "bench.csv",
               ("record", "method", "n", "p", "runs", "median_seconds",
                "scaled"), csv_rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dsbench",
        description="dataset-similarity statistics simulation harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="run scenarios, dump statistics")
    p_sim.add_argument("--config", required=True)
    p_sim.add_argument("--seed", type=int, required=True)
    p_sim.add_argument("--out", required=True)
    p_sim.add_argument("--reps", type=int, default=None)
    p_sim.add_argument("--jobs", type=int, default=1)
    p_sim.set_defaults(func=cmd_simulate)

    p_rep = sub.add_parser("report", help="aggregate dumps into tables")
    p_rep.add_argument("--dump", required=True)
    p_rep.add_argument("--out", required=True)
    p_rep.set_defaults(func=cmd_report)

    p_bench = sub.add_parser("bench", help="runtime benchmark")
    p_bench.add_argument("--config", required=True)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--out", required=True)
    p_bench.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
