"""Command-line entry point: config-driven runs, studies, theory checks.

Exit codes: 0 success, 1 runtime failure, 2 config/usage error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import artifacts, boundary, theory
from .config import ConfigError, RunConfig, load_config
from .curriculum import CurriculumResult, run_curriculum, run_vanilla_pl
from .experiments import (run_label_sweep, run_overlap_study,
                          run_reinit_ablation, run_threshold_ablation)
from .nn import DivergenceError, save_checkpoint

STUDIES = ("overlap", "label-sweep", "threshold-ablation", "reinit-ablation")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cl", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    train = sub.add_parser("train", help="run one curriculum or fixed-threshold training")
    study = sub.add_parser("study", help="run a comparative study")
    study.add_argument("name", choices=STUDIES)
    for p in (train, study):
        p.add_argument("--config", required=True, help="TOML run config")
        p.add_argument("--seed", type=int, default=None, help="override the config seed")
        p.add_argument("--out", default=None, help="override the output directory")
        p.add_argument("--jobs", type=int, default=1, help="parallel study cells (default 1)")

    check = sub.add_parser("theory-check", help="verify the pacing-utility identities")
    check.add_argument("--draws", type=int, default=1000)
    check.add_argument("--seed", type=int, default=20260401)
    check.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    return parser


def _prepare(args) -> tuple[RunConfig, Path, str]:
    cfg = load_config(args.config).with_overrides(seed=args.seed, out_dir=args.out)
    run_hash = artifacts.config_hash(cfg.canonical_text(include_out_dir=False))
    kind = "train" if args.command == "train" else args.name
    out = Path(cfg.out_dir) / kind / run_hash
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.toml").write_text(cfg.canonical_text(), encoding="utf-8")
    return cfg, out, run_hash


def _export_round_svgs(cfg: RunConfig, out: Path, split, result: CurriculumResult) -> None:
    if split.labeled.n_features != 2:
        print("note: boundary export skipped (data is not 2-D)")
        return
    res = cfg.get("curriculum", "boundary_resolution")
    all_points = np.concatenate([split.labeled.features, split.unlabeled.features,
                                 split.test.features])
    bounds = boundary.data_bounds(all_points)
    models = [(0, result.baseline_params, None)]
    id_to_row = {int(s): i for i, s in enumerate(split.unlabeled.sample_ids)}
    for rec, params in zip(result.records, result.round_params or []):
        rows = np.asarray([id_to_row[int(s)] for s in rec.selected_ids], dtype=np.int64)
        pseudo = (split.unlabeled.features[rows],
                  np.asarray([p.predicted_class for p in rec.pseudo_labels]))
        models.append((rec.round_index, params, pseudo))
    for round_index, params, pseudo in models:
        if params is None:
            continue
        boundary.export_boundary_svg(
            out / f"round_{round_index}.svg", params, bounds, resolution=res,
            labeled=(split.labeled.features, split.labeled.labels),
            unlabeled=split.unlabeled.features,
            pseudo_labeled=pseudo if pseudo and len(pseudo[0]) else None,
            title=f"round {round_index}")


def cmd_train(args) -> int:
    cfg, out, run_hash = _prepare(args)
    split = cfg.build_split()
    ccfg = cfg.curriculum_config()
    want_rounds = (cfg.get("curriculum", "export_boundary")
                   or cfg.get("curriculum", "keep_checkpoints"))
    if cfg.get("pacing", "mode") == "percentile":
        result = run_curriculum(split, ccfg, keep_round_params=want_rounds)
    else:
        result = run_vanilla_pl(split, ccfg, cfg.get("pacing", "fixed_threshold"),
                                n_rounds=cfg.get("pacing", "rounds"),
                                keep_round_params=want_rounds)

    artifacts.write_jsonl(out / "trace.jsonl", artifacts.curriculum_trace(result))
    (out / "table.txt").write_text(artifacts.curriculum_table(result), encoding="utf-8")
    save_checkpoint(out / "checkpoint.json", result.final_params, config_hash=run_hash)
    if cfg.get("curriculum", "keep_checkpoints") and result.round_params is not None:
        for rec, params in zip(result.records, result.round_params):
            save_checkpoint(out / f"checkpoint_round_{rec.round_index}.json", params,
                            config_hash=run_hash)
    if cfg.get("curriculum", "export_boundary"):
        _export_round_svgs(cfg, out, split, result)
    print(f"run {run_hash}: final test error {result.final_test_error:.4f} -> {out}")
    return 0


def cmd_study(args) -> int:
    cfg, out, run_hash = _prepare(args)
    setup = cfg.study_setup()
    n_seeds = cfg.get("study", "seeds")
    seeds = [cfg.seed + i for i in range(n_seeds)]
    jobs = max(1, args.jobs)

    if args.name == "overlap":
        result = run_overlap_study(cfg.overlap_spec(), setup, seeds,
                                   grid=tuple(cfg.get("study", "mismatch_grid")), jobs=jobs)
    elif args.name == "label-sweep":
        result = run_label_sweep(cfg.sweep_spec(), cfg.moons_spec(), setup, jobs=jobs)
    elif args.name == "threshold-ablation":
        result = run_threshold_ablation(cfg.moons_spec(), setup, seeds,
                                        thresholds=tuple(cfg.get("study", "thresholds")),
                                        jobs=jobs)
    else:
        result = run_reinit_ablation(cfg.moons_spec(), setup, seeds, jobs=jobs)

    artifacts.write_jsonl(out / "trace.jsonl", result.cells)
    table = artifacts.summary_table(result.summary)
    if result.findings:
        table += "\n" + artifacts.findings_text(result.findings)
    (out / "table.txt").write_text(table, encoding="utf-8")
    print(f"study {args.name} ({run_hash}) -> {out}")
    for key, value in result.findings.items():
        print(f"  {key} = {value}")
    return 0


def cmd_theory_check(args) -> int:
    results = theory.run_theory_checks(draws=args.draws, seed=args.seed,
                                       inject_fault=args.inject_fault)
    all_ok = True
    for res in results:
        status = "PASS" if res.passed else "FAIL"
        print(f"{res.name}: {status} ({res.detail})")
        all_ok &= res.passed
    return 0 if all_ok else 1


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "train":
            return cmd_train(args)
        if args.command == "study":
            return cmd_study(args)
        return cmd_theory_check(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DivergenceError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
