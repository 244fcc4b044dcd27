"""Synthetic generators and the desk-scale comparative studies.

Every study runs (method, grid-point, seed) cells under paired-seed
discipline: methods compared at repetition r consume identical splits and
identical initialization seeds. Cells are pure functions, so they may be
executed in parallel and merged by key.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .curriculum import (CurriculumConfig, run_curriculum, run_supervised,
                         run_vanilla_pl)
from .data import Dataset, SslSplit, split_ssl, standardize
from .nn import TrainConfig
from .pacing import PacingSchedule, schedule_percentiles
from .rng import derive_rng

MISMATCH_GRID = (0.0, 25.0, 50.0, 75.0, 100.0)


@dataclass(frozen=True)
class TwoMoonsSpec:
    """Two interleaving half-circles with Gaussian noise."""

    n_per_moon: int = 1000
    noise: float = 0.15
    labeled_per_class: int = 6
    seed: int = 0

    def __post_init__(self):
        if self.n_per_moon < self.labeled_per_class or self.labeled_per_class < 1:
            raise ValueError("need n_per_moon >= labeled_per_class >= 1")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")


@dataclass(frozen=True)
class OverlapSpec:
    """Gaussian-blob pool with a controlled class-distribution mismatch.

    The unlabeled pool draws from n_sources classes; mismatch_percent of
    them are out-of-distribution blobs (interleaved between the
    in-distribution blobs on the same circle). Labeled/validation/test data
    come from RNG streams independent of the mismatch, so they are
    identical across the grid.
    """

    n_id_classes: int = 4
    n_ood_classes: int = 4
    n_sources: int = 4
    mismatch_percent: float = 0.0
    labeled_per_class: int = 5
    val_per_class: int = 40
    test_per_class: int = 100
    unlabeled_per_source: int = 150
    blob_std: float = 0.75
    radius: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.mismatch_percent not in MISMATCH_GRID:
            raise ValueError(f"mismatch_percent must be one of {MISMATCH_GRID}")
        if self.n_ood_sources > self.n_ood_classes:
            raise ValueError("not enough out-of-distribution classes for this mismatch")
        if self.n_sources - self.n_ood_sources > self.n_id_classes:
            raise ValueError("not enough in-distribution classes for this mismatch")

    @property
    def n_ood_sources(self) -> int:
        return round(self.n_sources * self.mismatch_percent / 100.0)


@dataclass(frozen=True)
class SweepSpec:
    """Grid of labeled-set sizes with repeated seeds per point."""

    labeled_sizes: tuple[int, ...] = (8, 16, 32, 64)
    repetitions: int = 5

    def __post_init__(self):
        sizes = self.labeled_sizes
        if not sizes or any(s <= 0 for s in sizes):
            raise ValueError("labeled sizes must be positive")
        if any(a >= b for a, b in zip(sizes, sizes[1:])):
            raise ValueError("labeled sizes must be increasing")
        if self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")


def gen_two_moons(spec: TwoMoonsSpec) -> Dataset:
    """Class 0 is the upper unit half-circle at the origin; class 1 is the
    reflected arc with apex at (1, -0.5). Gaussian noise on both coordinates."""
    n = spec.n_per_moon
    t = np.linspace(0.0, math.pi, n)
    x0 = np.stack([np.cos(t), np.sin(t)], axis=1)
    x1 = np.stack([1.0 - np.cos(t), 0.5 - np.sin(t)], axis=1)
    feats = np.concatenate([x0, x1], axis=0)
    if spec.noise > 0:
        feats = feats + derive_rng(spec.seed, "moons").normal(0.0, spec.noise, size=feats.shape)
    labels = np.concatenate([np.zeros(n, dtype=np.int64), np.ones(n, dtype=np.int64)])
    return Dataset(feats, labels, np.arange(2 * n, dtype=np.int64))


def two_moons_split(spec: TwoMoonsSpec, n_val: int, n_test: int,
                    apply_standardize: bool = True) -> SslSplit:
    ds = gen_two_moons(spec)
    split = split_ssl(ds, n_labeled=2 * spec.labeled_per_class, n_val=n_val,
                      n_test=n_test, seed=spec.seed)
    if apply_standardize:
        split, _ = standardize(split)
    return split


def _blob_means(k: int, radius: float, half_step: bool) -> np.ndarray:
    offset = 0.5 if half_step else 0.0
    angles = 2.0 * math.pi * (np.arange(k) + offset) / k
    return radius * np.stack([np.cos(angles), np.sin(angles)], axis=1)


def gen_overlap_pool(spec: OverlapSpec) -> SslSplit:
    """SSL split whose unlabeled pool mixes in- and out-of-distribution blobs.

    Pool size is constant across the mismatch grid; only its composition
    changes. Hidden truth labels are the class index for in-distribution
    samples and -1 for out-of-distribution ones.
    """
    id_means = _blob_means(spec.n_id_classes, spec.radius, half_step=False)
    ood_means = _blob_means(spec.n_ood_classes, spec.radius, half_step=True)

    def draw(rng, mean, count):
        return rng.normal(0.0, spec.blob_std, size=(count, 2)) + mean

    lab_x, lab_y, val_x, val_y, test_x, test_y = [], [], [], [], [], []
    for c in range(spec.n_id_classes):
        rng = derive_rng(spec.seed, "id-class", c)
        block = draw(rng, id_means[c], spec.labeled_per_class + spec.val_per_class
                     + spec.test_per_class)
        a, b = spec.labeled_per_class, spec.labeled_per_class + spec.val_per_class
        lab_x.append(block[:a]); val_x.append(block[a:b]); test_x.append(block[b:])
        lab_y.append(np.full(a, c)); val_y.append(np.full(spec.val_per_class, c))
        test_y.append(np.full(spec.test_per_class, c))

    k_ood = spec.n_ood_sources
    unl_x, unl_truth = [], []
    for c in range(spec.n_sources - k_ood):
        rng = derive_rng(spec.seed, "pool-id", c)
        unl_x.append(draw(rng, id_means[c], spec.unlabeled_per_source))
        unl_truth.append(np.full(spec.unlabeled_per_source, c))
    for j in range(k_ood):
        rng = derive_rng(spec.seed, "pool-ood", j)
        unl_x.append(draw(rng, ood_means[j], spec.unlabeled_per_source))
        unl_truth.append(np.full(spec.unlabeled_per_source, -1))

    def cat(parts):
        return np.concatenate(parts, axis=0)

    lab_x, val_x, test_x = cat(lab_x), cat(val_x), cat(test_x)
    unl_x = cat(unl_x)
    counts = [len(lab_x), len(unl_x), len(val_x), len(test_x)]
    starts = np.cumsum([0] + counts)
    ids = [np.arange(starts[i], starts[i + 1], dtype=np.int64) for i in range(4)]

    return SslSplit(
        labeled=Dataset(lab_x, cat(lab_y).astype(np.int64), ids[0]),
        unlabeled=Dataset(unl_x, None, ids[1]),
        validation=Dataset(val_x, cat(val_y).astype(np.int64), ids[2]),
        test=Dataset(test_x, cat(test_y).astype(np.int64), ids[3]),
        hidden_unlabeled_labels=cat(unl_truth).astype(np.int64),
    )


@dataclass(frozen=True)
class StudySetup:
    """Model/training bundle shared by every method inside one study."""

    hidden: tuple[int, ...] = (16, 16)
    train: TrainConfig = field(default_factory=TrainConfig)
    delta: float = 20.0
    n_val: int = 200
    n_test: int = 400
    apply_standardize: bool = True
    vanilla_threshold: float = 0.0

    @property
    def n_rounds(self) -> int:
        return len(schedule_percentiles(self.delta))

    def curriculum_config(self, seed: int, reinit: bool = True) -> CurriculumConfig:
        return CurriculumConfig(
            schedule=PacingSchedule(mode="percentile", delta=self.delta),
            train=self.train, hidden=tuple(self.hidden), reinit=reinit, seed=seed)


@dataclass
class StudyResult:
    study: str
    cells: list[dict]
    summary: list[dict]
    findings: dict
    table_text: str = ""


def run_cells(cell_fn, args_list: list, jobs: int = 1) -> list[dict]:
    """Evaluate study cells, optionally in parallel; order always preserved."""
    if jobs <= 1:
        return [cell_fn(a) for a in args_list]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(cell_fn, args_list))


def summarize(cells: list[dict], keys: tuple[str, ...],
              value: str = "test_error") -> list[dict]:
    """Mean/std/n of `value` grouped by `keys`, in first-seen group order."""
    groups: dict[tuple, list[float]] = {}
    for cell in cells:
        groups.setdefault(tuple(cell[k] for k in keys), []).append(cell[value])
    out = []
    for gk, vals in groups.items():
        arr = np.asarray(vals)
        row = dict(zip(keys, gk))
        row.update({f"{value}_mean": float(arr.mean()),
                    f"{value}_std": float(arr.std()),
                    "n": len(vals)})
        out.append(row)
    return out


def _mean_for(summary: list[dict], value_key: str = "test_error_mean", **match) -> float:
    for row in summary:
        if all(row.get(k) == v for k, v in match.items()):
            return row[value_key]
    raise KeyError(f"no summary row matching {match}")


# ---------------------------------------------------------------------------
# out-of-distribution overlap study

def _overlap_cell(args) -> dict:
    method, mismatch, seed, spec_base, setup = args
    spec = replace(spec_base, mismatch_percent=mismatch, seed=seed)
    split = gen_overlap_pool(spec)
    if setup.apply_standardize:
        split, _ = standardize(split)
    cfg = setup.curriculum_config(seed)
    if method == "supervised":
        res = run_supervised(split, cfg)
    elif method == "curriculum":
        res = run_curriculum(split, cfg)
    elif method == "vanilla":
        res = run_vanilla_pl(split, cfg, setup.vanilla_threshold, n_rounds=setup.n_rounds)
    else:
        raise ValueError(f"unknown method {method!r}")
    return {"method": method, "mismatch": mismatch, "seed": seed,
            "test_error": res.final_test_error,
            "baseline_test_error": res.baseline_test_error}


def run_overlap_study(spec: OverlapSpec, setup: StudySetup, seeds: list[int],
                      grid: tuple[float, ...] = MISMATCH_GRID,
                      methods: tuple[str, ...] = ("curriculum", "vanilla", "supervised"),
                      jobs: int = 1) -> StudyResult:
    """Test error vs class-distribution mismatch for each method."""
    args = [(m, g, s, spec, setup) for m in methods for g in grid for s in seeds]
    cells = run_cells(_overlap_cell, args, jobs)
    summary = summarize(cells, ("method", "mismatch"))

    findings = {}
    for m in methods:
        lo = _mean_for(summary, method=m, mismatch=grid[0])
        hi = _mean_for(summary, method=m, mismatch=grid[-1])
        findings[f"{m}_increase"] = hi - lo
    if "curriculum" in methods and "vanilla" in methods:
        findings["curriculum_robust"] = (
            findings["curriculum_increase"] <= findings["vanilla_increase"])
    if "supervised" in methods:
        sup = [r["test_error_mean"] for r in summary if r["method"] == "supervised"]
        findings["supervised_flat"] = max(sup) - min(sup) == 0.0
    return StudyResult("overlap", cells, summary, findings)


# ---------------------------------------------------------------------------
# labeled-set size sweep

def _sweep_cell(args) -> dict:
    method, size, seed, moons, setup = args
    spec = replace(moons, seed=seed)
    ds = gen_two_moons(spec)
    split = split_ssl(ds, n_labeled=size, n_val=setup.n_val, n_test=setup.n_test, seed=seed)
    if setup.apply_standardize:
        split, _ = standardize(split)
    cfg = setup.curriculum_config(seed)
    res = run_supervised(split, cfg) if method == "supervised" else run_curriculum(split, cfg)
    return {"method": method, "n_labeled": size, "seed": seed,
            "test_error": res.final_test_error}


def run_label_sweep(sweep: SweepSpec, moons: TwoMoonsSpec, setup: StudySetup,
                    methods: tuple[str, ...] = ("curriculum", "supervised"),
                    jobs: int = 1) -> StudyResult:
    """Test error vs labeled-set size, same hyperparameters at every size."""
    seeds = list(range(sweep.repetitions))
    args = [(m, n, s, moons, setup) for m in methods for n in sweep.labeled_sizes
            for s in seeds]
    cells = run_cells(_sweep_cell, args, jobs)
    summary = summarize(cells, ("method", "n_labeled"))

    findings = {}
    for m in methods:
        means = [_mean_for(summary, method=m, n_labeled=n) for n in sweep.labeled_sizes]
        findings[f"{m}_non_increasing_transitions"] = sum(
            1 for a, b in zip(means, means[1:]) if b <= a)
    findings["n_transitions"] = len(sweep.labeled_sizes) - 1
    return StudyResult("label-sweep", cells, summary, findings)


# ---------------------------------------------------------------------------
# fixed-threshold ablation

def _threshold_cell(args) -> dict:
    method, tau, seed, moons, setup = args
    spec = replace(moons, seed=seed)
    split = two_moons_split(spec, setup.n_val, setup.n_test, setup.apply_standardize)
    cfg = setup.curriculum_config(seed)
    if method == "curriculum":
        res = run_curriculum(split, cfg)
    else:
        res = run_vanilla_pl(split, cfg, tau, n_rounds=setup.n_rounds)
    return {"method": method if tau is None else f"fixed tau={tau:g}",
            "tau": tau, "seed": seed, "test_error": res.final_test_error}


def run_threshold_ablation(moons: TwoMoonsSpec, setup: StudySetup, seeds: list[int],
                           thresholds: tuple[float, ...] = (0.1, 0.2, 0.3, 0.4, 0.5,
                                                            0.6, 0.7, 0.8, 0.9),
                           jobs: int = 1) -> StudyResult:
    """Curriculum row vs fixed-threshold pseudo-labeling rows, paired seeds."""
    args = [("curriculum", None, s, moons, setup) for s in seeds]
    args += [("fixed", t, s, moons, setup) for t in thresholds for s in seeds]
    cells = run_cells(_threshold_cell, args, jobs)
    summary = summarize(cells, ("method",))

    cl_mean = _mean_for(summary, method="curriculum")
    fixed_means = {r["method"]: r["test_error_mean"] for r in summary
                   if r["method"] != "curriculum"}
    best_fixed = min(fixed_means.values())
    findings = {
        "curriculum_mean": cl_mean,
        "best_fixed_mean": best_fixed,
        "best_fixed_method": min(fixed_means, key=fixed_means.get),
        "curriculum_beats_fixed": cl_mean <= best_fixed,
    }
    return StudyResult("threshold-ablation", cells, summary, findings)


# ---------------------------------------------------------------------------
# reinitialization vs finetuning

def _reinit_cell(args) -> dict:
    mode, seed, moons, setup = args
    spec = replace(moons, seed=seed)
    split = two_moons_split(spec, setup.n_val, setup.n_test, setup.apply_standardize)
    cfg = setup.curriculum_config(seed, reinit=(mode == "reinit"))
    res = run_curriculum(split, cfg)
    round_errors = [res.baseline_test_error] + [r.test_error for r in res.records]
    return {"mode": mode, "seed": seed, "test_error": res.final_test_error,
            "round_errors": round_errors}


def run_reinit_ablation(moons: TwoMoonsSpec, setup: StudySetup, seeds: list[int],
                        jobs: int = 1) -> StudyResult:
    """Per-round test error for reinit-from-scratch vs finetune, paired seeds."""
    args = [(mode, s, moons, setup) for mode in ("reinit", "finetune") for s in seeds]
    cells = run_cells(_reinit_cell, args, jobs)

    n_rounds = len(cells[0]["round_errors"]) - 1
    summary = []
    for mode in ("reinit", "finetune"):
        per_mode = [c["round_errors"] for c in cells if c["mode"] == mode]
        arr = np.asarray(per_mode)
        for r in range(n_rounds + 1):
            summary.append({"mode": mode, "round": r,
                            "test_error_mean": float(arr[:, r].mean()),
                            "test_error_std": float(arr[:, r].std()),
                            "n": len(per_mode)})
    reinit_final = _mean_for(summary, mode="reinit", round=n_rounds)
    finetune_final = _mean_for(summary, mode="finetune", round=n_rounds)
    findings = {
        "reinit_final_mean": reinit_final,
        "finetune_final_mean": finetune_final,
        "reinit_not_worse": reinit_final <= finetune_final,
    }
    return StudyResult("reinit-ablation", cells, summary, findings)
