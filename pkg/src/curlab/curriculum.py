"""Self-training loop: train, score the full pool, select, pseudo-label, retrain.

Each round reselects from the entire unlabeled pool, so samples can enter
or leave the training set, and by default the model is reinitialized from
scratch before every round (finetuning the previous round's parameters is
the ablation mode). The loop ends when the schedule's final entry admits
the whole pool.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import nn, pacing
from .data import Dataset, PseudoLabelRecord, SslSplit
from .nn import DivergenceError, ModelParams, TrainConfig
from .pacing import ConfidenceScores, PacingSchedule
from .rng import fold_seed

SCORE_METHODS = ("max_prob", "margin", "neg_entropy")


class StallWarning(UserWarning):
    """An interior round selected nothing (all scores tied at the threshold)."""


@dataclass(frozen=True)
class CurriculumConfig:
    schedule: PacingSchedule
    train: TrainConfig
    hidden: tuple[int, ...] = ()
    reinit: bool = True               # False = finetune the previous round's params
    seed: int = 0
    eval_cadence: int = 1             # evaluate val/test every k rounds (round 0 and final always)
    score_method: str = "max_prob"

    def __post_init__(self):
        if self.eval_cadence < 1:
            raise ValueError("eval_cadence must be >= 1")
        if self.score_method not in SCORE_METHODS:
            raise ValueError(f"score_method must be one of {SCORE_METHODS}")


@dataclass(frozen=True)
class RoundRecord:
    """Provenance of one self-training round."""

    round_index: int
    top_percentile: float | None      # None for fixed-threshold rounds
    threshold: float
    selected_ids: np.ndarray
    pseudo_labels: tuple[PseudoLabelRecord, ...]
    train_size: int
    val_error: float | None
    test_error: float | None
    pseudo_label_accuracy: float | None
    n_departed: int


@dataclass
class CurriculumResult:
    baseline_val_error: float
    baseline_test_error: float
    records: list[RoundRecord] = field(default_factory=list)
    final_params: ModelParams | None = None
    baseline_params: ModelParams | None = None
    round_params: list[ModelParams] | None = None
    n_train_runs: int = 0

    @property
    def final_test_error(self) -> float:
        for rec in reversed(self.records):
            if rec.test_error is not None:
                return rec.test_error
        return self.baseline_test_error

    @property
    def final_val_error(self) -> float:
        for rec in reversed(self.records):
            if rec.val_error is not None:
                return rec.val_error
        return self.baseline_val_error


def pseudo_label(params: ModelParams, x: np.ndarray, sample_id: int = 0,
                 round_index: int = 1) -> PseudoLabelRecord:
    """Argmax pseudo-label with its confidence; ties go to the lowest class."""
    probs = nn.forward_probs(params, x)
    cls = int(np.argmax(probs))
    return PseudoLabelRecord(sample_id=sample_id, predicted_class=cls,
                             confidence=float(probs[cls]), round_index=round_index)


def score_unlabeled(params: ModelParams, unlabeled: Dataset,
                    method: str = "max_prob") -> ConfidenceScores:
    """Confidence for every unlabeled sample; no augmentation at scoring time.

    max_prob is the curriculum's criterion; margin and neg_entropy are
    alternative uncertainty scores behind the same interface (mapped into
    (0, 1] so the schedule applies unchanged).
    """
    probs = nn.predict_proba(params, unlabeled.features)
    if method == "max_prob":
        values = probs.max(axis=1)
    elif method == "margin":
        part = np.sort(probs, axis=1)
        values = np.maximum(part[:, -1] - part[:, -2], 1e-15)
    elif method == "neg_entropy":
        h = -(probs * np.log(np.maximum(probs, 1e-300))).sum(axis=1)
        values = np.exp(-h)
    else:
        raise ValueError(f"unknown scoring method {method!r}")
    return ConfidenceScores(unlabeled.sample_ids.copy(), values)


def _evaluate(params: ModelParams, ds: Dataset) -> float:
    return nn.classification_error(params, ds.features, ds.labels)


def _arch(split: SslSplit, hidden: tuple[int, ...]) -> tuple[int, ...]:
    return (split.labeled.n_features, *hidden, split.n_classes)


def _train_round_model(config: CurriculumConfig, round_index: int, start: ModelParams,
                       features: np.ndarray, targets: np.ndarray) -> ModelParams:
    seed = fold_seed(config.seed, "round", round_index)
    try:
        trained, _ = nn.train(features, targets, config.train, start, seed)
    except DivergenceError as exc:
        raise DivergenceError(f"round {round_index}: {exc}", epoch=exc.epoch,
                              round_index=round_index) from exc
    return trained


def _supervised_model(split: SslSplit, config: CurriculumConfig) -> ModelParams:
    start = nn.init_params(_arch(split, config.hidden), fold_seed(config.seed, "round", 0))
    return _train_round_model(config, 0, start, split.labeled.features, split.labeled.labels)


def _run_loop(split: SslSplit, config: CurriculumConfig,
              round_plan: list[tuple[float | None, float | None]],
              keep_round_params: bool = False) -> CurriculumResult:
    """Shared loop. round_plan holds (top_percentile, fixed_threshold) per round,
    exactly one of the two set."""
    labeled, pool = split.labeled, split.unlabeled
    arch = _arch(split, config.hidden)
    n_rounds = len(round_plan)

    model = _supervised_model(split, config)
    result = CurriculumResult(
        baseline_val_error=_evaluate(model, split.validation),
        baseline_test_error=_evaluate(model, split.test),
        baseline_params=model.copy() if keep_round_params else None,
        round_params=[] if keep_round_params else None,
        n_train_runs=1,
    )

    prev_selected: set[int] = set()
    id_to_row = {int(sid): row for row, sid in enumerate(pool.sample_ids)}

    for round_index, (top_pct, fixed_thr) in enumerate(round_plan, start=1):
        scores = score_unlabeled(model, pool, config.score_method)
        if top_pct is not None:
            selected_ids, threshold = pacing.select(scores, top_pct)
        else:
            selected_ids = pacing.select_fixed(scores, fixed_thr)
            threshold = fixed_thr
        if len(selected_ids) == 0 and (top_pct is None or top_pct > 0):
            warnings.warn(
                f"round {round_index}: empty selection (threshold {threshold:.6f}); "
                "training on labeled data alone this round", StallWarning, stacklevel=2)

        rows = np.fromiter((id_to_row[int(s)] for s in selected_ids), dtype=np.int64,
                           count=len(selected_ids))
        probs = nn.predict_proba(model, pool.features[rows]) if len(rows) else np.empty((0, arch[-1]))
        classes = probs.argmax(axis=1) if len(rows) else np.empty(0, dtype=np.int64)
        confidences = probs.max(axis=1) if len(rows) else np.empty(0)
        records = tuple(
            PseudoLabelRecord(int(sid), int(c), float(p), round_index)
            for sid, c, p in zip(selected_ids, classes, confidences))

        features = np.concatenate([labeled.features, pool.features[rows]], axis=0)
        targets = np.concatenate([labeled.labels, classes.astype(np.int64)])

        start = (nn.init_params(arch, fold_seed(config.seed, "round", round_index))
                 if config.reinit else model.copy())
        model = _train_round_model(config, round_index, start, features, targets)
        result.n_train_runs += 1

        evaluate = round_index % config.eval_cadence == 0 or round_index == n_rounds
        record = RoundRecord(
            round_index=round_index,
            top_percentile=top_pct,
            threshold=float(threshold),
            selected_ids=selected_ids,
            pseudo_labels=records,
            train_size=len(features),
            val_error=_evaluate(model, split.validation) if evaluate else None,
            test_error=_evaluate(model, split.test) if evaluate else None,
            pseudo_label_accuracy=split.oracle_pseudo_label_accuracy(rows, classes),
            n_departed=len(prev_selected - set(int(s) for s in selected_ids)),
        )
        result.records.append(record)
        if keep_round_params:
            result.round_params.append(model.copy())
        prev_selected = set(int(s) for s in selected_ids)

    result.final_params = model
    return result


def run_curriculum(split: SslSplit, config: CurriculumConfig,
                   keep_round_params: bool = False) -> CurriculumResult:
    """Full percentile-paced loop: supervised round 0, then one round per
    schedule entry, ending when the whole pool has been admitted.

    With an empty unlabeled pool the result is the supervised model alone.
    """
    if config.schedule.mode != "percentile":
        raise ValueError("run_curriculum requires a percentile schedule")
    if len(split.unlabeled) == 0:
        model = _supervised_model(split, config)
        return CurriculumResult(
            baseline_val_error=_evaluate(model, split.validation),
            baseline_test_error=_evaluate(model, split.test),
            final_params=model,
            baseline_params=model.copy() if keep_round_params else None,
            round_params=[] if keep_round_params else None,
            n_train_runs=1,
        )
    plan = [(pct, None) for pct in config.schedule.percentiles]
    result = _run_loop(split, config, plan, keep_round_params)
    assert result.records[-1].train_size == len(split.labeled) + len(split.unlabeled)
    return result


def run_vanilla_pl(split: SslSplit, config: CurriculumConfig, threshold: float,
                   n_rounds: int, keep_round_params: bool = False) -> CurriculumResult:
    """Fixed-threshold pseudo-labeling baseline with a fixed round budget."""
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must be in [0, 1)")
    if n_rounds < 1:
        raise ValueError("n_rounds must be >= 1")
    plan = [(None, threshold)] * n_rounds
    return _run_loop(split, config, plan, keep_round_params)


def run_supervised(split: SslSplit, config: CurriculumConfig) -> CurriculumResult:
    """Round-0 model only: the supervised baseline that ignores the pool."""
    model = _supervised_model(split, config)
    return CurriculumResult(
        baseline_val_error=_evaluate(model, split.validation),
        baseline_test_error=_evaluate(model, split.test),
        final_params=model,
        n_train_runs=1,
    )
