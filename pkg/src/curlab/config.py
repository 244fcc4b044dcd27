"""Run configuration: TOML schema, strict validation, canonical snapshots.

All defaults live here and are echoed into the snapshot written beside a
run's outputs, so a rerun from the snapshot reproduces the run exactly.
Unknown keys are rejected and every error names the offending field path.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .augment import MODES, AugmentConfig
from .curriculum import SCORE_METHODS, CurriculumConfig
from .data import SslSplit, load_csv, split_ssl, standardize
from .experiments import (MISMATCH_GRID, OverlapSpec, StudySetup, SweepSpec,
                          TwoMoonsSpec, gen_overlap_pool, gen_two_moons)
from .nn import TrainConfig
from .pacing import PacingSchedule


class ConfigError(ValueError):
    """Invalid run config; the message starts with the field path."""


@dataclass(frozen=True)
class _Field:
    kind: str                    # int | float | str | bool | int_list | float_list
    default: object
    check: object = None         # predicate on the converted value
    message: str = ""


def _f(default, check=None, message=""):
    return _Field("float", default, check, message)


def _i(default, check=None, message=""):
    return _Field("int", default, check, message)


def _s(default, choices=None):
    if choices is None:
        return _Field("str", default)
    return _Field("str", default, lambda v: v in choices, f"must be one of {sorted(choices)}")


def _b(default):
    return _Field("bool", default)


_THRESH = tuple(round(0.1 * k, 1) for k in range(1, 10))

_SCHEMA: dict[str, dict[str, _Field]] = {
    "": {
        "seed": _i(0, lambda v: v >= 0, "must be >= 0"),
        "out_dir": _s("runs"),
    },
    "data": {
        "source": _s("two_moons", choices={"two_moons", "blobs", "csv"}),
        "n_per_moon": _i(1000, lambda v: v > 0, "must be > 0"),
        "noise": _f(0.15, lambda v: v >= 0, "must be >= 0"),
        "path": _s(""),
        "label_column": _s("label"),
        "n_id_classes": _i(4, lambda v: v > 0, "must be > 0"),
        "n_ood_classes": _i(4, lambda v: v > 0, "must be > 0"),
        "n_sources": _i(4, lambda v: v > 0, "must be > 0"),
        "mismatch_percent": _f(0.0, lambda v: v in MISMATCH_GRID,
                               f"must be one of {list(MISMATCH_GRID)}"),
        "labeled_per_class": _i(5, lambda v: v > 0, "must be > 0"),
        "val_per_class": _i(40, lambda v: v > 0, "must be > 0"),
        "test_per_class": _i(100, lambda v: v > 0, "must be > 0"),
        "unlabeled_per_source": _i(150, lambda v: v > 0, "must be > 0"),
        "blob_std": _f(0.75, lambda v: v > 0, "must be > 0"),
        "radius": _f(3.0, lambda v: v > 0, "must be > 0"),
    },
    "split": {
        "n_labeled": _i(12, lambda v: v > 0, "must be > 0"),
        "n_val": _i(200, lambda v: v >= 0, "must be >= 0"),
        "n_test": _i(400, lambda v: v >= 0, "must be >= 0"),
        "standardize": _b(True),
    },
    "model": {
        "hidden": _Field("int_list", [16, 16], lambda v: all(w > 0 for w in v),
                         "layer widths must be > 0"),
    },
    "train": {
        "epochs": _i(200, lambda v: v >= 0, "must be >= 0"),
        "batch_size": _i(64, lambda v: v > 0, "must be > 0"),
        "lr": _f(0.1, lambda v: v > 0, "must be > 0"),
        "lr_min": _f(0.0, lambda v: v >= 0, "must be >= 0"),
        "momentum": _f(0.9, lambda v: 0 <= v < 1, "must be in [0, 1)"),
        "weight_decay": _f(5e-4, lambda v: v >= 0, "must be >= 0"),
        "swa_start": _i(120, lambda v: v >= 0, "must be >= 0"),
        "swa_cycle": _i(5, lambda v: v > 0, "must be > 0"),
        "use_swa": _b(True),
    },
    "augment": {
        "mode": _s("none", choices=set(MODES)),
        "jitter_sigma": _f(0.1, lambda v: v >= 0, "must be >= 0"),
        "mixup_alpha": _f(1.0, lambda v: v > 0, "must be > 0"),
    },
    "pacing": {
        "mode": _s("percentile", choices={"percentile", "fixed"}),
        "delta": _f(20.0, lambda v: 0 < v <= 100, "must be in (0, 100]"),
        "fixed_threshold": _f(0.0, lambda v: 0 <= v < 1, "must be in [0, 1)"),
        "rounds": _i(5, lambda v: v > 0, "must be > 0"),
        "score": _s("max_prob", choices=set(SCORE_METHODS)),
    },
    "curriculum": {
        "reinit": _b(True),
        "eval_cadence": _i(1, lambda v: v > 0, "must be > 0"),
        "export_boundary": _b(True),
        "boundary_resolution": _i(300, lambda v: v > 0, "must be > 0"),
        "keep_checkpoints": _b(False),
    },
    "study": {
        "seeds": _i(5, lambda v: v > 0, "must be > 0"),
        "mismatch_grid": _Field("float_list", list(MISMATCH_GRID),
                                lambda v: all(x in MISMATCH_GRID for x in v),
                                f"entries must be from {list(MISMATCH_GRID)}"),
        "labeled_sizes": _Field("int_list", [8, 16, 32, 64],
                                lambda v: all(x > 0 for x in v)
                                and all(a < b for a, b in zip(v, v[1:])),
                                "must be positive and increasing"),
        "thresholds": _Field("float_list", list(_THRESH),
                             lambda v: all(0 <= x < 1 for x in v),
                             "entries must be in [0, 1)"),
    },
}


def _convert(path: str, spec: _Field, value):
    if spec.kind == "bool":
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected a boolean, got {value!r}")
        return value
    if spec.kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if spec.kind == "float":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if spec.kind == "str":
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    if spec.kind in ("int_list", "float_list"):
        if not isinstance(value, list):
            raise ConfigError(f"{path}: expected a list, got {value!r}")
        elem = _Field(spec.kind.split("_")[0], None)
        return [_convert(path, elem, v) for v in value]
    raise AssertionError(spec.kind)


def _validate(path: str, spec: _Field, value):
    value = _convert(path, spec, value)
    if spec.check is not None and not spec.check(value):
        raise ConfigError(f"{path}: {spec.message}")
    return value


@dataclass
class RunConfig:
    """Validated, fully-defaulted run description."""

    values: dict[str, dict[str, object]]

    # -- access -------------------------------------------------------------

    def get(self, section: str, key: str):
        return self.values[section][key]

    @property
    def seed(self) -> int:
        return self.values[""]["seed"]

    @property
    def out_dir(self) -> str:
        return self.values[""]["out_dir"]

    def with_overrides(self, seed: int | None = None, out_dir: str | None = None) -> "RunConfig":
        values = {sec: dict(kv) for sec, kv in self.values.items()}
        if seed is not None:
            values[""]["seed"] = _validate("seed", _SCHEMA[""]["seed"], seed)
        if out_dir is not None:
            values[""]["out_dir"] = out_dir
        return RunConfig(values)

    # -- builders -----------------------------------------------------------

    def train_config(self) -> TrainConfig:
        t, a = self.values["train"], self.values["augment"]
        return TrainConfig(
            epochs=t["epochs"], batch_size=t["batch_size"], lr=t["lr"], lr_min=t["lr_min"],
            momentum=t["momentum"], weight_decay=t["weight_decay"], swa_start=t["swa_start"],
            swa_cycle=t["swa_cycle"], use_swa=t["use_swa"],
            augment=AugmentConfig(mode=a["mode"], jitter_sigma=a["jitter_sigma"],
                                  mixup_alpha=a["mixup_alpha"]))

    def pacing_schedule(self) -> PacingSchedule:
        p = self.values["pacing"]
        return PacingSchedule(mode=p["mode"], delta=p["delta"],
                              fixed_threshold=p["fixed_threshold"], rounds=p["rounds"])

    def curriculum_config(self) -> CurriculumConfig:
        c = self.values["curriculum"]
        return CurriculumConfig(
            schedule=self.pacing_schedule(), train=self.train_config(),
            hidden=tuple(self.values["model"]["hidden"]), reinit=c["reinit"],
            seed=self.seed, eval_cadence=c["eval_cadence"],
            score_method=self.values["pacing"]["score"])

    def moons_spec(self, seed: int | None = None) -> TwoMoonsSpec:
        d = self.values["data"]
        return TwoMoonsSpec(n_per_moon=d["n_per_moon"], noise=d["noise"],
                            labeled_per_class=self.values["split"]["n_labeled"] // 2,
                            seed=self.seed if seed is None else seed)

    def overlap_spec(self, seed: int | None = None) -> OverlapSpec:
        d = self.values["data"]
        return OverlapSpec(
            n_id_classes=d["n_id_classes"], n_ood_classes=d["n_ood_classes"],
            n_sources=d["n_sources"], mismatch_percent=d["mismatch_percent"],
            labeled_per_class=d["labeled_per_class"], val_per_class=d["val_per_class"],
            test_per_class=d["test_per_class"], unlabeled_per_source=d["unlabeled_per_source"],
            blob_std=d["blob_std"], radius=d["radius"],
            seed=self.seed if seed is None else seed)

    def study_setup(self) -> StudySetup:
        s = self.values["split"]
        return StudySetup(hidden=tuple(self.values["model"]["hidden"]),
                          train=self.train_config(), delta=self.values["pacing"]["delta"],
                          n_val=s["n_val"], n_test=s["n_test"],
                          apply_standardize=s["standardize"],
                          vanilla_threshold=self.values["pacing"]["fixed_threshold"])

    def sweep_spec(self) -> SweepSpec:
        st = self.values["study"]
        return SweepSpec(labeled_sizes=tuple(st["labeled_sizes"]),
                         repetitions=st["seeds"])

    def build_split(self) -> SslSplit:
        d, s = self.values["data"], self.values["split"]
        if d["source"] == "two_moons":
            ds = gen_two_moons(TwoMoonsSpec(n_per_moon=d["n_per_moon"], noise=d["noise"],
                                            labeled_per_class=max(1, s["n_labeled"] // 2),
                                            seed=self.seed))
        elif d["source"] == "blobs":
            split = gen_overlap_pool(self.overlap_spec())
            if s["standardize"]:
                split, _ = standardize(split)
            return split
        else:
            ds, _ = load_csv(d["path"], label_column=d["label_column"])
        split = split_ssl(ds, n_labeled=s["n_labeled"], n_val=s["n_val"],
                          n_test=s["n_test"], seed=self.seed)
        if s["standardize"]:
            split, _ = standardize(split)
        return split

    # -- canonical form -----------------------------------------------------

    def canonical_text(self, include_out_dir: bool = True) -> str:
        lines = []
        for key, spec in _SCHEMA[""].items():
            if key == "out_dir" and not include_out_dir:
                continue
            lines.append(f"{key} = {_toml_value(self.values[''][key], spec.kind)}")
        for section in (k for k in _SCHEMA if k):
            lines.append("")
            lines.append(f"[{section}]")
            for key, spec in _SCHEMA[section].items():
                lines.append(f"{key} = {_toml_value(self.values[section][key], spec.kind)}")
        return "\n".join(lines) + "\n"


def _toml_value(value, kind: str) -> str:
    if kind == "bool":
        return "true" if value else "false"
    if kind == "int":
        return str(value)
    if kind == "float":
        return repr(float(value))
    if kind == "str":
        escaped = str(value).replace("\\", "\\\\").replace('"', '\\"')
        return f'"{escaped}"'
    if kind == "int_list":
        return "[" + ", ".join(str(v) for v in value) + "]"
    if kind == "float_list":
        return "[" + ", ".join(repr(float(v)) for v in value) + "]"
    raise AssertionError(kind)


def config_from_dict(user: dict) -> RunConfig:
    """Merge user values over defaults, rejecting unknown keys and bad values."""
    values: dict[str, dict[str, object]] = {
        sec: {k: f.default for k, f in fields.items()} for sec, fields in _SCHEMA.items()
    }
    for key, val in user.items():
        if isinstance(val, dict):
            if key not in _SCHEMA or key == "":
                raise ConfigError(f"{key}: unknown section")
            for sub, v in val.items():
                if sub not in _SCHEMA[key]:
                    raise ConfigError(f"{key}.{sub}: unknown key")
                values[key][sub] = _validate(f"{key}.{sub}", _SCHEMA[key][sub], v)
        else:
            if key not in _SCHEMA[""]:
                raise ConfigError(f"{key}: unknown key")
            values[""][key] = _validate(key, _SCHEMA[""][key], val)

    if values["train"]["lr_min"] > values["train"]["lr"]:
        raise ConfigError("train.lr_min: must be <= train.lr")
    if values["data"]["source"] == "csv" and not values["data"]["path"]:
        raise ConfigError("data.path: required when data.source is 'csv'")

    cfg = RunConfig(values)
    # Construct every nested object now so invalid combinations fail before any work.
    cfg.train_config()
    cfg.pacing_schedule()
    cfg.curriculum_config()
    return cfg


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("rb") as fh:
            user = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from None
    return config_from_dict(user)
