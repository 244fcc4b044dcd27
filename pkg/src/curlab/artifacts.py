"""Result artifact emission: JSON-lines traces, aligned text tables, hashes.

Traces carry no timestamps or environment data, so a rerun with the same
config and seed is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from .curriculum import CurriculumResult


def config_hash(canonical_text: str) -> str:
    return hashlib.sha256(canonical_text.encode("utf-8")).hexdigest()[:12]


def dumps_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=True, separators=(", ", ": "),
                      allow_nan=False)


def write_jsonl(path: str | Path, rows: list[dict]) -> None:
    Path(path).write_text("".join(dumps_json(r) + "\n" for r in rows), encoding="utf-8")


def read_jsonl(path: str | Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip()]


def curriculum_trace(result: CurriculumResult) -> list[dict]:
    """One object per round; round 0 is the supervised baseline."""
    rows = [{
        "round": 0, "T_r": None, "threshold": None, "n_selected": None,
        "n_departed": None, "val_error": result.baseline_val_error,
        "test_error": result.baseline_test_error, "pseudo_label_accuracy": None,
    }]
    for rec in result.records:
        rows.append({
            "round": rec.round_index,
            "T_r": rec.top_percentile,
            "threshold": rec.threshold,
            "n_selected": int(len(rec.selected_ids)),
            "n_departed": rec.n_departed,
            "val_error": rec.val_error,
            "test_error": rec.test_error,
            "pseudo_label_accuracy": rec.pseudo_label_accuracy,
        })
    return rows


def render_table(headers: list[str], rows: list[list]) -> str:
    """Aligned plain-text table; floats rendered with 4 decimals."""

    def fmt(v) -> str:
        if v is None:
            return "-"
        if isinstance(v, float):
            return f"{v:.4f}"
        return str(v)

    cells = [[fmt(v) for v in row] for row in rows]
    widths = [max(len(h), *(len(r[i]) for r in cells)) if cells else len(h)
              for i, h in enumerate(headers)]
    lines = ["  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip()]
    lines.append("  ".join("-" * w for w in widths))
    for row in cells:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip())
    return "\n".join(lines) + "\n"


def curriculum_table(result: CurriculumResult) -> str:
    headers = ["round", "T_r", "threshold", "n_selected", "train_size",
               "val_error", "test_error", "pl_accuracy"]
    rows = [[0, None, None, None, None, result.baseline_val_error,
             result.baseline_test_error, None]]
    for rec in result.records:
        rows.append([rec.round_index, rec.top_percentile, rec.threshold,
                     len(rec.selected_ids), rec.train_size, rec.val_error,
                     rec.test_error, rec.pseudo_label_accuracy])
    return render_table(headers, rows)


def summary_table(summary: list[dict]) -> str:
    """Aligned table over a study's summary rows (shared key order)."""
    if not summary:
        return ""
    headers = list(summary[0].keys())
    rows = [[row.get(h) for h in headers] for row in summary]
    return render_table(headers, rows)


def findings_text(findings: dict) -> str:
    lines = [f"{k} = {v:.4f}" if isinstance(v, float) else f"{k} = {v}"
             for k, v in findings.items()]
    return "\n".join(lines) + "\n" if lines else ""
