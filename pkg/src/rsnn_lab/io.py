"""File formats: predictions, labels, embeddings, budgets, scores, reports.

Predictions are line-oriented JSON: a header line declaring the frame, an
optional budget, and measure-config defaults, then one record per line. Every
validation failure names the line (and field where it has one) so a 50k-line
file does not have to be bisected by hand. Floats are written in Python's
shortest round-trip form, so read(write(x)) gives back the exact bits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .calib import ScoredOutcome
from .config import MeasureConfig
from .credal import ProbabilityIntervals
from .errors import (
    CalculusError,
    DuplicateId,
    IoError,
    ParseError,
    SchemaError,
    UnknownLabel,
)
from .frame import Budget, FocalSet, Frame, make_frame

KINDS = ("point", "samples", "belief", "interval")
_SUM_TOL = 1e-9


@dataclass(frozen=True)
class PredictionRecord:
    id: str
    kind: str
    probs: np.ndarray | None = None
    samples: np.ndarray | None = None
    set_indices: tuple[int, ...] | None = None
    beliefs: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None


@dataclass(frozen=True)
class DatasetFile:
    frame: Frame
    budget: Budget | None
    config: MeasureConfig
    records: tuple[PredictionRecord, ...] = field(default_factory=tuple)

    def sub_budget(self, record: PredictionRecord) -> Budget:
        """The budget slice a belief record's values refer to."""
        assert record.set_indices is not None and self.budget is not None
        return Budget(tuple(self.budget.sets[i] for i in record.set_indices))


# ---------------------------------------------------------------- helpers

def _float_list(values: Any, line: int, field_name: str, length: int | None = None) -> np.ndarray:
    if not isinstance(values, list) or not values:
        raise SchemaError(f"{field_name} must be a non-empty array", line, field_name)
    for v in values:
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise SchemaError(f"{field_name} has a non-numeric entry {v!r}", line, field_name)
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{field_name} has a non-finite entry", line, field_name)
    if length is not None and arr.shape[0] != length:
        raise SchemaError(
            f"{field_name} has {arr.shape[0]} entries, expected {length}", line, field_name
        )
    return arr


def _probability_row(values: Any, line: int, field_name: str, n: int) -> np.ndarray:
    arr = _float_list(values, line, field_name, n)
    if np.any(arr < -_SUM_TOL):
        raise SchemaError(f"{field_name} has negative probabilities", line, field_name)
    total = float(arr.sum())
    if abs(total - 1.0) > _SUM_TOL:
        raise SchemaError(
            f"{field_name} sums to {total:.17g}, not 1", line, field_name
        )
    return arr


def _require_keys(obj: dict, allowed: set[str], line: int) -> None:
    for key in obj:
        if key not in allowed:
            raise SchemaError(f"unexpected key {key!r}", line, key)


def _jsonify(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, dict):
        return {k: _jsonify(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonify(v) for v in value]
    return value


def _dump_line(obj: dict) -> str:
    return json.dumps(_jsonify(obj), sort_keys=True, ensure_ascii=False)


def _read_lines(path: str | Path) -> list[str]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    return lines


def _write_text(path: str | Path, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


# ---------------------------------------------------------------- predictions

def _parse_header(raw: str) -> tuple[Frame, Budget | None, MeasureConfig]:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"header is not valid JSON: {exc.msg}", 1) from None
    if not isinstance(obj, dict):
        raise SchemaError("header must be an object", 1)
    _require_keys(obj, {"type", "frame", "budget", "config"}, 1)
    if obj.get("type") != "header":
        raise SchemaError("first line must have type 'header'", 1, "type")

    labels = obj.get("frame")
    if not isinstance(labels, list) or not all(isinstance(x, str) for x in labels):
        raise SchemaError("frame must be an array of strings", 1, "frame")
    try:
        frame = make_frame(labels)
    except CalculusError as exc:
        raise SchemaError(f"bad frame: {exc}", 1, "frame") from None

    budget = None
    raw_budget = obj.get("budget")
    if raw_budget is not None:
        if not isinstance(raw_budget, list) or not raw_budget:
            raise SchemaError("budget must be a non-empty array of index arrays", 1, "budget")
        sets = []
        for entry in raw_budget:
            if (
                not isinstance(entry, list)
                or not entry
                or not all(isinstance(i, int) and not isinstance(i, bool) for i in entry)
            ):
                raise SchemaError(f"budget entry {entry!r} must be an array of ints", 1, "budget")
            if entry != sorted(set(entry)):
                raise SchemaError(
                    f"budget entry {entry!r} must be strictly increasing", 1, "budget"
                )
            try:
                sets.append(FocalSet.from_indices(entry, frame.n))
            except CalculusError as exc:
                raise SchemaError(f"bad budget entry {entry!r}: {exc}", 1, "budget") from None
        try:
            budget = Budget(tuple(sets))
        except CalculusError as exc:
            raise SchemaError(f"bad budget: {exc}", 1, "budget") from None

    raw_config = obj.get("config", {})
    if raw_config is None:
        raw_config = {}
    if not isinstance(raw_config, dict):
        raise SchemaError("config must be an object", 1, "config")
    try:
        config = MeasureConfig.from_dict(raw_config)
    except SchemaError as exc:
        raise SchemaError(f"bad config: {exc}", 1, "config") from None

    return frame, budget, config


def _parse_record(
    raw: str, line: int, frame: Frame, budget: Budget | None
) -> PredictionRecord:
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ParseError(f"record is not valid JSON: {exc.msg}", line) from None
    if not isinstance(obj, dict):
        raise SchemaError("record must be an object", line)

    rid = obj.get("id")
    if not isinstance(rid, str) or not rid:
        raise SchemaError("record needs a non-empty string 'id'", line, "id")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"kind must be one of {KINDS}, got {kind!r}", line, "kind")

    n = frame.n
    if kind == "point":
        _require_keys(obj, {"id", "kind", "probs"}, line)
        probs = _probability_row(obj.get("probs"), line, "probs", n)
        return PredictionRecord(rid, kind, probs=probs)

    if kind == "samples":
        _require_keys(obj, {"id", "kind", "samples"}, line)
        rows = obj.get("samples")
        if not isinstance(rows, list) or not rows:
            raise SchemaError("samples must be a non-empty array of rows", line, "samples")
        parsed = np.stack([_probability_row(row, line, "samples", n) for row in rows])
        return PredictionRecord(rid, kind, samples=parsed)

    if kind == "belief":
        _require_keys(obj, {"id", "kind", "sets", "beliefs"}, line)
        if budget is None:
            raise SchemaError("belief records need a budget declared in the header", line, "sets")
        raw_sets = obj.get("sets")
        if raw_sets is None:
            indices = tuple(range(budget.size))
        else:
            if (
                not isinstance(raw_sets, list)
                or not raw_sets
                or not all(isinstance(i, int) and not isinstance(i, bool) for i in raw_sets)
            ):
                raise SchemaError("sets must be a non-empty array of ints", line, "sets")
            if len(set(raw_sets)) != len(raw_sets):
                raise SchemaError("sets contains duplicate indices", line, "sets")
            for i in raw_sets:
                if not 0 <= i < budget.size:
                    raise SchemaError(
                        f"set index {i} outside the declared budget of {budget.size} sets",
                        line,
                        "sets",
                    )
            indices = tuple(raw_sets)
        beliefs = _float_list(obj.get("beliefs"), line, "beliefs", len(indices))
        if np.any(beliefs < -_SUM_TOL) or np.any(beliefs > 1.0 + _SUM_TOL):
            raise SchemaError("beliefs must lie in [0, 1]", line, "beliefs")
        return PredictionRecord(rid, kind, set_indices=indices, beliefs=beliefs)

    _require_keys(obj, {"id", "kind", "lower", "upper"}, line)
    lower = _float_list(obj.get("lower"), line, "lower", n)
    upper = _float_list(obj.get("upper"), line, "upper", n)
    try:
        ProbabilityIntervals(lower, upper)
    except CalculusError as exc:
        raise SchemaError(f"bad intervals: {exc}", line, "lower") from None
    return PredictionRecord(rid, kind, lower=lower, upper=upper)


def read_predictions(path: str | Path) -> DatasetFile:
    lines = _read_lines(path)
    if not lines:
        raise ParseError("file is empty; expected a header line", 1)
    frame, budget, config = _parse_header(lines[0])
    records = tuple(
        _parse_record(raw, i + 2, frame, budget) for i, raw in enumerate(lines[1:])
    )
    return DatasetFile(frame, budget, config, records)


def write_predictions(ds: DatasetFile, path: str | Path) -> None:
    header = {
        "type": "header",
        "frame": list(ds.frame.labels),
        "budget": None if ds.budget is None else [list(fs.indices()) for fs in ds.budget],
        "config": ds.config.as_dict(),
    }
    lines = [_dump_line(header)]
    for record in ds.records:
        obj: dict[str, Any] = {"id": record.id, "kind": record.kind}
        if record.kind == "point":
            obj["probs"] = record.probs
        elif record.kind == "samples":
            obj["samples"] = record.samples
        elif record.kind == "belief":
            obj["sets"] = list(record.set_indices or ())
            obj["beliefs"] = record.beliefs
        else:
            obj["lower"] = record.lower
            obj["upper"] = record.upper
        lines.append(_dump_line(obj))
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- labels

def read_labels(path: str | Path, frame: Frame) -> list[int]:
    """Two-column id,label lines resolved to class indices; order preserved."""
    labels: list[int] = []
    seen: set[str] = set()
    for i, raw in enumerate(_read_lines(path)):
        line = i + 1
        parts = raw.split(",")
        if len(parts) != 2:
            raise ParseError(f"expected 'id,label', got {raw!r}", line)
        rid, label = parts[0].strip(), parts[1].strip()
        if not rid:
            raise SchemaError("empty id", line, "id")
        if rid in seen:
            raise DuplicateId(f"id {rid!r} appears more than once", line, "id")
        seen.add(rid)
        try:
            labels.append(frame.index(label))
        except UnknownLabel:
            raise UnknownLabel(f"label {label!r} not in frame (line {line})") from None
    if not labels:
        raise ParseError("label file is empty", 1)
    return labels


def write_labels(path: str | Path, rows: Sequence[tuple[str, str]]) -> None:
    _write_text(path, "\n".join(f"{rid},{label}" for rid, label in rows) + "\n")


# ---------------------------------------------------------------- embeddings

@dataclass(frozen=True)
class EmbeddingFile:
    ids: tuple[str, ...]
    labels: tuple[str, ...]
    points: np.ndarray


def read_embeddings(path: str | Path) -> EmbeddingFile:
    """Lines of id,class,x,y,z."""
    ids: list[str] = []
    labels: list[str] = []
    rows: list[list[float]] = []
    for i, raw in enumerate(_read_lines(path)):
        line = i + 1
        parts = raw.split(",")
        if len(parts) != 5:
            raise ParseError(f"expected 'id,class,x,y,z', got {raw!r}", line)
        rid, label = parts[0].strip(), parts[1].strip()
        if not rid:
            raise SchemaError("empty id", line, "id")
        if not label:
            raise SchemaError("empty class label", line, "class")
        try:
            coords = [float(p) for p in parts[2:]]
        except ValueError:
            raise ParseError(f"non-numeric coordinate in {raw!r}", line) from None
        if not all(np.isfinite(coords)):
            raise SchemaError("non-finite coordinate", line)
        ids.append(rid)
        labels.append(label)
        rows.append(coords)
    if not rows:
        raise ParseError("embedding file is empty", 1)
    return EmbeddingFile(tuple(ids), tuple(labels), np.array(rows))


def write_embeddings(
    path: str | Path, ids: Sequence[str], labels: Sequence[str], points: np.ndarray
) -> None:
    lines = [
        f"{rid},{label},{float(x)!r},{float(y)!r},{float(z)!r}"
        for rid, label, (x, y, z) in zip(ids, labels, np.asarray(points, dtype=float))
    ]
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- budgets

def read_budget_file(path: str | Path, n: int) -> Budget:
    """One focal set per line as comma-separated, strictly increasing class indices."""
    sets: list[FocalSet] = []
    for i, raw in enumerate(_read_lines(path)):
        line = i + 1
        try:
            indices = [int(p) for p in raw.split(",")]
        except ValueError:
            raise ParseError(f"expected comma-separated ints, got {raw!r}", line) from None
        if indices != sorted(set(indices)):
            raise SchemaError(f"indices {indices} must be strictly increasing", line)
        try:
            sets.append(FocalSet.from_indices(indices, n))
        except CalculusError as exc:
            raise SchemaError(str(exc), line) from None
    if not sets:
        raise ParseError("budget file is empty", 1)
    try:
        return Budget(tuple(sets))
    except CalculusError as exc:
        raise SchemaError(str(exc)) from None


def write_budget_file(path: str | Path, budget: Budget) -> None:
    lines = [",".join(str(i) for i in fs.indices()) for fs in budget]
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- scores

def read_scores(path: str | Path) -> np.ndarray:
    """One finite float per line."""
    values: list[float] = []
    for i, raw in enumerate(_read_lines(path)):
        try:
            value = float(raw.strip())
        except ValueError:
            raise ParseError(f"expected a number, got {raw!r}", i + 1) from None
        if not np.isfinite(value):
            raise SchemaError("non-finite score", i + 1)
        values.append(value)
    if not values:
        raise ParseError("score file is empty", 1)
    return np.array(values)


def write_scores(path: str | Path, values) -> None:
    _write_text(path, "\n".join(repr(float(v)) for v in np.asarray(values)) + "\n")


def read_outcomes(path: str | Path) -> list[ScoredOutcome]:
    """Lines of confidence,predicted,true."""
    outcomes: list[ScoredOutcome] = []
    for i, raw in enumerate(_read_lines(path)):
        line = i + 1
        parts = raw.split(",")
        if len(parts) != 3:
            raise ParseError(f"expected 'confidence,predicted,true', got {raw!r}", line)
        try:
            confidence = float(parts[0])
        except ValueError:
            raise ParseError(f"non-numeric confidence {parts[0]!r}", line) from None
        try:
            outcomes.append(ScoredOutcome(confidence, parts[1].strip(), parts[2].strip()))
        except CalculusError as exc:
            raise SchemaError(str(exc), line, "confidence") from None
    if not outcomes:
        raise ParseError("outcome file is empty", 1)
    return outcomes


def write_outcomes(path: str | Path, outcomes: Sequence[ScoredOutcome]) -> None:
    lines = [f"{float(o.confidence)!r},{o.predicted},{o.true}" for o in outcomes]
    _write_text(path, "\n".join(lines) + "\n")


# ---------------------------------------------------------------- reports

def report_text(payload: dict) -> str:
    return json.dumps(_jsonify(payload), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_report(payload: dict, path: str | Path) -> None:
    _write_text(path, report_text(payload))


def read_report(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"report is not valid JSON: {exc.msg}", exc.lineno) from None
