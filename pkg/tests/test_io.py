"""Tests for the line-oriented file formats and their error reporting."""

from __future__ import annotations

import json

import numpy as np
import pytest

from rsnn_lab.calib import ScoredOutcome
from rsnn_lab.config import MeasureConfig
from rsnn_lab.errors import DuplicateId, IoError, ParseError, SchemaError, UnknownLabel
from rsnn_lab.frame import Budget, FocalSet, make_frame, powerset_budget
from rsnn_lab.io import (
    DatasetFile,
    PredictionRecord,
    read_budget_file,
    read_embeddings,
    read_labels,
    read_outcomes,
    read_predictions,
    read_report,
    read_scores,
    report_text,
    write_budget_file,
    write_embeddings,
    write_labels,
    write_outcomes,
    write_predictions,
    write_report,
    write_scores,
)

FRAME = make_frame(["a", "b", "c"])
BUDGET = powerset_budget(FRAME)


def _full_dataset() -> DatasetFile:
    records = (
        PredictionRecord("p1", "point", probs=np.array([0.2, 0.3, 0.5])),
        PredictionRecord(
            "s1",
            "samples",
            samples=np.array([[0.7, 0.2, 0.1], [0.1, 0.6, 0.3]]),
        ),
        PredictionRecord(
            "b1",
            "belief",
            set_indices=(0, 3, 6),
            beliefs=np.array([0.5, 0.9, 1.0]),
        ),
        PredictionRecord(
            "i1",
            "interval",
            lower=np.array([0.1, 0.1, 0.1]),
            upper=np.array([0.8, 0.8, 0.8]),
        ),
    )
    cfg = MeasureConfig(divergence="js", ns_log_base="e", kl_epsilon=1e-10)
    return DatasetFile(FRAME, BUDGET, cfg, records)


class TestPredictionsRoundTrip:
    def test_all_kinds_roundtrip_exactly(self, tmp_path):
        path = tmp_path / "preds.jsonl"
        ds = _full_dataset()
        write_predictions(ds, path)
        back = read_predictions(path)
        assert back.frame.labels == ds.frame.labels
        assert back.budget is not None
        assert back.budget.bits_array().tolist() == ds.budget.bits_array().tolist()
        assert back.config == ds.config
        assert len(back.records) == 4
        for got, want in zip(back.records, ds.records):
            assert got.id == want.id
            assert got.kind == want.kind
        np.testing.assert_array_equal(back.records[0].probs, ds.records[0].probs)
        np.testing.assert_array_equal(back.records[1].samples, ds.records[1].samples)
        assert back.records[2].set_indices == (0, 3, 6)
        np.testing.assert_array_equal(back.records[2].beliefs, ds.records[2].beliefs)
        np.testing.assert_array_equal(back.records[3].lower, ds.records[3].lower)

    def test_write_read_write_is_byte_stable(self, tmp_path):
        first = tmp_path / "one.jsonl"
        second = tmp_path / "two.jsonl"
        write_predictions(_full_dataset(), first)
        write_predictions(read_predictions(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_no_budget_header(self, tmp_path):
        path = tmp_path / "nb.jsonl"
        ds = DatasetFile(
            FRAME,
            None,
            MeasureConfig(),
            (PredictionRecord("x", "point", probs=np.array([1.0, 0.0, 0.0])),),
        )
        write_predictions(ds, path)
        back = read_predictions(path)
        assert back.budget is None

    def test_irrational_floats_survive(self, tmp_path):
        path = tmp_path / "bits.jsonl"
        probs = np.array([1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0])
        probs[2] = 1.0 - probs[0] - probs[1]
        ds = DatasetFile(
            FRAME, None, MeasureConfig(), (PredictionRecord("x", "point", probs=probs),)
        )
        write_predictions(ds, path)
        np.testing.assert_array_equal(read_predictions(path).records[0].probs, probs)


def _write_lines(tmp_path, name, lines):
    path = tmp_path / name
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


HEADER = json.dumps(
    {"type": "header", "frame": ["a", "b", "c"], "budget": None, "config": {}}
)
HEADER_WITH_BUDGET = json.dumps(
    {
        "type": "header",
        "frame": ["a", "b", "c"],
        "budget": [[0], [1], [2], [0, 1, 2]],
        "config": {},
    }
)


class TestPredictionErrors:
    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ParseError) as err:
            read_predictions(path)
        assert err.value.line == 1

    def test_bad_header_json(self, tmp_path):
        path = _write_lines(tmp_path, "h.jsonl", ["{not json"])
        with pytest.raises(ParseError) as err:
            read_predictions(path)
        assert err.value.line == 1

    def test_header_missing_type(self, tmp_path):
        path = _write_lines(tmp_path, "h.jsonl", ['{"frame": ["a"]}'])
        with pytest.raises(SchemaError) as err:
            read_predictions(path)
        assert err.value.field == "type"

    def test_header_bad_frame(self, tmp_path):
        bad = json.dumps({"type": "header", "frame": ["a", "a"], "budget": None, "config": {}})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "h.jsonl", [bad]))
        assert err.value.field == "frame"

    def test_header_unsorted_budget_entry(self, tmp_path):
        bad = json.dumps(
            {"type": "header", "frame": ["a", "b"], "budget": [[1, 0]], "config": {}}
        )
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "h.jsonl", [bad]))
        assert err.value.field == "budget"

    def test_header_unknown_key(self, tmp_path):
        bad = json.dumps(
            {"type": "header", "frame": ["a", "b"], "budget": None, "config": {}, "x": 1}
        )
        with pytest.raises(SchemaError):
            read_predictions(_write_lines(tmp_path, "h.jsonl", [bad]))

    def test_record_bad_json_names_line(self, tmp_path):
        path = _write_lines(tmp_path, "r.jsonl", [HEADER, '{"id": "x"', ""])
        with pytest.raises(ParseError) as err:
            read_predictions(path)
        assert err.value.line == 2

    def test_record_bad_kind(self, tmp_path):
        rec = json.dumps({"id": "x", "kind": "fuzzy"})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER, rec]))
        assert err.value.line == 2
        assert err.value.field == "kind"

    def test_point_probs_not_normalized(self, tmp_path):
        rec = json.dumps({"id": "x", "kind": "point", "probs": [0.5, 0.6, 0.5]})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER, rec]))
        assert err.value.field == "probs"

    def test_third_line_locus(self, tmp_path):
        good = json.dumps({"id": "x", "kind": "point", "probs": [1.0, 0.0, 0.0]})
        bad = json.dumps({"id": "y", "kind": "point", "probs": [0.9, 0.0, 0.0]})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER, good, bad]))
        assert err.value.line == 3

    def test_belief_needs_header_budget(self, tmp_path):
        rec = json.dumps({"id": "x", "kind": "belief", "sets": [0], "beliefs": [1.0]})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER, rec]))
        assert err.value.field == "sets"

    def test_belief_set_index_out_of_range(self, tmp_path):
        rec = json.dumps({"id": "x", "kind": "belief", "sets": [99], "beliefs": [1.0]})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER_WITH_BUDGET, rec]))
        assert err.value.field == "sets"

    def test_belief_sets_default_to_full_budget(self, tmp_path):
        rec = json.dumps(
            {"id": "x", "kind": "belief", "beliefs": [0.1, 0.2, 0.3, 1.0]}
        )
        ds = read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER_WITH_BUDGET, rec]))
        assert ds.records[0].set_indices == (0, 1, 2, 3)

    def test_belief_values_out_of_range(self, tmp_path):
        rec = json.dumps({"id": "x", "kind": "belief", "sets": [0], "beliefs": [1.4]})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER_WITH_BUDGET, rec]))
        assert err.value.field == "beliefs"

    def test_interval_lower_above_upper(self, tmp_path):
        rec = json.dumps(
            {"id": "x", "kind": "interval", "lower": [0.9, 0.2, 0.2], "upper": [0.5, 1.0, 1.0]}
        )
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER, rec]))
        assert err.value.line == 2

    def test_samples_row_length(self, tmp_path):
        rec = json.dumps({"id": "x", "kind": "samples", "samples": [[0.5, 0.5]]})
        with pytest.raises(SchemaError) as err:
            read_predictions(_write_lines(tmp_path, "r.jsonl", [HEADER, rec]))
        assert err.value.field == "samples"

    def test_missing_file_is_io_error(self, tmp_path):
        with pytest.raises(IoError):
            read_predictions(tmp_path / "nope.jsonl")


class TestLabels:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "labels.csv"
        write_labels(path, [("r1", "a"), ("r2", "c")])
        assert read_labels(path, FRAME) == [0, 2]

    def test_unknown_label_names_line(self, tmp_path):
        path = _write_lines(tmp_path, "l.csv", ["r1,a", "r2,zebra"])
        with pytest.raises(UnknownLabel) as err:
            read_labels(path, FRAME)
        assert "line 2" in str(err.value)

    def test_duplicate_id(self, tmp_path):
        path = _write_lines(tmp_path, "l.csv", ["r1,a", "r1,b"])
        with pytest.raises(DuplicateId) as err:
            read_labels(path, FRAME)
        assert err.value.line == 2

    def test_bad_column_count(self, tmp_path):
        path = _write_lines(tmp_path, "l.csv", ["r1"])
        with pytest.raises(ParseError):
            read_labels(path, FRAME)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "l.csv"
        path.write_text("", encoding="utf-8")
        with pytest.raises(ParseError):
            read_labels(path, FRAME)


class TestEmbeddings:
    def test_roundtrip_exact(self, tmp_path):
        path = tmp_path / "emb.csv"
        rng = np.random.default_rng(0)
        points = rng.normal(size=(5, 3))
        write_embeddings(path, [f"e{i}" for i in range(5)], ["a"] * 5, points)
        back = read_embeddings(path)
        assert back.ids == tuple(f"e{i}" for i in range(5))
        assert back.labels == ("a",) * 5
        np.testing.assert_array_equal(back.points, points)

    def test_bad_column_count(self, tmp_path):
        path = _write_lines(tmp_path, "e.csv", ["id,a,1.0,2.0"])
        with pytest.raises(ParseError) as err:
            read_embeddings(path)
        assert err.value.line == 1

    def test_non_numeric_coordinate(self, tmp_path):
        path = _write_lines(tmp_path, "e.csv", ["id,a,1.0,x,3.0"])
        with pytest.raises(ParseError):
            read_embeddings(path)

    def test_non_finite_coordinate(self, tmp_path):
        path = _write_lines(tmp_path, "e.csv", ["id,a,1.0,inf,3.0"])
        with pytest.raises(SchemaError):
            read_embeddings(path)

    def test_empty_ids_rejected(self, tmp_path):
        path = _write_lines(tmp_path, "e.csv", [",a,1.0,2.0,3.0"])
        with pytest.raises(SchemaError) as err:
            read_embeddings(path)
        assert err.value.field == "id"


class TestBudgetFile:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "budget.txt"
        budget = Budget(
            (FocalSet(0b001, 3), FocalSet(0b010, 3), FocalSet(0b101, 3))
        )
        write_budget_file(path, budget)
        back = read_budget_file(path, 3)
        assert back.bits_array().tolist() == budget.bits_array().tolist()

    def test_non_integer_entry(self, tmp_path):
        path = _write_lines(tmp_path, "b.txt", ["0,one"])
        with pytest.raises(ParseError) as err:
            read_budget_file(path, 3)
        assert err.value.line == 1

    def test_decreasing_indices(self, tmp_path):
        path = _write_lines(tmp_path, "b.txt", ["2,0"])
        with pytest.raises(SchemaError):
            read_budget_file(path, 3)

    def test_index_outside_frame(self, tmp_path):
        path = _write_lines(tmp_path, "b.txt", ["0,7"])
        with pytest.raises(SchemaError) as err:
            read_budget_file(path, 3)
        assert err.value.line == 1

    def test_duplicate_set(self, tmp_path):
        path = _write_lines(tmp_path, "b.txt", ["0,1", "0,1"])
        with pytest.raises(SchemaError):
            read_budget_file(path, 3)


class TestScoresAndOutcomes:
    def test_scores_roundtrip_exact(self, tmp_path):
        path = tmp_path / "scores.txt"
        values = np.array([0.1, 1.0 / 3.0, 2.5e-8])
        write_scores(path, values)
        np.testing.assert_array_equal(read_scores(path), values)

    def test_scores_bad_number(self, tmp_path):
        path = _write_lines(tmp_path, "s.txt", ["0.5", "zebra"])
        with pytest.raises(ParseError) as err:
            read_scores(path)
        assert err.value.line == 2

    def test_scores_non_finite(self, tmp_path):
        path = _write_lines(tmp_path, "s.txt", ["nan"])
        with pytest.raises(SchemaError):
            read_scores(path)

    def test_outcomes_roundtrip(self, tmp_path):
        path = tmp_path / "o.csv"
        outcomes = [ScoredOutcome(0.9, "a", "a"), ScoredOutcome(0.4, "b", "c")]
        write_outcomes(path, outcomes)
        back = read_outcomes(path)
        assert back == outcomes

    def test_outcomes_bad_columns(self, tmp_path):
        path = _write_lines(tmp_path, "o.csv", ["0.5,a"])
        with pytest.raises(ParseError):
            read_outcomes(path)

    def test_outcomes_confidence_out_of_range(self, tmp_path):
        path = _write_lines(tmp_path, "o.csv", ["1.5,a,a"])
        with pytest.raises(SchemaError) as err:
            read_outcomes(path)
        assert err.value.line == 1


class TestReports:
    def test_report_roundtrip(self, tmp_path):
        path = tmp_path / "report.json"
        payload = {"kind": "demo", "value": 1.0 / 3.0, "nested": {"b": 2, "a": 1}}
        write_report(payload, path)
        assert read_report(path) == payload

    def test_report_text_sorted_and_stable(self):
        a = report_text({"b": 1, "a": 2})
        b = report_text({"a": 2, "b": 1})
        assert a == b
        assert a.index('"a"') < a.index('"b"')
        assert a.endswith("\n")

    def test_report_jsonifies_numpy(self):
        text = report_text({"x": np.float64(0.5), "y": np.array([1, 2])})
        assert json.loads(text) == {"x": 0.5, "y": [1, 2]}

    def test_read_report_errors(self, tmp_path):
        with pytest.raises(IoError):
            read_report(tmp_path / "missing.json")
        bad = tmp_path / "bad.json"
        bad.write_text("{", encoding="utf-8")
        with pytest.raises(ParseError):
            read_report(bad)
