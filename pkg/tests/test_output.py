import csv
import io
import json

import pytest

from cachecalc.output import COLUMNS, EmitError, emit, make_row, metadata, read_json, to_csv, to_json


def test_header_only_csv():
    text = to_csv([])
    assert text == ",".join(COLUMNS) + "\r\n"


def test_one_row_csv():
    row = make_row(command="exact", users=2, caches=2, t=1, gamma=0.5, exact=0.75, t_min=0.5, g=1.5,
                   note='has, comma "quoted"')
    text = to_csv([row])
    lines = text.split("\r\n")
    assert len(lines) == 3 and lines[-1] == ""
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert parsed[0]["exact"] == "0.75"
    assert parsed[0]["note"] == 'has, comma "quoted"'
    assert parsed[0]["aub"] == ""


def test_twelve_significant_digits():
    row = make_row(exact=1 / 3, sbn_se=1.23456789012345e-7, aub=123456.789)
    parsed = next(csv.DictReader(io.StringIO(to_csv([row]))))
    assert parsed["exact"] == "0.333333333333"
    assert parsed["sbn_se"] == "0.000000123456789012"
    assert "e" not in parsed["sbn_se"]
    assert parsed["aub"] == "123456.789"


def test_metrics_must_be_finite_and_non_negative():
    with pytest.raises(ValueError):
        make_row(exact=float("nan"))
    with pytest.raises(ValueError):
        make_row(aub=-1.0)
    with pytest.raises(KeyError):
        make_row(bogus=1)


def test_json_round_trip():
    rows = [make_row(command="bounds", users=4, caches=2, t=1, aub=1.5, alb=1.0, note="x"), make_row(command="exact")]
    meta = metadata(seed=3)
    back_meta, back = read_json(to_json(rows, meta))
    assert back_meta == meta and back_meta["tool"] == "cachecalc"
    assert back == rows


def test_metadata_timestamp(monkeypatch):
    monkeypatch.delenv("SOURCE_DATE_EPOCH", raising=False)
    assert metadata(1)["timestamp"] is None
    assert metadata(1, stamp=True)["timestamp"].endswith("+00:00")
    monkeypatch.setenv("SOURCE_DATE_EPOCH", "0")
    assert metadata(1)["timestamp"] == "1970-01-01T00:00:00+00:00"


def test_emit_to_file(tmp_path):
    target = tmp_path / "sub" / "out.json"
    emit([make_row(exact=1.0)], "json", target)
    assert json.loads(target.read_text())[1]["exact"] == 1.0


def test_emit_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(EmitError, match="file"):
        emit([], "csv", blocker / "x.csv")
    with pytest.raises(ValueError):
        emit([], "xml", None)
