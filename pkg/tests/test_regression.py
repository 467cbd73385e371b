"""Tests for the regression-constant store."""

import json

from stablekit import regression
from stablekit.config import TOOL_VERSION, regression_path
from stablekit.regression import RegressionStore


def test_record_then_compare(tmp_path):
    path = tmp_path / "store.json"
    store = regression.load(path)
    assert store.values == {}
    written = regression.record(store, {"b": 2.0, "a": 1})
    assert written == ["a", "b"]

    data = json.loads(path.read_text())
    assert data == {"tool_version": TOOL_VERSION, "values": {"a": 1, "b": 2.0}}

    reloaded = regression.load(path)
    assert regression.compare(reloaded, {"a": 1, "b": 2.0, "c": 9}) == []
    assert regression.compare(reloaded, {"b": 2.5}) == [{"name": "b", "expected": 2.0, "measured": 2.5}]
    assert regression.compare(reloaded, {"b": 2.5}, tolerance=1.0) == []


def test_record_keeps_pinned_values(tmp_path):
    store = RegressionStore(tmp_path / "store.json")
    assert store.record("x", 1)
    assert not store.record("x", 2)
    assert store.values["x"] == 1
    assert store.record("x", 2, overwrite=True)


def test_missing_names(tmp_path):
    store = RegressionStore(tmp_path / "store.json")
    store.record("a", 0.0)
    assert store.missing({"a": 0.0, "c": 1, "b": 2}) == ["b", "c"]


def test_corrupt_store_is_ignored(tmp_path):
    path = tmp_path / "store.json"
    path.write_text("{broken")
    store = RegressionStore(path)
    assert store.load() is False
    assert store.values == {}


def test_environment_override(tmp_path, monkeypatch):
    target = tmp_path / "elsewhere.json"
    monkeypatch.setenv("STABLEKIT_REGRESSION", str(target))
    assert regression_path() == target


def test_shipped_store_pins_exact_values():
    store = RegressionStore(regression_path())
    if store.load():
        assert store.values["theta_a_defect_L3"] == 0.0
