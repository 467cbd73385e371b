"""Tests for memoization, worker pools and report formatting."""

import json

import pytest

from stablekit.reporting import build_report, render_report, round_floats, write_report
from stablekit.utils import BoundedMemo, cached_result, get_thread_count, parallel_map


def test_cached_result_memoizes_by_arguments():
    calls = []

    @cached_result('square')
    def square(x):
        calls.append(x)
        return x * x

    assert square(3) == 9
    assert square(3) == 9
    assert square(4) == 16
    assert calls == [3, 4]


def test_bounded_memo_evicts_least_recently_used():
    memo = BoundedMemo(limit=2)
    memo.setdefault("x", 1)
    memo.setdefault("y", 2)
    assert memo.get("x") == 1
    memo.setdefault("z", 3)
    assert len(memo) == 2
    assert "y" not in memo
    assert memo.get("x") == 1 and memo.get("z") == 3


def test_bounded_memo_keeps_first_value():
    memo = BoundedMemo(limit=4)
    assert memo.setdefault("k", 1) == 1
    assert memo.setdefault("k", 2) == 1


def test_bounded_memo_rejects_empty_limit():
    with pytest.raises(ValueError):
        BoundedMemo(limit=0)


@pytest.mark.parametrize("raw, expected", [("1", 1), ("4", 4), ("0", 1), ("many", 1)])
def test_thread_count(monkeypatch, raw, expected):
    monkeypatch.setenv("STABLEKIT_THREADS", raw)
    assert get_thread_count() == expected


def test_parallel_map_keeps_order(monkeypatch):
    monkeypatch.setenv("STABLEKIT_THREADS", "4")
    assert parallel_map(lambda x: x * 2, range(50)) == [2 * x for x in range(50)]


def test_round_floats():
    assert round_floats(1 / 3) == 0.333333333333
    assert round_floats(float("inf")) == "inf"
    assert round_floats(-0.0) == 0.0
    assert round_floats({"a": [0.1 + 0.2, True, 3]}) == {"a": [0.3, True, 3]}


def test_reports_have_sorted_keys_and_tool_version():
    report = build_report("fold", {"subgroups": [["a"]]}, {"index": float("inf")}, scale=3, witnesses=["a"])
    text = render_report(report)
    assert json.loads(text)["result"]["index"] == "inf"
    assert text.index('"inputs"') < text.index('"operation"') < text.index('"result"')
    assert report["tool"]["name"] == "stablekit"
    assert "reason" not in report


def test_write_report_to_file(tmp_path):
    path = tmp_path / "out.json"
    write_report(build_report("fold", {}, []), str(path))
    assert json.loads(path.read_text())["operation"] == "fold"
