import os

import pytest

import postreason

DATA = os.environ.get("POSTREASON_DATA_DIR", os.path.join(os.path.dirname(__file__), "..", "..", "data"))


def test_relative_delta():
    assert postreason.format_fixed2(postreason.relative_delta(14.4, 23.5)) == "63.19"
    assert postreason.format_fixed2(postreason.relative_delta(50.0, 50.0)) == "0.00"
    with pytest.raises(postreason.UndefinedDeltaError):
        postreason.relative_delta(0.0, 10.0)


def test_size_bucket():
    assert [postreason.size_bucket(b) for b in (4, 10, 10.5, 69.9, 70)] == [
        "small", "small", "mid", "mid", "large"]


def test_extract_answer():
    ex = postreason.extract_answer("<think>Answer: 7</think>Answer: 9.", "integer")
    assert ex["answer"] == "9"
    assert ex["method"] == "answer_tag"
    assert postreason.extract_answer("Answer: E", "letter", ["A", "B", "C", "D"])["answer"] is None
    assert postreason.extract_answer("1,234", "numeric")["method"] == "bare_value"
    assert postreason.truncate_at_answer("Answer: 18. Explanation: x", "numeric") == "Answer: 18."


def test_validate_trace():
    assert postreason.validate_trace("", "5") == ["empty"]
    long_trace = " ".join(f"w{i}" for i in range(30))
    assert postreason.validate_trace(long_trace, "5") == []
    assert "answer_leak" in postreason.validate_trace("The answer is 5 " + long_trace, "5")


def test_sft_record_masks_the_answer():
    rec = postreason.build_sft_record("q1", "What is 2+3?", "5", "Two plus three gives five.")
    segs = rec["segments"]
    assert [s["trainable"] for s in segs] == [False, False, True]
    assert "Answer: 5." in segs[1]["text"]
    with pytest.raises(postreason.Error):
        postreason.build_sft_record("q1", "q", "5", "so Answer: 5 obviously")


def test_fixture_summary():
    s = postreason.summarize_csv(
        os.path.join(DATA, "fixtures", "reported_deltas.csv"),
        os.path.join(DATA, "registry.json"))
    assert round(s["amc_mean_pct"], 2) == 34.19
    assert round(s["amc_strata_pct"]["small"], 2) == 37.71
