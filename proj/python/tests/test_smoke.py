import json
import math
import os
from pathlib import Path

import pytest

import mpsumm

DATA = Path(os.environ.get("MPSUMM_DATA", Path(__file__).resolve().parents[2] / "data"))


def test_split_and_terms():
    assert mpsumm.split_sentences("It costs 3.50 today. Dr. Smith agreed!") == [
        "It costs 3.50 today.",
        "Dr. Smith agreed!",
    ]
    assert mpsumm.terms("Red FOX, red.") == ["red", "fox", "red"]
    assert mpsumm.content_key("") == "cbf29ce484222325"


def test_rouge_and_nli():
    r = mpsumm.rouge_l("the cat sat", "the cat sat down")
    assert r["precision"] == 1.0
    assert r["recall"] == pytest.approx(0.75)
    assert mpsumm.nli_aggregate([[0.2, 0.9], [0.4, 0.1]]) == pytest.approx(0.65)


def test_cluster_and_area():
    vecs = [[1.0, 0.0], [0.99, 0.01], [0.0, 1.0]]
    out = mpsumm.cluster(vecs, 0.65)
    assert [c["members"] for c in out["clusters"]] == [[0, 1], [2]]
    assert out["merges"][0][:2] == (0, 1)
    assert mpsumm.semantic_area([[0, 0, 0], [1, 0, 0], [0, 1, 0]]) == pytest.approx(0.5)
    assert mpsumm.semantic_area([[1, 2], [1, 2], [1, 2]]) == 0.0


def test_losses():
    assert mpsumm.rl_loss(0.9, 0.4, [-1.0, -1.0]) == pytest.approx(-1.0)
    assert mpsumm.mixed_loss(1, 2, 0, "rl") == pytest.approx(1.1)
    s = 6
    loss = mpsumm.span_loss([[0.0] * s] * 3, [[0.0] * s] * 3, [(0, 1)] * 3)
    assert loss == pytest.approx(2 * math.log(s))
    assert mpsumm.gold_spans(["red fox"], ["a blue cat", "the red fox ran"]) == [1]


def test_provider_and_errors():
    p = mpsumm.Provider("lexical", 64)
    assert p.describe().startswith("lexical")
    assert len(p.embed(["one", "two"])[0]) == 64
    with pytest.raises(mpsumm.MpsummError) as info:
        mpsumm.nli_aggregate([])
    assert info.value.code
    with pytest.raises(mpsumm.MpsummError):
        mpsumm.Provider("nonsense://x")


def test_pipeline_on_mini_corpus(tmp_path):
    records = [json.loads(l) for l in (DATA / "mini_corpus.jsonl").read_text().splitlines() if l.strip()]
    out = mpsumm.run_pipeline(records, {"seed": "17"})
    n = sum(len(out[k]) for k in ("train", "validation", "test"))
    assert n == out["surviving"] > 0
    for ex in out["train"]:
        assert ex["summary_bullets"]
        assert all(b not in ex["source_sentences"] for b in ex["summary_bullets"])
    executed, reused = mpsumm.run_to_directory(DATA / "mini_corpus.jsonl", tmp_path / "run")
    assert reused == [] and "split" in executed
    executed, reused = mpsumm.run_to_directory(DATA / "mini_corpus.jsonl", tmp_path / "run")
    assert executed == []
    assert len((tmp_path / "run" / "train.jsonl").read_text().splitlines()) == len(out["train"])
