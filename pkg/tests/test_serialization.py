import json

import numpy as np
import pytest

from tsptw_lookahead.datagen import HardParams, MediumParams, gen_hard_train, gen_medium
from tsptw_lookahead.expert import label_dataset
from tsptw_lookahead.pipeline import fit_level
from tsptw_lookahead.scorer import PolicyConfig
from tsptw_lookahead.serialization import (FormatError, load_checkpoint, read_jsonl,
                                           record_from_dict, record_to_dict, save_checkpoint,
                                           write_jsonl)


def test_record_round_trip(tmp_path):
    recs = label_dataset(gen_medium(MediumParams(6), 3, 0))[0] + gen_hard_train(HardParams(10), 2, 0)
    write_jsonl(recs, tmp_path / "d.jsonl")
    back = read_jsonl(tmp_path / "d.jsonl")
    for a, b in zip(recs, back):
        assert a.id == b.id and a.expert_tour == b.expert_tour
        assert a.expert_length == b.expert_length and a.meta == b.meta
        for f in ("coords", "tw_start", "tw_end", "end_unconstrained"):
            np.testing.assert_array_equal(getattr(a.instance, f), getattr(b.instance, f))


def test_schema_fields():
    rec = gen_medium(MediumParams(3), 1, 0)[0]
    d = record_to_dict(rec)
    assert d["n"] == 3 and len(d["coords"]) == 4 and len(d["tw"]) == 4
    assert d["tw"][0][2] is True and d["meta"]["seed"] == 0
    assert "expert_tour" not in d
    assert record_from_dict(json.loads(json.dumps(d))).id == rec.id


def test_bad_lines_raise(tmp_path):
    p = tmp_path / "bad.jsonl"
    p.write_text('{"id": "x"}\n')
    with pytest.raises(FormatError):
        read_jsonl(p)


def test_checkpoint_round_trip(tmp_path):
    recs = label_dataset(gen_medium(MediumParams(6), 10, 1))[0]
    osla = fit_level(recs, PolicyConfig(level="osla", hidden=(8,), epochs=2))
    musla = fit_level(recs, PolicyConfig(level="musla", hidden=(8,), epochs=2, k=2), osla)
    save_checkpoint(musla, tmp_path / "m.npz", extra={"note": "x"})
    back, doc = load_checkpoint(tmp_path / "m.npz")
    assert doc["extra"] == {"note": "x"} and doc["config"]["level"] == "musla"
    assert back.config == musla.config and back.lookahead.config == osla.config
    for k, v in musla.weights.items():
        np.testing.assert_array_equal(back.weights[k], v)
    np.testing.assert_array_equal(back.lookahead.in_std, osla.in_std)
