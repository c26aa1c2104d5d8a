"""On-disk formats: JSONL datasets, scorer checkpoints, solution files.

Dataset line schema::

    {"id": str, "n": int, "coords": [[x, y], ...],
     "tw": [[start, end, unconstrained], ...],
     "meta": {"generator": str, "params": {...}, "seed": int, ...},
     "expert_tour": [0, ...],        # optional
     "expert_length": float}         # optional

Checkpoints are ``.npz`` archives. Key ``__config__`` holds a JSON document
with ``format_version``, the policy config and any extra provenance; weights
sit under their own names, and a musla checkpoint stores its one-step scorer
under the ``lookahead/`` prefix.
"""
from __future__ import annotations

import json
import os
from typing import Iterable, Sequence

import numpy as np

from .core import Instance
from .datagen import DatasetRecord
from .scorer import PolicyConfig, ScorerParams, config_dict

CHECKPOINT_VERSION = 1


class FormatError(ValueError):
    pass


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def record_to_dict(rec: DatasetRecord) -> dict:
    inst = rec.instance
    out = {
        "id": rec.id,
        "n": inst.n,
        "coords": inst.coords.tolist(),
        "tw": [[float(s), float(e), bool(f)] for s, e, f in
               zip(inst.tw_start, inst.tw_end, inst.end_unconstrained)],
        "meta": _plain(rec.meta),
    }
    if rec.labeled:
        out["expert_tour"] = [int(v) for v in rec.expert_tour]
        out["expert_length"] = float(rec.expert_length)
    return out


def record_from_dict(d: dict) -> DatasetRecord:
    try:
        tw = np.asarray(d["tw"], dtype=float).reshape(-1, 3)
        inst = Instance(d["coords"], tw[:, 0], tw[:, 1], tw[:, 2].astype(bool))
        if "n" in d and int(d["n"]) != inst.n:
            raise FormatError(f"record {d['id']}: n={d['n']} but {inst.n + 1} nodes")
        tour = d.get("expert_tour")
        return DatasetRecord(
            id=str(d["id"]),
            instance=inst,
            expert_tour=None if tour is None else tuple(int(v) for v in tour),
            expert_length=d.get("expert_length"),
            meta=d.get("meta", {}),
        )
    except (KeyError, TypeError) as exc:
        raise FormatError(f"malformed dataset record: {exc!r}") from exc


def dumps_record(rec: DatasetRecord) -> str:
    return json.dumps(record_to_dict(rec), separators=(",", ":"))


def write_jsonl(records: Iterable[DatasetRecord], path) -> int:
    count = 0
    with open(path, "w") as fh:
        for rec in records:
            fh.write(dumps_record(rec) + "\n")
            count += 1
    return count


def read_jsonl(path) -> list[DatasetRecord]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                out.append(record_from_dict(json.loads(line)))
            except (json.JSONDecodeError, ValueError) as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from exc
    return out


def write_solutions(rows: Sequence[tuple], path, header: dict | None = None) -> None:
    """``(id, tour)`` pairs as ``<id> <node> <node> ...`` lines.

    ``header`` is written as a leading ``# {json}`` comment, which the import
    path skips.
    """
    with open(path, "w") as fh:
        if header is not None:
            fh.write("# " + json.dumps(header, sort_keys=True) + "\n")
        for rid, tour in rows:
            fh.write(rid + " " + " ".join(str(int(v)) for v in tour) + "\n")


def _flatten(params: ScorerParams, prefix: str = "") -> dict:
    arrays = {prefix + k: v for k, v in params.weights.items()}
    arrays[prefix + "in_mean"] = params.in_mean
    arrays[prefix + "in_std"] = params.in_std
    return arrays


def save_checkpoint(params: ScorerParams, path, extra: dict | None = None) -> None:
    doc = {"format_version": CHECKPOINT_VERSION, "config": config_dict(params.config),
           "extra": _plain(extra or {})}
    arrays = _flatten(params)
    if params.lookahead is not None:
        doc["lookahead_config"] = config_dict(params.lookahead.config)
        arrays.update(_flatten(params.lookahead, "lookahead/"))
    arrays["__config__"] = np.array(json.dumps(doc))
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def _unflatten(config: PolicyConfig, arrays, prefix: str = "") -> ScorerParams:
    template = ScorerParams.init(config)
    weights = {k: np.array(arrays[prefix + k], dtype=float) for k in template.weights}
    p = ScorerParams(config, weights, np.array(arrays[prefix + "in_mean"]),
                     np.array(arrays[prefix + "in_std"]))
    p.check()
    return p


def load_checkpoint(path) -> tuple[ScorerParams, dict]:
    """Returns the scorer and the JSON header (config, extra provenance)."""
    if not os.path.exists(path):
        raise FileNotFoundError(path)
    with np.load(path, allow_pickle=False) as z:
        if "__config__" not in z:
            raise FormatError(f"{path}: not a scorer checkpoint")
        doc = json.loads(str(z["__config__"]))
        if doc.get("format_version") != CHECKPOINT_VERSION:
            raise FormatError(f"{path}: unsupported checkpoint version {doc.get('format_version')}")
        try:
            params = _unflatten(PolicyConfig(**doc["config"]), z)
            if "lookahead_config" in doc:
                params.lookahead = _unflatten(PolicyConfig(**doc["lookahead_config"]), z, "lookahead/")
        except KeyError as exc:
            raise FormatError(f"{path}: missing array {exc}") from exc
    return params, doc
