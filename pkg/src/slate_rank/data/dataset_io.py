"""Tab-separated on-disk format for slate datasets.

Each split file starts with '# key=value' header lines (schema version,
slate size, seed, source) followed by one sample per line.  Id tuples
are comma-joined and floats are written with repr, so a load/save round
trip reproduces the file byte for byte.  Timestamps live only in
provenance.txt, never in data files.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

from ..errors import DataError
from .slates import SlateSample
from .vocab import FeatureVocab

SCHEMA_VERSION = 1
SPLIT_FILES = ("train.tsv", "val.tsv", "test.tsv")

_COLUMNS = ("slate_id", "user_id", "user_ctx", "item_id", "cats",
            "slate_items", "slate_cats", "click", "watch")


@dataclass
class DatasetSplits:
    train: list[SlateSample]
    val: list[SlateSample]
    test: list[SlateSample]
    vocab: FeatureVocab
    meta: dict = field(default_factory=dict)

    def split(self, name: str) -> list[SlateSample]:
        if name not in ("train", "val", "test"):
            raise DataError(f"unknown split {name!r}")
        return getattr(self, name)


def _join(ids) -> str:
    return ",".join(str(i) for i in ids)


def _split_ids(text: str) -> tuple[int, ...]:
    if not text:
        return ()
    return tuple(int(t) for t in text.split(","))


def _sample_line(s: SlateSample) -> str:
    watch = "" if s.watch_time is None else repr(s.watch_time)
    return "\t".join((
        str(s.slate_id), str(s.user_id), _join(s.user_ctx_ids),
        str(s.item_id), _join(s.category_ids),
        _join(s.slate_item_ids), _join(s.slate_category_ids),
        str(s.click), watch,
    ))


def _write_split(path: str, samples, meta: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# schema={SCHEMA_VERSION}\n")
        for key in ("k", "seed", "source"):
            fh.write(f"# {key}={meta[key]}\n")
        fh.write("# columns=" + ",".join(_COLUMNS) + "\n")
        for s in samples:
            fh.write(_sample_line(s) + "\n")


def _read_split(path: str) -> tuple[list[SlateSample], dict]:
    header: dict[str, str] = {}
    samples: list[SlateSample] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    raise DataError(f"{path}:{lineno}: bad header line")
                key, value = body.split("=", 1)
                header[key.strip()] = value.strip()
                continue
            parts = line.split("\t")
            if len(parts) != len(_COLUMNS):
                raise DataError(
                    f"{path}:{lineno}: expected {len(_COLUMNS)} columns, got {len(parts)}")
            try:
                samples.append(SlateSample(
                    slate_id=int(parts[0]),
                    user_id=int(parts[1]),
                    user_ctx_ids=_split_ids(parts[2]),
                    item_id=int(parts[3]),
                    category_ids=_split_ids(parts[4]),
                    slate_item_ids=_split_ids(parts[5]),
                    slate_category_ids=_split_ids(parts[6]),
                    click=int(parts[7]),
                    watch_time=None if parts[8] == "" else float(parts[8]),
                ))
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    if header.get("schema") != str(SCHEMA_VERSION):
        raise DataError(f"{path}: unsupported schema {header.get('schema')!r}")
    return samples, header


def save_dataset(out_dir: str, splits: DatasetSplits) -> None:
    os.makedirs(out_dir, exist_ok=True)
    meta = {"k": splits.meta.get("k", 0),
            "seed": splits.meta.get("seed", 0),
            "source": splits.meta.get("source", "unknown")}
    for name, samples in zip(SPLIT_FILES, (splits.train, splits.val, splits.test)):
        _write_split(os.path.join(out_dir, name), samples, meta)
    with open(os.path.join(out_dir, "vocab.json"), "w", encoding="utf-8") as fh:
        fh.write(splits.vocab.to_json())
        fh.write("\n")
    stamp = datetime.now(timezone.utc).isoformat()
    with open(os.path.join(out_dir, "provenance.txt"), "w", encoding="utf-8") as fh:
        fh.write(f"written_at={stamp}\n")
        for key in sorted(splits.meta):
            fh.write(f"{key}={splits.meta[key]}\n")
        for name, samples in zip(("train", "val", "test"),
                                 (splits.train, splits.val, splits.test)):
            fh.write(f"{name}_samples={len(samples)}\n")


def load_dataset(in_dir: str) -> DatasetSplits:
    parts = []
    headers = []
    for name in SPLIT_FILES:
        path = os.path.join(in_dir, name)
        if not os.path.exists(path):
            raise DataError(f"missing split file {path}")
        samples, header = _read_split(path)
        parts.append(samples)
        headers.append(header)
    vocab_path = os.path.join(in_dir, "vocab.json")
    if not os.path.exists(vocab_path):
        raise DataError(f"missing vocabulary file {vocab_path}")
    with open(vocab_path, encoding="utf-8") as fh:
        vocab = FeatureVocab.from_json(fh.read())
    meta = {"k": int(headers[0].get("k", 0)),
            "seed": int(headers[0].get("seed", 0)),
            "source": headers[0].get("source", "unknown")}
    return DatasetSplits(parts[0], parts[1], parts[2], vocab, meta)
