"""Dense id vocabularies with a shared out-of-vocabulary slot at index 0."""

from __future__ import annotations

import json

import numpy as np

from ..errors import DataError


class FeatureVocab:
    """Maps raw integer ids to dense indices per named field.

    Index 0 of every field is reserved for ids never seen at build time
    (and for the -1 missing-value marker), so embedding tables sized by
    size(field) always have a row for unknowns.
    """

    def __init__(self):
        self._maps: dict[str, dict[int, int]] = {}
        self._luts: dict[str, np.ndarray] = {}

    def build(self, field: str, raw_ids) -> None:
        if field in self._maps:
            raise DataError(f"vocabulary field {field!r} already built")
        uniq = sorted({int(r) for r in raw_ids if int(r) >= 0})
        self._maps[field] = {raw: i + 1 for i, raw in enumerate(uniq)}
        self._luts[field] = self._make_lut(self._maps[field])

    @staticmethod
    def _make_lut(mapping):
        top = max(mapping) if mapping else 0
        lut = np.zeros(top + 1, dtype=np.int64)
        for raw, idx in mapping.items():
            lut[raw] = idx
        return lut

    def _field(self, field):
        if field not in self._maps:
            raise DataError(f"unknown vocabulary field {field!r}")
        return self._maps[field]

    def size(self, field: str) -> int:
        return len(self._field(field)) + 1

    def fields(self):
        return sorted(self._maps)

    def encode(self, field: str, raw: int) -> int:
        return self._field(field).get(int(raw), 0)

    def encode_array(self, field: str, raw: np.ndarray) -> np.ndarray:
        self._field(field)
        lut = self._luts[field]
        arr = np.asarray(raw, dtype=np.int64)
        clipped = np.clip(arr, 0, len(lut) - 1)
        out = lut[clipped]
        return np.where((arr < 0) | (arr >= len(lut)), 0, out)

    def to_json(self) -> str:
        payload = {f: sorted(m.items()) for f, m in self._maps.items()}
        return json.dumps(payload, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FeatureVocab":
        vocab = cls()
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DataError(f"bad vocabulary json: {exc}") from exc
        for field, pairs in payload.items():
            mapping = {int(raw): int(idx) for raw, idx in pairs}
            vocab._maps[field] = mapping
            vocab._luts[field] = cls._make_lut(mapping)
        return vocab


def build_vocab(samples) -> FeatureVocab:
    """Build all field vocabularies from (training) samples."""
    users, items, cats, ctx = set(), set(), set(), set()
    for s in samples:
        users.add(s.user_id)
        items.add(s.item_id)
        items.update(s.slate_item_ids)
        cats.update(s.category_ids)
        cats.update(s.slate_category_ids)
        ctx.update(s.user_ctx_ids)
    vocab = FeatureVocab()
    vocab.build("user", users)
    vocab.build("item", items)
    vocab.build("category", cats)
    vocab.build("user_ctx", ctx)
    return vocab
