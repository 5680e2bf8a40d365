"""Dense numpy encoding of slate samples for model consumption."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from .vocab import FeatureVocab


@dataclass
class EncodedDataset:
    """Column arrays over N samples, ids already vocabulary-encoded.

    Variable-length id tuples (target categories, user context) are
    right-padded to a fixed width with index 0 and carry a 0/1 mask so
    pooled embeddings ignore the padding.
    """

    user_idx: np.ndarray       # [N]
    user_ctx_idx: np.ndarray   # [N, C]
    user_ctx_mask: np.ndarray  # [N, C]
    item_idx: np.ndarray       # [N]
    item_cat_idx: np.ndarray   # [N, G]
    item_cat_mask: np.ndarray  # [N, G]
    slate_idx: np.ndarray      # [N, K]
    slate_cat_idx: np.ndarray  # [N, K]
    click: np.ndarray          # [N]
    watch: np.ndarray          # [N]
    watch_mask: np.ndarray     # [N]
    slate_ids: np.ndarray      # [N]

    @property
    def n(self) -> int:
        return int(self.user_idx.shape[0])

    @property
    def k(self) -> int:
        return int(self.slate_idx.shape[1])

    def take(self, indices) -> "EncodedDataset":
        idx = np.asarray(indices)
        return EncodedDataset(*(getattr(self, f.name)[idx]
                                for f in self.__dataclass_fields__.values()))


def _pad(tuples, width):
    ids = np.zeros((len(tuples), width), dtype=np.int64)
    mask = np.zeros((len(tuples), width), dtype=np.float64)
    for row, t in enumerate(tuples):
        m = len(t)
        if m > width:
            raise DataError(f"id tuple of length {m} exceeds pad width {width}")
        if m:
            ids[row, :m] = t
            mask[row, :m] = 1.0
    return ids, mask


def encode_samples(samples, vocab: FeatureVocab,
                   cat_width: int, ctx_width: int) -> EncodedDataset:
    """Turn samples into padded index arrays using the given vocabulary.

    All slates must share one length; ids outside the vocabulary map to
    index 0.
    """
    if not samples:
        raise DataError("cannot encode an empty sample list")
    k = len(samples[0].slate_item_ids)
    for s in samples:
        if len(s.slate_item_ids) != k:
            raise DataError(
                f"mixed slate sizes: {len(s.slate_item_ids)} vs {k}")
    user_raw = np.array([s.user_id for s in samples], dtype=np.int64)
    item_raw = np.array([s.item_id for s in samples], dtype=np.int64)
    slate_raw = np.array([s.slate_item_ids for s in samples], dtype=np.int64)
    slate_cat_raw = np.array([s.slate_category_ids for s in samples], dtype=np.int64)
    cat_raw, cat_mask = _pad([s.category_ids for s in samples], cat_width)
    ctx_raw, ctx_mask = _pad([s.user_ctx_ids for s in samples], max(ctx_width, 1))
    click = np.array([float(s.click) for s in samples])
    watch = np.array([0.0 if s.watch_time is None else float(s.watch_time)
                      for s in samples])
    watch_mask = np.array([0.0 if s.watch_time is None else 1.0 for s in samples])
    return EncodedDataset(
        user_idx=vocab.encode_array("user", user_raw),
        user_ctx_idx=vocab.encode_array("user_ctx", ctx_raw) * ctx_mask.astype(np.int64),
        user_ctx_mask=ctx_mask,
        item_idx=vocab.encode_array("item", item_raw),
        item_cat_idx=vocab.encode_array("category", cat_raw) * cat_mask.astype(np.int64),
        item_cat_mask=cat_mask,
        slate_idx=vocab.encode_array("item", slate_raw),
        slate_cat_idx=vocab.encode_array("category", slate_cat_raw),
        click=click,
        watch=watch,
        watch_mask=watch_mask,
        slate_ids=np.array([s.slate_id for s in samples], dtype=np.int64),
    )


def pad_widths(*sample_lists) -> tuple[int, int]:
    """Category and context pad widths covering every given split."""
    cat_w, ctx_w = 1, 1
    for samples in sample_lists:
        for s in samples:
            cat_w = max(cat_w, len(s.category_ids))
            ctx_w = max(ctx_w, len(s.user_ctx_ids))
    return cat_w, ctx_w


@dataclass
class EncodedSplits:
    train: EncodedDataset
    val: EncodedDataset
    test: EncodedDataset


def encode_splits(splits) -> EncodedSplits:
    """Encode a DatasetSplits with pad widths shared across all parts."""
    cat_w, ctx_w = pad_widths(splits.train, splits.val, splits.test)
    return EncodedSplits(
        train=encode_samples(splits.train, splits.vocab, cat_w, ctx_w),
        val=encode_samples(splits.val, splits.vocab, cat_w, ctx_w),
        test=encode_samples(splits.test, splits.vocab, cat_w, ctx_w),
    )
