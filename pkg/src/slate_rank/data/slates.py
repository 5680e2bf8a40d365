"""Slate construction from interaction logs and slate-level dataset splits."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .movielens import InteractionLog


@dataclass
class SlateSample:
    """One (user, target item) pair together with the slate it was shown in.

    slate_item_ids / slate_category_ids always have the same length and
    include the target itself.  category ids of -1 mark items with no
    known category; the vocabulary maps them to the shared unknown index.
    """

    slate_id: int
    user_id: int
    item_id: int
    category_ids: tuple[int, ...]
    slate_item_ids: tuple[int, ...]
    slate_category_ids: tuple[int, ...]
    click: int
    watch_time: float | None = None
    user_ctx_ids: tuple[int, ...] = ()

    def __post_init__(self):
        if len(self.slate_item_ids) != len(self.slate_category_ids):
            raise DataError("slate item/category id lengths differ")
        if self.item_id not in self.slate_item_ids:
            raise DataError(f"target item {self.item_id} not a member of its slate")
        if self.click not in (0, 1):
            raise DataError(f"click label must be 0 or 1, got {self.click}")


def binarize_rating(rating: int) -> int:
    """Map a 1..5 star rating to a click label (>= 4 counts as positive)."""
    if not 1 <= rating <= 5:
        raise DataError(f"rating {rating} outside 1..5")
    return 1 if rating >= 4 else 0


def build_slates(log: InteractionLog, k: int = 20) -> list[SlateSample]:
    """Chunk each user's time-ordered ratings into fixed-size slates.

    Ratings are sorted by (timestamp, item_id) per user, grouped into
    consecutive runs of exactly k, and the trailing partial run is
    discarded.  Every kept rating becomes one sample whose slate is its
    chunk, so a user with 45 ratings yields 2 slates and 40 samples.
    """
    if k < 1:
        raise DataError(f"slate size must be >= 1, got {k}")
    by_user: dict[int, list] = {}
    for rec in log.records:
        by_user.setdefault(rec.user_id, []).append(rec)
    samples: list[SlateSample] = []
    slate_id = 0
    for user_id in sorted(by_user):
        recs = sorted(by_user[user_id], key=lambda r: (r.timestamp, r.item_id))
        n_full = len(recs) // k
        for c in range(n_full):
            chunk = recs[c * k:(c + 1) * k]
            slate_items = tuple(r.item_id for r in chunk)
            slate_cats = tuple(r.genre_ids[0] if r.genre_ids else -1 for r in chunk)
            for r in chunk:
                samples.append(SlateSample(
                    slate_id=slate_id,
                    user_id=user_id,
                    item_id=r.item_id,
                    category_ids=r.genre_ids if r.genre_ids else (-1,),
                    slate_item_ids=slate_items,
                    slate_category_ids=slate_cats,
                    click=binarize_rating(r.rating),
                ))
            slate_id += 1
    return samples


def split_dataset(samples, ratios=(8, 1, 1), seed: int = 0):
    """Partition samples into len(ratios) parts at slate granularity.

    All samples sharing a slate_id land in the same part.  Slates are
    shuffled with the given seed, then sliced by cumulative ratio with
    floor rounding; the last part absorbs the remainder.  Sample order
    inside each part follows the input order.
    """
    if not ratios or any(r < 0 for r in ratios) or sum(ratios) <= 0:
        raise DataError(f"bad split ratios {ratios!r}")
    slate_order: list[int] = []
    seen = set()
    for s in samples:
        if s.slate_id not in seen:
            seen.add(s.slate_id)
            slate_order.append(s.slate_id)
    if len(slate_order) < len(ratios):
        raise DataError(
            f"only {len(slate_order)} slates for {len(ratios)} splits"
        )
    rng = np.random.Generator(np.random.PCG64(seed))
    order = np.array(slate_order)
    rng.shuffle(order)
    total = float(sum(ratios))
    bounds = [int(np.floor(len(order) * sum(ratios[:i + 1]) / total))
              for i in range(len(ratios))]
    bounds[-1] = len(order)
    assign: dict[int, int] = {}
    start = 0
    for part, stop in enumerate(bounds):
        for sid in order[start:stop]:
            assign[int(sid)] = part
        start = stop
    parts: list[list[SlateSample]] = [[] for _ in ratios]
    for s in samples:
        parts[assign[s.slate_id]].append(s)
    return parts
