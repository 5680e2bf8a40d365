"""MovieLens-1M ingestion ("::"-delimited ratings.dat / movies.dat)."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import DataError


@dataclass
class Interaction:
    user_id: int
    item_id: int
    rating: int
    timestamp: int
    genre_ids: tuple[int, ...] = ()


@dataclass
class InteractionLog:
    records: list[Interaction] = field(default_factory=list)
    genre_names: dict[str, int] = field(default_factory=dict)  # genre -> raw id
    item_genres: dict[int, tuple[int, ...]] = field(default_factory=dict)


def _parse_movies(path) -> tuple[dict[str, int], dict[int, tuple[int, ...]]]:
    genre_ids: dict[str, int] = {}
    item_genres: dict[int, tuple[int, ...]] = {}
    with open(path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 '::' fields, got {len(parts)}")
            try:
                item_id = int(parts[0])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: bad item id {parts[0]!r}") from exc
            ids = []
            for name in parts[2].split("|"):
                name = name.strip()
                if not name:
                    continue
                if name not in genre_ids:
                    genre_ids[name] = len(genre_ids)
                ids.append(genre_ids[name])
            item_genres[item_id] = tuple(ids)
    return genre_ids, item_genres


def parse_movielens(ratings_path, movies_path) -> InteractionLog:
    """Read the canonical rating and movie files into an interaction log.

    Genre names are assigned raw ids in order of first appearance in the
    movies file; each rating record carries its item's genre id tuple.
    Malformed lines raise DataError with the offending line number.
    """
    genre_ids, item_genres = _parse_movies(movies_path)
    log = InteractionLog(genre_names=genre_ids, item_genres=item_genres)
    with open(ratings_path, encoding="latin-1") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("::")
            if len(parts) != 4:
                raise DataError(
                    f"{ratings_path}:{lineno}: expected 4 '::' fields, got {len(parts)}"
                )
            try:
                user_id, item_id, rating, ts = (int(p) for p in parts)
            except ValueError as exc:
                raise DataError(f"{ratings_path}:{lineno}: non-integer field") from exc
            if not 1 <= rating <= 5:
                raise DataError(f"{ratings_path}:{lineno}: rating {rating} outside 1..5")
            if ts < 0:
                raise DataError(f"{ratings_path}:{lineno}: negative timestamp")
            log.records.append(
                Interaction(user_id, item_id, rating, ts, item_genres.get(item_id, ()))
            )
    return log
