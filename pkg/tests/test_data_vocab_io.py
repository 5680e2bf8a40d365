import numpy as np
import pytest

from slate_rank.data import (DatasetSplits, FeatureVocab, SynthConfig,
                             batch_iter, build_vocab, encode_samples,
                             load_dataset, pad_widths, save_dataset,
                             split_dataset, synth_generate)
from slate_rank.errors import DataError, UsageError


class TestFeatureVocab:
    def test_dense_sorted_indices(self):
        v = FeatureVocab()
        v.build("item", [9, 5, 3])
        assert v.size("item") == 4
        assert v.encode("item", 3) == 1
        assert v.encode("item", 5) == 2
        assert v.encode("item", 9) == 3

    def test_unseen_and_missing_map_to_zero(self):
        v = FeatureVocab()
        v.build("item", [3, 5])
        assert v.encode("item", 7) == 0
        assert v.encode("item", -1) == 0
        assert v.encode("item", 999) == 0

    def test_encode_array_matches_scalar(self):
        v = FeatureVocab()
        v.build("item", [3, 5, 9, 0])
        raw = np.array([[0, 3, -1], [5, 9, 42]])
        out = v.encode_array("item", raw)
        expect = np.array([[v.encode("item", r) for r in row] for row in raw])
        assert (out == expect).all()

    def test_unknown_field(self):
        v = FeatureVocab()
        with pytest.raises(DataError):
            v.encode("nope", 1)

    def test_duplicate_build_rejected(self):
        v = FeatureVocab()
        v.build("item", [1])
        with pytest.raises(DataError):
            v.build("item", [2])

    def test_json_round_trip(self):
        v = FeatureVocab()
        v.build("item", [4, 2, 0])
        v.build("user", [10])
        w = FeatureVocab.from_json(v.to_json())
        assert w.fields() == v.fields()
        for raw in (-1, 0, 2, 4, 5):
            assert w.encode("item", raw) == v.encode("item", raw)
        assert w.to_json() == v.to_json()


class TestEncodeSamples:
    def make(self):
        samples, _ = synth_generate(SynthConfig(
            n_users=10, n_items=20, n_categories=4, latent_dim=4,
            k=3, slates_per_user=2, seed=5))
        return samples, build_vocab(samples)

    def test_shapes_and_masks(self):
        samples, vocab = self.make()
        cat_w, ctx_w = pad_widths(samples)
        ds = encode_samples(samples, vocab, cat_w, ctx_w)
        assert ds.n == len(samples)
        assert ds.k == 3
        assert ds.item_cat_idx.shape == (ds.n, cat_w)
        assert ((ds.item_cat_mask == 0) | (ds.item_cat_mask == 1)).all()
        assert (ds.watch_mask == (np.array([s.click for s in samples]) == 1)).all()

    def test_oov_items_encode_to_zero(self):
        samples, vocab = self.make()
        train_vocab = build_vocab(samples[:6])
        ds = encode_samples(samples, train_vocab, 1, 1)
        assert ds.slate_idx.min() >= 0
        assert ds.slate_idx.max() < train_vocab.size("item")

    def test_mixed_slate_sizes_rejected(self):
        samples, vocab = self.make()
        other, _ = synth_generate(SynthConfig(
            n_users=4, n_items=20, n_categories=4, latent_dim=4,
            k=4, slates_per_user=1, seed=5))
        with pytest.raises(DataError):
            encode_samples(samples + other, vocab, 1, 1)

    def test_take_slices_all_columns(self):
        samples, vocab = self.make()
        ds = encode_samples(samples, vocab, 1, 1)
        sub = ds.take(np.array([0, 2, 4]))
        assert sub.n == 3
        assert (sub.item_idx == ds.item_idx[[0, 2, 4]]).all()
        assert (sub.slate_idx == ds.slate_idx[[0, 2, 4]]).all()


class TestBatchIter:
    def test_tail_batch(self):
        sizes = [len(b) for b in batch_iter(10, 4)]
        assert sizes == [4, 4, 2]

    def test_unshuffled_is_range(self):
        batches = list(batch_iter(5, 2))
        assert np.concatenate(batches).tolist() == [0, 1, 2, 3, 4]

    def test_shuffle_covers_everything_once(self):
        idx = np.concatenate(list(batch_iter(13, 5, shuffle=True, seed=1)))
        assert sorted(idx.tolist()) == list(range(13))

    def test_shuffle_deterministic_per_epoch(self):
        a = np.concatenate(list(batch_iter(20, 6, shuffle=True, seed=2, epoch=0)))
        b = np.concatenate(list(batch_iter(20, 6, shuffle=True, seed=2, epoch=0)))
        c = np.concatenate(list(batch_iter(20, 6, shuffle=True, seed=2, epoch=1)))
        assert (a == b).all()
        assert (a != c).any()

    def test_bad_batch_size(self):
        with pytest.raises(UsageError):
            list(batch_iter(10, 0))


class TestDatasetIo:
    def build_splits(self, seed=7):
        samples, _ = synth_generate(SynthConfig(
            n_users=12, n_items=30, n_categories=5, latent_dim=4,
            k=4, slates_per_user=2, seed=seed))
        train, val, test = split_dataset(samples, (8, 1, 1), seed=seed)
        return DatasetSplits(train, val, test, build_vocab(train),
                             {"k": 4, "seed": seed, "source": "synth"})

    def test_round_trip(self, tmp_path):
        splits = self.build_splits()
        save_dataset(str(tmp_path), splits)
        loaded = load_dataset(str(tmp_path))
        assert loaded.train == splits.train
        assert loaded.val == splits.val
        assert loaded.test == splits.test
        assert loaded.meta == splits.meta
        assert loaded.vocab.to_json() == splits.vocab.to_json()

    def test_rewrite_is_byte_identical_outside_provenance(self, tmp_path):
        splits = self.build_splits()
        d1, d2 = tmp_path / "a", tmp_path / "b"
        save_dataset(str(d1), splits)
        save_dataset(str(d2), splits)
        for name in ("train.tsv", "val.tsv", "test.tsv", "vocab.json"):
            assert (d1 / name).read_bytes() == (d2 / name).read_bytes()

    def test_watch_times_survive_exactly(self, tmp_path):
        splits = self.build_splits()
        save_dataset(str(tmp_path), splits)
        loaded = load_dataset(str(tmp_path))
        for a, b in zip(splits.train, loaded.train):
            assert a.watch_time == b.watch_time

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            load_dataset(str(tmp_path))

    def test_corrupt_line_reports_number(self, tmp_path):
        splits = self.build_splits()
        save_dataset(str(tmp_path), splits)
        path = tmp_path / "val.tsv"
        lines = path.read_text().splitlines()
        lines[6] = "not\ta\tsample"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataError, match="7"):
            load_dataset(str(tmp_path))

    def test_timestamp_only_in_provenance(self, tmp_path):
        splits = self.build_splits()
        save_dataset(str(tmp_path), splits)
        year = str(__import__("datetime").date.today().year)
        assert year in (tmp_path / "provenance.txt").read_text()
        for name in ("train.tsv", "vocab.json"):
            text = (tmp_path / name).read_text()
            assert "written_at" not in text
            assert year not in text
