import numpy as np
import pytest

from slate_rank.data import (DatasetSplits, SynthConfig, build_vocab,
                             encode_splits, split_dataset, synth_generate)
from slate_rank.diffcore import Tape
from slate_rank.errors import ConfigError, TrainingError, UsageError
from slate_rank.metrics import evaluate
from slate_rank.models import ModelSpec, forward_train, init_params
from slate_rank.trainer import (TrainConfig, joint_loss, lambda_sweep, train,
                                train_pfd)
from slate_rank.trainer.loop import _fit
from slate_rank.trainer.sweep import sweep_to_csv

from test_models import toy_batch, toy_spec


def synth_splits(seed=0, gamma=1.0, n_users=60):
    cfg = SynthConfig(n_users=n_users, n_items=80, n_categories=6,
                      latent_dim=6, k=4, slates_per_user=3,
                      gamma=gamma, seed=seed)
    samples, _ = synth_generate(cfg)
    parts = split_dataset(samples, (8, 1, 1), seed=seed)
    vocab = build_vocab(parts[0])
    splits = DatasetSplits(parts[0], parts[1], parts[2], vocab,
                           {"k": cfg.k, "seed": seed, "source": "synth"})
    return encode_splits(splits), vocab


def spec_for(vocab, backbone="ncf", sar="attn", dim=4,
             tasks=(("click", "binary"),)):
    sizes = {f: vocab.size(f) for f in ("user", "user_ctx", "item", "category")}
    return ModelSpec(backbone=backbone, sar=sar, dim=dim, hidden=(8, 4),
                     tasks=tasks, k=4, vocab_sizes=sizes)


def quick_cfg(**kw):
    base = dict(task_weights={"click": 1.0}, sim_weight=1.0, epochs=3,
                batch_size=64, seed=0, patience=10)
    base.update(kw)
    return TrainConfig(**base)


class TestTrainConfig:
    def test_validation(self):
        with pytest.raises(ConfigError):
            TrainConfig(task_weights={})
        with pytest.raises(ConfigError):
            TrainConfig(task_weights={"click": -1.0})
        with pytest.raises(ConfigError):
            TrainConfig(task_weights={"click": 0.0})
        with pytest.raises(ConfigError):
            TrainConfig(sim_weight=-0.1)
        with pytest.raises(ConfigError):
            TrainConfig(batch_size=0)


class TestJointLoss:
    def test_single_task_ln2(self):
        spec = toy_spec(sar="none")
        params = init_params(spec, seed=0)
        for p in params.values():
            p.data[:] = 0.0
        batch = toy_batch(spec, b=4)
        batch.click[:] = 1.0
        tape = Tape()
        out = forward_train(tape, batch, params, spec)
        cfg = TrainConfig(task_weights={"click": 1.0}, sim_weight=0.0)
        loss, parts = joint_loss(tape, out, batch, cfg, spec)
        assert loss.data == pytest.approx(np.log(2.0), rel=1e-12)
        assert parts["click"] == pytest.approx(np.log(2.0), rel=1e-12)

    def test_lambda_zero_is_pure_task_loss(self):
        spec = toy_spec(sar="attn")
        params = init_params(spec, seed=1)
        batch = toy_batch(spec, b=4, seed=2)
        tape = Tape()
        out = forward_train(tape, batch, params, spec)
        cfg = TrainConfig(task_weights={"click": 2.5}, sim_weight=0.0)
        loss, parts = joint_loss(tape, out, batch, cfg, spec)
        bce = Tape().loss_bce(out.predictions["click"], batch.click)
        assert loss.data == pytest.approx(2.5 * bce.data, rel=1e-12)

    def test_decomposition(self):
        spec = toy_spec(backbone="ple", sar="attn",
                        tasks=(("click", "binary"), ("watch", "regression")))
        params = init_params(spec, seed=3)
        batch = toy_batch(spec, b=6, seed=4)
        tape = Tape()
        out = forward_train(tape, batch, params, spec)
        cfg = TrainConfig(task_weights={"click": 1.0, "watch": 0.3},
                          sim_weight=0.7)
        loss, parts = joint_loss(tape, out, batch, cfg, spec)
        want = parts["click"] + 0.3 * parts["watch"] + 0.7 * parts["sim"]
        assert abs(float(loss.data) - want) < 1e-9

    def test_two_sample_batch_matches_per_sample_average(self):
        spec = toy_spec(sar="none")
        params = init_params(spec, seed=5)
        batch = toy_batch(spec, b=2, seed=6)
        cfg = TrainConfig(task_weights={"click": 1.0}, sim_weight=0.0)
        tape = Tape()
        out = forward_train(tape, batch, params, spec)
        loss, _ = joint_loss(tape, out, batch, cfg, spec)
        singles = []
        for i in range(2):
            one = batch.take(np.array([i]))
            t = Tape()
            o = forward_train(t, one, params, spec)
            l, _ = joint_loss(t, o, one, cfg, spec)
            singles.append(float(l.data))
        assert float(loss.data) == pytest.approx(np.mean(singles), abs=1e-12)

    def test_sim_without_heads_rejected(self):
        spec = toy_spec(sar="none")
        params = init_params(spec, seed=0)
        batch = toy_batch(spec)
        tape = Tape()
        out = forward_train(tape, batch, params, spec)
        cfg = TrainConfig(task_weights={"click": 1.0}, sim_weight=0.5)
        with pytest.raises(UsageError):
            joint_loss(tape, out, batch, cfg, spec)

    def test_unweighted_task_rejected(self):
        spec = toy_spec(sar="none")
        params = init_params(spec, seed=0)
        batch = toy_batch(spec)
        tape = Tape()
        out = forward_train(tape, batch, params, spec)
        cfg = TrainConfig(task_weights={"ctr": 1.0})
        with pytest.raises(ConfigError):
            joint_loss(tape, out, batch, cfg, spec)


class TestTrain:
    def test_zero_epochs_returns_init(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=0)
        params, history = train(spec, cfg, data)
        init = init_params(spec, cfg.seed)
        assert history.rows == []
        for n in init:
            assert np.array_equal(params[n].data, init[n].data)

    def test_same_seed_identical_history(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        p1, h1 = train(spec, quick_cfg(), data)
        p2, h2 = train(spec, quick_cfg(), data)
        assert h1 == h2
        for n in p1:
            assert np.array_equal(p1[n].data, p2[n].data)

    def test_seed_changes_run(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        _, h1 = train(spec, quick_cfg(seed=0), data)
        _, h2 = train(spec, quick_cfg(seed=1), data)
        assert h1 != h2

    def test_history_shape_and_loss_drops(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=4)
        _, history = train(spec, cfg, data)
        assert len(history.rows) == 4
        assert [r.epoch for r in history.rows] == [0, 1, 2, 3]
        assert history.rows[-1].total_loss < history.rows[0].total_loss
        for r in history.rows:
            assert r.align_l2 is not None and r.align_l2 >= 0

    def test_returned_params_match_best_epoch(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=4)
        params, history = train(spec, cfg, data)
        best = history.rows[history.best_epoch]
        assert best.val_auc["click"] == max(r.val_auc["click"] for r in history.rows)
        report = evaluate(params, spec, data.val)
        assert report.task_auc["click"] == best.val_auc["click"]

    def test_early_stop_honors_patience(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=30, patience=1, lr=0.5)
        _, history = train(spec, cfg, data)
        assert len(history.rows) < 30
        tail = history.rows[history.best_epoch + 1:]
        assert len(tail) <= 2  # patience 1 allows at most 2 stale epochs

    def test_alignment_penalty_pulls_heads_together(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        _, with_pen = train(spec, quick_cfg(epochs=4, sim_weight=1.0), data)
        _, no_pen = train(spec, quick_cfg(epochs=4, sim_weight=0.0), data)
        assert with_pen.rows[-1].align_l2 < no_pen.rows[-1].align_l2

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_nonfinite_loss_aborts_with_coordinates(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(lr=1e200, epochs=3)
        with pytest.raises(TrainingError, match="epoch"):
            train(spec, cfg, data)

    def test_csv_export(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        _, history = train(spec, quick_cfg(epochs=2), data)
        text = history.to_csv()
        lines = text.splitlines()
        assert lines[0].startswith("epoch,loss_click,loss_sim,loss_total")
        assert len(lines) == 3


class TestTrainPfd:
    def test_alpha_zero_equals_plain_baseline(self):
        data, vocab = synth_splits()
        teacher = spec_for(vocab, sar="attn")
        student = spec_for(vocab, sar="none")
        cfg = quick_cfg(sim_weight=0.0, distill_alpha=0.0, epochs=2)
        result = train_pfd(teacher, student, cfg, data)
        base_params, base_history = train(student, cfg, data)
        assert result.student_history == base_history
        for n in base_params:
            assert np.array_equal(result.student_params[n].data,
                                  base_params[n].data)

    def test_teacher_frozen_during_phase_two(self):
        data, vocab = synth_splits()
        teacher = spec_for(vocab, sar="attn")
        student = spec_for(vocab, sar="none")
        cfg = quick_cfg(sim_weight=0.0, distill_alpha=0.5, epochs=2)
        result = train_pfd(teacher, student, cfg, data)
        solo_params, solo_history = _fit(teacher, cfg, data, mode="teacher")
        assert result.teacher_history == solo_history
        for n in solo_params:
            assert np.array_equal(result.teacher_params[n].data,
                                  solo_params[n].data)

    def test_spec_shape_validation(self):
        data, vocab = synth_splits()
        cfg = quick_cfg()
        with pytest.raises(ConfigError):
            train_pfd(spec_for(vocab, sar="none"), spec_for(vocab, sar="none"),
                      cfg, data)
        with pytest.raises(ConfigError):
            train_pfd(spec_for(vocab, sar="attn"), spec_for(vocab, sar="attn"),
                      cfg, data)


class TestLambdaSweep:
    def test_single_ratio_matches_plain_train(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=2)
        rows = lambda_sweep(spec, cfg, data, [1.0])
        assert len(rows) == 1
        from dataclasses import replace
        _, history = train(spec, replace(cfg, sim_weight=1.0), data)
        best = history.rows[history.best_epoch]
        assert rows[0].val_auc == best.val_auc["click"]
        assert rows[0].sim_weight == 1.0

    def test_rerun_identical_and_sorted(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=2)
        a = lambda_sweep(spec, cfg, data, [4.0, 0.0, 1.0])
        b = lambda_sweep(spec, cfg, data, [0.0, 1.0, 4.0])
        assert a == b
        assert [r.ratio for r in a] == [0.0, 1.0, 4.0]

    def test_parallel_matches_sequential(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        cfg = quick_cfg(epochs=2)
        seq = lambda_sweep(spec, cfg, data, [0.0, 1.0], jobs=1)
        par = lambda_sweep(spec, cfg, data, [0.0, 1.0], jobs=2)
        assert seq == par

    def test_empty_grid_rejected(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        with pytest.raises(ConfigError):
            lambda_sweep(spec, quick_cfg(), data, [])

    def test_csv_form(self):
        data, vocab = synth_splits()
        spec = spec_for(vocab)
        rows = lambda_sweep(spec, quick_cfg(epochs=1), data, [0.5])
        text = sweep_to_csv(rows)
        assert text.splitlines()[0] == "ratio,sim_weight,val_auc,val_mae,align_l2,best_epoch"
        assert len(text.splitlines()) == 2
