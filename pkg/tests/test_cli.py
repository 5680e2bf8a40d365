import os

import numpy as np
import pytest

from slate_rank.cli.main import main
from slate_rank.models import init_params, load_params

PREPARE_INI = """\
[dataset]
source = synth
k = 4
seed = 3
split = 8,1,1

[synth]
n_users = 60
n_items = 80
n_categories = 6
latent_dim = 6
slates_per_user = 3
"""

TRAIN_INI = """\
[run]
data = {data}

[model]
backbone = ncf
sar = attn
dim = 4
hidden = 8,4

[train]
sim_weight = 1.0
epochs = {epochs}
batch_size = 64
seed = 0
patience = 10
{extra}
"""

EVAL_INI = """\
[run]
data = {data}

[eval]
checkpoint = {checkpoint}
split = test
top_k = 5
pool_size = 20
{extra}
"""

SWEEP_INI = """\
[run]
data = {data}

[model]
backbone = ncf
sar = attn
dim = 4
hidden = 8,4

[train]
epochs = 1
batch_size = 64
patience = 10

[sweep]
grid = 0,1
seeds = 0,1
"""


def write_ini(path, text):
    path.write_text(text)
    return str(path)


def read_bytes(path):
    with open(path, "rb") as fh:
        return fh.read()


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("data")
    cfg = write_ini(root / "prepare.ini", PREPARE_INI)
    out = root / "ds"
    assert main(["prepare", "--config", cfg, "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def run_dir(tmp_path_factory, data_dir):
    root = tmp_path_factory.mktemp("run")
    cfg = write_ini(root / "train.ini",
                    TRAIN_INI.format(data=data_dir, epochs=2, extra=""))
    out = root / "a"
    assert main(["train", "--config", cfg, "--out", str(out)]) == 0
    return out


class TestPrepare:
    def test_rerun_byte_identical(self, data_dir, tmp_path):
        cfg = write_ini(tmp_path / "p.ini", PREPARE_INI)
        again = tmp_path / "ds2"
        assert main(["prepare", "--config", cfg, "--out", str(again)]) == 0
        for name in ("train.tsv", "val.tsv", "test.tsv", "vocab.json"):
            assert read_bytes(data_dir / name) == read_bytes(again / name)
        strip = lambda p: [l for l in p.read_text().splitlines()
                           if not l.startswith("written_at=")]
        assert strip(data_dir / "provenance.txt") == strip(again / "provenance.txt")

    def test_provenance_contents(self, data_dir):
        text = (data_dir / "provenance.txt").read_text()
        for key in ("written_at=", "source=synth", "source_hash=", "k=4",
                    "seed=3", "train_samples=", "test_samples="):
            assert key in text

    def test_missing_movielens_source(self, tmp_path, capsys):
        cfg = write_ini(tmp_path / "p.ini",
                        "[dataset]\nsource = movielens\n"
                        f"movielens_dir = {tmp_path / 'nowhere'}\n")
        out = tmp_path / "ds"
        assert main(["prepare", "--config", cfg, "--out", str(out)]) == 2
        assert not out.exists()
        assert "missing source file" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        cfg = write_ini(tmp_path / "p.ini",
                        PREPARE_INI + "learning_rate = 3\n")
        assert main(["prepare", "--config", cfg, "--out", str(tmp_path / "d")]) == 2
        assert "unknown key" in capsys.readouterr().err

    def test_missing_config(self, tmp_path, capsys):
        missing = str(tmp_path / "no.ini")
        assert main(["prepare", "--config", missing, "--out", str(tmp_path)]) == 2
        assert "not found" in capsys.readouterr().err

    def test_data_root_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("SLATE_RANK_DATA", str(tmp_path))
        cfg = write_ini(tmp_path / "p.ini", PREPARE_INI)
        assert main(["prepare", "--config", cfg, "--out",
                     str(tmp_path / "ds")]) == 0
        tcfg = write_ini(tmp_path / "t.ini",
                         TRAIN_INI.format(data="ds", epochs=0, extra=""))
        assert main(["train", "--config", tcfg, "--out",
                     str(tmp_path / "out")]) == 0


class TestTrainCmd:
    def test_artifacts(self, run_dir):
        for name in ("checkpoint.bin", "history.csv", "history.png"):
            assert (run_dir / name).exists()
        assert len((run_dir / "history.csv").read_text().splitlines()) == 3
        params, spec = load_params(str(run_dir / "checkpoint.bin"))
        assert spec.backbone == "ncf" and spec.sar == "attn"

    def test_rerun_byte_identical(self, run_dir, data_dir, tmp_path):
        cfg = write_ini(tmp_path / "t.ini",
                        TRAIN_INI.format(data=data_dir, epochs=2, extra=""))
        again = tmp_path / "b"
        assert main(["train", "--config", cfg, "--out", str(again)]) == 0
        for name in ("checkpoint.bin", "history.csv", "history.png"):
            assert read_bytes(run_dir / name) == read_bytes(again / name), name

    def test_seed_flag_overrides(self, run_dir, data_dir, tmp_path):
        cfg = write_ini(tmp_path / "t.ini",
                        TRAIN_INI.format(data=data_dir, epochs=2, extra=""))
        out = tmp_path / "s9"
        assert main(["train", "--config", cfg, "--out", str(out),
                     "--seed", "9"]) == 0
        assert read_bytes(out / "checkpoint.bin") != read_bytes(run_dir / "checkpoint.bin")

    def test_zero_epochs_checkpoints_init(self, data_dir, tmp_path):
        cfg = write_ini(tmp_path / "t.ini",
                        TRAIN_INI.format(data=data_dir, epochs=0, extra=""))
        out = tmp_path / "z"
        assert main(["train", "--config", cfg, "--out", str(out)]) == 0
        params, spec = load_params(str(out / "checkpoint.bin"))
        init = init_params(spec, 0)
        for n in init:
            assert np.array_equal(params[n].data, init[n].data)
        ecfg = write_ini(tmp_path / "e.ini",
                         EVAL_INI.format(data=data_dir,
                                         checkpoint=out / "checkpoint.bin",
                                         extra=""))
        assert main(["eval", "--config", ecfg, "--out", str(tmp_path / "r")]) == 0

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_exit_code(self, data_dir, tmp_path, capsys):
        cfg = write_ini(tmp_path / "t.ini",
                        TRAIN_INI.format(data=data_dir, epochs=2,
                                         extra="lr = 1e200\n"))
        assert main(["train", "--config", cfg, "--out", str(tmp_path / "d")]) == 3
        assert "non-finite" in capsys.readouterr().err

    def test_pfd_mode(self, data_dir, tmp_path):
        text = TRAIN_INI.format(data=data_dir, epochs=2, extra="")
        text = text.replace("data = ", "mode = pfd\ndata = ")
        cfg = write_ini(tmp_path / "t.ini", text)
        out = tmp_path / "pfd"
        assert main(["train", "--config", cfg, "--out", str(out)]) == 0
        for name in ("checkpoint.bin", "teacher_checkpoint.bin",
                     "history.csv", "teacher_history.csv", "history.png"):
            assert (out / name).exists()
        _, student_spec = load_params(str(out / "checkpoint.bin"))
        _, teacher_spec = load_params(str(out / "teacher_checkpoint.bin"))
        assert student_spec.sar == "none"
        assert teacher_spec.sar == "attn"


class TestEvalCmd:
    def eval_cfg(self, tmp_path, data_dir, run_dir, extra=""):
        return write_ini(tmp_path / "e.ini",
                         EVAL_INI.format(data=data_dir,
                                         checkpoint=run_dir / "checkpoint.bin",
                                         extra=extra))

    def test_report_and_rerun(self, data_dir, run_dir, tmp_path):
        cfg = self.eval_cfg(tmp_path, data_dir, run_dir)
        a, b = tmp_path / "r1", tmp_path / "r2"
        assert main(["eval", "--config", cfg, "--out", str(a)]) == 0
        assert main(["eval", "--config", cfg, "--out", str(b)]) == 0
        assert read_bytes(a / "report.csv") == read_bytes(b / "report.csv")
        text = (a / "report.csv").read_text()
        assert text.startswith("metric,value\n")
        assert "auc_click," in text

    def test_export_embeddings(self, data_dir, run_dir, tmp_path):
        cfg = self.eval_cfg(tmp_path, data_dir, run_dir)
        out = tmp_path / "r"
        assert main(["eval", "--config", cfg, "--out", str(out),
                     "--export-embeddings"]) == 0
        lines = (out / "embeddings.csv").read_text().splitlines()
        n_test = sum(1 for l in (data_dir / "test.tsv").read_text().splitlines()
                     if not l.startswith("#"))
        assert len(lines) == 1 + 2 * n_test
        assert (out / "alignment.png").exists()
        assert "align_l2," in (out / "report.csv").read_text()

    def test_checkpoint_dataset_mismatch(self, run_dir, tmp_path, capsys):
        other_cfg = write_ini(tmp_path / "p.ini",
                              PREPARE_INI.replace("n_users = 60",
                                                  "n_users = 50"))
        other = tmp_path / "ds"
        assert main(["prepare", "--config", other_cfg, "--out", str(other)]) == 0
        cfg = write_ini(tmp_path / "e.ini",
                        EVAL_INI.format(data=other,
                                        checkpoint=run_dir / "checkpoint.bin",
                                        extra=""))
        assert main(["eval", "--config", cfg, "--out", str(tmp_path / "r")]) == 2
        assert "does not match" in capsys.readouterr().err

    def test_diversity_needs_compare(self, data_dir, run_dir, tmp_path, capsys):
        cfg = self.eval_cfg(tmp_path, data_dir, run_dir)
        assert main(["eval", "--config", cfg, "--out", str(tmp_path / "r"),
                     "--diversity"]) == 2
        assert "compare_checkpoint" in capsys.readouterr().err

    def test_diversity_self_comparison(self, data_dir, run_dir, tmp_path):
        extra = f"compare_checkpoint = {run_dir / 'checkpoint.bin'}\n"
        cfg = self.eval_cfg(tmp_path, data_dir, run_dir, extra)
        out = tmp_path / "r"
        assert main(["eval", "--config", cfg, "--out", str(out),
                     "--diversity"]) == 0
        lines = (out / "diversity.csv").read_text().splitlines()
        assert lines[0] == "metric,model_a,model_b,rel_diff"
        assert len(lines) == 3
        for line in lines[1:]:
            metric, a, b, rel = line.split(",")
            assert a == b
            assert float(rel) == 0.0


class TestSweepCmd:
    def test_table_and_rerun(self, data_dir, tmp_path):
        cfg = write_ini(tmp_path / "s.ini", SWEEP_INI.format(data=data_dir))
        a, b = tmp_path / "s1", tmp_path / "s2"
        assert main(["sweep", "--config", cfg, "--out", str(a)]) == 0
        assert main(["sweep", "--config", cfg, "--out", str(b)]) == 0
        assert read_bytes(a / "sweep.csv") == read_bytes(b / "sweep.csv")
        assert (a / "sweep.png").exists()
        lines = (a / "sweep.csv").read_text().splitlines()
        assert lines[0] == "ratio,seed,sim_weight,val_auc,val_mae,align_l2,best_epoch"
        assert len(lines) == 1 + 4 + 2  # 2 ratios x 2 seeds + 2 mean rows
        assert sum(1 for l in lines if ",mean," in l) == 2

    def test_seed_flag_narrows(self, data_dir, tmp_path):
        cfg = write_ini(tmp_path / "s.ini", SWEEP_INI.format(data=data_dir))
        out = tmp_path / "s"
        assert main(["sweep", "--config", cfg, "--out", str(out),
                     "--seed", "7"]) == 0
        lines = (out / "sweep.csv").read_text().splitlines()
        assert len(lines) == 1 + 2 + 2
        assert all(",7," in l or ",mean," in l for l in lines[1:])
