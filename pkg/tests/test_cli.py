import json

import numpy as np

from sampfsl.cli import main
from sampfsl.data import gen_synthetic, load_dataset, save_dataset


def _write_dataset(tmp_path, name="ds", **kw):
    args = dict(classes=4, per_class=12, dim=6, cluster_sigma=0.3, seed=5)
    args.update(kw)
    ds = gen_synthetic(**args)
    save_dataset(ds, tmp_path / name)
    return ds


def _write_config(tmp_path, name="run.cfg", **overrides):
    base = {
        "dataset": str(tmp_path / "ds"),
        "checkpoint": str(tmp_path / "ckpt"),
        "history": str(tmp_path / "history.jsonl"),
        "report": str(tmp_path / "report.json"),
        "seed": 5,
        "input_dim": 6,
        "hidden_dim": 8,
        "embed_dim": 4,
        "samp_steps": 1,
        "samp_heads": 2,
        "sources": 4,
        "augments": 1,
        "epochs": 2,
        "n_way": 3,
        "k_shot": 1,
        "q_queries": 3,
        "episodes": 5,
    }
    base.update(overrides)
    path = tmp_path / name
    path.write_text("".join(f"{k} = {v}\n" for k, v in base.items()))
    return path


class TestSynth:
    def test_writes_loadable_dataset(self, tmp_path, capsys):
        out = tmp_path / "syn"
        code = main(["synth", "--classes", "3", "--per-class", "5", "--dim", "4",
                     "--sigma", "0.2", "--seed", "1", "--out", str(out)])
        assert code == 0
        ds = load_dataset(out)
        assert ds.n_classes == 3 and ds.input_dim == 4
        assert "3 classes" in capsys.readouterr().out

    def test_fixed_seed_reproduces_bytes(self, tmp_path):
        for name in ("a", "b"):
            assert main(["synth", "--classes", "3", "--per-class", "4", "--dim", "5",
                         "--sigma", "0.3", "--seed", "9", "--out", str(tmp_path / name)]) == 0
        for f in sorted((tmp_path / "a").iterdir()):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_scalar_shift_replicated(self, tmp_path):
        out = tmp_path / "s"
        assert main(["synth", "--classes", "2", "--per-class", "3", "--dim", "4",
                     "--sigma", "0.2", "--shift", "0.5", "--out", str(out)]) == 0
        np.testing.assert_array_equal(load_dataset(out).query_shift, np.full(4, 0.5))

    def test_wrong_shift_length(self, tmp_path, capsys):
        code = main(["synth", "--classes", "2", "--per-class", "3", "--dim", "4",
                     "--sigma", "0.2", "--shift", "1,2", "--out", str(tmp_path / "s")])
        assert code == 1
        assert "--shift" in capsys.readouterr().err

    def test_missing_required_arg_is_usage_error(self, capsys):
        assert main(["synth", "--classes", "2"]) == 1


class TestPretrainCommand:
    def test_minimal_config_trains_and_checkpoints(self, tmp_path, capsys):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path)
        assert main(["pretrain", "--config", str(cfg)]) == 0
        assert (tmp_path / "ckpt" / "final" / "manifest.txt").is_file()
        lines = (tmp_path / "history.jsonl").read_text().splitlines()
        records = [json.loads(line) for line in lines]
        assert len(records) == 2 * (4 * 12 // 4)
        assert set(records[0]) == {"epoch", "step", "L", "L1", "L2"}

    def test_unknown_key_exits_one_and_names_key(self, tmp_path, capsys):
        _write_dataset(tmp_path)
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("momentum = 0.9\n")
        assert main(["pretrain", "--config", str(cfg)]) == 1
        assert "momentum" in capsys.readouterr().err

    def test_rerun_is_byte_identical(self, tmp_path):
        _write_dataset(tmp_path)
        cfg_a = _write_config(tmp_path, name="a.cfg", history=str(tmp_path / "a.jsonl"),
                              checkpoint=str(tmp_path / "ck_a"))
        cfg_b = _write_config(tmp_path, name="b.cfg", history=str(tmp_path / "b.jsonl"),
                              checkpoint=str(tmp_path / "ck_b"))
        assert main(["pretrain", "--config", str(cfg_a)]) == 0
        assert main(["pretrain", "--config", str(cfg_b)]) == 0
        assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_interval_checkpoints(self, tmp_path):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path, checkpoint_every=1)
        assert main(["pretrain", "--config", str(cfg)]) == 0
        assert (tmp_path / "ckpt" / "epoch_0001" / "manifest.txt").is_file()
        assert (tmp_path / "ckpt" / "epoch_0002" / "manifest.txt").is_file()

    def test_dataset_dim_mismatch_is_runtime_error(self, tmp_path, capsys):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path, input_dim=9)
        assert main(["pretrain", "--config", str(cfg)]) == 2


class TestEvalCommand:
    def _pretrained(self, tmp_path, **cfg_overrides):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path, **cfg_overrides)
        assert main(["pretrain", "--config", str(cfg)]) == 0
        return cfg

    def test_eval_prints_mean_and_writes_report(self, tmp_path, capsys):
        cfg = self._pretrained(tmp_path)
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        out = capsys.readouterr().out
        assert "accuracy:" in out
        report = json.loads((tmp_path / "report.json").read_text())
        assert len(report["episode_accuracies"]) == 5

    def test_oracle_dataset_single_episode_is_perfect(self, tmp_path, capsys):
        # near-zero cluster noise makes queries coincide with their class
        # means; a self-loop-only graph and near-hard transport keep every
        # class's embedding exactly on its prototype
        _write_dataset(tmp_path, cluster_sigma=1e-9)
        cfg = _write_config(tmp_path, epochs=0, gamma=2.0, epsilon=1e-6)
        assert main(["pretrain", "--config", str(cfg)]) == 0
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt"),
                     "--episodes", "1"]) == 0
        assert "accuracy: 1.0000" in capsys.readouterr().out
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["mean_accuracy"] == 1.0 and report["config"]["episodes"] == 1

    def test_no_ot_flag_echoed_in_report(self, tmp_path, capsys):
        cfg = self._pretrained(tmp_path)
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt"),
                     "--no-ot"]) == 0
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["config"]["ot_enabled"] is False

    def test_missing_checkpoint_exits_one(self, tmp_path, capsys):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path)
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "absent")]) == 1

    def test_shape_mismatch_exits_two(self, tmp_path, capsys):
        cfg = self._pretrained(tmp_path)
        bad = _write_config(tmp_path, name="bad.cfg", embed_dim=8)
        assert main(["eval", "--config", str(bad), "--checkpoint", str(tmp_path / "ckpt")]) == 2

    def test_rerun_report_byte_identical(self, tmp_path):
        cfg = self._pretrained(tmp_path)
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        first = (tmp_path / "report.json").read_bytes()
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        assert (tmp_path / "report.json").read_bytes() == first

    def test_plan_dump_writes_one_matrix_per_episode(self, tmp_path):
        from sampfsl.numcore import load_matrix

        cfg = self._pretrained(tmp_path)
        dump = tmp_path / "plans"
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt"),
                     "--dump-plans", str(dump)]) == 0
        files = sorted(dump.iterdir())
        assert [f.name for f in files] == [f"plan_{e:04d}.mat" for e in range(5)]
        plan = load_matrix(files[0])
        assert plan.shape == (3, 9)  # 3-way 1-shot vs 3 queries per class
        assert (plan >= 0).all()

    def test_episode_log_jsonl(self, tmp_path):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path, episode_log=str(tmp_path / "episodes.jsonl"))
        assert main(["pretrain", "--config", str(cfg)]) == 0
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        records = [json.loads(line) for line in (tmp_path / "episodes.jsonl").read_text().splitlines()]
        report = json.loads((tmp_path / "report.json").read_text())
        assert [r["accuracy"] for r in records] == report["episode_accuracies"]

    def test_plot_csv_written_alongside_history(self, tmp_path):
        _write_dataset(tmp_path)
        cfg = _write_config(tmp_path)
        assert main(["pretrain", "--config", str(cfg)]) == 0
        lines = (tmp_path / "history.csv").read_text().splitlines()
        assert lines[0] == "epoch,loss"
        assert len(lines) == 3  # header + 2 epochs
        epoch, loss = lines[1].split(",")
        assert epoch == "0" and float(loss) > 0

    def test_env_seed_override_changes_report(self, tmp_path, monkeypatch):
        cfg = self._pretrained(tmp_path)
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        base = json.loads((tmp_path / "report.json").read_text())
        monkeypatch.setenv("SAMP_SEED", "1234")
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        other = json.loads((tmp_path / "report.json").read_text())
        assert other["seed"] == 1234 and base["seed"] == 5


class TestGradcheckCommand:
    def test_passes_at_default_threshold(self, capsys):
        assert main(["gradcheck"]) == 0
        out = capsys.readouterr().out
        assert "max relative error" in out and "OK" in out

    def test_impossible_threshold_fails(self, capsys):
        assert main(["gradcheck", "--threshold", "1e-18"]) == 2


class TestEndToEnd:
    def test_readme_walkthrough(self, tmp_path, capsys):
        # synth (with query shift) -> pretrain -> eval with and without transport
        data = tmp_path / "data"
        assert main(["synth", "--classes", "6", "--per-class", "10", "--dim", "6",
                     "--sigma", "0.4", "--seed", "3", "--shift", "0.3",
                     "--out", str(data)]) == 0
        cfg = _write_config(tmp_path, dataset=str(data), epochs=3, episodes=8)
        assert main(["pretrain", "--config", str(cfg)]) == 0
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt")]) == 0
        assert main(["eval", "--config", str(cfg), "--checkpoint", str(tmp_path / "ckpt"),
                     "--no-ot"]) == 0
        out = capsys.readouterr().out
        assert out.count("accuracy:") == 2
        assert (tmp_path / "history.jsonl").is_file()
        assert (tmp_path / "history.csv").is_file()
        assert (tmp_path / "report.json").is_file()

    def test_console_script_installed(self, tmp_path):
        import subprocess
        import sys

        proc = subprocess.run([sys.executable, "-m", "sampfsl.cli", "synth",
                               "--classes", "2", "--per-class", "3", "--dim", "4",
                               "--sigma", "0.2", "--out", str(tmp_path / "d")],
                              capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "d" / "manifest.txt").is_file()
