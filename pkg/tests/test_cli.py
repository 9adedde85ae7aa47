import json
import math

import numpy as np
import pytest

from pad_rbm.cli import METRICS_HEADER, main
from pad_rbm.data_io import load_model, load_text_dataset, save_model
from pad_rbm.model import ModelParams
from pad_rbm.training import init_params


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    assert main(["gen-data", "--kind", "bars-stripes", "--d", "2", "--out", "bas.txt"]) == 0
    return tmp_path


def write_config(path, **kw):
    doc = {"data": "bas.txt", "model_out": "model.json", "metrics_out": "metrics.csv", "hidden": 3, "epochs": 2}
    doc.update(kw)
    path.write_text(json.dumps(doc))
    return str(path)


class TestGenData:
    def test_exhaustive(self, workdir):
        assert len((workdir / "bas.txt").read_text().splitlines()) == 6
        assert load_text_dataset(workdir / "bas.txt").n == 4

    def test_too_small(self, workdir):
        assert main(["gen-data", "--d", "1", "--out", "x.txt"]) == 2

    def test_sampled(self, workdir):
        assert main(["gen-data", "--d", "3", "--count", "20", "--seed", "4", "--out", "s.txt"]) == 0
        assert len(load_text_dataset(workdir / "s.txt")) == 20


class TestTrain:
    def test_zero_epochs(self, workdir):
        cfg = write_config(workdir / "c.json", seed=3)
        assert main(["train", "--config", cfg, "--epochs", "0"]) == 0
        assert load_model(workdir / "model.json") == init_params(4, 3, 3)
        assert (workdir / "metrics.csv").read_text() == ",".join(METRICS_HEADER) + "\n"

    def test_csv_rows(self, workdir):
        cfg = write_config(workdir / "c.json", batch_size=2)
        assert main(["train", "--config", cfg]) == 0
        lines = (workdir / "metrics.csv").read_text().splitlines()
        assert lines[0] == ",".join(METRICS_HEADER)
        assert len(lines) == 1 + 2 * 3
        fields = lines[1].split(",")
        assert float(fields[2]) < 0 and fields[6] != ""

    def test_missing_dataset(self, workdir):
        cfg = write_config(workdir / "c.json", data="nope.txt")
        assert main(["train", "--config", cfg]) == 3
        assert not (workdir / "model.json").exists() and not (workdir / "metrics.csv").exists()

    def test_unknown_key(self, workdir):
        cfg = write_config(workdir / "c.json", colour="blue")
        assert main(["train", "--config", cfg]) == 2

    def test_invalid_value(self, workdir):
        cfg = write_config(workdir / "c.json", learning_rate=-1)
        assert main(["train", "--config", cfg]) == 2

    def test_flags_override_config(self, workdir):
        cfg = write_config(workdir / "c.json", epochs=5)
        assert main(["train", "--config", cfg, "--epochs", "1", "--batch-size", "6"]) == 0
        assert len((workdir / "metrics.csv").read_text().splitlines()) == 2

    def test_flags_only(self, workdir):
        args = ["train", "--data", "bas.txt", "--model-out", "m.json", "--metrics-out", "x.csv", "--hidden", "2"]
        assert main(args + ["--epochs", "1"]) == 0

    def test_pd_deterministic(self, workdir):
        cfg = write_config(workdir / "c.json")
        common = ["train", "--config", cfg, "--algorithm", "pd", "--beta", "0", "--seed", "7", "--no-wall-time"]
        assert main(common) == 0
        first = (workdir / "model.json").read_bytes(), (workdir / "metrics.csv").read_bytes()
        assert main(common) == 0
        assert first == ((workdir / "model.json").read_bytes(), (workdir / "metrics.csv").read_bytes())

    def test_idx_input(self, workdir):
        from pad_rbm.data_io import save_idx_images

        save_idx_images(np.random.default_rng(0).integers(0, 256, (5, 2, 3)), workdir / "img.idx")
        cfg = write_config(workdir / "c.json", data="img.idx", data_format="idx", idx_threshold=100)
        assert main(["train", "--config", cfg]) == 0
        assert load_model(workdir / "model.json").n == 6


class TestEval:
    def test_zero_model(self, workdir, capsys):
        save_model(ModelParams.zeros(4, 2), workdir / "z.json")
        assert main(["eval", "--model", "z.json", "--data", "bas.txt"]) == 0
        out = capsys.readouterr().out
        value = float(out.split("exact_avg_loglik ")[1].split()[0])
        assert abs(value + 4 * math.log(2)) < 1e-9

    def test_oversized(self, workdir, capsys):
        save_model(ModelParams.zeros(4, 2), workdir / "z.json")
        big = ModelParams.zeros(25, 21)
        save_model(big, workdir / "big.json")
        (workdir / "big.txt").write_text("0" * 25 + "\n")
        assert main(["eval", "--model", "big.json", "--data", "big.txt"]) == 0
        out = capsys.readouterr().out
        assert "notice" in out and "recon_error" in out and "exact_avg_loglik" not in out

    def test_mismatch(self, workdir):
        save_model(ModelParams.zeros(5, 2), workdir / "z.json")
        assert main(["eval", "--model", "z.json", "--data", "bas.txt"]) == 2

    def test_missing_model(self, workdir):
        assert main(["eval", "--model", "none.json", "--data", "bas.txt"]) == 3


class TestSample:
    @pytest.fixture
    def model(self, workdir):
        save_model(ModelParams.random(4, 3, np.random.default_rng(1)), workdir / "m.json")
        return "m.json"

    @pytest.mark.parametrize("method", ["gibbs", "pd", "pmap"])
    def test_deterministic(self, workdir, model, method):
        args = ["sample", "--model", model, "--count", "25", "--method", method, "--seed", "5"]
        assert main(args + ["--out", "a.txt"]) == 0
        assert main(args + ["--out", "b.txt"]) == 0
        assert (workdir / "a.txt").read_bytes() == (workdir / "b.txt").read_bytes()
        ds = load_text_dataset(workdir / "a.txt")
        assert len(ds) == 25 and ds.n == 4

    def test_pd_from_data_second_order(self, workdir, model):
        args = ["sample", "--model", model, "--count", "8", "--method", "pd", "--data", "bas.txt", "--order", "second"]
        assert main(args + ["--out", "a.txt"]) == 0

    def test_count_zero(self, workdir, model):
        assert main(["sample", "--model", model, "--count", "0", "--out", "e.txt"]) == 0
        assert (workdir / "e.txt").read_text() == ""

    def test_pmap_capacity(self, workdir):
        save_model(ModelParams.zeros(9, 8), workdir / "big.json")
        assert main(["sample", "--model", "big.json", "--count", "3", "--method", "pmap", "--out", "x.txt"]) == 2


class TestCheck:
    def test_lemma1(self, workdir, capsys):
        save_model(ModelParams.random(2, 2, np.random.default_rng(2)), workdir / "m.json")
        assert main(["check", "--model", "m.json", "--check", "lemma1"]) == 0
        assert "tv" in capsys.readouterr().out

    def test_gradcheck(self, workdir, capsys):
        save_model(ModelParams.random(4, 3, np.random.default_rng(2)), workdir / "m.json")
        assert main(["check", "--model", "m.json", "--check", "gradcheck"]) == 0
        assert "PASS" in capsys.readouterr().out

    def test_bound(self, workdir):
        save_model(ModelParams.random(3, 3, np.random.default_rng(2)), workdir / "m.json")
        assert main(["check", "--model", "m.json", "--check", "bound"]) == 0

    def test_bound_oversized(self, workdir, capsys):
        save_model(ModelParams.zeros(10, 10), workdir / "big.json")
        assert main(["check", "--model", "big.json", "--check", "bound"]) == 2
        assert "capacity" in capsys.readouterr().err

    def test_failed_check_exit_code(self, workdir):
        save_model(ModelParams.random(2, 2, np.random.default_rng(2)), workdir / "m.json")
        # 50 draws cannot reach TV < 0.02 on a 16-state model
        assert main(["check", "--model", "m.json", "--check", "lemma1", "--draws", "50"]) == 1
