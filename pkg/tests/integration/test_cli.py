"""
命令列端到端測試

以小型合成資料跑過 gen-synthetic → train → eval / stability / flops / ablate / compare，
並檢查輸出檔案與結束碼。
"""

import numpy as np
import pytest

from serank.autodiff import parameter
from serank.core.errors import TrainingAbortedError
from serank.core.models import ModelSpec, Variant
from serank.main import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main
from serank.ranking.checkpoint import save_checkpoint
from serank.ranking.flops import count_flops
from serank.ranking.scoring import ScoringModel, parameter_shapes

SMALL_RUN = """\
seed = 3
model.variant = serank_b
model.feature_count = 6
model.hidden_widths = 8,4
train.max_steps = 6
train.batch_size = 4
train.eval_every = 3
train.learning_rate = 0.1
synthetic.train_queries = 12
synthetic.valid_queries = 4
synthetic.test_queries = 4
synthetic.docs_per_query = 6
synthetic.feature_count = 6
"""


def write_config(path, extra: str = ""):
    path.write_text(SMALL_RUN + extra, encoding="utf-8")
    return path


@pytest.fixture
def synthetic_run(tmp_path):
    """產生合成資料並回傳指向它的設定檔"""
    data_dir = tmp_path / "data"
    config = write_config(tmp_path / "gen.conf")
    assert main(["gen-synthetic", "--config", str(config), "--out", str(data_dir)]) == EXIT_OK
    return write_config(
        tmp_path / "run.conf",
        f"data.train = {data_dir / 'train.txt'}\n"
        f"data.valid = {data_dir / 'valid.txt'}\n"
        f"data.test = {data_dir / 'test.txt'}\n",
    )


@pytest.fixture
def trained(tmp_path, synthetic_run):
    out = tmp_path / "run"
    assert main(["train", "--config", str(synthetic_run), "--out", str(out)]) == EXIT_OK
    return out


class TestGenSynthetic:
    def test_same_seed_writes_identical_files(self, tmp_path):
        config = write_config(tmp_path / "gen.conf")
        for name in ("a", "b"):
            assert main(["gen-synthetic", "--config", str(config), "--out", str(tmp_path / name)]) == 0
        for split in ("train", "valid", "test"):
            first = (tmp_path / "a" / f"{split}.txt").read_bytes()
            assert first == (tmp_path / "b" / f"{split}.txt").read_bytes()

    def test_seed_override_changes_data(self, tmp_path):
        config = write_config(tmp_path / "gen.conf")
        main(["gen-synthetic", "--config", str(config), "--out", str(tmp_path / "a")])
        main(["gen-synthetic", "--config", str(config), "--out", str(tmp_path / "b"), "--seed", "4"])
        first = (tmp_path / "a" / "train.txt").read_bytes()
        assert first != (tmp_path / "b" / "train.txt").read_bytes()


class TestTrain:
    def test_writes_run_directory(self, trained):
        for name in ("config.txt", "train_log.tsv", "stats.txt", "test_metrics.tsv"):
            assert (trained / name).is_file(), name
        for checkpoint in ("best", "final"):
            assert (trained / checkpoint / "spec.txt").is_file()
            assert (trained / checkpoint / "params" / "output.w.bin").is_file()
        metrics = (trained / "test_metrics.tsv").read_text(encoding="utf-8").splitlines()
        assert metrics[0] == "k\tndcg_mean\tquery_count"
        assert [line.split("\t")[0] for line in metrics[1:]] == ["1", "5", "10"]

    def test_log_has_one_row_per_step(self, trained):
        lines = (trained / "train_log.tsv").read_text(encoding="utf-8").splitlines()
        assert len(lines) == 1 + 6

    def test_rerun_is_identical(self, tmp_path, trained, synthetic_run, capsys):
        again = tmp_path / "again"
        assert main(["train", "--config", str(synthetic_run), "--out", str(again)]) == EXIT_OK
        # 測試集報表同時印到 stdout
        assert capsys.readouterr().out == (again / "test_metrics.tsv").read_text(encoding="utf-8")
        for name in ("train_log.tsv", "test_metrics.tsv", "config.txt"):
            assert (again / name).read_bytes() == (trained / name).read_bytes()

    def test_missing_data_file(self, tmp_path):
        config = write_config(
            tmp_path / "run.conf",
            f"data.train = {tmp_path / 'absent.txt'}\n"
            f"data.valid = {tmp_path / 'absent.txt'}\n"
            f"data.test = {tmp_path / 'absent.txt'}\n",
        )
        assert main(["train", "--config", str(config), "--out", str(tmp_path / "run")]) == EXIT_CONFIG

    def test_unset_data_paths(self, tmp_path):
        config = write_config(tmp_path / "run.conf")
        assert main(["train", "--config", str(config)]) == EXIT_CONFIG

    def test_unknown_config_key(self, tmp_path):
        config = write_config(tmp_path / "run.conf", "model.depth = 3\n")
        assert main(["train", "--config", str(config)]) == EXIT_CONFIG

    def test_malformed_data_line(self, tmp_path, synthetic_run):
        broken = tmp_path / "broken.txt"
        broken.write_text("1 qid:1 1:0.5\nnot-a-label qid:1 1:0.1\n", encoding="utf-8")
        config = write_config(
            tmp_path / "broken.conf",
            f"data.train = {broken}\ndata.valid = {broken}\ndata.test = {broken}\n",
        )
        assert main(["train", "--config", str(config), "--out", str(tmp_path / "run")]) == EXIT_CONFIG

    def test_training_abort_exit_code(self, tmp_path, synthetic_run, mocker):
        mocker.patch(
            "serank.main.train",
            side_effect=TrainingAbortedError(3, 1.0, float("inf"), float("nan")),
        )
        out = tmp_path / "run"
        assert main(["train", "--config", str(synthetic_run), "--out", str(out)]) == EXIT_RUNTIME


class TestEvaluate:
    def test_perfect_checkpoint(self, tmp_path, capsys):
        # score = relu(x)，特徵值與 label 同序
        spec = ModelSpec(variant=Variant.UNIVARIATE, feature_count=1, hidden_widths=[1])
        params = {name: parameter(np.ones(shape)) for name, shape in parameter_shapes(spec).items()}
        params["dense_0.b"].data[:] = 0.0
        params["output.b"].data[:] = 0.0
        save_checkpoint(ScoringModel(spec, params), tmp_path / "perfect")
        data = tmp_path / "toy.txt"
        data.write_text(
            "2 qid:1 1:3.0\n0 qid:1 1:1.0\n1 qid:1 1:2.0\n1 qid:2 1:5.0\n0 qid:2 1:0.5\n",
            encoding="utf-8",
        )
        code = main(["eval", "--checkpoint", str(tmp_path / "perfect"), "--data", str(data)])
        assert code == EXIT_OK
        assert capsys.readouterr().out == (
            "k\tndcg_mean\tquery_count\n1\t1.000000\t2\n5\t1.000000\t2\n10\t1.000000\t2\n"
        )

    def test_eval_checkpoint(self, tmp_path, trained, capsys):
        capsys.readouterr()
        data = tmp_path / "data" / "test.txt"
        code = main(["eval", "--checkpoint", str(trained / "best"), "--data", str(data), "--percent"])
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "k\tndcg_mean\tquery_count"
        assert 0.0 <= float(lines[2].split("\t")[1]) <= 100.0

    def test_eval_matches_training_report(self, tmp_path, trained, capsys):
        capsys.readouterr()
        data = tmp_path / "data" / "test.txt"
        assert main(["eval", "--checkpoint", str(trained / "best"), "--data", str(data)]) == 0
        expected = (trained / "test_metrics.tsv").read_text(encoding="utf-8")
        assert capsys.readouterr().out == expected

    def test_missing_checkpoint(self, tmp_path):
        data = tmp_path / "test.txt"
        data.write_text("1 qid:1 1:0.5\n", encoding="utf-8")
        code = main(["eval", "--checkpoint", str(tmp_path / "nowhere"), "--data", str(data)])
        assert code == EXIT_CONFIG

    def test_stability(self, tmp_path, trained, capsys):
        capsys.readouterr()
        data = tmp_path / "data" / "test.txt"
        code = main(
            ["stability", "--checkpoint", str(trained / "best"), "--data", str(data), "--fraction", "0.25"]
        )
        assert code == EXIT_OK
        assert capsys.readouterr().out.startswith("k\tbase_ndcg\tmasked_ndcg\tquery_count\n")


class TestComparisons:
    def test_ablate_rows(self, tmp_path, synthetic_run, capsys):
        assert main(["ablate", "--config", str(synthetic_run), "--out", str(tmp_path / "abl")]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "model\tk\tndcg_mean\tci_low\tci_high\tquery_count\tp_value"
        assert all(line.endswith("\t") for line in lines[1:4])
        models = [line.split("\t")[0] for line in lines[1:]]
        expected = ("serank_b", "serank_no_squeeze", "serank_no_excitation")
        assert models == [name for name in expected for _ in range(3)]
        assert (tmp_path / "abl" / "ablation.tsv").is_file()

    def test_compare_expands_group_sizes(self, tmp_path, synthetic_run, capsys):
        config = write_config(
            tmp_path / "cmp.conf",
            synthetic_run.read_text(encoding="utf-8").removeprefix(SMALL_RUN)
            + "compare.variants = univariate,gsf\ncompare.group_sizes = 2\n",
        )
        assert main(["compare", "--config", str(config), "--out", str(tmp_path / "cmp")]) == 0
        models = [line.split("\t")[0] for line in capsys.readouterr().out.splitlines()[1:]]
        assert models == ["univariate"] * 3 + ["gsf(2)"] * 3


class TestFlops:
    def test_total_matches_counter(self, capsys):
        assert main(["flops", "--length", "200", "--channels", "136"]) == EXIT_OK
        last = capsys.readouterr().out.splitlines()[-1]
        assert last == f"TOTAL\t{count_flops(ModelSpec(), 200, 136).total}"

    def test_compare_table(self, tmp_path, capsys):
        config = tmp_path / "flops.conf"
        config.write_text(
            "model.feature_count = 136\ncompare.variants = gsf,serank_b\ncompare.group_sizes = 64\n",
            encoding="utf-8",
        )
        assert main(["flops", "--config", str(config), "--compare", "--out", str(tmp_path)]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "model\tflops\tratio"
        assert lines[1] == "gsf(1)\t4557000\t1.00"
        assert lines[2].startswith("gsf(64)\t224326400\t")
        assert (tmp_path / "flops.tsv").is_file()


class TestHelp:
    def test_help_lists_config_keys(self, capsys):
        with pytest.raises(SystemExit) as excinfo:
            main(["train", "--help"])
        assert excinfo.value.code == 0
        out = capsys.readouterr().out
        for key in ("model.variant", "train.learning_rate", "loss.kind", "data.train"):
            assert key in out
