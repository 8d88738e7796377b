import json
import subprocess
import sys

import pytest

from loma.cli import main


def run(*argv):
    return main([str(a) for a in argv])


@pytest.fixture
def split_files(tmp_path):
    data = tmp_path / "data.csv"
    assert run("synth", "--family", "funky-curves", "--n", 40, "--sigma", 0.02, "--seed", 1, "-o", data) == 0
    tr, te = tmp_path / "train.csv", tmp_path / "test.csv"
    assert run("split", "--data", data, "--seed", 1, "--train-out", tr, "--test-out", te) == 0
    return tr, te


class TestSynth:
    def test_row_count(self, tmp_path):
        out = tmp_path / "d.csv"
        assert run("synth", "--family", "disjoint-curves", "--n", 100, "-o", out) == 0
        assert len(out.read_text().splitlines()) == 200

    def test_invalid_family(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run("synth", "--family", "spirals", "--n", 10, "-o", tmp_path / "x.csv")
        assert exc.value.code == 2

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            run("synth", "--family", "concentric-spheres", "--n", 20, "--sigma", 0.1, "--dim", 4, "--classes", 3, "-o", out)
        assert a.read_bytes() == b.read_bytes()


class TestEval:
    def test_json_report(self, split_files, tmp_path):
        tr, te = split_files
        out = tmp_path / "r.json"
        assert run("eval", "--train", tr, "--test", te, "--p-grid", "1,2", "--baseline-k", 1, "-o", out) == 0
        report = json.loads(out.read_text())
        assert report["config"]["p"] in (1, 2)
        assert report["config"]["cv_accuracy"] is not None
        assert 0 <= report["accuracy"] <= 1
        assert report["baseline"]["method"] == "knn(K=1)"

    def test_csv_report(self, split_files, tmp_path):
        tr, te = split_files
        out = tmp_path / "r.csv"
        assert run("eval", "--train", tr, "--test", te, "--p", 1, "--format", "csv", "-o", out) == 0
        assert len(out.read_text().splitlines()) == 4

    def test_dimension_mismatch_exit_4(self, tmp_path, capsys):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        run("synth", "--family", "disjoint-curves", "--n", 10, "-o", a)
        run("synth", "--family", "disjoint-curves", "--n", 10, "--dim", 3, "-o", b)
        assert run("eval", "--train", a, "--test", b, "--p", 1) == 4
        assert "D=3" in capsys.readouterr().err

    def test_missing_file_exit_3(self, tmp_path):
        assert run("eval", "--train", tmp_path / "nope.csv", "--test", tmp_path / "nope.csv") == 3

    def test_malformed_exit_4(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,0.5,0.5\n2,abc,0.1\n")
        assert run("eval", "--train", bad, "--test", bad) == 4
        assert "row 2" in capsys.readouterr().err

    def test_infeasible_k_exit_2(self, split_files):
        tr, te = split_files
        assert run("eval", "--train", tr, "--test", te, "--k", 2, "--p", 1) == 2


class TestOtherCommands:
    def test_fit_predict(self, split_files, tmp_path):
        tr, te = split_files
        model = tmp_path / "m.json"
        assert run("fit", "--train", tr, "--p", 1, "-o", model) == 0
        q = tmp_path / "q.csv"
        q.write_text("x,y\n0.0,0.9\n-0.5,-0.2\n")
        out = tmp_path / "pred.csv"
        assert run("predict", "--model", model, "--queries", q, "-o", out) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "label,d_1,d_2,d_3"
        assert len(lines) == 3

    def test_predict_bad_checksum_exit_4(self, split_files, tmp_path):
        tr, _ = split_files
        model = tmp_path / "m.json"
        run("fit", "--train", tr, "--p", 1, "-o", model)
        with open(tmp_path / "m.train.csv", "a") as fh:
            fh.write("1,0,0\n")
        q = tmp_path / "q.csv"
        q.write_text("0,0\n")
        assert run("predict", "--model", model, "--queries", q, "-o", tmp_path / "p.csv") == 4

    def test_tune(self, split_files, tmp_path, capsys):
        tr, _ = split_files
        out = tmp_path / "t.json"
        assert run("tune", "--train", tr, "--p-grid", "1,2", "-o", out) == 0
        assert json.loads(out.read_text())["p"] in (1, 2)
        assert "chosen p=" in capsys.readouterr().out

    def test_learning_curve(self, tmp_path):
        data = tmp_path / "d.csv"
        run("synth", "--family", "disjoint-curves", "--n", 60, "--sigma", 0.05, "-o", data)
        out = tmp_path / "lc.csv"
        assert run("learning-curve", "--data", data, "--p", 1, "--fractions", "0.2,0.5,0.8", "--repeats", 2, "-o", out) == 0
        assert len(out.read_text().splitlines()) == 4

    def test_bound(self, capsys):
        assert run("bound", "--delta", 1, "--sigma", 0.1, "--dim", 2) == 0
        assert capsys.readouterr().out == "0.00012662617\tregime=chernoff\n"

    def test_bound_trivial(self, capsys):
        assert run("bound", "--delta", 0.2, "--sigma", 0.1, "--dim", 1) == 0
        assert capsys.readouterr().out == "1\tregime=trivial\n"

    def test_bound_invalid_exit_2(self):
        assert run("bound", "--delta", -1, "--sigma", 0.1, "--dim", 2) == 2

    def test_bound_sweep(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run("bound-sweep", "--sigmas", "0,0.05", "--n", 50, "-o", out) == 0
        assert out.read_text().splitlines()[0] == "sigma,error,bound,trivial,delta,n_train,n_test"

    def test_console_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "loma.cli", "bound", "--delta", "1", "--sigma", "0.1", "--dim", "2"],
                             capture_output=True, text=True)
        assert res.returncode == 0 and "chernoff" in res.stdout
