import subprocess
import sys

import pytest

from superensemble.cli import main
from superensemble.data import bundled_path

PIMA, PIMA_SCHEMA = (str(p) for p in bundled_path("pima"))
BREAST, _ = (str(p) for p in bundled_path("breast_cancer"))
GERMAN_SCHEMA = str(bundled_path("german_credit")[1])
FAST = ["--hidden-grid", "2,5", "--iters", "20"]


@pytest.fixture(scope="module")
def trained(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "pima.secl"
    assert main(["train", "--data", PIMA, "--schema", PIMA_SCHEMA, "--model", str(path), *FAST]) == 0
    return path


def test_train_writes_reproducible_model(trained, tmp_path, capsys):
    other = tmp_path / "again.secl"
    assert main(["train", "--data", PIMA, "--schema", PIMA_SCHEMA, "--model", str(other), *FAST]) == 0
    out = capsys.readouterr().out
    assert "validation AUC:" in out and "selected features:" in out
    assert other.read_bytes() == trained.read_bytes()


def test_train_errors(tmp_path):
    assert main(["train", "--data", PIMA, "--schema", str(tmp_path / "none"), "--model", str(tmp_path / "m")]) == 2
    assert main(["train", "--data", PIMA, "--schema", PIMA_SCHEMA, "--model", "/nonexistent/dir/m"]) == 2
    assert main(["train", "--data", PIMA, "--schema", PIMA_SCHEMA, "--model", str(tmp_path / "m"),
                 "--minsplit-frac", "0"]) == 1
    assert not (tmp_path / "m").exists()


def test_train_single_class_is_data_error(tmp_path, write_csv):
    schema = write_csv("s.schema", "x numeric\nlabel y\n")
    data = write_csv("d.csv", "x,y\n" + "".join(f"{i},a\n" for i in range(8)))
    assert main(["train", "--data", str(data), "--schema", str(schema), "--model", str(tmp_path / "m")]) == 2


def test_train_fit_failure_exit_code(tmp_path, monkeypatch):
    import superensemble.cli as cli

    def boom(*args, **kwargs):
        raise FloatingPointError("diverged")
    monkeypatch.setattr(cli, "fit_superensemble", boom)
    assert main(["train", "--data", PIMA, "--schema", PIMA_SCHEMA, "--model", str(tmp_path / "m")]) == 3
    assert not (tmp_path / "m").exists()


def test_predict_with_labels(trained, tmp_path, capsys):
    out = tmp_path / "pred.txt"
    assert main(["predict", "--data", PIMA, "--model", str(trained), "--out", str(out)]) == 0
    labels = out.read_text().splitlines()
    assert len(labels) == 768 and set(labels) <= {"tested_negative", "tested_positive"}
    printed = capsys.readouterr().out
    assert "AUC:" in printed and "pred positive" in printed
    again = tmp_path / "pred2.txt"
    main(["predict", "--data", PIMA, "--model", str(trained), "--out", str(again)])
    assert again.read_bytes() == out.read_bytes()


def test_predict_unlabeled(trained, write_csv, capsys):
    lines = open(PIMA).read().splitlines()
    header = lines[0].rsplit(",", 1)[0]
    rows = [ln.rsplit(",", 1)[0] for ln in lines[1:6]]
    path = write_csv("u.csv", "\n".join([header, *rows]) + "\n")
    assert main(["predict", "--data", str(path), "--model", str(trained)]) == 0
    captured = capsys.readouterr()
    assert len(captured.out.splitlines()) == 5
    assert "AUC" not in captured.out + captured.err


def test_predict_errors(trained, write_csv, tmp_path):
    assert main(["predict", "--data", PIMA, "--model", str(trained), "--schema", GERMAN_SCHEMA]) == 2
    assert main(["predict", "--data", PIMA, "--model", str(trained), "--schema", PIMA_SCHEMA,
                 "--out", str(tmp_path / "p")]) == 0
    missing = write_csv("m.csv", "preg,plas\n1,2\n")
    assert main(["predict", "--data", str(missing), "--model", str(trained)]) == 2
    assert main(["predict", "--data", PIMA, "--model", str(tmp_path / "nope")]) == 2
    broken = tmp_path / "broken.secl"
    broken.write_text(trained.read_text()[:200])
    assert main(["predict", "--data", PIMA, "--model", str(broken)]) == 2


def test_rank_features_pima(capsys):
    assert main(["rank-features", "--data", PIMA, "--schema", PIMA_SCHEMA]) == 0
    rows = [ln.split() for ln in capsys.readouterr().out.splitlines()]
    assert len(rows) == 8
    values = [float(r[1]) for r in rows]
    assert abs(sum(values) - 1.0) < 1e-5   # printed with 6 decimals
    assert values == sorted(values, reverse=True)


def test_rank_features_single_feature_and_leaf(write_csv, capsys):
    schema = write_csv("s.schema", "a numeric\nb numeric\nlabel y\n")
    sep = write_csv("sep.csv", "a,b,y\n" + "".join(f"{i},{i % 3},{'p' if i < 12 else 'n'}\n" for i in range(20)))
    assert main(["rank-features", "--data", str(sep), "--schema", str(schema)]) == 0
    assert capsys.readouterr().out.splitlines()[0].split() == ["a", "1.000000"]
    flat = write_csv("flat.csv", "a,b,y\n" + "".join(f"1,1,{'p' if i % 2 else 'n'}\n" for i in range(10)))
    assert main(["rank-features", "--data", str(flat), "--schema", str(schema)]) == 0
    assert "notice" in capsys.readouterr().out
    assert main(["rank-features", "--data", str(flat), "--schema", str(sep.parent / "missing.schema")]) == 2


def test_benchmark_two_datasets(capsys):
    assert main(["benchmark", PIMA, BREAST, "--repeats", "2", *FAST]) == 0
    table = capsys.readouterr().out
    lines = table.splitlines()
    assert lines[0].split() == ["Classifier", "pima", "breast_cancer"]
    assert [ln.split()[0] for ln in lines[2:]] == ["HDDT", "RBFN", "Superensemble"]
    assert main(["benchmark", PIMA, BREAST, "--repeats", "2", *FAST]) == 0
    assert capsys.readouterr().out == table


def test_benchmark_csv_and_failures(tmp_path, capsys):
    assert main(["benchmark", BREAST, "--repeats", "1", "--format", "csv", *FAST,
                 "--criterion", "hellinger", "gini"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "Classifier,breast_cancer"
    assert out[2].startswith("CT (gini),")
    assert main(["benchmark", str(tmp_path / "missing.csv"), BREAST, "--repeats", "1", *FAST]) == 2
    captured = capsys.readouterr()
    assert "missing.csv" in captured.err and "breast_cancer" in captured.out


def test_usage_errors(capsys):
    assert main(["benchmark"]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["train", "--bogus"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["benchmark", PIMA, "--hidden-grid", "a,b"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main(["benchmark", PIMA, "--criterion", "chi2"])
    assert exc.value.code == 1


@pytest.mark.parametrize("command", ["train", "predict", "rank-features", "benchmark"])
def test_help_lists_defaults(command):
    res = subprocess.run([sys.executable, "-m", "superensemble", command, "--help"],
                         capture_output=True, text=True)
    assert res.returncode == 0
    assert "(default:" in res.stdout
    expected = {
        "train": ["--data", "--schema", "--model", "--seed", "--criterion", "--minsplit-frac", "--top-m",
                  "--hidden-grid", "--lr-w", "--lr-c", "--lr-sigma", "--iters", "--class-weight"],
        "predict": ["--data", "--model", "--schema", "--out"],
        "rank-features": ["--data", "--schema", "--criterion", "--minsplit-frac", "--top-m"],
        "benchmark": ["--repeats", "--format", "--out", "--seed", "--criterion", "--hidden-grid", "--iters"],
    }[command]
    for flag in expected:
        assert flag in res.stdout
