import json
import subprocess
import sys

import pytest

from depclust.cli import main


@pytest.fixture
def run(capsys, caplog):
    # diagnostics go through logging; under pytest the log handler captures them
    caplog.set_level("WARNING", logger="depclust")

    def invoke(*argv):
        caplog.clear()
        code = main(list(argv))
        out, err = capsys.readouterr()
        return code, out, err + caplog.text

    return invoke


@pytest.fixture(scope="module")
def five_csv(tmp_path_factory):
    path = tmp_path_factory.mktemp("data") / "five.csv"
    assert main(["simulate", "five-var", "--n", "1000", "--seed", "7", "--out", str(path)]) == 0
    return path


def test_simulate_noise_columns(tmp_path, run):
    out = tmp_path / "noise.csv"
    bench = tmp_path / "bench.txt"
    code, _, _ = run("simulate", "noise", "--sigma", "0", "--n", "1000",
                     "--out", str(out), "--benchmark", str(bench))
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "X1,X2,X3,X4,X5,X6" and len(lines) == 1001
    assert bench.read_text() == "X1,X2\nX3,X4,X5\nX6\n"


def test_simulate_deterministic(tmp_path, run):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    run("simulate", "three-copulas", "--n", "200", "--seed", "5", "--out", str(a))
    run("simulate", "three-copulas", "--n", "200", "--seed", "5", "--out", str(b))
    assert a.read_bytes() == b.read_bytes()


def test_simulate_to_stdout(run):
    code, out, _ = run("simulate", "asym-mod-k", "--k", "3", "--n", "5")
    assert code == 0 and out.startswith("X1,X2\n") and len(out.splitlines()) == 6


def test_simulate_unknown(run):
    code, _, err = run("simulate", "nope")
    assert code == 4 and "unknown scenario" in err


def test_cluster_five_var(five_csv, tmp_path, run):
    outdir = tmp_path / "run"
    code, out, _ = run("cluster", "--input", str(five_csv), "--diss", "average",
                       "--backend", "multivariate", "--seed", "7", "--out", str(outdir))
    assert code == 0
    result = json.loads(out)
    assert result["chosen_k"]["tradeoff"] == 3
    assert result["partitions"]["tradeoff"] == [["X1"], ["X2", "X3"], ["X4", "X5"]]
    dendro = json.loads((outdir / "dendrogram.json").read_text())
    assert set(dendro) == {"labels", "merges"}
    assert len(dendro["merges"]) == 4
    assert set(dendro["merges"][0]) == {"left", "right", "height", "key"}
    assert (outdir / "tree.newick").read_text().endswith(";\n")
    assert (outdir / "dendrogram.svg").read_text().startswith("<svg")
    header = (outdir / "validity.csv").read_text().splitlines()[0]
    assert header == "k,adiam,msplit,silhouette,chosen_tradeoff,chosen_silhouette"


def test_cluster_byte_identical(five_csv, tmp_path, run):
    outs = []
    for name in ("a", "b"):
        d = tmp_path / name
        run("cluster", "--input", str(five_csv), "--seed", "3", "--out", str(d),
            "--backend", "linkage:average", "--diss", "copula:pi")
        outs.append([(d / f).read_bytes() for f in
                     ("dendrogram.json", "tree.newick", "dendrogram.svg", "validity.csv")])
    assert outs[0] == outs[1]


def test_cluster_emit_subset_and_k(five_csv, tmp_path, run):
    d = tmp_path / "sub"
    code, out, _ = run("cluster", "--input", str(five_csv), "--out", str(d),
                       "--emit", "json", "--k", "2")
    assert code == 0
    assert sorted(p.name for p in d.iterdir()) == ["dendrogram.json"]
    assert len(json.loads(out)["cut"]["partition"]) == 2


def test_cluster_rejects_w_copula(five_csv, tmp_path, run):
    code, _, err = run("cluster", "--input", str(five_csv), "--diss", "copula:W:0",
                       "--out", str(tmp_path))
    assert code == 4 and err


def test_cluster_missing_value(tmp_path, run):
    p = tmp_path / "bad.csv"
    p.write_text("a,b,c\n1,2,3\n4,,6\n7,8,9\n")
    code, _, err = run("cluster", "--input", str(p), "--out", str(tmp_path))
    assert code == 2 and "row 3" in err and "'b'" in err


def test_cluster_constant_column(tmp_path, run):
    p = tmp_path / "const.csv"
    p.write_text("a,b,c\n1,2,3\n4,2,6\n7,2,9\n")
    code, _, err = run("cluster", "--input", str(p), "--out", str(tmp_path))
    assert code == 3 and "'b'" in err


@pytest.mark.parametrize("body", ["a,b,c\n1,2,x\n3,4,5\n", "a,b\n1,2\n3,4\n", "a,b,c\n1,2\n"])
def test_cluster_malformed(tmp_path, run, body):
    p = tmp_path / "m.csv"
    p.write_text(body)
    code, _, _ = run("cluster", "--input", str(p), "--out", str(tmp_path))
    assert code == 2


def test_cluster_missing_file(tmp_path, run):
    code, _, _ = run("cluster", "--input", str(tmp_path / "none.csv"))
    assert code == 2


def test_kappa_mod_three(tmp_path, run):
    p = tmp_path / "mod.csv"
    run("simulate", "asym-mod-k", "--k", "3", "--n", "10000", "--out", str(p))
    code, out, _ = run("kappa", "--input", str(p), "--predictors", "X1",
                       "--responses", "X2")
    assert code == 0
    result = json.loads(out)
    assert result["forward"]["value"] >= 0.9
    assert abs(result["backward"]["value"] - 1 / 9) <= 0.05
    assert {"raw", "perm_count", "exact"} <= set(result["forward"])
    assert result["d_pi"] <= 0.1


def test_kappa_three_responses(five_csv, run):
    code, out, _ = run("kappa", "--input", str(five_csv), "--predictors", "X1",
                       "--responses", "X2,X3,X4", "--diss", "copula_dual:M")
    result = json.loads(out)
    assert code == 0 and result["forward"]["perm_count"] == 6 and result["forward"]["exact"]
    assert result["d"]["spec"].startswith("copula_dual:M")


def test_kappa_overlap(five_csv, run):
    code, _, _ = run("kappa", "--input", str(five_csv), "--predictors", "X1,X2",
                     "--responses", "X2")
    assert code == 4


def test_compare(tmp_path, run):
    a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
    a.write_text("x1,x2\nx3,x4\n")
    b.write_text("x1,x2,x3\nx4\n")
    c.write_text("x1,x2\nx3,x5\n")
    code, out, _ = run("compare", str(a), str(a))
    assert code == 0 and json.loads(out) == {"rand_index": 1.0, "fowlkes_mallows": 1.0}
    code, out, _ = run("compare", str(a), str(b))
    res = json.loads(out)
    assert res["rand_index"] == 0.5 and res["fowlkes_mallows"] == pytest.approx(0.40825, abs=1e-5)
    code, _, _ = run("compare", str(a), str(c))
    assert code == 4


def test_bad_flags_exit_two(run):
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "--input", "x.csv", "--perm-budget", "0"])
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["cluster", "--input", "x.csv", "--seed", "-1"])
    assert exc.value.code == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "s.csv"
    proc = subprocess.run([sys.executable, "-m", "depclust", "simulate", "linkage-sum",
                           "--n", "20", "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert out.read_text().startswith("X1,X2,X3\n")
