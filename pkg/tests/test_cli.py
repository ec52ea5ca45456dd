"""End-to-end runs of every subcommand against a small synthetic table."""
import json
import os

import numpy as np
import pytest

from spnmix.cli import main
from spnmix.data import load_csv
from spnmix.model_io import load_model

FIT_FAST = ["--iters", "60", "--burn-in", "40", "--thinning", "4",
            "--min-instances", "0.25", "--seed", "5"]


@pytest.fixture(scope="module")
def workdir(tmp_path_factory, capfd_unsafe=None):
    root = tmp_path_factory.mktemp("cli")
    assert main(["synth", "--n", "400", "--d", "3", "--seed", "9",
                 "-o", str(root / "bench")]) == 0
    assert main(["fit", str(root / "bench" / "train.csv"), *FIT_FAST,
                 "-o", str(root / "model.json")]) == 0
    return root


def test_synth_writes_benchmark_files(workdir):
    bench = workdir / "bench"
    for name in ("data.csv", "train.csv", "valid.csv", "test.csv",
                 "truth.json"):
        assert (bench / name).exists()
    full = load_csv(bench / "data.csv")
    parts = [load_csv(bench / n) for n in
             ("train.csv", "valid.csv", "test.csv")]
    assert full.n_rows == 400
    assert [p.n_rows for p in parts] == [280, 40, 80]
    doc = json.loads((bench / "truth.json").read_text())
    assert doc["format"] == "spnmix-truth"


def test_synth_is_deterministic_per_seed(workdir, tmp_path):
    assert main(["synth", "--n", "400", "--d", "3", "--seed", "9",
                 "-o", str(tmp_path / "again")]) == 0
    # provenance comments differ (they fingerprint the output path); the
    # canonical content must not
    a = load_csv(workdir / "bench" / "data.csv")
    b = load_csv(tmp_path / "again" / "data.csv")
    assert a.content_hash() == b.content_hash()


def test_fit_writes_model_with_provenance(workdir, capsys):
    model = load_model(workdir / "model.json")
    assert len(model.samples) == 5   # (60-40-1)//4 + 1
    assert main(["fit", str(workdir / "bench" / "train.csv"), *FIT_FAST,
                 "-o", str(workdir / "model2.json")]) == 0
    out = capsys.readouterr().out
    assert "spnmix" in out and "seed=5" in out and "config=" in out


def test_fit_same_seed_reproduces_densities(workdir):
    a = load_model(workdir / "model.json")
    b = load_model(workdir / "model2.json")
    data = load_csv(workdir / "bench" / "test.csv")
    probe = data.values[:50]
    obs = ~np.isnan(probe)
    np.testing.assert_array_equal(a.samples.train_loglik,
                                  b.samples.train_loglik)
    for pa, pb in zip(a.samples.draws, b.samples.draws):
        np.testing.assert_array_equal(
            a.spn.log_density_batch(pa, probe, obs),
            b.spn.log_density_batch(pb, probe, obs))


def test_impute_fills_every_hole(workdir, tmp_path):
    data = load_csv(workdir / "bench" / "test.csv")
    vals = data.values.copy()
    vals[::4, 0] = np.nan
    holey = tmp_path / "holey.csv"
    from spnmix.data import save_csv
    save_csv(holey, data.replace_values(vals))
    out = tmp_path / "filled.csv"
    assert main(["impute", str(workdir / "model.json"), str(holey),
                 "-o", str(out)]) == 0
    filled = load_csv(out)
    assert filled.observed.all()
    kept = ~np.isnan(vals)
    np.testing.assert_array_equal(filled.values[kept], vals[kept])
    # mc mode works too and stays integral on discrete features
    out2 = tmp_path / "filled_mc.csv"
    assert main(["impute", str(workdir / "model.json"), str(holey),
                 "--mode", "mc", "-o", str(out2)]) == 0
    assert load_csv(out2).observed.all()


def test_impute_warns_on_foreign_data(workdir, tmp_path, capsys):
    data = load_csv(workdir / "bench" / "valid.csv")
    vals = data.values.copy()
    vals[0, 0] = np.nan
    p = tmp_path / "foreign.csv"
    from spnmix.data import save_csv
    save_csv(p, data.replace_values(vals))
    out = tmp_path / "out.csv"
    assert main(["impute", str(workdir / "model.json"), str(p),
                 "-o", str(out)]) == 0
    assert "hash mismatch" in capsys.readouterr().err


def test_score_table_is_row_sorted(workdir, tmp_path):
    out = tmp_path / "scores.csv"
    assert main(["score", str(workdir / "model.json"),
                 str(workdir / "bench" / "test.csv"),
                 "-o", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0] == "row,nll,path"
    rows = [int(l.split(",")[0]) for l in lines[1:]]
    assert rows == sorted(rows) == list(range(80))
    nlls = [float(l.split(",")[1]) for l in lines[1:]]
    assert all(np.isfinite(nlls))
    paths = [l.split(",")[2] for l in lines[1:]]
    assert all(p == "-" or ":" in p for p in paths)


def test_types_table_covers_kind_and_stat_axes(workdir, tmp_path):
    out = tmp_path / "types.csv"
    assert main(["types", str(workdir / "model.json"),
                 "-o", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0] == "feature,name,axis,label,probability,stderr"
    axes = {l.split(",")[2] for l in lines[1:]}
    assert axes == {"kind", "stat"}
    feats = {int(l.split(",")[0]) for l in lines[1:]}
    assert feats == {0, 1, 2}
    for l in lines[1:]:
        p = float(l.split(",")[4])
        assert 0.0 <= p <= 1.5


def test_patterns_table(workdir, tmp_path):
    out = tmp_path / "patterns.csv"
    assert main(["patterns", str(workdir / "model.json"),
                 "--theta", "0.5", "--support-floor", "0.01",
                 "-o", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0] == "rank,support,arity,anchor,pattern"
    if len(lines) > 1:
        first = lines[1].split(",")
        assert int(first[0]) == 1
        assert 0.0 <= float(first[1]) <= 1.0


def test_report_writes_markdown_and_grids(workdir, tmp_path):
    out = tmp_path / "report.md"
    assert main(["report", str(workdir / "model.json"),
                 str(workdir / "bench" / "train.csv"),
                 "--grid-points", "40", "-o", str(out)]) == 0
    txt = out.read_text()
    assert "# Model report" in txt
    assert "## Partition tree" in txt
    grid_dir = tmp_path / "report_grids"
    grids = sorted(grid_dir.glob("feature_*.csv"))
    assert len(grids) == 3
    body = [l for l in grids[0].read_text().splitlines()
            if l and not l.startswith("#")]
    header = body[0].split(",")
    assert header[:2] == ["x", "mixture"]
    dens = [float(l.split(",")[1]) for l in body[1:]]
    assert all(v >= 0 for v in dens)


def test_eval_synth_summary(workdir, tmp_path, capsys):
    out = tmp_path / "recovery.csv"
    assert main(["eval-synth", str(workdir / "bench"), *FIT_FAST,
                 "-o", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "mean_stat_cosine=" in printed
    assert "gap_per_feature=" in printed
    lines = [l for l in out.read_text().splitlines()
             if l and not l.startswith("#")]
    assert lines[0].startswith("feature,archetype,true_kind,top_kind")
    assert len(lines) == 1 + 3
    assert (tmp_path / "recovery_confusion.csv").exists()


def test_missing_seed_is_drawn_and_printed(tmp_path, capsys):
    assert main(["synth", "--n", "50", "--d", "2",
                 "-o", str(tmp_path / "s")]) == 0
    out = capsys.readouterr().out
    assert "seed=" in out


def test_corrupt_model_exits_one(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{} nope")
    rc = main(["types", str(bad), "-o", str(tmp_path / "t.csv")])
    assert rc == 1
    assert "error: CorruptFile" in capsys.readouterr().err


def test_missing_input_file_exits_one(tmp_path, capsys):
    rc = main(["fit", str(tmp_path / "absent.csv"), "--seed", "1",
               "-o", str(tmp_path / "m.json")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err
