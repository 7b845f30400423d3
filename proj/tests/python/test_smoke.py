import json
import math

import numpy as np
import pytest

import repbias


def table():
    return repbias.EmbeddingTable.from_entries(
        [("a", [1.0, 3.0]), ("b", [3.0, 1.0]), ("c", [2.0, -1.0]), ("d", [-3.0, 0.5])]
    )


def test_version():
    assert repbias.__version__ == "0.1.0"


def test_encoders():
    t = table()
    assert t.dim == 2 and len(t) == 4
    assert repbias.encode_average(["a", "b"], t) == [2.0, 2.0]
    assert repbias.encode_extrema(["c", "d"], t) == [-3.0, -1.0]
    conv = repbias.encode_convex(["c", "d"], t, 0.25)
    assert conv == pytest.approx([0.25 * -0.5 + 0.75 * -3.0, 0.25 * -0.25 + 0.75 * -1.0])
    assert repbias.encode_average(["a", "zzz"], t, repbias.OovPolicy.ZERO) == [0.5, 1.5]
    with pytest.raises(repbias.DataError):
        repbias.encode_average(["zzz"], t)


def test_pca_matches_numpy():
    rng = np.random.default_rng(3)
    x = rng.normal(size=(30, 6))
    model = repbias.fit_pca(x)
    want = np.sort(np.linalg.eigvalsh(np.cov(x, rowvar=False)))[::-1]
    assert model.eigenvalues == pytest.approx(list(want), rel=1e-9)
    assert model.components.shape == (6, 6)
    assert model.reconstruction_error(x, 6) < 1e-10
    assert json.loads(model.to_json())["fitted_on"] == 30


def test_group_error_profile_gap_sign():
    rng = np.random.default_rng(4)
    g0 = np.zeros((40, 5))
    g0[:, :2] = rng.normal(scale=5, size=(40, 2))
    g1 = rng.normal(size=(40, 5))
    rows = np.vstack([g0, g1])
    model = repbias.fit_pca(rows)
    prof = repbias.group_error_profile(model, rows, [0] * 40 + [1] * 40, [2, 3])
    assert all(g < 0 for g in prof["gap"])


def test_svm_xor():
    x = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = [1, 1, -1, -1]
    model = repbias.train_svm(x, y, c=10, gamma=1)
    assert model.accuracy(x, y) == 1.0
    alpha, _, objective = repbias.solve_dual(x, y, 10, 1)
    assert math.isfinite(objective) and all(0 <= a <= 10 for a in alpha)


def test_lambda_grids():
    assert len(repbias.lambda_grid(0, 1, 0.1)) == 11
    assert 0.97 in repbias.refine_grid(1.0, 0.01, 0.1)


def test_cli_round_trip(tmp_path):
    code, _, err = repbias.run_cli(
        ["synth", "--out", str(tmp_path / "d"), "--docs-per-group", "30", "--dim", "8", "--core-dims", "3"]
    )
    assert code == 0, err
    code, out, err = repbias.run_cli(
        ["audit", "--data", str(tmp_path / "d" / "corpus.csv"),
         "--embeddings", str(tmp_path / "d" / "embeddings.txt"),
         "--splits", "3", "--out", str(tmp_path / "a")]
    )
    assert code == 0, err
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert len(report["group_error_profiles"]) == 2
    assert repbias.run_cli(["audit"])[0] == 2


def test_reports_match_schema(tmp_path):
    jsonschema = pytest.importorskip("jsonschema")
    from pathlib import Path

    schema = json.loads((Path(__file__).resolve().parents[2] / "docs" / "report_schema.json").read_text())
    d = tmp_path / "d"
    assert repbias.run_cli(["synth", "--out", str(d), "--docs-per-group", "30", "--dim", "8"])[0] == 0
    data = ["--data", str(d / "corpus.csv")]
    emb = ["--embeddings", str(d / "embeddings.txt")]
    grid = ["--c-range", "0:0:1", "--gamma-range", "-2:-2:1"]
    runs = {
        "stats": ["stats", *data],
        "audit": ["audit", *data, *emb, "--splits", "2"],
        "train": ["train", *data, *emb, *grid, "--pca-dims", "3"],
        "sweep": ["sweep", *data, *emb, *grid, "--dims", "2,5", "--lambda-grid", "0:1:0.5",
                  "--refine", "0.25", "--gap-budget", "1"],
    }
    for name, args in runs.items():
        out = tmp_path / name
        code, _, err = repbias.run_cli(args + ["--out", str(out)])
        assert code == 0, err
        jsonschema.validate(json.loads((out / "report.json").read_text()), schema)
