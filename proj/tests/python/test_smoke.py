"""Smoke tests for the python module: import, tiny train, explain, replay."""

import json
import os
import subprocess
import sys
import tempfile

import pytest

import windcf


@pytest.fixture(scope="module")
def artifacts():
    d = tempfile.mkdtemp(prefix="windcf_py_")
    data = os.path.join(d, "data.csv")
    summary = windcf.generate(data, spec={"duration_years": 0.45, "seed": 23})
    assert summary["samples"] > 20000
    report = windcf.train(data, d, k=3, trees=10, depth=3, seed=4)
    assert report["confusion"]["tp"] >= 0
    eng = windcf.Engine(
        os.path.join(d, "assets.json"),
        os.path.join(d, "model.json"),
        os.path.join(d, "n.json"),
        os.path.join(d, "t.json"),
    )
    return d, data, eng


def test_version():
    assert windcf.__version__ == "0.1.0"


def test_p_max_monotone():
    values = [windcf.p_max(ws / 2.0) for ws in range(0, 60)]
    assert values == sorted(values)
    assert values[0] == 0.0
    assert values[-1] == 5000.0


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    windcf.generate(str(a), spec={"duration_years": 0.02, "seed": 7})
    windcf.generate(str(b), spec={"duration_years": 0.02, "seed": 7})
    assert a.read_bytes() == b.read_bytes()


def test_classify_and_explain(artifacts):
    _, _, eng = artifacts
    hot = {
        "timestamp": "2021-04-21T10:00:00Z",
        "P": 100,
        "TN": 18,
        "TT": 75,
        "TA": 6.0,
        "WS": 9.2,
    }
    assert eng.classify(hot) == 1
    assert eng.score(hot) > 0.0
    result = eng.explain(hot, mode="operator", mdt=30, gap=1e-6)
    assert result["status"] in ("Optimal", "Infeasible", "FeasibleAtLimit")
    if result["has_solution"]:
        assert result["valid"]
        assert result["counterfactual"]["TT"] <= 75 + 30
        assert 0 <= result["counterfactual"]["P"] <= eng.p_max(hot["WS"])


def test_replay_short_window(artifacts):
    d, data, eng = artifacts
    out = os.path.join(d, "rep")
    summary = eng.simulate(data, "2021-04-20", "2021-04-21", mode="operator", out_dir=out)
    counts = summary["counts"]
    total = sum(counts.values())
    assert total == summary["replayed"]
    assert os.path.exists(os.path.join(out, "timeline.csv"))
    assert os.path.exists(os.path.join(out, "summary.json"))
    with open(os.path.join(out, "summary.json")) as f:
        assert json.load(f)["counts"] == counts


def test_data_error_maps_to_python_exception():
    with pytest.raises(windcf.DataError):
        windcf.train("/nonexistent.csv", "/tmp/windcf_nope")


if __name__ == "__main__":
    sys.exit(subprocess.call([sys.executable, "-m", "pytest", "-q", __file__]))
