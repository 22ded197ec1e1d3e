import json
import math

import numpy as np
import pytest

from nibblematch.generators import GeneratorSpec, random_regular_simple
from nibblematch.harness import (
    ExperimentConfig,
    ExperimentReport,
    check_almost_independence,
    check_concentration,
    d_omega_window,
    edge_tuples,
    run_experiment,
    trial_seed,
)
from nibblematch.nibble import CSV_HEADER, NibbleConfig, init_state, predict_trajectory, run_nibble


@pytest.fixture(scope="module")
def run():
    H = random_regular_simple(3, 40, 900, seed=0)
    return H, run_nibble(H, NibbleConfig(gamma=0.5, seed=0))


def test_window(run):
    _, res = run
    lo, hi = d_omega_window(res.log)
    assert hi == pytest.approx(40 ** 0.5)
    assert lo == pytest.approx(0.25 * (1 - math.exp(-3)) ** 2 * hi)


def test_concentration_report(run):
    H, res = run
    pred = predict_trajectory(40, 0, 3, 0.5, 900)
    rep = check_concentration(res.log, pred)
    assert rep["stages"][0] == {"i": 0, "U": 900, "expected": 900.0, "deviation": 0.0, "ok": True}
    assert len(rep["stages"]) == res.log.omega + 1
    assert rep["window_applies"] and rep["window_ok"]
    U = res.log.column("U")
    p = res.log.column("p_star")
    dev = np.abs(U - 900 * np.cumprod(1 - p)) / (900 * np.cumprod(1 - p))
    assert rep["max_deviation"] == pytest.approx(dev.max())
    assert rep["trajectory_ok"] == bool(dev.max() <= 0.1)
    assert "prediction_D_max_deviation" in rep


def test_concentration_window_skipped_when_not_threshold(run):
    H, _ = run
    res = run_nibble(H, NibbleConfig(gamma=0.5, seed=0, max_stages=1))
    rep = check_concentration(res.log)
    assert rep["window_ok"] is None and not rep["window_applies"]


def test_edge_tuples_shape(regular3):
    tups = edge_tuples(regular3, 1, 2, 5, seed=0)
    assert len(tups) == 5
    mat = {tuple(sorted(e)) for e in regular3.edges}
    for xs, ys in tups:
        assert len(xs) == 1 and len(ys) == 2
        assert any(set(xs + ys) <= set(e) for e in mat)
    with pytest.raises(ValueError):
        edge_tuples(regular3, 2, 2, 1)


def test_almost_independence_single_vertex(regular3):
    st = init_state(regular3, NibbleConfig(gamma=0.5))
    rep = check_almost_independence(regular3, st, ([0], []), 20_000, seed=1)
    assert rep["joint"] == pytest.approx(rep["product_empirical"])
    assert rep["deviation"] <= 4 * rep["standard_error"] + 1e-12
    assert rep["c"] == 36
    assert rep["passed"]


def test_almost_independence_errors(regular3):
    st = init_state(regular3, NibbleConfig(gamma=0.5))
    with pytest.raises(ValueError):
        check_almost_independence(regular3, st, ([], []), 10)
    with pytest.raises(ValueError):
        check_almost_independence(regular3, st, ([1], [1]), 10)
    st.alive[4] = False
    with pytest.raises(ValueError):
        check_almost_independence(regular3, st, ([4], []), 10)


def test_experiment_config_validation():
    spec = {"family": "STS", "n": 13}
    cfg = ExperimentConfig("nibble", spec, [1, 2])
    assert isinstance(cfg.instance, GeneratorSpec)
    assert ExperimentConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))).to_dict() == \
        cfg.to_dict()
    with pytest.raises(ValueError):
        ExperimentConfig("plot", spec, [1])
    with pytest.raises(ValueError):
        ExperimentConfig("nibble", spec, [])
    with pytest.raises(ValueError):
        ExperimentConfig("nibble", spec, [1], trials=0)
    with pytest.raises(ValueError):
        ExperimentConfig("nibble", spec, [1], tolerances={"concentration": 0})


def test_trial_seed_stable():
    assert trial_seed(3, 0) == trial_seed(3, 0)
    assert trial_seed(3, 0) != trial_seed(3, 1)


@pytest.mark.parametrize("kind", ["nibble", "pipeline", "color"])
def test_run_experiment(kind, tmp_path):
    if kind == "pipeline":
        spec = {"family": "RandomRegularSimple", "n": 120, "k": 4, "D": 8}
    else:
        spec = {"family": "STS", "n": 31}
    cfg = ExperimentConfig(kind, spec, [0, 1], trials=2, out=str(tmp_path))
    rep = run_experiment(cfg)
    assert len(rep.records) == 4
    assert rep.aggregate["failures"] == 0
    assert rep.aggregate["valid_count"] == rep.aggregate["valid_of"] == 4
    csv_text = (tmp_path / "report.csv").read_text()
    assert csv_text.splitlines()[0] == CSV_HEADER
    assert csv_text.splitlines()[1].split(",") == list(ExperimentReport.COLUMNS)
    assert run_experiment(cfg).to_json() == rep.to_json()


def test_run_experiment_records_generation_failure():
    cfg = ExperimentConfig("nibble", {"family": "STS", "n": 8}, [0])
    rep = run_experiment(cfg)
    assert rep.aggregate["failures"] == 1
    assert rep.records[0]["error"].startswith("generate:")
