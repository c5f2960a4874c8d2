"""MNIST experiment pipelines run end to end on whatever subset the fixture provides."""

import pytest

from geonet.bench import DimredConfig, run_dimred_experiment


@pytest.fixture(scope="module")
def baseline(mnist):
    return run_dimred_experiment("baseline", config=DimredConfig(), data=mnist).runs[0]


def test_baseline_reaches_target_on_10k_subset(mnist, baseline):
    if baseline["n_train"] < 10_000:
        pytest.skip(f"target is stated for a 10k training subset; only {baseline['n_train']} samples available")
    assert baseline["accuracy"] >= 0.93


def test_full_rank_pca_matches_baseline(mnist, baseline):
    run = run_dimred_experiment("pca:784", config=DimredConfig(), data=mnist).runs[0]
    assert run["explained_variance_ratio"] == pytest.approx(1.0)
    assert abs(run["accuracy"] - baseline["accuracy"]) <= 0.005


@pytest.mark.parametrize("method", ["pca:50", "ae:32"])
def test_reduced_pipelines_beat_chance(mnist, method):
    run = run_dimred_experiment(method, config=DimredConfig(), data=mnist).runs[0]
    assert run["accuracy"] > 0.5
    assert run["reduce_time_s"] >= 0


def test_report_echo_reruns_identically(mnist):
    from geonet.bench import strip_timings

    cfg = DimredConfig(epochs=1, n_train=500, n_test=200)
    small = (mnist[0].subset(range(500)), mnist[1].subset(range(200)))
    a = run_dimred_experiment("pca:20", config=cfg, data=small)
    b = run_dimred_experiment(a.config["method"], config=DimredConfig(**{
        k: v for k, v in a.config.items() if k not in ("method", "data_dir")}), data=small)
    assert strip_timings(a.to_dict()) == strip_timings(b.to_dict())
