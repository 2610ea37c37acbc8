import math

import numpy as np
import pytest

import mbp


def test_link_constants():
    link = mbp.LinkSpec(1.0, 0.05)
    assert link.lipschitz == pytest.approx(0.25)
    assert link.curvature == pytest.approx(0.05 * 0.95)
    assert link.eval(0.0) == pytest.approx(0.5)


def test_simulate_shape_and_nll_at_zero():
    link = mbp.LinkSpec()
    theta = np.zeros((3, 3, 2))
    path = mbp.simulate(theta, link, n=200, burn_in=10, seed=1)
    assert path.shape == (202, 3)
    assert set(np.unique(path)) <= {0, 1}
    assert mbp.nll(theta, path, link) == pytest.approx(3.0 * math.log(2.0))


def test_gradient_single_term():
    grad = mbp.grad_nll(np.zeros((1, 1, 1)), np.array([[1], [1]], dtype=np.uint8), mbp.LinkSpec())
    assert grad.shape == (1, 1, 1)
    assert grad[0, 0, 0] == pytest.approx(-0.5)


def test_fit_recovers_large_entries():
    link = mbp.LinkSpec()
    theta = mbp.random_sparse_theta(4, 1, 3, seed=3)
    path = mbp.simulate(theta, link, n=4000, seed=4)
    lam = mbp.lambda_policy(4000, 4, 1, link, c2=0.5)
    result = mbp.fit(path, 1, link, lam)
    assert result["converged"]
    trace = np.asarray(result["objective_trace"])
    assert np.all(np.diff(trace) <= 0.0)
    assert mbp.norm(result["theta_hat"] - theta) < mbp.norm(theta)


def test_lambda_policy_example():
    link = mbp.LinkSpec()
    assert mbp.lambda_policy(4490, 20, 20, link, c2=100.0) == pytest.approx(4.474, abs=1e-3)
    assert mbp.lambda_policy(500, 5, 2, link, c2=1.0, mode="theorem") == pytest.approx(5.0 * math.sqrt(math.log(50.0) / 500.0))


def test_markov_helpers():
    assert mbp.dobrushin_tau1(np.array([[0.9, 0.1], [0.2, 0.8]])) == pytest.approx(0.7)
    assert mbp.f_p_bound(0.5, 2) == pytest.approx(10.0)
    assert mbp.kl_bernoulli(0.3, 0.7) <= mbp.kl_bernoulli_bound(0.3, 0.7, 0.3)
    check = mbp.check_gf_bound(np.zeros((1, 1, 2)), mbp.LinkSpec())
    assert check["holds"]
    with pytest.raises(mbp.ResourceLimitError):
        mbp.check_gf_bound(np.zeros((4, 4, 4)), mbp.LinkSpec())


def test_run_experiment_and_config_errors(tmp_path):
    text = "\n".join([
        "experiment = grid",
        "model.N = 3",
        "model.p = 1",
        "sweep.s_values = 1, 3",
        "sweep.n_values = 100, 200",
        "replicates = 2",
        "burn_in = 50",
    ])
    out = mbp.run_experiment(text, str(tmp_path))
    assert out["records"] == 8
    assert [(row["s"], row["n"]) for row in out["summary"]] == [(1, 100), (1, 200), (3, 100), (3, 200)]
    assert (tmp_path / "grid_matrix.csv").exists()
    with pytest.raises(mbp.ConfigError):
        mbp.run_experiment(text.replace("s_values = 1, 3", "s_values = 50"))
