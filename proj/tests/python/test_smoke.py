import math

import numpy as np
import pytest

import stabsel


def small_dataset(algorithm="lasso", seed=7):
    return stabsel.make_dataset(
        matrix_type="A",
        n_samples=100,
        n_inputs=20,
        n_true=4 if algorithm != "siol" else 2,
        snr=2.0,
        algorithm=algorithm,
        seed=seed,
    )


def test_make_dataset_shapes_and_standardization():
    data = small_dataset()
    x, y = data["design"], data["response"]
    assert x.shape == (100, 20)
    assert y.shape == (100, 1)
    np.testing.assert_allclose(x.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose((x**2).mean(axis=0), 1.0, atol=1e-12)
    assert len(data["truth"]) == 4
    assert all(j == 0 for _, j in data["truth"])


def test_fit_recovers_signal():
    data = small_dataset()
    lmax = stabsel.lambda_max(data["design"], data["response"], "lasso")
    report = stabsel.fit(data["design"], data["response"], "lasso", lmax * 0.05)
    assert report["converged"]
    assert report["coefficients"].shape == (20, 1)
    selected = {pair for pair in report["selection"]}
    truth = {tuple(pair) for pair in data["truth"]}
    assert truth <= selected


def test_lambda_max_gives_empty_fit():
    data = small_dataset()
    lmax = stabsel.lambda_max(data["design"], data["response"], "lasso")
    report = stabsel.fit(data["design"], data["response"], "lasso", lmax)
    assert report["selection"] == []


def test_siol_fit_with_groups():
    data = small_dataset(algorithm="siol")
    assert data["response"].shape == (100, 5)
    lmax = stabsel.lambda_max(
        data["design"],
        data["response"],
        "siol",
        l1_weight=2.0,
        input_groups=data["input_groups"],
        input_weights=data["input_weights"],
        output_groups=data["output_groups"],
        output_weights=data["output_weights"],
    )
    report = stabsel.fit(
        data["design"],
        data["response"],
        "siol",
        lmax * 0.1,
        l1_weight=2.0,
        input_groups=data["input_groups"],
        input_weights=data["input_weights"],
        output_groups=data["output_groups"],
        output_weights=data["output_weights"],
    )
    assert report["coefficients"].shape == (20, 5)
    assert len(report["selection"]) > 0


def test_stability_selection_and_bound():
    data = small_dataset()
    lmax = stabsel.lambda_max(data["design"], data["response"], "lasso")
    out = stabsel.stability_select(
        data["design"],
        data["response"],
        "lasso",
        lmax * 0.2,
        iterations=20,
        threshold=0.6,
        seed=3,
    )
    tau = out["tau"]
    assert tau.shape == (20, 1)
    assert np.all((tau >= 0.0) & (tau <= 1.0))
    assert out["q_hat"] == pytest.approx(tau.sum(), abs=1e-12)
    assert out["invocations"] == 20

    b = stabsel.nfp_bound(out["q_hat"], 20, 0.9)
    assert b == pytest.approx(out["q_hat"] ** 2 / (20 * 0.8))
    pi = stabsel.pi_for_bound(out["q_hat"], 20, b)
    assert pi == pytest.approx(0.9)


def test_cross_validate_returns_table():
    data = small_dataset()
    result = stabsel.cross_validate(
        data["design"], data["response"], "lasso", folds=5, seed=11
    )
    assert result["chosen_lambda"] > 0
    assert len(result["table"]) > 1
    lambdas = [lam for lam, _ in result["table"]]
    assert lambdas == sorted(lambdas, reverse=True)
    assert result["coefficients"].shape == (20, 1)


def test_screen_and_clean_p_values():
    data = small_dataset()
    result = stabsel.screen_and_clean(
        data["design"], data["response"], "lasso", splits=3, folds=4, threshold=1.0, seed=5
    )
    p = result["p_values"]
    assert p.shape == (20, 1)
    assert np.all(p >= 0.0)
    selected = {tuple(pair) for pair in result["selection"]}
    assert selected == {(i, j) for i in range(20) for j in range(1) if p[i, j] <= 1.0}


def test_bh_adjust_known_values():
    adjusted = stabsel.bh_adjust([0.005, 0.04, 0.03])
    np.testing.assert_allclose(adjusted, [0.015, 0.04, 0.04])


def test_student_t_p_cauchy():
    # df = 1 is Cauchy: F(1) = 3/4, so the two-sided p at t = 1 is 1/2.
    assert stabsel.student_t_p(1.0, 1.0) == pytest.approx(0.5, abs=1e-10)


def test_data_error_maps_to_value_error():
    with pytest.raises(ValueError):
        stabsel.fit(np.zeros((5, 2)), np.zeros((4, 1)), "lasso", 0.1)
    with pytest.raises(ValueError):
        stabsel.make_dataset(
            matrix_type="B", n_samples=50, n_inputs=17, n_true=2, algorithm="lasso"
        )


def test_determinism():
    a = small_dataset(seed=42)
    b = small_dataset(seed=42)
    np.testing.assert_array_equal(a["design"], b["design"])
    np.testing.assert_array_equal(a["response"], b["response"])
    c = small_dataset(seed=43)
    assert not np.array_equal(a["design"], c["design"])
