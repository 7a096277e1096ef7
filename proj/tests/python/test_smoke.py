import os
import sys

import numpy as np
import pytest

build_dir = os.environ.get("FDR_PYTHON_DIR")
if build_dir:
    sys.path.insert(0, build_dir)

import fdr  # noqa: E402


def test_fit_recovers_circle():
    x, y = fdr.circle_sample(0.75, 4000, seed=1)
    assert x.shape == (4000, 2) and y.shape == (4000,)
    out = fdr.fit(x, y, [16], lam=100.0, nu=0.005, tol=1e-3, max_iter=4000)
    assert out["u_hat"].shape == (256,)
    assert out["centers"].shape == (256, 2)
    assert out["converged"]
    mask = out["jump_mask"]
    assert mask.any()
    r = np.hypot(out["centers"][:, 0] - 0.5, out["centers"][:, 1] - 0.5)
    near = np.abs(r - 0.25) < 1.0 / 16
    assert mask[near].mean() > 0.3
    assert mask[near].mean() > 2 * mask[~near].mean()


def test_fit_1d_step_jump_location():
    x, y = fdr.fig1_sample(1000, seed=2, sigma=0.0)
    out = fdr.fit(x, y, [50], lam=200.0, nu=1e-3, tol=1e-3, max_iter=6000)
    centers = out["centers"][:, 0]
    jumps = centers[out["jump_mask"]]
    for loc in (0.2, 0.4, 0.6, 0.8):
        assert np.min(np.abs(jumps - loc)) < 0.05


def test_bad_input_raises_value_error():
    x = np.zeros((3, 1))
    y = np.array([0.0, np.nan, 1.0])
    with pytest.raises(ValueError):
        fdr.fit(x, y, [4])


def test_shape_mismatch_raises():
    with pytest.raises(ValueError):
        fdr.fit(np.zeros((3, 1)), np.zeros(4), [4])


def test_sure_single_candidate_echoes_theta():
    x, y = fdr.circle_sample(0.5, 1500, seed=3)
    res = fdr.sure_search(x, y, [8], lambda_range=(50.0, 50.0), nu_range=(0.004, 0.004),
                          n_lambda=1, n_nu=1, sigma=0.05, tol=1e-3, max_iter=6000)
    assert res["lambda"] == 50.0 and res["nu"] == 0.004
    assert np.isfinite(res["eta"])
