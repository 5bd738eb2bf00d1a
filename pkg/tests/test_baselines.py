import math

import numpy as np
import numpy.testing as npt
import pytest
from scipy.optimize import minimize_scalar

from lrrsd import (
    ArrayGeometry,
    BaselineParams,
    IrlsParams,
    SceneConfig,
    admm_solve,
    apg_solve,
    irls_noisy,
    row_shrink,
    svd_shrink,
    svt_solve,
    synthesize_scene,
    unsmoothed_objective,
)

GEO10 = ArrayGeometry(10)


def _scene(seed, num_snapshots=100):
    return synthesize_scene(
        SceneConfig(GEO10, (-10.0, 10.0), num_snapshots, 0.0, 4, seed=seed)
    )


# ---------------------------------------------------------------------------
# proximal maps

def test_svd_shrink_zero():
    npt.assert_array_equal(svd_shrink(np.zeros((3, 5), dtype=complex), 1.0), np.zeros((3, 5)))


def test_svd_shrink_rank_one():
    rng = np.random.default_rng(20)
    u = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    u /= np.linalg.norm(u)
    v = rng.standard_normal(6) + 1j * rng.standard_normal(6)
    v /= np.linalg.norm(v)
    c = 5.0 * np.outer(u, v)
    npt.assert_allclose(svd_shrink(c, 2.0), 3.0 * np.outer(u, v), atol=1e-12)


def test_svd_shrink_zeroes_small_values():
    c = np.diag([3.0, 0.5]).astype(complex)
    npt.assert_allclose(svd_shrink(c, 1.0), np.diag([2.0, 0.0]), atol=1e-14)


def test_row_shrink_forced_scaling():
    c = np.zeros((2, 5), dtype=complex)
    c[0, :] = 5.0 / math.sqrt(5.0)
    npt.assert_allclose(row_shrink(c, 2.0), 0.6 * c, atol=1e-14)


def test_row_shrink_kills_small_rows():
    c = np.full((3, 4), 0.1, dtype=complex)
    npt.assert_array_equal(row_shrink(c, 10.0), np.zeros((3, 4)))


def test_row_shrink_zero_row_safe():
    c = np.zeros((2, 3), dtype=complex)
    c[1, 0] = 4.0
    out = row_shrink(c, 1.0)
    npt.assert_array_equal(out[0], np.zeros(3))
    npt.assert_allclose(out[1, 0], 3.0)


def test_prox_kappa_validation():
    with pytest.raises(ValueError):
        svd_shrink(np.zeros((2, 2), dtype=complex), 0.0)
    with pytest.raises(ValueError):
        row_shrink(np.zeros((2, 2), dtype=complex), -1.0)


def test_row_shrink_matches_line_search_oracle():
    # the minimizer of kappa*||x||+0.5*||x-c||^2 is collinear with c, so a
    # 1-D search over the scale factor is an independent oracle
    rng = np.random.default_rng(21)
    for _ in range(10):
        c = rng.standard_normal((4, 6)) + 1j * rng.standard_normal((4, 6))
        kappa = float(rng.uniform(0.3, 3.0))
        out = row_shrink(c, kappa)
        for i in range(4):
            cn = np.linalg.norm(c[i])
            res = minimize_scalar(
                lambda s: kappa * s + 0.5 * (s - cn) ** 2,
                bounds=(0.0, cn + 1.0),
                method="bounded",
                options={"xatol": 1e-12},
            )
            npt.assert_allclose(np.linalg.norm(out[i]), max(res.x, 0.0), atol=1e-8)


def test_prox_first_order_optimality():
    # random perturbations of norm 1e-3 never decrease the prox objective
    rng = np.random.default_rng(22)
    c = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
    kappa = 0.8
    z = svd_shrink(c, kappa)
    fz = kappa * np.sum(np.linalg.svd(z, compute_uv=False)) + 0.5 * np.linalg.norm(z - c) ** 2
    v = row_shrink(c, kappa)
    fv = kappa * np.sum(np.linalg.norm(v, axis=1)) + 0.5 * np.linalg.norm(v - c) ** 2
    for _ in range(30):
        d = rng.standard_normal((4, 5)) + 1j * rng.standard_normal((4, 5))
        d *= 1e-3 / np.linalg.norm(d)
        fz_p = (
            kappa * np.sum(np.linalg.svd(z + d, compute_uv=False))
            + 0.5 * np.linalg.norm(z + d - c) ** 2
        )
        fv_p = (
            kappa * np.sum(np.linalg.norm(v + d, axis=1))
            + 0.5 * np.linalg.norm(v + d - c) ** 2
        )
        assert fz_p >= fz - 1e-12
        assert fv_p >= fv - 1e-12


# ---------------------------------------------------------------------------
# solvers

def test_params_validation():
    with pytest.raises(ValueError):
        BaselineParams(lam1=0.0)
    with pytest.raises(ValueError):
        BaselineParams(tau_svt=-1.0)
    with pytest.raises(ValueError):
        BaselineParams(k_max=0)


def test_solvers_zero_input():
    y = np.zeros((4, 7), dtype=complex)
    for solve in (svt_solve, apg_solve, admm_solve):
        res = solve(y, BaselineParams())
        npt.assert_array_equal(res.Z_hat, np.zeros((4, 7)))
        npt.assert_array_equal(res.V_hat, np.zeros((4, 7)))


def test_solver_output_shapes():
    sc = _scene((30, 0))
    for solve in (svt_solve, apg_solve, admm_solve):
        res = solve(sc.Y, BaselineParams(k_max=50))
        assert res.Z_hat.shape == sc.Y.shape
        assert res.V_hat.shape == sc.Y.shape
        assert res.iterations <= 50


def test_svt_objective_worse_than_irls():
    sc = _scene((31, 0))
    bp = BaselineParams(epsilon=1e-8)
    rs = svt_solve(sc.Y, bp)
    ri = irls_noisy(sc.Y, IrlsParams(epsilon=1e-8))
    fs = unsmoothed_objective(sc.Y, rs.Z_hat, rs.V_hat, bp.lam1, bp.lam2)
    fi = unsmoothed_objective(sc.Y, ri.Z_hat, ri.V_hat, bp.lam1, bp.lam2)
    assert fi < fs


def test_apg_trace_eventually_monotone():
    sc = _scene((32, 0))
    res = apg_solve(sc.Y, BaselineParams(epsilon=1e-8, record_trace=True))
    tr = np.asarray(res.objective_trace[3:])
    assert np.all(tr[1:] <= tr[:-1] * (1 + 1e-6))


def test_apg_admm_objectives_agree():
    sc = _scene((33, 0))
    bp = BaselineParams(epsilon=1e-8, k_max=2000)
    ra = apg_solve(sc.Y, bp)
    rd = admm_solve(sc.Y, bp)
    fa = unsmoothed_objective(sc.Y, ra.Z_hat, ra.V_hat, bp.lam1, bp.lam2)
    fd = unsmoothed_objective(sc.Y, rd.Z_hat, rd.V_hat, bp.lam1, bp.lam2)
    assert abs(fa - fd) <= 0.01 * min(fa, fd)


def test_admm_primal_residual_small_at_termination():
    sc = _scene((34, 0))
    bp = BaselineParams(epsilon=1e-8, k_max=2000)
    res = admm_solve(sc.Y, bp)
    assert res.termination == "tolerance_reached"
    primal = np.linalg.norm(sc.Y - res.Z_hat - res.V_hat)
    assert primal <= bp.epsilon * np.linalg.norm(sc.Y)


def test_admm_primal_residual_trend():
    # replay the update rule and check the residual is non-increasing over the
    # last half of the run (within 1e-6 relative slack)
    sc = _scene((35, 0))
    rho, lam1, lam2 = 1.0, 2.0, 0.2
    z = np.zeros_like(sc.Y)
    v = np.zeros_like(sc.Y)
    w = np.zeros_like(sc.Y)
    residuals = []
    for _ in range(200):
        z = svd_shrink(sc.Y - v + w / rho, lam1 / rho)
        v = row_shrink(sc.Y - z + w / rho, lam2 / rho)
        r = sc.Y - z - v
        w = w + rho * r
        residuals.append(np.linalg.norm(r))
    tail = np.asarray(residuals[100:])
    assert np.all(tail[1:] <= tail[:-1] * (1 + 1e-6))
