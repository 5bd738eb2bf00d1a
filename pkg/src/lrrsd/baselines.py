"""Baseline solvers over the same (Y, lam1, lam2) interface as IRLS.

All three baselines share the two proximal maps:

  svd_shrink(C, kappa): argmin kappa*||X||_* + 0.5*||X - C||_F^2
  row_shrink(C, kappa): argmin kappa*||X||_{2,1} + 0.5*||X - C||_F^2

SVT runs dual ascent on a slightly perturbed equality-constrained problem,
APG is accelerated proximal gradient with a monotone restart, and ADMM
alternates the two prox steps with a scaled dual update.  Each records the
unsmoothed objective 0.5*||Y-Z-V||_F^2 + lam1*||Z||_* + lam2*||V||_{2,1} so
outputs are directly comparable across solvers.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .irls import (
    K_MAX_REACHED,
    TOLERANCE_REACHED,
    _STAGNATION_RTOL,
    SolveResult,
    SolverError,
)


@dataclass(frozen=True)
class BaselineParams:
    """Shared tuning for SVT/APG/ADMM.

    tau_svt and step_apg default to standard heuristics when None:
    tau_svt = 5*sqrt(M*T), step_apg = 1/L with L = 2 the Lipschitz constant
    of the fidelity gradient.  penalty_admm is the augmented Lagrangian
    parameter (kept distinct from the IRLS smoothing parameter).
    """

    lam1: float = 2.0
    lam2: float = 0.2
    tau_svt: float | None = None
    step_svt: float = 0.9
    penalty_admm: float = 1.0
    step_apg: float | None = None
    epsilon: float = 1e-8
    k_max: int = 1000
    record_trace: bool = False

    def __post_init__(self):
        for name in ("lam1", "lam2", "step_svt", "penalty_admm", "epsilon"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.tau_svt is not None and self.tau_svt <= 0:
            raise ValueError("tau_svt must be positive")
        if self.step_apg is not None and self.step_apg <= 0:
            raise ValueError("step_apg must be positive")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


def svd_shrink(C: np.ndarray, kappa: float) -> np.ndarray:
    """Soft-threshold the singular values of C by kappa."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    u, s, vh = np.linalg.svd(C, full_matrices=False)
    s = np.maximum(s - kappa, 0.0)
    return (u * s) @ vh


def row_shrink(C: np.ndarray, kappa: float) -> np.ndarray:
    """Group-shrink each row: row * max(0, 1 - kappa/||row||_2)."""
    if kappa <= 0:
        raise ValueError("kappa must be positive")
    norms = np.linalg.norm(C, axis=1)
    scale = np.zeros_like(norms)
    nz = norms > 0
    scale[nz] = np.maximum(0.0, 1.0 - kappa / norms[nz])
    return C * scale[:, None]


def unsmoothed_objective(
    Y: np.ndarray, Z: np.ndarray, V: np.ndarray, lam1: float, lam2: float
) -> float:
    """0.5*||Y-Z-V||_F^2 + lam1*||Z||_* + lam2*||V||_{2,1}."""
    fid = 0.5 * float(np.linalg.norm(Y - Z - V, "fro") ** 2)
    nuc = float(np.sum(np.linalg.svd(Z, compute_uv=False)))
    l21 = float(np.sum(np.linalg.norm(V, axis=1)))
    return fid + lam1 * nuc + lam2 * l21


def _rel_change(f: float, f_prev: float) -> float:
    diff = abs(f - f_prev)
    if diff == 0.0:
        return 0.0
    if f == 0.0:
        return math.inf
    return diff / abs(f)


def _finish(
    Y, Z, V, trace, k, t0, termination, record_trace
) -> SolveResult:
    if not record_trace:
        trace = [trace[0], trace[-1]]
    return SolveResult(
        Z_hat=Z,
        V_hat=V,
        objective_trace=trace,
        iterations=k,
        wall_time_s=time.perf_counter() - t0,
        termination=termination,
    )


def svt_solve(Y: np.ndarray, params: BaselineParams) -> SolveResult:
    """Singular value thresholding on the perturbed constrained problem.

    Dual ascent: Z = svd_shrink(W, tau*lam1), V = row_shrink(W, tau*lam2),
    W <- W + step*(Y - Z - V).
    """
    m, t = Y.shape
    tau = params.tau_svt if params.tau_svt is not None else 5.0 * math.sqrt(m * t)
    t0 = time.perf_counter()
    W = np.zeros_like(Y)
    Z = np.zeros_like(Y)
    V = np.zeros_like(Y)
    f_prev = unsmoothed_objective(Y, Z, V, params.lam1, params.lam2)
    f_init = max(f_prev, 1.0)
    trace = [f_prev]
    termination = K_MAX_REACHED
    k = 0
    for k in range(1, params.k_max + 1):
        Z = svd_shrink(W, tau * params.lam1)
        V = row_shrink(W, tau * params.lam2)
        W = W + params.step_svt * (Y - Z - V)
        f = unsmoothed_objective(Y, Z, V, params.lam1, params.lam2)
        trace.append(f)
        if f > 1e6 * f_init:
            raise SolverError("SVT diverged: objective exceeded 1e6x initial")
        rel = _rel_change(f, f_prev)
        if rel <= params.epsilon or rel <= _STAGNATION_RTOL:
            termination = TOLERANCE_REACHED
            break
        f_prev = f
    return _finish(Y, Z, V, trace, k, t0, termination, params.record_trace)


def apg_solve(Y: np.ndarray, params: BaselineParams) -> SolveResult:
    """Accelerated proximal gradient with a monotone restart.

    Prox steps on the extrapolated point; if the objective would increase, the
    momentum is discarded and a plain proximal gradient step is taken instead,
    halving the step size if even that fails to decrease the objective.
    """
    lam1, lam2 = params.lam1, params.lam2
    # Fidelity gradient Lipschitz constant is 2 for the stacked (Z, V) variable.
    step0 = params.step_apg if params.step_apg is not None else 0.5
    t0 = time.perf_counter()
    Z = np.zeros_like(Y)
    V = np.zeros_like(Y)
    Zm, Vm = Z, V
    t_mom = 1.0
    f_prev = unsmoothed_objective(Y, Z, V, lam1, lam2)
    trace = [f_prev]
    termination = K_MAX_REACHED
    k = 0
    for k in range(1, params.k_max + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_mom * t_mom))
        beta = (t_mom - 1.0) / t_next
        Zb = Z + beta * (Z - Zm)
        Vb = V + beta * (V - Vm)
        R = Y - Zb - Vb
        Zn = svd_shrink(Zb + step0 * R, step0 * lam1)
        Vn = row_shrink(Vb + step0 * R, step0 * lam2)
        f = unsmoothed_objective(Y, Zn, Vn, lam1, lam2)
        if f > f_prev:
            # restart: plain step from the current iterate, backtracking on step
            step = step0
            for _ in range(50):
                R = Y - Z - V
                Zn = svd_shrink(Z + step * R, step * lam1)
                Vn = row_shrink(V + step * R, step * lam2)
                f = unsmoothed_objective(Y, Zn, Vn, lam1, lam2)
                if f <= f_prev:
                    break
                step *= 0.5
            else:
                raise SolverError("APG step-size fallback exhausted")
            t_next = 1.0
        Zm, Vm = Z, V
        Z, V = Zn, Vn
        t_mom = t_next
        trace.append(f)
        rel = _rel_change(f, f_prev)
        if rel <= params.epsilon or rel <= _STAGNATION_RTOL:
            termination = TOLERANCE_REACHED
            break
        f_prev = f
    return _finish(Y, Z, V, trace, k, t0, termination, params.record_trace)


def admm_solve(Y: np.ndarray, params: BaselineParams) -> SolveResult:
    """ADMM on min lam1*||Z||_* + lam2*||V||_{2,1} s.t. Y = Z + V.

    Stops when the primal residual ||Y - Z - V||_F and the dual residual
    rho * ||V_k - V_{k-1}||_F both fall below epsilon * ||Y||_F.  The dual
    check is needed because the V prox makes the primal residual small long
    before the iterates settle.
    """
    lam1, lam2, rho = params.lam1, params.lam2, params.penalty_admm
    t0 = time.perf_counter()
    Z = np.zeros_like(Y)
    V = np.zeros_like(Y)
    W = np.zeros_like(Y)
    y_norm = float(np.linalg.norm(Y, "fro"))
    trace = [unsmoothed_objective(Y, Z, V, lam1, lam2)]
    termination = K_MAX_REACHED
    k = 0
    for k in range(1, params.k_max + 1):
        Z = svd_shrink(Y - V + W / rho, lam1 / rho)
        V_prev = V
        V = row_shrink(Y - Z + W / rho, lam2 / rho)
        R = Y - Z - V
        W = W + rho * R
        trace.append(unsmoothed_objective(Y, Z, V, lam1, lam2))
        primal = float(np.linalg.norm(R, "fro"))
        dual = rho * float(np.linalg.norm(V - V_prev, "fro"))
        if primal <= params.epsilon * y_norm and dual <= params.epsilon * y_norm:
            termination = TOLERANCE_REACHED
            break
    return _finish(Y, Z, V, trace, k, t0, termination, params.record_trace)
