"""Deterministic Monte Carlo experiments and metric aggregation.

Each trial derives its RNG stream from (base_seed, trial_index), so results
are identical regardless of worker count or execution order.  Metrics follow
the standard definitions: RMSE over sorted DOA pairings, resolution
probability (all per-source errors within a threshold), and detection rate
(exact recovery of the distorted index set).
"""

from __future__ import annotations

import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .arraysim import ArrayGeometry, SceneConfig, synthesize_scene
from .baselines import BaselineParams, admm_solve, apg_solve, svt_solve
from .doa import detect_distorted, estimate_doas, music_spectrum
from .irls import IrlsParams, SolverError, irls_noisy

SWEEP_VARS = (
    "snr_db",
    "num_snapshots",
    "separation_deg",
    "mu",
    "lambda1",
    "lambda2",
    "num_sensors",
)
ALGORITHMS = ("irls", "svt", "apg", "admm", "music_raw")

CSV_HEADER = (
    "sweep_var,sweep_value,algorithm,rmse_deg,res_prob,detec_rate,"
    "mean_time_s,mean_iters,errors,trials"
)


@dataclass(frozen=True)
class SceneTemplate:
    """SceneConfig minus the seed; the harness fills seeds per trial."""

    num_sensors: int = 10
    element_spacing: float = 1.0
    doas_deg: tuple[float, ...] = (-10.0, 10.0)
    num_snapshots: int = 100
    snr_db: float = 0.0
    num_distorted: int = 3
    gain_range: tuple[float, float] = (0.0, 10.0)
    phase_range_deg: tuple[float, float] = (-15.0, 15.0)

    def to_config(self, seed) -> SceneConfig:
        return SceneConfig(
            geometry=ArrayGeometry(self.num_sensors, self.element_spacing),
            doas_deg=tuple(self.doas_deg),
            num_snapshots=self.num_snapshots,
            snr_db=self.snr_db,
            num_distorted=self.num_distorted,
            gain_range=tuple(self.gain_range),
            phase_range_deg=tuple(self.phase_range_deg),
            seed=seed,
        )


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep: a scene template, a swept variable, algorithms, trials."""

    template: SceneTemplate
    sweep_var: str
    sweep_values: tuple
    algorithms: tuple[str, ...]
    num_trials: int
    base_seed: int
    success_threshold_deg: float = 0.5
    h_factor: float = 10.0
    grid_step_deg: float = 0.05
    measure_time: bool = False
    irls_params: IrlsParams = field(
        default_factory=lambda: IrlsParams(epsilon=1e-8)
    )
    baseline_params: BaselineParams = field(default_factory=BaselineParams)

    def __post_init__(self):
        if self.sweep_var not in SWEEP_VARS:
            raise ValueError(f"unknown sweep variable {self.sweep_var!r}")
        if not self.sweep_values:
            raise ValueError("sweep_values must be non-empty")
        if self.num_trials < 1:
            raise ValueError("num_trials must be >= 1")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ValueError(f"unknown algorithm {a!r}")


@dataclass
class MetricsRow:
    sweep_var: str
    sweep_value: float
    algorithm: str
    rmse_deg: float
    res_prob: float
    detec_rate: float
    mean_time_s: float
    mean_iters: float
    errors: int
    trials: int


@dataclass
class MetricsTable:
    rows: list[MetricsRow]

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.rows:
            buf.write(
                f"{r.sweep_var},{r.sweep_value!r},{r.algorithm},"
                f"{r.rmse_deg!r},{r.res_prob!r},{r.detec_rate!r},"
                f"{r.mean_time_s!r},{r.mean_iters!r},{r.errors},{r.trials}\n"
            )
        return buf.getvalue()


def rmse(estimates: list[list[float]], truth: list[float]) -> float:
    """sqrt(mean squared error) over all trials and sources, in degrees."""
    k = len(truth)
    total = 0.0
    count = 0
    for est in estimates:
        if len(est) != k:
            raise ValueError(f"estimate has {len(est)} entries, expected {k}")
        for e, t in zip(est, truth):
            total += (e - t) ** 2
            count += 1
    return math.sqrt(total / count) if count else 0.0


def resolution_success(
    estimate: list[float], truth: list[float], threshold_deg: float
) -> bool:
    """True iff every per-source absolute error is within the threshold."""
    if len(estimate) != len(truth):
        raise ValueError("estimate/truth length mismatch")
    return max(abs(e - t) for e, t in zip(estimate, truth)) <= threshold_deg


def detection_success(result, truth_set) -> bool:
    """True iff the detected index set equals the true distorted set."""
    return set(result.distorted_indices) == set(truth_set)


def _apply_sweep(spec: ExperimentSpec, value):
    """Return (scene template, irls params, baseline params) for one value."""
    tmpl, ip, bp = spec.template, spec.irls_params, spec.baseline_params
    var = spec.sweep_var
    if var == "snr_db":
        tmpl = replace(tmpl, snr_db=float(value))
    elif var == "num_snapshots":
        tmpl = replace(tmpl, num_snapshots=int(value))
    elif var == "num_sensors":
        tmpl = replace(tmpl, num_sensors=int(value))
    elif var == "separation_deg":
        tmpl = replace(tmpl, doas_deg=(0.0, float(value)))
    elif var == "mu":
        ip = replace(ip, mu=float(value))
    elif var == "lambda1":
        ip = replace(ip, lam1=float(value))
        bp = replace(bp, lam1=float(value))
    elif var == "lambda2":
        ip = replace(ip, lam2=float(value))
        bp = replace(bp, lam2=float(value))
    return tmpl, ip, bp


@dataclass
class _TrialOutcome:
    estimate: list[float] | None  # None on solver error
    res_ok: bool
    det_ok: bool | None  # None when detection is not applicable
    time_s: float
    iters: int


def _run_trial(spec: ExperimentSpec, value, trial_index: int) -> list[_TrialOutcome]:
    tmpl, ip, bp = _apply_sweep(spec, value)
    config = tmpl.to_config(seed=(spec.base_seed, trial_index))
    scene = synthesize_scene(config)
    truth = sorted(config.doas_deg)
    k = len(truth)
    geo = config.geometry
    outcomes = []
    for algo in spec.algorithms:
        try:
            t0 = time.perf_counter()
            if algo == "irls":
                res = irls_noisy(scene.Y, ip)
            elif algo == "svt":
                res = svt_solve(scene.Y, bp)
            elif algo == "apg":
                res = apg_solve(scene.Y, bp)
            elif algo == "admm":
                res = admm_solve(scene.Y, bp)
            else:  # music_raw: MUSIC directly on the observations
                res = None
            elapsed = time.perf_counter() - t0 if spec.measure_time else 0.0
            z_hat = scene.Y if res is None else res.Z_hat
            spectrum = music_spectrum(z_hat, k, geo, step_deg=spec.grid_step_deg)
            estimate = estimate_doas(spectrum, k)
            res_ok = resolution_success(estimate, truth, spec.success_threshold_deg)
            if res is None:
                det_ok = None
            else:
                det = detect_distorted(res.V_hat, spec.h_factor)
                det_ok = detection_success(det, scene.distorted_set)
            outcomes.append(
                _TrialOutcome(
                    estimate=estimate,
                    res_ok=res_ok,
                    det_ok=det_ok,
                    time_s=elapsed,
                    iters=0 if res is None else res.iterations,
                )
            )
        except SolverError:
            outcomes.append(_TrialOutcome(None, False, None, 0.0, 0))
    return outcomes


def _run_trial_star(args):
    return _run_trial(*args)


def run_monte_carlo(spec: ExperimentSpec, workers: int = 1) -> MetricsTable:
    """Run the full sweep; output is identical for any worker count.

    Trials that raise SolverError are excluded from the metric means and
    counted in the errors column.
    """
    rows: list[MetricsRow] = []
    for value in spec.sweep_values:
        tasks = [(spec, value, q) for q in range(spec.num_trials)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                all_outcomes = list(pool.map(_run_trial_star, tasks, chunksize=8))
        else:
            all_outcomes = [_run_trial(*t) for t in tasks]

        tmpl, _, _ = _apply_sweep(spec, value)
        truth = sorted(tmpl.doas_deg)
        for j, algo in enumerate(spec.algorithms):
            per_algo = [out[j] for out in all_outcomes]
            ok = [o for o in per_algo if o.estimate is not None]
            n_err = len(per_algo) - len(ok)
            estimates = [o.estimate for o in ok]
            det_flags = [o.det_ok for o in ok if o.det_ok is not None]
            rows.append(
                MetricsRow(
                    sweep_var=spec.sweep_var,
                    sweep_value=float(value),
                    algorithm=algo,
                    rmse_deg=rmse(estimates, truth) if estimates else math.nan,
                    res_prob=(
                        sum(o.res_ok for o in ok) / len(ok) if ok else math.nan
                    ),
                    detec_rate=(
                        sum(det_flags) / len(det_flags) if det_flags else math.nan
                    ),
                    mean_time_s=(
                        sum(o.time_s for o in ok) / len(ok) if ok else math.nan
                    ),
                    mean_iters=(
                        sum(o.iters for o in ok) / len(ok) if ok else math.nan
                    ),
                    errors=n_err,
                    trials=spec.num_trials,
                )
            )
    return MetricsTable(rows=rows)
