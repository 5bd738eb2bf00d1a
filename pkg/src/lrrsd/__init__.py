"""Low-rank and row-sparse decomposition (LR2SD) toolkit.

Joint DOA estimation and distorted-sensor detection for linear arrays:
IRLS solvers for the noiseless and noisy decomposition problems, SVT/APG/ADMM
baselines, MUSIC spectrum search, a gap-based detector for distorted sensors,
and a deterministic Monte Carlo benchmark harness.
"""

from .arraysim import (
    ArrayGeometry,
    Scene,
    SceneConfig,
    steering_matrix,
    steering_vector,
    synthesize_scene,
)
from .baselines import (
    BaselineParams,
    admm_solve,
    apg_solve,
    row_shrink,
    svd_shrink,
    svt_solve,
    unsmoothed_objective,
)
from .doa import (
    DetectionResult,
    SpectrumGrid,
    detect_distorted,
    estimate_doas,
    music_spectrum,
)
from .irls import (
    IrlsParams,
    SolveResult,
    SolverError,
    irls_noiseless,
    irls_noisy,
    objective_noiseless,
    objective_noisy,
    weight_p,
    weight_q,
)
from .bench import (
    ExperimentSpec,
    MetricsRow,
    MetricsTable,
    SceneTemplate,
    detection_success,
    resolution_success,
    rmse,
    run_monte_carlo,
)

__all__ = [
    "ArrayGeometry",
    "BaselineParams",
    "DetectionResult",
    "ExperimentSpec",
    "IrlsParams",
    "MetricsRow",
    "MetricsTable",
    "Scene",
    "SceneConfig",
    "SceneTemplate",
    "SolveResult",
    "SolverError",
    "SpectrumGrid",
    "admm_solve",
    "apg_solve",
    "detect_distorted",
    "detection_success",
    "estimate_doas",
    "irls_noiseless",
    "irls_noisy",
    "music_spectrum",
    "objective_noiseless",
    "objective_noisy",
    "resolution_success",
    "rmse",
    "row_shrink",
    "run_monte_carlo",
    "steering_matrix",
    "steering_vector",
    "svd_shrink",
    "svt_solve",
    "synthesize_scene",
    "unsmoothed_objective",
    "weight_p",
    "weight_q",
]
