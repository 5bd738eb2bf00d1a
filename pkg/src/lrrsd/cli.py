"""Command-line front-end: synth / solve / sweep / bench / spectrum.

Configs are JSON documents validated strictly (unknown keys are errors) and
can be patched with dotted-key overrides, e.g. -O template.snr_db=5.
Complex matrices are stored as paired CSVs (*_re.csv / *_im.csv, row-major,
%.17g formatting) so reloads are bit-exact.  Exit codes: 0 success,
1 config error, 2 solver error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from .arraysim import ArrayGeometry, SceneConfig, synthesize_scene
from .baselines import BaselineParams, admm_solve, apg_solve, svt_solve
from .bench import ExperimentSpec, SceneTemplate, run_monte_carlo
from .doa import detect_distorted, estimate_doas, music_spectrum
from .irls import IrlsParams, SolverError, irls_noiseless, irls_noisy

OUTPUT_DIR_ENV = "LRRSD_OUTPUT_DIR"

_SOLVERS = ("irls", "irls_noiseless", "svt", "apg", "admm")


class ConfigError(ValueError):
    """Bad or unknown configuration content."""


# ---------------------------------------------------------------------------
# config plumbing

_SCENE_KEYS = {
    "num_sensors",
    "element_spacing",
    "doas_deg",
    "num_snapshots",
    "snr_db",
    "num_distorted",
    "gain_range",
    "phase_range_deg",
    "seed",
}
_TEMPLATE_KEYS = _SCENE_KEYS - {"seed"}
_IRLS_KEYS = {"lam", "lam1", "lam2", "mu", "epsilon", "k_max"}
_BASELINE_KEYS = {
    "lam1",
    "lam2",
    "tau_svt",
    "step_svt",
    "penalty_admm",
    "step_apg",
    "epsilon",
    "k_max",
}
_GRID_KEYS = {"start_deg", "stop_deg", "step_deg"}

_SCHEMAS = {
    "synth": {k: None for k in _SCENE_KEYS},
    "solve": {
        "scene_dir": None,
        "algorithm": None,
        "num_sources": None,
        "h_factor": None,
        "irls": {k: None for k in _IRLS_KEYS},
        "baseline": {k: None for k in _BASELINE_KEYS},
        "grid": {k: None for k in _GRID_KEYS},
    },
    "sweep": {
        "template": {k: None for k in _TEMPLATE_KEYS},
        "sweep_var": None,
        "sweep_values": None,
        "algorithms": None,
        "num_trials": None,
        "base_seed": None,
        "success_threshold_deg": None,
        "h_factor": None,
        "grid_step_deg": None,
        "measure_time": None,
        "irls": {k: None for k in _IRLS_KEYS},
        "baseline": {k: None for k in _BASELINE_KEYS},
    },
    "bench": {
        "template": {k: None for k in _TEMPLATE_KEYS},
        "num_snapshots_list": None,
        "num_sensors_list": None,
        "algorithms": None,
        "num_trials": None,
        "base_seed": None,
        "irls": {k: None for k in _IRLS_KEYS},
        "baseline": {k: None for k in _BASELINE_KEYS},
    },
    "spectrum": {
        "scene_dir": None,
        "algorithm": None,
        "num_sources": None,
        "irls": {k: None for k in _IRLS_KEYS},
        "baseline": {k: None for k in _BASELINE_KEYS},
        "grid": {k: None for k in _GRID_KEYS},
    },
}


def _validate_keys(config, schema, path=""):
    if not isinstance(config, dict):
        return
    for key, value in config.items():
        dotted = f"{path}.{key}" if path else key
        if key not in schema:
            raise ConfigError(f"unknown config key: {dotted}")
        sub = schema[key]
        if isinstance(sub, dict):
            _validate_keys(value, sub, dotted)


def _parse_override(text: str) -> tuple[list[str], object]:
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _apply_override(config: dict, keys: list[str], value) -> None:
    node = config
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override path {'.'.join(keys)} crosses a scalar")
    node[keys[-1]] = value


def _load_config(path: str, overrides: list[str], schema_name: str) -> dict:
    try:
        with open(path) as fh:
            config = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise ConfigError(f"config root must be a JSON object in {path}")
    for text in overrides:
        keys, value = _parse_override(text)
        _apply_override(config, keys, value)
    _validate_keys(config, _SCHEMAS[schema_name])
    return config


def _snr_value(raw) -> float:
    if isinstance(raw, str):
        if raw.lower() in ("inf", "+inf", "infinity"):
            return math.inf
        raise ConfigError(f"snr_db must be a number or 'inf', got {raw!r}")
    return float(raw)


def _scene_config(doc: dict) -> SceneConfig:
    try:
        return SceneConfig(
            geometry=ArrayGeometry(
                num_sensors=int(doc["num_sensors"]),
                element_spacing=float(doc.get("element_spacing", 1.0)),
            ),
            doas_deg=tuple(doc["doas_deg"]),
            num_snapshots=int(doc["num_snapshots"]),
            snr_db=_snr_value(doc.get("snr_db", 0.0)),
            num_distorted=int(doc.get("num_distorted", 0)),
            gain_range=tuple(doc.get("gain_range", (0.0, 10.0))),
            phase_range_deg=tuple(doc.get("phase_range_deg", (-15.0, 15.0))),
            seed=tuple(doc["seed"]) if isinstance(doc.get("seed"), list) else doc.get("seed", 0),
        )
    except KeyError as exc:
        raise ConfigError(f"missing scene key: {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scene config: {exc}") from exc


def _template(doc: dict) -> SceneTemplate:
    try:
        kwargs = dict(doc)
        if "snr_db" in kwargs:
            kwargs["snr_db"] = _snr_value(kwargs["snr_db"])
        for key in ("doas_deg", "gain_range", "phase_range_deg"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return SceneTemplate(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad scene template: {exc}") from exc


def _irls_params(doc: dict, **defaults) -> IrlsParams:
    try:
        return IrlsParams(**{**defaults, **doc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad IRLS params: {exc}") from exc


def _baseline_params(doc: dict, **defaults) -> BaselineParams:
    try:
        return BaselineParams(**{**defaults, **doc})
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad baseline params: {exc}") from exc


# ---------------------------------------------------------------------------
# disk formats

def _write_complex(outdir: Path, stem: str, mat: np.ndarray) -> None:
    np.savetxt(outdir / f"{stem}_re.csv", mat.real, fmt="%.17g", delimiter=",")
    np.savetxt(outdir / f"{stem}_im.csv", mat.imag, fmt="%.17g", delimiter=",")


def _read_complex(indir: Path, stem: str) -> np.ndarray:
    re = np.loadtxt(indir / f"{stem}_re.csv", delimiter=",", ndmin=2)
    im = np.loadtxt(indir / f"{stem}_im.csv", delimiter=",", ndmin=2)
    return re + 1j * im


def _write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_scene_dir(path: str) -> tuple[np.ndarray, dict]:
    indir = Path(path)
    try:
        Y = _read_complex(indir, "Y")
        with open(indir / "scene.json") as fh:
            sidecar = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read scene bundle {path}: {exc}") from exc
    return Y, sidecar


def _run_solver(name: str, Y: np.ndarray, ip: IrlsParams, bp: BaselineParams):
    if name == "irls":
        return irls_noisy(Y, ip)
    if name == "irls_noiseless":
        return irls_noiseless(Y, ip)
    if name == "svt":
        return svt_solve(Y, bp)
    if name == "apg":
        return apg_solve(Y, bp)
    if name == "admm":
        return admm_solve(Y, bp)
    raise ConfigError(f"unknown algorithm {name!r}")


# ---------------------------------------------------------------------------
# subcommands

def _cmd_synth(args) -> int:
    config = _load_config(args.config, args.override, "synth")
    scene = synthesize_scene(_scene_config(config))
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_complex(outdir, "Y", scene.Y)
    cfg = scene.config
    sidecar = {
        "num_sensors": cfg.geometry.num_sensors,
        "element_spacing": cfg.geometry.element_spacing,
        "doas_deg": list(cfg.doas_deg),
        "num_snapshots": cfg.num_snapshots,
        "snr_db": "inf" if math.isinf(cfg.snr_db) else cfg.snr_db,
        "num_distorted": cfg.num_distorted,
        "gain_range": list(cfg.gain_range),
        "phase_range_deg": list(cfg.phase_range_deg),
        "seed": list(cfg.seed) if isinstance(cfg.seed, tuple) else cfg.seed,
        "gamma_re": scene.gamma.real.tolist(),
        "gamma_im": scene.gamma.imag.tolist(),
        "distorted_set": list(scene.distorted_set),
    }
    _write_json(outdir / "scene.json", sidecar)
    return 0


def _cmd_solve(args) -> int:
    config = _load_config(args.config, args.override, "solve")
    if "scene_dir" not in config:
        raise ConfigError("missing config key: scene_dir")
    Y, sidecar = _load_scene_dir(config["scene_dir"])
    algo = config.get("algorithm", "irls")
    if algo not in _SOLVERS:
        raise ConfigError(f"unknown algorithm {algo!r}")
    k = int(config.get("num_sources", len(sidecar.get("doas_deg", []))))
    if k < 1:
        raise ConfigError("num_sources must be >= 1 (set it in the config)")
    ip = _irls_params(config.get("irls", {}), record_trace=True)
    bp = _baseline_params(config.get("baseline", {}), record_trace=True)
    geo = ArrayGeometry(
        num_sensors=int(sidecar["num_sensors"]),
        element_spacing=float(sidecar.get("element_spacing", 1.0)),
    )
    grid = config.get("grid", {})

    result = _run_solver(algo, Y, ip, bp)
    spectrum = music_spectrum(
        result.Z_hat,
        k,
        geo,
        start_deg=float(grid.get("start_deg", -90.0)),
        stop_deg=float(grid.get("stop_deg", 90.0)),
        step_deg=float(grid.get("step_deg", 0.05)),
    )
    doas = estimate_doas(spectrum, k)
    detection = detect_distorted(result.V_hat, float(config.get("h_factor", 10.0)))

    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_complex(outdir, "Z_hat", result.Z_hat)
    _write_complex(outdir, "V_hat", result.V_hat)
    _write_json(
        outdir / "doa_estimates.json",
        {"algorithm": algo, "doas_deg": doas},
    )
    _write_json(
        outdir / "detection.json",
        {
            "m_fail": detection.m_fail,
            "distorted_indices": list(detection.distorted_indices),
            "row_norms": detection.row_norms.tolist(),
            "threshold_used": detection.threshold_used,
        },
    )
    with open(outdir / "trace.csv", "w") as fh:
        fh.write("objective\n")
        for value in result.objective_trace:
            fh.write(f"{value!r}\n")
    _write_json(
        outdir / "solve_meta.json",
        {
            "algorithm": algo,
            "iterations": result.iterations,
            "termination": result.termination,
            "wall_time_s": result.wall_time_s,
        },
    )
    return 0


def _sweep_spec(config: dict) -> ExperimentSpec:
    try:
        return ExperimentSpec(
            template=_template(config.get("template", {})),
            sweep_var=config["sweep_var"],
            sweep_values=tuple(config["sweep_values"]),
            algorithms=tuple(config.get("algorithms", ("irls",))),
            num_trials=int(config["num_trials"]),
            base_seed=int(config["base_seed"]),
            success_threshold_deg=float(config.get("success_threshold_deg", 0.5)),
            h_factor=float(config.get("h_factor", 10.0)),
            grid_step_deg=float(config.get("grid_step_deg", 0.05)),
            measure_time=bool(config.get("measure_time", False)),
            irls_params=_irls_params(config.get("irls", {}), epsilon=1e-8),
            baseline_params=_baseline_params(config.get("baseline", {})),
        )
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc.args[0]}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def _cmd_sweep(args) -> int:
    config = _load_config(args.config, args.override, "sweep")
    spec = _sweep_spec(config)
    table = run_monte_carlo(spec, workers=args.workers)
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "metrics.csv").write_text(table.to_csv())
    return 0


def _cmd_bench(args) -> int:
    config = _load_config(args.config, args.override, "bench")
    try:
        template = _template(config.get("template", {}))
        t_list = [int(t) for t in config["num_snapshots_list"]]
        m_list = [int(m) for m in config.get("num_sensors_list", [template.num_sensors])]
        algorithms = tuple(config.get("algorithms", ("irls", "svt", "apg", "admm")))
        num_trials = int(config.get("num_trials", 5))
        base_seed = int(config.get("base_seed", 0))
    except KeyError as exc:
        raise ConfigError(f"missing config key: {exc.args[0]}") from exc
    ip = _irls_params(config.get("irls", {}), epsilon=1e-8)
    bp = _baseline_params(config.get("baseline", {}))

    lines = ["num_sensors,num_snapshots,algorithm,mean_time_s,mean_iters,trials"]
    from dataclasses import replace

    for m in m_list:
        for t in t_list:
            tmpl = replace(template, num_sensors=m, num_snapshots=t)
            scenes = [
                synthesize_scene(tmpl.to_config(seed=(base_seed, q)))
                for q in range(num_trials)
            ]
            for algo in algorithms:
                times, iters = [], []
                for scene in scenes:
                    t0 = time.perf_counter()
                    res = _run_solver(algo, scene.Y, ip, bp)
                    times.append(time.perf_counter() - t0)
                    iters.append(res.iterations)
                lines.append(
                    f"{m},{t},{algo},{(sum(times) / len(times))!r},"
                    f"{(sum(iters) / len(iters))!r},{num_trials}"
                )
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "timing.csv").write_text("\n".join(lines) + "\n")
    return 0


def _cmd_spectrum(args) -> int:
    config = _load_config(args.config, args.override, "spectrum")
    if "scene_dir" not in config:
        raise ConfigError("missing config key: scene_dir")
    Y, sidecar = _load_scene_dir(config["scene_dir"])
    algo = config.get("algorithm", "irls")
    k = int(config.get("num_sources", len(sidecar.get("doas_deg", []))))
    if k < 1:
        raise ConfigError("num_sources must be >= 1 (set it in the config)")
    geo = ArrayGeometry(
        num_sensors=int(sidecar["num_sensors"]),
        element_spacing=float(sidecar.get("element_spacing", 1.0)),
    )
    if algo == "raw":
        z_hat = Y
    else:
        if algo not in _SOLVERS:
            raise ConfigError(f"unknown algorithm {algo!r}")
        ip = _irls_params(config.get("irls", {}))
        bp = _baseline_params(config.get("baseline", {}))
        z_hat = _run_solver(algo, Y, ip, bp).Z_hat
    grid = config.get("grid", {})
    spectrum = music_spectrum(
        z_hat,
        k,
        geo,
        start_deg=float(grid.get("start_deg", -90.0)),
        stop_deg=float(grid.get("stop_deg", 90.0)),
        step_deg=float(grid.get("step_deg", 0.05)),
    )
    outdir = Path(args.output_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "spectrum.csv", "w") as fh:
        fh.write("angle_deg,value\n")
        for angle, value in zip(spectrum.angles_deg, spectrum.values):
            fh.write(f"{float(angle)!r},{float(value)!r}\n")
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lrrsd",
        description="Low-rank + row-sparse decomposition benchmark harness",
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)
    default_out = os.environ.get(OUTPUT_DIR_ENV, ".")
    for name, func in (
        ("synth", _cmd_synth),
        ("solve", _cmd_solve),
        ("sweep", _cmd_sweep),
        ("bench", _cmd_bench),
        ("spectrum", _cmd_spectrum),
    ):
        p = sub.add_parser(name)
        p.add_argument("-c", "--config", required=True, help="JSON config path")
        p.add_argument(
            "-o",
            "--output-dir",
            default=default_out,
            help=f"output directory (default ${OUTPUT_DIR_ENV} or cwd)",
        )
        p.add_argument(
            "-O",
            "--override",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="dotted-key config override, value parsed as JSON",
        )
        if name == "sweep":
            p.add_argument("--workers", type=int, default=1)
        p.set_defaults(func=func)
    return parser


def run_cli(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run_cli())
