import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from lrrsd import ArrayGeometry, SceneConfig, synthesize_scene
from lrrsd.cli import OUTPUT_DIR_ENV, run_cli


def _write_config(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


SCENE_DOC = {
    "num_sensors": 10,
    "doas_deg": [-10.0, 10.0],
    "num_snapshots": 50,
    "snr_db": 0.0,
    "num_distorted": 3,
    "seed": [9, 0],
}


def _synth(tmp_path, doc=None):
    cfg = _write_config(tmp_path / "scene_cfg.json", doc or SCENE_DOC)
    outdir = tmp_path / "scene"
    assert run_cli(["synth", "-c", cfg, "-o", str(outdir)]) == 0
    return outdir


def test_synth_round_trip_bit_exact(tmp_path):
    outdir = _synth(tmp_path)
    re = np.loadtxt(outdir / "Y_re.csv", delimiter=",")
    im = np.loadtxt(outdir / "Y_im.csv", delimiter=",")
    scene = synthesize_scene(
        SceneConfig(ArrayGeometry(10), (-10.0, 10.0), 50, 0.0, 3, seed=(9, 0))
    )
    npt.assert_array_equal(re + 1j * im, scene.Y)
    sidecar = json.loads((outdir / "scene.json").read_text())
    assert sidecar["distorted_set"] == list(scene.distorted_set)
    assert sidecar["seed"] == [9, 0]


def test_synth_noiseless_sentinel(tmp_path):
    doc = dict(SCENE_DOC, snr_db="inf", seed=3)
    outdir = _synth(tmp_path, doc)
    sidecar = json.loads((outdir / "scene.json").read_text())
    assert sidecar["snr_db"] == "inf"


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfg = _write_config(tmp_path / "bad.json", dict(SCENE_DOC, typo_key=1))
    assert run_cli(["synth", "-c", cfg, "-o", str(tmp_path / "x")]) == 1
    assert "typo_key" in capsys.readouterr().err


def test_nested_unknown_key_named_by_dotted_path(tmp_path, capsys):
    doc = {
        "scene_dir": "unused",
        "irls": {"lam1": 2.0, "bogus": 1},
    }
    cfg = _write_config(tmp_path / "bad.json", doc)
    assert run_cli(["solve", "-c", cfg, "-o", str(tmp_path / "x")]) == 1
    assert "irls.bogus" in capsys.readouterr().err


def test_solve_outputs(tmp_path):
    scene_dir = _synth(tmp_path)
    doc = {
        "scene_dir": str(scene_dir),
        "algorithm": "irls",
        "irls": {"epsilon": 1e-8},
    }
    cfg = _write_config(tmp_path / "solve_cfg.json", doc)
    outdir = tmp_path / "solved"
    assert run_cli(["solve", "-c", cfg, "-o", str(outdir)]) == 0
    for name in (
        "Z_hat_re.csv",
        "Z_hat_im.csv",
        "V_hat_re.csv",
        "V_hat_im.csv",
        "doa_estimates.json",
        "detection.json",
        "trace.csv",
        "solve_meta.json",
    ):
        assert (outdir / name).exists()
    doas = json.loads((outdir / "doa_estimates.json").read_text())["doas_deg"]
    assert len(doas) == 2 and doas == sorted(doas)
    det = json.loads((outdir / "detection.json").read_text())
    assert len(det["distorted_indices"]) == det["m_fail"]
    meta = json.loads((outdir / "solve_meta.json").read_text())
    assert meta["termination"] in ("tolerance_reached", "k_max_reached")


def test_solve_trace_non_increasing(tmp_path):
    doc = dict(SCENE_DOC, snr_db="inf", num_distorted=4, seed=[3, 0])
    scene_dir = _synth(tmp_path, doc)
    cfg = _write_config(
        tmp_path / "solve_cfg.json",
        {
            "scene_dir": str(scene_dir),
            "algorithm": "irls_noiseless",
            "irls": {"epsilon": 1e-8, "k_max": 100},
        },
    )
    outdir = tmp_path / "solved"
    assert run_cli(["solve", "-c", cfg, "-o", str(outdir)]) == 0
    lines = (outdir / "trace.csv").read_text().splitlines()
    assert lines[0] == "objective"
    trace = np.array([float(x) for x in lines[1:]])
    assert len(trace) == 101
    assert np.all(trace[1:] <= trace[:-1] * (1 + 1e-9))


SWEEP_DOC = {
    "template": {
        "num_sensors": 10,
        "doas_deg": [-10.0, 10.0],
        "num_snapshots": 50,
        "num_distorted": 3,
    },
    "sweep_var": "snr_db",
    "sweep_values": [0.0, 10.0],
    "algorithms": ["irls", "music_raw"],
    "num_trials": 2,
    "base_seed": 5,
}


def test_sweep_deterministic_bytes(tmp_path):
    cfg = _write_config(tmp_path / "sweep.json", SWEEP_DOC)
    out1, out2 = tmp_path / "s1", tmp_path / "s2"
    assert run_cli(["sweep", "-c", cfg, "-o", str(out1)]) == 0
    assert run_cli(["sweep", "-c", cfg, "-o", str(out2)]) == 0
    assert (out1 / "metrics.csv").read_bytes() == (out2 / "metrics.csv").read_bytes()


def test_sweep_override(tmp_path):
    cfg = _write_config(tmp_path / "sweep.json", SWEEP_DOC)
    outdir = tmp_path / "s"
    code = run_cli(
        ["sweep", "-c", cfg, "-o", str(outdir), "-O", "sweep_values=[5.0]"]
    )
    assert code == 0
    lines = (outdir / "metrics.csv").read_text().splitlines()
    assert len(lines) == 3  # header + 1 sweep value x 2 algorithms
    assert all(line.split(",")[1] == "5.0" for line in lines[1:])


def test_bench_timing_csv(tmp_path):
    doc = {
        "template": {"num_sensors": 8, "doas_deg": [-10.0, 10.0], "num_distorted": 2},
        "num_snapshots_list": [40],
        "algorithms": ["irls", "admm"],
        "num_trials": 2,
        "base_seed": 1,
    }
    cfg = _write_config(tmp_path / "bench.json", doc)
    outdir = tmp_path / "b"
    assert run_cli(["bench", "-c", cfg, "-o", str(outdir)]) == 0
    lines = (outdir / "timing.csv").read_text().splitlines()
    assert lines[0] == "num_sensors,num_snapshots,algorithm,mean_time_s,mean_iters,trials"
    assert len(lines) == 3
    assert lines[1].startswith("8,40,irls,")


def test_spectrum_csv(tmp_path):
    scene_dir = _synth(tmp_path)
    cfg = _write_config(
        tmp_path / "spec.json",
        {"scene_dir": str(scene_dir), "algorithm": "raw", "grid": {"step_deg": 1.0}},
    )
    outdir = tmp_path / "sp"
    assert run_cli(["spectrum", "-c", cfg, "-o", str(outdir)]) == 0
    lines = (outdir / "spectrum.csv").read_text().splitlines()
    assert lines[0] == "angle_deg,value"
    assert len(lines) == 1 + 179  # exclusive endpoints at 1 degree steps
    values = [float(line.split(",")[1]) for line in lines[1:]]
    assert all(v > 0 for v in values)


def test_output_dir_env_default(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_DIR_ENV, str(tmp_path / "envout"))
    cfg = _write_config(tmp_path / "scene_cfg.json", SCENE_DOC)
    assert run_cli(["synth", "-c", cfg]) == 0
    assert (tmp_path / "envout" / "Y_re.csv").exists()


def test_missing_config_file(tmp_path):
    assert run_cli(["synth", "-c", str(tmp_path / "nope.json"), "-o", str(tmp_path)]) == 1


def test_solve_unknown_algorithm(tmp_path):
    scene_dir = _synth(tmp_path)
    cfg = _write_config(
        tmp_path / "solve.json", {"scene_dir": str(scene_dir), "algorithm": "simplex"}
    )
    assert run_cli(["solve", "-c", cfg, "-o", str(tmp_path / "x")]) == 1
