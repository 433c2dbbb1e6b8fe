import json
import os

import numpy as np
import pytest
from click.testing import CliRunner

from authalic.cli import main
from authalic.mesh import load_mesh, make_icosphere, save_mesh


@pytest.fixture(scope="module")
def mesh_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "ellipsoid.off"
    surf = make_icosphere(2, (1.0, 0.8, 0.6))
    save_mesh(surf.vertices, surf.faces, path)
    return str(path)


@pytest.fixture(scope="module")
def sphere_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("meshes") / "sphere.obj"
    surf = make_icosphere(2)
    save_mesh(surf.vertices, surf.faces, path)
    return str(path)


def run(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def strip_elapsed(csv_text):
    return "\n".join(",".join(line.split(",")[:-1]) for line in csv_text.splitlines())


def test_param_outputs(tmp_path, mesh_file):
    out = tmp_path / "run"
    result = run("param", mesh_file, "--max-iters", "20", "--out", str(out))
    assert result.exit_code == 0, result.output
    assert (out / "sphere.obj").exists()
    assert (out / "convergence.csv").exists()
    assert (out / "manifest.json").exists()
    assert (out / "vertex_ids.txt").exists()
    assert "SD/Mean" in result.output and "folds" in result.output

    manifest = json.loads((out / "manifest.json").read_text())
    warmup = manifest["params"]["fpi_iterations_run"]
    lines = (out / "convergence.csv").read_text().strip().splitlines()
    assert lines[0] == "iter,E_S,E_A,E,sd_over_mean,grad_norm,alpha,folds,elapsed_s"
    assert len(lines) - 1 == 20 + warmup

    sphere = load_mesh(out / "sphere.obj")
    assert np.abs(np.linalg.norm(sphere.vertices, axis=1) - 1.0).max() <= 1e-12


def test_param_bounded_strategy(tmp_path, mesh_file):
    out = tmp_path / "run"
    result = run("param", mesh_file, "--max-iters", "3", "--fpi-iters", "2",
                 "--ls", "bounded", "--out", str(out))
    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["params"]["ls"] == "bounded"


def test_param_deterministic_rerun(tmp_path, mesh_file):
    a, b = tmp_path / "a", tmp_path / "b"
    for out in (a, b):
        result = run("param", mesh_file, "--max-iters", "10", "--seed", "7",
                     "--out", str(out))
        assert result.exit_code == 0
    csv_a = (a / "convergence.csv").read_text()
    csv_b = (b / "convergence.csv").read_text()
    # byte-identical numerical columns; wall-clock column may differ
    assert strip_elapsed(csv_a) == strip_elapsed(csv_b)
    assert (a / "sphere.obj").read_text() == (b / "sphere.obj").read_text()


def test_param_log_flag_and_noise(tmp_path, mesh_file):
    out = tmp_path / "run"
    log = tmp_path / "conv.csv"
    result = run("param", mesh_file, "--max-iters", "2", "--fpi-iters", "1",
                 "--noise-sigma", "1e-3", "--seed", "5",
                 "--log", str(log), "--out", str(out))
    assert result.exit_code == 0
    assert log.exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["params"]["noise_sigma"] == pytest.approx(1e-3)
    assert manifest["seed"] == 5


def test_param_missing_mesh_is_usage_error(tmp_path):
    result = CliRunner().invoke(main, ["param", str(tmp_path / "absent.off")])
    assert result.exit_code == 2


def test_param_bad_mesh_is_numerical_failure(tmp_path):
    path = tmp_path / "open.off"
    path.write_text("OFF\n3 1 3\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    result = CliRunner().invoke(main, ["param", str(path)])
    assert result.exit_code == 1
    assert "error" in result.output


@pytest.fixture(scope="module")
def registration_dir(tmp_path_factory, sphere_file):
    base = tmp_path_factory.mktemp("reg")
    landmarks = base / "marks.txt"
    landmarks.write_text("# five pairs\n4 4\n41 41\n78 78\n121 121\n151 151\n")
    out = base / "out"
    result = run("register", sphere_file, sphere_file, str(landmarks),
                 "--fpi-iters", "3", "--max-iters", "10", "--align-iters", "60",
                 "--out", str(out))
    assert result.exit_code == 0, result.output
    return out


def test_register_outputs(registration_dir):
    out = registration_dir
    for name in ("f0.obj", "f1.obj", "h0.obj", "h1.obj",
                 "composed_map.txt", "mismatch.json", "manifest.json"):
        assert (out / name).exists()
    rows = np.loadtxt(out / "composed_map.txt", comments="#")
    assert rows.shape == (162, 5)
    weights = rows[:, 2:5]
    assert np.abs(weights.sum(axis=1) - 1.0).max() <= 1e-10
    mismatch = json.loads((out / "mismatch.json").read_text())
    assert "final_mean_geodesic" in mismatch


def test_register_missing_landmarks_usage_error(sphere_file, tmp_path):
    result = CliRunner().invoke(
        main, ["register", sphere_file, sphere_file, str(tmp_path / "none.txt")])
    assert result.exit_code == 2


def test_morph_frames(registration_dir, tmp_path):
    out = tmp_path / "frames"
    result = run("morph", str(registration_dir), "--frames", "4", "--out", str(out))
    assert result.exit_code == 0, result.output
    frames = sorted(os.listdir(out))
    assert [f for f in frames if f.endswith(".obj")] == [
        "frame_000.obj", "frame_001.obj", "frame_002.obj", "frame_003.obj"]
    manifest = json.loads((registration_dir / "manifest.json").read_text())
    m0 = load_mesh(manifest["inputs"]["mesh0"])
    frame0 = load_mesh(out / "frame_000.obj")
    assert np.abs(frame0.vertices - m0.vertices).max() <= 1e-12
    assert np.array_equal(frame0.faces, m0.faces)


def test_morph_single_frame_usage_error(registration_dir):
    result = CliRunner().invoke(main, ["morph", str(registration_dir), "--frames", "1"])
    assert result.exit_code == 2


def test_morph_requires_registration_outputs(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    result = CliRunner().invoke(main, ["morph", str(empty)])
    assert result.exit_code == 2


def test_check_passes_on_icosphere(sphere_file):
    result = run("check", sphere_file)
    assert result.exit_code == 0, result.output
    assert "FAIL" not in result.output
    assert "all checks passed" in result.output


def test_check_probe_eigen(sphere_file):
    result = run("check", sphere_file, "--probe-eigen")
    assert result.exit_code == 0, result.output
    assert "eigenvalue probe" in result.output


def test_env_var_override(tmp_path, mesh_file):
    out = tmp_path / "env_run"
    result = CliRunner().invoke(
        main, ["param", mesh_file, "--max-iters", "2", "--fpi-iters", "1",
               "--out", str(out)],
        env={"AUTHALIC_PARAM_SEED": "9"}, catch_exceptions=False)
    assert result.exit_code == 0
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["seed"] == 9
