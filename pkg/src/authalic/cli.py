"""Command-line interface: param, register, morph, check.

Exit codes: 0 on success, 1 on numerical failure, 2 on usage errors.
Every flag can be overridden through environment variables prefixed
AUTHALIC_ (e.g. AUTHALIC_PARAM_SEED).  Each run writes a manifest JSON
recording inputs, parameters, seed, and timings next to its outputs.
"""

from __future__ import annotations

import json
import os
import sys
import time
from importlib.metadata import PackageNotFoundError, version

import click
import numpy as np

from . import diagnostics as diag
from . import energy as en
from .errors import AuthalicError
from .mesh import (build_surface, load_mesh, normalize_area, parse_landmarks,
                   perturb_vertices, save_mesh)
from .pipeline import ParameterizeConfig, parameterize, write_records_csv
from .registration import (ComposedMap, compose_registration, geodesic_mismatch,
                           homotopy_frame, midpoint_targets, solve_alignment)
from .sphere import (count_folds, inverse_stereographic, project_to_manifold,
                     stereographic)

try:
    _VERSION = version("authalic")
except PackageNotFoundError:  # running from a source tree
    _VERSION = "0.1.0"

_STRATEGIES = {"interp": "interpolant", "bounded": "bounded"}


def _write_manifest(out_dir, command, inputs, params, seconds):
    manifest = {
        "command": command,
        "inputs": inputs,
        "params": params,
        "seed": params.get("seed"),
        "version": _VERSION,
        "seconds": round(seconds, 3),
    }
    path = os.path.join(out_dir, "manifest.json")
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _run_param(mesh_path, *, fpi_iters, max_iters, strategy, radius, c1,
               alpha_max, noise_sigma, seed, correct, normalize):
    surface = load_mesh(mesh_path)
    if noise_sigma > 0:
        surface = perturb_vertices(surface, noise_sigma, seed)
    config = ParameterizeConfig(
        fpi_iters=fpi_iters, max_iters=max_iters, strategy=strategy,
        radius=radius, c1=c1, alpha_max=alpha_max, correct=correct,
        seed=seed, normalize=normalize,
    )
    return surface, parameterize(surface, config)


@click.group(context_settings={"auto_envvar_prefix": "AUTHALIC"})
@click.version_option(_VERSION)
def main():
    """Spherical area-preserving parameterization of closed triangle meshes."""


@main.command()
@click.argument("mesh", type=click.Path(exists=True, dir_okay=False))
@click.option("--fpi-iters", default=10, show_default=True,
              help="Warm-start fixed-point iterations (stops early on energy increase).")
@click.option("--max-iters", default=100, show_default=True,
              help="Gradient-descent iterations.")
@click.option("--ls", "ls", type=click.Choice(sorted(_STRATEGIES)), default="interp",
              show_default=True, help="Line-search strategy.")
@click.option("--r", "radius", default=1.2, show_default=True,
              help="Interior radius for hemisphere solves.")
@click.option("--c1", default=1e-4, show_default=True,
              help="Sufficient-decrease constant.")
@click.option("--alpha-max", default=1.0, show_default=True, help="Step-size cap.")
@click.option("--noise-sigma", default=0.0, show_default=True,
              help="Gaussian vertex-normal noise applied to the raw input mesh.")
@click.option("--seed", default=0, show_default=True)
@click.option("--log", "log_path", type=click.Path(dir_okay=False), default=None,
              help="Convergence CSV path (default: <out>/convergence.csv).")
@click.option("--correct-bijectivity", "correct",
              type=click.Choice(["off", "fpi", "rgd", "both"]), default="both",
              show_default=True)
@click.option("--no-normalize", is_flag=True,
              help="Skip rescaling the mesh to total area 4*pi.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None,
              help="Output directory (default: <mesh stem>_param).")
def param(mesh, fpi_iters, max_iters, ls, radius, c1, alpha_max, noise_sigma,
          seed, log_path, correct, no_normalize, out_dir):
    """Compute the spherical parameterization of MESH."""
    out_dir = out_dir or os.path.splitext(mesh)[0] + "_param"
    os.makedirs(out_dir, exist_ok=True)
    try:
        surface, result = _run_param(
            mesh, fpi_iters=fpi_iters, max_iters=max_iters,
            strategy=_STRATEGIES[ls], radius=radius, c1=c1, alpha_max=alpha_max,
            noise_sigma=noise_sigma, seed=seed, correct=correct,
            normalize=not no_normalize,
        )
    except AuthalicError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    sphere_path = os.path.join(out_dir, "sphere.obj")
    save_mesh(result.mapping, result.surface.faces, sphere_path)
    # the output keeps the input vertex order; the sidecar records the map
    with open(os.path.join(out_dir, "vertex_ids.txt"), "w") as fh:
        fh.write("# input_vertex_id output_vertex_id\n")
        for i in range(result.surface.n_vertices):
            fh.write(f"{i} {i}\n")
    csv_path = log_path or os.path.join(out_dir, "convergence.csv")
    write_records_csv(csv_path, result.records)
    params = {
        "fpi_iters": fpi_iters, "max_iters": max_iters, "ls": ls, "r": radius,
        "c1": c1, "alpha_max": alpha_max, "noise_sigma": noise_sigma, "seed": seed,
        "correct_bijectivity": correct, "normalize": not no_normalize,
        "fpi_iterations_run": result.fpi_iterations,
    }
    _write_manifest(out_dir, "param", {"mesh": os.path.abspath(mesh)}, params,
                    result.seconds)
    s = result.summary
    click.echo(f"SD/Mean {s['sd_over_mean']:.4f}, E_A {s['authalic']:.3e}, "
               f"time {s['seconds']:.2f} s, folds {s['folds']}")


@main.command()
@click.argument("mesh0", type=click.Path(exists=True, dir_okay=False))
@click.argument("mesh1", type=click.Path(exists=True, dir_okay=False))
@click.argument("landmarks", type=click.Path(exists=True, dir_okay=False))
@click.option("--lam", "--lambda", "lam", default=10.0, show_default=True,
              help="Landmark penalty weight.")
@click.option("--align-iters", default=200, show_default=True)
@click.option("--fpi-iters", default=10, show_default=True)
@click.option("--max-iters", default=100, show_default=True)
@click.option("--ls", "ls", type=click.Choice(sorted(_STRATEGIES)), default="interp",
              show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--raw-midpoints", is_flag=True,
              help="Use chord midpoints as-is instead of renormalizing to the sphere.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def register(mesh0, mesh1, landmarks, lam, align_iters, fpi_iters, max_iters, ls,
             seed, raw_midpoints, out_dir):
    """Landmark-aligned registration of MESH0 onto MESH1."""
    out_dir = out_dir or os.path.splitext(mesh0)[0] + "_register"
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    try:
        m0 = load_mesh(mesh0)
        m1 = load_mesh(mesh1)
        pairs = parse_landmarks(landmarks, m0.n_vertices, m1.n_vertices)
        config = ParameterizeConfig(fpi_iters=fpi_iters, max_iters=max_iters,
                                    strategy=_STRATEGIES[ls], seed=seed)
        r0 = parameterize(m0, config)
        r1 = parameterize(m1, config)
        f0, f1 = r0.mapping, r1.mapping
        targets = midpoint_targets(f0, f1, pairs, normalize=not raw_midpoints)
        s0 = build_surface(f0, m0.faces)
        s1 = build_surface(f1, m1.faces)
        a0 = solve_alignment(s0, f0, pairs[:, 0], targets, lambdas=lam,
                             iters=align_iters, strategy=_STRATEGIES[ls])
        a1 = solve_alignment(s1, f1, pairs[:, 1], targets, lambdas=lam,
                             iters=align_iters, strategy=_STRATEGIES[ls])
        composed = compose_registration(m0, m1, f0, f1, a0.mapping, a1.mapping)
    except AuthalicError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)

    for name, mapping, faces in (("f0", f0, m0.faces), ("f1", f1, m1.faces),
                                 ("h0", a0.mapping, m0.faces), ("h1", a1.mapping, m1.faces)):
        save_mesh(mapping, faces, os.path.join(out_dir, f"{name}.obj"))
    with open(os.path.join(out_dir, "composed_map.txt"), "w") as fh:
        fh.write("# vertex_id face_id w0 w1 w2\n")
        for i in range(m0.n_vertices):
            w = composed.weights[i]
            fh.write(f"{i} {composed.face_indices[i]} "
                     f"{w[0]:.17g} {w[1]:.17g} {w[2]:.17g}\n")

    before = geodesic_mismatch(f0[pairs[:, 0]], f1[pairs[:, 1]])
    after = geodesic_mismatch(a0.mapping[pairs[:, 0]], a1.mapping[pairs[:, 1]])
    mismatch = {
        "initial_mean_geodesic": before,
        "final_mean_geodesic": after,
        "reduction": 1.0 - after / before if before > 0 else 0.0,
        "fallback_points": composed.fallback_count,
        "alignment_status": [a0.status, a1.status],
    }
    with open(os.path.join(out_dir, "mismatch.json"), "w") as fh:
        json.dump(mismatch, fh, indent=2, sort_keys=True)
        fh.write("\n")
    params = {"lambda": lam, "align_iters": align_iters, "fpi_iters": fpi_iters,
              "max_iters": max_iters, "ls": ls, "seed": seed,
              "raw_midpoints": raw_midpoints}
    _write_manifest(out_dir, "register",
                    {"mesh0": os.path.abspath(mesh0), "mesh1": os.path.abspath(mesh1),
                     "landmarks": os.path.abspath(landmarks)},
                    params, time.perf_counter() - start)
    click.echo(f"landmark mismatch {before:.4e} -> {after:.4e} "
               f"({100 * mismatch['reduction']:.1f}% reduction)")


@main.command()
@click.argument("regdir", type=click.Path(exists=True, file_okay=False))
@click.option("--frames", default=4, show_default=True,
              help="Number of morph frames, endpoints included.")
@click.option("--out", "out_dir", type=click.Path(file_okay=False), default=None)
def morph(regdir, frames, out_dir):
    """Write linear morph frames from a registration output directory."""
    if frames < 2:
        raise click.UsageError("--frames must be at least 2")
    out_dir = out_dir or os.path.join(regdir, "morph")
    manifest_path = os.path.join(regdir, "manifest.json")
    composed_path = os.path.join(regdir, "composed_map.txt")
    if not os.path.exists(manifest_path) or not os.path.exists(composed_path):
        raise click.UsageError(f"{regdir} does not contain registration outputs")
    os.makedirs(out_dir, exist_ok=True)
    start = time.perf_counter()
    try:
        with open(manifest_path) as fh:
            manifest = json.load(fh)
        m0 = load_mesh(manifest["inputs"]["mesh0"])
        m1 = load_mesh(manifest["inputs"]["mesh1"])
        rows = np.loadtxt(composed_path, comments="#")
        face_idx = rows[:, 1].astype(np.int64)
        weights = rows[:, 2:5]
        points = np.einsum("nk,nkd->nd", weights, m1.vertices[m1.faces[face_idx]])
        composed = ComposedMap(face_indices=face_idx, weights=weights,
                               points=points, fallback_count=0)
        for k in range(frames):
            t = k / (frames - 1)
            frame = homotopy_frame(m0, composed, t)
            save_mesh(frame, m0.faces, os.path.join(out_dir, f"frame_{k:03d}.obj"))
    except (AuthalicError, OSError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    _write_manifest(out_dir, "morph", {"regdir": os.path.abspath(regdir)},
                    {"frames": frames, "seed": None}, time.perf_counter() - start)
    click.echo(f"wrote {frames} frames to {out_dir}")


def _check_lines(surface, probe_eigen: bool):
    """Yield (name, passed, detail) tuples for the verification suite."""
    f = project_to_manifold(surface.vertices - surface.vertices.mean(axis=0))

    geom = en.face_geometry(surface, surface.vertices, check=False)
    err = np.abs(geom.image_areas - surface.face_areas).max() / surface.face_areas.max()
    yield "area formulas agree", err < 1e-12, f"max rel diff {err:.2e}"

    lap = en.assemble_laplacian(surface, f)
    row_err = np.abs(np.asarray(lap.sum(axis=1))).max() / max(abs(lap.data).max(), 1e-300)
    yield "laplacian rows sum to zero", row_err < 1e-10, f"residual {row_err:.2e}"

    report = en.stretch_energy(surface, f, laplacian=lap)
    per_face = float(np.sum(en.stretch_energy_per_face(surface, f)))
    rel = abs(report.stretch - per_face) / abs(per_face)
    yield "stretch energy routes agree", rel < 1e-10, f"rel diff {rel:.2e}"

    ga = en.image_area_gradient(surface, f)
    gb = en.image_area_gradient_via_laplacian(surface, f)
    rel = np.abs(ga - gb).max() / max(np.abs(ga).max(), 1e-300)
    yield "area gradient routes agree", rel < 1e-10, f"rel diff {rel:.2e}"

    fd_err = diag.fd_gradient_norm_error(surface, f, step=1e-6, max_coords=300)
    yield ("gradient matches finite differences", fd_err < 1e-6,
           f"normwise rel err {fd_err:.2e}")

    back = inverse_stereographic(stereographic(f))
    rt = np.abs(back - f).max()
    yield "stereographic round trip", rt < 1e-12, f"max abs err {rt:.2e}"

    flipped = surface.faces.copy()
    flipped[0] = flipped[0, [0, 2, 1]]
    flipped_surface = build_surface(surface.vertices, flipped)
    base = count_folds(surface, f)
    got = count_folds(flipped_surface, f)
    yield "fold detector counts a flipped face", got == base + 1, f"{base} -> {got}"

    if probe_eigen:
        try:
            probe = diag.smallest_hessian_eigenvalue(surface, f, mode="magnitude")
            yield ("hessian eigenvalue probe", True,
                   f"lambda {probe.smallest_eigenvalue:.4e}, residual {probe.residual:.2e}")
        except AuthalicError as exc:
            yield "hessian eigenvalue probe", False, str(exc)


@main.command()
@click.argument("mesh", type=click.Path(exists=True, dir_okay=False))
@click.option("--probe-eigen", is_flag=True, help="Also probe the smallest Hessian eigenvalue.")
def check(mesh, probe_eigen):
    """Run the verification suite on MESH; nonzero exit on any failure."""
    try:
        surface = normalize_area(load_mesh(mesh))
        results = list(_check_lines(surface, probe_eigen))
    except AuthalicError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    failed = 0
    for name, ok, detail in results:
        click.echo(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failed += 0 if ok else 1
    if failed:
        click.echo(f"{failed} check(s) failed", err=True)
        sys.exit(1)
    click.echo("all checks passed")


if __name__ == "__main__":
    main()
