"""Fixed-point iteration of stretch-energy minimization.

Produces the initial spherical mapping for gradient descent: a conformal
starting map (harmonic flattening of the once-punctured mesh, lifted to
the sphere), then alternating hemisphere solves of the image-weighted
Laplacian in the stereographic plane with median rescaling.  The
iteration is cheap but not monotone; the driver can stop as soon as the
authalic energy first increases and roll back one step.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import energy as en
from .errors import SolveError
from .linsolve import solve
from .rgd import IterationRecord, area_ratio_cv
from .sphere import (PlanarPoints, count_folds, inverse_stereographic,
                     invert_plane, stereographic)

DEFAULT_RADIUS = 1.2

# equilateral pinning targets for the punctured face, counterclockwise
_PIN = np.exp(1j * np.array([np.pi / 2, np.pi / 2 + 2 * np.pi / 3, np.pi / 2 + 4 * np.pi / 3]))


def conformal_initial_map(surface, face_index: int | None = None, rng=None) -> np.ndarray:
    """Spherical conformal-ish starting map via harmonic flattening.

    One face is punctured and its three vertices pinned to an equilateral
    triangle; the cotangent-weighted Laplacian of the reference mesh is
    solved for all remaining planar positions, the plane is recentered
    (barycenter to origin, median magnitude to one), and the result is
    lifted through the inverse stereographic projection.  If the lift
    lands with inverted global orientation the plane is conjugated, so
    meshes of either orientation get a mostly fold-free start.
    """
    if face_index is None:
        if rng is not None:
            face_index = int(rng.integers(surface.n_faces))
        else:
            face_index = int(np.argmax(surface.face_areas))
    pinned = surface.faces[face_index]

    # stretch Laplacian of the identity mapping = classical half-cotangent
    # Laplacian of the reference mesh
    lap = en.assemble_laplacian(surface, surface.vertices).tocsr()
    n = surface.n_vertices
    interior = np.ones(n, dtype=bool)
    interior[pinned] = False
    h = np.zeros(n, dtype=np.complex128)
    h[pinned] = _PIN
    rhs = -lap[interior][:, pinned] @ h[pinned]
    h[interior] = solve(lap[interior][:, interior].tocsc(), rhs)

    h -= h.mean()
    mags = np.abs(h)
    if (mags < 1e-14).any():
        # nudge off an exact origin hit so the magnitudes stay positive
        h[mags < 1e-14] = 1e-12
        mags = np.abs(h)
    h /= np.median(mags)

    f = inverse_stereographic(PlanarPoints.finite(h))
    if count_folds(surface, f) > surface.n_faces // 2:
        f = inverse_stereographic(PlanarPoints.finite(np.conj(h)))
    return f


@dataclass(frozen=True)
class FPIResult:
    mapping: np.ndarray
    records: list[IterationRecord]
    first_increase: int | None
    status: str
    boundary_fixed: list[bool]


def _interior_mask(h: PlanarPoints, radius: float) -> np.ndarray:
    with np.errstate(over="ignore"):
        mags = np.abs(h.values)
    mask = (mags < radius) & ~h.at_infinity
    return mask


def _hemisphere_solve(lap, h: PlanarPoints, radius: float):
    """Solve the restricted system for the interior of the current plane,
    keeping boundary values bitwise intact.  Returns (new points, interior
    mask, boundary-fixed flag)."""
    interior = _interior_mask(h, radius)
    if not interior.any():
        raise SolveError("empty interior vertex set (radius too small?)")
    boundary = ~interior
    if (h.at_infinity & boundary).any():
        inf_cols = np.flatnonzero(h.at_infinity)
        if lap[interior][:, inf_cols].nnz:
            raise SolveError("vertex at infinity is coupled to the interior system")
    rhs = -lap[interior][:, boundary] @ np.where(h.at_infinity[boundary], 0.0, h.values[boundary])
    values = h.values.copy()
    before = values[boundary].copy()
    values[interior] = solve(lap[interior][:, interior].tocsc(), rhs)
    fixed = bool(np.array_equal(values[boundary], before))
    return PlanarPoints(values=values, at_infinity=h.at_infinity.copy()), interior, fixed


def fpi_minimize(surface, f0: np.ndarray, epsilon: float = 1e-6,
                 r: float = DEFAULT_RADIUS, max_iters: int = 10,
                 stop_on_increase: bool = True) -> FPIResult:
    """Alternating hemisphere fixed-point iteration from `f0`.

    Each iteration: rebuild the image-weighted Laplacian, invert the
    plane (swapping hemispheres), re-solve the interior {|h| < r}, rescale
    to unit median magnitude, and lift back to the sphere.  Stops when
    the stretch-energy decrease drops to `epsilon` or (when
    `stop_on_increase`) at the first authalic-energy increase, returning
    the pre-increase mapping.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    if r <= 1.0:
        raise ValueError("radius must exceed 1")
    current = np.asarray(f0, dtype=np.float64).copy()
    # the working plane accumulates one inversion per iteration (that is
    # what alternates the hemispheres); an inversion is a reflection on
    # the sphere, so lifts at odd parity are inverted once more to keep
    # every reported mapping in the input orientation
    h = stereographic(current)
    flipped = False
    report = en.energy_report_per_face(surface, current)
    records: list[IterationRecord] = []
    boundary_fixed: list[bool] = []
    start = time.perf_counter()

    for k in range(1, max_iters + 1):
        lap = en.assemble_laplacian(surface, current).tocsr()
        h = invert_plane(h)
        flipped = not flipped
        h, _, fixed = _hemisphere_solve(lap, h, r)
        boundary_fixed.append(fixed)
        with np.errstate(over="ignore"):
            mags = np.where(h.at_infinity, np.inf, np.abs(h.values))
        h = PlanarPoints(values=h.values / np.median(mags), at_infinity=h.at_infinity)
        f_new = inverse_stereographic(invert_plane(h) if flipped else h)
        report_new = en.energy_report_per_face(surface, f_new)
        records.append(IterationRecord(
            iteration=k,
            stretch=report_new.stretch,
            authalic=report_new.authalic,
            normalized=report_new.normalized,
            sd_over_mean=area_ratio_cv(surface, f_new),
            grad_norm=None,
            alpha=None,
            folds=count_folds(surface, f_new),
            elapsed_s=time.perf_counter() - start,
        ))
        if stop_on_increase and report_new.authalic > report.authalic:
            return FPIResult(current, records, k, "authalic_increased", boundary_fixed)
        delta = report.stretch - report_new.stretch
        current, report = f_new, report_new
        if delta <= epsilon:
            return FPIResult(current, records, None, "delta_converged", boundary_fixed)

    return FPIResult(current, records, None, "max_iters", boundary_fixed)
