"""Riemannian gradient descent on the power manifold of unit spheres.

Each iteration projects the ambient gradient of the objective to the
tangent space, takes the anti-gradient direction, picks a step size by
line search, and retracts.  The default objective is the normalized
stretch energy; alternative objectives (e.g. the landmark registration
energy) plug in through the same interface.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import energy as en
from .linesearch import phi_derivative_at_zero, search
from .sphere import count_folds, project_tangent


@dataclass
class SolverConfig:
    """Stopping rules and line-search knobs for :func:`minimize`.

    grad_tol defaults to 1e-6 * sqrt(n) when left as None; the energy
    stall test fires after `stall_iters` consecutive iterations whose
    authalic-energy decrease falls below `energy_tol`.
    """

    max_iters: int = 100
    grad_tol: float | None = None
    energy_tol: float = 1e-12
    stall_iters: int = 3
    strategy: str = "interpolant"
    log_every: int = 0
    c1: float = 1e-4
    alpha_max: float = 1.0
    max_backtracks: int = 30


@dataclass(frozen=True)
class IterationRecord:
    iteration: int
    stretch: float
    authalic: float
    normalized: float
    sd_over_mean: float
    grad_norm: float | None
    alpha: float | None
    folds: int
    elapsed_s: float


@dataclass(frozen=True)
class MinimizeResult:
    mapping: np.ndarray
    records: list[IterationRecord]
    status: str
    message: str = ""


class NormalizedStretchObjective:
    """Objective wrapper: normalized stretch energy and its gradient."""

    def __init__(self, surface):
        self.surface = surface

    def value(self, f: np.ndarray) -> float:
        return en.normalized_energy(self.surface, f)

    def value_and_gradient(self, f: np.ndarray):
        lap = en.assemble_laplacian(self.surface, f)
        report = en.stretch_energy(self.surface, f, laplacian=lap)
        egrad = en.euclidean_gradient(self.surface, f, laplacian=lap, report=report)
        return report.normalized, egrad, report


def riemannian_gradient(surface, f: np.ndarray) -> np.ndarray:
    """Tangent projection of the ambient gradient of the normalized energy."""
    return project_tangent(f, en.euclidean_gradient(surface, f))


def area_ratio_cv(surface, f: np.ndarray) -> float:
    """Population SD over mean of the per-face image/reference area ratios."""
    ratios = en.face_geometry(surface, f, check=False).image_areas / surface.face_areas
    mean = ratios.mean()
    return float(np.sqrt(np.mean((ratios - mean) ** 2)) / mean)


def minimize(surface, f0: np.ndarray, config: SolverConfig | None = None,
             objective=None, extra_stop=None) -> MinimizeResult:
    """Run gradient descent from `f0` until a stopping rule fires.

    Parameters
    ----------
    objective : optional
        Object with `value(f)` and `value_and_gradient(f)`; defaults to
        the normalized stretch energy on `surface`.
    extra_stop : callable, optional
        Called as `extra_stop(f, records)` after each accepted iteration;
        a non-None return value becomes the final status string.

    Returns
    -------
    MinimizeResult
        `status` is one of grad_converged / energy_stalled / max_iters /
        line_search_failed, or the `extra_stop` value.  On line-search
        failure the best (last accepted) iterate is returned, not an
        exception.
    """
    config = config or SolverConfig()
    objective = objective or NormalizedStretchObjective(surface)
    f = np.asarray(f0, dtype=np.float64).copy()
    n = f.shape[0]
    grad_tol = config.grad_tol if config.grad_tol is not None else 1e-6 * np.sqrt(n)

    records: list[IterationRecord] = []
    start = time.perf_counter()
    prev_value = None
    prev_authalic = None
    stall_count = 0

    for k in range(1, config.max_iters + 1):
        value, egrad, report = objective.value_and_gradient(f)
        rgrad = project_tangent(f, egrad)
        grad_norm = float(np.linalg.norm(rgrad))
        if grad_norm <= grad_tol:
            return MinimizeResult(f, records, "grad_converged",
                                  f"|grad| = {grad_norm:.3e} <= {grad_tol:.3e}")
        d = -rgrad
        dphi0 = phi_derivative_at_zero(f, d, egrad)
        if prev_value is None or not np.isfinite(dphi0) or dphi0 >= 0:
            alpha0 = config.alpha_max
        else:
            alpha0 = min(config.alpha_max, 2.0 * (value - prev_value) / dphi0)
            if not np.isfinite(alpha0) or alpha0 <= 0:
                alpha0 = config.alpha_max
        ls = search(surface, f, d, energy=objective.value, phi0=value, dphi0=dphi0,
                    strategy=config.strategy, alpha0=alpha0, c1=config.c1,
                    alpha_max=config.alpha_max, max_backtracks=config.max_backtracks)
        if not ls.ok:
            return MinimizeResult(f, records, "line_search_failed", ls.message)

        f = ls.mapping
        prev_value = value
        report_new = en.energy_report_per_face(surface, f)
        records.append(IterationRecord(
            iteration=k,
            stretch=report_new.stretch,
            authalic=report_new.authalic,
            normalized=report_new.normalized,
            sd_over_mean=area_ratio_cv(surface, f),
            grad_norm=grad_norm,
            alpha=ls.alpha,
            folds=count_folds(surface, f),
            elapsed_s=time.perf_counter() - start,
        ))
        if config.log_every and k % config.log_every == 0:
            r = records[-1]
            print(f"iter {k:5d}  E = {ls.energy:.9e}  E_A = {r.authalic:.3e}  "
                  f"|grad| = {grad_norm:.3e}  alpha = {ls.alpha:.3e}")

        if prev_authalic is not None and prev_authalic - report_new.authalic < config.energy_tol:
            stall_count += 1
            if stall_count >= config.stall_iters:
                return MinimizeResult(f, records, "energy_stalled",
                                      f"authalic decrease < {config.energy_tol:g} "
                                      f"for {config.stall_iters} iterations")
        else:
            stall_count = 0
        prev_authalic = report_new.authalic

        if extra_stop is not None:
            status = extra_stop(f, records)
            if status:
                return MinimizeResult(f, records, status)

    return MinimizeResult(f, records, "max_iters")
