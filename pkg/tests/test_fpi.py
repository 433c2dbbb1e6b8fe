import numpy as np
import pytest

from authalic.energy import energy_report_per_face
from authalic.errors import SolveError
from authalic.fpi import _hemisphere_solve, conformal_initial_map, fpi_minimize
from authalic.mesh import normalize_area
from authalic.rgd import SolverConfig, minimize
from authalic.sphere import PlanarPoints, count_folds

from helpers import bumpy_sphere


def test_interior_boundary_split_by_radius():
    from authalic.fpi import _interior_mask
    h = PlanarPoints.finite(np.array([0.5, 1.1, 1.3]))
    mask = _interior_mask(h, 1.2)
    assert mask.tolist() == [True, True, False]


def test_infinity_always_boundary():
    from authalic.fpi import _interior_mask
    h = PlanarPoints(values=np.array([0.0j, 0.3 + 0j]),
                     at_infinity=np.array([True, False]))
    assert _interior_mask(h, 1.2).tolist() == [False, True]


def test_median_normalization_rule():
    mags = np.array([1.0, 2.0, 4.0])
    assert np.allclose(mags / np.median(mags), [0.5, 1.0, 2.0])


def test_conformal_map_unit_icosphere(icosphere2):
    surf = normalize_area(icosphere2)
    f = conformal_initial_map(surf)
    assert count_folds(surf, f) == 0
    assert np.abs(np.linalg.norm(f, axis=1) - 1.0).max() <= 1e-12


def test_conformal_map_ellipsoid(ellipsoid3):
    f = conformal_initial_map(ellipsoid3)
    assert count_folds(ellipsoid3, f) == 0
    assert np.isfinite(energy_report_per_face(ellipsoid3, f).authalic)


def test_conformal_map_seeded_face_choice(ellipsoid3):
    a = conformal_initial_map(ellipsoid3, rng=np.random.default_rng(1))
    b = conformal_initial_map(ellipsoid3, rng=np.random.default_rng(1))
    c = conformal_initial_map(ellipsoid3, face_index=5)
    assert np.array_equal(a, b)
    assert count_folds(ellipsoid3, c) == 0


def test_fpi_boundary_rows_fixed(ellipsoid3):
    f0 = conformal_initial_map(ellipsoid3)
    result = fpi_minimize(ellipsoid3, f0, max_iters=6, stop_on_increase=False)
    assert len(result.boundary_fixed) == len(result.records)
    assert all(result.boundary_fixed)


def test_fpi_iterates_on_manifold(ellipsoid3):
    f0 = conformal_initial_map(ellipsoid3)
    result = fpi_minimize(ellipsoid3, f0, max_iters=5, stop_on_increase=False)
    assert np.abs(np.linalg.norm(result.mapping, axis=1) - 1.0).max() <= 1e-12
    assert [r.iteration for r in result.records] == list(range(1, 6))


def test_fpi_detects_first_increase_and_rolls_back():
    surf = normalize_area(bumpy_sphere())
    f0 = conformal_initial_map(surf)
    result = fpi_minimize(surf, f0, max_iters=60, stop_on_increase=True)
    assert result.status == "authalic_increased"
    k = result.first_increase
    assert k is not None and k >= 2
    energies = [r.authalic for r in result.records]
    # nonincreasing up to the detected iteration, increase at it
    assert all(b <= a for a, b in zip(energies[: k - 1], energies[1: k - 1]))
    assert energies[k - 1] > energies[k - 2]
    # the returned mapping is the pre-increase iterate
    returned = energy_report_per_face(surf, result.mapping).authalic
    assert returned == pytest.approx(energies[k - 2], rel=1e-12)


def test_fpi_monitor_off_runs_to_budget():
    surf = normalize_area(bumpy_sphere())
    f0 = conformal_initial_map(surf)
    result = fpi_minimize(surf, f0, max_iters=8, stop_on_increase=False)
    assert result.first_increase is None
    assert result.status in ("max_iters", "delta_converged")


def test_warm_start_then_descent_beats_fpi_alone():
    surf = normalize_area(bumpy_sphere())
    f0 = conformal_initial_map(surf)
    fpi_only = fpi_minimize(surf, f0, max_iters=60, stop_on_increase=False)
    fpi_best = min(r.authalic for r in fpi_only.records)

    warm = fpi_minimize(surf, f0, max_iters=10, stop_on_increase=True)
    refined = minimize(surf, warm.mapping, SolverConfig(max_iters=100))
    final = energy_report_per_face(surf, refined.mapping).authalic
    assert final <= fpi_best


def test_empty_interior_raises():
    lap = None
    h = PlanarPoints.finite(np.array([2.0, 3.0, 4.0]))
    with pytest.raises(SolveError, match="empty interior"):
        _hemisphere_solve(lap, h, 1.2)


def test_parameter_validation(ellipsoid3):
    f0 = conformal_initial_map(ellipsoid3)
    with pytest.raises(ValueError, match="epsilon"):
        fpi_minimize(ellipsoid3, f0, epsilon=0.0)
    with pytest.raises(ValueError, match="radius"):
        fpi_minimize(ellipsoid3, f0, r=0.9)
