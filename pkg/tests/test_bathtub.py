"""Discrete fillings, the greedy minimizer and the dissipation bound."""

import numpy as np
import pytest

from qpump.bathtub import (
    Filling,
    analytic_minimum,
    greedy_minimize,
    linear_dispersion,
    project_to_qdot,
    quadratic_dispersion,
    thermal_step,
    two_sided_bound,
    verify_bound,
)
from qpump.errors import TargetInfeasible
from qpump.models import uniform_stream

PI = np.pi
TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------- grids


def test_grid_construction():
    grid = linear_dispersion(2.0, 128)
    assert grid.kind == "linear"
    assert grid.dk == 2.0 / 128
    assert np.all(np.diff(grid.nodes) > 0)
    assert np.all(grid.weights >= 0.0)
    np.testing.assert_allclose(grid.eps, grid.nodes)
    quad = quadratic_dispersion(2.0, 128, mass=2.0)
    np.testing.assert_allclose(quad.eps, 0.25 * quad.nodes**2)
    with pytest.raises(ValueError):
        linear_dispersion(2.0, 32)
    with pytest.raises(ValueError):
        linear_dispersion(-1.0, 128)
    with pytest.raises(ValueError):
        quadratic_dispersion(2.0, 128, mass=0.0)


def test_filling_fluxes():
    grid = linear_dispersion(2.0, 64)
    full = Filling.from_occupation(grid, np.ones(64))
    # full band: measure k_max, energy (k_max^2 + k_max*dk)/2 at right edges
    assert abs(full.qdot - 2.0 / TWO_PI) < 1e-14
    assert abs(full.edot - (4.0 + 2.0 * grid.dk) / 2.0 / TWO_PI) < 1e-14
    with pytest.raises(ValueError):
        Filling.from_occupation(grid, np.full(64, 1.5))
    with pytest.raises(ValueError):
        Filling.from_occupation(grid, np.ones(32))


# ---------------------------------------------------------------- greedy


def test_greedy_zero_target():
    filling = greedy_minimize(linear_dispersion(2.0, 128), 0.0)
    assert filling.qdot == 0.0 and filling.edot == 0.0
    assert np.all(filling.occupation == 0.0)


def test_greedy_full_band():
    grid = linear_dispersion(2.0, 128)
    filling = greedy_minimize(grid, grid.max_qdot)
    assert np.all(filling.occupation == 1.0)


def test_greedy_hits_target_flux():
    for make in (linear_dispersion, quadratic_dispersion):
        grid = make(2.0, 512)
        target = 0.83 / TWO_PI
        filling = greedy_minimize(grid, target)
        assert abs(filling.qdot - target) < 1e-12


def test_greedy_infeasible_targets():
    grid = linear_dispersion(2.0, 128)
    with pytest.raises(TargetInfeasible):
        greedy_minimize(grid, -0.1)
    with pytest.raises(TargetInfeasible):
        greedy_minimize(grid, grid.max_qdot * 1.01)


def test_greedy_converges_to_analytic_minimum():
    # canonical setup: linear dispersion, mu = 1, k_max = 2
    qdot, edot = analytic_minimum(1.0)
    errors = []
    for n_k in (512, 1024, 2048):
        filling = greedy_minimize(linear_dispersion(2.0, n_k), qdot)
        err = abs(filling.edot - edot)
        assert err < 5.0 / n_k
        errors.append(err)
    for a, b in zip(errors, errors[1:]):
        assert 0.4 <= b / a <= 0.6  # first-order: error halves per doubling


def test_greedy_dispersion_independent():
    # the minimizer lives in the energy measure, so the minimum matches
    # between dispersions up to the energy cell width
    qdot, edot = analytic_minimum(1.0)
    lin = greedy_minimize(linear_dispersion(2.0, 1024), qdot)
    quad = greedy_minimize(quadratic_dispersion(2.0, 1024), qdot)
    max_cell = max(
        float(np.max(np.diff(linear_dispersion(2.0, 1024).eps))),
        float(np.max(np.diff(quadratic_dispersion(2.0, 1024).eps))),
    )
    assert abs(lin.edot - quad.edot) < 2.0 * max_cell


def test_greedy_is_discrete_minimizer():
    # certificate: feasible perturbations at the same flux never do better
    grid = linear_dispersion(2.0, 256)
    target = 1.0 / TWO_PI
    greedy = greedy_minimize(grid, target)
    rng = np.random.default_rng(42)
    for _ in range(100):
        noisy = np.clip(greedy.occupation + rng.normal(scale=0.05, size=grid.n_k), 0.0, 1.0)
        candidate = project_to_qdot(grid, noisy, target)
        assert abs(candidate.qdot - target) < 1e-10
        assert candidate.edot >= greedy.edot - 1e-12


# ---------------------------------------------------------------- analytic


def test_analytic_minimum_values():
    np.testing.assert_allclose(analytic_minimum(1.0), (1 / TWO_PI, 1 / (4 * PI)), rtol=1e-15)
    assert analytic_minimum(0.0) == (0.0, 0.0)
    np.testing.assert_allclose(analytic_minimum(2.0), (1 / PI, 1 / PI), rtol=1e-15)


# ---------------------------------------------------------------- bound


def test_verify_bound_no_violations():
    check = verify_bound(linear_dispersion(2.0, 1024), trials=1000, seed=0, mu=1.0)
    assert check.trials == 1000
    assert check.violations == 0
    assert check.max_violation == 0.0
    # greedy sits within the discretization gap of the continuum bound
    assert 0.0 <= check.greedy_gap_max < 5.0 / 1024


def test_verify_bound_step_filling_gap():
    for n_k in (512, 1024):
        check = verify_bound(linear_dispersion(2.0, n_k), trials=1, seed=0, mu=1.0)
        assert 0.0 <= check.step_gap < 5.0 / n_k
    # halving the cell size halves the equality-case gap
    a = verify_bound(linear_dispersion(2.0, 512), 1, 0, mu=1.0).step_gap
    b = verify_bound(linear_dispersion(2.0, 1024), 1, 0, mu=1.0).step_gap
    assert 0.4 <= b / a <= 0.6


def test_verify_bound_deterministic():
    a = verify_bound(linear_dispersion(2.0, 256), 50, seed=9, mu=1.0)
    b = verify_bound(linear_dispersion(2.0, 256), 50, seed=9, mu=1.0)
    assert a == b


def test_full_band_is_strictly_above_bound():
    # n == 1 fills every mode; at right-edge nodes the discrete energy flux
    # exceeds pi*Qdot^2 by k_max*dk/4pi
    grid = linear_dispersion(2.0, 1024)
    full = Filling.from_occupation(grid, np.ones(grid.n_k))
    gap = full.edot - PI * full.qdot**2
    assert gap > 0.0
    assert abs(gap - 2.0 * grid.dk / (4 * PI)) < 1e-12


def test_random_fillings_respect_bound_explicitly():
    grid = quadratic_dispersion(3.0, 256)
    for trial in range(200):
        filling = Filling.from_occupation(grid, uniform_stream(1000 + trial, grid.n_k))
        assert filling.edot >= PI * filling.qdot**2 - 1e-12


# ---------------------------------------------------------------- two-sided


def test_two_sided_equilibrium():
    grid = linear_dispersion(2.0, 1024)
    source = thermal_step(grid, 1.0)
    lhs, rhs = two_sided_bound(1.0, source, grid)
    assert abs(lhs) < 5.0 / grid.n_k
    assert abs(rhs) < 1e-5


def test_two_sided_biased_fermi_seas_saturate():
    grid = linear_dispersion(2.5, 2048)
    source = thermal_step(grid, 2.0)
    lhs, rhs = two_sided_bound(1.0, source, grid)
    assert lhs >= rhs - 5.0 / grid.n_k
    assert abs(lhs - rhs) < 5.0 / grid.n_k


def test_two_sided_random_source_dissipates():
    grid = linear_dispersion(2.0, 512)
    source = Filling.from_occupation(grid, uniform_stream(5, grid.n_k))
    lhs, rhs = two_sided_bound(1.0, source, grid)
    assert lhs > rhs


def test_two_sided_validation():
    grid = linear_dispersion(2.0, 128)
    other = linear_dispersion(2.0, 256)
    source = thermal_step(grid, 1.0)
    with pytest.raises(ValueError):
        two_sided_bound(-1.0, source, grid)
    with pytest.raises(ValueError):
        two_sided_bound(1.0, source, other)
