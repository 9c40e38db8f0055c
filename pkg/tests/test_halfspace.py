import dataclasses
import warnings

import numpy as np
import pytest

from kapitsa.errors import ConvergenceError, DomainError, GridError
from kapitsa.halfspace import (
    HalfspaceGrid,
    extract_temperature_jump,
    heat_flux_profile,
    interior_residual,
    mu_c_mesh,
    slab_edges,
    solve_halfspace,
    speed_quadrature,
    temperature_profile,
    w_moments,
)
from kapitsa.jump import epsilon_T
from kapitsa.moments import moment
from kapitsa.params import ModelParams


def _params(gamma, q):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return ModelParams(gamma, q)


@pytest.fixture(scope="module")
def field_q09():
    return solve_halfspace(ModelParams(3.0, 0.9), 1.0)


@pytest.fixture(scope="module")
def field_q05():
    return solve_halfspace(ModelParams(3.0, 0.5), 1.0)


def _eps(gamma, q, grid=None, b_plus=1.0):
    fld = solve_halfspace(_params(gamma, q), b_plus, grid)
    return extract_temperature_jump(fld)["epsilon_T"]


# -- quadratures and grids ----------------------------------------------------

def test_quadratures(field_q09):
    f = field_q09
    assert np.all(f.mu_weights > 0) and np.all(f.c_weights > 0)
    np.testing.assert_array_equal(f.mu_nodes, -f.mu_nodes[::-1])
    assert not np.any(f.mu_nodes == 0)
    assert np.sum(f.mu_weights) == pytest.approx(2.0, rel=1e-14)
    assert f.c_nodes.max() < 40.0 and f.c_nodes.min() > 0


@pytest.mark.parametrize("gamma", [3.0, 5.0])
def test_speed_quadrature_resolves_moments(gamma):
    from kapitsa.moments import g_kernel
    c, w = speed_quadrature(48, 40.0)
    for n in (gamma + 3, gamma + 4):
        assert np.sum(w * c**n * g_kernel(c)) == pytest.approx(moment(n), rel=1e-8)


def test_slab_edges():
    grid = HalfspaceGrid()
    e = slab_edges(grid)
    assert e[0] == 0.0 and e[-1] == grid.L
    assert np.all(np.diff(e) > 0)
    assert e[1] == pytest.approx(grid.dx0)
    assert np.max(np.diff(e)) <= 1.5 * grid.dx_max


def test_grid_validation():
    with pytest.raises(DomainError):
        HalfspaceGrid(n_c=3)
    with pytest.raises(DomainError):
        HalfspaceGrid(L=-1.0)
    r = HalfspaceGrid().refined()
    assert r.n_mu == 32 and r.n_c == 48


# -- manufactured solutions ---------------------------------------------------

@pytest.mark.parametrize("gamma", [3.0, 4.0])
@pytest.mark.parametrize("q", [0.0, 0.5, 0.9])
def test_particular_solutions(gamma, q):
    mu, c = mu_c_mesh()
    p = ModelParams(gamma, q)
    assert interior_residual(mu, p) < 1e-8
    assert interior_residual(c, p) < 1e-8
    assert interior_residual(2.0 * mu - 0.3 * c, p) < 1e-8


def test_non_solution_detected():
    mu, c = mu_c_mesh()
    assert interior_residual(mu * mu, ModelParams(3.0)) > 1e-3


def _manufactured(fld, h_mu_c):
    h = np.broadcast_to(h_mu_c, fld.h.shape).copy()
    return dataclasses.replace(fld, h=h)


def test_temperature_of_manufactured_fields(field_q09):
    mu, c = mu_c_mesh()
    eps = 0.37
    tp = temperature_profile(_manufactured(field_q09, -eps * c))
    np.testing.assert_allclose(tp, -eps, rtol=1e-8)
    tp = temperature_profile(_manufactured(field_q09, mu))
    np.testing.assert_allclose(tp, 0.0, atol=1e-12)
    w = w_moments(_manufactured(field_q09, mu))
    # W1 of h = mu is the discrete 2 G3 / 3
    np.testing.assert_allclose(w.w1, 2.0 * field_q09.G3 / 3.0, rtol=1e-12)


def test_discrete_normalisations_close_to_moments(field_q09):
    assert field_q09.G3 == pytest.approx(moment(6.0), rel=1e-4)
    assert field_q09.G4 == pytest.approx(moment(7.0), rel=1e-4)


# -- solver properties --------------------------------------------------------

def test_zero_flux_gives_zero_field():
    fld = solve_halfspace(ModelParams(3.0, 0.5), 0.0, alpha=0.0)
    assert not np.any(fld.h)
    fld = solve_halfspace(ModelParams(3.0, 0.5), 0.0)
    assert np.max(np.abs(fld.h)) == 0.0


def test_specular_wall_stagnates():
    with pytest.raises(ConvergenceError) as exc:
        solve_halfspace(ModelParams(3.0, 0.5), 1.0, q_override=1.0)
    assert len(exc.value.history) > 0


def test_boundary_condition(field_q09):
    assert field_q09.boundary_residual() < 1e-10
    assert field_q09.diagnostics["sweep_residual"] < 1e-10


def test_flux_constant(field_q05):
    flux = heat_flux_profile(field_q05)
    assert np.max(np.abs(flux - flux.mean())) / abs(flux.mean()) < 5e-3


def test_far_field_is_flat(field_q09):
    tp = temperature_profile(field_q09)
    x = field_q09.x_nodes
    sel = (x > 0.4 * field_q09.grid.L) & (x < 0.8 * field_q09.grid.L)
    assert np.ptp(tp[sel]) < 1e-3 * abs(tp[sel].mean())


def test_slope_check_raises(field_q09):
    with pytest.raises(GridError):
        extract_temperature_jump(field_q09, slope_rtol=0.0)


def test_unconverged_field_rejected(field_q09):
    with pytest.raises(ConvergenceError):
        temperature_profile(dataclasses.replace(field_q09, converged=False))


def test_linear_in_b_plus(field_q09):
    f2 = solve_halfspace(ModelParams(3.0, 0.9), 2.0)
    r1, r2 = extract_temperature_jump(field_q09), extract_temperature_jump(f2)
    assert r2["plateau"] == pytest.approx(2 * r1["plateau"], rel=1e-10)
    assert r2["epsilon_T"] == pytest.approx(r1["epsilon_T"], rel=1e-10)


def test_measured_jump_value(field_q09):
    # recorded value of the default-resolution run
    assert extract_temperature_jump(field_q09)["epsilon_T"] == pytest.approx(3.5469, rel=1e-3)


def test_specular_trend():
    eps = {q: _eps(3.0, q) for q in (0.8, 0.9, 0.95)}
    assert eps[0.95] / eps[0.9] == pytest.approx((1.95 / 0.05) / (1.9 / 0.1), rel=0.1)
    scaled = np.array([eps[q] * (1 - q) for q in eps])
    assert np.ptp(scaled) / scaled.mean() < 0.1


@pytest.mark.slow
def test_grid_refinement_and_slab_length(field_q09):
    base = extract_temperature_jump(field_q09)["epsilon_T"]
    fine = _eps(3.0, 0.9, HalfspaceGrid().refined())
    longer = _eps(3.0, 0.9, HalfspaceGrid(L=40.0))
    assert abs(fine - base) / base < 1e-2
    assert abs(longer - base) / base < 1e-2


@pytest.mark.parametrize("q", [0.5, 0.9])
def test_agrees_with_series_at_gamma_zero(q):
    # at gamma = 0 the two-term series and the slab solver are independent routes
    p = _params(0.0, q)
    series = epsilon_T(p, orders=2).epsilon_T
    assert _eps(0.0, q) == pytest.approx(series, rel=1e-3)
