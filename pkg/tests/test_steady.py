import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from darkfluor.atom import FourLevelParams, excited_projector_4level
from darkfluor.master import JumpOperator, assemble_liouvillian, evolve, liouvillian
from darkfluor.quantum import to_real_superop
from darkfluor.steady import (
    SteadyStateError,
    excited_population,
    omega2_max,
    omega2_max_low_field,
    pe_analytic,
    replacement_row,
    solve_stationary,
    stationary_populations,
    steady_state,
)

E4 = excited_projector_4level()


def _two_level(omega, delta, gamma):
    # basis (g, e); ground carries +delta in the rotating frame
    h = np.array([[delta, omega / 2], [omega / 2, 0]], dtype=complex)
    return assemble_liouvillian(h, [JumpOperator(np.array([[0, 1], [0, 0]]), gamma)])


@pytest.mark.parametrize("omega,delta", [(0.5, 0.0), (1.0, 0.7), (3.0, -2.0)])
def test_two_level_textbook(omega, delta):
    gamma = 1.0
    L = _two_level(omega, delta, gamma)
    proj = np.diag([0, 1]).astype(complex)
    res = steady_state(L, proj)
    expected = (omega**2 / 4) / (delta**2 + omega**2 / 2 + gamma**2 / 4)
    assert res.p_e == pytest.approx(expected, rel=1e-12)
    rho = evolve(np.diag([1, 0]).astype(complex), L, 60.0, gamma_ref=gamma)
    assert rho[1, 1].real == pytest.approx(expected, abs=1e-8)


def test_four_level_matches_closed_form_on_grid():
    gt = 1.0
    for o, d, dl in itertools.product(np.linspace(0.1, 3, 5), np.linspace(0.02, 1, 5), np.linspace(-2, 2, 5)):
        p = FourLevelParams.from_total(o, dl, d, gt, gamma_s=0.3)
        res = steady_state(liouvillian(p), E4)
        assert not res.degenerate
        assert res.p_e == pytest.approx(pe_analytic(p), rel=1e-8)


def test_zero_field_is_degenerate():
    p = FourLevelParams.from_total(1.0, 0.0, 0.0, 1.0)
    res = steady_state(liouvillian(p), E4)
    assert res.degenerate
    assert res.nullspace_dim > 1
    assert 0.0 <= res.p_e <= 1.0


def test_result_invariants():
    p = FourLevelParams.from_total(1.3, 0.4, 0.2, 1.0, 0.5)
    L = liouvillian(p)
    res = steady_state(L, E4)
    assert res.residual <= 1e-8 * np.linalg.norm(L, 2)
    assert np.trace(res.rho).real == pytest.approx(1.0)
    assert res.populations.min() >= 0
    assert res.nullspace_dim == 1


def test_steady_state_errors():
    with pytest.raises(SteadyStateError):
        steady_state(np.zeros((16, 16)), E4)
    with pytest.raises(ValueError):
        steady_state(np.zeros((15, 15)), E4)
    with pytest.raises(ValueError):
        steady_state(np.eye(16), np.eye(3))


def test_replacement_row_is_a_population_row():
    L = liouvillian(FourLevelParams.from_total(1.0, 0.0, 0.3, 1.0))
    assert replacement_row(L) in {0, 5, 10, 15}


def test_batched_solver_matches_single():
    ps = [FourLevelParams.from_total(o, 0.2, 0.3, 1.0, 0.4) for o in (0.2, 0.9, 2.5)]
    Ls = np.array([liouvillian(p) for p in ps])
    single = [steady_state(L, E4).p_e for L in Ls]
    assert np.allclose(stationary_populations(Ls, E4), single, rtol=1e-10)
    assert np.allclose(stationary_populations(to_real_superop(Ls), E4), single, rtol=1e-10)
    v = solve_stationary(Ls)
    assert v.shape == (3, 16)


def test_batched_solver_flags_degenerate_points():
    ps = [FourLevelParams.from_total(1.0, 0.0, d, 1.0) for d in (0.0, 0.3)]
    Ls = to_real_superop(np.array([liouvillian(p) for p in ps]))
    p, flags = stationary_populations(Ls, E4, diagnostics=True)
    assert flags.tolist() == [True, False]
    assert np.all((p >= 0) & (p <= 1))


# -- closed forms --------------------------------------------------------------


def test_pe_analytic_examples():
    p = FourLevelParams.from_total(1.0, 0.0, 1.0, 1.0)
    assert pe_analytic(p) == pytest.approx(6 / 31, rel=1e-14)
    value, limit = pe_analytic(FourLevelParams.from_total(0.0, 0.0, 1.0, 1.0), full_output=True)
    assert value == 0 and limit
    value, limit = pe_analytic(FourLevelParams.from_total(1.0, 0.0, 0.0, 1.0), full_output=True)
    assert value == 0 and limit
    assert pe_analytic(FourLevelParams.from_total(1e-6, 0.0, 1.0, 1.0)) < 1e-11


def test_pe_analytic_requires_equal_branching():
    with pytest.raises(ValueError):
        pe_analytic(FourLevelParams(1.0, 0.0, 1.0, (0.1, 0.2, 0.3)))
    with pytest.raises(ValueError):
        excited_population(1.0, 0.0, 1.0, 0.0, 0.0)


def test_omega2_max_examples():
    assert omega2_max(0.0, 0.3, 1.0) == 0.0
    assert omega2_max(0.1, 0.0, 1.0) == pytest.approx(0.08273, abs=5e-6)
    assert omega2_max_low_field(0.1, 0.0, 1.0) == pytest.approx(np.sqrt(2 / 3) * 0.1)
    with pytest.raises(ValueError):
        omega2_max(0.1, 0.0, 0.0)


@settings(max_examples=25, deadline=None)
@given(d=st.floats(0.01, 1.0), dl=st.floats(-2.0, 2.0))
def test_omega2_max_is_argmax_of_closed_form(d, dl):
    target = omega2_max(d, dl, 1.0)
    grid = np.geomspace(target / 10, target * 10, 2001)
    p = excited_population(np.sqrt(grid), dl, d, 1.0, 0.0)
    i = int(np.argmax(p))
    assert grid[max(i - 1, 0)] <= target <= grid[min(i + 1, len(grid) - 1)]


@settings(max_examples=25, deadline=None)
@given(o=st.floats(0.05, 3), d=st.floats(0.01, 1), dl=st.floats(-3, 3), gs=st.floats(0, 0.9))
def test_even_in_detuning_and_field(o, d, dl, gs):
    pa = lambda dz, dd: pe_analytic(FourLevelParams.from_total(o, dd, dz, 1.0, gs))  # noqa: E731
    base = pa(d, dl)
    assert pa(-d, dl) == pytest.approx(base, rel=1e-14)
    assert pa(d, -dl) == pytest.approx(base, rel=1e-14)
    num = lambda dz, dd: steady_state(liouvillian(FourLevelParams.from_total(o, dd, dz, 1.0, gs)), E4).p_e  # noqa: E731
    assert num(-d, -dl) == pytest.approx(num(d, dl), rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(o=st.floats(0.05, 3), d=st.floats(0.01, 1), gs=st.floats(0, 0.9))
def test_large_detuning_law(o, d, gs):
    dl = 0.5 * np.sqrt(1e3 * (1.0 + 3 * o**4 / d**2))
    ratio = pe_analytic(FourLevelParams.from_total(o, 2 * dl, d, 1.0, gs)) / pe_analytic(
        FourLevelParams.from_total(o, dl, d, 1.0, gs)
    )
    assert 0.2475 <= ratio <= 0.2525


def _half_width(d, o=0.5):
    dl = np.linspace(0, 200, 40001)
    p = excited_population(o, dl, d, 1.0, 0.0)
    return dl[np.argmax(p < p[0] / 2)]


def test_low_field_widens_detuning_profile():
    widths = [_half_width(d) for d in (0.3, 0.03, 0.003)]
    assert widths[0] < widths[1] < widths[2]
