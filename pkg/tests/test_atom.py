import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sympy import Rational
from sympy.physics.quantum.cg import CG

from darkfluor.atom import (
    MU_B_OVER_H,
    EightLevelParams,
    FourLevelParams,
    LaserDrive,
    MagneticField,
    Manifold,
    bright_state_4level,
    build_h4,
    build_h8,
    calcium_scheme,
    clebsch_gordan,
    dark_states_4level,
    field_for_larmor,
    larmor_splitting,
    linear_perp_polarization,
    mhz_to_angular,
    pi_polarization,
    polarization_from_name,
    sigma_polarization,
    zeeman_diagonal,
)

HALF_INTS = [Fraction(k, 2) for k in range(0, 4)]  # 0 .. 3/2


def _eight(**kw):
    base = dict(
        rabi_uv=mhz_to_angular(20.0),
        rabi_ir=mhz_to_angular(3.0),
        detuning_uv=mhz_to_angular(-10.0),
        detuning_ir=mhz_to_angular(2.0),
        b_field=MagneticField(39.0),
        gamma_sp=mhz_to_angular(21.6),
        gamma_dp=mhz_to_angular(1.5),
    )
    base.update(kw)
    return EightLevelParams(**base)


def _projections(j):
    return [-j + k for k in range(int(2 * j) + 1)]


# -- Clebsch-Gordan -----------------------------------------------------------


def test_cg_stretched_and_trivial():
    assert clebsch_gordan(0.5, 0.5, 0.5, 0.5, 1, 1) == pytest.approx(1.0)
    for j in (0.5, 1, 1.5):
        for m in _projections(j):
            assert clebsch_gordan(j, m, 0, 0, j, m) == pytest.approx(1.0)


def test_cg_racah_oracle_value():
    # <1 0; 1 0 | 0 0> = -1/sqrt(3)
    assert clebsch_gordan(1, 0, 1, 0, 0, 0) == pytest.approx(-1 / np.sqrt(3), abs=1e-15)


def test_cg_against_sympy_oracle():
    for j1, j2 in itertools.product(HALF_INTS, repeat=2):
        for J in np.arange(abs(j1 - j2), j1 + j2 + 1):
            J = Fraction(J).limit_denominator(2)
            for m1, m2 in itertools.product(_projections(j1), _projections(j2)):
                M = m1 + m2
                if abs(M) > J:
                    continue
                ref = float(
                    CG(*(Rational(x.numerator, x.denominator) for x in (j1, m1, j2, m2, J, M))).doit()
                )
                assert clebsch_gordan(j1, m1, j2, m2, J, M) == pytest.approx(ref, abs=1e-14)


def test_cg_selection_rules_give_zero():
    assert clebsch_gordan(1, 1, 1, 0, 2, 0) == 0.0  # M != m1 + m2
    assert clebsch_gordan(0.5, 0.5, 0.5, -0.5, 2, 0) == 0.0  # triangle


@pytest.mark.parametrize(
    "args",
    [(0.5, 1.5, 0.5, 0.5, 1, 1), (0.3, 0.3, 0, 0, 0.3, 0.3), (1, 0.5, 1, 0, 1, 0.5), (-1, 0, 1, 0, 0, 0)],
)
def test_cg_invalid_quantum_numbers(args):
    with pytest.raises(ValueError):
        clebsch_gordan(*args)


def _orthogonality_cases():
    for j1, j2 in itertools.product(HALF_INTS, repeat=2):
        Js = [abs(j1 - j2) + k for k in range(int(j1 + j2 - abs(j1 - j2)) + 1)]
        yield j1, j2, Js


@pytest.mark.parametrize("j1,j2,Js", list(_orthogonality_cases()))
def test_cg_orthogonality(j1, j2, Js):
    states = [(J, M) for J in Js for M in _projections(J)]
    for (J, M), (Jp, Mp) in itertools.product(states, repeat=2):
        s = sum(
            clebsch_gordan(j1, m1, j2, m2, J, M) * clebsch_gordan(j1, m1, j2, m2, Jp, Mp)
            for m1 in _projections(j1)
            for m2 in _projections(j2)
            if abs(m1 + m2) <= max(J, Jp)
        )
        assert s == pytest.approx(float(J == Jp and M == Mp), abs=1e-12)


# -- manifolds, fields, polarizations -------------------------------------------


@pytest.mark.parametrize("J", [0, 0.5, 1, 1.5, 2.5])
def test_manifold_sublevels(J):
    man = Manifold("X", J, 1.0)
    assert man.size == int(2 * J + 1)
    assert np.all(np.diff(man.sublevels) == 1)
    assert man.sublevels[0] == -J and man.sublevels[-1] == J


def test_manifold_rejects_bad_J():
    with pytest.raises(ValueError):
        Manifold("X", 0.3, 1.0)


def test_magnetic_field_non_negative():
    with pytest.raises(ValueError):
        MagneticField(-1.0)
    with pytest.raises(ValueError):
        MagneticField(float("nan"))


def test_larmor_splitting_examples():
    assert larmor_splitting(MagneticField(0.0), 0.8) == 0.0
    assert larmor_splitting(78.0, 0.8) == 2 * larmor_splitting(39.0, 0.8)
    hz = larmor_splitting(MagneticField(39.0), 0.8) / (2 * np.pi)
    assert hz == pytest.approx(0.8 * 1.399624604e6 * 0.039, rel=1e-14)
    assert hz == pytest.approx(43.7e3, rel=2e-3)
    assert field_for_larmor(hz, 0.8) == pytest.approx(39.0)


def test_linear_perp_polarization():
    a = linear_perp_polarization()
    assert a[1] == 0
    assert np.sum(np.abs(a) ** 2) == pytest.approx(1.0, abs=1e-12)
    # independent basis change: e_{+1} = -(x + i y)/sqrt2, e_{-1} = (x - i y)/sqrt2
    e_plus = -np.array([1, 1j, 0]) / np.sqrt(2)
    e_minus = np.array([1, -1j, 0]) / np.sqrt(2)
    e_zero = np.array([0, 0, 1])
    x = a[0] * e_minus + a[1] * e_zero + a[2] * e_plus
    assert np.allclose(x, [1, 0, 0])


def test_polarization_names():
    assert np.array_equal(polarization_from_name("PI"), pi_polarization())
    assert np.array_equal(polarization_from_name("sigma+"), sigma_polarization(1))
    with pytest.raises(ValueError):
        polarization_from_name("circular")
    with pytest.raises(ValueError):
        sigma_polarization(0)


def test_laser_drive_checks_norm():
    with pytest.raises(ValueError):
        LaserDrive(("D3/2", "P1/2"), 1.0, 0.0, np.array([1.0, 1.0, 0.0]))
    with pytest.raises(ValueError):
        LaserDrive(("D3/2", "P1/2"), -1.0, 0.0)


# -- 4-level Hamiltonian ---------------------------------------------------------


def test_h4_zero():
    assert np.array_equal(build_h4(FourLevelParams(0.0, 0.0, 0.0)), np.zeros((4, 4)))


def test_h4_transcription():
    h = build_h4(FourLevelParams(2.0, 1.0, 0.5))
    expected = np.array(
        [[0.5, 0, 0, 1.0], [0, 1, 0, 1.0], [0, 0, 1.5, 1.0], [1.0, 1.0, 1.0, 0]],
        dtype=complex,
    )
    assert np.array_equal(h, expected)


@settings(max_examples=30, deadline=None)
@given(omega=st.floats(0, 1e8), delta=st.floats(-1e8, 1e8))
def test_h4_bright_dark_decomposition(omega, delta):
    h = build_h4(FourLevelParams(omega, delta, 0.0))
    e = np.array([0, 0, 0, 1.0])
    b = bright_state_4level()
    assert e @ h @ b == pytest.approx(np.sqrt(3) * omega / 2, rel=1e-12, abs=1e-300)
    dark = dark_states_4level()
    assert np.allclose(dark.conj().T @ dark, np.eye(2))
    assert np.allclose(e @ h @ dark, 0, atol=1e-300)
    assert np.allclose(dark.conj().T @ b, 0)


def test_four_level_params_validation():
    with pytest.raises(ValueError):
        FourLevelParams(-1.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        FourLevelParams(1.0, 0.0, 0.0, (1.0, 1.0))
    with pytest.raises(ValueError):
        FourLevelParams.from_total(1.0, 0.0, 0.0, gamma_t=1.0, gamma_s=2.0)
    p = FourLevelParams.from_total(1.0, 0.0, 0.0, gamma_t=3.0, gamma_s=1.0)
    assert p.gamma_m == pytest.approx((2 / 3,) * 3)
    assert p.gamma_t == pytest.approx(3.0)


# -- 8-level Hamiltonian ---------------------------------------------------------


def test_h8_zero():
    p = _eight(rabi_uv=0.0, rabi_ir=0.0, detuning_uv=0.0, detuning_ir=0.0, b_field=MagneticField(0.0))
    assert np.array_equal(build_h8(p), np.zeros((8, 8)))


def test_h8_basis_order_and_diagonal():
    p = _eight(rabi_uv=0.0, rabi_ir=0.0, b_field=MagneticField(0.0))
    d = np.real(np.diag(build_h8(p)))
    assert np.allclose(d[:2], p.detuning_uv)
    assert np.allclose(d[2:4], 0.0)
    assert np.allclose(d[4:], p.detuning_ir)
    s = calcium_scheme()
    assert [s.index("S1/2", -0.5), s.index("P1/2", 0.5), s.index("D3/2", -1.5), s.index("D3/2", 1.5)] == [0, 3, 4, 7]


@settings(max_examples=30, deadline=None)
@given(b=st.floats(0, 1000), seed=st.integers(0, 2**32 - 1))
def test_h8_hermitian(b, seed):
    rng = np.random.default_rng(seed)
    pol = rng.normal(size=3) + 1j * rng.normal(size=3)
    pol /= np.linalg.norm(pol)
    p = _eight(b_field=MagneticField(b), polarization_ir=pol, polarization_uv=pol[::-1])
    h = build_h8(p)
    assert np.max(np.abs(h - h.conj().T)) <= 1e-12 * np.max(np.abs(h))


def _ir_block(h):
    return h[2:4, 4:8]


def test_h8_selection_rules():
    s = calcium_scheme()
    h_pi = build_h8(_eight(polarization_ir=pi_polarization()))
    h_perp = build_h8(_eight())
    p_m = [m for m in s.manifold("P1/2").sublevels]
    d_m = [m for m in s.manifold("D3/2").sublevels]
    for i, mp in enumerate(p_m):
        for j, md in enumerate(d_m):
            dm = mp - md
            if _ir_block(h_pi)[i, j] != 0:
                assert dm == 0
            if _ir_block(h_perp)[i, j] != 0:
                assert abs(dm) == 1
    assert np.count_nonzero(_ir_block(h_perp)) == 4
    # each D sublevel couples to exactly one P sublevel
    assert np.all(np.count_nonzero(_ir_block(h_perp), axis=0) == 1)


def test_h8_stretched_coupling_is_half_rabi():
    p = _eight(polarization_ir=sigma_polarization(1), polarization_uv=sigma_polarization(1))
    h = build_h8(p)
    s = calcium_scheme()
    # D(-3/2) -> P(-1/2) is a stretched sigma+ transition
    assert abs(h[s.index("P1/2", -0.5), s.index("D3/2", -1.5)]) == pytest.approx(p.rabi_ir / 2)
    # S(-1/2) -> P(+1/2) is the stretched sigma+ transition of the UV channel
    assert abs(h[s.index("P1/2", 0.5), s.index("S1/2", -0.5)]) == pytest.approx(p.rabi_uv / 2)


def test_h8_rejects_unnormalized_polarization():
    with pytest.raises(ValueError):
        build_h8(_eight(polarization_ir=np.array([1.0, 1.0, 0.0])))


def test_h8_zeeman_diagonal_odd_in_field():
    s = calcium_scheme()
    assert np.allclose(zeeman_diagonal(s, -1.7e5), -zeeman_diagonal(s, 1.7e5))
    d = zeeman_diagonal(s, 1.0)
    assert np.allclose(d[4:], 0.8 * np.array([-1.5, -0.5, 0.5, 1.5]))
    assert np.allclose(d[:2], [-1.0, 1.0])


def test_eight_level_params_validation():
    with pytest.raises(ValueError):
        _eight(gamma_dp=0.0)
    with pytest.raises(ValueError):
        _eight(rabi_ir=-1.0)
    p = _eight(b_field=10.0)
    assert p.b_field == MagneticField(10.0)
    assert p.larmor_d == pytest.approx(2 * np.pi * 0.8 * MU_B_OVER_H * 0.01)
