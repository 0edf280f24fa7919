"""Dissipators, Liouvillian assembly and fixed-step time evolution."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .atom import dipole_coefficients
from .quantum import (
    commutator_superop,
    devectorize,
    left_mult_superop,
    right_mult_superop,
    sandwich_superop,
    vectorize,
)

logger = logging.getLogger(__name__)


class IntegrationError(RuntimeError):
    """Raised when the integrator drifts away from a trace-one state."""


@dataclass(frozen=True)
class JumpOperator:
    """Lindblad jump operator ``sqrt(rate) * matrix``."""

    matrix: np.ndarray
    rate: float

    def __post_init__(self):
        if self.rate < 0:
            raise ValueError(f"jump rate must be >= 0, got {self.rate}")
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("jump operator matrix must be square")
        object.__setattr__(self, "matrix", m)

    @property
    def operator(self):
        return np.sqrt(self.rate) * self.matrix


def _ket_bra(i, j, dim):
    m = np.zeros((dim, dim), dtype=complex)
    m[i, j] = 1.0
    return m


def dissipator_4level(p):
    """Superoperator of the 4-level decay term.

    Implements
        -(G_T/2){|e><e|, rho} + sum_m G_m |m><e| rho |e><m| + G_S |e><e| rho |e><e|
    with G_T = G_S + sum_m G_m, basis (m=-1, 0, +1, e).
    """
    gammas = (*p.gamma_m, p.gamma_s)
    if min(gammas) < 0:
        raise ValueError("decay rates must be >= 0")
    e = 3
    pe = _ket_bra(e, e, 4)
    out = -0.5 * p.gamma_t * (left_mult_superop(pe) + right_mult_superop(pe))
    for m, g in enumerate(p.gamma_m):
        out += g * sandwich_superop(_ket_bra(m, e, 4))
    out += p.gamma_s * sandwich_superop(pe)
    return out


def jump_operators_4level(p):
    """Jump-operator form of :func:`dissipator_4level`."""
    e = 3
    jumps = [JumpOperator(_ket_bra(m, e, 4), g) for m, g in enumerate(p.gamma_m)]
    jumps.append(JumpOperator(_ket_bra(e, e, 4), p.gamma_s))
    return jumps


def jump_operators_8level(p):
    """Six jump operators: one per decay channel (P->S, P->D) and photon polarization q.

    The branching amplitudes are Clebsch-Gordan coefficients, which already sum
    (in square) to one over all final sublevels for each P sublevel.
    """
    scheme = p.scheme
    dim = scheme.dim
    upper = scheme.manifold("P1/2")
    jumps = []
    for lower_label, rate in (("S1/2", p.gamma_sp), ("D3/2", p.gamma_dp)):
        if rate <= 0:
            raise ValueError("decay rates must be > 0")
        lower = scheme.manifold(lower_label)
        table = dipole_coefficients(lower.J, upper.J)
        for q in (-1, 0, 1):
            c_op = np.zeros((dim, dim), dtype=complex)
            for (m, qq), c in table.items():
                if qq == q:
                    c_op[scheme.index(lower_label, m), scheme.index("P1/2", m + q)] = c
            jumps.append(JumpOperator(c_op, rate))
    return jumps


def lindblad_dissipator(jumps, dim):
    """Superoperator of sum_k (C rho C^dag - 1/2 {C^dag C, rho})."""
    out = np.zeros((dim * dim, dim * dim), dtype=complex)
    for jump in jumps:
        c = jump.operator
        if c.shape != (dim, dim):
            raise ValueError(f"jump operator has shape {c.shape}, system dimension is {dim}")
        cdc = c.conj().T @ c
        out += sandwich_superop(c) - 0.5 * (left_mult_superop(cdc) + right_mult_superop(cdc))
    return out


def assemble_liouvillian(h, jumps=None, dissipator=None):
    """Generator L with d vec(rho)/dt = L vec(rho).

    Pass either a list of :class:`JumpOperator` or a precomputed dissipator
    superoperator (or neither for purely coherent evolution).
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValueError("Hamiltonian must be square")
    dim = h.shape[0]
    out = commutator_superop(h)
    if jumps is not None and dissipator is not None:
        raise ValueError("give either jumps or dissipator, not both")
    if jumps is not None:
        out = out + lindblad_dissipator(jumps, dim)
    if dissipator is not None:
        dissipator = np.asarray(dissipator, dtype=complex)
        if dissipator.shape != out.shape:
            raise ValueError(f"dissipator shape {dissipator.shape} does not match {out.shape}")
        out = out + dissipator
    return out


def liouvillian_4level(p):
    from .atom import build_h4

    return assemble_liouvillian(build_h4(p), dissipator=dissipator_4level(p))


def liouvillian_8level(p):
    from .atom import build_h8

    return assemble_liouvillian(build_h8(p), jumps=jump_operators_8level(p))


def liouvillian(p):
    """Liouvillian for either parameter type."""
    from .atom import EightLevelParams, FourLevelParams

    if isinstance(p, FourLevelParams):
        return liouvillian_4level(p)
    if isinstance(p, EightLevelParams):
        return liouvillian_8level(p)
    raise TypeError(f"unsupported parameter type {type(p).__name__}")


def rk4_propagator(L, dt):
    """One classical RK4 step for a constant linear generator, as a matrix."""
    n = L.shape[0]
    hl = dt * L
    hl2 = hl @ hl
    return np.eye(n) + hl + hl2 / 2 + hl2 @ hl / 6 + hl2 @ hl2 / 24


def evolve(rho0, L, t_final, dt=None, gamma_ref=None, full_output=False):
    """Integrate d vec(rho)/dt = L vec(rho) with fixed-step RK4.

    After every step the state is re-Hermitized and renormalized to unit trace;
    the largest corrections applied are returned in ``info`` when ``full_output``.

    Parameters
    ----------
    rho0 : (N, N) array
    L : (N^2, N^2) array
    t_final : float
        Seconds (or whatever inverse unit ``L`` is in).
    dt : float, optional
        Step size. Defaults to ``0.01 / gamma_ref``; ``gamma_ref`` defaults to the
        spectral norm of ``L``.
    """
    rho0 = np.asarray(rho0, dtype=complex)
    dim = rho0.shape[0]
    L = np.asarray(L, dtype=complex)
    if L.shape != (dim * dim, dim * dim):
        raise ValueError(f"Liouvillian shape {L.shape} does not match state dimension {dim}")
    if t_final < 0:
        raise ValueError("t_final must be >= 0")
    if dt is None:
        ref = gamma_ref if gamma_ref is not None else np.linalg.norm(L, 2)
        dt = 0.01 / ref if ref > 0 else max(t_final, 1.0)
    if dt <= 0:
        raise ValueError("dt must be > 0")

    n_steps = int(np.ceil(t_final / dt - 1e-12)) if t_final > 0 else 0
    info = {"steps": n_steps, "dt": 0.0, "max_hermitian_correction": 0.0, "max_trace_correction": 0.0}
    if n_steps == 0:
        return (rho0.copy(), info) if full_output else rho0.copy()
    h = t_final / n_steps
    info["dt"] = h
    prop = rk4_propagator(L, h)

    v = vectorize(rho0)
    idx_diag = np.arange(dim) * (dim + 1)
    for _ in range(n_steps):
        v = prop @ v
        rho = v.reshape(dim, dim, order="F")
        herm = 0.5 * (rho + rho.conj().T)
        info["max_hermitian_correction"] = max(info["max_hermitian_correction"], float(np.max(np.abs(herm - rho))))
        tr = np.sum(v[idx_diag]).real
        drift = abs(tr - 1.0)
        if drift > 1e-3 or not np.isfinite(tr):
            raise IntegrationError(f"trace drifted to {tr:.6g}; reduce dt (currently {h:.3g})")
        info["max_trace_correction"] = max(info["max_trace_correction"], drift)
        v = vectorize(herm / tr)
    rho = devectorize(v, dim)
    if info["max_hermitian_correction"] > 1e-10 or info["max_trace_correction"] > 1e-10:
        logger.debug("evolve corrections: %s", info)
    return (rho, info) if full_output else rho
