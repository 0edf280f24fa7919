"""Stationary states of Liouvillians and the closed-form 4-level results."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quantum import devectorize, from_real_superop, hermitian_basis, trace_functional

RANK_RTOL = 1e-10
RESIDUAL_RTOL = 1e-8
NEGATIVE_POP_TOL = 1e-7


class SteadyStateError(RuntimeError):
    pass


@dataclass
class SteadyStateResult:
    rho: np.ndarray
    p_e: float
    residual: float
    nullspace_dim: int
    degenerate: bool

    @property
    def populations(self):
        return np.real(np.diag(self.rho))


def _population_rows(dim):
    return np.arange(dim) * (dim + 1)


def replacement_row(L):
    """Index of the population row replaced by the trace condition.

    The population equations are linearly dependent (their sum vanishes for a
    trace-preserving generator), so the trace row must replace one of them; the
    one with the largest diagonal magnitude is used.
    """
    dim = int(round(np.sqrt(L.shape[-1])))
    rows = _population_rows(dim)
    diag = np.abs(np.diagonal(L, axis1=-2, axis2=-1)[..., rows])
    return rows[np.argmax(diag, axis=-1)]


def solve_stationary(L):
    """Row-replacement solve of L v = 0, tr v = 1.

    ``L`` may be a single generator of shape (n, n) or a stack (k, n, n), either
    complex (column-stacked vectors) or real (the Hermitian basis of
    :func:`~darkfluor.quantum.hermitian_basis`); the trace functional is the same
    in both. Returns the solution vectors with the same leading shape. Raises
    ``numpy.linalg.LinAlgError`` when the bordered matrix is exactly singular.
    """
    L = np.asarray(L)
    if not np.iscomplexobj(L):
        L = L.astype(float)
    single = L.ndim == 2
    Ls = L[None] if single else L
    k, n, _ = Ls.shape
    dim = int(round(np.sqrt(n)))
    rows = replacement_row(Ls)
    A = Ls.copy()
    A[np.arange(k), rows, :] = np.real(trace_functional(dim))
    b = np.zeros((k, n), dtype=A.dtype)
    b[np.arange(k), rows] = 1.0
    v = np.linalg.solve(A, b[..., None])[..., 0]
    return v[0] if single else v


def _min_norm_stationary(L):
    n = L.shape[0]
    dim = int(round(np.sqrt(n)))
    A = np.vstack([L, trace_functional(dim)[None, :]])
    b = np.zeros(n + 1, dtype=complex)
    b[-1] = 1.0
    v, *_ = np.linalg.lstsq(A, b, rcond=None)
    return v


def nullspace_dimension(L, rtol=RANK_RTOL):
    """Number of singular values below ``rtol * sigma_max`` (works on stacks)."""
    s = np.linalg.svd(np.asarray(L), compute_uv=False)
    smax = s[..., :1]
    return np.sum(s < rtol * smax, axis=-1)


def steady_state(L, excited_projector):
    """Stationary state of ``L`` and its population in ``excited_projector``.

    Non-degenerate generators are solved by replacing one population equation
    with the trace condition. When the stationary space is more than one
    dimensional (for example the 4-level model without a magnetic field), the
    minimum-norm stationary state is returned and ``degenerate`` is set.
    """
    L = np.asarray(L, dtype=complex)
    n = L.shape[0]
    dim = int(round(np.sqrt(n)))
    if L.shape != (n, n) or dim * dim != n:
        raise ValueError(f"Liouvillian must be square with size N^2, got {L.shape}")
    projector = np.asarray(excited_projector, dtype=complex)
    if projector.shape != (dim, dim):
        raise ValueError("projector dimension does not match the Liouvillian")
    norm_L = np.linalg.norm(L, 2)
    if norm_L == 0:
        raise SteadyStateError("Liouvillian is identically zero; every state is stationary")

    null_dim = int(nullspace_dimension(L))
    degenerate = null_dim > 1
    v = None
    if not degenerate:
        try:
            v = solve_stationary(L)
        except np.linalg.LinAlgError:
            degenerate = True
    if degenerate:
        v = _min_norm_stationary(L)

    rho = devectorize(v, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho = rho / np.trace(rho).real
    residual = float(np.linalg.norm(L @ v))
    pops = np.real(np.diag(rho))
    if pops.min() < -NEGATIVE_POP_TOL:
        raise SteadyStateError(f"non-physical stationary state (population {pops.min():.3g})")
    p_e = float(np.clip(np.real(np.trace(projector @ rho)), 0.0, 1.0))
    return SteadyStateResult(rho=rho, p_e=p_e, residual=residual, nullspace_dim=null_dim, degenerate=degenerate)


def stationary_populations(Ls, excited_projector, diagnostics=False):
    """Excited-state populations for a stack of generators.

    ``Ls`` is a complex stack or a real one in the Hermitian basis. Returns ``p``
    (and, with ``diagnostics``, a boolean array flagging degenerate or singular
    points). Flagged points fall back to :func:`steady_state`.
    """
    Ls = np.asarray(Ls)
    real = not np.iscomplexobj(Ls)
    k, n, _ = Ls.shape
    dim = int(round(np.sqrt(n)))
    proj = np.asarray(excited_projector, dtype=complex)
    # tr(P rho) = vec(P^T) . vec(rho)
    weights = proj.T.reshape(-1, order="F")
    if real:
        weights = np.real(hermitian_basis(dim).T @ weights)
    pop_idx = np.arange(dim) * (dim + 1)
    flags = np.zeros(k, dtype=bool)
    if diagnostics:
        flags = nullspace_dimension(Ls) > 1
    p = np.empty(k)
    good = np.flatnonzero(~flags)
    if good.size:
        try:
            v = solve_stationary(Ls[good])
            p[good] = np.real(v @ weights) / np.real(v[:, pop_idx].sum(axis=1))
        except np.linalg.LinAlgError:
            for i in good:
                try:
                    v = solve_stationary(Ls[i])
                    p[i] = np.real(v @ weights)
                except np.linalg.LinAlgError:
                    flags[i] = True
    for i in np.flatnonzero(flags):
        L = from_real_superop(Ls[i]) if real else Ls[i]
        p[i] = steady_state(L, proj).p_e
    p = np.clip(p, 0.0, 1.0)
    return (p, flags) if diagnostics else p


# ---------------------------------------------------------------------------
# closed-form 4-level results (equal branching Gamma_m = Gamma_D / 3)
# ---------------------------------------------------------------------------


def excited_population(omega, delta_laser, delta_zeeman, gamma_d, gamma_s):
    """Closed-form excited population of the 4-level model (vectorized).

    Returns 0 where ``omega`` or ``delta_zeeman`` vanish (the limits of the formula).
    """
    omega = np.asarray(omega, dtype=float)
    delta_laser = np.asarray(delta_laser, dtype=float)
    delta_zeeman = np.asarray(delta_zeeman, dtype=float)
    gamma_t = gamma_d + gamma_s
    if gamma_t <= 0:
        raise ValueError("total decay rate must be > 0")
    o2 = omega**2
    d2 = delta_zeeman**2
    limit = (o2 == 0) | (d2 == 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = (gamma_d / gamma_t) * ((gamma_t**2 + 4 * delta_laser**2 + 8 * d2 / 3) / o2 + 1.5 * o2 / d2)
        inv = inv + 4 * gamma_s / gamma_t
        out = np.where(limit, 0.0, 1.0 / inv)
    return out if out.ndim else float(out)


def pe_analytic(p, full_output=False):
    """Closed-form excited population for :class:`FourLevelParams`.

    Requires equal branching into the three ground sublevels. With
    ``full_output`` also returns a flag telling whether the zero-field or
    zero-drive limit (value 0) was taken.
    """
    gm = np.asarray(p.gamma_m, dtype=float)
    if not np.allclose(gm, gm.mean(), rtol=1e-12, atol=0.0):
        raise ValueError("closed form requires equal branching gamma_m")
    if p.gamma_t <= 0:
        raise ValueError("total decay rate must be > 0")
    at_limit = p.omega == 0 or p.delta_zeeman == 0
    value = float(excited_population(p.omega, p.delta_laser, p.delta_zeeman, p.gamma_d, p.gamma_s))
    return (value, at_limit) if full_output else value


def omega2_max(delta_zeeman, detuning, gamma_t):
    """Squared Rabi frequency of maximum fluorescence (rad^2/s^2)."""
    if gamma_t <= 0:
        raise ValueError("gamma_t must be > 0")
    d = np.abs(np.asarray(delta_zeeman, dtype=float))
    out = np.sqrt(2.0 / 3.0) * d * np.sqrt(gamma_t**2 + 4 * np.asarray(detuning) ** 2 + 8 * d**2 / 3)
    return out if np.ndim(out) else float(out)


def omega2_max_low_field(delta_zeeman, detuning, gamma_t):
    """Weak-field form of :func:`omega2_max`, dropping the delta^2 term."""
    if gamma_t <= 0:
        raise ValueError("gamma_t must be > 0")
    d = np.abs(np.asarray(delta_zeeman, dtype=float))
    out = np.sqrt(2.0 / 3.0) * d * np.sqrt(gamma_t**2 + 4 * np.asarray(detuning) ** 2)
    return out if np.ndim(out) else float(out)
