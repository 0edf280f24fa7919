"""Dense matrix helpers and the Liouville-space conventions used everywhere else.

Density matrices are vectorized by stacking columns, so that

    vec(A @ X @ B) == kron(B.T, A) @ vec(X)

All generators act on these column-stacked vectors.
"""

from __future__ import annotations

import numpy as np

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
POSITIVITY_TOL = 1e-9


def vectorize(rho):
    """Column-stack a square matrix into a 1-D complex vector."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.reshape(-1, order="F").astype(complex, copy=True)


def devectorize(vec, dim=None):
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec)
    if dim is None:
        dim = int(round(np.sqrt(vec.shape[-1])))
    if dim * dim != vec.shape[-1]:
        raise ValueError(f"vector of length {vec.shape[-1]} is not a vectorized square matrix")
    if vec.ndim == 1:
        return vec.reshape(dim, dim, order="F").copy()
    # stacked vectors, shape (..., dim**2)
    return np.swapaxes(vec.reshape(vec.shape[:-1] + (dim, dim)), -1, -2).copy()


def _square(a, name="A"):
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{name} must be square, got shape {a.shape}")
    return a


def left_mult_superop(a):
    """Superoperator of X -> A @ X."""
    a = _square(a)
    return np.kron(np.eye(a.shape[0]), a)


def right_mult_superop(a):
    """Superoperator of X -> X @ A."""
    a = _square(a)
    return np.kron(a.T, np.eye(a.shape[0]))


def sandwich_superop(a, b=None):
    """Superoperator of X -> A @ X @ B (B defaults to A^dagger)."""
    a = _square(a)
    b = a.conj().T if b is None else _square(b, "B")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return np.kron(b.T, a)


def commutator_superop(h):
    """Superoperator of X -> -i [H, X]."""
    return -1j * (left_mult_superop(h) - right_mult_superop(h))


def trace_functional(dim):
    """Row vector t with t @ vec(X) == trace(X)."""
    return vectorize(np.eye(dim))


def apply_superop(superop, x):
    """Apply a Liouville-space matrix to an operator and return an operator."""
    x = _square(x, "X")
    return devectorize(superop @ vectorize(x), x.shape[0])


def is_hermitian(m, tol=1e-8):
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= tol


def eig_hermitian(m, tol=1e-8):
    """Eigen-decomposition of a Hermitian matrix.

    Parameters
    ----------
    m : array_like, shape (n, n)
        Matrix that must be Hermitian to within ``tol`` (absolute, max entry).

    Returns
    -------
    eigenvalues : ndarray of float, ascending
    eigenvectors : ndarray, columns are the normalized eigenvectors
    """
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m, tol):
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(0.5 * (m + m.conj().T))


def check_density_matrix(rho, herm_tol=HERMITIAN_TOL, trace_tol=TRACE_TOL, psd_tol=POSITIVITY_TOL):
    """Validate a density matrix and return it as a complex array.

    Raises ``ValueError`` naming the first violated property.
    """
    rho = _square(rho, "rho")
    herm_err = np.max(np.abs(rho - rho.conj().T), initial=0.0)
    if herm_err > herm_tol:
        raise ValueError(f"density matrix not Hermitian (max deviation {herm_err:.3g})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > trace_tol:
        raise ValueError(f"density matrix trace is {tr.real:.12g}, expected 1")
    lam_min = np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0]
    if lam_min < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lam_min:.3g}")
    return rho


def pure_state(index_or_vector, dim=None):
    """Projector onto a basis state (given an index) or onto a normalized vector."""
    if np.isscalar(index_or_vector):
        if dim is None:
            raise ValueError("dim is required when building a basis projector")
        psi = np.zeros(dim, dtype=complex)
        psi[int(index_or_vector)] = 1.0
    else:
        psi = np.asarray(index_or_vector, dtype=complex)
        psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


def random_density_matrix(dim, rng=None, rank=None):
    """Random full-rank (or given rank) density matrix, Hilbert-Schmidt-like."""
    rng = np.random.default_rng(rng)
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def trace_distance(rho, sigma):
    """Half the trace norm of ``rho - sigma``."""
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def hermitian_basis(dim):
    """Unitary T whose columns are vec(B_k) for an orthonormal Hermitian basis B_k.

    Column i + j*dim holds E_ii for i == j, (E_ij + E_ji)/sqrt2 for i < j and
    i(E_ij - E_ji)/sqrt2 for i > j, so population coordinates keep the same
    positions as in the column-stacked vector. A Hermiticity-preserving generator
    becomes a real matrix in this basis.
    """
    n = dim * dim
    T = np.zeros((n, n), dtype=complex)
    s = 1.0 / np.sqrt(2.0)
    for j in range(dim):
        for i in range(dim):
            b = np.zeros((dim, dim), dtype=complex)
            if i == j:
                b[i, i] = 1.0
            elif i < j:
                b[i, j] = b[j, i] = s
            else:
                b[i, j], b[j, i] = 1j * s, -1j * s
            T[:, i + j * dim] = vectorize(b)
    return T


def to_real_superop(superop):
    """Real representation T^dagger L T (see :func:`hermitian_basis`); works on stacks."""
    superop = np.asarray(superop, dtype=complex)
    dim = int(round(np.sqrt(superop.shape[-1])))
    T = hermitian_basis(dim)
    return np.real(T.conj().T @ superop @ T)


def from_real_superop(real_superop):
    real_superop = np.asarray(real_superop, dtype=float)
    dim = int(round(np.sqrt(real_superop.shape[-1])))
    T = hermitian_basis(dim)
    return T @ real_superop @ T.conj().T
