"""Level schemes, Zeeman shifts, polarizations and Hamiltonians.

Two models are provided:

* a 4-level toy system: three ground sublevels m = -1, 0, +1 driven to a single
  excited state with equal couplings;
* the 8-level S1/2 - P1/2 - D3/2 system of a singly ionized alkaline-earth ion
  driven by a UV (S-P) and an IR (D-P) laser.

Hamiltonians are returned in angular-frequency units (hbar = 1), written in a
frame rotating with each laser and with the upper manifold as energy reference.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np

#: Bohr magneton over Planck's constant, Hz per gauss (CODATA 2018).
MU_B_OVER_H = 1.399624604e6

G_S = 2.0
G_P = 2.0 / 3.0
G_D = 4.0 / 5.0

TWO_PI = 2.0 * np.pi


def mhz_to_angular(f_mhz):
    return TWO_PI * 1e6 * np.asarray(f_mhz, dtype=float) if np.ndim(f_mhz) else TWO_PI * 1e6 * float(f_mhz)


def angular_to_mhz(w):
    return np.asarray(w, dtype=float) / (TWO_PI * 1e6) if np.ndim(w) else float(w) / (TWO_PI * 1e6)


# ---------------------------------------------------------------------------
# angular momentum
# ---------------------------------------------------------------------------


def _twice(x, name):
    """Return 2*x as an int, checking that x is an integer or half-integer."""
    t = 2 * x
    ti = int(round(t))
    if abs(t - ti) > 1e-9:
        raise ValueError(f"{name}={x} is not an integer or half-integer")
    return ti


@lru_cache(maxsize=4096)
def _cg_twice(tj1, tm1, tj2, tm2, tJ, tM):
    if tM != tm1 + tm2:
        return 0.0
    if not (abs(tj1 - tj2) <= tJ <= tj1 + tj2) or (tj1 + tj2 + tJ) % 2:
        return 0.0
    f = math.factorial
    # all of the following are integers because of the parity checks above
    a = (tj1 + tj2 - tJ) // 2
    b = (tj1 - tj2 + tJ) // 2
    c = (-tj1 + tj2 + tJ) // 2
    d = (tj1 + tj2 + tJ) // 2 + 1
    pref = Fraction((tJ + 1) * f(a) * f(b) * f(c), f(d))
    pref *= (
        f((tj1 + tm1) // 2) * f((tj1 - tm1) // 2)
        * f((tj2 + tm2) // 2) * f((tj2 - tm2) // 2)
        * f((tJ + tM) // 2) * f((tJ - tM) // 2)
    )
    total = Fraction(0)
    k = 0
    while True:
        args = (
            k,
            a - k,
            (tj1 - tm1) // 2 - k,
            (tj2 + tm2) // 2 - k,
            (tJ - tj2 + tm1) // 2 + k,
            (tJ - tj1 - tm2) // 2 + k,
        )
        if args[1] < 0 or args[2] < 0 or args[3] < 0:
            break
        if args[4] >= 0 and args[5] >= 0:
            denom = 1
            for v in args:
                denom *= f(v)
            total += Fraction((-1) ** k, denom)
        k += 1
    return float(np.sign(total)) * math.sqrt(float(pref * total * total))


def clebsch_gordan(j1, m1, j2, m2, J, M):
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | J M> (Condon-Shortley phase).

    Arguments may be integers or half-integers (as floats or Fractions).
    Returns 0 when the selection rules M = m1 + m2 or the triangle rule fail.
    """
    tj1, tm1 = _twice(j1, "j1"), _twice(m1, "m1")
    tj2, tm2 = _twice(j2, "j2"), _twice(m2, "m2")
    tJ, tM = _twice(J, "J"), _twice(M, "M")
    for tj, tm, name in ((tj1, tm1, "m1"), (tj2, tm2, "m2"), (tJ, tM, "M")):
        if tj < 0:
            raise ValueError("angular momentum must be non-negative")
        if abs(tm) > tj or (tj - tm) % 2:
            raise ValueError(f"{name} is not a valid projection for its angular momentum")
    return _cg_twice(tj1, tm1, tj2, tm2, tJ, tM)


# ---------------------------------------------------------------------------
# level scheme
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Manifold:
    label: str
    J: float
    g_lande: float

    def __post_init__(self):
        _twice(self.J, "J")
        if self.J < 0:
            raise ValueError("J must be non-negative")

    @property
    def sublevels(self):
        """Magnetic quantum numbers from -J to +J."""
        n = int(round(2 * self.J)) + 1
        return tuple(-self.J + k for k in range(n))

    @property
    def size(self):
        return len(self.sublevels)


@dataclass(frozen=True)
class MagneticField:
    """Field magnitude in milligauss along the quantization axis z."""

    magnitude_mG: float

    def __post_init__(self):
        if not self.magnitude_mG >= 0:
            raise ValueError(f"field magnitude must be >= 0 mG, got {self.magnitude_mG}")

    @property
    def gauss(self):
        return self.magnitude_mG * 1e-3


def larmor_splitting(b, g_lande):
    """Zeeman splitting between adjacent sublevels, in rad/s.

    ``b`` is a :class:`MagneticField` or a field in mG.
    """
    b_mg = b.magnitude_mG if isinstance(b, MagneticField) else float(b)
    return TWO_PI * g_lande * MU_B_OVER_H * b_mg * 1e-3


def field_for_larmor(larmor_hz, g_lande=G_D):
    """Field in mG giving a Larmor frequency ``larmor_hz`` (ordinary Hz)."""
    return larmor_hz / (g_lande * MU_B_OVER_H) * 1e3


# ---------------------------------------------------------------------------
# polarization (spherical components a_{-1}, a_0, a_{+1})
# ---------------------------------------------------------------------------


def _normalized(a):
    a = np.asarray(a, dtype=complex)
    if a.shape != (3,):
        raise ValueError("polarization needs three spherical amplitudes (q=-1, 0, +1)")
    return a


def check_polarization(a, tol=1e-12):
    a = _normalized(a)
    norm = np.sum(np.abs(a) ** 2)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"polarization not normalized (sum |a_q|^2 = {norm:.15g})")
    return a


def linear_perp_polarization():
    """Linear polarization along x, perpendicular to the field along z.

    In the spherical basis e_{+1} = -(x + i y)/sqrt2, e_{-1} = (x - i y)/sqrt2 this is
    x = (e_{-1} - e_{+1})/sqrt2, i.e. equal-weight sigma+ and sigma- with no pi part.
    """
    s = 1.0 / np.sqrt(2.0)
    return np.array([s, 0.0, -s], dtype=complex)


def pi_polarization():
    return np.array([0.0, 1.0, 0.0], dtype=complex)


def sigma_polarization(q):
    if q not in (-1, 1):
        raise ValueError("q must be -1 or +1")
    a = np.zeros(3, dtype=complex)
    a[q + 1] = 1.0
    return a


def polarization_from_name(name):
    name = name.strip().lower()
    table = {
        "perp": linear_perp_polarization,
        "linear_perp": linear_perp_polarization,
        "pi": pi_polarization,
        "sigma+": lambda: sigma_polarization(1),
        "sigma-": lambda: sigma_polarization(-1),
    }
    if name not in table:
        raise ValueError(f"unknown polarization {name!r}; choose from {sorted(table)}")
    return table[name]()


# ---------------------------------------------------------------------------
# 4-level model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FourLevelParams:
    """Parameters of the 4-level model, all in rad/s.

    ``gamma_m`` holds the decay rates into m = -1, 0, +1; ``gamma_s`` is the rate of
    the decay-and-repump loop that returns population to the excited state.
    """

    omega: float
    delta_laser: float
    delta_zeeman: float
    gamma_m: tuple = (0.0, 0.0, 0.0)
    gamma_s: float = 0.0

    def __post_init__(self):
        gm = tuple(float(g) for g in self.gamma_m)
        if len(gm) != 3:
            raise ValueError("gamma_m needs three rates (m = -1, 0, +1)")
        object.__setattr__(self, "gamma_m", gm)
        if self.omega < 0:
            raise ValueError("omega must be >= 0")
        if min(gm) < 0 or self.gamma_s < 0:
            raise ValueError("decay rates must be >= 0")

    @classmethod
    def from_total(cls, omega, delta_laser, delta_zeeman, gamma_t, gamma_s=0.0):
        """Equal branching Gamma_m = (Gamma_T - Gamma_S)/3."""
        gamma_d = gamma_t - gamma_s
        if gamma_d < 0:
            raise ValueError("gamma_s cannot exceed gamma_t")
        return cls(omega, delta_laser, delta_zeeman, (gamma_d / 3,) * 3, gamma_s)

    @property
    def gamma_d(self):
        return sum(self.gamma_m)

    @property
    def gamma_t(self):
        return self.gamma_s + self.gamma_d


FOUR_LEVEL_EXCITED = 3


def build_h4(p):
    """4x4 Hamiltonian of the 4-level model, basis (m=-1, m=0, m=+1, e)."""
    h = np.zeros((4, 4), dtype=complex)
    h[0, 0] = p.delta_laser - p.delta_zeeman
    h[1, 1] = p.delta_laser
    h[2, 2] = p.delta_laser + p.delta_zeeman
    h[:3, 3] = p.omega / 2
    h[3, :3] = p.omega / 2
    return h


def bright_state_4level():
    """Ground superposition coupled by the equal-amplitude drive."""
    return np.array([1, 1, 1, 0], dtype=complex) / np.sqrt(3.0)


def dark_states_4level():
    """Orthonormal basis of the two ground states with no coupling to |e>."""
    d1 = np.array([1, -1, 0, 0], dtype=complex) / np.sqrt(2.0)
    d2 = np.array([1, 1, -2, 0], dtype=complex) / np.sqrt(6.0)
    return np.stack([d1, d2], axis=1)


def excited_projector_4level():
    p = np.zeros((4, 4), dtype=complex)
    p[3, 3] = 1.0
    return p


# ---------------------------------------------------------------------------
# 8-level model
# ---------------------------------------------------------------------------

S_HALF = Manifold("S1/2", 0.5, G_S)
P_HALF = Manifold("P1/2", 0.5, G_P)
D_THREE_HALVES = Manifold("D3/2", 1.5, G_D)


@dataclass(frozen=True)
class LevelScheme:
    """Manifolds in basis order and the dipole channels (lower, upper) between them."""

    manifolds: tuple
    channels: tuple

    def offset(self, label):
        k = 0
        for man in self.manifolds:
            if man.label == label:
                return k
            k += man.size
        raise KeyError(label)

    def manifold(self, label):
        for man in self.manifolds:
            if man.label == label:
                return man
        raise KeyError(label)

    @property
    def dim(self):
        return sum(m.size for m in self.manifolds)

    def index(self, label, m):
        man = self.manifold(label)
        return self.offset(label) + man.sublevels.index(m)

    def projector(self, label):
        p = np.zeros((self.dim, self.dim), dtype=complex)
        k = self.offset(label)
        n = self.manifold(label).size
        p[k:k + n, k:k + n] = np.eye(n)
        return p


def calcium_scheme(g_s=G_S, g_p=G_P, g_d=G_D):
    """S1/2, P1/2, D3/2 in that order; UV channel S-P, IR channel D-P."""
    s = Manifold("S1/2", 0.5, g_s)
    pm = Manifold("P1/2", 0.5, g_p)
    d = Manifold("D3/2", 1.5, g_d)
    return LevelScheme((s, pm, d), (("S1/2", "P1/2"), ("D3/2", "P1/2")))


@dataclass(frozen=True)
class LaserDrive:
    """One laser on one channel: Rabi frequency and detuning in rad/s."""

    channel: tuple
    rabi: float
    detuning: float
    polarization: np.ndarray = field(default_factory=linear_perp_polarization)

    def __post_init__(self):
        if self.rabi < 0:
            raise ValueError("Rabi frequency must be >= 0")
        object.__setattr__(self, "polarization", check_polarization(self.polarization))


@dataclass(frozen=True)
class EightLevelParams:
    """Parameters of the 8-level model.

    Frequencies are angular (rad/s). Detunings are laser minus transition frequency.
    The Rabi frequencies refer to the strongest (stretched) Zeeman component of
    each channel.
    """

    rabi_uv: float
    rabi_ir: float
    detuning_uv: float
    detuning_ir: float
    b_field: MagneticField
    gamma_sp: float
    gamma_dp: float
    polarization_uv: np.ndarray = field(default_factory=linear_perp_polarization)
    polarization_ir: np.ndarray = field(default_factory=linear_perp_polarization)
    g_s: float = G_S
    g_p: float = G_P
    g_d: float = G_D

    def __post_init__(self):
        if not isinstance(self.b_field, MagneticField):
            object.__setattr__(self, "b_field", MagneticField(float(self.b_field)))
        if self.rabi_uv < 0 or self.rabi_ir < 0:
            raise ValueError("Rabi frequencies must be >= 0")
        if not (self.gamma_sp > 0 and self.gamma_dp > 0):
            raise ValueError("decay rates gamma_sp and gamma_dp must be > 0")
        object.__setattr__(self, "polarization_uv", _normalized(self.polarization_uv))
        object.__setattr__(self, "polarization_ir", _normalized(self.polarization_ir))

    @property
    def scheme(self):
        return calcium_scheme(self.g_s, self.g_p, self.g_d)

    @property
    def gamma_t(self):
        return self.gamma_sp + self.gamma_dp

    @property
    def larmor_unit(self):
        """2*pi*(mu_B/h)*B in rad/s; multiply by g*m for a sublevel shift."""
        return larmor_splitting(self.b_field, 1.0)

    @property
    def larmor_d(self):
        """Zeeman splitting of adjacent D3/2 sublevels in rad/s."""
        return larmor_splitting(self.b_field, self.g_d)

    def drives(self):
        return (
            LaserDrive(("S1/2", "P1/2"), self.rabi_uv, self.detuning_uv, self.polarization_uv),
            LaserDrive(("D3/2", "P1/2"), self.rabi_ir, self.detuning_ir, self.polarization_ir),
        )


def dipole_coefficients(j_lower, j_upper):
    """Clebsch-Gordan table c[(m_lower, q)] = <j_lower m; 1 q | j_upper m+q>.

    Only non-zero entries are kept.
    """
    table = {}
    n = int(round(2 * j_lower)) + 1
    for k in range(n):
        m = -j_lower + k
        for q in (-1, 0, 1):
            mu = m + q
            if abs(mu) > j_upper + 1e-12:
                continue
            c = clebsch_gordan(j_lower, m, 1, q, j_upper, mu)
            if c != 0.0:
                table[(m, q)] = c
    return table


def _stretched_norm(table):
    return max(abs(c) for c in table.values())


def zeeman_diagonal(scheme, larmor_unit):
    """Diagonal Zeeman shifts g*m*larmor_unit for every sublevel of ``scheme``."""
    diag = []
    for man in scheme.manifolds:
        diag.extend(man.g_lande * m * larmor_unit for m in man.sublevels)
    return np.array(diag, dtype=float)


def coupling_matrix(scheme, drive):
    """Hermitian coupling (Rabi/2 times CG-weighted polarization) for one laser."""
    lower, upper = scheme.manifold(drive.channel[0]), scheme.manifold(drive.channel[1])
    table = dipole_coefficients(lower.J, upper.J)
    norm = _stretched_norm(table)
    v = np.zeros((scheme.dim, scheme.dim), dtype=complex)
    a = np.asarray(drive.polarization, dtype=complex)
    for (m, q), c in table.items():
        amp = a[q + 1]
        if amp == 0:
            continue
        i_up = scheme.index(upper.label, m + q)
        i_lo = scheme.index(lower.label, m)
        v[i_up, i_lo] += 0.5 * drive.rabi * amp * c / norm
    return v + v.conj().T


def build_h8(p):
    """8x8 Hamiltonian, basis S(-1/2, +1/2), P(-1/2, +1/2), D(-3/2 .. +3/2)."""
    for pol in (p.polarization_uv, p.polarization_ir):
        check_polarization(pol)
    scheme = p.scheme
    diag = zeeman_diagonal(scheme, p.larmor_unit)
    s0, d0 = scheme.offset("S1/2"), scheme.offset("D3/2")
    diag[s0:s0 + 2] += p.detuning_uv
    diag[d0:d0 + 4] += p.detuning_ir
    h = np.diag(diag).astype(complex)
    for drive in p.drives():
        h += coupling_matrix(scheme, drive)
    return h


def excited_projector_8level(scheme=None):
    scheme = calcium_scheme() if scheme is None else scheme
    return scheme.projector("P1/2")
