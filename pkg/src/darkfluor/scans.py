"""Parameter scans: fluorescence vs drive power, threshold slope, IR spectra."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.signal import find_peaks

from .atom import (
    TWO_PI,
    EightLevelParams,
    FourLevelParams,
    MagneticField,
    excited_projector_4level,
    excited_projector_8level,
    field_for_larmor,
    larmor_splitting,
)
from .master import liouvillian
from .quantum import to_real_superop
from .steady import excited_population, omega2_max, stationary_populations

logger = logging.getLogger(__name__)

# fields the Hamiltonian depends on linearly, so L(x) = L(0) + x * (L(1) - L(0))
_AFFINE_FIELDS = {
    FourLevelParams: ("omega", "delta_laser"),
    EightLevelParams: ("rabi_uv", "rabi_ir", "detuning_uv", "detuning_ir"),
}


@dataclass
class ScanResult:
    axis: np.ndarray
    values: np.ndarray
    argmax_axis: float
    max_value: float
    model: str
    degenerate: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.degenerate is None:
            self.degenerate = np.zeros(len(self.axis), dtype=bool)

    @property
    def argmax_index(self):
        return int(np.argmax(self.values))


@dataclass
class SlopeResult:
    larmor_points: np.ndarray
    omega2_max_points: np.ndarray
    slope: float
    intercept: float
    fit_residual: float
    r_squared: float
    monotone: bool

    @property
    def slope_mhz(self):
        return self.slope / 1e6


def model_name(params):
    if isinstance(params, FourLevelParams):
        return "four-level"
    if isinstance(params, EightLevelParams):
        return "eight-level"
    raise TypeError(f"unsupported parameter type {type(params).__name__}")


def fluorescence_projector(params):
    """Projector whose population is taken as the fluorescence signal."""
    if isinstance(params, FourLevelParams):
        return excited_projector_4level()
    return excited_projector_8level(params.scheme)


def liouvillian_stack(params, name, values, real=True):
    """Liouvillians for ``params`` with field ``name`` set to each of ``values``.

    With ``real`` (default) the stack is returned in the real Hermitian basis,
    which is what the batched steady-state solver prefers.
    """
    values = np.asarray(values, dtype=float)
    convert = to_real_superop if real else np.asarray
    if name in _AFFINE_FIELDS[type(params)]:
        L0 = convert(liouvillian(replace(params, **{name: 0.0})))
        dL = convert(liouvillian(replace(params, **{name: 1.0}))) - L0
        return L0[None] + values[:, None, None] * dL[None]
    return np.array([convert(liouvillian(replace(params, **{name: v}))) for v in values])


def interpolated_argmax(axis, values):
    """Location and height of the maximum, refined by a parabola through 3 points.

    The parabola is fitted in index space and mapped back geometrically when the
    axis is a positive geometric progression, linearly otherwise.
    """
    axis = np.asarray(axis, dtype=float)
    values = np.asarray(values, dtype=float)
    i = int(np.argmax(values))
    if i == 0 or i == len(values) - 1:
        return float(axis[i]), float(values[i])
    y0, y1, y2 = values[i - 1], values[i], values[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return float(axis[i]), float(y1)
    f = 0.5 * (y0 - y2) / denom
    peak = y1 - 0.25 * (y0 - y2) * f
    j = i + 1 if f > 0 else i - 1
    if np.all(axis > 0) and _is_geometric(axis):
        x = axis[i] * (axis[j] / axis[i]) ** abs(f)
    else:
        x = axis[i] + abs(f) * (axis[j] - axis[i])
    return float(x), float(peak)


def _is_geometric(axis, rtol=1e-6):
    if len(axis) < 3:
        return False
    r = axis[1:] / axis[:-1]
    lin = np.diff(axis)
    if np.allclose(lin, lin[0], rtol=rtol):
        return False
    return bool(np.allclose(r, r[0], rtol=rtol))


def _check_grid(grid, name="grid"):
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D sequence")
    if grid.size > 1 and np.any(np.diff(grid) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    return grid


def _scan(params, name, values, axis, diagnostics):
    Ls = liouvillian_stack(params, name, values)
    proj = fluorescence_projector(params)
    if diagnostics:
        p, flags = stationary_populations(Ls, proj, diagnostics=True)
        if np.any(flags):
            logger.info("%d degenerate scan points", int(flags.sum()))
    else:
        p, flags = stationary_populations(Ls, proj), np.zeros(len(values), dtype=bool)
    x, y = interpolated_argmax(axis, p)
    return ScanResult(axis=axis, values=p, argmax_axis=x, max_value=y, model=model_name(params), degenerate=flags)


def power_scan(params, omega2_grid, method="numeric", diagnostics=False):
    """Fluorescence versus squared Rabi frequency of the (IR) drive.

    ``omega2_grid`` is in rad^2/s^2. For the 4-level model ``method="analytic"``
    uses the closed form (equal branching required) instead of linear solves.
    """
    grid = _check_grid(omega2_grid, "omega2_grid")
    if np.any(grid < 0):
        raise ValueError("omega2_grid must be non-negative")
    rabi = np.sqrt(grid)
    if isinstance(params, FourLevelParams):
        if method == "analytic":
            p = excited_population(rabi, params.delta_laser, params.delta_zeeman, params.gamma_d, params.gamma_s)
            p = np.atleast_1d(p)
            x, y = interpolated_argmax(grid, p)
            return ScanResult(axis=grid, values=p, argmax_axis=x, max_value=y, model="four-level")
        return _scan(params, "omega", rabi, grid, diagnostics)
    if method != "numeric":
        raise ValueError("the 8-level model only supports method='numeric'")
    return _scan(params, "rabi_ir", rabi, grid, diagnostics)


def detuning_scan(params, delta_ir_grid, diagnostics=False):
    """Total P-manifold population versus IR detuning (rad/s) at fixed UV settings."""
    if not isinstance(params, EightLevelParams):
        raise TypeError("detuning_scan needs EightLevelParams")
    grid = _check_grid(delta_ir_grid, "delta_ir_grid")
    return _scan(params, "detuning_ir", grid, grid, diagnostics)


def with_larmor(params, larmor_hz):
    """Copy of ``params`` whose D (or ground) Zeeman splitting is 2*pi*larmor_hz."""
    if isinstance(params, FourLevelParams):
        return replace(params, delta_zeeman=TWO_PI * larmor_hz)
    return replace(params, b_field=MagneticField(field_for_larmor(larmor_hz, params.g_d)))


def _zeeman(params):
    if isinstance(params, FourLevelParams):
        return params.delta_zeeman
    return larmor_splitting(params.b_field, params.g_d)


def _detuning(params):
    return params.delta_laser if isinstance(params, FourLevelParams) else params.detuning_ir


def default_power_grid(params, points=150, span=30.0):
    """Geometric Omega^2 grid centred on the closed-form maximum estimate."""
    centre = omega2_max(_zeeman(params), _detuning(params), params.gamma_t)
    if centre <= 0:
        raise ValueError("cannot centre a power grid at zero field")
    return np.geomspace(centre / span, centre * span, points)


def locate_maximum(params, omega2_grid=None, points=150, span=30.0, method="numeric", max_shifts=6):
    """Power scan whose grid is shifted until the maximum is interior."""
    grid = default_power_grid(params, points, span) if omega2_grid is None else _check_grid(omega2_grid)
    for _ in range(max_shifts + 1):
        scan = power_scan(params, grid, method=method)
        i = scan.argmax_index
        if 0 < i < len(grid) - 1:
            return scan
        if omega2_grid is not None:
            break
        factor = span**1.5
        grid = grid * (factor if i == len(grid) - 1 else 1 / factor)
    logger.warning("fluorescence maximum at the edge of the power grid")
    return scan


def threshold_slope(params, larmor_list, omega2_grid=None, points=150, span=30.0, method="numeric"):
    """Slope of Omega^2_max / (2 pi)^2 versus Larmor frequency.

    ``larmor_list`` holds Larmor frequencies delta/2pi in Hz. The returned slope
    is in Hz (``slope_mhz`` for MHz).
    """
    larmor = np.asarray(larmor_list, dtype=float)
    if larmor.size < 3:
        raise ValueError("need at least 3 Larmor frequencies")
    if np.any(TWO_PI * np.abs(larmor) > 0.2 * params.gamma_t):
        raise ValueError("threshold_slope is restricted to |delta| <= 0.2 gamma_t")
    o2 = []
    for lar in larmor:
        p = with_larmor(params, lar)
        scan = locate_maximum(p, omega2_grid, points, span, method)
        o2.append(scan.argmax_axis)
    o2 = np.array(o2)
    y = o2 / TWO_PI**2
    coef, res, *_ = np.polyfit(larmor, y, 1, full=True)
    fit = np.polyval(coef, larmor)
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    order = np.argsort(np.abs(larmor))
    monotone = bool(np.all(np.diff(o2[order]) > 0))
    if not monotone:
        logger.warning("Omega^2_max is not monotone in the Larmor frequency")
    return SlopeResult(
        larmor_points=larmor,
        omega2_max_points=o2,
        slope=float(coef[0]),
        intercept=float(coef[1]),
        fit_residual=float(np.sqrt(ss_res)),
        r_squared=1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0,
        monotone=monotone,
    )


def find_dips(values, rel_prominence=1e-3):
    """Indices of local minima whose prominence exceeds ``rel_prominence * max``."""
    values = np.asarray(values, dtype=float)
    peak = values.max()
    if peak <= 0:
        return np.array([], dtype=int)
    idx, _ = find_peaks(-values, prominence=rel_prominence * peak)
    return idx


def dip_depth(values, index):
    """Depth of the dip at ``index`` relative to the global maximum."""
    values = np.asarray(values, dtype=float)
    return float((values.max() - values[index]) / values.max())
