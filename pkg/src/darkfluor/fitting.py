"""Least-squares calibration of IR spectra against the 8-level model.

Fit parameters live in laboratory units: field in mG, Rabi frequencies and
UV detuning as ordinary frequencies in MHz, plus a linear scale and background
for the detected counts.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from .atom import (
    EightLevelParams,
    MagneticField,
    angular_to_mhz,
    linear_perp_polarization,
    mhz_to_angular,
)
from .scans import detuning_scan, fluorescence_projector, liouvillian_stack
from .steady import stationary_populations
from .validation import check_spectrum

logger = logging.getLogger(__name__)

PARAM_NAMES = ("b_field_mg", "rabi_uv_mhz", "rabi_ir_mhz", "detuning_uv_mhz", "scale", "background")
NONNEGATIVE = frozenset({"b_field_mg", "rabi_uv_mhz", "rabi_ir_mhz", "scale", "background"})

#: Natural linewidth of P1/2 (2pi x 23.1 MHz) split with a 6.435 % branching into D3/2.
GAMMA_TOTAL_MHZ = 23.1
BRANCHING_D = 0.06435
GAMMA_DP_MHZ = GAMMA_TOTAL_MHZ * BRANCHING_D
GAMMA_SP_MHZ = GAMMA_TOTAL_MHZ - GAMMA_DP_MHZ


class SpectrumModelError(RuntimeError):
    pass


@dataclass
class SpectrumData:
    detunings: np.ndarray
    counts: np.ndarray
    count_errors: np.ndarray = None

    def __post_init__(self):
        self.detunings, self.counts, self.count_errors = check_spectrum(
            self.detunings, self.counts, self.count_errors
        )

    def __len__(self):
        return len(self.detunings)


@dataclass
class FitResult:
    params: dict
    uncertainties: dict
    residual_norm: float
    iterations: int
    converged: bool
    jacobian_degenerate: bool = False
    covariance: np.ndarray = None
    free: tuple = ()
    message: str = ""
    history: list = field(default_factory=list)


def default_template(gamma_sp_mhz=GAMMA_SP_MHZ, gamma_dp_mhz=GAMMA_DP_MHZ):
    """8-level parameters with the linewidths fixed and everything else zeroed."""
    return EightLevelParams(
        rabi_uv=0.0,
        rabi_ir=0.0,
        detuning_uv=0.0,
        detuning_ir=0.0,
        b_field=MagneticField(0.0),
        gamma_sp=mhz_to_angular(gamma_sp_mhz),
        gamma_dp=mhz_to_angular(gamma_dp_mhz),
        polarization_uv=linear_perp_polarization(),
        polarization_ir=linear_perp_polarization(),
    )


def physical_params(params, template=None):
    """Merge lab-unit fit parameters into an :class:`EightLevelParams`."""
    template = default_template() if template is None else template
    return replace(
        template,
        b_field=MagneticField(params["b_field_mg"]),
        rabi_uv=mhz_to_angular(params["rabi_uv_mhz"]),
        rabi_ir=mhz_to_angular(params["rabi_ir_mhz"]),
        detuning_uv=mhz_to_angular(params["detuning_uv_mhz"]),
    )


def fig4_params(b_field_mg=39.0, template=None):
    """Operating point of the calibration spectra, in fit-parameter form."""
    template = default_template() if template is None else template
    return {
        "b_field_mg": b_field_mg,
        "rabi_uv_mhz": np.sqrt(1.19) * angular_to_mhz(template.gamma_sp),
        "rabi_ir_mhz": np.sqrt(2.27) * angular_to_mhz(template.gamma_dp),
        "detuning_uv_mhz": -14.7,
        "scale": 1.0,
        "background": 0.0,
    }


def spectrum_populations(params, detunings_mhz, template=None):
    """Total P population at each IR detuning (MHz); scale and background are ignored."""
    for name in NONNEGATIVE - {"background", "scale"}:
        if params[name] < 0:
            raise ValueError(f"{name} must be >= 0, got {params[name]}")
    x = np.asarray(detunings_mhz, dtype=float)
    p8 = physical_params(params, template)
    Ls = liouvillian_stack(p8, "detuning_ir", mhz_to_angular(x))
    with np.errstate(all="ignore"):
        pops = stationary_populations(Ls, fluorescence_projector(p8))
    if not np.all(np.isfinite(pops)):
        bad = x[~np.isfinite(pops)][0]
        raise SpectrumModelError(f"steady-state solve failed at IR detuning {bad} MHz")
    return pops


def model_spectrum(params, detunings_mhz, template=None):
    """``scale * p_P + background`` at each IR detuning (MHz)."""
    missing = set(PARAM_NAMES) - set(params)
    if missing:
        raise KeyError(f"missing parameters: {sorted(missing)}")
    if params["scale"] < 0:
        raise ValueError(f"scale must be >= 0, got {params['scale']}")
    return params["scale"] * spectrum_populations(params, detunings_mhz, template) + params["background"]


def scan_spectrum(params, detunings_mhz, template=None):
    """Same as :func:`model_spectrum` but going through :func:`detuning_scan`."""
    p8 = physical_params(params, template)
    scan = detuning_scan(p8, mhz_to_angular(np.asarray(detunings_mhz, dtype=float)))
    return params["scale"] * scan.values + params["background"]


def synthetic_spectrum(params, detunings_mhz, noise=0.01, rng=None, template=None):
    """Model spectrum with multiplicative Gaussian noise of relative size ``noise``."""
    rng = np.random.default_rng(rng)
    y = model_spectrum(params, detunings_mhz, template)
    y = y * (1.0 + noise * rng.standard_normal(y.shape))
    return SpectrumData(np.asarray(detunings_mhz, dtype=float), np.clip(y, 0.0, None))


def _typical_scale(name, value, params):
    if value != 0:
        return abs(value)
    if name == "background":
        return max(abs(params.get("scale", 1.0)), 1e-12) * 1e-2
    return 1.0


def fit_spectrum(data, initial, free=None, template=None, max_iter=200, xtol=1e-6, gtol=1e-6, fd_step=1e-4):
    """Weighted least-squares fit of ``data`` to the 8-level model.

    Damped Gauss-Newton (Levenberg) iteration on the normal equations with a
    central-difference Jacobian. Non-negative parameters are projected onto
    their bounds after every step. The iteration works in coordinates scaled by
    the magnitude of the starting values, which makes the result invariant under
    a rescaling of the counts.

    Parameters
    ----------
    data : SpectrumData
    initial : dict
        Starting values for all of ``PARAM_NAMES``.
    free : iterable of str, optional
        Parameters to vary; defaults to all of them.

    Returns
    -------
    FitResult
    """
    if not isinstance(data, SpectrumData):
        raise TypeError("data must be a SpectrumData")
    initial = {k: float(initial[k]) for k in PARAM_NAMES}
    for name in NONNEGATIVE:
        if initial[name] < 0:
            raise ValueError(f"initial {name} must be >= 0")
    if initial["scale"] <= 0:
        raise ValueError("initial scale must be > 0")
    if free is not None:
        unknown = set(free) - set(PARAM_NAMES)
        if unknown:
            raise ValueError(f"unknown parameters {sorted(unknown)}")
    free = PARAM_NAMES if free is None else tuple(n for n in PARAM_NAMES if n in set(free))

    x, y = data.detunings, data.counts
    w = np.ones_like(y) if data.count_errors is None else 1.0 / data.count_errors**2
    sw = np.sqrt(w)
    scales = np.array([_typical_scale(n, initial[n], initial) for n in free])
    lower = np.array([0.0 if n in NONNEGATIVE else -np.inf for n in free])

    def unpack(u):
        p = dict(initial)
        for name, ui, s in zip(free, u, scales):
            p[name] = float(ui * s)
        return p

    cache = {}
    physical = ("b_field_mg", "rabi_uv_mhz", "rabi_ir_mhz", "detuning_uv_mhz")

    def residuals(u):
        p = unpack(u)
        key = tuple(p[n] for n in physical)
        if key not in cache:
            if len(cache) > 64:
                cache.clear()
            cache[key] = spectrum_populations(p, x, template)
        return sw * (y - (p["scale"] * cache[key] + p["background"]))

    def project(u):
        return np.maximum(u, lower / scales)

    u = np.array([initial[n] for n in free]) / scales
    r = residuals(u)
    cost = float(r @ r)
    n_free = len(free)

    if n_free == 0:
        return FitResult(
            params=dict(initial),
            uncertainties={},
            residual_norm=float(np.sqrt(cost)),
            iterations=0,
            converged=True,
            free=free,
            message="no free parameters",
        )

    def jacobian(u):
        # central differences, relative step fd_step in the original units
        J = np.empty((len(y), n_free))
        for j in range(n_free):
            h = fd_step * max(abs(u[j]), 1.0)
            up, dn = u.copy(), u.copy()
            up[j] += h
            dn[j] -= h
            if dn[j] < lower[j] / scales[j]:
                dn[j] = u[j]
                J[:, j] = (residuals(up) - r) / h
                continue
            J[:, j] = (residuals(up) - residuals(dn)) / (up[j] - dn[j])
        return J

    J = jacobian(u)
    A = J.T @ J
    g = J.T @ r
    mu = 1e-3 * float(np.max(np.diag(A)))
    converged = False
    degenerate = False
    iterations = 0
    message = "maximum number of iterations reached"
    history = [cost]

    while iterations < max_iter:
        try:
            step = np.linalg.solve(A + mu * np.eye(n_free), -g)
        except np.linalg.LinAlgError:
            degenerate = True
            message = "singular normal equations"
            break
        u_new = project(u + step)
        actual = u_new - u
        rel_step = np.linalg.norm(actual) / (np.linalg.norm(u) + xtol)
        try:
            r_new = residuals(u_new)
            cost_new = float(r_new @ r_new)
        except SpectrumModelError:
            cost_new = np.inf
        if cost_new < cost:
            u, r, cost = u_new, r_new, cost_new
            history.append(cost)
            iterations += 1
            mu = max(mu / 3.0, 1e-15 * float(np.max(np.diag(A))))
            J = jacobian(u)
            A = J.T @ J
            g = J.T @ r
            if rel_step <= xtol and _gradient_small(J, r, lower, scales, u, gtol):
                converged = True
                message = "converged"
                break
        else:
            mu *= 2.0
            if rel_step <= xtol * 1e-3 or not np.isfinite(mu) or mu > 1e20 * max(1.0, np.max(np.diag(A))):
                converged = _gradient_small(J, r, lower, scales, u, gtol)
                message = "converged" if converged else "step rejected at minimum step size"
                break

    params = unpack(u)
    dof = max(len(y) - n_free, 1)
    cov = None
    unc = {}
    try:
        cond = np.linalg.cond(A)
        if not np.isfinite(cond) or cond > 1e14:
            raise np.linalg.LinAlgError("ill-conditioned")
        cov_u = np.linalg.inv(A)
        if data.count_errors is None:
            cov_u = cov_u * cost / dof
        cov = cov_u * np.outer(scales, scales)
        unc = {n: float(np.sqrt(max(cov[i, i], 0.0))) for i, n in enumerate(free)}
    except np.linalg.LinAlgError:
        degenerate = True
        unc = {n: float("nan") for n in free}
    if degenerate:
        logger.warning("degenerate Jacobian in spectrum fit")
    return FitResult(
        params=params,
        uncertainties=unc,
        residual_norm=float(np.sqrt(cost)),
        iterations=iterations,
        converged=converged,
        jacobian_degenerate=degenerate,
        covariance=cov,
        free=free,
        message=message,
        history=history,
    )


def _gradient_small(J, r, lower, scales, u, gtol):
    """Projected gradient test: max cosine between residual and Jacobian columns."""
    rn = np.linalg.norm(r)
    if rn == 0:
        return True
    g = J.T @ r
    at_bound = u <= lower / scales + 1e-15
    # at a lower bound only a gradient pushing further down (df/du < 0 direction) is allowed
    g = np.where(at_bound & (g > 0), 0.0, g)
    cols = np.linalg.norm(J, axis=0)
    cols[cols == 0] = 1.0
    return bool(np.max(np.abs(g) / (cols * rn)) <= gtol)


class SpectrumFitter(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_spectrum`.

    ``X`` holds IR detunings in MHz (shape (n,) or (n, 1)) and ``y`` the counts.
    ``sample_weight`` in :meth:`fit` plays the role of 1/sigma^2.
    """

    def __init__(
        self,
        b_field_mg=30.0,
        rabi_uv_mhz=23.6,
        rabi_ir_mhz=2.2,
        detuning_uv_mhz=-14.7,
        scale=1.0,
        background=0.0,
        free=PARAM_NAMES,
        gamma_sp_mhz=GAMMA_SP_MHZ,
        gamma_dp_mhz=GAMMA_DP_MHZ,
        max_iter=200,
    ):
        self.b_field_mg = b_field_mg
        self.rabi_uv_mhz = rabi_uv_mhz
        self.rabi_ir_mhz = rabi_ir_mhz
        self.detuning_uv_mhz = detuning_uv_mhz
        self.scale = scale
        self.background = background
        self.free = free
        self.gamma_sp_mhz = gamma_sp_mhz
        self.gamma_dp_mhz = gamma_dp_mhz
        self.max_iter = max_iter

    def _template(self):
        return default_template(self.gamma_sp_mhz, self.gamma_dp_mhz)

    def _initial(self):
        return {n: getattr(self, n) for n in PARAM_NAMES}

    def fit(self, X, y, sample_weight=None):
        errors = None
        if sample_weight is not None:
            sw = np.asarray(sample_weight, dtype=float)
            if np.any(sw <= 0):
                raise ValueError("sample_weight must be positive")
            errors = 1.0 / np.sqrt(sw)
        data = SpectrumData(X, y, errors)
        self.result_ = fit_spectrum(data, self._initial(), self.free, self._template(), self.max_iter)
        self.params_ = self.result_.params
        self.uncertainties_ = self.result_.uncertainties
        self.n_iter_ = self.result_.iterations
        self.converged_ = self.result_.converged
        if not self.converged_:
            logger.warning("spectrum fit did not converge: %s", self.result_.message)
        return self

    def predict(self, X):
        check_is_fitted(self, "params_")
        x = np.asarray(X, dtype=float)
        x = x[:, 0] if x.ndim == 2 else x
        return model_spectrum(self.params_, x, self._template())
