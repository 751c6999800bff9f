"""Peak extraction and circuit-parameter recovery from spectrum maps.

This is the one corner of the package with a fit/transform shape, so it
follows the scikit-learn estimator conventions: :class:`PeakExtractor` is
a stateless transformer turning an amplitude map into peak points, and
:class:`CircuitSpectrumFitter` recovers element values from those points
with damped least squares and predicts branch frequencies.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize_scalar
from scipy.signal import find_peaks
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .circuit import coefficients_at, eigenmodes, rwa_modes
from .exceptions import ConvergenceError, CouplerError
from .params import CircuitParams, FluxBias

TAU = math.tau

# Fields of CircuitParams a fit may vary.
_FITTABLE = ("L_a", "L_b", "C_a", "C_b", "L_sh", "L_J0", "M_0", "L_0", "gamma")


# ---------------------------------------------------------------------------
# Branch prediction
# ---------------------------------------------------------------------------

def predict_modes(params, biases, *, rwa: bool = False,
                  include_dc_leak: bool = False) -> np.ndarray:
    """Normal-mode frequencies over a bias sweep.

    Returns an (n, 2) array of [omega_minus, omega_plus] in rad/s, NaN
    where a bias point fails (imaginary lower mode or a network pole).
    """
    biases = np.atleast_1d(np.asarray(biases, dtype=float))
    out = np.full((biases.size, 2), np.nan)
    for i, phi in enumerate(biases):
        dc = phi / 313.0 if include_dc_leak else 0.0
        try:
            c = coefficients_at(params, FluxBias(phi_ex=float(phi), phi_dc=dc))
            wp, wm = rwa_modes(c) if rwa else eigenmodes(c)
        except CouplerError:
            continue
        out[i] = (wm, wp)
    return out


def g_range(params, bias_values=None, *, num: int = 2001,
            refine: bool = True) -> tuple[float, float]:
    """Extrema (g_min, g_max) of the coupling constant over a bias sweep.

    Sweeps one full period by default and polishes the grid extrema with a
    bounded scalar minimization.
    """
    if bias_values is None:
        bias_values = np.linspace(0.0, TAU, num, endpoint=False)
    bias_values = np.asarray(bias_values, dtype=float)
    gs = np.array([coefficients_at(params, FluxBias(phi_ex=float(p))).g_r
                   for p in bias_values])
    i_min, i_max = int(np.argmin(gs)), int(np.argmax(gs))
    g_min, g_max = float(gs[i_min]), float(gs[i_max])
    if not refine:
        return g_min, g_max
    step = float(np.mean(np.abs(np.diff(bias_values)))) if bias_values.size > 1 else 0.1

    def polish(i0, sign):
        lo, hi = bias_values[i0] - step, bias_values[i0] + step
        res = minimize_scalar(
            lambda p: sign * coefficients_at(params, FluxBias(phi_ex=p)).g_r,
            bounds=(lo, hi), method="bounded",
            options={"xatol": 1e-10})
        return sign * res.fun

    return min(g_min, polish(i_min, +1.0)), max(g_max, polish(i_max, -1.0))


def rwa_shift(params, bias=0.0, **kwargs) -> tuple[float, float]:
    """Frequency shifts (plus, minus) of the exchange-only modes at one bias.

    Accepts circuit parameters plus a bias, or ready-made
    :class:`~couplersim.circuit.ModeCoefficients` directly.
    """
    from .circuit import ModeCoefficients

    if isinstance(params, ModeCoefficients):
        c = params
    else:
        c = coefficients_at(params, FluxBias.coerce(bias), **kwargs)
    wp, wm = eigenmodes(c)
    wp_r, wm_r = rwa_modes(c)
    return wp_r - wp, wm_r - wm


# ---------------------------------------------------------------------------
# Peak extraction
# ---------------------------------------------------------------------------

class PeakExtractor(TransformerMixin, BaseEstimator):
    """Column-wise peak extraction from a spectrum amplitude map.

    Per bias column, local maxima above a robust noise floor
    (median + noise_sigmas * scaled MAD) are kept, at most ``max_peaks``
    strongest per column, each position refined from the three bins around
    the maximum by parabolic interpolation.  Peaks outside ``band_hz`` are
    dropped (the instrument band limits what a measurement can show).

    Parameters
    ----------
    noise_sigmas : float
        Threshold above the column median in robust standard deviations.
    max_peaks : int
        Peaks kept per column (two mode branches by default).
    band_hz : tuple or None
        Frequency acceptance window.
    min_separation_bins : int
        Minimum distance between peaks within one column.
    """

    def __init__(self, noise_sigmas=5.0, max_peaks=2, band_hz=(4e9, 8e9),
                 min_separation_bins=2):
        self.noise_sigmas = noise_sigmas
        self.max_peaks = max_peaks
        self.band_hz = band_hz
        self.min_separation_bins = min_separation_bins

    def fit(self, X=None, y=None):
        return self

    def transform(self, X) -> np.ndarray:
        """Extract peaks from a :class:`~couplersim.response.SpectrumGrid`.

        Returns an (n, 3) array of [bias, frequency_hz, weight] rows sorted
        by bias then frequency.
        """
        grid = X
        rows = []
        probe = grid.probe_hz
        for i in range(grid.bias.size):
            column = grid.amplitude[i]
            med = float(np.median(column))
            mad = float(np.median(np.abs(column - med)))
            floor = med + self.noise_sigmas * 1.4826 * mad
            idx, props = find_peaks(column, height=floor,
                                    distance=self.min_separation_bins)
            if idx.size == 0:
                continue
            order = np.argsort(props["peak_heights"])[::-1][: self.max_peaks]
            for j in sorted(idx[order]):
                freq = self._refine(probe, column, j)
                if self.band_hz is not None and not (
                        self.band_hz[0] <= freq <= self.band_hz[1]):
                    continue
                rows.append((float(grid.bias[i]), freq, 1.0))
        if not rows:
            return np.empty((0, 3))
        out = np.array(rows)
        return out[np.lexsort((out[:, 1], out[:, 0]))]

    @staticmethod
    def _refine(probe, column, j):
        if j <= 0 or j >= len(column) - 1:
            return float(probe[j])
        y0, y1, y2 = column[j - 1], column[j], column[j + 1]
        denom = y0 - 2.0 * y1 + y2
        if denom >= 0:
            return float(probe[j])
        shift = 0.5 * (y0 - y2) / denom
        shift = min(max(shift, -0.5), 0.5)
        return float(probe[j] + shift * (probe[j + 1] - probe[j]))


# ---------------------------------------------------------------------------
# Parameter fitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Outcome of one branch-frequency fit."""

    params: CircuitParams
    rms_hz: float
    residuals_hz: np.ndarray
    converged: bool
    n_evaluations: int
    jacobian_singular_values: np.ndarray
    condition_number: float
    message: str
    holdout_rms_hz: float | None = None


def _validate_peaks(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] not in (2, 3):
        raise ValueError("peaks must be an (n, 2) or (n, 3) array "
                         "of [bias_rad, frequency_hz(, weight)]")
    if not np.all(np.isfinite(X)):
        raise ValueError("peaks contain non-finite entries")
    if X.shape[1] == 2:
        X = np.hstack([X, np.ones((X.shape[0], 1))])
    return X


class CircuitSpectrumFitter(BaseEstimator):
    """Recover circuit element values from observed branch peaks.

    Minimizes the weighted squared distance between peak frequencies and
    the nearest predicted normal-mode branch with a trust-region damped
    least-squares solver; the branch assignment is implicit in the
    nearest-branch residual and therefore recomputed at every iteration.

    The loss is evaluated on predicted curves, which is also how the fit is
    judged: several element values trade off along near-flat directions,
    so parameter-space distance is not meaningful while the branch curves
    are.  Jacobian singular values are reported to expose that degeneracy.

    Parameters
    ----------
    initial_params : CircuitParams
        Starting element values; also supplies every frozen parameter.
    free : tuple of str
        Names of the parameters to vary.
    bounds : dict or None
        Optional per-parameter (low, high) overrides.
    band_hz : tuple or None
        Instrument band; out-of-band predictions cannot attract peaks
        through the band edge (data outside carries zero weight upstream).
    tie_inductances : bool
        Vary L_a and L_b together (single shared value), the default.
    include_dc_leak : bool
        Apply the fixed 1/313 bias leak into the small loop.
    holdout_fraction : float
        Fraction of points kept out of the fit for an honest residual;
        0 disables the split.
    random_state : int or None
        Seed for the holdout split.
    max_nfev : int
        Residual-evaluation budget of the optimizer.

    Attributes
    ----------
    params_ : CircuitParams
        Fitted element values.
    result_ : FitResult
        Residuals and diagnostics.
    """

    def __init__(self, initial_params=None, free=("gamma", "M_0"), bounds=None,
                 band_hz=(4e9, 8e9), tie_inductances=True, include_dc_leak=False,
                 holdout_fraction=0.0, random_state=None, max_nfev=400,
                 loss_tol=1e-12):
        self.initial_params = initial_params
        self.free = free
        self.bounds = bounds
        self.band_hz = band_hz
        self.tie_inductances = tie_inductances
        self.include_dc_leak = include_dc_leak
        self.holdout_fraction = holdout_fraction
        self.random_state = random_state
        self.max_nfev = max_nfev
        self.loss_tol = loss_tol

    # -- internal helpers --------------------------------------------------

    def _free_names(self) -> list[str]:
        names = list(self.free)
        for name in names:
            if name not in _FITTABLE:
                raise ValueError(f"unknown fit parameter {name!r}")
        if self.tie_inductances and "L_b" in names:
            raise ValueError("L_b is tied to L_a; free 'L_a' instead or "
                             "set tie_inductances=False")
        return names

    def _assemble(self, theta, names) -> CircuitParams:
        changes = dict(zip(names, theta))
        if self.tie_inductances and "L_a" in changes:
            changes["L_b"] = changes["L_a"]
        return self.initial_params.replace(**changes)

    def _scales(self, names) -> np.ndarray:
        # Characteristic magnitudes keep the optimizer variables O(1);
        # element values differ by eight orders of magnitude otherwise and
        # finite-difference steps become meaningless.
        char = {"gamma": 0.1, "C_a": 1e-13, "C_b": 1e-13}
        out = []
        for name in names:
            x0 = abs(getattr(self.initial_params, name))
            out.append(max(x0, char.get(name, 1e-10)))
        return np.array(out)

    def _default_bounds(self, names):
        lo, hi = [], []
        overrides = self.bounds or {}
        for name in names:
            if name in overrides:
                l, h = overrides[name]
            elif name == "gamma":
                l, h = 0.0, 0.95
            else:
                x0 = getattr(self.initial_params, name)
                l, h = 0.0, 10.0 * x0 if x0 > 0 else 1e-9
            lo.append(l)
            hi.append(h)
        return np.array(lo), np.array(hi)

    def _residuals(self, theta, names, biases, freqs, weights):
        """Weighted nearest-branch residuals in Hz."""
        params = self._assemble(theta, names)
        branches = predict_modes(params, biases,
                                 include_dc_leak=self.include_dc_leak) / TAU
        res = np.empty(freqs.size)
        penalty = (self.band_hz[1] - self.band_hz[0]) if self.band_hz else 4e9
        for i in range(freqs.size):
            candidates = branches[i][np.isfinite(branches[i])]
            if candidates.size == 0:
                res[i] = penalty
                continue
            res[i] = freqs[i] - candidates[np.argmin(np.abs(candidates - freqs[i]))]
        return res * np.sqrt(weights)

    # -- estimator API -----------------------------------------------------

    def fit(self, X, y=None, sample_weight=None):
        """Fit element values to peak points.

        ``X`` is an (n, 2) or (n, 3) array of [bias_rad, frequency_hz,
        optional weight]; ``sample_weight`` overrides the weight column.
        """
        if self.initial_params is None:
            raise ValueError("initial_params is required to fit")
        X = _validate_peaks(X)
        if sample_weight is not None:
            X = X.copy()
            X[:, 2] = np.asarray(sample_weight, dtype=float)
        if X.shape[0] < 10:
            raise ValueError("need at least 10 peak points spanning both branches")
        names = self._free_names()
        n_free = len(names)
        if n_free > 0 and X.shape[0] < 3 * n_free:
            raise ValueError(
                f"{n_free} free parameters need at least {3 * n_free} points"
            )

        rng = np.random.default_rng(self.random_state)
        holdout = np.zeros(X.shape[0], dtype=bool)
        if self.holdout_fraction > 0.0:
            n_hold = int(round(self.holdout_fraction * X.shape[0]))
            holdout[rng.choice(X.shape[0], size=n_hold, replace=False)] = True
        train = X[~holdout]
        biases, freqs, weights = train[:, 0], train[:, 1], train[:, 2]

        x0 = np.array([getattr(self.initial_params, n) for n in names])
        if n_free == 0:
            residuals = self._residuals(x0, names, biases, freqs, weights)
            self.params_ = self.initial_params
            self.result_ = FitResult(
                params=self.params_, rms_hz=float(np.sqrt(np.mean(residuals ** 2))),
                residuals_hz=residuals, converged=True, n_evaluations=0,
                jacobian_singular_values=np.empty(0), condition_number=0.0,
                message="all parameters frozen; evaluation only",
                holdout_rms_hz=self._holdout_rms(X, holdout, self.initial_params))
            return self

        lo, hi = self._default_bounds(names)
        x0 = np.clip(x0, lo + 1e-300, hi)
        scale = self._scales(names)

        def scaled_residuals(u):
            # MHz residuals over O(1) variables.
            return self._residuals(u * scale, names, biases, freqs, weights) / 1e6

        sol = least_squares(
            scaled_residuals, x0 / scale, bounds=(lo / scale, hi / scale),
            method="trf", ftol=self.loss_tol, xtol=1e-12, gtol=1e-14,
            max_nfev=self.max_nfev)
        jac = self._central_jacobian(scaled_residuals, sol.x, lo / scale,
                                     hi / scale)
        sol.x = sol.x * scale
        sol.fun = sol.fun * 1e6

        svals = np.linalg.svd(jac, compute_uv=False)
        cond = float(svals[0] / svals[-1]) if svals[-1] > 0 else math.inf
        if cond > 1e8:
            warnings.warn(
                f"fit is rank deficient: Jacobian condition number {cond:.2e}; "
                f"parameters trade off along flat directions",
                stacklevel=2,
            )
        if sol.status <= 0:
            raise ConvergenceError(f"least-squares fit failed: {sol.message}")

        self.params_ = self._assemble(sol.x, names)
        self.result_ = FitResult(
            params=self.params_,
            rms_hz=float(np.sqrt(np.mean(sol.fun ** 2))),
            residuals_hz=sol.fun,
            converged=bool(sol.status > 0),
            n_evaluations=int(sol.nfev),
            jacobian_singular_values=svals,
            condition_number=cond,
            message=str(sol.message),
            holdout_rms_hz=self._holdout_rms(X, holdout, self.params_))
        return self

    @staticmethod
    def _central_jacobian(fun, u, lo, hi, step=1e-4):
        """Central-difference Jacobian in the scaled gauge.

        Used only for the degeneracy diagnostics: the step sits well above
        the inner minimizer's tolerance noise, so near-flat directions show
        up as genuinely tiny singular values.
        """
        base = fun(u)
        jac = np.empty((base.size, u.size))
        for j in range(u.size):
            h_plus = min(step, (hi[j] - u[j]))
            h_minus = min(step, (u[j] - lo[j]))
            if h_plus <= 0:
                h_plus = 0.0
            if h_minus <= 0:
                h_minus = 0.0
            if h_plus == 0.0 and h_minus == 0.0:
                jac[:, j] = 0.0
                continue
            up = u.copy()
            down = u.copy()
            up[j] += h_plus
            down[j] -= h_minus
            jac[:, j] = (fun(up) - fun(down)) / (h_plus + h_minus)
        return jac

    def _holdout_rms(self, X, holdout, params):
        if not np.any(holdout):
            return None
        part = X[holdout]
        res = self._residuals(
            np.array([getattr(params, n) for n in self._free_names()]),
            self._free_names(), part[:, 0], part[:, 1], part[:, 2])
        return float(np.sqrt(np.mean(res ** 2)))

    def predict(self, X) -> np.ndarray:
        """Branch frequencies [f_minus_hz, f_plus_hz] for an array of biases."""
        if not hasattr(self, "params_"):
            raise NotFittedError("fit the model before predicting")
        biases = np.atleast_1d(np.asarray(X, dtype=float))
        return predict_modes(self.params_, biases,
                             include_dc_leak=self.include_dc_leak) / TAU

    def refit(self, X, y=None):
        """Continue fitting from the converged values (loss cannot increase)."""
        if not hasattr(self, "params_"):
            raise NotFittedError("fit the model before refitting")
        continued = CircuitSpectrumFitter(**{**self.get_params(),
                                             "initial_params": self.params_})
        return continued.fit(X, y)
