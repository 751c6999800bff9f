"""Driven, dissipative steady-state response with input/output port crosstalk.

The primary solver is the closed linear system for the first moments
<a>, <b> in the probe rotating frame.  For a quadratic Hamiltonian with a
linear drive those equations are exact, so they agree with the full
density-matrix steady state while making dense 2-D scans cheap.  The
density-matrix path is kept as a validation oracle.

A drive entering port A excites resonator A with weight (1 - eta) and
resonator B with weight eta; the same crosstalk fraction applies on the
way out.  Measured signals are the magnitudes of the transmission and
reflection coefficients built from Im<a> and Im<b>.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.ndimage import uniform_filter1d

from .circuit import ModeCoefficients, coefficients_at, eigenmodes, rwa_modes
from .exceptions import (
    BranchNotResolvedWarning,
    SingularResponseError,
    TruncationError,
)
from .fock import FockSpace, destroy
from .params import FluxBias


@dataclass(frozen=True)
class DriveConfig:
    """Probe drive, port decay rates and crosstalk fraction.

    ``epsilon`` is the drive rate xi*sqrt(kappa_in) in rad/s (kappa_in
    belongs to the input port).  Transmission and reflection coefficients
    are independent of it; it only sets absolute moment amplitudes.
    """

    epsilon: float
    kappa_a: float
    kappa_b: float
    omega_p: float
    eta: float = 0.0
    input_port: str = "A"

    def __post_init__(self):
        if self.kappa_a < 0 or self.kappa_b < 0:
            raise ValueError("decay rates must be non-negative")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("crosstalk fraction must lie in [0, 1]")
        if self.input_port not in ("A", "B"):
            raise ValueError("input_port must be 'A' or 'B'")
        if self.epsilon < 0:
            raise ValueError("drive rate must be non-negative")

    @property
    def kappa_in(self) -> float:
        return self.kappa_a if self.input_port == "A" else self.kappa_b

    @property
    def xi(self) -> float:
        """Drive intensity; requires a decaying input port."""
        if self.kappa_in <= 0.0:
            raise SingularResponseError("xi is undefined for a lossless input port")
        return self.epsilon / math.sqrt(self.kappa_in)

    def drive_amplitudes(self) -> tuple[float, float]:
        """Per-resonator drive rates (epsilon_a, epsilon_b) including crosstalk."""
        xi = self.xi
        if self.input_port == "A":
            return (1.0 - self.eta) * math.sqrt(self.kappa_a) * xi, \
                self.eta * math.sqrt(self.kappa_b) * xi
        return self.eta * math.sqrt(self.kappa_a) * xi, \
            (1.0 - self.eta) * math.sqrt(self.kappa_b) * xi


@dataclass(frozen=True)
class ResponseAmplitudes:
    """Steady-state first moments <a>, <b> (dimensionless)."""

    a: complex
    b: complex


def _moment_matrix_rwa(c: ModeCoefficients, d: DriveConfig):
    delta_a = c.omega_a - d.omega_p
    delta_b = c.omega_b - d.omega_p
    return np.array([
        [1j * delta_a + 0.5 * d.kappa_a, 1j * c.g_r],
        [1j * c.g_r, 1j * delta_b + 0.5 * d.kappa_b],
    ])


def steady_state_moments(c: ModeCoefficients, d: DriveConfig, *,
                         rwa: bool = True) -> ResponseAmplitudes:
    """First moments of the driven steady state in the probe rotating frame.

    With ``rwa=True`` (default) the coupling keeps only photon exchange and
    the moments solve the closed 2x2 system

        (i(omega_a - omega_p) + kappa_a/2) <a> + i g_r <b> = epsilon_a
        (i(omega_b - omega_p) + kappa_b/2) <b> + i g_r <a> = epsilon_b.

    With ``rwa=False`` the pair-creation terms are kept and the 4x4 linear
    response at the probe frequency is solved instead (the demodulated
    co-rotating component is returned).  Either way the result equals the
    first moments of the corresponding density-matrix steady state.
    """
    eps_a, eps_b = d.drive_amplitudes()
    if rwa:
        m = _moment_matrix_rwa(c, d)
        rhs = np.array([eps_a, eps_b])
    else:
        # Co-rotating components of (<a>, <b>, <a^dag>, <b^dag>) with the
        # pair terms kept; the counter-rotating coefficients decouple.
        g = c.g_r
        m = np.array([
            [1j * (c.omega_a - d.omega_p) + 0.5 * d.kappa_a, 1j * g, 0.0, -1j * g],
            [1j * g, 1j * (c.omega_b - d.omega_p) + 0.5 * d.kappa_b, -1j * g, 0.0],
            [0.0, 1j * g, -1j * (c.omega_a + d.omega_p) + 0.5 * d.kappa_a, -1j * g],
            [1j * g, 0.0, -1j * g, -1j * (c.omega_b + d.omega_p) + 0.5 * d.kappa_b],
        ])
        rhs = np.array([eps_a, eps_b, 0.0, 0.0])
    det = np.linalg.det(m)
    scale = np.abs(m).max() ** m.shape[0]
    if abs(det) <= 1e-300 or abs(det) < 1e-15 * scale:
        raise SingularResponseError(
            "steady state is singular: lossless mode driven on resonance"
        )
    sol = np.linalg.solve(m, rhs)
    return ResponseAmplitudes(a=complex(sol[0]), b=complex(sol[1]))


def transmission_reflection(r: ResponseAmplitudes, d: DriveConfig) -> tuple[float, float]:
    """Transmission and reflection coefficients (signed; measure |t|, |r|).

    For input at port A:

        t_BA = -(kappa_a/2 xi) eta Im<a> - (kappa_b/2 xi) (1 - eta) Im<b>
        r_AA = -(kappa_a/2 xi) (1 - eta) Im<a> - (kappa_b/2 xi) eta Im<b>

    and the mirrored weights for input at port B.  The output path applies
    the same crosstalk fraction as the input path.
    """
    xi = d.xi
    ka = d.kappa_a / (2.0 * xi)
    kb = d.kappa_b / (2.0 * xi)
    im_a = r.a.imag
    im_b = r.b.imag
    if d.input_port == "A":
        t = -ka * d.eta * im_a - kb * (1.0 - d.eta) * im_b
        refl = -ka * (1.0 - d.eta) * im_a - kb * d.eta * im_b
    else:
        t = -kb * d.eta * im_b - ka * (1.0 - d.eta) * im_a
        refl = -kb * (1.0 - d.eta) * im_b - ka * d.eta * im_a
    return t, refl


# ---------------------------------------------------------------------------
# 2-D scans
# ---------------------------------------------------------------------------

_COEFFICIENTS = {
    "t_BA": ("A", "t"),
    "r_AA": ("A", "r"),
    "t_AB": ("B", "t"),
    "r_BB": ("B", "r"),
}


@dataclass(frozen=True, eq=False)
class SpectrumGrid:
    """2-D amplitude map over (bias, probe frequency).

    ``bias`` is the flux-bias axis in radians (``bias_kind="phi_ex"``) or a
    coupling-constant axis in rad/s (``bias_kind="g_r"``) for externally
    supplied maps.  ``amplitude[i, j]`` belongs to bias[i], probe_hz[j].
    Simulated grids carry the per-bias coupling constant and the predicted
    branch frequencies used for branch tracking.
    """

    bias: np.ndarray
    probe_hz: np.ndarray
    amplitude: np.ndarray
    coefficient: str
    bias_kind: str = "phi_ex"
    g_r: np.ndarray | None = None
    branch_minus_hz: np.ndarray | None = None
    branch_plus_hz: np.ndarray | None = None

    def __post_init__(self):
        bias = np.asarray(self.bias, dtype=float)
        probe = np.asarray(self.probe_hz, dtype=float)
        amp = np.asarray(self.amplitude, dtype=float)
        if amp.shape != (bias.size, probe.size):
            raise ValueError("amplitude shape does not match the axes")
        if np.any(amp < 0):
            raise ValueError("amplitudes must be non-negative")
        for ax in (bias, probe):
            if ax.size > 1 and not (np.all(np.diff(ax) > 0) or np.all(np.diff(ax) < 0)):
                raise ValueError("axes must be strictly monotone")
        object.__setattr__(self, "bias", bias)
        object.__setattr__(self, "probe_hz", probe)
        object.__setattr__(self, "amplitude", amp)

    def moving_average(self, window_hz: float) -> "SpectrumGrid":
        """Boxcar average along the probe axis, mimicking measurement smoothing."""
        if window_hz <= 0:
            return self
        step = abs(float(np.mean(np.diff(self.probe_hz))))
        size = max(1, int(round(window_hz / step)))
        if size <= 1:
            return self
        smoothed = uniform_filter1d(self.amplitude, size=size, axis=1, mode="nearest")
        return replace(self, amplitude=smoothed)


def scan_spectrum(params, bias_values, probe_hz, drive: DriveConfig, *,
                  coefficient: str = "t_BA", rwa: bool = True,
                  moving_average_hz: float = 0.0) -> SpectrumGrid:
    """Amplitude map |t| or |r| over a (flux bias, probe frequency) grid.

    The Hamiltonian coefficients are recomputed at every bias point; each
    (bias, probe) cell is an independent pure computation.  ``coefficient``
    selects the port configuration (``t_BA``, ``r_AA``, ``t_AB``, ``r_BB``).
    """
    if coefficient not in _COEFFICIENTS:
        raise ValueError(f"unknown coefficient {coefficient!r}")
    port, kind = _COEFFICIENTS[coefficient]
    if drive.kappa_a <= 0 or drive.kappa_b <= 0:
        raise SingularResponseError("spectrum scans need positive decay rates")
    bias_values = np.asarray(bias_values, dtype=float)
    probe_hz = np.asarray(probe_hz, dtype=float)
    omega_p = math.tau * probe_hz

    d0 = replace(drive, input_port=port)
    eta = d0.eta
    ka, kb = d0.kappa_a, d0.kappa_b
    xi = d0.xi

    eps_a, eps_b = d0.drive_amplitudes()
    if kind == "t":
        out_a, out_b = (eta, 1.0 - eta) if port == "A" else (1.0 - eta, eta)
    else:
        out_a, out_b = (1.0 - eta, eta) if port == "A" else (eta, 1.0 - eta)

    amp = np.empty((bias_values.size, probe_hz.size))
    gs = np.empty(bias_values.size)
    branch_minus = np.empty(bias_values.size)
    branch_plus = np.empty(bias_values.size)
    for i, phi in enumerate(bias_values):
        c = coefficients_at(params, FluxBias(phi_ex=float(phi)))
        gs[i] = c.g_r
        wp, wm = rwa_modes(c) if rwa else eigenmodes(c)
        branch_plus[i] = wp / math.tau
        branch_minus[i] = wm / math.tau
        if rwa:
            da = 1j * (c.omega_a - omega_p) + 0.5 * ka
            db = 1j * (c.omega_b - omega_p) + 0.5 * kb
            det = da * db + c.g_r * c.g_r
            mom_a = (db * eps_a - 1j * c.g_r * eps_b) / det
            mom_b = (da * eps_b - 1j * c.g_r * eps_a) / det
        else:
            mom_a, mom_b = _batched_full_moments(c, d0, omega_p, eps_a, eps_b)
        im_a, im_b = mom_a.imag, mom_b.imag
        signal = -(ka / (2 * xi)) * out_a * im_a - (kb / (2 * xi)) * out_b * im_b
        amp[i] = np.abs(signal)

    grid = SpectrumGrid(
        bias=bias_values, probe_hz=probe_hz, amplitude=amp,
        coefficient=coefficient, bias_kind="phi_ex", g_r=gs,
        branch_minus_hz=branch_minus, branch_plus_hz=branch_plus)
    return grid.moving_average(moving_average_hz)


def _batched_full_moments(c: ModeCoefficients, d: DriveConfig, omega_p: np.ndarray,
                          eps_a: float, eps_b: float) -> tuple[np.ndarray, np.ndarray]:
    """Co-rotating moments with pair terms kept, batched over probe frequencies."""
    n = omega_p.size
    g = c.g_r
    m = np.zeros((n, 4, 4), dtype=complex)
    m[:, 0, 0] = 1j * (c.omega_a - omega_p) + 0.5 * d.kappa_a
    m[:, 0, 1] = 1j * g
    m[:, 0, 3] = -1j * g
    m[:, 1, 0] = 1j * g
    m[:, 1, 1] = 1j * (c.omega_b - omega_p) + 0.5 * d.kappa_b
    m[:, 1, 2] = -1j * g
    m[:, 2, 1] = 1j * g
    m[:, 2, 2] = -1j * (c.omega_a + omega_p) + 0.5 * d.kappa_a
    m[:, 2, 3] = -1j * g
    m[:, 3, 0] = 1j * g
    m[:, 3, 2] = -1j * g
    m[:, 3, 3] = -1j * (c.omega_b + omega_p) + 0.5 * d.kappa_b
    rhs = np.broadcast_to(np.array([eps_a, eps_b, 0.0, 0.0], dtype=complex), (n, 4))
    sol = np.linalg.solve(m, rhs[..., None])[..., 0]
    return sol[:, 0], sol[:, 1]


# ---------------------------------------------------------------------------
# Signal-disappearance search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisappearancePoint:
    """Bias where one mode branch loses its signal."""

    bias: float
    branch: str            # "plus" or "minus"
    amplitude: float       # residual along-branch amplitude at the minimum
    g_r: float | None = None


def _refine_minimum(x: np.ndarray, y: np.ndarray, idx: int) -> float:
    """Parabolic sub-sample refinement of a discrete minimum."""
    if idx <= 0 or idx >= len(x) - 1:
        return float(x[idx])
    y0, y1, y2 = y[idx - 1], y[idx], y[idx + 1]
    denom = y0 - 2.0 * y1 + y2
    if denom <= 0:
        return float(x[idx])
    shift = 0.5 * (y0 - y2) / denom
    shift = min(max(shift, -1.0), 1.0)
    return float(x[idx] + shift * (x[idx + 1] - x[idx]))


def find_disappearance(grid: SpectrumGrid, *,
                       window_hz: float | None = None) -> list[DisappearancePoint]:
    """Biases minimizing the along-branch peak amplitude, one per branch.

    Each branch is tracked through the predicted branch frequencies stored
    on the grid; per bias column the peak amplitude inside a probe window
    around the branch is taken, and the bias minimizing that peak is
    refined parabolically.  Requires branch metadata (simulated grids carry
    it; supply it for external maps).
    """
    if grid.branch_minus_hz is None or grid.branch_plus_hz is None:
        raise ValueError("grid carries no branch predictions to track")
    step = abs(float(np.mean(np.diff(grid.probe_hz))))
    if window_hz is None:
        window_hz = 5.0 * step
    points = []
    for name, centers in (("minus", grid.branch_minus_hz), ("plus", grid.branch_plus_hz)):
        peaks = np.full(grid.bias.size, np.nan)
        for i in range(grid.bias.size):
            mask = np.abs(grid.probe_hz - centers[i]) <= window_hz
            if not np.any(mask):
                continue
            peaks[i] = grid.amplitude[i, mask].max()
        good = np.isfinite(peaks)
        if good.sum() < 3:
            warnings.warn(
                f"branch {name} is not resolved by the grid", BranchNotResolvedWarning,
                stacklevel=2,
            )
            continue
        idx = int(np.nanargmin(peaks))
        bias = _refine_minimum(grid.bias, peaks, idx)
        g_val = None
        if grid.g_r is not None:
            g_val = float(np.interp(bias, grid.bias, grid.g_r))
        elif grid.bias_kind == "g_r":
            g_val = bias
        points.append(DisappearancePoint(bias=bias, branch=name,
                                         amplitude=float(peaks[idx]), g_r=g_val))
    return points


# ---------------------------------------------------------------------------
# Density-matrix oracle
# ---------------------------------------------------------------------------

def lindblad_steady_state_oracle(c: ModeCoefficients, d: DriveConfig,
                                 space: FockSpace) -> ResponseAmplitudes:
    """First moments from the full density-matrix steady state.

    Builds the generator with exchange coupling, the crosstalk drive and
    port decay on a truncated number basis, solves for its kernel under the
    unit-trace constraint and reads off <a>, <b>.  The drive has to be weak
    enough for the state to fit in the truncation; linearity of the moments
    in the drive lets callers rescale afterwards.
    """
    na, nb = space.levels
    a = np.kron(destroy(na), np.eye(nb)).astype(complex)
    b = np.kron(np.eye(na), destroy(nb)).astype(complex)
    eps_a, eps_b = d.drive_amplitudes()
    delta_a = c.omega_a - d.omega_p
    delta_b = c.omega_b - d.omega_p
    h = (delta_a * a.conj().T @ a + delta_b * b.conj().T @ b
         + c.g_r * (a.conj().T @ b + a @ b.conj().T)
         + 1j * eps_a * (a.conj().T - a) + 1j * eps_b * (b.conj().T - b))

    dim = space.dim
    eye = np.eye(dim)
    lio = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for rate, op in ((d.kappa_a, a), (d.kappa_b, b)):
        if rate == 0.0:
            continue
        op_dag_op = op.conj().T @ op
        lio += rate * (np.kron(op, op.conj())
                       - 0.5 * np.kron(op_dag_op, eye)
                       - 0.5 * np.kron(eye, op_dag_op.T))

    trace_row = eye.reshape(1, -1).astype(complex)
    system = np.vstack([lio, trace_row])
    rhs = np.zeros(dim * dim + 1, dtype=complex)
    rhs[-1] = 1.0
    solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
    rho = solution.reshape(dim, dim)
    rho = 0.5 * (rho + rho.conj().T)
    rho /= np.trace(rho).real

    occ = np.real(np.diagonal(rho)).reshape(space.levels)
    top = max(occ[-1, :].sum(), occ[:, -1].sum())
    if top > 1e-3:
        raise TruncationError(
            f"steady state occupies the truncation edge (weight {top:.2e}); "
            f"reduce the drive or enlarge the space"
        )
    return ResponseAmplitudes(a=complex(np.trace(rho @ a)), b=complex(np.trace(rho @ b)))
