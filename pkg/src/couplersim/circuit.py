"""Classical circuit model of two LC resonators coupled by a flux-tunable junction.

The chain implemented here runs, for one bias point:

    phi_ex -> junction phase (loop-potential minimum)
           -> junction inductance L_J
           -> effective mutual/series inductances (star-delta reduction)
           -> quantized-Hamiltonian coefficients (omega_a, omega_b, g_r)
           -> exact and rotating-wave eigenmodes

Everything is SI: inductances in henry, capacitances in farad, angular
frequencies in rad/s, phases in radians.  All functions are pure; bias
points of a sweep may be evaluated concurrently without coordination.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.constants import hbar

from .exceptions import (
    ConvergenceError,
    DegenerateNetworkError,
    MultistableWarning,
    NegativeModeMassError,
    PoleError,
    UnstableModeError,
)
from .params import CalibrationConstants, CircuitParams, FluxBias, ThreeJunctionParams

TAU = math.tau

# Default pole guards: dimensionless on cos(phi) - gamma, henries on
# network denominators.  Both are configurable per call.
EPS_POLE = 1e-9
EPS_INDUCTANCE = 1e-15


# ---------------------------------------------------------------------------
# Result containers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffectiveCoupler:
    """Delta-equivalent of the coupler network: mutual and series inductance."""

    M_star: float
    L_star: float


@dataclass(frozen=True)
class ModeRecord:
    """Intermediate quantities behind one set of Hamiltonian coefficients.

    Exposed for testing and CSV export.  ``junction_phases`` holds the
    phase of every junction at the potential minimum (one entry for the
    single-junction coupler, three for the three-junction variant);
    ``phi_star`` is the bridge-junction phase.  For the single-junction
    coupler both arms share L_sh, so ``L_star_a == L_star_b``.
    """

    phi_ex: float
    phi_star: float
    junction_phases: tuple
    L_J: float
    L_arm_a: float
    L_arm_b: float
    M_star: float
    L_star_a: float
    L_star_b: float
    L_a0: float
    L_b0: float
    L_prime_a: float
    L_prime_b: float
    L_m_a: float
    L_m_b: float
    M_m: float
    Z_a: float
    Z_b: float
    omega_a0: float
    omega_b0: float
    I_zpf_a: float
    I_zpf_b: float

    @property
    def L_star(self) -> float:
        return self.L_star_a


@dataclass(frozen=True)
class ModeCoefficients:
    """Coefficients of the quantized two-mode Hamiltonian at one bias point.

    ``g_r`` is signed: positive for the ferromagnetic side of the sweep
    (mutual inductance dominated by the geometric term), negative past the
    zero crossing.  The computation record is carried along for inspection
    but does not take part in equality comparisons.
    """

    omega_a: float
    omega_b: float
    g_r: float
    record: ModeRecord | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.omega_a <= 0 or self.omega_b <= 0:
            raise ValueError("mode frequencies must be positive")


# ---------------------------------------------------------------------------
# Junction inductance and loop potentials
# ---------------------------------------------------------------------------

def _junction_scale(L_J0: float, phi_dc: float) -> float:
    # Residual two-junction-loop dependence: the bridge junction pair acts
    # as one junction whose critical current is reduced by cos(phi_dc/2).
    c = math.cos(0.5 * phi_dc)
    if abs(c) < EPS_POLE:
        raise PoleError(f"two-junction loop biased at its critical point: phi_dc={phi_dc!r}")
    return L_J0 / c


def junction_inductance(phi: float, params: CircuitParams, *,
                        phi_dc: float = 0.0, eps_pole: float = EPS_POLE) -> float:
    """Tunable junction inductance L_J0/(cos(phi) - gamma) + L_0.

    The sign follows cos(phi) - gamma; a negative effective inductance is
    legal and propagates into the network reduction.  Raises
    :class:`PoleError` within ``eps_pole`` of the modulation pole.
    """
    c = math.cos(phi) - params.gamma
    if abs(c) < eps_pole:
        raise PoleError(
            f"junction inductance pole: |cos(phi) - gamma| = {abs(c):.3e} < {eps_pole:.1e}"
        )
    return _junction_scale(params.L_J0, phi_dc) / c + params.L_0


def rf_potential(phi, phi_ex: float, params: CircuitParams, *, phi_dc: float = 0.0):
    """Coupler-loop potential, scaled by (2*pi/Phi_0)^2 (units 1/H).

    The overall flux-quantum prefactor does not move the minimum and is
    dropped throughout.
    """
    L_J0 = _junction_scale(params.L_J0, phi_dc)
    d = np.asarray(phi, dtype=float) - phi_ex
    return 0.5 * d * d / params.loop_inductance - np.cos(phi) / L_J0


def rf_potential_grad(phi, phi_ex: float, params: CircuitParams, *, phi_dc: float = 0.0):
    """First derivative of :func:`rf_potential` with respect to phi."""
    L_J0 = _junction_scale(params.L_J0, phi_dc)
    return (np.asarray(phi, dtype=float) - phi_ex) / params.loop_inductance + np.sin(phi) / L_J0


def _reduce_phase(phi_ex: float) -> tuple[float, float]:
    """Split phi_ex into (reduced value in [-pi, pi], exact 2*pi*k shift)."""
    reduced = math.remainder(phi_ex, TAU)
    return reduced, phi_ex - reduced


def _minimize_rf_reduced(phi_red: float, params: CircuitParams, *,
                         phi_dc: float, tol: float, max_iter: int) -> float:
    """Global minimum of the loop potential for a bias already reduced mod 2*pi."""
    L_loop = params.loop_inductance
    L_J0 = _junction_scale(params.L_J0, phi_dc)

    def grad(phi):
        return (phi - phi_red) / L_loop + math.sin(phi) / L_J0

    def curv(phi):
        return 1.0 / L_loop + math.cos(phi) / L_J0

    def newton(lo, hi):
        # Safeguarded Newton on grad; lo/hi bracket a sign change.
        phi = 0.5 * (lo + hi)
        for _ in range(max_iter):
            g = grad(phi)
            if g > 0.0:
                hi = phi
            elif g < 0.0:
                lo = phi
            else:
                return phi
            c = curv(phi)
            step_ok = c > 0.0
            if step_ok:
                nxt = phi - g / c
                step_ok = lo < nxt < hi
            if not step_ok:
                nxt = 0.5 * (lo + hi)
            if abs(nxt - phi) < tol:
                return nxt
            phi = nxt
        raise ConvergenceError(
            f"loop-potential minimization did not reach tol={tol} in {max_iter} iterations"
        )

    lo, hi = phi_red - math.pi, phi_red + math.pi
    if params.monostable:
        # grad is strictly increasing, and grad(lo) < 0 < grad(hi) because
        # pi/L_loop > 1/L_J0 for monostable parameters.
        return newton(lo, hi)

    # Multistable parameters: locate every minimum by a sign scan of the
    # gradient, then keep the global minimum of the potential.  Taking the
    # global minimum is sweep-direction independent, which is what a
    # hysteresis-free branch means here.
    n = 4096
    grid = np.linspace(lo, hi, n + 1)
    g = (grid - phi_red) / L_loop + np.sin(grid) / L_J0
    sign_change = np.nonzero(np.signbit(g[:-1]) != np.signbit(g[1:]))[0]
    minima = []
    for i in sign_change:
        if g[i] < 0.0 <= g[i + 1]:  # ascending crossing -> minimum
            minima.append(newton(grid[i], grid[i + 1]))
    if not minima:
        return newton(lo, hi)
    if len(minima) > 1:
        warnings.warn(
            f"loop potential has {len(minima)} minima; selecting the global one",
            MultistableWarning,
            stacklevel=3,
        )
    energies = [rf_potential(phi, phi_red, params, phi_dc=phi_dc) for phi in minima]
    return minima[int(np.argmin(energies))]


def minimize_rf_potential(phi_ex: float, params: CircuitParams, *,
                          phi_dc: float = 0.0, tol: float = 1e-10,
                          max_iter: int = 200) -> float:
    """Junction phase minimizing the coupler-loop potential.

    The stationarity residual satisfies |grad| * loop_inductance < ~tol and
    the curvature at the solution is non-negative.  For multistable
    parameter sets the global minimum is returned and a
    :class:`MultistableWarning` is emitted.
    """
    phi_red, shift = _reduce_phase(phi_ex)
    return _minimize_rf_reduced(phi_red, params, phi_dc=phi_dc, tol=tol,
                                max_iter=max_iter) + shift


# ---------------------------------------------------------------------------
# Three-junction loop potential
# ---------------------------------------------------------------------------

def threej_potential(phases, phi_ex: float, params: ThreeJunctionParams):
    """Three-junction loop potential, scaled by (2*pi/Phi_0)^2 (units 1/H)."""
    p = np.asarray(phases, dtype=float)
    d = p.sum(axis=-1) - phi_ex
    cos = np.cos(p)
    return (0.5 * d * d / params.loop_inductance
            - cos[..., 0] / params.L_Jalpha
            - cos[..., 1] / params.L_JsL
            - cos[..., 2] / params.L_JsR)


def threej_potential_grad(phases, phi_ex: float, params: ThreeJunctionParams):
    p = np.asarray(phases, dtype=float)
    common = (p.sum() - phi_ex) / params.loop_inductance
    scales = np.array([params.L_Jalpha, params.L_JsL, params.L_JsR])
    return common + np.sin(p) / scales


def _threej_hessian(p, params: ThreeJunctionParams):
    scales = np.array([params.L_Jalpha, params.L_JsL, params.L_JsR])
    h = np.full((3, 3), 1.0 / params.loop_inductance)
    h[np.diag_indices(3)] += np.cos(p) / scales
    return h


def _threej_newton(start, phi_red: float, params: ThreeJunctionParams,
                   tol: float, max_iter: int):
    """Damped Newton descent from one start; returns (phases, value) or None."""
    p = np.asarray(start, dtype=float)
    value = threej_potential(p, phi_red, params)
    for _ in range(max_iter):
        g = threej_potential_grad(p, phi_red, params)
        h = _threej_hessian(p, params)
        lam = 0.0
        scale = max(abs(h).max(), 1.0)
        for _ in range(60):
            try:
                step = np.linalg.solve(h + lam * np.eye(3), -g)
            except np.linalg.LinAlgError:
                step = -g * params.loop_inductance
            # Backtrack until the potential decreases (or the step is tiny).
            t = 1.0
            for _ in range(40):
                trial = p + t * step
                trial_value = threej_potential(trial, phi_red, params)
                if trial_value <= value:
                    break
                t *= 0.5
            else:
                lam = max(2.0 * lam, 1e-6 * scale)
                continue
            break
        else:
            return None
        moved = t * np.max(np.abs(step))
        p = trial
        value = trial_value
        if moved < tol and np.max(np.abs(g)) * params.loop_inductance < 1e3 * tol:
            h = _threej_hessian(p, params)
            if np.all(np.linalg.eigvalsh(h) >= -1e-9 / params.loop_inductance):
                return p, value
            return None
    return None


def minimize_3j_potential(phi_ex: float, params: ThreeJunctionParams, *,
                          tol: float = 1e-10, max_iter: int = 200):
    """Joint minimizer (phi_alpha, phi_L, phi_R) of the three-junction potential.

    Runs a damped Newton iteration from several deterministic starts and
    keeps the lowest minimum found; emits :class:`MultistableWarning` when
    the starts settle into distinct minima.
    """
    phi_red, shift = _reduce_phase(phi_ex)
    L_sum = params.loop_inductance + params.L_Jalpha + params.L_JsL + params.L_JsR
    linear = phi_red * np.array([params.L_Jalpha, params.L_JsL, params.L_JsR]) / L_sum
    starts = [
        linear,
        np.array([phi_red, 0.0, 0.0]),
        np.array([0.0, 0.5 * phi_red, 0.5 * phi_red]),
        np.full(3, phi_red / 3.0),
    ]
    solutions = []
    for start in starts:
        result = _threej_newton(start, phi_red, params, tol, max_iter)
        if result is None:
            continue
        p, value = result
        if not any(np.max(np.abs(p - q)) < 1e-6 for q, _ in solutions):
            solutions.append((p, value))
    if not solutions:
        raise ConvergenceError("three-junction potential minimization did not converge")
    if len(solutions) > 1:
        warnings.warn(
            f"three-junction potential has {len(solutions)} minima; selecting the global one",
            MultistableWarning,
            stacklevel=2,
        )
    best = min(solutions, key=lambda item: item[1])[0]
    return (best[0] + shift, best[1], best[2])


# ---------------------------------------------------------------------------
# Network reduction and Hamiltonian coefficients
# ---------------------------------------------------------------------------

def _coupler_network(L_arm_a: float, L_arm_b: float, L_J: float, M_0: float,
                     eps: float) -> tuple[float, float, float]:
    """Delta equivalent of the arm-arm-junction star.

    Returns (M_star, L_star_a, L_star_b).  Derived by eliminating the
    circulating loop current from the magnetic energy, which reduces to the
    usual star-delta result for equal arms.
    """
    denom = L_arm_a + L_arm_b + L_J
    if abs(denom) < eps:
        raise DegenerateNetworkError(
            f"degenerate coupler network: |L_arm_a + L_arm_b + L_J| = {abs(denom):.3e} H"
        )
    m = L_arm_a * L_arm_b / denom + M_0
    return m, L_arm_a * L_J / denom, L_arm_b * L_J / denom


def star_delta(L_sh: float, L_J: float, M_0: float, *,
               eps: float = EPS_INDUCTANCE) -> EffectiveCoupler:
    """Star-delta reduction of the symmetric coupler network.

    M_star = L_sh^2/(2*L_sh + L_J) + M_0 and L_star = L_sh*L_J/(2*L_sh + L_J).
    """
    m, l_a, _ = _coupler_network(L_sh, L_sh, L_J, M_0, eps)
    return EffectiveCoupler(M_star=m, L_star=l_a)


def _coefficients_from_network(phi_ex, phi_star, junction_phases, L_J,
                               L_arm_a, L_arm_b, M_star, L_star_a, L_star_b,
                               L_a, L_b, C_a, C_b,
                               eps: float) -> ModeCoefficients:
    L_a0 = L_a + L_star_a
    L_b0 = L_b + L_star_b
    if L_a0 <= 0 or L_b0 <= 0:
        raise NegativeModeMassError(
            f"bare resonator inductance non-positive: L_a0={L_a0:.3e}, L_b0={L_b0:.3e}"
        )
    L_prime_a = L_a0 + M_star
    L_prime_b = L_b0 + M_star
    # Shared numerator of L'_a - M^2/L'_b, its mirror and -M + L'_a L'_b / M;
    # expanding L' = L_0 + M cancels the M^2 terms analytically, which keeps
    # the chain accurate for mutual inductances of any magnitude.
    q = L_a0 * L_b0 + M_star * (L_a0 + L_b0)
    if abs(M_star) < eps:
        # Decoupled limit: the effective coupling mass diverges.
        L_m_a, L_m_b = L_a0, L_b0
        M_m = math.inf
    else:
        L_m_a = q / L_prime_b
        L_m_b = q / L_prime_a
        M_m = q / M_star
    if L_m_a <= 0 or L_m_b <= 0:
        raise NegativeModeMassError(
            f"effective mode inductance non-positive: L_m_a={L_m_a:.3e}, L_m_b={L_m_b:.3e}"
        )
    Z_a = math.sqrt(L_m_a / C_a)
    Z_b = math.sqrt(L_m_b / C_b)
    omega_a = 1.0 / math.sqrt(L_m_a * C_a)
    omega_b = 1.0 / math.sqrt(L_m_b * C_b)
    g_r = 0.0 if math.isinf(M_m) else math.sqrt(Z_a * Z_b) / (2.0 * M_m)
    omega_a0 = 1.0 / math.sqrt(L_a0 * C_a)
    omega_b0 = 1.0 / math.sqrt(L_b0 * C_b)
    record = ModeRecord(
        phi_ex=phi_ex,
        phi_star=phi_star,
        junction_phases=tuple(junction_phases),
        L_J=L_J,
        L_arm_a=L_arm_a,
        L_arm_b=L_arm_b,
        M_star=M_star,
        L_star_a=L_star_a,
        L_star_b=L_star_b,
        L_a0=L_a0,
        L_b0=L_b0,
        L_prime_a=L_prime_a,
        L_prime_b=L_prime_b,
        L_m_a=L_m_a,
        L_m_b=L_m_b,
        M_m=M_m,
        Z_a=Z_a,
        Z_b=Z_b,
        omega_a0=omega_a0,
        omega_b0=omega_b0,
        I_zpf_a=math.sqrt(hbar * omega_a0 / (2.0 * L_a0)),
        I_zpf_b=math.sqrt(hbar * omega_b0 / (2.0 * L_b0)),
    )
    return ModeCoefficients(omega_a=omega_a, omega_b=omega_b, g_r=g_r, record=record)


def mode_coefficients(params: CircuitParams, bias=FluxBias(), *,
                      m_star_override: float | None = None,
                      eps_pole: float = EPS_POLE,
                      eps_inductance: float = EPS_INDUCTANCE,
                      tol: float = 1e-10) -> ModeCoefficients:
    """Hamiltonian coefficients (omega_a, omega_b, g_r) at one flux bias.

    Runs the full chain: loop-potential minimization, junction inductance,
    star-delta reduction and the inductance-matrix inversion.  All
    intermediates are exposed on ``result.record``.  ``m_star_override``
    replaces the computed effective mutual inductance, which is useful for
    probing the large-mutual limit.

    Derived values are exactly periodic in the bias: the phase is reduced
    modulo 2*pi before any trigonometry.
    """
    bias = FluxBias.coerce(bias)
    phi_red, shift = _reduce_phase(bias.phi_ex)
    phi_star_red = _minimize_rf_reduced(phi_red, params, phi_dc=bias.phi_dc,
                                        tol=tol, max_iter=200)
    L_J = junction_inductance(phi_star_red, params, phi_dc=bias.phi_dc,
                              eps_pole=eps_pole)
    M_star, L_star_a, L_star_b = _coupler_network(
        params.L_sh, params.L_sh, L_J, params.M_0, eps_inductance)
    if m_star_override is not None:
        M_star = float(m_star_override)
    phi_star = phi_star_red + shift
    return _coefficients_from_network(
        bias.phi_ex, phi_star, (phi_star,), L_J,
        params.L_sh, params.L_sh, M_star, L_star_a, L_star_b,
        params.L_a, params.L_b, params.C_a, params.C_b, eps_inductance)


def three_junction_coefficients(params: ThreeJunctionParams, bias=FluxBias(), *,
                                eps_pole: float = EPS_POLE,
                                eps_inductance: float = EPS_INDUCTANCE,
                                tol: float = 1e-10) -> ModeCoefficients:
    """Hamiltonian coefficients for the three-junction coupler variant.

    The arm junctions take the place of the shared inductance:
    L_arm = L_Js/cos(phi_arm) + L_0arm, with the bridge junction
    L_J = L_Jalpha/cos(phi_alpha) + L_0, each phase sitting at the joint
    potential minimum.
    """
    bias = FluxBias.coerce(bias)
    phi_red, shift = _reduce_phase(bias.phi_ex)
    phi_alpha, phi_left, phi_right = minimize_3j_potential(phi_red, params, tol=tol)

    def tunable(scale, series, phi, name):
        c = math.cos(phi)
        if abs(c) < eps_pole:
            raise PoleError(f"{name} junction at its inductance pole: cos={c:.3e}")
        return scale / c + series

    L_J = tunable(params.L_Jalpha, params.L_0, phi_alpha, "bridge")
    L_arm_a = tunable(params.L_JsL, params.L_0L, phi_left, "left arm")
    L_arm_b = tunable(params.L_JsR, params.L_0R, phi_right, "right arm")
    M_star, L_star_a, L_star_b = _coupler_network(
        L_arm_a, L_arm_b, L_J, params.M_0, eps_inductance)
    return _coefficients_from_network(
        bias.phi_ex, phi_alpha + shift,
        (phi_alpha + shift, phi_left, phi_right), L_J,
        L_arm_a, L_arm_b, M_star, L_star_a, L_star_b,
        params.L_a, params.L_b, params.C_a, params.C_b, eps_inductance)


def coefficients_at(params, bias=FluxBias(), **kwargs) -> ModeCoefficients:
    """Dispatch to the right coefficient chain for the parameter type."""
    if isinstance(params, CircuitParams):
        return mode_coefficients(params, bias, **kwargs)
    if isinstance(params, ThreeJunctionParams):
        return three_junction_coefficients(params, bias, **kwargs)
    raise TypeError(f"unsupported parameter type {type(params).__name__}")


def sweep_coefficients(params, phi_ex_values, **kwargs) -> list[ModeCoefficients]:
    """Evaluate :func:`coefficients_at` over a bias sweep."""
    return [coefficients_at(params, FluxBias(phi_ex=float(phi)), **kwargs)
            for phi in np.asarray(phi_ex_values, dtype=float)]


# ---------------------------------------------------------------------------
# Eigenmodes and limits
# ---------------------------------------------------------------------------

def eigenmodes(c: ModeCoefficients) -> tuple[float, float]:
    """Exact normal-mode frequencies (omega_plus, omega_minus).

    omega_pm^2 = (wa^2 + wb^2 +- sqrt((wa^2 - wb^2)^2 + 16 g^2 wa wb)) / 2.
    The lower mode hits zero exactly at |g_r| = sqrt(wa*wb)/2 and is
    imaginary beyond, which raises :class:`UnstableModeError`.
    """
    if c.g_r == 0.0:
        return max(c.omega_a, c.omega_b), min(c.omega_a, c.omega_b)
    wa2 = c.omega_a * c.omega_a
    wb2 = c.omega_b * c.omega_b
    s = wa2 + wb2
    root = math.sqrt((wa2 - wb2) ** 2 + 16.0 * c.g_r * c.g_r * c.omega_a * c.omega_b)
    plus_sq = 0.5 * (s + root)
    minus_sq = 0.5 * (s - root)
    if minus_sq < -1e-14 * s:
        raise UnstableModeError(
            f"|g_r| = {abs(c.g_r):.4e} rad/s exceeds sqrt(omega_a*omega_b)/2 "
            f"= {math.sqrt(c.omega_a * c.omega_b) / 2:.4e} rad/s"
        )
    return math.sqrt(plus_sq), math.sqrt(max(minus_sq, 0.0))


def rwa_modes(c: ModeCoefficients) -> tuple[float, float]:
    """Normal-mode frequencies when only photon-exchange coupling is kept.

    omega_pm = (wa + wb +- sqrt(4 g^2 + (wa - wb)^2)) / 2; always real.
    """
    if c.g_r == 0.0:
        return max(c.omega_a, c.omega_b), min(c.omega_a, c.omega_b)
    root = math.sqrt(4.0 * c.g_r * c.g_r + (c.omega_a - c.omega_b) ** 2)
    half_sum = 0.5 * (c.omega_a + c.omega_b)
    return half_sum + 0.5 * root, half_sum - 0.5 * root


def zpf_coupling_approx(params, bias=FluxBias(), **kwargs) -> float:
    """Small-mutual estimate of the coupling from zero-point currents.

    g ~ M_star * I_zpf_a * I_zpf_b / hbar, valid when |M_star| is small
    against the bare resonator inductances.
    """
    rec = coefficients_at(params, bias, **kwargs).record
    return (rec.M_star * math.sqrt(rec.omega_a0 * rec.omega_b0)
            / (2.0 * math.sqrt(rec.L_a0 * rec.L_b0)))


def infinite_mutual_limits(params, bias=FluxBias(), **kwargs) -> tuple[float, float, float]:
    """Limiting coefficients for a diverging effective mutual inductance.

    Returns (omega_a_inf, omega_b_inf, g_inf) with
    omega_k_inf = 1/sqrt((L_a0 + L_b0) C_k) and
    g_inf = sqrt(omega_a_inf * omega_b_inf)/2.  The bare inductances L_k0
    retain their bias dependence through the series term L_star.
    """
    rec = coefficients_at(params, bias, **kwargs).record
    total = rec.L_a0 + rec.L_b0
    omega_a_inf = 1.0 / math.sqrt(total * params.C_a)
    omega_b_inf = 1.0 / math.sqrt(total * params.C_b)
    return omega_a_inf, omega_b_inf, math.sqrt(omega_a_inf * omega_b_inf) / 2.0


def effective_qubit_coupling(g_r: float, g_q: float, omega_r: float, *,
                             eps: float = 1e-12) -> float:
    """Mediated qubit-qubit coupling J12 = 4 g_r g_q^2 / (omega_r^2 - 4 g_r^2)."""
    denom = omega_r * omega_r - 4.0 * g_r * g_r
    if abs(denom) < eps * omega_r * omega_r:
        raise UnstableModeError("mediated coupling diverges at |2 g_r| = omega_r")
    return 4.0 * g_r * g_q * g_q / denom


def flux_calibration(coil_current: float, local_current: float,
                     cal: CalibrationConstants) -> FluxBias:
    """Affine map from line currents to the two loop phases.

    The local line couples into the small loop a factor ``rf_dc_ratio``
    weaker than into the main loop.
    """
    phi_ex = cal.a_coil * coil_current + cal.a_local * local_current + cal.offset_ex
    phi_dc = (cal.b_coil * coil_current
              + cal.a_local / cal.rf_dc_ratio * local_current
              + cal.offset_dc)
    return FluxBias(phi_ex=phi_ex, phi_dc=phi_dc)
