"""Acceptance suite: every release criterion at its stated tolerance.

Run with ``pytest tests/test_acceptance.py -v -s`` to see one PASS/FAIL
line per criterion.
"""

import math
import sys
import time

import numpy as np

from couplersim.circuit import (
    ModeCoefficients,
    mode_coefficients,
    rwa_modes,
    eigenmodes,
)
from couplersim.fitting import CircuitSpectrumFitter, g_range, rwa_shift
from couplersim.fock import (
    FockSpace,
    build_hamiltonian,
    ground_state,
    mean_photon,
    numeric_eigenmodes,
    reduced_density,
    von_neumann_entropy,
)
from couplersim.params import FluxBias
from couplersim.response import (
    DriveConfig,
    find_disappearance,
    lindblad_steady_state_oracle,
    scan_spectrum,
    steady_state_moments,
)

import oracles

TAU = math.tau
MHZ = 1e6


def report(name, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}", file=sys.stderr)
    assert ok, f"{name}: {detail}"


# ---------------------------------------------------------------------------
# 1. Coupling range
# ---------------------------------------------------------------------------

def test_c1_coupling_range(sample_params):
    start = time.perf_counter()
    g_min, g_max = g_range(sample_params, num=2000)
    elapsed = time.perf_counter() - start
    g_min_mhz = g_min / TAU / MHZ
    g_max_mhz = g_max / TAU / MHZ
    ok = (abs(g_min_mhz + 1086) <= 0.05 * 1086
          and abs(g_max_mhz - 604) <= 0.05 * 604
          and elapsed < 1.0)
    report("coupling-range", ok,
           f"extrema ({g_min_mhz:.1f}, {g_max_mhz:.1f}) MHz, "
           f"target (-1086, +604) +-5%, sweep {elapsed:.3f} s (< 1 s)")


# ---------------------------------------------------------------------------
# 2. Ultrastrong ratio
# ---------------------------------------------------------------------------

def test_c2_ultrastrong_ratio(sample_params):
    c = mode_coefficients(sample_params, FluxBias.from_turns(0.5))
    ratio = abs(c.g_r) / max(c.omega_a, c.omega_b)
    ok = abs(ratio - 0.20) <= 0.02
    report("ultrastrong-ratio", ok, f"|g|/max(omega) = {ratio:.4f}, target 0.20 +-0.02")


# ---------------------------------------------------------------------------
# 3. Shift of the lower mode without pair terms
# ---------------------------------------------------------------------------

def test_c3_rwa_shift(sample_params):
    _, shift_minus = rwa_shift(sample_params, FluxBias.from_turns(0.5))
    shift_mhz = shift_minus / TAU / MHZ
    ok = abs(shift_mhz - 135.0) <= 13.5
    report("rwa-shift", ok, f"lower-mode shift {shift_mhz:.1f} MHz, target 135 +-10%")


# ---------------------------------------------------------------------------
# 4. Ground-state occupation and entropy
# ---------------------------------------------------------------------------

def test_c4_ground_occupation():
    start = time.perf_counter()
    w = TAU * 5e9
    c = ModeCoefficients(omega_a=w, omega_b=w, g_r=0.2 * w)
    space = FockSpace(30, 30)
    _, rho = ground_state(build_hamiltonian(c, space), space)
    n_a = mean_photon(rho, "a")
    s_a = von_neumann_entropy(reduced_density(rho, "a"))
    elapsed = time.perf_counter() - start
    ok = abs(n_a - 0.012) <= 0.002 and abs(s_a - 0.09) <= 0.01 and elapsed < 10.0
    report("ground-occupation", ok,
           f"n_a = {n_a:.4f} (0.012 +-0.002), S_a = {s_a:.4f} bits "
           f"(0.09 +-0.01), {elapsed:.2f} s (< 10 s)")


# ---------------------------------------------------------------------------
# 5. Crosstalk disappearance
# ---------------------------------------------------------------------------

def _bias_window(params, g_target):
    def g_of(phi):
        return mode_coefficients(params, FluxBias(phi_ex=phi)).g_r

    def solve(value):
        lo, hi = 0.40 * TAU, 0.499 * TAU
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if g_of(mid) > value:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return solve(abs(g_target)), solve(-abs(g_target))


def test_c5_crosstalk_disappearance(sample_params):
    start = time.perf_counter()
    drive = DriveConfig(epsilon=TAU * 1.5 * MHZ, kappa_a=TAU * 3.3e-4 * MHZ,
                        kappa_b=TAU * 3.3e-4 * MHZ, omega_p=0.0, eta=0.25)
    lo, hi = _bias_window(sample_params, TAU * 30 * MHZ)
    bias = np.linspace(lo, hi, 200)
    edges = []
    for phi in (bias[0], bias[-1]):
        wp, wm = rwa_modes(mode_coefficients(sample_params, FluxBias(float(phi))))
        edges += [wp / TAU, wm / TAU]
    probe = np.linspace(min(edges) - 10 * MHZ, max(edges) + 10 * MHZ, 400)

    grid = scan_spectrum(sample_params, bias, probe, drive,
                         coefficient="t_BA", moving_average_hz=1 * MHZ)
    points = {pt.branch: pt.g_r / TAU / MHZ for pt in find_disappearance(grid)}

    drive0 = DriveConfig(epsilon=drive.epsilon, kappa_a=drive.kappa_a,
                         kappa_b=drive.kappa_b, omega_p=0.0, eta=0.0)
    grid0 = scan_spectrum(sample_params, bias, probe, drive0,
                          coefficient="t_BA", moving_average_hz=1 * MHZ)
    zeros = [pt.g_r / TAU / MHZ for pt in find_disappearance(grid0)]
    elapsed = time.perf_counter() - start

    resolution = abs(np.diff(grid0.g_r).mean()) / TAU / MHZ
    ok = (abs(points["plus"] + 11.0) <= 2.0
          and abs(points["minus"] - 11.0) <= 2.0
          and all(abs(z) <= resolution for z in zeros)
          and elapsed < 60.0)
    report("crosstalk-disappearance", ok,
           f"eta=0.25 at ({points['plus']:.1f}, {points['minus']:.1f}) MHz "
           f"(target -+11 +-2); eta=0 at {[f'{z:.2f}' for z in zeros]} MHz "
           f"(|g| <= resolution {resolution:.2f}); {elapsed:.1f} s (< 60 s)")


# ---------------------------------------------------------------------------
# 6. Three-junction coupling range
# ---------------------------------------------------------------------------

def test_c6_three_junction_range(sample_params_3j):
    g_min, g_max = g_range(sample_params_3j, num=801)
    g_min_mhz = g_min / TAU / MHZ
    g_max_mhz = g_max / TAU / MHZ
    ok = (abs(g_min_mhz + 291) <= 0.05 * 291
          and abs(g_max_mhz - 184) <= 0.05 * 184)
    report("three-junction-range", ok,
           f"extrema ({g_min_mhz:.1f}, {g_max_mhz:.1f}) MHz, "
           f"target (-291, +184) +-5%")


# ---------------------------------------------------------------------------
# 7. Oracle equivalence
# ---------------------------------------------------------------------------

def test_c7_oracle_equivalence():
    rng = np.random.default_rng(42)
    # spectrum gaps against the closed form
    space = FockSpace(30, 30)
    worst_gap = 0.0
    for _ in range(20):
        wa, wb = TAU * rng.uniform(4e9, 7e9, 2)
        g = rng.uniform(-0.35, 0.35) * math.sqrt(wa * wb) / 2
        c = ModeCoefficients(omega_a=wa, omega_b=wb, g_r=g)
        gap_p, gap_m = numeric_eigenmodes(c, space)
        wp, wm = eigenmodes(c)
        worst_gap = max(worst_gap, abs(gap_p - wp) / wp, abs(gap_m - wm) / wm)

    # first moments against the density-matrix steady state
    oracle_space = FockSpace(4, 4)
    worst_moment = 0.0
    for _ in range(20):
        w = TAU * 5e9
        c = ModeCoefficients(omega_a=w,
                             omega_b=w + TAU * rng.uniform(-2e6, 2e6),
                             g_r=TAU * rng.uniform(-1.5e6, 1.5e6))
        kappa = TAU * rng.uniform(0.5e6, 1.5e6)
        d = DriveConfig(epsilon=0.12 * kappa, kappa_a=kappa,
                        kappa_b=kappa * rng.uniform(0.7, 1.3),
                        omega_p=w + TAU * rng.uniform(-2e6, 2e6),
                        eta=rng.uniform(0.0, 0.4))
        lin = steady_state_moments(c, d)
        orc = lindblad_steady_state_oracle(c, d, oracle_space)
        scale = max(abs(lin.a), abs(lin.b))
        worst_moment = max(worst_moment, abs(lin.a - orc.a) / scale,
                           abs(lin.b - orc.b) / scale)

    ok = worst_gap < 1e-3 and worst_moment < 1e-3
    report("oracle-equivalence", ok,
           f"worst gap deviation {worst_gap:.2e} (< 1e-3), "
           f"worst moment deviation {worst_moment:.2e} (< 1e-3), 20+20 configs")


# ---------------------------------------------------------------------------
# 8. Fit round trip
# ---------------------------------------------------------------------------

def _curve_rms(fitter, peaks):
    pred = fitter.predict(peaks[:, 0])
    nearest = [np.nanmin(np.abs(pred[i] - peaks[i, 1]))
               for i in range(len(peaks))]
    return float(np.sqrt(np.mean(np.square(nearest))))


def test_c8_fit_round_trip(sample_params):
    biases = np.linspace(0.02, 0.98, 120) * TAU
    clean = oracles.synthetic_branch_peaks(sample_params, biases)

    rng = np.random.default_rng(0)
    init = sample_params.replace(
        gamma=sample_params.gamma * (1 + 0.1 * rng.uniform(-1, 1)),
        M_0=sample_params.M_0 * (1 + 0.1 * rng.uniform(-1, 1)))
    fitter = CircuitSpectrumFitter(initial_params=init,
                                   free=("gamma", "M_0")).fit(clean)
    clean_rms = _curve_rms(fitter, clean)

    noisy_rms = []
    for seed in range(20):
        noise_rng = np.random.default_rng(1000 + seed)
        noisy = oracles.synthetic_branch_peaks(sample_params, biases,
                                               noise_hz=1e6, rng=noise_rng)
        init_seed = sample_params.replace(
            gamma=sample_params.gamma * (1 + 0.1 * noise_rng.uniform(-1, 1)),
            M_0=sample_params.M_0 * (1 + 0.1 * noise_rng.uniform(-1, 1)))
        noisy_fit = CircuitSpectrumFitter(initial_params=init_seed,
                                          free=("gamma", "M_0")).fit(noisy)
        noisy_rms.append(noisy_fit.result_.rms_hz)
    median_rms = float(np.median(noisy_rms))

    ok = clean_rms < 1e6 and median_rms < 1.5e6
    report("fit-round-trip", ok,
           f"noiseless curve RMS {clean_rms / 1e6:.4f} MHz (< 1), "
           f"median noisy RMS {median_rms / 1e6:.3f} MHz (< 1.5, 20 seeds)")


# ---------------------------------------------------------------------------
# 9. Identity suite
# ---------------------------------------------------------------------------

def test_c9_identity_suite(sample_params):
    rng = np.random.default_rng(9)
    # exchange-only squared-frequency identity at degeneracy
    worst_identity = 0.0
    for _ in range(25):
        w = TAU * rng.uniform(3e9, 8e9)
        g = rng.choice((-1.0, 1.0)) * rng.uniform(0.05, 0.45) * w
        c = ModeCoefficients(omega_a=w, omega_b=w, g_r=g)
        wp, wm = eigenmodes(c)
        wpr, wmr = rwa_modes(c)
        worst_identity = max(worst_identity,
                             abs((wpr ** 2 - wp ** 2) - g * g) / (g * g),
                             abs((wmr ** 2 - wm ** 2) - g * g) / (g * g))

    # network identity without the geometric mutual
    p = sample_params.replace(M_0=0.0)
    worst_network = 0.0
    for phi_ex in np.linspace(0.03, TAU - 0.03, 31):
        rec = mode_coefficients(p, FluxBias(float(phi_ex))).record
        lhs = rec.M_star * (2 * p.L_sh + rec.L_J)
        worst_network = max(worst_network,
                            abs(lhs - p.L_sh ** 2) / p.L_sh ** 2)

    # large-mutual limits
    from couplersim.circuit import infinite_mutual_limits

    bias = FluxBias(0.0)
    wa_inf, wb_inf, g_inf = infinite_mutual_limits(sample_params, bias)
    worst_limit = 0.0
    for override in (1e2, 1e3, 1e4, 1e5, 1e6):
        c = mode_coefficients(sample_params, bias, m_star_override=override)
        worst_limit = max(worst_limit,
                          abs(c.omega_a - wa_inf) / wa_inf,
                          abs(c.omega_b - wb_inf) / wb_inf,
                          abs(c.g_r - g_inf) / g_inf)

    ok = worst_identity < 1e-12 and worst_network < 1e-12 and worst_limit < 1e-4
    report("identity-suite", ok,
           f"squared-identity {worst_identity:.2e} (< 1e-12), "
           f"network identity {worst_network:.2e} (< 1e-12), "
           f"large-mutual limits {worst_limit:.2e} (< 1e-4)")
