import math

import numpy as np
import pytest

from couplersim.circuit import ModeCoefficients, mode_coefficients
from couplersim.exceptions import SingularResponseError
from couplersim.fock import FockSpace
from couplersim.params import FluxBias
from couplersim.response import (
    DriveConfig,
    SpectrumGrid,
    find_disappearance,
    lindblad_steady_state_oracle,
    scan_spectrum,
    steady_state_moments,
    transmission_reflection,
)

TAU = math.tau
KAPPA = TAU * 1e6


def drive(omega_p, eta=0.0, kappa_a=KAPPA, kappa_b=KAPPA, epsilon=0.1 * KAPPA,
          port="A"):
    return DriveConfig(epsilon=epsilon, kappa_a=kappa_a, kappa_b=kappa_b,
                       omega_p=omega_p, eta=eta, input_port=port)


class TestDriveConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            DriveConfig(epsilon=1.0, kappa_a=-1.0, kappa_b=1.0, omega_p=0.0)
        with pytest.raises(ValueError):
            DriveConfig(epsilon=1.0, kappa_a=1.0, kappa_b=1.0, omega_p=0.0, eta=1.2)
        with pytest.raises(ValueError):
            DriveConfig(epsilon=1.0, kappa_a=1.0, kappa_b=1.0, omega_p=0.0,
                        input_port="C")

    def test_crosstalk_splits_drive(self):
        d = drive(0.0, eta=0.25)
        eps_a, eps_b = d.drive_amplitudes()
        assert eps_a == pytest.approx(0.75 * d.epsilon)
        assert eps_b == pytest.approx(0.25 * d.epsilon)


class TestSteadyStateMoments:
    def test_single_mode_on_resonance(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 6e9, g_r=0.0)
        d = drive(c.omega_a)
        m = steady_state_moments(c, d)
        assert m.a == pytest.approx(2.0 * d.xi / math.sqrt(d.kappa_a))
        assert m.a.imag == 0.0
        assert m.b == 0.0

    def test_linearity_in_drive(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 5.001e9,
                             g_r=TAU * 0.4e6)
        d1 = drive(TAU * 5.0005e9, eta=0.2)
        d10 = drive(TAU * 5.0005e9, eta=0.2, epsilon=10 * d1.epsilon)
        m1 = steady_state_moments(c, d1)
        m10 = steady_state_moments(c, d10)
        assert m10.a == pytest.approx(10.0 * m1.a, rel=1e-12)
        assert m10.b == pytest.approx(10.0 * m1.b, rel=1e-12)

    def test_full_coupling_matches_rwa_for_weak_g(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 5.0001e9,
                             g_r=TAU * 0.2e6)
        d = drive(TAU * 5.00005e9, eta=0.1)
        m_rwa = steady_state_moments(c, d, rwa=True)
        m_full = steady_state_moments(c, d, rwa=False)
        # counter-rotating corrections are of order (g / 2 omega)
        assert m_full.a == pytest.approx(m_rwa.a, rel=1e-4)
        assert m_full.b == pytest.approx(m_rwa.b, rel=1e-4)

    def test_full_coupling_pole_sits_at_exact_eigenmode(self):
        # deep in the ultrastrong regime the response with pair terms peaks
        # at the exact lower mode, well below the exchange-only prediction
        from couplersim.circuit import eigenmodes, rwa_modes

        w = TAU * 5e9
        c = ModeCoefficients(omega_a=w, omega_b=w, g_r=0.2 * w)
        _, wm_exact = eigenmodes(c)
        _, wm_rwa = rwa_modes(c)
        kappa = TAU * 1e6
        probes = wm_exact + np.linspace(-30, 30, 241) * kappa

        def peak_probe(rwa):
            amps = []
            for wp in probes:
                d = DriveConfig(epsilon=0.1 * kappa, kappa_a=kappa,
                                kappa_b=kappa, omega_p=float(wp))
                amps.append(abs(steady_state_moments(c, d, rwa=rwa).a))
            return probes[int(np.argmax(amps))]

        assert abs(peak_probe(rwa=False) - wm_exact) < 2 * kappa
        # the exchange-only solver has no pole there (it sits ~2 pi 127 MHz up)
        assert wm_rwa - wm_exact > 50 * kappa

    def test_singular_without_decay(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 6e9, g_r=0.0)
        d = DriveConfig(epsilon=0.0, kappa_a=0.0, kappa_b=KAPPA,
                        omega_p=c.omega_a)
        with pytest.raises(SingularResponseError):
            steady_state_moments(c, d)

    def test_dispersive_extrema_separated_by_kappa(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 6e9, g_r=0.0)
        detunings = np.linspace(-3 * KAPPA, 3 * KAPPA, 2401)
        response = [steady_state_moments(c, drive(c.omega_a + float(x))).a.imag
                    for x in detunings]
        response = np.asarray(response)
        separation = detunings[np.argmax(response)] - detunings[np.argmin(response)]
        assert abs(separation) == pytest.approx(KAPPA, rel=0.01)


class TestTransmissionReflection:
    def test_decoupled_no_crosstalk_gives_no_transmission(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 6e9, g_r=0.0)
        for wp in np.linspace(TAU * 4.9e9, TAU * 5.1e9, 7):
            d = drive(float(wp))
            t, _ = transmission_reflection(steady_state_moments(c, d), d)
            assert t == 0.0

    def test_symmetric_mixing(self):
        w = TAU * 5e9
        c = ModeCoefficients(omega_a=w, omega_b=w, g_r=0.0)
        d = drive(w + 0.3 * KAPPA, eta=0.5)
        m = steady_state_moments(c, d)
        t, r = transmission_reflection(m, d)
        assert abs(t) == pytest.approx(abs(r), rel=1e-12)

    def test_drive_strength_cancels(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 5.0002e9,
                             g_r=TAU * 1e6)
        d1 = drive(TAU * 5.0001e9, eta=0.3)
        d2 = drive(TAU * 5.0001e9, eta=0.3, epsilon=2 * d1.epsilon)
        t1, r1 = transmission_reflection(steady_state_moments(c, d1), d1)
        t2, r2 = transmission_reflection(steady_state_moments(c, d2), d2)
        assert t1 == pytest.approx(t2, rel=1e-12)
        assert r1 == pytest.approx(r2, rel=1e-12)

    def test_reciprocity(self, sample_params):
        probe = np.linspace(6.50e9, 6.58e9, 101)
        bias = np.linspace(0.470 * TAU, 0.478 * TAU, 21)
        d = DriveConfig(epsilon=TAU * 1.5e6, kappa_a=TAU * 330.0,
                        kappa_b=TAU * 330.0, omega_p=0.0, eta=0.25)
        t_ba = scan_spectrum(sample_params, bias, probe, d, coefficient="t_BA")
        t_ab = scan_spectrum(sample_params, bias, probe, d, coefficient="t_AB")
        assert np.allclose(t_ba.amplitude, t_ab.amplitude, rtol=1e-10)


class TestScanConsistency:
    @pytest.mark.parametrize("coefficient,port,kind", [
        ("t_BA", "A", "t"), ("r_AA", "A", "r"),
        ("t_AB", "B", "t"), ("r_BB", "B", "r"),
    ])
    def test_scan_matches_pointwise_solver(self, sample_params, coefficient,
                                           port, kind):
        phi = 0.4735 * TAU
        c = mode_coefficients(sample_params, FluxBias(phi))
        probe = np.linspace(6.50e9, 6.56e9, 9)
        base = DriveConfig(epsilon=TAU * 1.5e6, kappa_a=TAU * 400.0,
                           kappa_b=TAU * 300.0, omega_p=0.0, eta=0.2)
        grid = scan_spectrum(sample_params, [phi], probe, base,
                             coefficient=coefficient)
        for j, f in enumerate(probe):
            d = DriveConfig(epsilon=base.epsilon, kappa_a=base.kappa_a,
                            kappa_b=base.kappa_b, omega_p=TAU * float(f),
                            eta=base.eta, input_port=port)
            t, r = transmission_reflection(steady_state_moments(c, d), d)
            expected = abs(t) if kind == "t" else abs(r)
            assert grid.amplitude[0, j] == pytest.approx(expected, rel=1e-10)

    def test_scan_with_pair_terms_matches_pointwise_solver(self, sample_params):
        phi = 0.25 * TAU
        c = mode_coefficients(sample_params, FluxBias(phi))
        probe = np.linspace(5.1e9, 5.4e9, 7)
        base = DriveConfig(epsilon=TAU * 1.5e6, kappa_a=TAU * 500.0,
                           kappa_b=TAU * 500.0, omega_p=0.0, eta=0.1)
        grid = scan_spectrum(sample_params, [phi], probe, base,
                             coefficient="t_BA", rwa=False)
        for j, f in enumerate(probe):
            d = DriveConfig(epsilon=base.epsilon, kappa_a=base.kappa_a,
                            kappa_b=base.kappa_b, omega_p=TAU * float(f),
                            eta=base.eta)
            t, _ = transmission_reflection(
                steady_state_moments(c, d, rwa=False), d)
            assert grid.amplitude[0, j] == pytest.approx(abs(t), rel=1e-10)


class TestSpectrumGrid:
    def test_validation(self):
        with pytest.raises(ValueError):
            SpectrumGrid(bias=np.array([0.0, 1.0]), probe_hz=np.array([1.0, 2.0]),
                         amplitude=np.zeros((3, 2)), coefficient="t_BA")
        with pytest.raises(ValueError):
            SpectrumGrid(bias=np.array([0.0, 1.0]), probe_hz=np.array([2.0, 1.0, 3.0]),
                         amplitude=np.zeros((2, 3)), coefficient="t_BA")
        with pytest.raises(ValueError):
            SpectrumGrid(bias=np.array([0.0, 1.0]), probe_hz=np.array([1.0, 2.0]),
                         amplitude=-np.ones((2, 2)), coefficient="t_BA")

    def test_moving_average_preserves_mean(self):
        rng = np.random.default_rng(0)
        grid = SpectrumGrid(bias=np.array([0.0, 1.0]),
                            probe_hz=np.linspace(1e9, 2e9, 64),
                            amplitude=rng.uniform(size=(2, 64)),
                            coefficient="t_BA")
        smooth = grid.moving_average(5 * (grid.probe_hz[1] - grid.probe_hz[0]))
        assert smooth.amplitude.shape == grid.amplitude.shape
        assert smooth.amplitude.mean() == pytest.approx(grid.amplitude.mean(),
                                                        rel=0.05)


def _reference_drive(eta):
    return DriveConfig(epsilon=TAU * 1.5e6, kappa_a=TAU * 330.0,
                       kappa_b=TAU * 330.0, omega_p=0.0, eta=eta)


def _off_region_scan(params, eta, coefficient="t_BA", n_bias=160, n_probe=360):
    # window in flux bias covering couplings of roughly +-25 MHz around zero
    from couplersim.circuit import rwa_modes

    def g_of(phi):
        return mode_coefficients(params, FluxBias(phi_ex=phi)).g_r

    lo, hi = 0.40 * TAU, 0.499 * TAU
    target = TAU * 25e6

    def solve(value):
        a, b = lo, hi
        for _ in range(60):
            mid = 0.5 * (a + b)
            if g_of(mid) > value:
                a = mid
            else:
                b = mid
        return 0.5 * (a + b)

    bias = np.linspace(solve(target), solve(-target), n_bias)
    edges = []
    for phi in (bias[0], bias[-1]):
        wp, wm = rwa_modes(mode_coefficients(params, FluxBias(phi_ex=float(phi))))
        edges += [wp / TAU, wm / TAU]
    probe = np.linspace(min(edges) - 8e6, max(edges) + 8e6, n_probe)
    return scan_spectrum(params, bias, probe, _reference_drive(eta),
                         coefficient=coefficient, moving_average_hz=1e6)


class TestDisappearance:
    def test_no_crosstalk_vanishes_at_zero_coupling(self, sample_params):
        grid = _off_region_scan(sample_params, eta=0.0)
        points = find_disappearance(grid)
        assert len(points) == 2
        resolution = abs(np.diff(grid.g_r).mean())
        for pt in points:
            assert abs(pt.g_r) <= 2 * resolution
        # likewise for the raw map: the weakest column sits at zero coupling
        weakest = int(np.argmin(grid.amplitude.max(axis=1)))
        assert abs(grid.g_r[weakest]) <= 2 * resolution

    def test_crosstalk_shifts_disappearance(self, sample_params):
        grid = _off_region_scan(sample_params, eta=0.25)
        points = {pt.branch: pt for pt in find_disappearance(grid)}
        assert points["plus"].g_r / TAU == pytest.approx(-11e6, abs=2e6)
        assert points["minus"].g_r / TAU == pytest.approx(+11e6, abs=2e6)

    def test_disappearance_moves_continuously_with_crosstalk(self, sample_params):
        shifts = []
        for eta in (0.0, 0.1, 0.2, 0.25):
            grid = _off_region_scan(sample_params, eta=eta, n_bias=120, n_probe=280)
            points = {pt.branch: pt for pt in find_disappearance(grid)}
            shifts.append(points["plus"].g_r / TAU)
        assert abs(shifts[0]) < 1e6
        assert all(s2 < s1 + 0.5e6 for s1, s2 in zip(shifts, shifts[1:]))
        steps = np.abs(np.diff(shifts))
        assert steps.max() < 8e6

    def test_reflection_keeps_lower_branch(self, sample_params):
        from couplersim.circuit import rwa_modes

        grid = _off_region_scan(sample_params, eta=0.25, coefficient="r_AA")
        points = {pt.branch: pt for pt in find_disappearance(grid)}
        assert points["plus"].g_r / TAU == pytest.approx(-11e6, abs=2.5e6)
        # sample each branch at its dispersive extremum (center + kappa/2):
        # the narrow line falls between grid points, so the analytic
        # along-branch amplitude is the aliasing-free visibility measure
        d = _reference_drive(0.25)
        strengths = {"plus": [], "minus": []}
        for phi in grid.bias:
            c = mode_coefficients(sample_params, FluxBias(phi_ex=float(phi)))
            wp, wm = rwa_modes(c)
            for name, center in (("plus", wp), ("minus", wm)):
                dd = DriveConfig(epsilon=d.epsilon, kappa_a=d.kappa_a,
                                 kappa_b=d.kappa_b,
                                 omega_p=center + 0.5 * d.kappa_a, eta=d.eta)
                _, refl = transmission_reflection(steady_state_moments(c, dd), dd)
                strengths[name].append(abs(refl))
        lower = np.asarray(strengths["minus"])
        upper = np.asarray(strengths["plus"])
        assert lower.min() > 0.25 * lower.max()
        assert upper.min() < 0.01 * upper.max()

    def test_destructive_interference_at_disappearance(self, sample_params):
        # the lower transmission branch dies through cancellation of the two
        # detected terms (the upper branch instead stops being driven)
        grid = _off_region_scan(sample_params, eta=0.25)
        points = {pt.branch: pt for pt in find_disappearance(grid)}
        pt = points["minus"]
        c = mode_coefficients(sample_params, FluxBias(phi_ex=pt.bias))
        from couplersim.circuit import rwa_modes

        _, wm = rwa_modes(c)
        d = _reference_drive(0.25)
        best = None
        for delta in np.linspace(-3, 3, 121) * d.kappa_a:
            dd = DriveConfig(epsilon=d.epsilon, kappa_a=d.kappa_a,
                             kappa_b=d.kappa_b, omega_p=wm + float(delta),
                             eta=d.eta)
            m = steady_state_moments(c, dd)
            term_a = -(d.kappa_a / (2 * dd.xi)) * d.eta * m.a.imag
            term_b = -(d.kappa_b / (2 * dd.xi)) * (1 - d.eta) * m.b.imag
            size = max(abs(term_a), abs(term_b))
            if best is None or size > best[0]:
                best = (size, term_a, term_b)
        _, term_a, term_b = best
        assert abs(term_a + term_b) < 0.01 * max(abs(term_a), abs(term_b))

    def test_requires_branch_metadata(self):
        grid = SpectrumGrid(bias=np.array([0.0, 1.0]),
                            probe_hz=np.linspace(1e9, 2e9, 8),
                            amplitude=np.ones((2, 8)), coefficient="t_BA")
        with pytest.raises(ValueError):
            find_disappearance(grid)


class TestLindbladOracle:
    def test_undriven_vacuum(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 5.001e9,
                             g_r=TAU * 0.5e6)
        d = DriveConfig(epsilon=0.0, kappa_a=KAPPA, kappa_b=KAPPA,
                        omega_p=TAU * 5e9)
        m = lindblad_steady_state_oracle(c, d, FockSpace(3, 3))
        assert abs(m.a) < 1e-12
        assert abs(m.b) < 1e-12

    def test_single_mode_weak_drive(self):
        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 5.02e9, g_r=0.0)
        d = drive(c.omega_a, epsilon=0.15 * KAPPA)
        m = lindblad_steady_state_oracle(c, d, FockSpace(4, 4))
        assert m.a == pytest.approx(2 * d.xi / math.sqrt(KAPPA), rel=1e-2)

    def test_matches_linear_solver(self):
        rng = np.random.default_rng(5)
        space = FockSpace(4, 4)
        for _ in range(4):
            w = TAU * 5e9
            c = ModeCoefficients(
                omega_a=w, omega_b=w + TAU * rng.uniform(-2e6, 2e6),
                g_r=TAU * rng.uniform(-1.5e6, 1.5e6))
            kappa = TAU * rng.uniform(0.5e6, 1.5e6)
            d = DriveConfig(epsilon=0.12 * kappa, kappa_a=kappa,
                            kappa_b=kappa * rng.uniform(0.7, 1.3),
                            omega_p=w + TAU * rng.uniform(-2e6, 2e6),
                            eta=rng.uniform(0.0, 0.4))
            lin = steady_state_moments(c, d)
            orc = lindblad_steady_state_oracle(c, d, space)
            scale = max(abs(lin.a), abs(lin.b))
            assert abs(lin.a - orc.a) / scale < 1e-3
            assert abs(lin.b - orc.b) / scale < 1e-3

    def test_truncation_overflow_raises(self):
        from couplersim.exceptions import TruncationError

        c = ModeCoefficients(omega_a=TAU * 5e9, omega_b=TAU * 5.01e9, g_r=0.0)
        d = drive(c.omega_a, epsilon=3.0 * KAPPA)
        with pytest.raises(TruncationError):
            lindblad_steady_state_oracle(c, d, FockSpace(3, 3))
