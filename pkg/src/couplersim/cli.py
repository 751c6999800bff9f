"""Command-line interface.

Subcommands: ``coeffs``, ``scan``, ``spectrum``, ``quantum``, ``crosstalk``,
``fit`` and ``reproduce``.  Flux biases are given in turns on the command
line, frequencies in GHz (all of them meaning angular frequency divided by
2*pi); files store SI units as documented in docs/formats.md.

Exit codes: 0 on success, 2 for configuration errors, 3 for numeric
failures.  Artifacts are written atomically and announced on stdout as one
JSON line each.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io as cio
from .circuit import (
    coefficients_at,
    eigenmodes,
    mode_coefficients,
    rwa_modes,
    sweep_coefficients,
)
from .exceptions import ConfigError, CouplerError
from .fitting import CircuitSpectrumFitter, PeakExtractor
from .fock import (
    FockSpace,
    build_hamiltonian,
    eigen_state,
    fock_distribution,
    ground_state,
    mean_photon,
    numeric_eigenmodes,
    reduced_density,
    von_neumann_entropy,
    wigner,
)
from .params import (
    FluxBias,
    load_circuit_params,
    load_three_junction_params,
    sample_circuit_params,
    sample_three_junction_params,
)
from .response import DriveConfig, find_disappearance, scan_spectrum
from .circuit import ModeCoefficients
from .units import parse_angle

TAU = math.tau
GHZ = 1e9
MHZ = 1e6


@dataclass
class RunConfig:
    """Validated inputs of one CLI invocation."""

    command: str
    out_dir: str = "."
    params_path: str | None = None
    three_junction: bool = False
    seed: int = 0
    options: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.params_path is not None and not os.path.exists(self.params_path):
            raise ConfigError(f"parameter file not found: {self.params_path}")
        sweep = self.options.get("sweep")
        if sweep is not None and sweep[2] < 1:
            raise ConfigError("sweep must contain at least one point")

    def load_params(self):
        if self.params_path is None:
            return (sample_three_junction_params() if self.three_junction
                    else sample_circuit_params())
        return (load_three_junction_params(self.params_path) if self.three_junction
                else load_circuit_params(self.params_path))


def _announce(path, rows=None) -> None:
    entry = {"artifact": os.fspath(path)}
    if rows is not None:
        entry["rows"] = rows
    print(json.dumps(entry, sort_keys=True))


def _out(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    return os.path.join(cfg.out_dir, name)


def _write_json(path, payload) -> None:
    cio.atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
    _announce(path)


def _linspace_turns(start: float, stop: float, num: int) -> np.ndarray:
    return np.linspace(start * TAU, stop * TAU, num)


# ---------------------------------------------------------------------------
# Subcommand implementations
# ---------------------------------------------------------------------------

def _cmd_coeffs(cfg: RunConfig) -> int:
    params = cfg.load_params()
    phi_ex = cfg.options["phi_ex"]
    bias = FluxBias(phi_ex=phi_ex, phi_dc=cfg.options.get("phi_dc", 0.0))
    c = coefficients_at(params, bias, tol=cfg.options.get("tol", 1e-10))
    rows = cio.record_rows([c])
    path = _out(cfg, "coeffs.csv")
    n = cio.write_csv(path, cio.RECORD_COLUMNS, rows, {"seed": cfg.seed})
    _announce(path, n)
    print(f"phi_ex/2pi = {phi_ex / TAU:.6f}: "
          f"f_a = {c.omega_a / TAU / GHZ:.6f} GHz, "
          f"f_b = {c.omega_b / TAU / GHZ:.6f} GHz, "
          f"g_r/2pi = {c.g_r / TAU / MHZ:.3f} MHz")
    return 0


def _cmd_scan(cfg: RunConfig) -> int:
    params = cfg.load_params()
    start, stop, num = cfg.options["sweep"]
    coefficients = sweep_coefficients(params, _linspace_turns(start, stop, num),
                                      tol=cfg.options.get("tol", 1e-10))
    path = _out(cfg, "records.csv")
    n = cio.write_csv(path, cio.RECORD_COLUMNS, cio.record_rows(coefficients),
                      {"seed": cfg.seed})
    _announce(path, n)
    return 0


_BRANCH_COLUMNS = [
    ("phi_ex_turns", "turn"), ("f_minus_GHz", "GHz"), ("f_plus_GHz", "GHz"),
    ("f_minus_rwa_GHz", "GHz"), ("f_plus_rwa_GHz", "GHz"), ("g_r_MHz", "MHz"),
]


def _branch_rows(params, biases) -> list[tuple]:
    rows = []
    for phi in biases:
        c = coefficients_at(params, FluxBias(phi_ex=float(phi)))
        try:
            wp, wm = eigenmodes(c)
        except CouplerError:
            wp, wm = float("nan"), float("nan")
        wpr, wmr = rwa_modes(c)
        rows.append((phi / TAU, wm / TAU / GHZ, wp / TAU / GHZ,
                     wmr / TAU / GHZ, wpr / TAU / GHZ, c.g_r / TAU / MHZ))
    return rows


def _cmd_spectrum(cfg: RunConfig) -> int:
    params = cfg.load_params()
    start, stop, num = cfg.options["sweep"]
    rows = _branch_rows(params, _linspace_turns(start, stop, num))
    path = _out(cfg, "branches.csv")
    n = cio.write_csv(path, _BRANCH_COLUMNS, rows, {"seed": cfg.seed})
    _announce(path, n)
    return 0


def _default_cutoff(ratio: float) -> int:
    # Squeezing populates high number states close to the instability.
    return 30 if ratio <= 0.3 else 50


def _quantum_coefficients(cfg: RunConfig) -> ModeCoefficients:
    opts = cfg.options
    if opts.get("g_over_omega") is not None:
        w = TAU * opts.get("f_ghz", 5.0) * GHZ
        return ModeCoefficients(omega_a=w, omega_b=w, g_r=opts["g_over_omega"] * w)
    if opts.get("f_a_ghz") is not None:
        return ModeCoefficients(omega_a=TAU * opts["f_a_ghz"] * GHZ,
                                omega_b=TAU * opts["f_b_ghz"] * GHZ,
                                g_r=TAU * opts["g_mhz"] * MHZ)
    params = cfg.load_params()
    if "phi_ex" not in opts:
        raise ConfigError("quantum needs --phi-ex, --g-over-omega or explicit modes")
    return coefficients_at(params, FluxBias(phi_ex=opts["phi_ex"]))


def _cmd_quantum(cfg: RunConfig) -> int:
    c = _quantum_coefficients(cfg)
    ratio = abs(c.g_r) / max(c.omega_a, c.omega_b)
    cutoff = cfg.options.get("cutoff") or _default_cutoff(ratio)
    space = FockSpace(cutoff, cutoff)
    h = build_hamiltonian(c, space)
    energy, rho = ground_state(h, space)
    rho_a = reduced_density(rho, "a")
    gap_plus, gap_minus = numeric_eigenmodes(c, space)
    summary = {
        "omega_a_rad_per_s": c.omega_a,
        "omega_b_rad_per_s": c.omega_b,
        "g_r_rad_per_s": c.g_r,
        "coupling_ratio": ratio,
        "cutoff": cutoff,
        "ground_energy_rad_per_s": energy,
        "gap_plus_rad_per_s": gap_plus,
        "gap_minus_rad_per_s": gap_minus,
        "mean_photon_a": mean_photon(rho, "a"),
        "mean_photon_b": mean_photon(rho, "b"),
        "entropy_a_bits": von_neumann_entropy(rho_a),
        "purity_a": rho_a.purity(),
        "seed": cfg.seed,
    }

    # compute all optional artifacts before writing anything
    state = cfg.options.get("state", "ground")
    fock_artifact = wigner_artifact = None
    if cfg.options.get("emit_fock") or cfg.options.get("emit_wigner"):
        if state == "excited":
            _, rho = eigen_state(h, space, 1)
            rho_a = reduced_density(rho, "a")
        if cfg.options.get("emit_fock"):
            fock_artifact = fock_distribution(rho_a)
        if cfg.options.get("emit_wigner"):
            wigner_artifact = wigner(rho_a)

    _write_json(_out(cfg, "quantum.json"), summary)
    if fock_artifact is not None:
        path = _out(cfg, f"fock_{state}_a.csv")
        n = cio.write_fock_distribution(path, fock_artifact, {"state": state})
        _announce(path, n)
    if wigner_artifact is not None:
        path = _out(cfg, f"wigner_{state}_a.csv")
        n = cio.write_wigner(path, wigner_artifact, {"state": state})
        _announce(path, n)
    return 0


def _drive_from_options(opts) -> DriveConfig:
    return DriveConfig(
        epsilon=TAU * opts.get("epsilon_mhz", 1.5) * MHZ,
        kappa_a=TAU * opts.get("kappa_a_mhz", 3.3e-4) * MHZ,
        kappa_b=TAU * opts.get("kappa_b_mhz", 3.3e-4) * MHZ,
        omega_p=0.0,
        eta=opts.get("eta", 0.0),
    )


def _cmd_crosstalk(cfg: RunConfig) -> int:
    params = cfg.load_params()
    opts = cfg.options
    start, stop, num = opts["sweep"]
    bias = _linspace_turns(start, stop, num)
    p_start, p_stop, p_num = opts["probe"]
    probe = np.linspace(p_start * GHZ, p_stop * GHZ, p_num)
    drive = _drive_from_options(opts)
    grid = scan_spectrum(params, bias, probe, drive,
                         coefficient=opts.get("coefficient", "t_BA"),
                         rwa=not opts.get("full_coupling", False),
                         moving_average_hz=opts.get("moving_average_mhz", 0.0) * MHZ)
    rows = [(pt.bias, pt.branch, pt.g_r if pt.g_r is not None else float("nan"),
             pt.amplitude) for pt in find_disappearance(grid)]

    path = _out(cfg, "spectrum.csv")
    n = cio.write_spectrum_grid(path, grid, {
        "eta": drive.eta, "kappa_a_rad_per_s": drive.kappa_a,
        "kappa_b_rad_per_s": drive.kappa_b, "epsilon_rad_per_s": drive.epsilon,
        "seed": cfg.seed,
    })
    _announce(path, n)
    dpath = _out(cfg, "disappearance.csv")
    dn = cio.write_csv(dpath, [("bias", "rad"), ("branch", "name"),
                               ("g_r", "rad/s"), ("amplitude", "arb")], rows)
    _announce(dpath, dn)
    return 0


def _cmd_fit(cfg: RunConfig) -> int:
    opts = cfg.options
    if opts.get("peaks_path"):
        peaks = cio.read_peaks(opts["peaks_path"])
    elif opts.get("spectrum_path"):
        grid = cio.read_spectrum_grid(opts["spectrum_path"])
        extractor = PeakExtractor(noise_sigmas=opts.get("noise_sigmas", 5.0),
                                  band_hz=opts["band_hz"])
        peaks = extractor.transform(grid)
    else:
        raise ConfigError("fit needs --peaks or --spectrum input")
    if cfg.params_path is None:
        raise ConfigError("fit needs --params with the initial element values")
    initial = load_circuit_params(cfg.params_path)
    fitter = CircuitSpectrumFitter(
        initial_params=initial,
        free=tuple(opts.get("free", ("gamma", "M_0"))),
        band_hz=opts["band_hz"],
        include_dc_leak=opts.get("include_dc_leak", False),
        holdout_fraction=opts.get("holdout_fraction", 0.0),
        random_state=cfg.seed,
    ).fit(peaks)
    result = fitter.result_

    fitted = {name: getattr(fitter.params_, name)
              for name in ("L_a", "L_b", "C_a", "C_b", "L_sh", "L_J0",
                           "M_0", "L_0", "gamma")}
    fitted.update({
        "rms_hz": result.rms_hz,
        "holdout_rms_hz": result.holdout_rms_hz,
        "converged": result.converged,
        "n_evaluations": result.n_evaluations,
        "condition_number": result.condition_number,
        "free": list(opts.get("free", ("gamma", "M_0"))),
        "seed": cfg.seed,
    })
    _write_json(_out(cfg, "fitted_params.json"), fitted)

    res_path = _out(cfg, "residuals.csv")
    rows = [(b, f, w, r) for (b, f, w), r in
            zip(peaks[: len(result.residuals_hz)], result.residuals_hz)]
    n = cio.write_csv(res_path, [("phi_ex", "rad"), ("frequency_Hz", "Hz"),
                                 ("weight", "1"), ("residual_Hz", "Hz")], rows)
    _announce(res_path, n)

    biases = np.unique(peaks[:, 0])
    pred = fitter.predict(biases)
    bpath = _out(cfg, "predicted_branches.csv")
    rows = [(b, fm, fp) for b, (fm, fp) in zip(biases, pred)]
    n = cio.write_csv(bpath, [("phi_ex", "rad"), ("f_minus_Hz", "Hz"),
                              ("f_plus_Hz", "Hz")], rows)
    _announce(bpath, n)
    return 0


# ---------------------------------------------------------------------------
# Figure-data reproduction
# ---------------------------------------------------------------------------

_REFUSED_FIGURES = {
    "fig2a": "the coil-current axis needs the unpublished coil-to-flux mutual; "
             "use fig2b for the flux-axis spectrum instead",
    "fig5a": "measured panel; its simulated analog is fig5e",
    "fig5b": "measured panel; its simulated analog is fig5f",
    "fig5c": "measured cross sections; simulate with fig5e",
    "fig5d": "measured cross sections; simulate with fig5f",
}

_FIGURE_ACCEPTANCE = {
    "fig2b": ["fit-round-trip"],
    "fig2c": ["rwa-shift"],
    "fig2d": ["coupling-range", "ultrastrong-ratio"],
    "fig2e": ["rwa-shift", "identity-suite"],
    "fig3d": ["three-junction-range"],
    "fig4a": ["ground-occupation"],
    "fig4b": ["ground-occupation"],
    "fig4c": ["oracle-equivalence"],
    "fig5e": ["crosstalk-disappearance"],
    "fig5f": ["crosstalk-disappearance"],
    "fig5g": ["crosstalk-disappearance"],
    "fig5h": ["crosstalk-disappearance"],
}


def _bias_window_for_g(params, g_target: float) -> tuple[float, float]:
    """Bias bracket (rad) around the zero of g_r covering +-g_target."""

    def g_of(phi):
        return mode_coefficients(params, FluxBias(phi_ex=phi)).g_r

    def solve(target, lo, hi):
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if g_of(mid) > target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    lo, hi = 0.40 * TAU, 0.499 * TAU
    return solve(abs(g_target), lo, hi), solve(-abs(g_target), lo, hi)


def _crosstalk_figure(cfg: RunConfig, params, coefficient: str, eta: float,
                      prefix: str) -> list[str]:
    drive = DriveConfig(epsilon=TAU * 1.5 * MHZ, kappa_a=TAU * 3.3e-4 * MHZ,
                        kappa_b=TAU * 3.3e-4 * MHZ, omega_p=0.0, eta=eta)
    b_lo, b_hi = _bias_window_for_g(params, TAU * 30 * MHZ)
    bias = np.linspace(b_lo, b_hi, 200)
    edges = []
    for phi in (bias[0], bias[-1], bias[bias.size // 2]):
        c = mode_coefficients(params, FluxBias(phi_ex=float(phi)))
        wp, wm = rwa_modes(c)
        edges += [wp / TAU, wm / TAU]
    probe = np.linspace(min(edges) - 10 * MHZ, max(edges) + 10 * MHZ, 400)
    grid = scan_spectrum(params, bias, probe, drive, coefficient=coefficient,
                         moving_average_hz=1 * MHZ)
    rows = [(pt.bias, pt.branch, pt.g_r if pt.g_r is not None else float("nan"),
             pt.amplitude) for pt in find_disappearance(grid)]
    files = []
    path = _out(cfg, f"{prefix}_spectrum.csv")
    n = cio.write_spectrum_grid(path, grid, {"eta": eta, "coefficient": coefficient})
    _announce(path, n)
    files.append(os.path.basename(path))
    dpath = _out(cfg, f"{prefix}_disappearance.csv")
    dn = cio.write_csv(dpath, [("bias", "rad"), ("branch", "name"),
                               ("g_r", "rad/s"), ("amplitude", "arb")], rows)
    _announce(dpath, dn)
    files.append(os.path.basename(dpath))
    return files


def _ratio_sweep_rows(ratios, f_ghz: float = 5.0) -> list[tuple]:
    rows = []
    w = TAU * f_ghz * GHZ
    for r in ratios:
        c = ModeCoefficients(omega_a=w, omega_b=w, g_r=r * w)
        cutoff = _default_cutoff(r)
        space = FockSpace(cutoff, cutoff)
        _, rho = ground_state(build_hamiltonian(c, space), space)
        rho_a = reduced_density(rho, "a")
        rows.append((r, mean_photon(rho, "a"), von_neumann_entropy(rho_a)))
    return rows


def _quantum_state_files(cfg: RunConfig, ratio: float, prefix: str) -> list[str]:
    w = TAU * 5.0 * GHZ
    c = ModeCoefficients(omega_a=w, omega_b=w, g_r=ratio * w)
    cutoff = _default_cutoff(ratio)
    space = FockSpace(cutoff, cutoff)
    h = build_hamiltonian(c, space)
    files = []
    for state, maker in (("ground", lambda: ground_state(h, space)),
                         ("excited", lambda: eigen_state(h, space, 1))):
        _, rho = maker()
        rho_a = reduced_density(rho, "a")
        fpath = _out(cfg, f"{prefix}_fock_{state}.csv")
        n = cio.write_fock_distribution(fpath, fock_distribution(rho_a),
                                        {"ratio": ratio, "state": state})
        _announce(fpath, n)
        files.append(os.path.basename(fpath))
        wpath = _out(cfg, f"{prefix}_wigner_{state}.csv")
        n = cio.write_wigner(wpath, wigner(rho_a), {"ratio": ratio, "state": state})
        _announce(wpath, n)
        files.append(os.path.basename(wpath))
    return files


def _cmd_reproduce(cfg: RunConfig) -> int:
    figure = cfg.options["figure"]
    if figure in _REFUSED_FIGURES:
        raise ConfigError(f"{figure} is not reproducible: {_REFUSED_FIGURES[figure]}")
    if figure not in _FIGURE_ACCEPTANCE:
        raise ConfigError(f"unknown figure id {figure!r}; "
                          f"supported: {', '.join(sorted(_FIGURE_ACCEPTANCE))}")
    params = None
    if figure not in ("fig3d", "fig4a", "fig4b", "fig4c"):
        params = (load_circuit_params(cfg.params_path) if cfg.params_path
                  else sample_circuit_params())
    files: list[str] = []

    if figure in ("fig2b", "fig2c"):
        rows = _branch_rows(params, _linspace_turns(0.0, 1.0, 1001))
        path = _out(cfg, f"{figure}_branches.csv")
        n = cio.write_csv(path, _BRANCH_COLUMNS, rows)
        _announce(path, n)
        files.append(os.path.basename(path))
    elif figure == "fig2d":
        coefficients = sweep_coefficients(params, _linspace_turns(0.0, 1.0, 1001))
        rows = [(c.record.phi_ex / TAU, c.omega_a / TAU / GHZ,
                 c.omega_b / TAU / GHZ, c.g_r / TAU / MHZ)
                for c in coefficients]
        path = _out(cfg, "fig2d_coefficients.csv")
        n = cio.write_csv(path, [("phi_ex_turns", "turn"), ("f_a_GHz", "GHz"),
                                 ("f_b_GHz", "GHz"), ("g_r_MHz", "MHz")], rows)
        _announce(path, n)
        files.append(os.path.basename(path))
    elif figure == "fig2e":
        rows = []
        for phi in _linspace_turns(0.0, 1.0, 1001):
            c = coefficients_at(params, FluxBias(phi_ex=float(phi)))
            try:
                wp, wm = eigenmodes(c)
            except CouplerError:
                continue
            wpr, wmr = rwa_modes(c)
            rows.append((c.g_r / TAU / MHZ, (wpr - wp) / TAU / MHZ,
                         (wmr - wm) / TAU / MHZ,
                         (wpr ** 2 - wp ** 2) - c.g_r ** 2,
                         (wmr ** 2 - wm ** 2) - c.g_r ** 2))
        path = _out(cfg, "fig2e_rwa_shift.csv")
        n = cio.write_csv(path, [("g_r_MHz", "MHz"), ("shift_plus_MHz", "MHz"),
                                 ("shift_minus_MHz", "MHz"),
                                 ("identity_gap_plus", "rad^2/s^2"),
                                 ("identity_gap_minus", "rad^2/s^2")], rows)
        _announce(path, n)
        files.append(os.path.basename(path))
    elif figure == "fig3d":
        p3 = (load_three_junction_params(cfg.params_path) if cfg.params_path
              else sample_three_junction_params())
        rows = _branch_rows(p3, _linspace_turns(0.0, 1.0, 1001))
        path = _out(cfg, "fig3d_branches.csv")
        n = cio.write_csv(path, _BRANCH_COLUMNS, rows)
        _announce(path, n)
        files.append(os.path.basename(path))
    elif figure == "fig4a":
        rows = _ratio_sweep_rows(np.linspace(0.0, 0.49, 50))
        path = _out(cfg, "fig4a_occupation.csv")
        n = cio.write_csv(path, [("g_over_omega", "1"), ("mean_photon_a", "1"),
                                 ("entropy_a_bits", "bit")], rows)
        _announce(path, n)
        files.append(os.path.basename(path))
    elif figure == "fig4b":
        files += _quantum_state_files(cfg, 0.2, "fig4b")
    elif figure == "fig4c":
        files += _quantum_state_files(cfg, 0.48, "fig4c")
    elif figure == "fig5e":
        files += _crosstalk_figure(cfg, params, "t_BA", 0.25, "fig5e")
    elif figure == "fig5f":
        files += _crosstalk_figure(cfg, params, "r_AA", 0.25, "fig5f")
    elif figure == "fig5g":
        files += _crosstalk_figure(cfg, params, "t_BA", 0.0, "fig5g")
    elif figure == "fig5h":
        files += _crosstalk_figure(cfg, params, "r_BB", 0.25, "fig5h")

    manifest_path = _out(cfg, f"{figure}_manifest.json")
    _write_json(manifest_path, {
        "figure": figure,
        "files": files,
        "acceptance_checks": _FIGURE_ACCEPTANCE[figure],
        "seed": cfg.seed,
    })
    return 0


# ---------------------------------------------------------------------------
# Argument parsing and dispatch
# ---------------------------------------------------------------------------

_COMMANDS = {
    "coeffs": _cmd_coeffs,
    "scan": _cmd_scan,
    "spectrum": _cmd_spectrum,
    "quantum": _cmd_quantum,
    "crosstalk": _cmd_crosstalk,
    "fit": _cmd_fit,
    "reproduce": _cmd_reproduce,
}


def run(cfg: RunConfig) -> int:
    """Validate the configuration and execute one subcommand."""
    cfg.validate()
    return _COMMANDS[cfg.command](cfg)


def _add_common(p: argparse.ArgumentParser, three_junction: bool = True) -> None:
    p.add_argument("--params", dest="params_path",
                   help="parameter JSON file (bundled sample when omitted)")
    p.add_argument("--out", dest="out_dir", default=".",
                   help="output directory (default: current directory)")
    p.add_argument("--seed", type=int, default=0,
                   help="seed recorded in artifacts and used by stochastic steps")
    if three_junction:
        p.add_argument("--three-junction", action="store_true",
                       help="treat the parameter file as a three-junction coupler")


def _add_sweep(p: argparse.ArgumentParser, prefix: str = "bias") -> None:
    p.add_argument(f"--{prefix}-start", type=float, default=0.0,
                   help=f"{prefix} sweep start in turns")
    p.add_argument(f"--{prefix}-stop", type=float, default=1.0,
                   help=f"{prefix} sweep stop in turns")
    p.add_argument(f"--{prefix}-num", type=int, default=1001,
                   help=f"number of {prefix} points")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="couplersim",
        description="Tunable-coupler circuit simulator and spectrum fitter")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="Hamiltonian coefficients at one bias")
    _add_common(p)
    p.add_argument("--phi-ex", required=True,
                   help="flux bias (turns by default, e.g. 0.5 or 0.5turn or 3.14rad)")
    p.add_argument("--phi-dc", default="0",
                   help="two-junction loop bias (turns)")
    p.add_argument("--tol", type=float, default=1e-10,
                   help="potential-minimization tolerance (rad)")

    p = sub.add_parser("scan", help="computation-record sweep CSV")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--tol", type=float, default=1e-10,
                   help="potential-minimization tolerance (rad)")

    p = sub.add_parser("spectrum", help="normal-mode branch curves over a sweep")
    _add_common(p)
    _add_sweep(p)

    p = sub.add_parser("quantum", help="ground-state observables")
    _add_common(p)
    p.add_argument("--phi-ex", help="flux bias (turns) when using circuit parameters")
    p.add_argument("--g-over-omega", type=float,
                   help="directly set the coupling ratio for degenerate modes")
    p.add_argument("--f-ghz", type=float, default=5.0,
                   help="degenerate mode frequency for --g-over-omega (GHz)")
    p.add_argument("--f-a-ghz", type=float, help="mode A frequency (GHz)")
    p.add_argument("--f-b-ghz", type=float, help="mode B frequency (GHz)")
    p.add_argument("--g-mhz", type=float, help="coupling constant (MHz)")
    p.add_argument("--cutoff", type=int, help="photon-number cutoff per mode")
    p.add_argument("--state", choices=("ground", "excited"), default="ground")
    p.add_argument("--fock", dest="emit_fock", action="store_true",
                   help="emit the photon-number distribution CSV")
    p.add_argument("--wigner", dest="emit_wigner", action="store_true",
                   help="emit the Wigner function CSV")

    p = sub.add_parser("crosstalk", help="driven transmission/reflection scan")
    _add_common(p)
    _add_sweep(p)
    p.add_argument("--probe-start-ghz", type=float, required=True)
    p.add_argument("--probe-stop-ghz", type=float, required=True)
    p.add_argument("--probe-num", type=int, default=400)
    p.add_argument("--eta", type=float, default=0.0, help="crosstalk fraction")
    p.add_argument("--kappa-a-mhz", type=float, default=3.3e-4,
                   help="port A decay rate / 2pi (MHz)")
    p.add_argument("--kappa-b-mhz", type=float, default=3.3e-4,
                   help="port B decay rate / 2pi (MHz)")
    p.add_argument("--epsilon-mhz", type=float, default=1.5,
                   help="drive rate xi*sqrt(kappa) / 2pi (MHz)")
    p.add_argument("--coefficient", choices=("t_BA", "r_AA", "t_AB", "r_BB"),
                   default=None,
                   help="measured coefficient (overrides --port/--measure)")
    p.add_argument("--port", choices=("A", "B"), default="A",
                   help="input port")
    p.add_argument("--measure", choices=("t", "r"), default="t",
                   help="transmission to the other port or reflection")
    p.add_argument("--moving-average-mhz", type=float, default=0.0,
                   help="boxcar window along the probe axis (MHz)")
    p.add_argument("--full-coupling", action="store_true",
                   help="keep pair terms instead of the exchange-only coupling")

    p = sub.add_parser("fit", help="recover element values from peaks or a map")
    _add_common(p, three_junction=False)
    p.add_argument("--peaks", dest="peaks_path", help="peaks CSV input")
    p.add_argument("--spectrum", dest="spectrum_path", help="spectrum CSV input")
    p.add_argument("--free", default="gamma,M_0",
                   help="comma-separated parameters to vary")
    p.add_argument("--band-ghz", type=float, nargs=2, default=(4.0, 8.0),
                   metavar=("LO", "HI"), help="instrument band (GHz)")
    p.add_argument("--noise-sigmas", type=float, default=5.0,
                   help="peak threshold above the column median")
    p.add_argument("--include-dc-leak", action="store_true",
                   help="apply the fixed 1/313 bias leak into the small loop")
    p.add_argument("--holdout-fraction", type=float, default=0.0)

    p = sub.add_parser("reproduce", help="emit the data behind a study figure")
    _add_common(p)
    p.add_argument("figure", help="figure id (fig2b..fig2e, fig3d, fig4a..c, fig5e..h)")

    return parser


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    options: dict = {}
    if hasattr(args, "bias_start"):
        options["sweep"] = (args.bias_start, args.bias_stop, args.bias_num)
    if getattr(args, "phi_ex", None) is not None:
        options["phi_ex"] = parse_angle(args.phi_ex)
    if getattr(args, "phi_dc", None) is not None:
        options["phi_dc"] = parse_angle(args.phi_dc)
    if hasattr(args, "tol"):
        options["tol"] = args.tol
    if args.command == "quantum":
        for key in ("g_over_omega", "f_ghz", "f_a_ghz", "f_b_ghz", "g_mhz",
                    "cutoff", "state", "emit_fock", "emit_wigner"):
            options[key] = getattr(args, key)
        if (args.f_a_ghz is not None) != (args.f_b_ghz is not None) or (
                args.f_a_ghz is not None and args.g_mhz is None):
            raise ConfigError("explicit modes need --f-a-ghz, --f-b-ghz and --g-mhz")
    if args.command == "crosstalk":
        options["probe"] = (args.probe_start_ghz, args.probe_stop_ghz, args.probe_num)
        for key in ("eta", "kappa_a_mhz", "kappa_b_mhz", "epsilon_mhz",
                    "moving_average_mhz", "full_coupling"):
            options[key] = getattr(args, key)
        if args.coefficient is not None:
            options["coefficient"] = args.coefficient
        else:
            lookup = {("A", "t"): "t_BA", ("A", "r"): "r_AA",
                      ("B", "t"): "t_AB", ("B", "r"): "r_BB"}
            options["coefficient"] = lookup[(args.port, args.measure)]
    if args.command == "fit":
        options["peaks_path"] = args.peaks_path
        options["spectrum_path"] = args.spectrum_path
        options["free"] = tuple(x for x in args.free.split(",") if x)
        options["band_hz"] = (args.band_ghz[0] * GHZ, args.band_ghz[1] * GHZ)
        options["noise_sigmas"] = args.noise_sigmas
        options["include_dc_leak"] = args.include_dc_leak
        options["holdout_fraction"] = args.holdout_fraction
    if args.command == "reproduce":
        options["figure"] = args.figure
    return RunConfig(
        command=args.command,
        out_dir=getattr(args, "out_dir", "."),
        params_path=getattr(args, "params_path", None),
        three_junction=getattr(args, "three_junction", False),
        seed=getattr(args, "seed", 0),
        options=options,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return run(cfg)
    except (ConfigError, FileNotFoundError) as exc:
        print(json.dumps({"error": str(exc), "kind": "config"}), file=sys.stderr)
        return 2
    except CouplerError as exc:
        print(json.dumps({"error": str(exc), "kind": "numeric"}), file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
