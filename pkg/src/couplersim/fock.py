"""Quantized two-mode model in a truncated photon-number basis.

Hamiltonian construction, ground/excited states, photon statistics,
entanglement entropy and Wigner functions.  Quadratures follow the
convention a = q + i p, so the vacuum has <q^2> = <p^2> = 1/4 and its
Wigner function peaks at 2/pi.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .circuit import ModeCoefficients
from .exceptions import GridCoverageWarning, TruncationError

# Dense eigendecomposition below this Hilbert-space dimension, Lanczos above.
_DENSE_LIMIT = 1600


@dataclass(frozen=True)
class FockSpace:
    """Photon-number cutoffs of the two-mode product basis.

    ``n_a``/``n_b`` are the largest photon numbers kept, so each mode has
    cutoff+1 levels.  ``max_dim`` caps the product dimension to protect
    against accidental huge allocations.
    """

    n_a: int
    n_b: int
    max_dim: int = 4096

    def __post_init__(self):
        if self.n_a < 2 or self.n_b < 2:
            raise TruncationError("photon-number cutoffs must be at least 2")
        if self.dim > self.max_dim:
            raise TruncationError(
                f"product dimension {self.dim} exceeds the cap {self.max_dim}"
            )

    @property
    def levels(self) -> tuple[int, int]:
        return (self.n_a + 1, self.n_b + 1)

    @property
    def dim(self) -> int:
        return (self.n_a + 1) * (self.n_b + 1)

    def grow(self, extra: int) -> "FockSpace":
        bigger = (self.n_a + extra + 1) * (self.n_b + extra + 1)
        return FockSpace(self.n_a + extra, self.n_b + extra,
                         max_dim=max(self.max_dim, bigger))


def destroy(levels: int) -> np.ndarray:
    """Single-mode lowering operator on ``levels`` number states."""
    return np.diag(np.sqrt(np.arange(1.0, levels)), k=1)


def mode_operators(space: FockSpace) -> tuple[np.ndarray, np.ndarray]:
    """Lowering operators (a, b) embedded in the product basis."""
    na, nb = space.levels
    a = np.kron(destroy(na), np.eye(nb))
    b = np.kron(np.eye(na), destroy(nb))
    return a, b


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Quantum state over one or two truncated number bases.

    ``dims`` holds the number of levels per kept mode.  The matrix is made
    read-only at construction; Hermiticity and unit trace are enforced to
    1e-10, positivity can be checked explicitly with :meth:`min_eigenvalue`.
    """

    dims: tuple[int, ...]
    matrix: np.ndarray

    HERMITICITY_ATOL = 1e-10
    TRACE_ATOL = 1e-10
    POSITIVITY_ATOL = 1e-10

    def __post_init__(self):
        d = int(np.prod(self.dims))
        m = np.asarray(self.matrix)
        if m.shape != (d, d):
            raise ValueError(f"matrix shape {m.shape} does not match dims {self.dims}")
        if np.max(np.abs(m - m.conj().T)) > self.HERMITICITY_ATOL:
            raise ValueError("density matrix is not Hermitian to 1e-10")
        if abs(np.trace(m).real - 1.0) > self.TRACE_ATOL or abs(np.trace(m).imag) > self.TRACE_ATOL:
            raise ValueError("density matrix trace differs from 1 by more than 1e-10")
        m = m.copy()
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(x) for x in self.dims))

    @classmethod
    def from_pure(cls, vector: np.ndarray, dims) -> "DensityMatrix":
        v = np.asarray(vector, dtype=complex).ravel()
        v = v / np.linalg.norm(v)
        return cls(dims=tuple(dims), matrix=np.outer(v, v.conj()))

    @property
    def n_modes(self) -> int:
        return len(self.dims)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))


# ---------------------------------------------------------------------------
# Hamiltonian and eigenstates
# ---------------------------------------------------------------------------

def build_hamiltonian(c: ModeCoefficients, space: FockSpace) -> np.ndarray:
    """Two-mode Hamiltonian over the truncated product basis, in rad/s.

    H/hbar = wa (a^dag a + 1/2) + wb (b^dag b + 1/2) - g (a^dag - a)(b^dag - b).

    The coupling keeps both the exchange and the pair terms; the matrix is
    real symmetric by construction.
    """
    na, nb = space.levels
    a = destroy(na)
    b = destroy(nb)
    num_a = np.diag(np.arange(na, dtype=float))
    num_b = np.diag(np.arange(nb, dtype=float))
    h = (c.omega_a * np.kron(num_a + 0.5 * np.eye(na), np.eye(nb))
         + c.omega_b * np.kron(np.eye(na), num_b + 0.5 * np.eye(nb)))
    h -= c.g_r * np.kron(a.T - a, b.T - b)
    return h


def _lowest_eigenpairs(h: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Lowest-k eigenpairs, dense or shift-invert Lanczos depending on size."""
    dim = h.shape[0]
    if dim <= _DENSE_LIMIT or k >= dim - 1:
        vals, vecs = np.linalg.eigh(h)
        return vals[:k], vecs[:, :k]
    sparse_h = sp.csr_matrix(h)
    vals, vecs = spla.eigsh(sparse_h, k=k, sigma=0.0, which="LM")
    order = np.argsort(vals)
    return vals[order], vecs[:, order]


def ground_state(h: np.ndarray, space: FockSpace) -> tuple[float, DensityMatrix]:
    """Lowest eigenpair of the Hamiltonian as (energy, pure density matrix)."""
    vals, vecs = _lowest_eigenpairs(h, 1)
    return float(vals[0]), DensityMatrix.from_pure(vecs[:, 0], space.levels)


def eigen_state(h: np.ndarray, space: FockSpace, index: int) -> tuple[float, DensityMatrix]:
    """The ``index``-th eigenstate sorted by energy (0 is the ground state).

    When the requested level is degenerate with its neighbour to numerical
    precision and ``index == 1``, the state with the largest overlap on the
    symmetric single-photon state (|1,0> + |0,1>)/sqrt(2) is returned.
    """
    k = min(index + 4, h.shape[0])
    vals, vecs = _lowest_eigenpairs(h, k)
    degenerate = np.abs(vals - vals[index]) <= 1e-9 * abs(vals[index])
    if index == 1 and degenerate.sum() > 1:
        # Project the symmetric single-photon state onto the degenerate
        # subspace; the eigenbasis returned by the solver is arbitrary there.
        na, nb = space.levels
        sym = np.zeros(space.dim)
        sym[1 * nb + 0] = 1.0 / math.sqrt(2.0)
        sym[0 * nb + 1] = 1.0 / math.sqrt(2.0)
        subspace = vecs[:, degenerate]
        projected = subspace @ (subspace.T @ sym)
        norm = np.linalg.norm(projected)
        if norm > 1e-8:
            return float(vals[index]), DensityMatrix.from_pure(projected / norm,
                                                               space.levels)
    return float(vals[index]), DensityMatrix.from_pure(vecs[:, index], space.levels)


# ---------------------------------------------------------------------------
# Observables
# ---------------------------------------------------------------------------

def _mode_axis(rho: DensityMatrix, mode: str) -> int:
    if rho.n_modes == 1:
        return 0
    if mode == "a":
        return 0
    if mode == "b":
        return 1
    raise ValueError(f"unknown mode {mode!r}")


def mean_photon(rho: DensityMatrix, mode: str = "a") -> float:
    """Expectation of the photon number of one mode."""
    axis = _mode_axis(rho, mode)
    diag = np.real(np.diagonal(rho.matrix)).reshape(rho.dims)
    other_axes = tuple(i for i in range(rho.n_modes) if i != axis)
    marginal = diag.sum(axis=other_axes) if other_axes else diag
    return float(np.dot(np.arange(len(marginal)), marginal))


def reduced_density(rho: DensityMatrix, keep: str = "a") -> DensityMatrix:
    """Partial trace down to one mode."""
    if rho.n_modes == 1:
        return rho
    da, db = rho.dims
    tensor = rho.matrix.reshape(da, db, da, db)
    if keep == "a":
        reduced = np.einsum("ikjk->ij", tensor)
    elif keep == "b":
        reduced = np.einsum("kikj->ij", tensor)
    else:
        raise ValueError(f"unknown mode {keep!r}")
    return DensityMatrix(dims=(reduced.shape[0],), matrix=reduced)


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """Entropy -Tr[rho log2 rho] in bits; eigenvalues below 1e-14 count as zero."""
    lam = np.linalg.eigvalsh(rho.matrix)
    if lam[0] < -DensityMatrix.POSITIVITY_ATOL:
        raise ValueError(f"state is not positive semidefinite: min eigenvalue {lam[0]:.3e}")
    lam = lam[lam > 1e-14]
    return float(-np.sum(lam * np.log2(lam))) + 0.0


def fock_distribution(rho: DensityMatrix) -> np.ndarray:
    """Photon-number distribution (diagonal in the number basis)."""
    if rho.n_modes != 1:
        raise ValueError("fock_distribution expects a single-mode state")
    p = np.real(np.diagonal(rho.matrix)).copy()
    p[np.abs(p) < 1e-15] = 0.0
    return p


# ---------------------------------------------------------------------------
# Wigner function
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class WignerGrid:
    """Wigner function of a single mode sampled on a rectangular grid.

    ``values[i, j]`` is W(q[i], p[j]) under a = q + i p; the integral over
    the plane is 1 for a physical state that fits inside the grid.
    """

    q: np.ndarray
    p: np.ndarray
    values: np.ndarray

    def integral(self) -> float:
        dq = self.q[1] - self.q[0]
        dp = self.p[1] - self.p[0]
        return float(self.values.sum() * dq * dp)

    def marginal_q(self) -> np.ndarray:
        dp = self.p[1] - self.p[0]
        return self.values.sum(axis=1) * dp

    def marginal_p(self) -> np.ndarray:
        dq = self.q[1] - self.q[0]
        return self.values.sum(axis=0) * dq


def wigner(rho: DensityMatrix, q=None, p=None) -> WignerGrid:
    """Wigner function of a single-mode state on a (q, p) grid.

    Evaluated through the displaced-parity expansion over number states
    with generalized-Laguerre kernels, which is exact for a truncated
    density matrix.  Warns when the state has weight at the grid boundary.
    """
    if rho.n_modes != 1:
        raise ValueError("wigner expects a single-mode state (reduce first)")
    q = np.linspace(-5.0, 5.0, 201) if q is None else np.asarray(q, dtype=float)
    p = np.linspace(-5.0, 5.0, 201) if p is None else np.asarray(p, dtype=float)
    n = rho.dims[0]

    qq, pp = np.meshgrid(q, p, indexing="ij")
    r2 = qq * qq + pp * pp
    four_r2 = 4.0 * r2
    # Unit phase e^{-i theta}; the r = 0 point is fixed afterwards (all
    # d > 0 kernels vanish there).
    with np.errstate(invalid="ignore", divide="ignore"):
        phase = (qq - 1j * pp) / np.sqrt(r2)
    phase[r2 == 0.0] = 1.0
    two_r = 2.0 * np.sqrt(r2)

    gauss = np.exp(-2.0 * r2)
    total = np.zeros_like(r2)
    mat = rho.matrix
    phase_d = np.ones_like(phase)
    radial_d = np.ones_like(two_r)
    log_fact = np.concatenate(([0.0], np.cumsum(np.log(np.arange(1.0, n)))))
    for d in range(n):
        if d > 0:
            phase_d = phase_d * phase
            radial_d = radial_d * two_r
        diag = np.diagonal(mat, offset=-d)  # rho[m+d, m]
        if not np.any(diag):
            continue
        if d == 0:
            coeff = np.real(diag).copy()
        else:
            coeff = 2.0 * np.real(diag[:, None, None] * phase_d[None, :, :])
        # Generalized Laguerre recurrence in m at fixed order d.
        lag_prev = np.zeros_like(r2)
        lag = np.ones_like(r2)
        acc = np.zeros_like(r2)
        for m in range(n - d):
            s = math.exp(0.5 * (log_fact[m] - log_fact[m + d]))
            sign = -s if m % 2 else s
            acc = acc + (sign * coeff[m]) * lag
            lag_next = ((2 * m + 1 + d - four_r2) * lag - (m + d) * lag_prev) / (m + 1)
            lag_prev, lag = lag, lag_next
        total += acc * (radial_d if d > 0 else 1.0)

    values = (2.0 / math.pi) * gauss * total
    boundary = max(np.abs(values[0, :]).max(), np.abs(values[-1, :]).max(),
                   np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
    if boundary > 1e-6:
        warnings.warn(
            f"Wigner weight {boundary:.2e} at the grid boundary; enlarge the grid",
            GridCoverageWarning,
            stacklevel=2,
        )
    return WignerGrid(q=q, p=p, values=values)


# ---------------------------------------------------------------------------
# Numeric eigenmode extraction
# ---------------------------------------------------------------------------

def numeric_eigenmodes(c: ModeCoefficients, space: FockSpace, *,
                       convergence_tol: float | None = None) -> tuple[float, float]:
    """Normal-mode frequencies read off the Fock spectrum.

    The two excitation gaps reachable from the ground state through a
    linear drive (largest quadrature matrix elements) are identified with
    the single-excitation energies of the two normal modes and returned as
    (omega_plus, omega_minus).  With ``convergence_tol`` set, the cutoffs
    are grown by 10 and a relative gap shift above the tolerance raises
    :class:`TruncationError`.
    """
    gaps = _drive_coupled_gaps(c, space)
    if convergence_tol is not None:
        bigger = _drive_coupled_gaps(c, space.grow(10))
        shift = max(abs(g1 - g2) / abs(g2) for g1, g2 in zip(gaps, bigger))
        if shift > convergence_tol:
            raise TruncationError(
                f"excitation gaps moved by {shift:.2e} (> {convergence_tol:.1e}) "
                f"when growing the cutoffs by 10"
            )
    return gaps[1], gaps[0]


def _drive_coupled_gaps(c: ModeCoefficients, space: FockSpace) -> tuple[float, float]:
    h = build_hamiltonian(c, space)
    k = min(h.shape[0], 20)
    vals, vecs = _lowest_eigenpairs(h, k)
    ground = vecs[:, 0]
    a, b = mode_operators(space)
    # q and p quadrature images of the ground state for both modes; any
    # single-excitation normal-mode state has a large overlap with one of
    # these, while multi-photon states have none.
    images = [(a + a.T) @ ground, (a - a.T) @ ground,
              (b + b.T) @ ground, (b - b.T) @ ground]
    weight = np.zeros(k)
    for img in images:
        weight[1:] += np.abs(vecs[:, 1:].T @ img) ** 2
    picked = np.argsort(weight)[-2:]
    gaps = sorted(float(vals[j] - vals[0]) for j in picked)
    return gaps[0], gaps[1]
