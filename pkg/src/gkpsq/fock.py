"""Truncated Fock-space primitives for a single bosonic mode.

Quadrature convention used throughout the package: [x, p] = i with vacuum
variance <x^2> = 1/2, i.e. x = (a + a^dag)/sqrt(2) and
p = -i(a - a^dag)/sqrt(2).  All operators are dense numpy arrays over the
photon-number basis |0>, ..., |N-1>.

Exponentials of quadrature combinations do not act inside a truncated
basis, so `generalized_displacement` builds them on an oversampled
dimension and keeps the top-left block.  The kept block is therefore not
unitary; callers must not assume unitarity.  Exact matrix elements of the
coherent displacement operator are available separately
(`coherent_displacement`) and are used where truncation error matters,
e.g. Wigner sampling.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

DEFAULT_OVERSAMPLE = 10
# Build-then-truncate floor: tiny target dimensions still need enough
# headroom for the kept corner of the exponential to converge.
MIN_BUILD_DIM = 64
DEFAULT_BUILD_DIM_CAP = 5000
BUILD_DIM_CAP_ENV = "GKPSQ_MAX_BUILD_DIM"

NORM_ATOL = 1e-10
HERM_ATOL = 1e-10
PSD_FLOOR = -1e-9


class ResourceCapError(RuntimeError):
    """Requested build dimension exceeds the configured cap."""


class PhaseSpacePoint(NamedTuple):
    x: float
    p: float


def build_dim_cap() -> int:
    """Cap on oversampled build dimensions, overridable via environment."""
    raw = os.environ.get(BUILD_DIM_CAP_ENV)
    if raw is None:
        return DEFAULT_BUILD_DIM_CAP
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{BUILD_DIM_CAP_ENV} must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError(f"{BUILD_DIM_CAP_ENV} must be positive, got {cap}")
    return cap


def planned_build_dim(dim: int, oversample: int = DEFAULT_OVERSAMPLE) -> int:
    """Dimension actually used when building a truncated exponential block."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    if oversample < 1:
        raise ValueError(f"oversample must be >= 1, got {oversample}")
    return max(dim * oversample, MIN_BUILD_DIM)


@dataclass
class FockState:
    """Normalized pure state, complex amplitudes over photon numbers."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size < 1:
            raise ValueError("state needs at least one amplitude")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amplitudes must be finite")
        norm_sq = float(np.sum(np.abs(amps) ** 2))
        if abs(norm_sq - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalized: sum |a_k|^2 = {norm_sq!r}")
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    @classmethod
    def normalized(cls, raw) -> "FockState":
        """Build a state from unnormalized amplitudes."""
        amps = np.asarray(raw, dtype=complex).reshape(-1)
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise ValueError("cannot normalize the zero vector")
        return cls(amps / norm)

    @classmethod
    def number_state(cls, n: int, dim: int) -> "FockState":
        if not 0 <= n < dim:
            raise ValueError(f"need 0 <= n < dim, got n={n}, dim={dim}")
        amps = np.zeros(dim, dtype=complex)
        amps[n] = 1.0
        return cls(amps)

    def padded(self, dim: int) -> "FockState":
        """Zero-pad to a larger dimension."""
        if dim < self.dim:
            raise ValueError(f"cannot pad {self.dim}-dim state down to {dim}")
        amps = np.zeros(dim, dtype=complex)
        amps[: self.dim] = self.amplitudes
        return FockState(amps)

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))


@dataclass
class DensityMatrix:
    """Trace-one Hermitian positive-semidefinite matrix in the Fock basis."""

    entries: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.entries, dtype=complex)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise ValueError(f"density matrix must be square, got shape {mat.shape}")
        herm_defect = float(np.max(np.abs(mat - mat.conj().T)))
        if herm_defect > HERM_ATOL:
            raise ValueError(f"density matrix not Hermitian: defect {herm_defect:g}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > NORM_ATOL:
            raise ValueError(f"density matrix trace must be 1, got {tr!r}")
        min_eig = float(np.linalg.eigvalsh(0.5 * (mat + mat.conj().T)).min())
        if min_eig < PSD_FLOOR:
            raise ValueError(f"density matrix not positive semidefinite: min eigenvalue {min_eig:g}")
        self.entries = mat

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def padded(self, dim: int) -> "DensityMatrix":
        if dim < self.dim:
            raise ValueError(f"cannot pad {self.dim}-dim matrix down to {dim}")
        out = np.zeros((dim, dim), dtype=complex)
        out[: self.dim, : self.dim] = self.entries
        return DensityMatrix(out)


def ladder_matrices(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Annihilation and creation matrices: a|k> = sqrt(k)|k-1>."""
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    a = np.zeros((dim, dim), dtype=complex)
    ks = np.arange(1, dim)
    a[ks - 1, ks] = np.sqrt(ks)
    return a, a.conj().T


def quadrature_matrices(dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Hermitian x = (a + a^dag)/sqrt(2) and p = -i(a - a^dag)/sqrt(2)."""
    a, adag = ladder_matrices(dim)
    x = (a + adag) / math.sqrt(2.0)
    p = (a - adag) / (1j * math.sqrt(2.0))
    return x, p


def generalized_displacement(
    cx: float,
    cp: float,
    d: float = 0.0,
    dim: int = 1,
    oversample: int = DEFAULT_OVERSAMPLE,
) -> np.ndarray:
    """Top-left dim x dim block of exp(i*(cx*x + cp*p + d)).

    The exponential is evaluated by spectral decomposition of its Hermitian
    generator on the oversampled dimension, then cut down.  The returned
    block is generally not unitary.
    """
    build = planned_build_dim(dim, oversample)
    cap = build_dim_cap()
    if build > cap:
        raise ResourceCapError(
            f"build dimension {build} exceeds cap {cap}; "
            f"raise {BUILD_DIM_CAP_ENV} to override"
        )
    x, p = quadrature_matrices(build)
    gen = cx * x + cp * p
    vals, vecs = np.linalg.eigh(gen)
    full = (vecs * np.exp(1j * vals)) @ vecs.conj().T
    block = full[:dim, :dim]
    if d != 0.0:
        block = block * complex(math.cos(d), math.sin(d))
    return block


def coherent_displacement(alpha: complex, dim: int) -> np.ndarray:
    """Exact matrix elements <m|D(alpha)|n> for m, n < dim.

    A real-amplitude displacement is a position translation, so its matrix
    elements are overlap integrals of shifted Hermite functions, which a
    dense trapezoid evaluates to near machine precision without the
    catastrophic cancellation of recurrence or Laguerre-series routes; the
    phase rotation e^{i theta n} then supplies the complex direction.
    Because the block holds the untruncated operator's matrix elements, it
    is exact for any alpha, and expectations against states supported
    inside the truncation carry no truncation error.
    """
    if dim < 1:
        raise ValueError(f"dimension must be >= 1, got {dim}")
    beta = complex(alpha)
    r = abs(beta)
    if r == 0.0:
        return np.eye(dim, dtype=complex)
    theta = math.atan2(beta.imag, beta.real)
    shift = math.sqrt(2.0) * r
    reach = math.sqrt(2.0 * dim + 1.0) + 6.0
    step = math.pi / (10.0 * math.sqrt(2.0 * dim + 1.0))
    q = np.arange(-reach, shift + reach + step, step)
    h = hermite_functions(dim - 1, q)
    h_shifted = hermite_functions(dim - 1, q - shift)
    real_block = (h @ h_shifted.T) * step
    phases = np.exp(1j * theta * np.arange(dim))
    return phases[:, None] * real_block * phases.conj()[None, :]


def fix_phases(vectors: np.ndarray) -> np.ndarray:
    """Rescale each column so its largest-magnitude entry is real positive."""
    v = np.array(vectors, dtype=complex)
    idx = np.argmax(np.abs(v), axis=0)
    lead = v[idx, np.arange(v.shape[1])]
    safe = np.where(lead == 0, 1.0, lead)
    v *= np.abs(safe) / safe
    return v


def hermitian_eigensolve(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a (numerically) Hermitian matrix.

    The input is symmetrized as (M + M^dag)/2 before solving; eigenvalues
    come back ascending and eigenvector phases are fixed deterministically.
    """
    mat = np.asarray(matrix, dtype=complex)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
        raise ValueError(f"square matrix required, got shape {mat.shape}")
    herm = 0.5 * (mat + mat.conj().T)
    vals, vecs = np.linalg.eigh(herm)
    return vals, fix_phases(vecs)


def fidelity(s1: FockState, s2: FockState) -> float:
    """|<s1|s2>|^2, zero-padding the shorter state."""
    dim = max(s1.dim, s2.dim)
    a = s1.padded(dim).amplitudes
    b = s2.padded(dim).amplitudes
    val = abs(np.vdot(a, b)) ** 2
    return float(min(val, 1.0))


def hermite_functions(n_max: int, q: np.ndarray) -> np.ndarray:
    """Orthonormal Hermite functions h_0..h_n_max on the grid q.

    These are the position wavefunctions of the number states in the
    vacuum-variance-1/2 convention; the stable normalized recurrence avoids
    factorial overflow.
    """
    q = np.asarray(q, dtype=float)
    h = np.empty((n_max + 1, q.size))
    h[0] = np.pi ** -0.25 * np.exp(-0.5 * q * q)
    if n_max >= 1:
        h[1] = math.sqrt(2.0) * q * h[0]
    for n in range(2, n_max + 1):
        h[n] = math.sqrt(2.0 / n) * q * h[n - 1] - math.sqrt((n - 1.0) / n) * h[n - 2]
    return h


@dataclass
class QuadraturePdf:
    """Quadrature probability density sampled on a grid."""

    density: np.ndarray
    mass: float
    grid_too_narrow: bool


def quadrature_pdf(state: FockState, angle: float, q_grid: np.ndarray) -> QuadraturePdf:
    """|psi(q; angle)|^2 for the rotated quadrature x(angle) = x cos + p sin.

    Measuring x(angle) on psi is measuring x on exp(-i*angle*n) psi, so the
    wavefunction is a phase-twisted Hermite series.  The result carries the
    probability mass captured by the grid; `grid_too_narrow` flags a grid
    that misses more than 1e-6 of it.
    """
    q = np.asarray(q_grid, dtype=float)
    ns = np.arange(state.dim)
    rotated = state.amplitudes * np.exp(-1j * angle * ns)
    h = hermite_functions(state.dim - 1, q)
    psi = rotated @ h.astype(complex)
    density = np.abs(psi) ** 2
    mass = float(np.trapezoid(density, q)) if q.size > 1 else 0.0
    return QuadraturePdf(density=density, mass=mass, grid_too_narrow=mass < 1.0 - 1e-6)


def wigner(state: FockState, points) -> np.ndarray:
    """Wigner function at phase-space points, displaced-parity form.

    W(x, p) = (1/pi) <psi| D(alpha) Pi D(-alpha) |psi> with
    alpha = (x + i p)/sqrt(2) and Pi the photon-number parity.  Conjugating
    the parity collapses this to (1/pi) <psi| D(2 alpha) Pi |psi>, which is
    evaluated with exact displacement matrix elements, so |W| <= 1/pi holds
    rigorously for any normalized input.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    amps = state.amplitudes
    parity = np.where(np.arange(state.dim) % 2 == 0, 1.0, -1.0)
    flipped = parity * amps
    out = np.empty(pts.shape[0])
    for i, (x, p) in enumerate(pts):
        beta = math.sqrt(2.0) * complex(x, p)  # 2*alpha
        block = coherent_displacement(beta, state.dim)
        out[i] = (np.vdot(amps, block @ flipped)).real / math.pi
    return out
