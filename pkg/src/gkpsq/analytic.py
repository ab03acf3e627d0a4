"""Closed-form results for grid-operator squeezing.

Everything here is plain arithmetic on the measure xi = <Q>: classical and
Gaussian floors, the value on approximate peak-superposition states, the
relation to stabilizer (grid) squeezing and its fault-tolerance bands,
fidelity sandwich bounds, loss/noise maps, and the one-step breeding
output.  Fock-space counterparts in `operators` serve as numerical oracles
for each formula.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .operators import ChannelParams, GridSpec

LN2 = math.log(2.0)

U_SYMMETRIC = math.sqrt(2.0 * math.pi)  # stabilizer spacing, s0 grid
U_Q0_X = math.sqrt(math.pi)
U_Q0_P = 2.0 * math.sqrt(math.pi)

# Fault-tolerance bands are quoted to two significant figures.
GRID_FT_DELTA_SQ = 0.089
PESSIMISTIC_FIXED_P_SQ = GRID_FT_DELTA_SQ / 4.0
PEAK_WEIGHT_CUTOFF = 1e-12


class UnsupportedGridError(ValueError):
    """Grid outside the domain of a closed form (use the Fock route)."""


class UnphysicalEstimateWarning(RuntimeWarning):
    """Stabilizer mean magnitude above one cannot come from a quantum state."""


@dataclass(frozen=True)
class Thresholds:
    """Reference constants for classifying a squeezing value."""

    gaussian_bound: float = 1.0
    ft_sufficient_xi0: float = 0.135
    ft_necessary_xi0: float = 0.312
    ft_symmetric_xi0: float = 0.068
    grid_ft_delta_sq: float = GRID_FT_DELTA_SQ
    grid_ft_db: float = -10.5

    def classical_bound(self, grid: GridSpec) -> float:
        return classical_bound_grid(grid)


THRESHOLDS = Thresholds()

CLASSIFICATIONS = ("none", "sub-classical", "sub-Gaussian", "ft-possible", "ft-guaranteed")


def classical_bound(a: float, b: float) -> float:
    """Minimum of <Q_general(a,b)> over classical (coherent-mixture) states."""
    if a <= 0 or b <= 0:
        raise ValueError(f"need a > 0 and b > 0, got a={a}, b={b}")
    return 2.0 - math.exp(-a * a) - math.exp(-b * b)


def classical_bound_grid(grid: GridSpec) -> float:
    """Classical floor for an arbitrary grid.

    A coherent state can always cancel both offsets, so the floor depends
    only on the Euclidean length of each coefficient row.
    """
    r1 = grid.c11**2 + grid.c12**2
    r2 = grid.c21**2 + grid.c22**2
    return 2.0 - math.exp(-r1) - math.exp(-r2)


def _gaussian_value(a: float, b: float, g: float) -> float:
    return 2.0 - math.exp(-a * a / g) - math.exp(-b * b * g)


def gaussian_bound(a: float, b: float, g_range: tuple[float, float] | None = None) -> float:
    """Minimum of <Q_general(a,b)> over Gaussian states.

    Minimizes 2 - exp(-a^2/g) - exp(-b^2*g) over the squeezed-peak variance
    g.  Unrestricted and with a*b >= ln 2 the infimum is the limiting value
    1; otherwise (or with a finite g_range, the finite-squeezing relaxation)
    the 1-d minimum is found numerically.
    """
    if a <= 0 or b <= 0:
        raise ValueError(f"need a > 0 and b > 0, got a={a}, b={b}")
    if g_range is None:
        if a * b >= LN2:
            return 1.0
        lo, hi = 1e-12, 1e12
    else:
        lo, hi = float(g_range[0]), float(g_range[1])
        if not (0.0 < lo <= hi):
            raise ValueError(f"g_range must satisfy 0 < lo <= hi, got {g_range}")
    if lo == hi:
        return _gaussian_value(a, b, lo)
    # dense log-grid prescan, then a bounded polish around the best bracket
    # (the objective is nearly flat over most of a wide range, which starves
    # golden-section search on its own)
    ts = np.linspace(math.log(lo), math.log(hi), 2001)
    vals = 2.0 - np.exp(-a * a / np.exp(ts)) - np.exp(-b * b * np.exp(ts))
    k = int(np.argmin(vals))
    t_lo = ts[max(k - 1, 0)]
    t_hi = ts[min(k + 1, ts.size - 1)]
    res = minimize_scalar(
        lambda t: _gaussian_value(a, b, math.exp(t)),
        bounds=(t_lo, t_hi),
        method="bounded",
        options={"xatol": 1e-12},
    )
    return min(float(res.fun), float(vals.min()), _gaussian_value(a, b, lo), _gaussian_value(a, b, hi))


def xi_approx_symmetric(g: float) -> float:
    """Squeezing of the symmetric-grid peak superposition: 2 - 2 exp(-pi g / 2)."""
    if g <= 0:
        raise ValueError(f"need g > 0, got {g}")
    return 2.0 - 2.0 * math.exp(-math.pi * g / 2.0)


@dataclass(frozen=True)
class ApproxGKPParams:
    """Finite superposition of squeezed peaks: variance g, half-spacing a."""

    g: float
    a: float
    s_max: int | None = None  # None: truncate by peak-weight cutoff
    logical_bit: int = 0

    def __post_init__(self):
        if self.g <= 0:
            raise ValueError(f"need g > 0, got {self.g}")
        if self.a <= 0:
            raise ValueError(f"need a > 0, got {self.a}")
        if self.s_max is not None and self.s_max < 0:
            raise ValueError(f"s_max must be >= 0, got {self.s_max}")
        if self.logical_bit not in (0, 1):
            raise ValueError(f"logical_bit must be 0 or 1, got {self.logical_bit}")


def _peak_centers_weights(params: ApproxGKPParams) -> tuple[np.ndarray, np.ndarray]:
    if params.s_max is None:
        # include every peak whose Gaussian weight clears the cutoff
        bound = math.sqrt(-2.0 * math.log(PEAK_WEIGHT_CUTOFF) / params.g)
        s_max = max(1, int(math.ceil((bound / params.a + 1.0) / 2.0)))
    else:
        s_max = params.s_max
    s = np.arange(-s_max, s_max + 1)
    centers = (2.0 * s + (1.0 if params.logical_bit else 0.0)) * params.a
    weights = np.exp(-0.5 * params.g * centers**2)
    return centers, weights


def approx_state_displacement_mean(params: ApproxGKPParams, u: float, quadrature: str = "x") -> complex:
    """<exp(i u q)> on the peak superposition, q = x or p.

    Double sums over peak pairs using the Gaussian overlap formulas; for
    the x quadrature each pair contributes
    exp(-u^2 g/4 - (x1-x2)^2/(4g) + i u (x1+x2)/2), for p it contributes
    exp(-(u + x1 - x2)^2 / (4g)).
    """
    centers, weights = _peak_centers_weights(params)
    x1, x2 = np.meshgrid(centers, centers, indexing="ij")
    ww = np.outer(weights, weights)
    overlap0 = np.exp(-((x1 - x2) ** 2) / (4.0 * params.g))
    norm = float(np.sum(ww * overlap0))
    if quadrature == "x":
        val = math.exp(-u * u * params.g / 4.0) * np.sum(
            ww * overlap0 * np.exp(1j * u * (x1 + x2) / 2.0)
        )
    elif quadrature == "p":
        val = np.sum(ww * np.exp(-((u + x1 - x2) ** 2) / (4.0 * params.g)))
    else:
        raise ValueError(f"quadrature must be 'x' or 'p', got {quadrature!r}")
    return complex(val / norm)


def xi_finite_superposition(params: ApproxGKPParams, grid: GridSpec) -> float:
    """<Q_grid> on a finite peak superposition, axis-aligned grids only."""
    if abs(grid.c12) > 1e-12 or abs(grid.c21) > 1e-12:
        raise UnsupportedGridError(
            "peak-superposition closed form needs an axis-aligned grid "
            "(c12 = c21 = 0); build the state in the Fock basis instead"
        )
    mean_x = approx_state_displacement_mean(params, 2.0 * grid.c11, "x")
    mean_p = approx_state_displacement_mean(params, 2.0 * grid.c22, "p")
    phase1 = complex(math.cos(2.0 * grid.d1), math.sin(2.0 * grid.d1))
    phase2 = complex(math.cos(2.0 * grid.d2), math.sin(2.0 * grid.d2))
    return 2.0 - (phase1 * mean_x).real - (phase2 * mean_p).real


def grid_squeezing(mean_disp: complex, u: float) -> float:
    """Stabilizer sharpness: -(4/u^2) ln |<exp(-i u q)>|.

    Zero magnitude returns the infinite-squeezing sentinel; magnitudes
    above one are unphysical estimates and come back negative with a
    warning.
    """
    if u == 0:
        raise ValueError("grid constant u must be nonzero")
    r = abs(mean_disp)
    if r == 0.0:
        return math.inf
    if r > 1.0:
        warnings.warn(
            f"stabilizer mean magnitude {r:.6f} exceeds 1; estimate is unphysical",
            UnphysicalEstimateWarning,
        )
    return -4.0 / (u * u) * math.log(r)


@dataclass(frozen=True)
class GridSqueezingPair:
    """Grid squeezing in both quadratures with their grid constants."""

    delta_x_sq: float
    delta_p_sq: float
    u_x: float
    u_p: float

    @classmethod
    def for_s0(cls, delta_x_sq: float, delta_p_sq: float) -> "GridSqueezingPair":
        return cls(delta_x_sq, delta_p_sq, U_SYMMETRIC, U_SYMMETRIC)

    @classmethod
    def for_q0(cls, delta_x_sq: float, delta_p_sq: float) -> "GridSqueezingPair":
        return cls(delta_x_sq, delta_p_sq, U_Q0_X, U_Q0_P)


class XiFromGrid(NamedTuple):
    xi: float
    xi_linear: float  # high-squeezing approximation


def xi_from_grid_squeezing(pair: GridSqueezingPair, grid: str) -> XiFromGrid:
    """Squeezing value implied by a grid-squeezing pair on s0 or q0."""
    name = grid.lower()
    if name == "s0":
        _require_u(pair, U_SYMMETRIC, U_SYMMETRIC)
        xi = 2.0 - math.exp(-math.pi / 2.0 * pair.delta_x_sq) - math.exp(-math.pi / 2.0 * pair.delta_p_sq)
        lin = math.pi / 2.0 * (pair.delta_x_sq + pair.delta_p_sq)
    elif name == "q0":
        _require_u(pair, U_Q0_X, U_Q0_P)
        xi = 2.0 - math.exp(-math.pi / 4.0 * pair.delta_x_sq) - math.exp(-math.pi * pair.delta_p_sq)
        lin = math.pi / 4.0 * pair.delta_x_sq + math.pi * pair.delta_p_sq
    else:
        raise ValueError(f"grid must be 's0' or 'q0', got {grid!r}")
    return XiFromGrid(xi=xi, xi_linear=lin)


def _require_u(pair: GridSqueezingPair, ux: float, up: float) -> None:
    if abs(pair.u_x - ux) > 1e-9 or abs(pair.u_p - up) > 1e-9:
        raise ValueError(
            f"grid constants (u_x={pair.u_x:g}, u_p={pair.u_p:g}) do not match "
            f"the requested grid (expected {ux:g}, {up:g})"
        )


@dataclass(frozen=True)
class GridSqueezingBounds:
    """Per-quadrature upper bounds on grid squeezing implied by xi."""

    grid: str
    max_delta_x_sq: float
    max_delta_p_sq: float
    symmetric_delta_sq: float
    pessimistic_delta_x_sq: float | None
    pessimistic_fixed_p_sq: float | None


def grid_squeezing_bounds_from_xi(xi: float, grid: str) -> GridSqueezingBounds:
    """Upper bounds on each grid squeezing for a given xi in [0, 1).

    Each one-sided bound assumes the other quadrature is ideal.  The
    symmetric scenario splits xi evenly; the pessimistic q0 scenario pins
    the p quadrature at grid_ft/4 (its squeeze-converted partner then sits
    at half the fault-tolerance band) and tracks the x quadrature.
    """
    if not 0.0 <= xi < 1.0:
        raise ValueError(f"bounds are defined for xi in [0, 1), got {xi}")
    name = grid.lower()
    lg = math.log1p(-xi)
    if name == "q0":
        max_x = -4.0 / math.pi * lg
        max_p = -1.0 / math.pi * lg
        if xi == 0.0:
            sym = 0.0
        else:
            sym = brentq(
                lambda d: 2.0 - math.exp(-math.pi / 4.0 * d) - math.exp(-math.pi * d) - xi,
                0.0,
                max_x + 1.0,
            )
        floor = math.exp(-math.pi * PESSIMISTIC_FIXED_P_SQ)
        arg = 2.0 - xi - floor
        pess = -4.0 / math.pi * math.log(arg) if 0.0 < arg < 1.0 else None
        return GridSqueezingBounds(
            grid="q0",
            max_delta_x_sq=max_x,
            max_delta_p_sq=max_p,
            symmetric_delta_sq=float(sym),
            pessimistic_delta_x_sq=pess,
            pessimistic_fixed_p_sq=PESSIMISTIC_FIXED_P_SQ,
        )
    if name == "s0":
        bound = -2.0 / math.pi * lg
        sym = -2.0 / math.pi * math.log1p(-xi / 2.0)
        return GridSqueezingBounds(
            grid="s0",
            max_delta_x_sq=bound,
            max_delta_p_sq=bound,
            symmetric_delta_sq=sym,
            pessimistic_delta_x_sq=None,
            pessimistic_fixed_p_sq=None,
        )
    raise ValueError(f"grid must be 's0' or 'q0', got {grid!r}")


def fidelity_bounds(f: float, g: float) -> tuple[float, float]:
    """Sandwich on xi_s0 for states at fidelity f to the g peak superposition.

    Exact for states of the form f * P_ref + (1-f) * (orthogonal part); the
    eigenvalue range [0, 4] of the operator fixes the width 4*(1-f).
    """
    if not 0.0 <= f <= 1.0:
        raise ValueError(f"fidelity must be in [0, 1], got {f}")
    xi1 = xi_approx_symmetric(g)
    return f * xi1, f * xi1 + 4.0 * (1.0 - f)


def loss_to_noise_variance(eta: float) -> float:
    """Equivalent added-noise variance of a pure-loss channel in the scaled basis."""
    if not 0.0 < eta <= 1.0:
        raise ValueError(f"eta must be in (0, 1], got {eta}")
    return (1.0 - eta) / (2.0 * eta)


def channel_output_xi(
    input_terms: tuple[float, float],
    ch: ChannelParams,
    grid: GridSpec,
) -> float:
    """Squeezing after loss and noise from rescaled input expectations.

    input_terms are (<sin^2(a sqrt(eta) x)>, <sin^2(b sqrt(eta) p)>) of the
    *input* state on the matched rescaled grid; the channel damps each term
    by gamma = exp(-2 c^2 V) and adds the (1 - gamma) noise floor.
    """
    if not grid.axis_aligned:
        raise UnsupportedGridError("channel closed form needs an axis-aligned grid")
    tx, tp = input_terms
    if not (-1e-9 <= tx <= 1.0 + 1e-9 and -1e-9 <= tp <= 1.0 + 1e-9):
        raise ValueError(f"sin^2 expectations must lie in [0, 1], got {input_terms}")
    v = ch.noise_variance
    gx = math.exp(-2.0 * grid.c11**2 * v)
    gp = math.exp(-2.0 * grid.c22**2 * v)
    return 2.0 * gx * tx + 2.0 * gp * tp + 2.0 - gx - gp


def channel_affine_xi(xi_in: float, eta: float | None = None, v: float | None = None) -> float:
    """Scaled-basis symmetric-grid map: xi_out = gamma xi_in + 2 (1 - gamma).

    gamma = exp(-pi V); pass either a transmission eta (converted to its
    equivalent noise variance) or the variance V directly.
    """
    if (eta is None) == (v is None):
        raise ValueError("pass exactly one of eta or v")
    if v is None:
        v = loss_to_noise_variance(eta)
    if v < 0:
        raise ValueError(f"noise variance must be >= 0, got {v}")
    gamma = math.exp(-math.pi * v)
    return gamma * xi_in + 2.0 * (1.0 - gamma)


def min_eta_for_band(xi_band: float) -> float:
    """Smallest pure-loss transmission for which xi_band stays reachable.

    The scaled-basis map floors the output at 2*(1 - gamma), so the band is
    reachable iff gamma >= 1 - xi_band/2.
    """
    if not 0.0 < xi_band < 2.0:
        raise ValueError(f"band must be in (0, 2), got {xi_band}")
    v_max = -math.log(1.0 - xi_band / 2.0) / math.pi
    return 1.0 / (1.0 + 2.0 * v_max)


def breeding_step_xi(sin2_half_x: float, sin2_double_p: float) -> float:
    """One deterministic breeding step on two identical even-wavefunction inputs.

    Inputs are <sin^2(a x / sqrt(2))> and <sin^2(b sqrt(2) p)> of a single
    input mode; the output is 4 t (1 - t) + 2 s, which never beats the
    matched-grid input value unless t > 1/2.
    """
    t, s = sin2_half_x, sin2_double_p
    if not (0.0 <= t <= 1.0 and 0.0 <= s <= 1.0):
        raise ValueError(f"sin^2 expectations must lie in [0, 1], got ({t}, {s})")
    return 4.0 * t * (1.0 - t) + 2.0 * s


def db(xi: float) -> float:
    """Squeezing in decibels, 10 log10(xi); nonpositive values map to -inf."""
    if xi <= 0.0:
        return -math.inf
    return 10.0 * math.log10(xi)


def classify_xi(xi: float, grid: GridSpec, thresholds: Thresholds = THRESHOLDS) -> str:
    """Band containing xi, with inclusive boundaries.

    Bands from strongest to weakest: ft-guaranteed, ft-possible,
    sub-Gaussian, sub-classical (below the grid's classical floor but not
    the Gaussian one), none.
    """
    if xi <= thresholds.ft_sufficient_xi0:
        return "ft-guaranteed"
    if xi <= thresholds.ft_necessary_xi0:
        return "ft-possible"
    if xi <= thresholds.gaussian_bound:
        return "sub-Gaussian"
    if xi <= thresholds.classical_bound(grid):
        return "sub-classical"
    return "none"
