import math

import numpy as np
import pytest

from gkpsq.fock import DensityMatrix, FockState
from gkpsq.operators import (
    GKP_DET,
    KAPPA_MINUS,
    KAPPA_PLUS,
    ChannelConvergenceWarning,
    ChannelParams,
    GridSpec,
    apply_channel,
    approx_gkp_state,
    build_operator,
    expectation,
    gaussian_route_from_q0,
    ground_state,
    preset_grid,
    sin2_expectation,
    transform_grid,
)
from gkpsq.analytic import ApproxGKPParams, channel_output_xi, xi_finite_superposition
from oracles import vacuum_sin2_integral

SQRT_PI = math.sqrt(math.pi)
SQRT_PI_2 = math.sqrt(math.pi / 2.0)


def test_preset_coefficients_and_validity():
    q0 = preset_grid("q0")
    assert (q0.c11, q0.c22) == (SQRT_PI / 2.0, SQRT_PI)
    assert q0.det == pytest.approx(GKP_DET, abs=1e-12)
    assert q0.gkp_valid

    s0 = preset_grid("s0")
    assert s0.c11 == s0.c22 == pytest.approx(SQRT_PI_2)
    assert s0.c11 * s0.c22 == pytest.approx(math.pi / 2.0)  # determinant check
    assert s0.gkp_valid

    hexg = preset_grid("hex")
    assert KAPPA_PLUS**2 - KAPPA_MINUS**2 == pytest.approx(math.pi / 2.0, abs=1e-12)
    assert hexg.gkp_valid

    q1 = preset_grid("q1")
    assert q1.d1 == pytest.approx(math.pi / 2.0)
    assert (q1.c11, q1.c22) == (q0.c11, q0.c22)

    assert not preset_grid("general", a=1.0, b=1.0).gkp_valid


def test_preset_unknown_topology():
    with pytest.raises(ValueError):
        preset_grid("square")
    with pytest.raises(ValueError):
        preset_grid("general", a=-1.0, b=2.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        GridSpec(0.0, 0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        GridSpec(1.0, 0.0, 0.0, math.inf)


def test_row_waves():
    grid = GridSpec(1.0, 1.0, 0.0, 2.0, d1=0.3, d2=0.4)
    (z1, phi1, d1), (z2, phi2, d2) = grid.row_waves()
    assert z1 == pytest.approx(math.sqrt(2.0))
    assert phi1 == pytest.approx(math.pi / 4.0)
    assert (d1, d2) == (0.3, 0.4)
    assert z2 == pytest.approx(2.0)
    assert phi2 == pytest.approx(math.pi / 2.0)


def test_transform_identity_displacement_gives_q1():
    q0 = preset_grid("q0")
    out = transform_grid(q0, np.eye(2), (SQRT_PI, 0.0))
    q1 = preset_grid("q1")
    assert out.d1 == pytest.approx(q1.d1, abs=1e-12)
    assert out.d2 == pytest.approx(0.0, abs=1e-12)
    assert out.coefficient_matrix == pytest.approx(q1.coefficient_matrix)


def test_transform_squeeze_gives_s0_s1():
    q0 = preset_grid("q0")
    for target in ("s0", "s1"):
        A, alpha = gaussian_route_from_q0(target)
        out = transform_grid(q0, A, alpha)
        ref = preset_grid(target)
        assert np.abs(out.coefficient_matrix - ref.coefficient_matrix).max() < 1e-12
        assert out.d1 == pytest.approx(ref.d1, abs=1e-12)
        assert out.d2 == pytest.approx(ref.d2, abs=1e-12)
        assert out.gkp_valid


def test_transform_hex_route():
    q0 = preset_grid("q0")
    A, alpha = gaussian_route_from_q0("hex")
    out = transform_grid(q0, A, alpha)
    ref = preset_grid("hex")
    assert np.abs(out.coefficient_matrix - ref.coefficient_matrix).max() < 1e-10
    assert out.gkp_valid


def test_transform_rejects_nonsymplectic():
    with pytest.raises(ValueError):
        transform_grid(preset_grid("q0"), np.diag([2.0, 1.0]))


def test_transform_preserves_validity(rng):
    grid = preset_grid("s0")
    for _ in range(20):
        r = rng.uniform(-0.8, 0.8)
        th1, th2 = rng.uniform(0, 2 * math.pi, size=2)

        def rot(t):
            return np.array([[math.cos(t), math.sin(t)], [-math.sin(t), math.cos(t)]])

        A = rot(th1) @ np.diag([math.exp(r), math.exp(-r)]) @ rot(th2)
        grid = transform_grid(grid, A, rng.normal(size=2))
        assert grid.gkp_valid


def test_single_entry_matches_vacuum_value():
    # 1x1 truncation equals the vacuum expectation of the untruncated operator
    s0 = preset_grid("s0")
    target = 2.0 - 2.0 * math.exp(-math.pi / 2.0)
    op = build_operator(s0, 1)
    assert op.matrix.shape == (1, 1)
    assert op.matrix[0, 0].real == pytest.approx(target, abs=1e-8)
    assert op.build_dim >= 64

    for a, b in [(0.6, 1.3), (1.0, 1.0), (SQRT_PI_2, SQRT_PI_2)]:
        grid = preset_grid("general", a=a, b=b)
        entry = build_operator(grid, 1).matrix[0, 0].real
        assert entry == pytest.approx(2.0 - math.exp(-a * a) - math.exp(-b * b), abs=1e-8)
        # independent quadrature-integral oracle
        assert entry == pytest.approx(vacuum_sin2_integral(a) + vacuum_sin2_integral(b), abs=1e-8)


@pytest.mark.parametrize("name", ["q0", "q1", "s0", "s1", "hex"])
@pytest.mark.parametrize("dim", [1, 4, 9])
def test_operator_invariants(name, dim):
    op = build_operator(preset_grid(name), dim)
    herm = np.abs(op.matrix - op.matrix.conj().T).max()
    assert herm < 1e-10
    vals = np.linalg.eigvalsh(op.matrix)
    assert vals.min() > -1e-6
    assert vals.max() < 4.0 + 1e-6


def test_ground_state_q1_beats_gaussian_bound_at_dim_3():
    gs = ground_state(build_operator(preset_grid("q1"), 3))
    assert gs.xi_min < 1.0


def test_ground_state_monotone_in_dimension():
    grid = preset_grid("q0")
    values = [ground_state(build_operator(grid, n)).xi_min for n in (5, 10, 20)]
    assert values[0] > values[1] > values[2]


def test_ground_state_dim1_equals_entry():
    gs = ground_state(build_operator(preset_grid("s0"), 1))
    assert gs.xi_min == pytest.approx(2.0 - 2.0 * math.exp(-math.pi / 2.0), abs=1e-8)
    assert gs.degeneracy == 1


def test_ground_state_eigen_identity():
    op = build_operator(preset_grid("q0"), 12)
    gs = ground_state(op)
    assert expectation(op, gs.state) == pytest.approx(gs.xi_min, abs=1e-9)


def test_expectation_vacuum_equals_classical_oracle():
    op = build_operator(preset_grid("s0"), 10)
    vac = FockState.number_state(0, 10)
    target = vacuum_sin2_integral(SQRT_PI_2) * 2.0
    assert expectation(op, vac) == pytest.approx(target, abs=1e-8)


def test_expectation_linear_in_density_matrix(rng):
    op = build_operator(preset_grid("hex"), 14)
    s1 = FockState.normalized(rng.normal(size=14) + 1j * rng.normal(size=14))
    s2 = FockState.normalized(rng.normal(size=14) + 1j * rng.normal(size=14))
    lam = 0.37
    mix = DensityMatrix(lam * s1.density_matrix().entries + (1 - lam) * s2.density_matrix().entries)
    lhs = expectation(op, mix)
    rhs = lam * expectation(op, s1) + (1 - lam) * expectation(op, s2)
    assert lhs == pytest.approx(rhs, abs=1e-10)


def test_expectation_dimension_mismatch():
    op = build_operator(preset_grid("q0"), 5)
    with pytest.raises(ValueError):
        expectation(op, FockState.number_state(0, 6))


def test_two_displacement_routes_agree(rng):
    # build-then-truncate against exact displacement matrix elements
    state = FockState.normalized((rng.normal(size=20) + 1j * rng.normal(size=20)) * np.exp(-np.arange(20) / 4))
    for grid in (preset_grid("hex"), preset_grid("q1"), GridSpec(0.83, -0.41, 0.37, 0.64, d1=0.3, d2=1.1)):
        direct = expectation(build_operator(grid, 20), state)
        split = 2.0 * sin2_expectation(state, grid.c11, grid.c12, grid.d1)
        split += 2.0 * sin2_expectation(state, grid.c21, grid.c22, grid.d2)
        assert split == pytest.approx(direct, abs=1e-9)


def test_equivalent_grids_converge_together():
    # q0 and s0 reshape into each other, so their truncated minima track;
    # measured gap at dimension 50 is ~11%, tolerance set at 12%
    xi_q0 = ground_state(build_operator(preset_grid("q0"), 50)).xi_min
    xi_s0 = ground_state(build_operator(preset_grid("s0"), 50)).xi_min
    assert abs(xi_q0 - xi_s0) / xi_q0 < 0.12


def test_channel_params():
    ch = ChannelParams(eta=0.9, n_thermal=0.05)
    assert ch.noise_variance == pytest.approx(0.05 + 0.05)
    with pytest.raises(ValueError):
        ChannelParams(eta=0.0)
    with pytest.raises(ValueError):
        ChannelParams(eta=0.5, n_thermal=-0.1)


def test_channel_composition_is_physical():
    # pure loss composes multiplicatively with no spurious thermal photons
    c1, c2 = ChannelParams(eta=0.9), ChannelParams(eta=0.8)
    both = c1.then(c2)
    assert both.eta == pytest.approx(0.72)
    assert both.n_thermal == 0.0
    # noise added early is attenuated by later loss
    noisy = ChannelParams(eta=1.0, n_thermal=0.2).then(ChannelParams(eta=0.5))
    assert noisy.n_thermal == pytest.approx(0.1)
    assert noisy.noise_variance == pytest.approx(0.1 + 0.25)


def test_apply_channel_identity():
    rho = FockState.normalized([1.0, 0.5, 0.2]).density_matrix()
    out = apply_channel(rho, ChannelParams(eta=1.0), cutoff=6)
    assert np.abs(out.entries[:3, :3] - rho.entries).max() < 1e-12
    assert np.trace(out.entries).real == pytest.approx(1.0, abs=1e-12)


def test_apply_channel_vacuum_fixed_point():
    vac = FockState.number_state(0, 4).density_matrix()
    out = apply_channel(vac, ChannelParams(eta=0.6), cutoff=8)
    target = np.zeros((8, 8), dtype=complex)
    target[0, 0] = 1.0
    assert np.abs(out.entries - target).max() < 1e-12


def test_apply_channel_matches_analytic_map(rng):
    grid = preset_grid("s0")
    cutoff = 36
    op = build_operator(grid, cutoff)
    raw = (rng.normal(size=10) + 1j * rng.normal(size=10)) * np.exp(-np.arange(10) / 3)
    state = FockState.normalized(raw)
    ch = ChannelParams(eta=0.85, n_thermal=0.08)
    scale = math.sqrt(ch.eta)
    terms = (
        sin2_expectation(state, grid.c11 * scale, 0.0),
        sin2_expectation(state, 0.0, grid.c22 * scale),
    )
    predicted = channel_output_xi(terms, ch, grid)
    rho_out = apply_channel(state.density_matrix().padded(cutoff), ch, cutoff)
    assert expectation(op, rho_out) == pytest.approx(predicted, abs=1e-6)


def test_apply_channel_warns_when_cutoff_leaks():
    rho = FockState.number_state(8, 10).density_matrix()
    with pytest.warns(ChannelConvergenceWarning):
        apply_channel(rho, ChannelParams(eta=1.0, n_thermal=1.5), cutoff=12)


def test_apply_channel_cutoff_precondition():
    rho = FockState.number_state(0, 6).density_matrix()
    with pytest.raises(ValueError):
        apply_channel(rho, ChannelParams(eta=0.9), cutoff=4)


def test_approx_state_matches_peak_sum():
    params = ApproxGKPParams(g=0.35, a=SQRT_PI_2, s_max=1)
    state = approx_gkp_state(params, 50)
    op = build_operator(preset_grid("s0"), 50)
    assert expectation(op, state) == pytest.approx(
        xi_finite_superposition(params, preset_grid("s0")), abs=1e-6
    )


def test_approx_state_logical_bit_shifts_peaks():
    even = approx_gkp_state(ApproxGKPParams(g=0.4, a=SQRT_PI_2, s_max=1, logical_bit=0), 40)
    odd = approx_gkp_state(ApproxGKPParams(g=0.4, a=SQRT_PI_2, s_max=1, logical_bit=1), 40)
    # the shifted superposition has larger mean photon number
    ns = np.arange(40)
    n_even = float(np.sum(ns * np.abs(even.amplitudes) ** 2))
    n_odd = float(np.sum(ns * np.abs(odd.amplitudes) ** 2))
    assert n_odd > n_even
