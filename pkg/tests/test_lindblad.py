import numpy as np
import pytest

from spindrift import (
    AxisField,
    ConfigError,
    DensityMatrix,
    LindbladSolver,
    SpatialGrid,
    spin_geometry,
)
from spindrift.lindblad import (
    from_pauli_components,
    kinetic_phase,
    kinetic_step,
    measurement_step,
    observables,
    pauli_component_rates,
    pauli_components,
    pauli_rhs,
    projector_channel,
)

L = 32.0
Q = 2 * 2 * np.pi / L

# independent spin matrices for the brute-force routes below
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
ID = np.eye(2, dtype=complex)


def brute_force_channel(block, n1, n2):
    """sum_s P_s(n1) block P_s(n2) assembled from explicit 2x2 matrices."""
    out = np.zeros((2, 2), dtype=complex)
    for sign in (+1, -1):
        p1 = (ID + sign * (n1[0] * SX + n1[1] * SY + n1[2] * SZ)) / 2
        p2 = (ID + sign * (n2[0] * SX + n2[1] * SY + n2[2] * SZ)) / 2
        out += p1 @ block @ p2
    return out


def random_axes(rng, count):
    v = rng.normal(size=(count, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def test_pauli_component_roundtrip():
    rng = np.random.default_rng(7)
    data = rng.normal(size=(5, 5, 2, 2)) + 1j * rng.normal(size=(5, 5, 2, 2))
    np.testing.assert_allclose(from_pauli_components(pauli_components(data)), data, atol=1e-15)


def test_component_rates_match_brute_force_generator():
    # the closed-form coherence rates against nu (P rho P - rho) built from
    # explicit projector matrices, over many random axis pairs and blocks
    rng = np.random.default_rng(21)
    nu = 1.7
    n1s, n2s = random_axes(rng, 200), random_axes(rng, 200)
    for n1, n2 in zip(n1s, n2s):
        block = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        generator = nu * (brute_force_channel(block, n1, n2) - block)
        rho0, vec = pauli_components(block)[0], pauli_components(block)[1:4].T
        drho0, dvec = pauli_component_rates(nu, n1, n2, rho0, vec)
        expected = pauli_components(generator)
        np.testing.assert_allclose(drho0, expected[0], atol=1e-13)
        np.testing.assert_allclose(dvec, expected[1:4].T, atol=1e-13)


def test_pauli_rhs_matches_brute_force_on_random_kernels():
    # component-form rates over the full kernel against the projector sum
    # assembled from explicit 2x2 matrices, for a batch of random states
    grid = SpatialGrid(16, L)
    geo = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    rng = np.random.default_rng(5)
    nu = 0.8
    for _ in range(25):
        raw = rng.normal(size=(16, 16, 2, 2)) + 1j * rng.normal(size=(16, 16, 2, 2))
        rho = (raw + raw.transpose(1, 0, 3, 2).conj()) / 2
        expected = np.empty_like(rho)
        for i in range(16):
            for j in range(16):
                expected[i, j] = nu * (brute_force_channel(rho[i, j], geo.n[i], geo.n[j]) - rho[i, j])
        rates = pauli_rhs(geo, pauli_components(rho), nu)
        np.testing.assert_allclose(from_pauli_components(rates), expected, atol=1e-12)


def test_pauli_rhs_limiting_cases():
    grid = SpatialGrid(32, L)
    rng = np.random.default_rng(11)
    raw = rng.normal(size=(32, 32, 2, 2)) + 1j * rng.normal(size=(32, 32, 2, 2))
    comp = pauli_components((raw + raw.transpose(1, 0, 3, 2).conj()) / 2)
    # constant axis: the scalar component is untouched by the measurement
    const = spin_geometry(AxisField.constant(grid, [0, 0, 1]), mass=1.0)
    np.testing.assert_allclose(pauli_rhs(const, comp, 1.0)[0], 0.0, atol=1e-15)
    # helix diagonal with spin along z (perpendicular to every axis): pure decay
    helix = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    diag = np.zeros((4, 32, 32), dtype=complex)
    i = np.arange(32)
    diag[0, i, i] = 1.0
    diag[3, i, i] = 0.7
    rates = pauli_rhs(helix, diag, 2.0)
    np.testing.assert_allclose(rates[3][i, i], -2.0 * diag[3, i, i], atol=1e-14)
    np.testing.assert_allclose(rates[0][i, i], 0.0, atol=1e-15)


def test_observable_record_bundle():
    grid = SpatialGrid(64, L)
    polarized = DensityMatrix.pure(grid, 2.0, L / 2, 2 * np.pi / L, [1, 0])
    rec = observables(polarized, time=0.25, spectrum=True)
    np.testing.assert_allclose(rec.trace, 1.0, atol=1e-13)
    np.testing.assert_allclose(rec.purity, 1.0, atol=1e-13)
    np.testing.assert_allclose(rec.spin_total, [0, 0, 1], atol=1e-13)
    np.testing.assert_allclose(rec.mean_x, L / 2, atol=1e-10)
    np.testing.assert_allclose(rec.mean_p, 2 * np.pi / L, atol=1e-12)
    assert rec.min_eigenvalue > -1e-10
    assert len(rec.scalar_values()) == len(rec.SCALAR_FIELDS)
    mixed = observables(DensityMatrix.unpolarized(grid, 2.0, L / 2, 0.0))
    np.testing.assert_allclose(mixed.spin_total, 0.0, atol=1e-14)
    np.testing.assert_allclose(mixed.purity, 0.5, atol=1e-12)
    assert mixed.min_eigenvalue is None


def test_conjugate_spinor_feels_the_opposite_force():
    # antipodal initial polarizations are pushed in opposite directions
    grid = SpatialGrid(64, L)
    solver = LindbladSolver(AxisField.helix(grid, Q), nu=1.0, mass=1.0, dt=0.01)
    up = solver.run(DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [1, 0]), 30)
    down = solver.run(DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [0, 1]), 30)
    np.testing.assert_allclose(up.momentum_moment(1), -down.momentum_moment(1), atol=1e-10)
    assert up.momentum_moment(1) > 1e-3


def test_momentum_balance_against_local_force_integral():
    # finite-difference slope of <p> versus -(nu/2) integral F . spin density,
    # evaluated mid-interval; second-order accurate in dt
    grid = SpatialGrid(64, L)
    geo = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    solver = LindbladSolver(AxisField.helix(grid, Q), nu=1.0, mass=1.0, dt=0.005)
    state = DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [1, 0])
    p_before = state.momentum_moment(1)
    data = solver.step(state.data, 0.0)
    mid = DensityMatrix(grid, data.copy())
    data = solver.step(data, solver.dt)
    p_after = DensityMatrix(grid, data).momentum_moment(1)
    slope = (p_after - p_before) / (2 * solver.dt)
    force = -solver.nu / 2 * np.sum(geo.force * mid.spin_density()) * grid.dx
    np.testing.assert_allclose(slope, force, rtol=1e-4)


def test_measurement_step_matches_rk4_on_the_generator():
    # one exact channel application over nu dt = 0.1 against 50 RK4 substeps
    # of d rho/dt = nu (Phi(rho) - rho), with Phi built independently above
    grid = SpatialGrid(32, L)
    geo = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    state = DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [1, 1j]).data
    nu, dt = 2.0, 0.05

    def rhs(rho):
        out = np.empty_like(rho)
        for i in range(grid.n):
            for j in range(grid.n):
                out[i, j] = nu * (brute_force_channel(rho[i, j], geo.n[i], geo.n[j]) - rho[i, j])
        return out

    reference = state.copy()
    h = dt / 50
    for _ in range(50):
        k1 = rhs(reference)
        k2 = rhs(reference + h / 2 * k1)
        k3 = rhs(reference + h / 2 * k2)
        k4 = rhs(reference + h * k3)
        reference = reference + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    stepped = measurement_step(state, geo, nu, dt)
    np.testing.assert_allclose(stepped, reference, atol=1e-12)


def test_projector_channel_is_idempotent_and_trace_preserving():
    grid = SpatialGrid(64, L)
    geo = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    state = DensityMatrix.pure(grid, 2.0, L / 2, 2 * np.pi / L, [1, 0.3 - 0.2j])
    once = projector_channel(state.data, geo)
    twice = projector_channel(once, geo)
    np.testing.assert_allclose(twice, once, atol=1e-14)
    projected = DensityMatrix(grid, once)
    np.testing.assert_allclose(projected.trace(), state.trace(), atol=1e-13)
    assert projected.hermiticity_defect() < 1e-14
    # unselective measurement cannot increase purity
    stepped = DensityMatrix(grid, measurement_step(state.data, geo, 1.0, 0.3))
    assert stepped.purity() <= state.purity() + 1e-12


def test_transverse_polarization_decays_at_rate_nu():
    # constant axis z, packet polarized along x: the transverse spin integral
    # obeys S_x(t) = e^{-nu t} S_x(0) exactly, kinetic motion included
    grid = SpatialGrid(64, L)
    field = AxisField.constant(grid, [0, 0, 1])
    solver = LindbladSolver(field, nu=1.0, mass=1.0, dt=0.01)
    state = DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [1, 1])
    final = solver.run(state, 50)
    s = final.spin_density().sum(axis=0) * grid.dx
    np.testing.assert_allclose(s[0], np.exp(-0.5), atol=1e-12)
    np.testing.assert_allclose(s[1], 0.0, atol=1e-13)
    np.testing.assert_allclose(s[2], 0.0, atol=1e-13)
    np.testing.assert_allclose(final.trace(), 1.0, atol=1e-12)


def test_free_packet_spreads_ballistically():
    grid = SpatialGrid(128, L)
    sigma, x0, p0, mass, T = 2.0, L / 2, 2 * 2 * np.pi / L, 1.0, 2.0
    solver = LindbladSolver(AxisField.constant(grid, [0, 0, 1]), nu=0.0, mass=mass, dt=0.02)
    final = solver.run(DensityMatrix.pure(grid, sigma, x0, p0, [1, 0]), 100)

    mean = final.mean_position()
    np.testing.assert_allclose(mean, x0 + p0 * T / mass, atol=1e-8)
    rho = final.position_density()
    d = grid.wrapped_displacement(mean)
    variance = np.sum(d**2 * rho) * grid.dx
    np.testing.assert_allclose(variance, sigma**2 + T**2 / (4 * mass**2 * sigma**2), rtol=1e-6)
    np.testing.assert_allclose(final.momentum_moment(1), p0, atol=1e-12)
    np.testing.assert_allclose(final.momentum_moment(2), p0**2 + 1 / (4 * sigma**2), rtol=1e-10)
    np.testing.assert_allclose(final.purity(), 1.0, atol=1e-10)


def test_momentum_occupations_of_boosted_packet():
    grid = SpatialGrid(128, L)
    sigma, p0 = 2.0, 3 * 2 * np.pi / L
    state = DensityMatrix.pure(grid, sigma, L / 2, p0, [0, 1])
    momenta, occ = state.momentum_occupations()
    np.testing.assert_allclose(occ.sum(), 1.0, atol=1e-12)
    np.testing.assert_allclose(momenta[np.argmax(occ)], p0, atol=1e-12)
    np.testing.assert_allclose(state.momentum_moment(1), p0, atol=1e-12)
    np.testing.assert_allclose(state.momentum_moment(2), p0**2 + 1 / (4 * sigma**2), rtol=1e-10)


def test_wigner_marginal_and_gaussian_shape():
    grid = SpatialGrid(128, L)
    sigma, x0, p0 = 2.0, L / 2, 2 * 2 * np.pi / L
    state = DensityMatrix.pure(grid, sigma, x0, p0, [1, 1])  # polarized along x
    momenta, w = state.wigner()
    dp = np.pi / L
    np.testing.assert_allclose(w[0].sum(axis=1) * dp, state.position_density(), atol=1e-13)
    np.testing.assert_allclose(w[1].sum(axis=1) * dp, state.spin_density()[:, 0], atol=1e-13)
    d = grid.wrapped_displacement(x0)
    analytic = np.exp(-d[:, None] ** 2 / (2 * sigma**2) - 2 * sigma**2 * (momenta[None, :] - p0) ** 2) / np.pi
    np.testing.assert_allclose(w[0].sum() * grid.dx * dp, 1.0, atol=1e-10)
    # the analytic form holds away from the antipodal ring image at |d| = L/2,
    # whose gaussian tail still reaches e^-8 at |d| = L/4; stay well inside
    window = np.abs(d) < L / 8
    assert np.abs(w[0][window] - analytic[window]).max() < 1e-6
    # positivity of the pure-gaussian wigner function also holds only there:
    # the ring image oscillates in sign by construction
    assert w[0][window].min() > -1e-8
    # the image rows alternate in sign and cancel in every momentum sum
    antipode = np.argmin(np.abs(d - L / 2)) if (d == -L / 2).sum() == 0 else np.argmax(d == -L / 2)
    assert np.abs(w[0][antipode]).max() > 0.1
    assert abs(w[0][antipode].sum()) * np.pi / L < 1e-12
    np.testing.assert_allclose(w[1], w[0], atol=1e-12)
    np.testing.assert_allclose(w[2], 0.0, atol=1e-12)
    np.testing.assert_allclose(w[3], 0.0, atol=1e-12)


def test_helix_moment_laws_polarized():
    # packet polarized along z on a helix field: the measurement back-action
    # pumps momentum as <p>(t) = (q/2)(1 - e^{-nu t}) while the z polarization
    # decays as e^{-nu t}; both laws are exact for this propagator
    grid = SpatialGrid(64, L)
    solver = LindbladSolver(AxisField.helix(grid, Q), nu=1.0, mass=1.0, dt=0.01)
    state = DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [1, 0])
    final = solver.run(state, 50)
    t = 0.5
    np.testing.assert_allclose(final.momentum_moment(1), Q / 2 * (1 - np.exp(-t)), atol=1e-10)
    z_total = final.spin_density().sum(axis=0)[2] * grid.dx
    np.testing.assert_allclose(z_total, np.exp(-t), atol=1e-10)
    np.testing.assert_allclose(final.trace(), 1.0, atol=1e-12)


def test_helix_moment_laws_unpolarized():
    # unpolarized packet: no net force, but measurement heats the packet and
    # builds a momentum-spin correlation C = tr(p sigma_z rho)
    grid = SpatialGrid(64, L)
    solver = LindbladSolver(AxisField.helix(grid, Q), nu=1.0, mass=1.0, dt=0.01)
    state = DensityMatrix.unpolarized(grid, 2.0, L / 2, 0.0)
    p2_initial = state.momentum_moment(2)
    final = solver.run(state, 50)
    t = 0.5
    np.testing.assert_allclose(final.momentum_moment(1), 0.0, atol=1e-12)
    np.testing.assert_allclose(
        final.momentum_moment(2), p2_initial + Q**2 / 2 * (1 - np.exp(-t)), atol=1e-10
    )
    np.testing.assert_allclose(
        final.momentum_moment(1, component=3), -Q / 2 * (1 - np.exp(-t)), atol=1e-10
    )


def test_kinetic_step_is_unitary_and_exact_for_plane_wave():
    grid = SpatialGrid(64, L)
    k1 = 3 * 2 * np.pi / L
    psi = np.exp(1j * k1 * grid.x) / np.sqrt(L)
    data = np.einsum("i,j->ij", psi, psi.conj())[:, :, None, None] * np.eye(2)
    mass, dt = 1.0, 0.3
    out = kinetic_step(data, kinetic_phase(grid, mass, dt))
    # a momentum eigenstate only picks up a phase, so the kernel is unchanged
    np.testing.assert_allclose(out, data, atol=1e-14)


def test_sector_state_spin_follows_the_axis():
    grid = SpatialGrid(64, L)
    geo = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    state = DensityMatrix.sector(geo, 2.0, L / 2, 0.0, sector=+1)
    np.testing.assert_allclose(state.trace(), 1.0, atol=1e-13)
    rho = state.position_density()
    np.testing.assert_allclose(state.spin_density(), rho[:, None] * geo.n, atol=1e-13)
    down = DensityMatrix.sector(geo, 2.0, L / 2, 0.0, sector=-1)
    np.testing.assert_allclose(down.spin_density(), -rho[:, None] * geo.n, atol=1e-13)


def test_spectrum_and_positivity():
    grid = SpatialGrid(32, L)
    state = DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [1, 2j])
    eigs = state.spectrum()
    np.testing.assert_allclose(eigs[-1], 1.0, atol=1e-10)
    np.testing.assert_allclose(eigs[:-1], 0.0, atol=1e-10)
    solver = LindbladSolver(AxisField.helix(grid, Q), nu=4.0, mass=1.0, dt=0.01)
    final = solver.run(state, 30)
    assert final.spectrum().min() > -1e-10
    assert final.hermiticity_defect() < 1e-12


def test_rotating_field_solver_preserves_trace():
    grid = SpatialGrid(32, L)
    field = AxisField.helix(grid, Q).rotating([0, 0, 1], 2.0)
    solver = LindbladSolver(field, nu=1.0, mass=1.0, dt=0.02)
    final = solver.run(DensityMatrix.unpolarized(grid, 2.0, L / 2, 0.0), 25)
    np.testing.assert_allclose(final.trace(), 1.0, atol=1e-12)
    assert final.hermiticity_defect() < 1e-12


def test_constructor_validation():
    grid = SpatialGrid(32, L)
    with pytest.raises(ConfigError, match="spinor"):
        DensityMatrix.pure(grid, 2.0, L / 2, 0.0, [0, 0])
    with pytest.raises(ConfigError, match="sigma"):
        DensityMatrix.pure(grid, -1.0, L / 2, 0.0, [1, 0])
    field = AxisField.helix(grid, Q)
    with pytest.raises(ConfigError, match="nu"):
        LindbladSolver(field, nu=-1.0, mass=1.0, dt=0.01)
    with pytest.raises(ConfigError, match="dt"):
        LindbladSolver(field, nu=1.0, mass=1.0, dt=0.0)
