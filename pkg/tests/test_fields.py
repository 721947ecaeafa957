import numpy as np
import pytest

from spindrift import AxisField, ConfigError, GaugeSingularityError, SpatialGrid, spin_geometry
from spindrift.fields import PAULI, spectral_derivative

L = 32.0
Q = 2 * 2 * np.pi / L  # two turns on the box, q = pi/8


def helix_geometry(n_points=128, mass=1.0):
    grid = SpatialGrid(n_points, L)
    return spin_geometry(AxisField.helix(grid, Q), mass=mass)


def finite_difference_connection(spinor_a, spinor_b, dx):
    """-i <a| d/dx |b> by central differences, the slow reference route."""
    db = (np.roll(spinor_b, -1, axis=0) - np.roll(spinor_b, 1, axis=0)) / (2 * dx)
    return -1j * np.einsum("ia,ia->i", spinor_a.conj(), db)


def test_helix_potentials_match_frozen_values():
    geo = helix_geometry()
    np.testing.assert_allclose(geo.a_plus, 0.19634954084936207, rtol=1e-13)
    np.testing.assert_allclose(geo.a_minus, -geo.a_plus, atol=1e-16)
    np.testing.assert_allclose(np.abs(geo.a_cross) ** 2, 0.038553142191755305, rtol=1e-13)
    np.testing.assert_allclose(geo.grav, 0.019276571095877652, rtol=1e-13)
    np.testing.assert_allclose(geo.grad_sq, 0.15421256876702122, rtol=1e-13)
    expected_force = np.array([0.0, 0.0, -0.39269908169872414])
    np.testing.assert_allclose(geo.force, np.tile(expected_force, (128, 1)), atol=1e-15)


def test_helix_potentials_against_finite_difference_spinors():
    # Independent route: differentiate the gauge spinors themselves on a fine
    # grid and compare the Berry connections with the closed-form arrays.
    grid = SpatialGrid(1024, L)
    geo = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    a_plus_fd = finite_difference_connection(geo.spinor_up, geo.spinor_up, grid.dx)
    a_cross_fd = finite_difference_connection(geo.spinor_up, geo.spinor_down, grid.dx)
    # central differences truncate at (q dx)^2 / 6 ~ 2.5e-5 relative
    np.testing.assert_allclose(a_plus_fd.real, geo.a_plus, rtol=1e-4)
    np.testing.assert_allclose(np.abs(a_plus_fd.imag), 0.0, atol=1e-12)
    np.testing.assert_allclose(a_cross_fd, geo.a_cross, rtol=1e-4)


def test_spinors_are_orthonormal_eigenvectors_of_n_sigma():
    geo = helix_geometry()
    up, down = geo.spinor_up, geo.spinor_down
    np.testing.assert_allclose(np.einsum("ia,ia->i", up.conj(), up).real, 1.0, atol=1e-14)
    np.testing.assert_allclose(np.einsum("ia,ia->i", down.conj(), down).real, 1.0, atol=1e-14)
    assert np.abs(np.einsum("ia,ia->i", up.conj(), down)).max() < 1e-14
    n_sigma = np.einsum("ia,ajk->ijk", geo.n, PAULI)
    np.testing.assert_allclose(np.einsum("iab,ib->ia", n_sigma, up), up, atol=1e-14)
    np.testing.assert_allclose(np.einsum("iab,ib->ia", n_sigma, down), -down, atol=1e-14)


def test_projectors_are_spinor_outer_products_and_complete():
    geo = helix_geometry()
    outer_up = np.einsum("ia,ib->iab", geo.spinor_up, geo.spinor_up.conj())
    outer_down = np.einsum("ia,ib->iab", geo.spinor_down, geo.spinor_down.conj())
    np.testing.assert_allclose(geo.proj_up, outer_up, atol=1e-14)
    np.testing.assert_allclose(geo.proj_down, outer_down, atol=1e-14)
    identity = np.broadcast_to(np.eye(2), geo.proj_up.shape)
    np.testing.assert_allclose(geo.proj_up + geo.proj_down, identity, atol=1e-14)
    np.testing.assert_allclose(
        np.einsum("iab,ibc->iac", geo.proj_up, geo.proj_up), geo.proj_up, atol=1e-14
    )


def test_domain_wall_geometry_matches_analytic_profile():
    grid = SpatialGrid(256, L)
    width, center = 3.0, L / 2
    geo = spin_geometry(AxisField.domain_wall(grid, center, width), mass=1.0)
    dtheta = np.pi / (2 * width) / np.cosh((grid.x - center) / width) ** 2
    # phi = 0 everywhere: no azimuthal connection, only the theta' mixing term
    np.testing.assert_allclose(geo.a_plus, 0.0, atol=1e-14)
    np.testing.assert_allclose(geo.a_cross, 0.5j * dtheta, atol=1e-12)
    np.testing.assert_allclose(geo.force[:, 1], -dtheta, atol=1e-12)
    np.testing.assert_allclose(geo.force[:, [0, 2]], 0.0, atol=1e-14)
    np.testing.assert_allclose(geo.grad_sq, dtheta**2, atol=1e-12)
    assert np.abs(np.einsum("ia,ia->i", geo.n, geo.dn)).max() < 1e-13


def test_constant_field_has_no_structure():
    grid = SpatialGrid(64, L)
    geo = spin_geometry(AxisField.constant(grid, [0, 0, 2.0]), mass=1.0)
    np.testing.assert_allclose(geo.n, np.tile([0.0, 0.0, 1.0], (64, 1)))
    for arr in (geo.a_plus, geo.a_minus, geo.a_cross, geo.force, geo.grav, geo.grad_sq):
        np.testing.assert_allclose(arr, 0.0, atol=1e-15)
    np.testing.assert_allclose(geo.proj_up, np.tile(np.diag([1.0, 0.0]), (64, 1, 1)), atol=1e-15)


def test_rigid_rotation_scalar_potential_and_time_derivative():
    grid = SpatialGrid(128, L)
    rate = 3.0
    field = AxisField.helix(grid, Q).rotating([0, 0, 1], rate)
    geo = spin_geometry(field, mass=1.0, t=0.7)
    # equatorial field rotating about z: phi_+ = rate/2, and the x-structure
    # is carried along rigidly so the static potentials are unchanged
    np.testing.assert_allclose(geo.phi_plus, rate / 2, rtol=1e-12)
    np.testing.assert_allclose(geo.phi_minus, -rate / 2, rtol=1e-12)
    np.testing.assert_allclose(geo.a_plus, Q / 2, rtol=1e-12)
    np.testing.assert_allclose(np.abs(geo.a_cross) ** 2, Q**2 / 4, rtol=1e-12)
    # n(t) by finite differences in t against the reported time derivative
    dt = 1e-6
    ndot_fd = (field.unit_vectors(0.7 + dt) - field.unit_vectors(0.7 - dt)) / (2 * dt)
    np.testing.assert_allclose(field.time_derivatives(0.7), ndot_fd, atol=1e-7)
    assert AxisField.helix(grid, Q).static
    assert not field.static


def test_gauge_phase_shifts_connections_consistently():
    grid = SpatialGrid(128, L)
    field = AxisField.helix(grid, Q)
    chi = 0.3 * np.sin(2 * np.pi * grid.x / L)
    plain = spin_geometry(field, mass=1.0)
    gauged = spin_geometry(field, mass=1.0, gauge_phase=chi)
    dchi = spectral_derivative(chi, grid)
    np.testing.assert_allclose(gauged.a_plus, plain.a_plus + dchi, atol=1e-12)
    np.testing.assert_allclose(gauged.a_minus, plain.a_minus - dchi, atol=1e-12)
    np.testing.assert_allclose(np.abs(gauged.a_cross), np.abs(plain.a_cross), atol=1e-13)
    np.testing.assert_allclose(gauged.grav, plain.grav, atol=1e-13)
    np.testing.assert_allclose(gauged.proj_up, plain.proj_up, atol=1e-14)
    phase = np.exp(1j * chi)
    np.testing.assert_allclose(gauged.spinor_up, phase[:, None] * plain.spinor_up, atol=1e-14)
    np.testing.assert_allclose(gauged.spinor_down, plain.spinor_down / phase[:, None], atol=1e-14)


def test_sampled_field_reproduces_analytic_helix():
    grid = SpatialGrid(128, L)
    reference = spin_geometry(AxisField.helix(grid, Q), mass=1.0)
    table = np.column_stack([grid.x, 1.0000003 * reference.n])  # slightly off unit
    geo = spin_geometry(AxisField.sampled(grid, table), mass=1.0)
    np.testing.assert_allclose(geo.n, reference.n, atol=1e-12)
    np.testing.assert_allclose(geo.a_plus, reference.a_plus, atol=1e-9)
    np.testing.assert_allclose(geo.a_cross, reference.a_cross, atol=1e-9)
    np.testing.assert_allclose(geo.force, reference.force, atol=1e-9)


def test_sampled_field_from_file(tmp_path):
    grid = SpatialGrid(64, L)
    n = spin_geometry(AxisField.helix(grid, Q), mass=1.0).n
    path = tmp_path / "axis.dat"
    np.savetxt(path, np.column_stack([grid.x, n]))
    geo = spin_geometry(AxisField.sampled(grid, path), mass=1.0)
    np.testing.assert_allclose(geo.a_plus, Q / 2, atol=1e-8)


def test_helix_rejects_aperiodic_wavenumber():
    grid = SpatialGrid(64, L)
    with pytest.raises(ConfigError, match="integer multiple"):
        AxisField.helix(grid, 1.07 * Q)


def test_domain_wall_rejects_bad_parameters():
    grid = SpatialGrid(64, L)
    with pytest.raises(ConfigError, match="width"):
        AxisField.domain_wall(grid, L / 2, 0.0)
    with pytest.raises(ConfigError, match="center"):
        AxisField.domain_wall(grid, -1.0, 2.0)


def test_saturated_wall_hits_gauge_singularity():
    # a narrow wall saturates to -z in its tail, where the spinor gauge
    # convention breaks down; construction of the geometry must refuse
    grid = SpatialGrid(256, L)
    with pytest.raises(GaugeSingularityError, match="singularity"):
        spin_geometry(AxisField.domain_wall(grid, L / 2, 1.5), mass=1.0)


def test_sampled_field_validation_errors():
    grid = SpatialGrid(64, L)
    n = np.tile([1.0, 0.0, 0.0], (64, 1))
    with pytest.raises(ConfigError, match="4 columns"):
        AxisField.sampled(grid, n)
    with pytest.raises(ConfigError, match="rows"):
        AxisField.sampled(grid, np.column_stack([grid.x, n])[:32])
    with pytest.raises(ConfigError, match="positions"):
        AxisField.sampled(grid, np.column_stack([grid.x + 0.5, n]))
    degenerate = n.copy()
    degenerate[7] = 0.0
    with pytest.raises(ConfigError, match="row 7"):
        AxisField.sampled(grid, np.column_stack([grid.x, degenerate]))


def test_constructor_rejects_degenerate_inputs():
    grid = SpatialGrid(64, L)
    with pytest.raises(ConfigError, match="nonzero"):
        AxisField.constant(grid, [0, 0, 0])
    with pytest.raises(ConfigError, match="rotation axis"):
        AxisField.helix(grid, Q).rotating([0, 0, 0], 1.0)
    with pytest.raises(ConfigError, match="mass"):
        spin_geometry(AxisField.helix(grid, Q), mass=0.0)
    with pytest.raises(ConfigError, match="gauge phase"):
        spin_geometry(AxisField.helix(grid, Q), mass=1.0, gauge_phase=np.zeros(3))
