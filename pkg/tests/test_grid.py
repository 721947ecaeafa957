import numpy as np
import pytest

from spindrift import ConfigError, SpatialGrid


def test_grid_layout_and_wavenumbers():
    grid = SpatialGrid(128, 32.0)
    assert grid.dx == 0.25
    np.testing.assert_allclose(grid.x[0], 0.0)
    np.testing.assert_allclose(grid.x[-1], 32.0 - 0.25)
    # wavenumbers must invert the spectral derivative of a pure mode exactly
    k0 = 2 * np.pi / 32.0
    mode = np.exp(1j * 3 * k0 * grid.x)
    deriv = np.fft.ifft(1j * grid.wavenumbers * np.fft.fft(mode))
    np.testing.assert_allclose(deriv, 3j * k0 * mode, atol=1e-12)


def test_wrapped_displacement_is_minimal_image():
    grid = SpatialGrid(64, 32.0)
    d = grid.wrapped_displacement(30.0)
    assert d.max() <= 16.0
    assert d.min() >= -16.0
    np.testing.assert_allclose(d[np.searchsorted(grid.x, 30.0)], 0.0, atol=1e-12)
    # x = 1 sits 3 units ahead of x0 = 30 across the wrap, not 29 behind
    np.testing.assert_allclose(d[2], 3.0, atol=1e-12)


def test_grid_validation():
    with pytest.raises(ConfigError):
        SpatialGrid(6, 32.0)
    with pytest.raises(ConfigError):
        SpatialGrid(65, 32.0)
    with pytest.raises(ConfigError):
        SpatialGrid(64, -1.0)
