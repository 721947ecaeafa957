"""Periodic spatial grid shared by every solver."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform periodic grid of n points on [0, length)."""

    n: int
    length: float
    x: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n < 8:
            raise ConfigError(f"grid points n = {self.n}: need n >= 8")
        if self.n % 2 != 0:
            raise ConfigError(f"grid points n = {self.n}: need an even count for the half-step momentum lattice")
        if not self.length > 0:
            raise ConfigError(f"grid length = {self.length}: need length > 0")
        dx = self.length / self.n
        object.__setattr__(self, "x", dx * np.arange(self.n))
        object.__setattr__(self, "wavenumbers", 2 * np.pi * np.fft.fftfreq(self.n, d=dx))

    @property
    def dx(self) -> float:
        return self.length / self.n

    def wrapped_displacement(self, x0: float) -> np.ndarray:
        """Signed displacement x - x0 folded into [-length/2, length/2)."""
        return (self.x - x0 + self.length / 2) % self.length - self.length / 2
