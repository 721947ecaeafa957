"""Measurement-axis fields n(x) and the spin geometry derived from them.

The pointer basis at each point is the pair of spinors aligned with a unit
vector field n(x), optionally rotating rigidly in time.  Everything downstream
(projector channel, force field, sector potentials) is derived here from one
fixed spinor gauge:

    |+n> = (cos(theta/2), e^{i phi} sin(theta/2))
    |-n> = (-e^{-i phi} sin(theta/2), cos(theta/2))

with theta, phi the polar angles of n.  The convention is singular where
n = -z; fields that come within 1e-6 of the south pole are rejected at
geometry construction rather than silently mis-gauged.

Derivatives of analytic families are evaluated analytically (for the periodic
families this coincides with spectral differentiation at round-off); sampled
fields are differentiated spectrally on the periodic grid.  Closed forms used
for the sector potentials:

    A_+  = phi' sin^2(theta/2)                      A_- = -A_+
    A_+- = e^{-i phi} (phi' sin(theta/2)cos(theta/2) + i theta'/2)

and for rigid rotation the scalar potential is phi_+ = phid sin^2(theta/2)
with phid the angular rate of the azimuth, phi_- = -phi_+.

The domain_wall family connects +z to -z, so it is not periodic across the
wrap; the projector channel and transport coefficients are pointwise and
remain meaningful, but coherences across the boundary see mismatched bases.
Spectral-accuracy identities are only claimed for the periodic families.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, GaugeSingularityError
from .grid import SpatialGrid

PAULI = np.array(
    [
        [[0, 1], [1, 0]],
        [[0, -1j], [1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=np.complex128,
)

FIELD_KINDS = ("constant", "helix", "domain_wall", "sampled")

_POLE_TOLERANCE = 1e-6
_SIN_GUARD = 1e-12


def _rotation_matrix(axis: np.ndarray, angle: float) -> np.ndarray:
    """Rodrigues rotation matrix about a unit axis."""
    w = axis
    K = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def bloch_spinor(bloch) -> np.ndarray:
    """Spinor whose Bloch vector is the given unit 3-vector (+1 eigenvector
    of b . sigma)."""
    b = np.asarray(bloch, dtype=float)
    if b.shape != (3,) or abs(np.linalg.norm(b) - 1.0) > 1e-9:
        raise ConfigError(f"bloch vector {bloch} must be a unit 3-vector")
    _, vecs = np.linalg.eigh(np.einsum("a,ajk->jk", b, PAULI))
    return vecs[:, 1]


def spectral_derivative(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """d/dx of periodic samples along the first axis, by Fourier transform."""
    k = grid.wavenumbers
    shape = (-1,) + (1,) * (values.ndim - 1)
    out = np.fft.ifft(1j * k.reshape(shape) * np.fft.fft(values, axis=0), axis=0)
    return out.real if np.isrealobj(values) else out


@dataclass(eq=False)
class AxisField:
    """A unit-vector measurement-axis field on a periodic grid.

    Instances are built through the classmethod constructors, which validate
    the family parameters.  `rotation_axis`/`rotation_rate` superpose a rigid
    rotation n(x, t) = R(axis, rate*t) n(x, 0) on any family.
    """

    grid: SpatialGrid
    kind: str
    base_n: np.ndarray = field(repr=False)
    base_dn: np.ndarray = field(repr=False)
    rotation_axis: np.ndarray | None = None
    rotation_rate: float = 0.0
    params: dict = field(default_factory=dict)

    # -- constructors ---------------------------------------------------

    @classmethod
    def constant(cls, grid: SpatialGrid, direction) -> "AxisField":
        d = np.asarray(direction, dtype=float)
        norm = np.linalg.norm(d)
        if norm < 1e-12:
            raise ConfigError("constant field direction must be a nonzero vector")
        d = d / norm
        n = np.tile(d, (grid.n, 1))
        return cls(grid, "constant", n, np.zeros_like(n), params={"direction": d})

    @classmethod
    def helix(cls, grid: SpatialGrid, q: float) -> "AxisField":
        """In-plane helix n = (cos qx, sin qx, 0); q must close periodically."""
        turns = q * grid.length / (2 * np.pi)
        if abs(turns - round(turns)) > 1e-9:
            admissible = 2 * np.pi * round(turns) / grid.length
            raise ConfigError(
                f"helix wavenumber q = {q} is not periodic on length {grid.length}: "
                f"q must be an integer multiple of 2*pi/L = {2 * np.pi / grid.length:.12g} "
                f"(nearest admissible q = {admissible:.12g})"
            )
        x = grid.x
        n = np.stack([np.cos(q * x), np.sin(q * x), np.zeros_like(x)], axis=1)
        dn = q * np.stack([-np.sin(q * x), np.cos(q * x), np.zeros_like(x)], axis=1)
        return cls(grid, "helix", n, dn, params={"q": float(q)})

    @classmethod
    def domain_wall(cls, grid: SpatialGrid, center: float, width: float) -> "AxisField":
        """Wall in the xz-plane: theta(x) = pi/2 (1 + tanh((x - center)/width)).

        The field runs from +z toward -z, so it cannot close periodically;
        see the module docstring for the wrap caveat.  Walls whose tails
        saturate within 1e-6 of the south pole are rejected downstream by the
        gauge-singularity check.
        """
        if width <= 0:
            raise ConfigError(f"domain wall width = {width}: need width > 0")
        if not 0 < center < grid.length:
            raise ConfigError(f"domain wall center = {center}: must lie inside (0, {grid.length})")
        u = (grid.x - center) / width
        theta = np.pi / 2 * (1 + np.tanh(u))
        dtheta = np.pi / (2 * width) / np.cosh(u) ** 2
        n = np.stack([np.sin(theta), np.zeros_like(theta), np.cos(theta)], axis=1)
        dn = dtheta[:, None] * np.stack([np.cos(theta), np.zeros_like(theta), -np.sin(theta)], axis=1)
        return cls(grid, "domain_wall", n, dn, params={"center": float(center), "width": float(width)})

    @classmethod
    def sampled(cls, grid: SpatialGrid, table) -> "AxisField":
        """Field from a 4-column table (x, n1, n2, n3); a path or an array.

        Sample positions must match the grid; vectors are renormalized and
        near-zero rows rejected.  Derivatives are spectral, so the sampled
        components should be smooth and periodic on the domain.
        """
        if isinstance(table, (str, Path)):
            try:
                data = np.loadtxt(table)
            except (OSError, ValueError) as exc:
                raise ConfigError(f"cannot read sampled field table {table!r}: {exc}") from exc
        else:
            data = np.asarray(table, dtype=float)
        if data.ndim != 2 or data.shape[1] != 4:
            raise ConfigError(f"sampled field table must have 4 columns (x, n1, n2, n3), got shape {data.shape}")
        if data.shape[0] != grid.n:
            raise ConfigError(f"sampled field table has {data.shape[0]} rows, grid has {grid.n} points")
        if np.abs(data[:, 0] - grid.x).max() > 1e-8:
            raise ConfigError("sampled field positions do not match the grid (tolerance 1e-8)")
        n = data[:, 1:4].copy()
        norms = np.linalg.norm(n, axis=1)
        bad = np.nonzero(norms < 1e-6)[0]
        if bad.size:
            raise ConfigError(f"sampled field row {bad[0]} has |n| = {norms[bad[0]]:.3g} < 1e-6; cannot renormalize")
        n /= norms[:, None]
        dn = spectral_derivative(n, grid)
        return cls(grid, "sampled", n, dn)

    # -- time dependence ------------------------------------------------

    def rotating(self, axis, rate: float) -> "AxisField":
        """Copy of this field rotating rigidly about `axis` at angular `rate`."""
        w = np.asarray(axis, dtype=float)
        norm = np.linalg.norm(w)
        if norm < 1e-12:
            raise ConfigError("rotation axis must be a nonzero vector")
        return AxisField(
            self.grid, self.kind, self.base_n, self.base_dn,
            rotation_axis=w / norm, rotation_rate=float(rate), params=dict(self.params),
        )

    @property
    def static(self) -> bool:
        return self.rotation_axis is None or self.rotation_rate == 0.0

    def unit_vectors(self, t: float = 0.0) -> np.ndarray:
        if self.static or t == 0.0:
            return self.base_n
        R = _rotation_matrix(self.rotation_axis, self.rotation_rate * t)
        return self.base_n @ R.T

    def x_derivatives(self, t: float = 0.0) -> np.ndarray:
        if self.static or t == 0.0:
            return self.base_dn
        R = _rotation_matrix(self.rotation_axis, self.rotation_rate * t)
        return self.base_dn @ R.T

    def time_derivatives(self, t: float = 0.0) -> np.ndarray:
        if self.static:
            return np.zeros_like(self.base_n)
        return self.rotation_rate * np.cross(self.rotation_axis, self.unit_vectors(t))


@dataclass(frozen=True, eq=False)
class SpinGeometry:
    """Everything derived from n(x) at one instant: spinors, projectors,
    force field, sector vector/scalar potentials.  Construction is pure."""

    grid: SpatialGrid
    mass: float
    time: float
    n: np.ndarray
    dn: np.ndarray
    grad_sq: np.ndarray          # (dx n) . (dx n)
    force: np.ndarray            # F = (dx n) x n
    spinor_up: np.ndarray        # |+n>, shape (N, 2)
    spinor_down: np.ndarray      # |-n>
    proj_up: np.ndarray          # (N, 2, 2)
    proj_down: np.ndarray
    a_plus: np.ndarray           # -i <+n| dx |+n>
    a_minus: np.ndarray
    a_cross: np.ndarray          # -i <+n| dx |-n>, complex
    grav: np.ndarray             # |A_+-|^2 / (2m), sector independent
    phi_plus: np.ndarray         # -i <+n| dt |+n>
    phi_minus: np.ndarray

    def sector_potential(self, sector: int) -> np.ndarray:
        return self.a_plus if sector > 0 else self.a_minus

    def sector_scalar(self, sector: int) -> np.ndarray:
        return self.phi_plus if sector > 0 else self.phi_minus


def _angles_and_rates(n: np.ndarray, dn: np.ndarray):
    """Polar angles of n and their x-rates via the chain rule.

    The azimuthal rate is guarded at the poles: where sin(theta) ~ 0 the
    azimuth is undefined and phi' is set to 0, which gives the correct
    limits for every quantity it enters (they all carry sin(theta) factors).
    """
    sin_theta_sq = n[:, 0] ** 2 + n[:, 1] ** 2
    theta = np.arctan2(np.sqrt(sin_theta_sq), n[:, 2])
    phi = np.arctan2(n[:, 1], n[:, 0])
    safe = sin_theta_sq > _SIN_GUARD
    denom = np.where(safe, sin_theta_sq, 1.0)
    dphi = np.where(safe, (n[:, 0] * dn[:, 1] - n[:, 1] * dn[:, 0]) / denom, 0.0)
    sin_theta = np.sqrt(np.where(safe, sin_theta_sq, 1.0))
    dtheta = np.where(safe, -dn[:, 2] / sin_theta, np.linalg.norm(dn, axis=1))
    return theta, phi, dtheta, dphi


def spin_geometry(
    axis_field: AxisField,
    mass: float,
    t: float = 0.0,
    gauge_phase: np.ndarray | None = None,
) -> SpinGeometry:
    """Build the derived geometry for `axis_field` at time `t`.

    `gauge_phase` is an optional smooth periodic array chi(x); it re-gauges
    the sector spinors as |+n> -> e^{i chi}|+n>, |-n> -> e^{-i chi}|-n>,
    shifting A_+/- by +-chi' and rephasing A_+- without changing its modulus.
    """
    if mass <= 0:
        raise ConfigError(f"mass = {mass}: need mass > 0")
    grid = axis_field.grid
    n = axis_field.unit_vectors(t)
    dn = axis_field.x_derivatives(t)

    norms = np.linalg.norm(n, axis=1)
    if np.abs(norms - 1).max() > 1e-12:
        raise ConfigError("axis field is not unit length to 1e-12")
    if np.abs(np.einsum("ia,ia->i", n, dn)).max() > 1e-8:
        raise ConfigError("axis field violates n . dx n = 0 beyond 1e-8")
    south = np.linalg.norm(n + np.array([0.0, 0.0, 1.0]), axis=1)
    if south.min() < _POLE_TOLERANCE:
        i = int(south.argmin())
        raise GaugeSingularityError(
            f"axis field at grid point {i} (x = {grid.x[i]:.6g}) lies within {_POLE_TOLERANCE} "
            "of the -z spinor-gauge singularity; rotate the field family away from the south pole"
        )

    theta, phi, dtheta, dphi = _angles_and_rates(n, dn)
    half = theta / 2
    c, s = np.cos(half), np.sin(half)
    phase = np.exp(1j * phi)

    spinor_up = np.stack([c.astype(complex), phase * s], axis=1)
    spinor_down = np.stack([-np.conj(phase) * s, c.astype(complex)], axis=1)

    a_plus = dphi * s**2
    a_minus = -a_plus
    a_cross = np.conj(phase) * (dphi * s * c + 0.5j * dtheta)

    if gauge_phase is not None:
        chi = np.asarray(gauge_phase, dtype=float)
        if chi.shape != (grid.n,):
            raise ConfigError(f"gauge phase must have shape ({grid.n},)")
        dchi = spectral_derivative(chi, grid)
        spinor_up = np.exp(1j * chi)[:, None] * spinor_up
        spinor_down = np.exp(-1j * chi)[:, None] * spinor_down
        a_plus = a_plus + dchi
        a_minus = a_minus - dchi
        a_cross = np.exp(-2j * chi) * a_cross

    n_sigma = np.einsum("ia,ajk->ijk", n, PAULI)
    eye = np.eye(2, dtype=np.complex128)
    proj_up = (eye[None, :, :] + n_sigma) / 2
    proj_down = (eye[None, :, :] - n_sigma) / 2

    ndot = axis_field.time_derivatives(t)
    if axis_field.static:
        phi_plus = np.zeros(grid.n)
    else:
        _, _, _, phid = _angles_and_rates(n, ndot)
        phi_plus = phid * s**2

    return SpinGeometry(
        grid=grid,
        mass=float(mass),
        time=float(t),
        n=n,
        dn=dn,
        grad_sq=np.einsum("ia,ia->i", dn, dn),
        force=np.cross(dn, n),
        spinor_up=spinor_up,
        spinor_down=spinor_down,
        proj_up=proj_up,
        proj_down=proj_down,
        a_plus=a_plus,
        a_minus=a_minus,
        a_cross=a_cross,
        grav=np.abs(a_cross) ** 2 / (2 * mass),
        phi_plus=phi_plus,
        phi_minus=-phi_plus,
    )
