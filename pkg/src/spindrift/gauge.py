"""Pinned-spin sector tools: projections onto the local pointer basis,
coherence norms, the effective in-sector propagator, and the large-rate
convergence study.

At large measurement rate the spin is pinned to the axis and the surviving
in-sector motion is generated by

    H_s = (p + A_s)^2 / 2m + |A_+-|^2 / 2m + phi_s,    s = +/-,

with A_s the sector connection and phi_s the scalar from a rotating axis.
The ring average of A_s is a holonomy and cannot be removed by a periodic
gauge change, so the kinetic propagator splits off the periodic part,
Lambda(x) = -int_0^x (A_s - mean A_s) dx', and applies the constant
remainder in the plane-wave basis:

    e^{-i dt (p + A_s)^2 / 2m}
        = e^{i Lambda} . IFFT . e^{-i dt (k + mean A_s)^2 / 2m} . FFT . e^{-i Lambda},

exact for the quadratic generator.  Canonical momenta are gauge dependent
(they shift under a phase re-gauging of the basis); kinetic momenta
<p + A_s> and densities are the invariant observables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import AxisField, SpinGeometry, spin_geometry
from .grid import SpatialGrid
from .lindblad import DensityMatrix, LindbladSolver, gaussian_envelope


def _periodic_antiderivative(values: np.ndarray, grid: SpatialGrid) -> np.ndarray:
    """Antiderivative of a zero-mean periodic sample, itself zero mean."""
    coef = np.fft.fft(values)
    out = np.zeros_like(coef)
    out[1:] = coef[1:] / (1j * grid.wavenumbers[1:])
    return np.fft.ifft(out).real


def sector_kernels(state: DensityMatrix, geometry: SpinGeometry):
    """Scalar kernels (up, down, cross) of the state in the pointer basis,
    cross = <+n(x)| rho(x, y) |-n(y)>."""
    u, d = geometry.spinor_up, geometry.spinor_down
    up = np.einsum("ia,ijab,jb->ij", u.conj(), state.data, u)
    down = np.einsum("ia,ijab,jb->ij", d.conj(), state.data, d)
    cross = np.einsum("ia,ijab,jb->ij", u.conj(), state.data, d)
    return up, down, cross


def sector_weights(state: DensityMatrix, geometry: SpinGeometry) -> tuple[float, float]:
    up, down, _ = sector_kernels(state, geometry)
    dx = geometry.grid.dx
    return float(np.trace(up).real * dx), float(np.trace(down).real * dx)


def coherence_norm(state: DensityMatrix, geometry: SpinGeometry) -> float:
    """Hilbert-Schmidt norm of the inter-sector block (both off-diagonal
    blocks counted, hence the factor 2 under the root)."""
    _, _, cross = sector_kernels(state, geometry)
    return float(np.sqrt(2 * np.sum(np.abs(cross) ** 2)) * geometry.grid.dx)


def sector_amplitude(psi: np.ndarray, geometry: SpinGeometry, sector: int) -> np.ndarray:
    """Project a two-component wavefunction onto one pointer branch."""
    spinor = geometry.spinor_up if sector > 0 else geometry.spinor_down
    return np.einsum("ia,ia->i", spinor.conj(), np.asarray(psi))


def kernel_momentum(kernel: np.ndarray, grid: SpatialGrid, order: int = 1) -> float:
    """Unnormalized momentum moment sum_k k^order occ(k) of a scalar kernel
    via its wrapped diagonals (plane-wave occupations)."""
    n = grid.n
    i = np.arange(n)
    diag_sums = kernel[i[:, None], (i[:, None] - i[None, :]) % n].sum(axis=0)
    occ = np.fft.fft(diag_sums).real * grid.dx**2 / grid.length
    return float(np.sum(grid.wavenumbers**order * occ))


def kernel_density(kernel: np.ndarray) -> np.ndarray:
    return np.diagonal(kernel).real.copy()


class EffectiveSectorSolver:
    """Strang propagator for one pinned sector: scalar half kicks around the
    exact gauged kinetic step.  The axis field must be static (a rotating
    axis drags the pointer basis and has no fixed in-sector generator)."""

    def __init__(self, axis_field: AxisField, sector: int, mass: float, dt: float,
                 gauge_phase=None):
        if sector not in (1, -1):
            raise ConfigError(f"sector must be +1 or -1, got {sector}")
        if not axis_field.static:
            raise ConfigError("effective sector propagator requires a static axis field")
        if dt <= 0:
            raise ConfigError(f"time step dt = {dt}: need dt > 0")
        self.grid = axis_field.grid
        self.sector = sector
        self.mass = float(mass)
        self.dt = float(dt)
        self.geometry = spin_geometry(axis_field, mass, 0.0, gauge_phase=gauge_phase)
        a = self.geometry.sector_potential(sector)
        self.vector_potential = a
        self.scalar = self.geometry.grav + self.geometry.sector_scalar(sector)
        self.holonomy = float(a.mean())
        lam = -_periodic_antiderivative(a - self.holonomy, self.grid)
        self._strip_gauge = np.exp(-1j * lam)
        self._dress_gauge = np.exp(1j * lam)
        k = self.grid.wavenumbers
        self._kin_phase = np.exp(-1j * (k + self.holonomy) ** 2 * self.dt / (2 * mass))
        self._half_scalar = np.exp(-1j * self.scalar * self.dt / 2)

    def initial_state(self, sigma: float, x0: float, p0: float) -> np.ndarray:
        return gaussian_envelope(self.grid, sigma, x0, p0)

    def step(self, psi: np.ndarray) -> np.ndarray:
        phi = self._strip_gauge * (self._half_scalar * psi)
        phi = np.fft.ifft(self._kin_phase * np.fft.fft(phi))
        return self._half_scalar * (self._dress_gauge * phi)

    def run(self, psi: np.ndarray, n_steps: int, callback=None) -> np.ndarray:
        out = np.array(psi, dtype=complex)
        for j in range(n_steps):
            out = self.step(out)
            if callback is not None:
                callback(j + 1, (j + 1) * self.dt, out)
        return out

    def canonical_momentum(self, psi: np.ndarray) -> float:
        spec = np.abs(np.fft.fft(psi)) ** 2
        return float(np.sum(self.grid.wavenumbers * spec) / np.sum(spec))

    def kinetic_momentum(self, psi: np.ndarray) -> float:
        dens = np.abs(psi) ** 2
        norm = dens.sum() * self.grid.dx
        return self.canonical_momentum(psi) + float(
            np.sum(self.vector_potential * dens) * self.grid.dx / norm
        )


@dataclass(eq=False)
class GaugeRecord:
    """One measurement rate of the convergence study."""

    nu: float
    times: np.ndarray
    p_full: np.ndarray           # canonical, up-sector block of the full run
    p_full_kinetic: np.ndarray
    p_eff: np.ndarray            # canonical, effective propagator
    p_eff_kinetic: np.ndarray
    coherence: np.ndarray
    eff_density_final: np.ndarray
    delta: float                 # max_t |p_full - p_eff|
    floor: float                 # late-time mean of the coherence norm


@dataclass(eq=False)
class GaugeStudy:
    nu_values: np.ndarray
    records: list
    deltas: np.ndarray
    floors: np.ndarray

    @property
    def floor_exponent(self) -> float:
        """Least-squares slope of log(floor) against log(nu)."""
        a = np.stack([np.log(self.nu_values), np.ones(len(self.nu_values))], axis=1)
        slope, _ = np.linalg.lstsq(a, np.log(self.floors), rcond=None)[0]
        return float(slope)


def convergence_study(
    axis_field: AxisField,
    mass: float,
    sigma: float,
    x0: float,
    p0: float,
    T: float,
    nu_values,
    sample_dt: float = 0.05,
    gauge_phase=None,
) -> GaugeStudy:
    """Compare the full dynamics, started on the up branch, with the pinned
    effective propagator across measurement rates.

    The step is min(0.1/nu, 2e-3) snapped so that sample_dt is an integer
    number of steps.  delta(nu) is the largest gap between the canonical
    up-sector momentum of the full run and the effective one; the coherence
    floor is the mean inter-sector norm over the second half of the samples.
    """
    n_samples = int(round(T / sample_dt))
    if abs(n_samples * sample_dt - T) > 1e-9 * max(T, 1.0):
        raise ConfigError(f"horizon T = {T} must be an integer multiple of sample_dt = {sample_dt}")
    grid = axis_field.grid
    records = []
    for nu in nu_values:
        target = min(0.1 / nu, 2e-3)
        per_sample = max(1, math.ceil(sample_dt / target - 1e-12))
        dt = sample_dt / per_sample
        full = LindbladSolver(axis_field, nu, mass, dt, gauge_phase=gauge_phase)
        # the prepared state is fixed in the plain convention; a re-gauged run
        # sees the same physical state through a re-phased pointer basis
        plain = spin_geometry(axis_field, mass, 0.0)
        state = DensityMatrix.sector(plain, sigma, x0, p0, 1)
        geo = full.geometry(0.0)
        eff = EffectiveSectorSolver(axis_field, 1, mass, dt, gauge_phase=gauge_phase)
        psi0 = gaussian_envelope(grid, sigma, x0, p0)[:, None] * plain.spinor_up
        phi = sector_amplitude(psi0, geo, 1)
        times = np.empty(n_samples)
        cols = {name: np.empty(n_samples) for name in
                ("p_full", "p_full_kinetic", "p_eff", "p_eff_kinetic", "coherence")}
        a = geo.sector_potential(1)
        t = 0.0
        for s in range(n_samples):
            state = full.run(state, per_sample, t0=t)
            phi = eff.run(phi, per_sample)
            t += sample_dt
            times[s] = t
            up, _, cross = sector_kernels(state, geo)
            w = float(np.trace(up).real * grid.dx)
            dens_up = kernel_density(up)
            p_can = kernel_momentum(up, grid) / w
            cols["p_full"][s] = p_can
            cols["p_full_kinetic"][s] = p_can + float(np.sum(a * dens_up) * grid.dx / w)
            cols["p_eff"][s] = eff.canonical_momentum(phi)
            cols["p_eff_kinetic"][s] = eff.kinetic_momentum(phi)
            cols["coherence"][s] = float(np.sqrt(2 * np.sum(np.abs(cross) ** 2)) * grid.dx)
        delta = float(np.max(np.abs(cols["p_full"] - cols["p_eff"])))
        floor = float(cols["coherence"][n_samples // 2:].mean())
        dens_phi = np.abs(phi) ** 2
        dens_phi = dens_phi / (dens_phi.sum() * grid.dx)
        records.append(GaugeRecord(
            nu=float(nu), times=times, p_full=cols["p_full"],
            p_full_kinetic=cols["p_full_kinetic"], p_eff=cols["p_eff"],
            p_eff_kinetic=cols["p_eff_kinetic"], coherence=cols["coherence"],
            eff_density_final=dens_phi, delta=delta, floor=floor,
        ))
    return GaugeStudy(
        nu_values=np.asarray([float(nu) for nu in nu_values]),
        records=records,
        deltas=np.asarray([r.delta for r in records]),
        floors=np.asarray([r.floor for r in records]),
    )
