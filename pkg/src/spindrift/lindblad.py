"""Full density-matrix evolution under free motion plus unselective spin
measurement along a position-dependent axis field.

The state is the kernel rho(x1|x2), a complex array of shape (N, N, 2, 2)
with the two trailing axes acting on the spin.  Dynamics (hbar = 1):

    d rho/dt = -i [p^2/2m, rho] + nu (Phi(rho) - rho)

where the channel projects both sides onto the local pointer basis,

    Phi(rho)(x1|x2) = sum_s P_s(x1) rho(x1|x2) P_s(x2),    P_s = (1 + s n.sigma)/2.

Phi is idempotent, so the measurement part integrates exactly over any step:

    rho -> e^{-nu dt} rho + (1 - e^{-nu dt}) Phi(rho).

The propagator alternates this exact channel with spectral kinetic steps in
Strang order, K(dt/2) C(dt) K(dt/2); for static fields the only time-step
error is the kinetic/measurement commutator, O(dt^2) per step.

In Pauli components rho = (rho_0 + vec . sigma)/2 the channel generator
couples the coherence between two points x1, x2 (axes n1, n2) as

    d rho_0 = -nu/4 |n1 - n2|^2 rho_0 - i nu/2 (n1 x n2) . vec
    d vec   =  nu/2 [n1 (vec . n2) + (n1 . vec) n2] - nu/4 |n1 + n2|^2 vec
              + i nu/2 (n1 x n2) rho_0

which `pauli_component_rates` implements as an independent cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import AxisField, SpinGeometry, spin_geometry
from .grid import SpatialGrid


def gaussian_envelope(grid: SpatialGrid, sigma: float, x0: float, p0: float) -> np.ndarray:
    """Normalized wave packet exp(-(x-x0)^2/(4 sigma^2) + i p0 x).

    sigma is the position standard deviation; the envelope uses the minimal
    image displacement so that x0 may sit anywhere on the ring.
    """
    if sigma <= 0:
        raise ConfigError(f"packet width sigma = {sigma}: need sigma > 0")
    d = grid.wrapped_displacement(x0)
    psi = np.exp(-(d**2) / (4 * sigma**2)) * np.exp(1j * p0 * grid.x)
    norm = np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return psi / norm


def pauli_components(data: np.ndarray) -> np.ndarray:
    """Stack (rho_0, rho_x, rho_y, rho_z) of a (..., 2, 2) spin kernel."""
    return np.stack(
        [
            data[..., 0, 0] + data[..., 1, 1],
            data[..., 0, 1] + data[..., 1, 0],
            1j * (data[..., 0, 1] - data[..., 1, 0]),
            data[..., 0, 0] - data[..., 1, 1],
        ]
    )


def from_pauli_components(comp: np.ndarray) -> np.ndarray:
    """Inverse of `pauli_components`; comp has shape (4, ...)."""
    c0, cx, cy, cz = comp
    out = np.empty(c0.shape + (2, 2), dtype=np.complex128)
    out[..., 0, 0] = (c0 + cz) / 2
    out[..., 1, 1] = (c0 - cz) / 2
    out[..., 0, 1] = (cx - 1j * cy) / 2
    out[..., 1, 0] = (cx + 1j * cy) / 2
    return out


def pauli_component_rates(nu: float, n1, n2, rho0, vec):
    """Exact channel-generator rates for the coherence between two points.

    n1, n2 are the measurement axes at the two points ((..., 3) arrays), rho0
    and vec the Pauli components of the 2x2 coherence block.  Returns
    (d rho0/dt, d vec/dt).
    """
    n1 = np.asarray(n1, dtype=float)
    n2 = np.asarray(n2, dtype=float)
    cross = np.cross(n1, n2)
    d_minus = np.einsum("...a,...a->...", n1 - n2, n1 - n2)
    d_plus = np.einsum("...a,...a->...", n1 + n2, n1 + n2)
    drho0 = -nu / 4 * d_minus * rho0 - 0.5j * nu * np.einsum("...a,...a->...", cross, vec)
    dvec = (
        nu / 2 * (n1 * np.einsum("...a,...a->...", vec, n2)[..., None]
                  + np.einsum("...a,...a->...", n1, vec)[..., None] * n2)
        - nu / 4 * d_plus[..., None] * vec
        + 0.5j * nu * cross * np.asarray(rho0)[..., None]
    )
    return drho0, dvec


def pauli_rhs(geometry: SpinGeometry, comp: np.ndarray, nu: float) -> np.ndarray:
    """Measurement part of the equations of motion in Pauli components.

    comp is the (4, N, N) stack from `pauli_components`; the rates couple the
    coherence at (x1, x2) through the axes n(x1), n(x2) as spelled out in the
    module docstring.  The kinetic commutator is not included.
    """
    n1 = geometry.n[:, None, :]
    n2 = geometry.n[None, :, :]
    vec = np.moveaxis(comp[1:4], 0, -1)
    drho0, dvec = pauli_component_rates(nu, n1, n2, comp[0], vec)
    return np.concatenate([drho0[None], np.moveaxis(dvec, -1, 0)])


@dataclass(eq=False)
class ObservableRecord:
    """Scalar and spatial diagnostics of one state at one time."""

    time: float
    trace: float
    purity: float
    mean_x: float
    mean_p: float
    mean_p_sq: float
    density: np.ndarray        # rho_0(x|x), integrates to trace
    spin_density: np.ndarray   # (N, 3) Bloch vector density
    spin_total: np.ndarray     # integral of spin_density, shape (3,)
    min_eigenvalue: float | None = None

    SCALAR_FIELDS = ("trace", "purity", "mean_x", "mean_p", "mean_p_sq",
                     "spin_x", "spin_y", "spin_z")

    def scalar_values(self) -> tuple[float, ...]:
        return (self.trace, self.purity, self.mean_x, self.mean_p, self.mean_p_sq,
                float(self.spin_total[0]), float(self.spin_total[1]), float(self.spin_total[2]))


def observables(state: "DensityMatrix", time: float = 0.0, spectrum: bool = False) -> ObservableRecord:
    """Standard diagnostic bundle; `spectrum=True` adds the smallest
    eigenvalue of the full operator (a positivity check, O(N^3))."""
    spin = state.spin_density()
    return ObservableRecord(
        time=float(time),
        trace=state.trace(),
        purity=state.purity(),
        mean_x=state.mean_position(),
        mean_p=state.momentum_moment(1),
        mean_p_sq=state.momentum_moment(2),
        density=state.position_density(),
        spin_density=spin,
        spin_total=spin.sum(axis=0) * state.grid.dx,
        min_eigenvalue=float(state.spectrum().min()) if spectrum else None,
    )


def projector_channel(data: np.ndarray, geometry: SpinGeometry) -> np.ndarray:
    """Phi(rho): project both sides of the kernel onto the local pointer basis."""
    pu, pd = geometry.proj_up, geometry.proj_down
    return pu[:, None] @ data @ pu[None, :] + pd[:, None] @ data @ pd[None, :]


def measurement_step(data: np.ndarray, geometry: SpinGeometry, nu: float, dt: float) -> np.ndarray:
    """Exact integral of the measurement part over dt."""
    w = np.exp(-nu * dt)
    return w * data + (1 - w) * projector_channel(data, geometry)


def kinetic_phase(grid: SpatialGrid, mass: float, dt: float) -> np.ndarray:
    return np.exp(-0.5j * grid.wavenumbers**2 * dt / mass)


def kinetic_step(data: np.ndarray, phase: np.ndarray) -> np.ndarray:
    """Free evolution of the kernel: ket side along axis 0, bra side along 1."""
    out = np.fft.ifft(np.fft.fft(data, axis=0) * phase[:, None, None, None], axis=0)
    out = np.fft.fft(np.fft.ifft(out, axis=1) * phase.conj()[None, :, None, None], axis=1)
    return out


@dataclass(eq=False)
class DensityMatrix:
    """State kernel rho(x1|x2) on a periodic grid, trace-normalized so that
    sum_i tr rho(x_i|x_i) dx = 1."""

    grid: SpatialGrid
    data: np.ndarray

    # -- constructors ---------------------------------------------------

    @classmethod
    def pure(cls, grid: SpatialGrid, sigma: float, x0: float, p0: float, spinor) -> "DensityMatrix":
        """Gaussian packet with one global spinor."""
        chi = np.asarray(spinor, dtype=np.complex128)
        norm = np.linalg.norm(chi)
        if chi.shape != (2,) or norm < 1e-12:
            raise ConfigError("spinor must be a nonzero 2-vector")
        chi = chi / norm
        psi = gaussian_envelope(grid, sigma, x0, p0)
        data = np.einsum("i,j,a,b->ijab", psi, psi.conj(), chi, chi.conj())
        return cls(grid, data)

    @classmethod
    def unpolarized(cls, grid: SpatialGrid, sigma: float, x0: float, p0: float) -> "DensityMatrix":
        """Gaussian packet with maximally mixed spin."""
        psi = gaussian_envelope(grid, sigma, x0, p0)
        spin = np.eye(2, dtype=np.complex128) / 2
        data = np.einsum("i,j,ab->ijab", psi, psi.conj(), spin)
        return cls(grid, data)

    @classmethod
    def sector(cls, geometry: SpinGeometry, sigma: float, x0: float, p0: float, sector: int) -> "DensityMatrix":
        """Gaussian packet riding one branch of the local pointer basis,
        psi(x) |s n(x)>."""
        psi = gaussian_envelope(geometry.grid, sigma, x0, p0)
        spinor = geometry.spinor_up if sector > 0 else geometry.spinor_down
        amp = psi[:, None] * spinor
        data = np.einsum("ia,jb->ijab", amp, amp.conj())
        return cls(geometry.grid, data)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.grid, self.data.copy())

    # -- scalar diagnostics ----------------------------------------------

    def trace(self) -> float:
        i = np.arange(self.grid.n)
        return float(np.einsum("iaa->", self.data[i, i]).real * self.grid.dx)

    def purity(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2) * self.grid.dx**2)

    def hermiticity_defect(self) -> float:
        return float(np.abs(self.data - self.data.transpose(1, 0, 3, 2).conj()).max())

    def spectrum(self) -> np.ndarray:
        """Eigenvalues of the full operator (occupation weights, sum = trace)."""
        n = self.grid.n
        block = self.data.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)
        return np.linalg.eigvalsh(block) * self.grid.dx

    # -- densities and moments -------------------------------------------

    def position_density(self) -> np.ndarray:
        i = np.arange(self.grid.n)
        return np.einsum("iaa->i", self.data[i, i]).real

    def spin_density(self) -> np.ndarray:
        """(N, 3) array of local Bloch-vector densities tr(sigma rho(x|x))."""
        i = np.arange(self.grid.n)
        comp = pauli_components(self.data[i, i])
        return comp[1:4].real.T

    def mean_position(self, reference: float | None = None) -> float:
        """Density centroid by minimal image around `reference` (defaults to
        the density maximum), mapped back into [0, L)."""
        rho = self.position_density()
        if reference is None:
            reference = float(self.grid.x[np.argmax(rho)])
        d = self.grid.wrapped_displacement(reference)
        mean = reference + float(np.sum(d * rho) * self.grid.dx) / max(np.sum(rho) * self.grid.dx, 1e-300)
        return mean % self.grid.length

    def momentum_occupations(self, component: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Plane-wave diagonal <k| tr_spin(sigma_c rho) |k> on the lattice 2 pi/L.

        `component` selects the Pauli weight (0 = spin trace, 1..3 = sigma_xyz),
        so component 0 gives occupations summing to the trace and component 3
        gives the momentum-resolved z polarization.  Returned in fft order
        alongside the momenta; computed from the wrapped diagonals of the
        weighted kernel, which costs one gather and one FFT of length N.
        """
        n = self.grid.n
        i = np.arange(n)
        kernel = pauli_components(self.data)[component]
        diag_sums = kernel[i[:, None], (i[:, None] - i[None, :]) % n].sum(axis=0)
        occ = np.fft.fft(diag_sums).real * self.grid.dx**2 / self.grid.length
        return self.grid.wavenumbers.copy(), occ

    def momentum_moment(self, order: int, component: int = 0) -> float:
        momenta, occ = self.momentum_occupations(component)
        return float(np.sum(momenta**order * occ))

    def momentum_density(self, component: int = 0) -> np.ndarray:
        """Local momentum density Re tr[sigma_c (p rho)](x|x).

        Summed against dx this reproduces momentum_moment(1, component); for
        component 0 it is m times the probability current.
        """
        kernel = pauli_components(self.data)[component]
        deriv = np.fft.ifft(self.grid.wavenumbers[:, None] * np.fft.fft(kernel, axis=0), axis=0)
        i = np.arange(self.grid.n)
        return deriv[i, i].real

    # -- phase space -------------------------------------------------------

    def wigner(self) -> tuple[np.ndarray, np.ndarray]:
        """Discrete Wigner transform of all four Pauli components.

        Returns (momenta, w) with w of shape (4, N, N_p); the momentum lattice
        has spacing pi/L (half the plane-wave spacing), N_p = N points centered
        on zero.  The position marginal sum_m w[:, i, m] dp recovers the local
        Pauli components exactly.

        Ring caveat: the chords (x+y, x-y) around a point and around its
        antipode coincide modulo L, so a localized packet casts an alternating
        sign image displaced by L/2.  The image cancels in every p-sum (the
        marginals stay exact) but is visible in phase-space maps; momentum
        moments in this module therefore use `momentum_occupations`, never
        Wigner sums.
        """
        n = self.grid.n
        i = np.arange(n)[:, None]
        r = np.arange(n)[None, :]
        comp = pauli_components(self.data)
        chi = comp[:, (i + r) % n, (i - r) % n]
        w = np.roll(np.fft.fft(chi, axis=2), n // 2, axis=2).real * (self.grid.dx / np.pi)
        momenta = np.pi * (np.arange(n) - n // 2) / self.grid.length
        return momenta, w


class LindbladSolver:
    """Strang propagator K(dt/2) C(dt) K(dt/2) for the full kernel.

    For static axis fields the geometry and kinetic phases are computed once;
    rotating fields rebuild the projectors at each step midpoint.
    """

    def __init__(
        self,
        axis_field: AxisField,
        nu: float,
        mass: float,
        dt: float,
        gauge_phase: np.ndarray | None = None,
    ):
        if nu < 0:
            raise ConfigError(f"measurement rate nu = {nu}: need nu >= 0")
        if dt <= 0:
            raise ConfigError(f"time step dt = {dt}: need dt > 0")
        self.field = axis_field
        self.grid = axis_field.grid
        self.nu = float(nu)
        self.mass = float(mass)
        self.dt = float(dt)
        self.gauge_phase = gauge_phase
        self.half_phase = kinetic_phase(self.grid, mass, dt / 2)
        self._static_geometry = (
            spin_geometry(axis_field, mass, 0.0, gauge_phase) if axis_field.static else None
        )

    def geometry(self, t: float) -> SpinGeometry:
        if self._static_geometry is not None:
            return self._static_geometry
        return spin_geometry(self.field, self.mass, t, self.gauge_phase)

    def step(self, data: np.ndarray, t: float) -> np.ndarray:
        out = kinetic_step(data, self.half_phase)
        if self.nu > 0:
            out = measurement_step(out, self.geometry(t + self.dt / 2), self.nu, self.dt)
        return kinetic_step(out, self.half_phase)

    def run(self, state: DensityMatrix, n_steps: int, t0: float = 0.0, callback=None) -> DensityMatrix:
        """Advance `n_steps` steps in place of a fresh copy; `callback(k, t, state)`
        is invoked after every step with the running step count and time."""
        data = state.data.copy()
        current = DensityMatrix(state.grid, data)
        for k in range(n_steps):
            data = self.step(data, t0 + k * self.dt)
            current.data = data
            if callback is not None:
                callback(k + 1, t0 + (k + 1) * self.dt, current)
        return current
