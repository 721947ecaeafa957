"""Phase-space transport of the Wigner components under the gradient
expansion of the measurement dynamics.

State: W_0(x, p) and the orientation components W(x, p) on a periodic x grid
and a truncated uniform momentum lattice.  The evolved equations are the
expanded ones (coherence length small against the axis-field scale):

    dt W_0 + (p/m) dx W_0 =  (nu/4) g  d2p W_0 + (nu/2) F . dp Wv
    dt Wv  + (p/m) dx Wv  =  nu [n (n . Wv) - Wv]
                            - (nu/4) g d2p Wv + (nu/4) n' (n' . d2p Wv)
                            - (nu/2) F dp W_0

with g = n'.n' and F = n' x n.  The scheme splits into exact substeps where
possible: advection is an exact spectral shift per momentum column, the local
relaxation nu [n (n.Wv) - Wv] has the closed form Wv -> n(n.Wv) +
e^{-nu dt} (Wv - n(n.Wv)), and the momentum-space terms go through an explicit
flux form (conservative, absorbing at the outer faces with the lost mass
accounted).  Composition order A(dt/2) R(dt/2) P(dt) R(dt/2) A(dt/2), which is
second order overall.

Well-posedness caveat: the expansion makes the momentum diffusion on the spin
components carry a negative sign (their structure is damped by the relaxation
instead), so momentum wavelengths finer than the expansion's validity range
are amplified at rate up to nu g / dp^2.  A conservative hyperdiffusive flux
on the spin components cancels that growth at the grid scale without touching
their mass or first two momentum moments.  The constructor additionally
enforces the stability bound dt <= dp^2 / (2 nu max g), and `run` enforces the
amplification budget nu g T / dp^2 <= 30, inside which the residual
mid-wavelength growth stays harmless; refining dp at fixed horizon eventually
exceeds the budget by construction of the expanded equations, not of the
scheme.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .fields import AxisField, SpinGeometry, spin_geometry
from .grid import SpatialGrid

_AMPLIFICATION_BUDGET = 30.0


def check_amplification_budget(nu: float, g_max: float, horizon: float, dp: float) -> None:
    """Reject runs whose total sub-grid growth factor exceeds the budget."""
    if nu <= 0 or g_max <= 0:
        return
    budget = nu * g_max * horizon / dp**2
    if budget > _AMPLIFICATION_BUDGET:
        raise ConfigError(
            f"amplification budget nu g T / dp^2 = {budget:.1f} exceeds "
            f"{_AMPLIFICATION_BUDGET:.0f}: the expanded equations amplify sub-grid "
            "momentum structure on the spin components over this horizon; "
            "coarsen dp or shorten the run"
        )


def momentum_grid(p_max: float, n_p: int) -> np.ndarray:
    """Cell-centered symmetric momentum lattice on (-p_max, p_max)."""
    if p_max <= 0 or n_p < 8 or n_p % 2:
        raise ConfigError(f"momentum grid needs p_max > 0 and even n_p >= 8, got ({p_max}, {n_p})")
    dp = 2 * p_max / n_p
    return -p_max + dp * (np.arange(n_p) + 0.5)


@dataclass(eq=False)
class PhaseSpaceState:
    """Wigner components on the (x, p) lattice; `leaked` accumulates the mass
    lost through the open momentum boundaries."""

    grid: SpatialGrid
    momenta: np.ndarray
    w0: np.ndarray    # (N, N_p)
    wvec: np.ndarray  # (N, N_p, 3)
    leaked: float = 0.0

    @classmethod
    def gaussian(cls, grid: SpatialGrid, momenta: np.ndarray, sigma: float,
                 x0: float, p0: float, bloch=None) -> "PhaseSpaceState":
        """Minimum-uncertainty packet; `bloch` is the initial spin vector
        (None for unpolarized).  Normalized to unit mass on the lattice."""
        if sigma <= 0:
            raise ConfigError(f"packet width sigma = {sigma}: need sigma > 0")
        d = grid.wrapped_displacement(x0)
        w0 = np.exp(-d[:, None] ** 2 / (2 * sigma**2) - 2 * sigma**2 * (momenta[None, :] - p0) ** 2)
        dp = momenta[1] - momenta[0]
        w0 /= w0.sum() * grid.dx * dp
        wvec = np.zeros(w0.shape + (3,))
        if bloch is not None:
            b = np.asarray(bloch, dtype=float)
            if b.shape != (3,) or np.linalg.norm(b) > 1 + 1e-9:
                raise ConfigError("bloch vector must be a 3-vector of length <= 1")
            wvec = w0[:, :, None] * b
        return cls(grid, np.asarray(momenta, dtype=float).copy(), w0, wvec)

    @property
    def dp(self) -> float:
        return float(self.momenta[1] - self.momenta[0])

    def copy(self) -> "PhaseSpaceState":
        return PhaseSpaceState(self.grid, self.momenta, self.w0.copy(), self.wvec.copy(), self.leaked)

    # -- moments ----------------------------------------------------------

    def mass(self) -> float:
        return float(self.w0.sum() * self.grid.dx * self.dp)

    def p_moment(self, order: int, component: int = 0) -> float:
        w = self.w0 if component == 0 else self.wvec[:, :, component - 1]
        return float(np.sum(self.momenta**order * w) * self.grid.dx * self.dp)

    def density(self) -> np.ndarray:
        return self.w0.sum(axis=1) * self.dp

    def spin_density(self) -> np.ndarray:
        return self.wvec.sum(axis=1) * self.dp

    def momentum_density(self, component: int = 0) -> np.ndarray:
        """integral p W_c dp as a function of x (momentum per unit length)."""
        w = self.w0 if component == 0 else self.wvec[:, :, component - 1]
        return (w * self.momenta[None, :]).sum(axis=1) * self.dp


def _advect(state: PhaseSpaceState, mass: float, tau: float) -> None:
    """Exact free streaming: shift each momentum column by p tau / m."""
    k = state.grid.wavenumbers
    shift = np.exp(-1j * k[:, None] * (state.momenta[None, :] * tau / mass))
    state.w0 = np.fft.ifft(np.fft.fft(state.w0, axis=0) * shift, axis=0).real
    state.wvec = np.fft.ifft(np.fft.fft(state.wvec, axis=0) * shift[:, :, None], axis=0).real


def _relax(state: PhaseSpaceState, geometry: SpinGeometry, nu: float, tau: float) -> None:
    """Exact local relaxation of the orientation onto the axis."""
    n = geometry.n[:, None, :]
    along = np.sum(state.wvec * n, axis=-1, keepdims=True) * n
    state.wvec = along + np.exp(-nu * tau) * (state.wvec - along)


def _momentum_fluxes(w0: np.ndarray, wvec: np.ndarray, dp: float,
                     geometry: SpinGeometry, nu: float):
    """Face fluxes of the momentum-space terms, ghost cells zero (open)."""
    n = w0.shape[0]
    pad0 = np.concatenate([np.zeros((n, 1)), w0, np.zeros((n, 1))], axis=1)
    padv = np.concatenate([np.zeros((n, 1, 3)), wvec, np.zeros((n, 1, 3))], axis=1)
    jump0 = np.diff(pad0, axis=1) / dp                  # (N, N_p + 1) at faces
    jumpv = np.diff(padv, axis=1) / dp
    face0 = (pad0[:, 1:] + pad0[:, :-1]) / 2
    facev = (padv[:, 1:] + padv[:, :-1]) / 2

    g = geometry.grad_sq[:, None]
    F = geometry.force[:, None, :]
    dn = geometry.dn[:, None, :]
    flux0 = nu / 4 * g * jump0 + nu / 2 * np.sum(F * facev, axis=-1)
    fluxv = (
        -nu / 4 * g[:, :, None] * jumpv
        + nu / 4 * dn * np.sum(dn * jumpv, axis=-1, keepdims=True)
        - nu / 2 * F * face0[:, :, None]
    )
    # Grid-scale regularization of the spin components: their diffusion term
    # carries a negative sign, so Nyquist-scale structure is amplified.  A
    # hyperdiffusive flux -chi dp^2 d3p W with chi = nu g / 4 cancels that
    # growth at the grid scale, perturbs resolved scales at O(dp^2), and in
    # flux form leaves mass, <p> and <p^2> of every component exact.
    third = padv[:, 3:] - 3 * padv[:, 2:-1] + 3 * padv[:, 1:-2] - padv[:, :-3]
    fluxv[:, 1:-1, :] -= nu / 4 * g[:, :, None] * third / dp
    # Outer faces: keep only the absorbing W_0 outflow.  A ghost-zero step on
    # the spin components feeds their negative-diffusion term and grows a
    # boundary layer, so those fluxes (and the couplings) close at the cutoff.
    flux0[:, [0, -1]] = nu / 4 * g * jump0[:, [0, -1]]
    fluxv[:, [0, -1], :] = 0.0
    return flux0, fluxv


def _momentum_step(state: PhaseSpaceState, geometry: SpinGeometry, nu: float, tau: float) -> None:
    """Midpoint (second-order) update of the conservative momentum fluxes."""
    dp = state.dp
    flux0, fluxv = _momentum_fluxes(state.w0, state.wvec, dp, geometry, nu)
    half0 = state.w0 + tau / (2 * dp) * np.diff(flux0, axis=1)
    halfv = state.wvec + tau / (2 * dp) * np.diff(fluxv, axis=1)
    flux0, fluxv = _momentum_fluxes(half0, halfv, dp, geometry, nu)
    before = state.mass()
    state.w0 = state.w0 + tau / dp * np.diff(flux0, axis=1)
    state.wvec = state.wvec + tau / dp * np.diff(fluxv, axis=1)
    state.leaked += before - state.mass()


class SemiclassicalSolver:
    """Transport integrator A(dt/2) R(dt/2) P(dt) R(dt/2) A(dt/2)."""

    def __init__(self, axis_field: AxisField, nu: float, mass: float, dt: float, momenta: np.ndarray):
        if nu < 0:
            raise ConfigError(f"measurement rate nu = {nu}: need nu >= 0")
        if dt <= 0:
            raise ConfigError(f"time step dt = {dt}: need dt > 0")
        self.field = axis_field
        self.grid = axis_field.grid
        self.nu = float(nu)
        self.mass = float(mass)
        self.dt = float(dt)
        self.momenta = np.asarray(momenta, dtype=float)
        dp = float(self.momenta[1] - self.momenta[0])
        self._static_geometry = spin_geometry(axis_field, mass, 0.0) if axis_field.static else None
        g_max = float((self._static_geometry or spin_geometry(axis_field, mass, 0.0)).grad_sq.max())
        if nu > 0 and g_max > 0:
            # von Neumann limit covering the diffusive and hyperdiffusive parts
            cfl = dp**2 / (2 * nu * g_max)
            if dt > cfl:
                raise ConfigError(
                    f"dt = {dt} violates the momentum-diffusion stability bound {cfl:.3e} "
                    f"(dp = {dp:.3g}, max g = {g_max:.3g}); reduce dt or coarsen the momentum grid"
                )
        self._g_max = g_max

    def geometry(self, t: float) -> SpinGeometry:
        if self._static_geometry is not None:
            return self._static_geometry
        return spin_geometry(self.field, self.mass, t)

    def step(self, state: PhaseSpaceState, t: float) -> None:
        geo = self.geometry(t + self.dt / 2)
        _advect(state, self.mass, self.dt / 2)
        if self.nu > 0:
            _relax(state, geo, self.nu, self.dt / 2)
            _momentum_step(state, geo, self.nu, self.dt)
            _relax(state, geo, self.nu, self.dt / 2)
        _advect(state, self.mass, self.dt / 2)

    def run(self, state: PhaseSpaceState, n_steps: int, t0: float = 0.0, callback=None) -> PhaseSpaceState:
        horizon = n_steps * self.dt
        dp = float(self.momenta[1] - self.momenta[0])
        check_amplification_budget(self.nu, self._g_max, horizon, dp)
        out = state.copy()
        for k in range(n_steps):
            self.step(out, t0 + k * self.dt)
            if callback is not None:
                callback(k + 1, t0 + (k + 1) * self.dt, out)
        return out
