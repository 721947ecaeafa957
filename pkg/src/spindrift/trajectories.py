"""Stochastic unravelling of the measurement dynamics on pure wavefunctions.

Each trajectory is a normalized spinor wavefunction psi_a(x) undergoing free
spectral evolution, interrupted at Poisson-distributed times (rate nu) by one
global unselective spin measurement: outcome s = +/- is drawn with probability
<psi| P_s |psi>, where P_s projects every point onto the local pointer spinor,
and the state collapses to P_s psi / ||P_s psi||.  No spatial localization
accompanies the jump.  Averaging the projectors psi psi^dagger over
trajectories reproduces the density-matrix solver; the ensemble routines below
report means with 1/sqrt(n) standard errors for that comparison.

Determinism contract: every trajectory owns a counter-derived stream
(base_seed, trajectory index); draws are consumed in a fixed order (initial
spinor choice if any, then alternating waiting times and outcome draws); and
the ensemble reduction accumulates per-trajectory results strictly in index
order, so serial and parallel execution produce identical results.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, NumericsError
from .fields import SpinGeometry
from .grid import SpatialGrid
from .lindblad import gaussian_envelope

_DEGENERATE_BRANCH = 1e-14


def trajectory_rng(base_seed: int, index: int) -> np.random.Generator:
    """The stream for one trajectory, derived by counter from the base seed."""
    return np.random.default_rng(np.random.SeedSequence(entropy=base_seed, spawn_key=(index,)))


def free_flight(psi: np.ndarray, grid: SpatialGrid, mass: float, tau: float) -> np.ndarray:
    """Free evolution by an arbitrary interval (exact, spectral)."""
    phase = np.exp(-0.5j * grid.wavenumbers**2 * tau / mass)
    return np.fft.ifft(np.fft.fft(psi, axis=0) * phase[:, None], axis=0)


def outcome_probability(psi: np.ndarray, geometry: SpinGeometry) -> float:
    """Probability of the + outcome of one global measurement."""
    projected = np.einsum("iab,ib->ia", geometry.proj_up, psi)
    return float(np.sum(np.abs(projected) ** 2).real * geometry.grid.dx)


def apply_measurement(psi: np.ndarray, geometry: SpinGeometry, outcome: int) -> np.ndarray:
    """Collapse onto the +/- branch and renormalize."""
    proj = geometry.proj_up if outcome > 0 else geometry.proj_down
    projected = np.einsum("iab,ib->ia", proj, psi)
    norm_sq = float(np.sum(np.abs(projected) ** 2).real * geometry.grid.dx)
    if norm_sq < _DEGENERATE_BRANCH:
        raise NumericsError(
            f"measurement branch {'+' if outcome > 0 else '-'} has weight {norm_sq:.3e}; "
            "drawing a branch of vanishing weight indicates inconsistent probabilities"
        )
    return projected / np.sqrt(norm_sq)


def pure_state_spinor(grid: SpatialGrid, sigma: float, x0: float, p0: float, spinor) -> np.ndarray:
    """Gaussian packet times a global spinor, as a (N, 2) wavefunction."""
    chi = np.asarray(spinor, dtype=np.complex128)
    norm = np.linalg.norm(chi)
    if chi.shape != (2,) or norm < 1e-12:
        raise ConfigError("spinor must be a nonzero 2-vector")
    return gaussian_envelope(grid, sigma, x0, p0)[:, None] * (chi / norm)


@dataclass(eq=False)
class MixedSpinInitial:
    """Initial condition for an unpolarized packet: each trajectory starts in
    the +z or -z spin state with probability 1/2, drawn first from its stream.
    The trajectory average reproduces the maximally mixed spin state."""

    grid: SpatialGrid
    sigma: float
    x0: float
    p0: float

    def __call__(self, rng: np.random.Generator) -> np.ndarray:
        spinor = [1, 0] if rng.random() < 0.5 else [0, 1]
        return pure_state_spinor(self.grid, self.sigma, self.x0, self.p0, spinor)


@dataclass(eq=False)
class TrajectoryState:
    """One unravelled trajectory: wavefunction, its stream, and the jump log."""

    grid: SpatialGrid
    psi: np.ndarray
    rng: np.random.Generator
    seed: tuple[int, int]
    jump_times: list = field(default_factory=list)
    jump_outcomes: list = field(default_factory=list)

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.psi) ** 2) * self.grid.dx))

    def spin_density(self) -> np.ndarray:
        p = self.psi
        sx = 2 * (p[:, 0].conj() * p[:, 1]).real
        sy = 2 * (p[:, 0].conj() * p[:, 1]).imag
        sz = np.abs(p[:, 0]) ** 2 - np.abs(p[:, 1]) ** 2
        return np.stack([sx, sy, sz], axis=1)

    def position_density(self) -> np.ndarray:
        return np.sum(np.abs(self.psi) ** 2, axis=1)

    def momentum_moment(self, order: int) -> float:
        occ = np.sum(np.abs(np.fft.fft(self.psi, axis=0)) ** 2, axis=1)
        occ *= self.grid.dx / self.grid.n
        return float(np.sum(self.grid.wavenumbers**order * occ))


@dataclass(eq=False)
class TrajectorySeries:
    """Per-trajectory observables sampled on the fixed output grid."""

    times: np.ndarray
    norm: np.ndarray
    mean_p: np.ndarray
    mean_p_sq: np.ndarray
    spin_total: np.ndarray    # (M, 3)
    density: np.ndarray       # (M, N)
    spin_density: np.ndarray  # (M, N, 3)


def _sample_count(T: float, sample_dt: float) -> int:
    if sample_dt <= 0 or T <= 0:
        raise ConfigError(f"need T > 0 and sample_dt > 0, got T = {T}, sample_dt = {sample_dt}")
    n = round(T / sample_dt)
    if n < 1 or abs(n * sample_dt - T) > 1e-9 * max(T, 1.0):
        raise ConfigError(f"T = {T} is not an integer multiple of the output interval {sample_dt}")
    return n


def _run_trajectory(initial, geometry, nu, T, sample_dt, base_seed, index):
    """Core loop shared by the public entry points.  `initial` is a (N, 2)
    array or a callable consuming the leading draws of the trajectory stream."""
    grid = geometry.grid
    rng = trajectory_rng(base_seed, index)
    psi0 = initial(rng) if callable(initial) else np.asarray(initial, dtype=np.complex128)
    if psi0.shape != (grid.n, 2):
        raise ConfigError(f"initial wavefunction must have shape ({grid.n}, 2)")
    norm = np.sqrt(np.sum(np.abs(psi0) ** 2) * grid.dx)
    if abs(norm - 1) > 1e-10:
        raise ConfigError(f"initial wavefunction norm = {norm:.12g}, expected 1")

    n_samples = _sample_count(T, sample_dt)
    state = TrajectoryState(grid, psi0.copy(), rng, (base_seed, index))
    times = sample_dt * np.arange(n_samples + 1)
    series = TrajectorySeries(
        times=times,
        norm=np.empty(n_samples + 1),
        mean_p=np.empty(n_samples + 1),
        mean_p_sq=np.empty(n_samples + 1),
        spin_total=np.empty((n_samples + 1, 3)),
        density=np.empty((n_samples + 1, grid.n)),
        spin_density=np.empty((n_samples + 1, grid.n, 3)),
    )

    def record(m):
        series.norm[m] = state.norm()
        series.mean_p[m] = state.momentum_moment(1)
        series.mean_p_sq[m] = state.momentum_moment(2)
        spin = state.spin_density()
        series.spin_density[m] = spin
        series.spin_total[m] = spin.sum(axis=0) * grid.dx
        series.density[m] = state.position_density()

    record(0)
    t = 0.0
    next_jump = t + rng.exponential(1 / nu) if nu > 0 else np.inf
    for m in range(1, n_samples + 1):
        t_target = times[m]
        while next_jump <= t_target:
            state.psi = free_flight(state.psi, grid, geometry.mass, next_jump - t)
            t = next_jump
            p_plus = outcome_probability(state.psi, geometry)
            outcome = +1 if rng.random() < p_plus else -1
            state.psi = apply_measurement(state.psi, geometry, outcome)
            state.jump_times.append(t)
            state.jump_outcomes.append(outcome)
            next_jump = t + rng.exponential(1 / nu)
        state.psi = free_flight(state.psi, grid, geometry.mass, t_target - t)
        t = t_target
        record(m)
    return state, series


def evolve_trajectory(
    psi0: np.ndarray,
    geometry: SpinGeometry,
    nu: float,
    T: float,
    sample_dt: float,
    seed: int,
    index: int = 0,
) -> tuple[TrajectoryState, TrajectorySeries]:
    """Run one trajectory to time T, sampling observables every sample_dt.

    Free flights are advanced to the exact jump times (the spectral step is
    exact for any interval), so the only discretization is in the initial
    state; output samples land on exact multiples of sample_dt.
    """
    return _run_trajectory(np.asarray(psi0), geometry, nu, T, sample_dt, seed, index)


def _ensemble_task(args):
    return _run_trajectory(*args)


@dataclass(eq=False)
class EnsembleResult:
    """Trajectory-averaged observables with standard errors of the mean."""

    times: np.ndarray
    n_traj: int
    base_seed: int
    mean_p: np.ndarray
    mean_p_se: np.ndarray
    mean_p_sq: np.ndarray
    mean_p_sq_se: np.ndarray
    spin_total: np.ndarray      # (M, 3)
    spin_total_se: np.ndarray
    density: np.ndarray         # (M, N)
    density_se: np.ndarray
    spin_density: np.ndarray    # (M, N, 3)
    spin_density_se: np.ndarray
    jump_log: list              # (trajectory index, time, outcome) triples


def ensemble_average(
    initial,
    geometry: SpinGeometry,
    nu: float,
    T: float,
    sample_dt: float,
    n_traj: int,
    base_seed: int,
    n_workers: int | None = None,
    keep_jump_log: bool = False,
) -> EnsembleResult:
    """Average `n_traj` trajectories; `initial` is a (N, 2) wavefunction or a
    callable rng -> wavefunction for mixed initial conditions.

    Seeds derive from (base_seed, index); results stream back and are
    accumulated strictly in index order, so the output is independent of the
    worker count, including bitwise.
    """
    if n_traj < 2:
        raise ConfigError(f"n_traj = {n_traj}: need at least 2 trajectories for standard errors")
    n_samples = _sample_count(T, sample_dt)
    grid = geometry.grid
    shapes = {
        "mean_p": (n_samples + 1,),
        "mean_p_sq": (n_samples + 1,),
        "spin_total": (n_samples + 1, 3),
        "density": (n_samples + 1, grid.n),
        "spin_density": (n_samples + 1, grid.n, 3),
    }
    sums = {k: np.zeros(s) for k, s in shapes.items()}
    sums_sq = {k: np.zeros(s) for k, s in shapes.items()}
    jump_log = []

    def consume(index, state, series):
        for key in shapes:
            value = getattr(series, key)
            sums[key] += value
            sums_sq[key] += value**2
        if keep_jump_log:
            jump_log.extend((index, t, o) for t, o in zip(state.jump_times, state.jump_outcomes))

    tasks = [(initial, geometry, nu, T, sample_dt, base_seed, i) for i in range(n_traj)]
    if n_workers is not None and n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            for index, (state, series) in enumerate(pool.map(_ensemble_task, tasks, chunksize=8)):
                consume(index, state, series)
    else:
        for index, task in enumerate(tasks):
            state, series = _ensemble_task(task)
            consume(index, state, series)

    def finalize(key):
        mean = sums[key] / n_traj
        variance = np.clip(sums_sq[key] / n_traj - mean**2, 0.0, None) * n_traj / (n_traj - 1)
        return mean, np.sqrt(variance / n_traj)

    mean_p, mean_p_se = finalize("mean_p")
    mean_p_sq, mean_p_sq_se = finalize("mean_p_sq")
    spin_total, spin_total_se = finalize("spin_total")
    density, density_se = finalize("density")
    spin_density, spin_density_se = finalize("spin_density")
    return EnsembleResult(
        times=sample_dt * np.arange(n_samples + 1),
        n_traj=n_traj,
        base_seed=base_seed,
        mean_p=mean_p,
        mean_p_se=mean_p_se,
        mean_p_sq=mean_p_sq,
        mean_p_sq_se=mean_p_sq_se,
        spin_total=spin_total,
        spin_total_se=spin_total_se,
        density=density,
        density_se=density_se,
        spin_density=spin_density,
        spin_density_se=spin_density_se,
        jump_log=jump_log,
    )
