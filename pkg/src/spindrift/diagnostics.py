"""Experiment drivers: each runs a configured scenario and returns a report
holding the sampled series plus the derived check quantities.  Reports carry
numbers only; thresholds live with the caller.

Conventions shared by the drivers:

* the measured force integral is -(nu/2) int F . rho_vec dx with
  F = (dx n) x n, the local momentum source of the measurement channel;
* the spin-z momentum density is pi_z(x) = Re tr[sigma_z (p rho)](x|x), whose
  early-time rate equals +(nu/2) F_z rho_0(x);
* sector-resolved momenta along the force axis use the Pauli correlator
  tr(p sigma_z rho), so P_+- = (<p> +- C)/2 with weights (1 +- <sigma_z>)/2;
* heating fits use the exact relaxation profile: <p^2>(t) = a + b (1 -
  e^{-nu t})/nu, so b estimates the initial rate d<p^2>/dt at t = 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericsError
from .fields import AxisField, bloch_spinor
from .gauge import kernel_density, kernel_momentum, sector_kernels
from .lindblad import DensityMatrix, LindbladSolver, gaussian_envelope
from .semiclassical import PhaseSpaceState, SemiclassicalSolver, momentum_grid
from .trajectories import free_flight


def sample_steps(T: float, dt: float, sample_dt: float) -> tuple[int, int]:
    """(steps per sample, number of samples), validating divisibility."""
    per = sample_dt / dt
    if abs(per - round(per)) > 1e-9:
        raise ConfigError(f"sample_dt = {sample_dt} must be an integer multiple of dt = {dt}")
    count = T / sample_dt
    if abs(count - round(count)) > 1e-9:
        raise ConfigError(f"horizon T = {T} must be an integer multiple of sample_dt = {sample_dt}")
    return int(round(per)), int(round(count))


def position_variance(state: DensityMatrix) -> float:
    """Spatial variance of the position density around its wrapped mean."""
    density = state.position_density()
    norm = density.sum() * state.grid.dx
    peak = state.grid.x[int(np.argmax(density))]
    d = state.grid.wrapped_displacement(peak)
    m1 = float(np.sum(d * density) * state.grid.dx / norm)
    return float(np.sum((d - m1) ** 2 * density) * state.grid.dx / norm)


class ConservationMonitor:
    """Solver callback guarding trace, Hermiticity, and positivity.

    Trace drift is measured per unit time, the Hermiticity defect per step,
    and the spectrum floor at every checkpoint (spacing `check_every` steps).
    Violations raise NumericsError; the running extrema stay readable on the
    instance either way.
    """

    def __init__(self, dt: float, check_every: int = 50, trace_tol: float = 1e-10,
                 herm_tol: float = 1e-12, eig_floor: float = -1e-8):
        self.dt = dt
        self.check_every = check_every
        self.trace_tol = trace_tol
        self.herm_tol = herm_tol
        self.eig_floor = eig_floor
        self.max_trace_rate = 0.0
        self.max_herm_per_step = 0.0
        self.min_eigenvalue = np.inf
        self.checkpoints = 0

    def __call__(self, step: int, t: float, state: DensityMatrix) -> None:
        if step % self.check_every:
            return
        self.checkpoints += 1
        elapsed = step * self.dt
        trace_rate = abs(state.trace() - 1.0) / elapsed
        herm_rate = state.hermiticity_defect() / step
        self.max_trace_rate = max(self.max_trace_rate, trace_rate)
        self.max_herm_per_step = max(self.max_herm_per_step, herm_rate)
        low = float(state.spectrum().min())
        self.min_eigenvalue = min(self.min_eigenvalue, low)
        if trace_rate > self.trace_tol:
            raise NumericsError(f"trace drift {trace_rate:.3e} per unit time at t = {t:.6g}")
        if herm_rate > self.herm_tol:
            raise NumericsError(f"hermiticity defect {herm_rate:.3e} per step at t = {t:.6g}")
        if low < self.eig_floor:
            raise NumericsError(f"spectrum floor {low:.3e} at t = {t:.6g}")

    def summary(self) -> dict:
        return {
            "checkpoints": self.checkpoints,
            "max_trace_rate": self.max_trace_rate,
            "max_hermiticity_per_step": self.max_herm_per_step,
            "min_eigenvalue": None if self.checkpoints == 0 else float(self.min_eigenvalue),
        }


def _merge_callbacks(*callbacks):
    live = [c for c in callbacks if c is not None]
    if not live:
        return None

    def merged(step, t, state):
        for c in live:
            c(step, t, state)

    return merged


def force_integral(state: DensityMatrix, geometry, nu: float) -> float:
    """-(nu/2) int F . rho_vec dx, the momentum source of the channel."""
    sd = state.spin_density()
    return float(-nu / 2 * np.sum(geometry.force * sd) * state.grid.dx)


@dataclass(eq=False)
class ForceBalanceReport:
    times: np.ndarray
    mean_p: np.ndarray
    force: np.ndarray
    dpdt: np.ndarray             # centered differences on the interior times
    residual: np.ndarray         # |dpdt - force| / |force|, interior times
    early_force: float           # force at the first sample
    mirror_mean_p: np.ndarray | None = None
    mirror_force: np.ndarray | None = None

    @property
    def max_residual(self) -> float:
        return float(self.residual.max())


def force_balance(axis_field: AxisField, nu: float, mass: float, sigma: float,
                  x0: float, p0: float, spinor, T: float, dt: float,
                  sample_dt: float, mirror: bool = True, monitor=None) -> ForceBalanceReport:
    """Polarized packet: compare d<p>/dt against the local force integral.

    With `mirror` the antipodal spinor (-b*, a*) is run as well; the channel
    is linear in the spin density, so its force series is the exact negative.
    """
    per, count = sample_steps(T, dt, sample_dt)

    def one_run(spin):
        solver = LindbladSolver(axis_field, nu, mass, dt)
        geo = solver.geometry(0.0)
        state = DensityMatrix.pure(axis_field.grid, sigma, x0, p0, spin)
        times = np.empty(count + 1)
        mean_p = np.empty(count + 1)
        force = np.empty(count + 1)
        times[0] = 0.0
        mean_p[0] = state.momentum_moment(1)
        force[0] = force_integral(state, geo, nu)
        holder = {"i": 0}

        def sampler(step, t, current):
            if step % per == 0:
                i = holder["i"] = holder["i"] + 1
                times[i] = t
                mean_p[i] = current.momentum_moment(1)
                force[i] = force_integral(current, solver.geometry(t), nu)

        solver.run(state, per * count, callback=_merge_callbacks(sampler, monitor))
        return times, mean_p, force

    times, mean_p, force = one_run(np.asarray(spinor, dtype=complex))
    dpdt = (mean_p[2:] - mean_p[:-2]) / (times[2:] - times[:-2])
    residual = np.abs(dpdt - force[1:-1]) / np.abs(force[1:-1])
    report = ForceBalanceReport(times=times, mean_p=mean_p, force=force,
                                dpdt=dpdt, residual=residual, early_force=float(force[1]))
    if mirror:
        a, b = np.asarray(spinor, dtype=complex)
        _, mirror_p, mirror_f = one_run(np.array([-np.conj(b), np.conj(a)]))
        report.mirror_mean_p = mirror_p
        report.mirror_force = mirror_f
    return report


@dataclass(eq=False)
class SpinSeparationReport:
    times: np.ndarray
    total_p: np.ndarray
    correlator: np.ndarray       # tr(p sigma_z rho)
    sector_p: np.ndarray         # (M, 2): force-axis sectors +, -
    sector_weights: np.ndarray   # (M, 2)
    delta_p: np.ndarray          # sector gap, per unit weight
    early_force_per_weight: np.ndarray  # (2,)
    pointer_p: np.ndarray        # (M, 2): pointer-branch momenta, per unit weight
    pointer_weights: np.ndarray  # (M, 2)


def spin_separation(axis_field: AxisField, nu: float, mass: float, sigma: float,
                    x0: float, T: float, dt: float, sample_dt: float,
                    monitor=None) -> SpinSeparationReport:
    """Unpolarized packet on a structured axis: the total momentum stays
    put while the force-axis spin sectors recoil in opposite directions.

    The pointer-branch (+-n) momenta are reported alongside as kinetic
    values (canonical reading plus the sector potential, which removes the
    gauge offset of the twisted basis); for an unpolarized start they stay
    equal by symmetry, which is the reason the separation is read along the
    force axis.
    """
    per, count = sample_steps(T, dt, sample_dt)
    solver = LindbladSolver(axis_field, nu, mass, dt)
    geo = solver.geometry(0.0)
    a_sector = np.stack([geo.sector_potential(1), geo.sector_potential(-1)])
    state = DensityMatrix.unpolarized(axis_field.grid, sigma, x0, 0.0)

    m = count + 1
    times = np.zeros(m)
    total_p = np.zeros(m)
    corr = np.zeros(m)
    weights = np.zeros((m, 2))
    pointer_p = np.zeros((m, 2))
    pointer_w = np.zeros((m, 2))
    dx = axis_field.grid.dx

    def record(i, t, current):
        times[i] = t
        total_p[i] = current.momentum_moment(1)
        corr[i] = current.momentum_moment(1, component=3)
        sz = float(current.spin_density()[:, 2].sum() * dx)
        weights[i] = [(1 + sz) / 2, (1 - sz) / 2]
        up, down, _ = sector_kernels(current, geo)
        wu = float(np.trace(up).real * dx)
        wd = float(np.trace(down).real * dx)
        pointer_w[i] = [wu, wd]
        drift_up = float(np.sum(a_sector[0] * kernel_density(up)) * dx)
        drift_dn = float(np.sum(a_sector[1] * kernel_density(down)) * dx)
        pointer_p[i] = [(kernel_momentum(up, axis_field.grid) + drift_up) / wu,
                        (kernel_momentum(down, axis_field.grid) + drift_dn) / wd]

    record(0, 0.0, state)
    holder = {"i": 0}

    def sampler(step, t, current):
        if step % per == 0:
            holder["i"] += 1
            record(holder["i"], t, current)

    solver.run(state, per * count, callback=_merge_callbacks(sampler, monitor))

    sector_sum = np.stack([(total_p + corr) / 2, (total_p - corr) / 2], axis=1)
    sector_p = sector_sum / weights
    delta_p = sector_p[:, 1] - sector_p[:, 0]
    early = (sector_sum[1] - sector_sum[0]) / times[1] / weights[0]
    return SpinSeparationReport(
        times=times, total_p=total_p, correlator=corr, sector_p=sector_p,
        sector_weights=weights, delta_p=delta_p, early_force_per_weight=early,
        pointer_p=pointer_p, pointer_weights=pointer_w,
    )


def rate_fit(times: np.ndarray, values: np.ndarray, nu: float) -> tuple[float, float, float]:
    """Least squares of values ~ a + b (1 - e^{-nu t})/nu; returns
    (a, b, rms residual).  b is the initial growth rate."""
    basis = np.stack([np.ones_like(times), (1 - np.exp(-nu * times)) / nu], axis=1)
    coef, *_ = np.linalg.lstsq(basis, values, rcond=None)
    resid = values - basis @ coef
    return float(coef[0]), float(coef[1]), float(np.sqrt(np.mean(resid**2)))


@dataclass(eq=False)
class DiffusionReport:
    times: np.ndarray
    p_sq: np.ndarray
    rate: float                  # fitted initial d<p^2>/dt
    offset: float
    fit_residual: float
    correlator: np.ndarray
    transport_times: np.ndarray
    transport_p_sq: np.ndarray
    transport_rate: float
    transport_offset: float
    transport_fit_residual: float
    transport_leaked: float


def diffusion_study(axis_field: AxisField, nu: float, mass: float, sigma: float,
                    x0: float, T: float, dt: float, sample_dt: float,
                    p_max: float, n_p: int, transport_dt: float,
                    monitor=None) -> DiffusionReport:
    """Unpolarized heating run through both solvers, with the initial rate
    extracted by the relaxation-profile fit."""
    per, count = sample_steps(T, dt, sample_dt)
    solver = LindbladSolver(axis_field, nu, mass, dt)
    state = DensityMatrix.unpolarized(axis_field.grid, sigma, x0, 0.0)
    times = np.zeros(count + 1)
    p_sq = np.zeros(count + 1)
    corr = np.zeros(count + 1)
    p_sq[0] = state.momentum_moment(2)
    holder = {"i": 0}

    def sampler(step, t, current):
        if step % per == 0:
            i = holder["i"] = holder["i"] + 1
            times[i] = t
            p_sq[i] = current.momentum_moment(2)
            corr[i] = current.momentum_moment(1, component=3)

    solver.run(state, per * count, callback=_merge_callbacks(sampler, monitor))
    offset, rate, fit_res = rate_fit(times, p_sq, nu)

    tper, tcount = sample_steps(T, transport_dt, sample_dt)
    momenta = momentum_grid(p_max, n_p)
    transport = SemiclassicalSolver(axis_field, nu, mass, transport_dt, momenta)
    pstate = PhaseSpaceState.gaussian(axis_field.grid, momenta, sigma, x0, 0.0)
    t_times = np.zeros(tcount + 1)
    t_p_sq = np.zeros(tcount + 1)
    t_p_sq[0] = pstate.p_moment(2)
    t_holder = {"i": 0}

    def t_sampler(step, t, current):
        if step % tper == 0:
            i = t_holder["i"] = t_holder["i"] + 1
            t_times[i] = t
            t_p_sq[i] = current.p_moment(2)

    final = transport.run(pstate, tper * tcount, callback=t_sampler)
    t_offset, t_rate, t_fit_res = rate_fit(t_times, t_p_sq, nu)
    return DiffusionReport(
        times=times, p_sq=p_sq, rate=rate, offset=offset, fit_residual=fit_res,
        correlator=corr, transport_times=t_times, transport_p_sq=t_p_sq,
        transport_rate=t_rate, transport_offset=t_offset,
        transport_fit_residual=t_fit_res, transport_leaked=final.leaked,
    )


@dataclass(eq=False)
class FluxSourceReport:
    x: np.ndarray
    target: np.ndarray           # (nu/2) F_z rho_0(x, 0)
    rate: np.ndarray             # pi_z(x, t1) / t1 from the full solver
    transport_rate: np.ndarray
    residual: float              # L2-relative, full solver
    transport_residual: float
    t1: float


def flux_source_check(axis_field: AxisField, nu: float, mass: float, sigma: float,
                      x0: float, t1: float, dt: float, p_max: float, n_p: int,
                      transport_dt: float, monitor=None) -> FluxSourceReport:
    """Early-time spin-z momentum density rate against its local source."""
    per, _ = sample_steps(t1, dt, t1)
    solver = LindbladSolver(axis_field, nu, mass, dt)
    geo = solver.geometry(0.0)
    state = DensityMatrix.unpolarized(axis_field.grid, sigma, x0, 0.0)
    target = nu / 2 * geo.force[:, 2] * state.position_density()
    evolved = solver.run(state, per, callback=monitor)
    rate = evolved.momentum_density(component=3) / t1

    tper, _ = sample_steps(t1, transport_dt, t1)
    momenta = momentum_grid(p_max, n_p)
    transport = SemiclassicalSolver(axis_field, nu, mass, transport_dt, momenta)
    pstate = PhaseSpaceState.gaussian(axis_field.grid, momenta, sigma, x0, 0.0)
    out = transport.run(pstate, tper)
    t_rate = out.momentum_density(component=3) / t1

    scale = float(np.linalg.norm(target))
    return FluxSourceReport(
        x=axis_field.grid.x.copy(), target=target, rate=rate, transport_rate=t_rate,
        residual=float(np.linalg.norm(rate - target)) / scale,
        transport_residual=float(np.linalg.norm(t_rate - target)) / scale,
        t1=t1,
    )


@dataclass(eq=False)
class TransverseDecayReport:
    times: np.ndarray
    transverse: np.ndarray       # spin component orthogonal to the fixed axis
    fitted_rate: float
    mean_p_drift: float
    p_sq_drift: float
    density_defect: float        # max |rho(T) - free rho(T)|


def transverse_decay(axis_field: AxisField, nu: float, mass: float, sigma: float,
                     x0: float, p0: float, T: float, dt: float, sample_dt: float,
                     monitor=None) -> TransverseDecayReport:
    """Uniform-axis control: transverse spin decays at rate nu while the
    spatial kernel evolves exactly freely (no force, no heating)."""
    if axis_field.kind != "constant" or not axis_field.static:
        raise ConfigError("transverse_decay expects a static constant axis field")
    per, count = sample_steps(T, dt, sample_dt)
    n = axis_field.base_n[0]
    # any unit vector orthogonal to the axis
    trial = np.array([0.0, 0.0, 1.0]) if abs(n[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    e1 = np.cross(n, trial)
    e1 /= np.linalg.norm(e1)
    spinor = bloch_spinor(e1)

    solver = LindbladSolver(axis_field, nu, mass, dt)
    state = DensityMatrix.pure(axis_field.grid, sigma, x0, p0, spinor)
    p_sq0 = state.momentum_moment(2)
    p10 = state.momentum_moment(1)
    times = np.zeros(count + 1)
    transverse = np.zeros(count + 1)
    drift_p = [0.0]
    drift_p2 = [0.0]
    dx = axis_field.grid.dx
    transverse[0] = float(np.sum(state.spin_density() @ e1) * dx)
    holder = {"i": 0}

    def sampler(step, t, current):
        if step % per == 0:
            i = holder["i"] = holder["i"] + 1
            times[i] = t
            transverse[i] = float(np.sum(current.spin_density() @ e1) * dx)
            drift_p[0] = max(drift_p[0], abs(current.momentum_moment(1) - p10))
            drift_p2[0] = max(drift_p2[0], abs(current.momentum_moment(2) - p_sq0))

    final = solver.run(state, per * count, callback=_merge_callbacks(sampler, monitor))

    psi_free = free_flight(gaussian_envelope(axis_field.grid, sigma, x0, p0)[:, None]
                           * np.array([1.0, 0.0]), axis_field.grid, mass, T)
    free_density = np.sum(np.abs(psi_free) ** 2, axis=1)
    density_defect = float(np.abs(final.position_density() - free_density).max())

    slope, _ = np.linalg.lstsq(
        np.stack([times, np.ones_like(times)], axis=1),
        np.log(np.abs(transverse)), rcond=None)[0]
    return TransverseDecayReport(
        times=times, transverse=transverse, fitted_rate=float(-slope),
        mean_p_drift=drift_p[0], p_sq_drift=drift_p2[0], density_defect=density_defect,
    )


@dataclass(eq=False)
class FreeSpreadingReport:
    times: np.ndarray
    variance: np.ndarray
    analytic: np.ndarray
    max_rel_error: float
    mean_p: np.ndarray
    purity: np.ndarray


def free_spreading(axis_field: AxisField, mass: float, sigma: float, x0: float,
                   p0: float, T: float, dt: float, sample_dt: float,
                   monitor=None) -> FreeSpreadingReport:
    """nu = 0 control: Var(x, t) = sigma^2 + t^2 / (4 m^2 sigma^2) exactly."""
    per, count = sample_steps(T, dt, sample_dt)
    solver = LindbladSolver(axis_field, 0.0, mass, dt)
    state = DensityMatrix.pure(axis_field.grid, sigma, x0, p0, [1.0, 0.0])
    times = np.zeros(count + 1)
    variance = np.zeros(count + 1)
    mean_p = np.zeros(count + 1)
    purity = np.zeros(count + 1)
    variance[0] = position_variance(state)
    mean_p[0] = state.momentum_moment(1)
    purity[0] = state.purity()
    holder = {"i": 0}

    def sampler(step, t, current):
        if step % per == 0:
            i = holder["i"] = holder["i"] + 1
            times[i] = t
            variance[i] = position_variance(current)
            mean_p[i] = current.momentum_moment(1)
            purity[i] = current.purity()

    solver.run(state, per * count, callback=_merge_callbacks(sampler, monitor))
    analytic = sigma**2 + times**2 / (4 * mass**2 * sigma**2)
    rel = np.abs(variance - analytic) / analytic
    return FreeSpreadingReport(times=times, variance=variance, analytic=analytic,
                               max_rel_error=float(rel.max()), mean_p=mean_p, purity=purity)
