"""Run orchestration: execute the enabled solvers for a validated
configuration, write the artifact set into a run directory, and evaluate the
scenario's checks.

Artifacts by solver (all CSV, fixed headers, 17 significant digits):

* lindblad:       observables.csv (trace, purity, moments, spin totals,
                  force integral per sample), residuals.csv (centered-
                  difference momentum balance), snapshots.csv
                  (t, x, rho0, rho_x, rho_y, rho_z at strided sample times)
* semiclassical:  transport_moments.csv, phase_space.csv
                  (t, x, p, rho0, rho_x, rho_y, rho_z at a few times)
* trajectories:   trajectories.csv (ensemble means with standard errors),
                  jumps.csv (trajectory, t, outcome) when jump_log is set
* gauge:          sectors_effective.csv (t, sector, norm, mean_x, p_kinetic),
                  convergence.csv (nu, delta, coherence_floor),
                  gauge_coherence.csv (nu, t, coherence)

Scenario checks are evaluated from dedicated diagnostic runs; each check
records its measured value, tolerance, and pass flag in report.json, and the
manifest lists every produced file with the configuration hash and seed.
"""

from __future__ import annotations

import shutil
from pathlib import Path

import numpy as np

from .config import RunConfig
from .diagnostics import (
    ConservationMonitor,
    diffusion_study,
    flux_source_check,
    force_balance,
    force_integral,
    free_spreading,
    spin_separation,
    transverse_decay,
)
from .errors import NumericsError
from .gauge import EffectiveSectorSolver, convergence_study
from .io import sha256_file, write_csv, write_json
from .lindblad import DensityMatrix, LindbladSolver
from .semiclassical import PhaseSpaceState, SemiclassicalSolver, momentum_grid
from .trajectories import MixedSpinInitial, ensemble_average, pure_state_spinor

_LEAK_LIMIT = 1e-8


def _check(name: str, value: float, tolerance: float, passed: bool, detail=None) -> dict:
    entry = {"name": name, "value": float(value), "tolerance": float(tolerance),
             "passed": bool(passed)}
    if detail:
        entry["detail"] = detail
    return entry


def _wrapped_mean(density: np.ndarray, grid) -> float:
    norm = density.sum() * grid.dx
    peak = float(grid.x[int(np.argmax(density))])
    d = grid.wrapped_displacement(peak)
    return (peak + float(np.sum(d * density) * grid.dx) / norm) % grid.length


def initial_density_matrix(config: RunConfig) -> DensityMatrix:
    if config.initial_kind == "pure":
        return DensityMatrix.pure(config.grid, config.sigma, config.x0, config.p0,
                                  config.spinor())
    return DensityMatrix.unpolarized(config.grid, config.sigma, config.x0, config.p0)


def _lindblad_pass(config: RunConfig, monitor, run_dir: Path, artifacts: dict) -> dict:
    solver = LindbladSolver(config.field, config.nu, config.mass, config.dt)
    state = initial_density_matrix(config)
    per, count = config.steps_per_sample, config.samples
    grid = config.grid

    series = {key: np.zeros(count + 1) for key in
              ("t", "trace", "purity", "mean_x", "mean_p", "p_squared",
               "spin_x", "spin_y", "spin_z", "corr_pz", "force")}
    snap_rows = {key: [] for key in ("t", "x", "rho0", "rho_x", "rho_y", "rho_z")}

    def record(i, t, current):
        spin = current.spin_density().sum(axis=0) * grid.dx
        series["t"][i] = t
        series["trace"][i] = current.trace()
        series["purity"][i] = current.purity()
        series["mean_x"][i] = current.mean_position()
        series["mean_p"][i] = current.momentum_moment(1)
        series["p_squared"][i] = current.momentum_moment(2)
        series["spin_x"][i], series["spin_y"][i], series["spin_z"][i] = spin
        series["corr_pz"][i] = current.momentum_moment(1, component=3)
        series["force"][i] = force_integral(current, solver.geometry(t), config.nu)
        if i % config.snapshot_stride == 0:
            sd = current.spin_density()
            snap_rows["t"].append(np.full(grid.n, t))
            snap_rows["x"].append(grid.x.copy())
            snap_rows["rho0"].append(current.position_density())
            for j, key in enumerate(("rho_x", "rho_y", "rho_z")):
                snap_rows[key].append(sd[:, j])

    record(0, 0.0, state)
    holder = {"i": 0}

    def sampler(step, t, current):
        if monitor is not None:
            monitor(step, t, current)
        if step % per == 0:
            holder["i"] += 1
            record(holder["i"], t, current)

    solver.run(state, per * count, callback=sampler)

    write_csv(run_dir / "observables.csv", series)
    artifacts["observables"] = "observables.csv"
    t, mean_p, force = series["t"], series["mean_p"], series["force"]
    dpdt = (mean_p[2:] - mean_p[:-2]) / (t[2:] - t[:-2])
    write_csv(run_dir / "residuals.csv", {
        "t": t[1:-1], "dpdt": dpdt, "force": force[1:-1],
        "residual": np.abs(dpdt - force[1:-1]),
    })
    artifacts["residuals"] = "residuals.csv"
    write_csv(run_dir / "snapshots.csv", {k: np.concatenate(v) for k, v in snap_rows.items()})
    artifacts["snapshots"] = "snapshots.csv"
    return series


def _transport_pass(config: RunConfig, run_dir: Path, artifacts: dict) -> dict:
    momenta = momentum_grid(config.p_max, config.n_p)
    solver = SemiclassicalSolver(config.field, config.nu, config.mass,
                                 config.transport_dt, momenta)
    bloch = config.bloch if config.initial_kind == "pure" else None
    state = PhaseSpaceState.gaussian(config.grid, momenta, config.sigma,
                                     config.x0, config.p0, bloch=bloch)
    per = int(round(config.cadence / config.transport_dt))
    count = config.samples
    grid = config.grid

    series = {key: np.zeros(count + 1) for key in
              ("t", "mass", "mean_p", "p_squared", "corr_pz", "leaked")}
    phase_stride = max(1, count // 4)
    snap_rows = {key: [] for key in ("t", "x", "p", "rho0", "rho_x", "rho_y", "rho_z")}
    xx = np.repeat(grid.x, momenta.size)
    pp = np.tile(momenta, grid.n)

    def record(i, t, current):
        series["t"][i] = t
        series["mass"][i] = current.mass()
        series["mean_p"][i] = current.p_moment(1)
        series["p_squared"][i] = current.p_moment(2)
        series["corr_pz"][i] = current.p_moment(1, component=3)
        series["leaked"][i] = current.leaked
        if i % phase_stride == 0:
            snap_rows["t"].append(np.full(xx.size, t))
            snap_rows["x"].append(xx)
            snap_rows["p"].append(pp)
            snap_rows["rho0"].append(current.w0.ravel())
            for j, key in enumerate(("rho_x", "rho_y", "rho_z")):
                snap_rows[key].append(current.wvec[:, :, j].ravel())

    record(0, 0.0, state)
    holder = {"i": 0}

    def sampler(step, t, current):
        if step % per == 0:
            holder["i"] += 1
            record(holder["i"], t, current)

    final = solver.run(state, per * count, callback=sampler)
    if abs(final.leaked) > _LEAK_LIMIT:
        raise NumericsError(
            f"momentum-boundary leakage {final.leaked:.3e} exceeds {_LEAK_LIMIT:g}; "
            "widen p_max"
        )

    write_csv(run_dir / "transport_moments.csv", series)
    artifacts["transport_moments"] = "transport_moments.csv"
    write_csv(run_dir / "phase_space.csv", {k: np.concatenate(v) for k, v in snap_rows.items()})
    artifacts["phase_space"] = "phase_space.csv"
    return series


def _trajectory_pass(config: RunConfig, run_dir: Path, artifacts: dict,
                     n_workers, keep_jumps: bool):
    geometry = LindbladSolver(config.field, config.nu, config.mass, config.dt).geometry(0.0)
    if config.initial_kind == "pure":
        initial = pure_state_spinor(config.grid, config.sigma, config.x0,
                                    config.p0, config.spinor())
    else:
        initial = MixedSpinInitial(config.grid, config.sigma, config.x0, config.p0)
    result = ensemble_average(
        initial, geometry, config.nu, config.horizon, config.cadence,
        config.n_traj, config.base_seed, n_workers=n_workers,
        keep_jump_log=keep_jumps or config.jump_log,
    )
    write_csv(run_dir / "trajectories.csv", {
        "t": result.times,
        "mean_p": result.mean_p, "mean_p_se": result.mean_p_se,
        "mean_p_sq": result.mean_p_sq, "mean_p_sq_se": result.mean_p_sq_se,
        "spin_x": result.spin_total[:, 0], "spin_x_se": result.spin_total_se[:, 0],
        "spin_y": result.spin_total[:, 1], "spin_y_se": result.spin_total_se[:, 1],
        "spin_z": result.spin_total[:, 2], "spin_z_se": result.spin_total_se[:, 2],
    })
    artifacts["trajectories"] = "trajectories.csv"
    if config.jump_log:
        log = result.jump_log
        write_csv(run_dir / "jumps.csv", {
            "trajectory": np.array([e[0] for e in log], dtype=float),
            "t": np.array([e[1] for e in log]),
            "outcome": np.array([e[2] for e in log], dtype=float),
        })
        artifacts["jumps"] = "jumps.csv"
    return result


def _gauge_pass(config: RunConfig, run_dir: Path, artifacts: dict):
    grid = config.grid
    rows = {key: [] for key in ("t", "sector", "norm", "mean_x", "p_kinetic")}
    per, count = config.steps_per_sample, config.samples
    for sector in (1, -1):
        solver = EffectiveSectorSolver(config.field, sector, config.mass, config.dt)
        psi = solver.initial_state(config.sigma, config.x0, config.p0)

        def record(t, psi):
            density = np.abs(psi) ** 2
            norm = float(density.sum() * grid.dx)
            if abs(norm - 1.0) > 1e-10:
                raise NumericsError(f"sector norm drift {norm - 1.0:.3e} at t = {t:.6g}")
            rows["t"].append(t)
            rows["sector"].append(float(sector))
            rows["norm"].append(norm)
            rows["mean_x"].append(_wrapped_mean(density, grid))
            rows["p_kinetic"].append(solver.kinetic_momentum(psi))

        record(0.0, psi)
        for i in range(count):
            psi = solver.run(psi, per)
            record((i + 1) * config.cadence, psi)
    write_csv(run_dir / "sectors_effective.csv", {k: np.array(v) for k, v in rows.items()})
    artifacts["sectors_effective"] = "sectors_effective.csv"

    study = convergence_study(config.field, config.mass, config.sigma, config.x0,
                              config.p0, config.horizon, config.nu_values,
                              sample_dt=config.gauge_sample_dt)
    write_csv(run_dir / "convergence.csv", {
        "nu": np.array(study.nu_values),
        "delta": np.array(study.deltas),
        "coherence_floor": np.array(study.floors),
    })
    artifacts["convergence"] = "convergence.csv"
    write_csv(run_dir / "gauge_coherence.csv", {
        "nu": np.concatenate([np.full(r.times.size, r.nu) for r in study.records]),
        "t": np.concatenate([r.times for r in study.records]),
        "coherence": np.concatenate([r.coherence for r in study.records]),
    })
    artifacts["gauge_coherence"] = "gauge_coherence.csv"
    return study


def _relative(value: float, target: float) -> float:
    return abs(value / target - 1.0)


def _scenario_checks(config: RunConfig, monitor, run_dir: Path, artifacts: dict,
                     lindblad_series, ensemble) -> tuple[list, dict]:
    checks, derived = [], {}
    f, nu = config.field, config.nu

    if config.scenario == "force_balance":
        q = f.params["q"]
        rep = force_balance(f, nu, config.mass, config.sigma, config.x0, config.p0,
                            config.spinor(), config.horizon, config.dt,
                            config.cadence, monitor=monitor)
        write_csv(run_dir / "force_balance.csv", {
            "t": rep.times, "mean_p": rep.mean_p, "force": rep.force,
            "mirror_mean_p": rep.mirror_mean_p, "mirror_force": rep.mirror_force,
        })
        artifacts["force_balance"] = "force_balance.csv"
        target = nu * q / 2
        flip = max(np.abs(rep.mirror_force + rep.force).max(),
                   np.abs(rep.mirror_mean_p + rep.mean_p).max())
        checks.append(_check("force_residual", rep.max_residual, 1e-3,
                             rep.max_residual < 1e-3))
        checks.append(_check("early_force", _relative(rep.early_force, target), 0.02,
                             _relative(rep.early_force, target) < 0.02,
                             {"force": rep.early_force, "target": target}))
        checks.append(_check("mirror_antisymmetry", flip, 1e-8, flip < 1e-8))
        derived["force_residual"] = rep.max_residual
        derived["early_force"] = rep.early_force
        if ensemble is not None:
            lam = config.n_traj * nu * config.horizon
            jumps = len(ensemble.jump_log)
            pairs = (
                ("trajectory_mean_p", ensemble.mean_p, ensemble.mean_p_se,
                 lindblad_series["mean_p"]),
                ("trajectory_spin_z", ensemble.spin_total[:, 2],
                 ensemble.spin_total_se[:, 2], lindblad_series["spin_z"]),
            )
            for name, mean, se, reference in pairs:
                sigmas = np.abs(mean - reference) / (3 * se + 1e-12)
                value = float(sigmas.max())
                checks.append(_check(name, value, 1.0, value <= 1.0))
            jump_value = abs(jumps - lam) / (3 * np.sqrt(lam))
            checks.append(_check("trajectory_jump_count", jump_value, 1.0,
                                 jump_value <= 1.0,
                                 {"count": jumps, "expected": lam}))
            derived["jump_count"] = jumps

    elif config.scenario == "spin_separation":
        q = f.params["q"]
        rep = spin_separation(f, nu, config.mass, config.sigma, config.x0,
                              config.horizon, config.dt, config.cadence,
                              monitor=monitor)
        write_csv(run_dir / "sectors.csv", {
            "t": rep.times, "total_p": rep.total_p, "corr_pz": rep.correlator,
            "sector_p_plus": rep.sector_p[:, 0], "sector_p_minus": rep.sector_p[:, 1],
            "weight_plus": rep.sector_weights[:, 0],
            "weight_minus": rep.sector_weights[:, 1],
            "delta_p": rep.delta_p,
            "pointer_p_plus": rep.pointer_p[:, 0], "pointer_p_minus": rep.pointer_p[:, 1],
        })
        artifacts["sectors"] = "sectors.csv"
        target = nu * q / 2
        total = float(np.abs(rep.total_p).max())
        gap = float(rep.delta_p[1:].min())
        off = max(_relative(-rep.early_force_per_weight[0], target),
                  _relative(rep.early_force_per_weight[1], target))
        checks.append(_check("zero_total_momentum", total, 1e-8, total < 1e-8))
        checks.append(_check("sector_gap_positive", gap, 0.0, gap > 0.0))
        checks.append(_check("early_sector_forces", off, 0.05, off < 0.05,
                             {"per_weight": list(rep.early_force_per_weight),
                              "target": target}))
        derived["separation_rate"] = float((rep.delta_p[1] - rep.delta_p[0]) / rep.times[1])
        derived["final_gap"] = float(rep.delta_p[-1])

    elif config.scenario == "diffusion":
        q = f.params["q"]
        rep = diffusion_study(f, nu, config.mass, config.sigma, config.x0,
                              config.horizon, config.dt, config.cadence,
                              config.p_max, config.n_p, config.transport_dt,
                              monitor=monitor)
        if abs(rep.transport_leaked) > _LEAK_LIMIT:
            raise NumericsError(
                f"momentum-boundary leakage {rep.transport_leaked:.3e} exceeds "
                f"{_LEAK_LIMIT:g}; widen p_max"
            )
        write_csv(run_dir / "heating.csv", {
            "t": rep.times, "p_squared": rep.p_sq, "corr_pz": rep.correlator,
        })
        artifacts["heating"] = "heating.csv"
        target = nu * q**2 / 2
        checks.append(_check("heating_rate", _relative(rep.rate, target), 0.10,
                             _relative(rep.rate, target) < 0.10,
                             {"rate": rep.rate, "target": target}))
        checks.append(_check("transport_heating_rate",
                             _relative(rep.transport_rate, target), 0.02,
                             _relative(rep.transport_rate, target) < 0.02,
                             {"rate": rep.transport_rate, "target": target}))
        derived.update(diffusion_rate=rep.rate, transport_diffusion_rate=rep.transport_rate,
                       fit_residual=rep.fit_residual, leaked=rep.transport_leaked)

    elif config.scenario == "flux_source":
        rep = flux_source_check(f, nu, config.mass, config.sigma, config.x0,
                                config.cadence, config.dt, config.p_max,
                                config.n_p, config.transport_dt, monitor=monitor)
        write_csv(run_dir / "flux_profile.csv", {
            "x": rep.x, "target": rep.target, "rate": rep.rate,
            "transport_rate": rep.transport_rate,
        })
        artifacts["flux_profile"] = "flux_profile.csv"
        checks.append(_check("flux_residual", rep.residual, 0.05, rep.residual < 0.05))
        checks.append(_check("transport_flux_residual", rep.transport_residual, 0.05,
                             rep.transport_residual < 0.05))
        derived.update(flux_residual=rep.residual,
                       transport_flux_residual=rep.transport_residual)

    elif config.scenario == "constant_field":
        rep = transverse_decay(f, nu, config.mass, config.sigma, config.x0,
                               config.p0, config.horizon, config.dt,
                               config.cadence, monitor=monitor)
        write_csv(run_dir / "decay.csv", {"t": rep.times, "transverse": rep.transverse})
        artifacts["decay"] = "decay.csv"
        spread = free_spreading(f, config.mass, config.sigma, config.x0, config.p0,
                                config.horizon, config.dt, config.cadence)
        write_csv(run_dir / "spreading.csv", {
            "t": spread.times, "variance": spread.variance, "analytic": spread.analytic,
        })
        artifacts["spreading"] = "spreading.csv"
        force_peak = float(np.abs(lindblad_series["force"]).max())
        heat_drift = float(np.abs(lindblad_series["p_squared"]
                                  - lindblad_series["p_squared"][0]).max())
        checks.append(_check("transverse_rate", _relative(rep.fitted_rate, nu), 0.01,
                             _relative(rep.fitted_rate, nu) < 0.01,
                             {"rate": rep.fitted_rate, "target": nu}))
        checks.append(_check("zero_force", force_peak, 1e-10, force_peak < 1e-10))
        checks.append(_check("zero_heating", heat_drift, 1e-10, heat_drift < 1e-10))
        checks.append(_check("free_kernel", rep.density_defect, 1e-10,
                             rep.density_defect < 1e-10))
        checks.append(_check("free_spreading", spread.max_rel_error, 1e-6,
                             spread.max_rel_error < 1e-6))
        derived.update(transverse_rate=rep.fitted_rate,
                       spreading_error=spread.max_rel_error)

    return checks, derived


def execute_run(config: RunConfig, run_dir, n_workers=None) -> dict:
    """Run every enabled solver, write artifacts, and evaluate the scenario.

    Returns the report dictionary (also written as report.json).  Raises
    ConfigError / NumericsError for configuration and numerical aborts; check
    failures are recorded in the report, not raised.
    """
    from . import __version__

    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    artifacts = {}
    if config.source is not None:
        shutil.copyfile(config.source, run_dir / "config.cfg")
        artifacts["config"] = "config.cfg"
        config_hash = sha256_file(run_dir / "config.cfg")
    else:
        config_hash = None

    monitor = ConservationMonitor(config.dt)
    lindblad_series = None
    ensemble = None
    study = None

    if "lindblad" in config.solvers:
        lindblad_series = _lindblad_pass(config, monitor, run_dir, artifacts)
    if "semiclassical" in config.solvers:
        _transport_pass(config, run_dir, artifacts)
    if "trajectories" in config.solvers:
        ensemble = _trajectory_pass(
            config, run_dir, artifacts, n_workers,
            keep_jumps=config.scenario == "force_balance",
        )
    if "gauge" in config.solvers:
        study = _gauge_pass(config, run_dir, artifacts)

    checks, derived = _scenario_checks(config, monitor, run_dir, artifacts,
                                       lindblad_series, ensemble)

    if config.scenario == "gauge_limit":
        deltas = np.array(study.deltas)
        worst = float(np.diff(deltas).max())
        exponent = study.floor_exponent
        checks.append(_check("delta_monotone", worst, 0.0, worst < 0.0,
                             {"deltas": list(deltas)}))
        checks.append(_check("floor_exponent", abs(exponent + 1.0), 0.3,
                             abs(exponent + 1.0) <= 0.3,
                             {"exponent": exponent}))
        derived.update(deltas=list(deltas), floors=list(study.floors),
                       floor_exponent=exponent)

    conservation = monitor.summary()
    report = {
        "scenario": config.scenario,
        "passed": all(c["passed"] for c in checks),
        "checks": checks,
        "derived": derived,
        "conservation": conservation,
        "series": dict(artifacts),
        "provenance": {
            "config_sha256": config_hash,
            "base_seed": config.base_seed if "trajectories" in config.solvers else None,
            "version": __version__,
        },
    }
    write_json(run_dir / "report.json", report)
    artifacts["report"] = "report.json"
    write_json(run_dir / "manifest.json", {
        "scenario": config.scenario,
        "version": __version__,
        "config_sha256": config_hash,
        "base_seed": config.base_seed if "trajectories" in config.solvers else None,
        "passed": report["passed"],
        "artifacts": artifacts,
    })
    return report
