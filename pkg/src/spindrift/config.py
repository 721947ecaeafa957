"""Run configuration: flat INI-style sections of key = value pairs.

Grammar (defaults in parentheses; * marks required keys):

    [scenario]      kind* = constant_field | force_balance | spin_separation |
                            diffusion | flux_source | gauge_limit | survey
    [grid]          n (128), length (32.0)
    [physics]       mass (1.0), nu (1.0)
    [field]         kind* = constant | helix | domain_wall | sampled;
                    direction (0 0 1) for constant; q* for helix;
                    center*, width* for domain_wall; path* for sampled;
                    rotation_axis, rotation_rate (0) for rigid rotation
    [initial]       kind (pure) = pure | unpolarized; sigma (2.0),
                    x0 (length/2), p0 (0.0), bloch (0 0 1, pure only)
    [time]          horizon (2.0), cadence (horizon/100), dt (policy; see below)
    [solvers]       enabled (lindblad) = subset of lindblad trajectories
                    semiclassical gauge, or: all
    [trajectories]  n_traj (200), base_seed (1), jump_log (false)
    [semiclassical] p_max (2.5), n_p (64), dt (cadence/2)
    [gauge]         nu_values (4 8 16 32 64), sample_dt (cadence)
    [output]        directory (unset), snapshot_stride (samples/50, >= 1)

Unknown sections or keys are hard errors naming the offender.  When [time] dt
is omitted it defaults to min(0.1/nu, 0.1 m dx^2, horizon/1000), shrunk to
divide the cadence exactly; an explicit dt overrides the policy but must
still divide the cadence.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .fields import AxisField, bloch_spinor
from .semiclassical import SemiclassicalSolver, check_amplification_budget, momentum_grid
from .grid import SpatialGrid

SCENARIOS = (
    "constant_field",
    "force_balance",
    "spin_separation",
    "diffusion",
    "flux_source",
    "gauge_limit",
    "survey",
)
SOLVERS = ("lindblad", "trajectories", "semiclassical", "gauge")

# section -> key -> (coercion kind, default); None default means required
# when the section applies
_SCHEMA = {
    "scenario": {"kind": ("word", None)},
    "grid": {"n": ("int", 128), "length": ("float", 32.0)},
    "physics": {"mass": ("float", 1.0), "nu": ("float", 1.0)},
    "field": {
        "kind": ("word", None),
        "q": ("float", None),
        "direction": ("floats", (0.0, 0.0, 1.0)),
        "center": ("float", None),
        "width": ("float", None),
        "path": ("word", None),
        "rotation_axis": ("floats", None),
        "rotation_rate": ("float", 0.0),
    },
    "initial": {
        "kind": ("word", "pure"),
        "sigma": ("float", 2.0),
        "x0": ("float", None),
        "p0": ("float", 0.0),
        "bloch": ("floats", (0.0, 0.0, 1.0)),
    },
    "time": {"horizon": ("float", 2.0), "dt": ("float", None), "cadence": ("float", None)},
    "solvers": {"enabled": ("words", ("lindblad",))},
    "trajectories": {
        "n_traj": ("int", 200),
        "base_seed": ("int", 1),
        "jump_log": ("bool", False),
    },
    "semiclassical": {"p_max": ("float", 2.5), "n_p": ("int", 64), "dt": ("float", None)},
    "gauge": {
        "nu_values": ("floats", (4.0, 8.0, 16.0, 32.0, 64.0)),
        "sample_dt": ("float", None),
    },
    "output": {"directory": ("word", None), "snapshot_stride": ("int", None)},
}

_FIELD_KEYS = {
    "constant": ("direction",),
    "helix": ("q",),
    "domain_wall": ("center", "width"),
    "sampled": ("path",),
}


@dataclass(eq=False)
class RunConfig:
    """A fully validated run: grids and fields are already built."""

    scenario: str
    grid: SpatialGrid
    field: AxisField
    mass: float
    nu: float
    initial_kind: str
    sigma: float
    x0: float
    p0: float
    bloch: np.ndarray
    horizon: float
    dt: float
    cadence: float
    solvers: tuple
    n_traj: int
    base_seed: int
    jump_log: bool
    p_max: float
    n_p: int
    transport_dt: float
    nu_values: tuple
    gauge_sample_dt: float
    out_dir: str | None
    snapshot_stride: int
    source: Path | None

    @property
    def samples(self) -> int:
        return int(round(self.horizon / self.cadence))

    @property
    def steps_per_sample(self) -> int:
        return int(round(self.cadence / self.dt))

    def spinor(self) -> np.ndarray:
        return bloch_spinor(self.bloch)

    def describe(self) -> str:
        lines = [
            f"scenario        {self.scenario}",
            f"grid            n = {self.grid.n}, length = {self.grid.length:g}",
            f"field           {self.field.kind}"
            + (f", q = {self.field.params['q']:g}" if self.field.kind == "helix" else ""),
            f"physics         mass = {self.mass:g}, nu = {self.nu:g}",
            f"initial         {self.initial_kind}, sigma = {self.sigma:g}, "
            f"x0 = {self.x0:g}, p0 = {self.p0:g}",
            f"time            horizon = {self.horizon:g}, dt = {self.dt:g}, "
            f"cadence = {self.cadence:g} ({self.samples} samples)",
            f"solvers         {' '.join(self.solvers)}",
        ]
        if "trajectories" in self.solvers:
            lines.append(f"trajectories    n_traj = {self.n_traj}, base_seed = {self.base_seed}")
        if "semiclassical" in self.solvers:
            lines.append(
                f"semiclassical   p_max = {self.p_max:g}, n_p = {self.n_p}, dt = {self.transport_dt:g}"
            )
        if "gauge" in self.solvers:
            lines.append(
                f"gauge           nu_values = {' '.join(f'{v:g}' for v in self.nu_values)}, "
                f"sample_dt = {self.gauge_sample_dt:g}"
            )
        return "\n".join(lines)


def _coerce(kind: str, raw: str, where: str):
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        if kind == "bool":
            lowered = raw.strip().lower()
            if lowered in ("true", "yes", "on", "1"):
                return True
            if lowered in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if kind == "floats":
            return tuple(float(tok) for tok in raw.split())
        if kind == "words":
            return tuple(raw.split())
        return raw.strip()
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {kind}") from None


def _divides(small: float, big: float) -> bool:
    ratio = big / small
    return abs(ratio - round(ratio)) < 1e-9 and round(ratio) >= 1


def parse_config(path, overrides=None) -> RunConfig:
    """Parse and validate a run configuration file.

    `overrides` maps (section, key) pairs to raw strings that replace the
    file's values before validation; the command line uses it for --solver,
    --seed, and --nu-list.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"configuration file not found: {path}")
    parser = configparser.ConfigParser(
        interpolation=None, inline_comment_prefixes=("#", ";"), strict=True
    )
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except configparser.ParsingError as err:
        raise ConfigError(str(err)) from None
    except configparser.Error as err:
        raise ConfigError(f"{path}: {err}") from None

    values = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(
                f"{path}: unknown section [{section}]; known sections: "
                + ", ".join(_SCHEMA)
            )
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigError(
                    f"{path}: unknown key '{key}' in [{section}]; known keys: "
                    + ", ".join(_SCHEMA[section])
                )
            kind, _ = _SCHEMA[section][key]
            values[(section, key)] = _coerce(kind, raw, f"[{section}] {key}")
    for (section, key), raw in (overrides or {}).items():
        if section not in _SCHEMA or key not in _SCHEMA[section]:
            raise ConfigError(f"unknown override [{section}] {key}")
        kind, _ = _SCHEMA[section][key]
        values[(section, key)] = _coerce(kind, raw, f"[{section}] {key}")

    def get(section, key):
        if (section, key) in values:
            return values[(section, key)]
        return _SCHEMA[section][key][1]

    def require(section, key):
        value = get(section, key)
        if value is None:
            raise ConfigError(f"{path}: missing required key '{key}' in [{section}]")
        return value

    scenario = require("scenario", "kind")
    if scenario not in SCENARIOS:
        raise ConfigError(
            f"scenario kind = {scenario!r}: must be one of " + ", ".join(SCENARIOS)
        )

    grid = SpatialGrid(get("grid", "n"), get("grid", "length"))

    mass = get("physics", "mass")
    if mass <= 0:
        raise ConfigError(f"mass = {mass}: must be > 0")
    nu = get("physics", "nu")
    if nu < 0:
        raise ConfigError(f"nu = {nu}: decoherence rate must be >= 0")

    field = _build_field(parser, values, get, require, grid)

    initial_kind = get("initial", "kind")
    if initial_kind not in ("pure", "unpolarized"):
        raise ConfigError(f"initial kind = {initial_kind!r}: must be pure or unpolarized")
    sigma = get("initial", "sigma")
    if sigma < 3 * grid.dx:
        raise ConfigError(
            f"sigma = {sigma}: packet width must be at least 3 grid spacings "
            f"(3 dx = {3 * grid.dx:g})"
        )
    boundary_tail = math.exp(-((grid.length / 2) ** 2) / (2 * sigma**2))
    if boundary_tail > 1e-12:
        max_sigma = grid.length / (2 * math.sqrt(2 * math.log(1e12)))
        raise ConfigError(
            f"sigma = {sigma}: density tail at the domain edge is {boundary_tail:.2e} "
            f"> 1e-12 (need sigma <= {max_sigma:.4g} on length {grid.length:g})"
        )
    x0 = get("initial", "x0")
    x0 = grid.length / 2 if x0 is None else x0
    if not 0 <= x0 < grid.length:
        raise ConfigError(f"x0 = {x0}: must lie in [0, {grid.length:g})")
    p0 = get("initial", "p0")
    bloch = np.asarray(get("initial", "bloch"), dtype=float)
    if initial_kind == "pure":
        bloch_spinor(bloch)  # validates shape and unit length

    horizon = get("time", "horizon")
    if horizon <= 0:
        raise ConfigError(f"horizon = {horizon}: must be > 0")
    cadence = get("time", "cadence")
    cadence = horizon / 100 if cadence is None else cadence
    if cadence <= 0 or not _divides(cadence, horizon):
        raise ConfigError(
            f"cadence = {cadence}: must be positive and divide the horizon {horizon:g}"
        )
    if round(horizon / cadence) < 2:
        raise ConfigError(
            f"cadence = {cadence}: too coarse for centered differences "
            f"(need at least 2 samples over horizon {horizon:g})"
        )
    dt = get("time", "dt")
    if dt is None:
        policy = min(
            0.1 / nu if nu > 0 else math.inf, 0.1 * mass * grid.dx**2, horizon / 1000
        )
        dt = cadence / math.ceil(cadence / policy - 1e-12)
    if dt <= 0 or not _divides(dt, cadence):
        raise ConfigError(f"dt = {dt}: must be positive and divide the cadence {cadence:g}")

    enabled = get("solvers", "enabled")
    if enabled == ("all",):
        enabled = SOLVERS
    unknown = [s for s in enabled if s not in SOLVERS]
    if unknown or not enabled:
        raise ConfigError(
            f"solvers enabled = {' '.join(enabled) or '(empty)'}: must be 'all' or a "
            "subset of " + " ".join(SOLVERS)
        )
    solvers = tuple(s for s in SOLVERS if s in enabled)

    n_traj = get("trajectories", "n_traj")
    base_seed = get("trajectories", "base_seed")
    jump_log = get("trajectories", "jump_log")
    if "trajectories" in solvers:
        if n_traj < 2:
            raise ConfigError(f"n_traj = {n_traj}: need at least 2 trajectories")
        if base_seed < 0:
            raise ConfigError(f"base_seed = {base_seed}: must be >= 0")

    p_max = get("semiclassical", "p_max")
    n_p = get("semiclassical", "n_p")
    transport_dt = get("semiclassical", "dt")
    transport_dt = cadence / 2 if transport_dt is None else transport_dt
    if "semiclassical" in solvers:
        if not _divides(transport_dt, cadence):
            raise ConfigError(
                f"semiclassical dt = {transport_dt}: must divide the cadence {cadence:g}"
            )
        momenta = momentum_grid(p_max, n_p)  # validates the window
        # constructing the solver applies the stability bound; then check the
        # whole-run amplification budget
        SemiclassicalSolver(field, nu, mass, transport_dt, momenta)
        dp = float(momenta[1] - momenta[0])
        g_max = float(np.sum(field.base_dn**2, axis=1).max())
        check_amplification_budget(nu, g_max, horizon, dp)

    nu_values = tuple(get("gauge", "nu_values"))
    gauge_sample_dt = get("gauge", "sample_dt")
    gauge_sample_dt = cadence if gauge_sample_dt is None else gauge_sample_dt
    if any(b <= a for a, b in zip(nu_values, nu_values[1:])) or not nu_values:
        raise ConfigError(
            "nu_values = " + " ".join(f"{v:g}" for v in nu_values)
            + ": must be nonempty and strictly ascending"
        )
    if any(v < 0 for v in nu_values):
        raise ConfigError("nu_values: decoherence rates must be >= 0")
    if "gauge" in solvers:
        if not _divides(gauge_sample_dt, horizon):
            raise ConfigError(
                f"gauge sample_dt = {gauge_sample_dt}: must divide the horizon {horizon:g}"
            )
        if not field.static:
            raise ConfigError("gauge solver requires a static field")

    out_dir = get("output", "directory")
    snapshot_stride = get("output", "snapshot_stride")
    if snapshot_stride is None:
        snapshot_stride = max(1, int(round(horizon / cadence)) // 50)
    if snapshot_stride < 1:
        raise ConfigError(f"snapshot_stride = {snapshot_stride}: must be >= 1")

    _check_scenario(scenario, field, nu, cadence, solvers, initial_kind)

    return RunConfig(
        scenario=scenario, grid=grid, field=field, mass=mass, nu=nu,
        initial_kind=initial_kind, sigma=sigma, x0=x0, p0=p0, bloch=bloch,
        horizon=horizon, dt=dt, cadence=cadence, solvers=solvers,
        n_traj=n_traj, base_seed=base_seed, jump_log=jump_log,
        p_max=p_max, n_p=n_p, transport_dt=transport_dt,
        nu_values=nu_values, gauge_sample_dt=gauge_sample_dt,
        out_dir=out_dir, snapshot_stride=snapshot_stride, source=path,
    )


def _build_field(parser, values, get, require, grid) -> AxisField:
    kind = require("field", "kind")
    if kind not in _FIELD_KEYS:
        raise ConfigError(
            f"field kind = {kind!r}: must be one of " + ", ".join(_FIELD_KEYS)
        )
    needed = _FIELD_KEYS[kind]
    for section_key in values:
        section, key = section_key
        if (
            section == "field"
            and key not in needed
            and key not in ("kind", "rotation_axis", "rotation_rate")
        ):
            raise ConfigError(f"field key '{key}' does not apply to kind = {kind}")
    if kind == "constant":
        field = AxisField.constant(grid, get("field", "direction"))
    elif kind == "helix":
        field = AxisField.helix(grid, require("field", "q"))
    elif kind == "domain_wall":
        field = AxisField.domain_wall(grid, require("field", "center"), require("field", "width"))
    else:
        field = AxisField.sampled(grid, require("field", "path"))
    axis = get("field", "rotation_axis")
    rate = get("field", "rotation_rate")
    if axis is not None or rate != 0.0:
        if axis is None:
            raise ConfigError("rotation_rate without rotation_axis")
        field = field.rotating(axis, rate)
    return field


def _check_scenario(scenario, field, nu, cadence, solvers, initial_kind) -> None:
    helix_scenarios = ("force_balance", "spin_separation", "diffusion",
                       "flux_source", "gauge_limit")
    if scenario in helix_scenarios and field.kind != "helix":
        raise ConfigError(f"scenario {scenario} requires a helix field, got {field.kind}")
    if scenario == "force_balance" and initial_kind != "pure":
        raise ConfigError("scenario force_balance requires a pure initial state")
    if scenario == "constant_field" and field.kind != "constant":
        raise ConfigError(f"scenario constant_field requires a constant field, got {field.kind}")
    if scenario == "constant_field" and nu <= 0:
        raise ConfigError("scenario constant_field measures the decay rate and needs nu > 0")
    if scenario == "flux_source" and nu * cadence > 0.05 + 1e-12:
        raise ConfigError(
            f"flux_source scenario reads the rate at t1 = cadence = {cadence:g}, "
            f"which needs nu * cadence <= 0.05 (got {nu * cadence:g})"
        )
    if scenario == "gauge_limit" and "gauge" not in solvers:
        raise ConfigError("scenario gauge_limit requires the gauge solver")
    if scenario != "survey" and "lindblad" not in solvers:
        raise ConfigError(f"scenario {scenario} requires the lindblad solver")
