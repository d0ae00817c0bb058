"""Closed-loop simulation: 1 kHz plant, 200 Hz NMPC + INDI, wind and sensor noise."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .attitude import axis_angle, qmul, qnormalize
from .dynamics import NX, rk4_many
from .indi import IndiConfig, IndiController
from .nmpc import Nmpc, NmpcConfig, SolveStatus
from .observer import ForceObserver, ObserverConfig
from .reference import HoverReference, Lemniscate, MinJerkPath, Reference, load_waypoints
from .vehicle import PLATE_YAW_RATES, RotorCommand, VehicleParams, pack

CONTROL_DT = 0.005
SUBSTEPS = 5
PLANT_DT = CONTROL_DT / SUBSTEPS

LOG_COLUMNS = (
    ("t", "s"),
    ("px", "m"), ("py", "m"), ("pz", "m"),
    ("qw", "1"), ("qx", "1"), ("qy", "1"), ("qz", "1"),
    ("vx", "m/s"), ("vy", "m/s"), ("vz", "m/s"),
    ("wx", "rad/s"), ("wy", "rad/s"), ("wz", "rad/s"),
    ("px_ref", "m"), ("py_ref", "m"), ("pz_ref", "m"),
    ("vx_ref", "m/s"), ("vy_ref", "m/s"), ("vz_ref", "m/s"),
    ("u1", "N"), ("u2", "N"), ("u3", "N"),
    ("cost", "1"), ("kkt", "1"), ("sqp_iters", "1"),
    ("tau_hat_x", "N*m"), ("tau_hat_y", "N*m"), ("tau_hat_z", "N*m"),
    ("wind_x", "m/s"), ("wind_y", "m/s"), ("wind_z", "m/s"),
)
COL = {name: i for i, (name, _) in enumerate(LOG_COLUMNS)}


@dataclass(frozen=True)
class WindProfile:
    """Piecewise-constant airmass velocity with optional band-limited turbulence.

    ``steps`` is a sequence of ``(t_start, (vx, vy, vz))``; the last step whose
    start time has passed is active, zero before the first.
    """
    steps: tuple = ()
    turbulence_std: float = 0.0  # m/s per axis
    turbulence_hz: float = 1.0

    def __post_init__(self):
        steps = tuple(sorted((float(t), tuple(float(c) for c in v)) for t, v in self.steps))
        object.__setattr__(self, "steps", steps)
        if self.turbulence_std < 0:
            raise ValueError("turbulence_std must be non-negative")

    def mean(self, t: float) -> np.ndarray:
        out = np.zeros(3)
        for t0, v in self.steps:
            if t >= t0:
                out = np.array(v)
        return out

    __call__ = mean


def gust_step_profile(speed: float, t_on: float, direction=(1.0, 0.0, 0.0)) -> WindProfile:
    if speed < 0:
        raise ValueError("gust speed must be non-negative")
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    return WindProfile(((t_on, tuple(speed * d)),))


@dataclass(frozen=True)
class SensorNoise:
    position: float = 0.0  # m
    velocity: float = 0.0  # m/s
    attitude: float = 0.0  # rad, small random rotation
    rate: float = 0.0  # rad/s

    @property
    def active(self) -> bool:
        return any(v > 0 for v in (self.position, self.velocity, self.attitude, self.rate))


MILD_NOISE = SensorNoise(position=0.005, velocity=0.01, attitude=0.005, rate=0.02)


@dataclass(frozen=True)
class ReferenceSpec:
    """Generator id plus its keyword parameters."""
    kind: str = "hover"
    options: dict = field(default_factory=dict)

    def build(self, params: VehicleParams) -> Reference:
        opts = dict(self.options)
        if self.kind == "hover":
            return HoverReference(params, opts.get("p_hold", (0.0, 0.0, 1.0)))
        if self.kind == "lemniscate":
            return Lemniscate(params, **opts)
        if self.kind == "waypoints":
            wp = opts.pop("waypoints", None)
            if wp is None:
                wp = load_waypoints(opts.pop("file"))
            opts.pop("file", None)
            return MinJerkPath(params, wp, **opts)
        raise ValueError(f"unknown reference kind {self.kind!r}")


@dataclass(frozen=True)
class ControllerOptions:
    nmpc: NmpcConfig = NmpcConfig()
    indi: IndiConfig = IndiConfig()
    observer: ObserverConfig = ObserverConfig()


@dataclass(frozen=True)
class Scenario:
    name: str
    duration: float
    initial_state: tuple = None  # 13 entries; None starts on the reference
    initial_yaw_rate: float = None  # rad/s when starting on the reference; None -> plate equilibrium
    reference: ReferenceSpec = ReferenceSpec()
    wind: WindProfile = WindProfile()
    plate_width: int = 30  # mm
    sensor_noise: SensorNoise = SensorNoise()
    seed: int = 0
    body_torque: tuple = (0.0, 0.0, 0.0)  # N*m, injected in the plant
    controller: ControllerOptions = ControllerOptions()
    vehicle: VehicleParams = VehicleParams()
    metric_window: tuple = None  # (t1, t2); None -> whole run

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be positive")
        if self.plate_width not in PLATE_YAW_RATES:
            raise ValueError(f"plate width must be one of {sorted(PLATE_YAW_RATES)} mm, got {self.plate_width}")
        if self.initial_state is not None:
            x = tuple(float(v) for v in self.initial_state)
            if len(x) != NX:
                raise ValueError(f"initial_state needs {NX} entries")
            object.__setattr__(self, "initial_state", x)

    @property
    def params(self) -> VehicleParams:
        return self.vehicle.with_plate(self.plate_width)


@dataclass
class RunLog:
    data: np.ndarray  # (n, len(LOG_COLUMNS))
    scenario: str = ""
    seed: int = 0
    aborted: bool = False
    diagnostic: str = ""
    solve_times: np.ndarray = field(default_factory=lambda: np.zeros(0))  # s, not part of the CSV

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COL[name]]

    @property
    def t(self) -> np.ndarray:
        return self.column("t")

    @property
    def position(self) -> np.ndarray:
        return self.data[:, 1:4]

    @property
    def attitude(self) -> np.ndarray:
        return self.data[:, 4:8]

    @property
    def velocity(self) -> np.ndarray:
        return self.data[:, 8:11]

    @property
    def body_rate(self) -> np.ndarray:
        return self.data[:, 11:14]

    @property
    def p_ref(self) -> np.ndarray:
        return self.data[:, 14:17]

    @property
    def v_ref(self) -> np.ndarray:
        return self.data[:, 17:20]

    @property
    def thrusts(self) -> np.ndarray:
        return self.data[:, 20:23]

    @property
    def tau_hat(self) -> np.ndarray:
        return self.data[:, 26:29]

    @property
    def wind(self) -> np.ndarray:
        return self.data[:, 29:32]

    @property
    def position_error(self) -> np.ndarray:
        return np.linalg.norm(self.position - self.p_ref, axis=1)


class FlightController:
    """NMPC at every control tick followed by the INDI inner loop."""

    def __init__(self, params: VehicleParams, options: ControllerOptions = ControllerOptions(),
                 dt: float = CONTROL_DT):
        self.params = params
        self.options = options
        self.dt = dt
        self.nmpc = Nmpc(params, options.nmpc)
        self.indi = IndiController(params, options.indi, dt)
        self.observer = ForceObserver(params, options.observer, dt)
        self.last_cmd = self.nmpc.hover_inputs.copy()
        self.solution = None

    def horizon_times(self, t: float) -> np.ndarray:
        cfg = self.options.nmpc
        return t + cfg.step * np.arange(cfg.horizon_steps + 1)

    def step(self, t: float, measured, reference: Reference) -> RotorCommand:
        cfg = self.options.nmpc
        ext = self.observer.correct(measured)
        refs = reference.sample(self.horizon_times(t))
        shift = self.dt / cfg.step
        self.solution = self.nmpc.solve(measured, refs, shift=shift, ext_accel=ext)
        if self.options.indi.enabled:
            cmd = self.indi.tick(measured[10:13], self.last_cmd, self.solution, 0.0)
        else:
            cmd = RotorCommand.bounded(self.solution.first_input, self.params)
        self.observer.predict(measured, cmd.thrusts)
        self.last_cmd = cmd.thrusts.copy()
        return cmd


def initial_state_for(scenario: Scenario, reference: Reference, params: VehicleParams) -> np.ndarray:
    if scenario.initial_state is not None:
        return np.array(scenario.initial_state)
    row = reference.sample([0.0])[0]
    x = np.zeros(NX)
    x[0:3] = row[0:3]
    x[3:7] = row[3:7]
    x[7:10] = row[7:10]
    r0 = scenario.initial_yaw_rate
    x[12] = PLATE_YAW_RATES[scenario.plate_width] if r0 is None else r0
    return x


def _corrupt(x, noise: SensorNoise, rng) -> np.ndarray:
    y = x.copy()
    y[0:3] += noise.position * rng.standard_normal(3)
    y[7:10] += noise.velocity * rng.standard_normal(3)
    y[10:13] += noise.rate * rng.standard_normal(3)
    if noise.attitude > 0:
        dq = axis_angle(rng.standard_normal(3) + 1e-300, noise.attitude * abs(rng.standard_normal()))
        y[3:7] = qnormalize(qmul(y[3:7], dq))
    return y


def run(scenario: Scenario, *, controller: FlightController | None = None) -> RunLog:
    """Simulate ``scenario``; deterministic for a given seed."""
    params = scenario.params
    reference = scenario.reference.build(params)
    ctrl = controller or FlightController(params, scenario.controller)
    prm = pack(params)
    x = initial_state_for(scenario, reference, params)
    seeds = np.random.SeedSequence(scenario.seed).spawn(2)
    sensor_rng = np.random.default_rng(seeds[0])
    wind_rng = np.random.default_rng(seeds[1])
    tau_ext = np.asarray(scenario.body_torque, float)
    no_acc = np.zeros(3)

    n_ticks = int(round(scenario.duration / CONTROL_DT))
    rows = np.zeros((n_ticks + 1, len(LOG_COLUMNS)))
    solve_times = np.zeros(n_ticks + 1)
    gust = np.zeros(3)
    wcfg = scenario.wind
    a_gust = np.exp(-2 * np.pi * wcfg.turbulence_hz * CONTROL_DT)
    aborted, diagnostic = False, ""
    n = 0
    for k in range(n_ticks + 1):
        t = k * CONTROL_DT
        measured = _corrupt(x, scenario.sensor_noise, sensor_rng) if scenario.sensor_noise.active else x
        t0 = time.perf_counter()
        cmd = ctrl.step(t, measured, reference)
        solve_times[k] = time.perf_counter() - t0
        if wcfg.turbulence_std > 0:
            gust = a_gust * gust + wcfg.turbulence_std * np.sqrt(1 - a_gust ** 2) * wind_rng.standard_normal(3)
        wind = wcfg.mean(t) + gust

        sol = ctrl.solution
        refrow = reference.sample([t])[0]
        r = rows[k]
        r[0] = t
        r[1:14] = x
        r[14:17] = refrow[0:3]
        r[17:20] = refrow[7:10]
        r[20:23] = cmd.thrusts
        r[23] = sol.cost
        r[24] = sol.kkt_residual
        r[25] = sol.iterations
        r[26:29] = ctrl.indi.disturbance
        r[29:32] = wind
        n = k + 1
        if sol.status is SolveStatus.INFEASIBLE_CLAMPED and not np.all(np.isfinite(sol.inputs)):
            aborted, diagnostic = True, f"non-finite NMPC solution at t={t:.3f} s"
            break
        if k == n_ticks:
            break
        xn = rk4_many(x, cmd.thrusts, prm, wind, no_acc, tau_ext, PLANT_DT, SUBSTEPS)
        if not np.all(np.isfinite(xn)):
            aborted, diagnostic = True, f"non-finite plant state at t={t + CONTROL_DT:.3f} s"
            break
        x = xn
    return RunLog(rows[:n].copy(), scenario.name, scenario.seed, aborted, diagnostic, solve_times[:n].copy())
