"""Fixed-step closed- and open-loop integration of the normalized actuator."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from fringe_mems.controller import ControllerConfig, compute_control, error_bound_diagnostics
from fringe_mems.errors import DomainError, NumericalFailure
from fringe_mems.plant import NormalizedParams, State, beta_value, rhs_q, rhs_x3
from fringe_mems.trajectory import TrajectoryConfig, eval_reference

COMPLETED = "completed"
CONTACT = "contact"
FAILED = "numerical-failure"

TRACE_COLUMNS = ("t", "x1", "x2", "x3", "u", "z1", "z2", "z3", "mu2", "mu3", "beta")

DEFAULT_PRECHARGE = 1e-6


@dataclass(frozen=True)
class Scenario:
    """One closed-loop run.

    ``initial`` defaults to rest at ``trajectory.y_i`` on the equilibrium
    family, with ``x3`` lifted to ``precharge``: the charge-squared form
    cannot leave ``x3 = 0`` because its drive term carries ``sqrt(x3)``.

    ``control="zoh"`` holds ``u`` over each step; ``"continuous"`` evaluates
    the law at every Runge-Kutta stage, which keeps the integrator fourth
    order in closed loop.
    """

    plant: NormalizedParams
    controller: ControllerConfig
    trajectory: TrajectoryConfig
    t_end: float = 20.0
    dt: float = 1e-3
    initial: Optional[State] = None
    form: str = "x3"
    precharge: float = DEFAULT_PRECHARGE
    record_every: int = 1
    control: str = "zoh"

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end > 0):
            raise DomainError("dt and t_end must be positive")
        if self.form not in ("x3", "charge"):
            raise DomainError(f"unknown form {self.form!r}")
        if self.control not in ("zoh", "continuous"):
            raise DomainError(f"unknown control mode {self.control!r}")
        if self.record_every < 1:
            raise DomainError("record_every must be >= 1")
        if not self.initial_state.in_space():
            raise DomainError(f"initial state outside X: {self.initial_state}")

    @property
    def initial_state(self) -> State:
        if self.initial is not None:
            return self.initial
        y = self.trajectory.y_i
        return State(y, 0.0, max(3.0 * y, self.precharge))


@dataclass(frozen=True)
class SimTrace:
    t: np.ndarray
    x1: np.ndarray
    x2: np.ndarray
    x3: np.ndarray
    u: np.ndarray
    z1: np.ndarray
    z2: np.ndarray
    z3: np.ndarray
    mu2: np.ndarray
    mu3: np.ndarray
    beta: np.ndarray
    status: str = COMPLETED
    contact_time: Optional[float] = None

    def __post_init__(self):
        for name in TRACE_COLUMNS:
            getattr(self, name).setflags(write=False)

    def __len__(self) -> int:
        return len(self.t)

    def columns(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TRACE_COLUMNS}

    def final_state(self) -> State:
        return State(float(self.x1[-1]), float(self.x2[-1]), float(self.x3[-1]))


def _rk4(f, t, y, dt):
    a, b, c = y
    h = 0.5 * dt
    p1, q1, r1 = f(t, a, b, c)
    p2, q2, r2 = f(t + h, a + h * p1, b + h * q1, c + h * r1)
    p3, q3, r3 = f(t + h, a + h * p2, b + h * q2, c + h * r2)
    p4, q4, r4 = f(t + dt, a + dt * p3, b + dt * q3, c + dt * r3)
    w = dt / 6.0
    return (
        a + w * (p1 + 2.0 * p2 + 2.0 * p3 + p4),
        b + w * (q1 + 2.0 * q2 + 2.0 * q3 + q4),
        c + w * (r1 + 2.0 * r2 + 2.0 * r3 + r4),
    )


def _plant_fn(p: NormalizedParams, u, form: str, locked: bool):
    """Stage derivative; ``u`` is a held value or a feedback ``u(t, x1, x2, c)``."""
    rhs = rhs_x3 if form == "x3" else rhs_q
    zeta, r, rho_p = p.zeta, p.r, p.rho_p
    fn = p.rho_s_fn
    rho_s = p.rho_s
    feedback = callable(u)

    def f(t, x1, x2, c):
        if locked:
            x1, x2 = 1.0, 0.0
        rs = rho_s if fn is None else fn(min(max(x1, 0.0), 1.0))
        # Stage states may stray marginally below x3 = 0 in the charge-squared form.
        if form == "x3" and c < 0.0:
            c = 0.0
        uk = u(t, x1, x2, c) if feedback else u
        d1, d2, d3 = rhs(x1, x2, c, uk, zeta, r, rho_p, rs)
        if locked:
            return 0.0, 0.0, d3
        return d1, d2, d3

    return f


def _advance(y, u, p, dt, form, locked=False, t=0.0):
    """One RK4 step; returns (y_next, contact)."""
    x1, x2, c = _rk4(_plant_fn(p, u, form, locked), t, y, dt)
    if not (math.isfinite(x1) and math.isfinite(x2) and math.isfinite(c)):
        raise NumericalFailure(f"non-finite state after step: {(x1, x2, c)}")
    if form == "x3" and c < 0.0:
        c = 0.0
    contact = locked
    if x1 >= 1.0:
        x1, x2, contact = 1.0, 0.0, True
    elif x1 < 0.0:
        x1 = 0.0
        x2 = max(x2, 0.0)
    return (x1, x2, c), contact


def step_rk4(s: State, u: float, p: NormalizedParams, dt: float) -> tuple[State, bool]:
    """Advance the charge-squared form by one step under zero-order hold.

    Returns:
        (next state, contact flag)
    """
    if not s.in_space():
        raise DomainError(f"state outside X: {s}")
    if not dt > 0:
        raise DomainError("dt must be positive")
    y, contact = _advance(s.as_tuple(), u, p, dt, "x3")
    return State(*y), contact


class _Recorder:
    def __init__(self):
        self.rows: list[tuple] = []

    def add(self, *row):
        self.rows.append(row)

    def trace(self, status, contact_time=None) -> SimTrace:
        if self.rows:
            cols = np.array(self.rows, dtype=float).T
        else:
            cols = np.empty((len(TRACE_COLUMNS), 0))
        return SimTrace(*cols, status=status, contact_time=contact_time)


def run_closed_loop(sc: Scenario) -> SimTrace:
    """Simulate the controller against the true plant of ``sc``.

    The controller sees the full state every step; ``u`` is held over the
    step. Contact ends the run unless the target is full closure, in which
    case the plate is held at ``x1 = 1`` until ``t_end``.
    """
    p, cfg, traj = sc.plant, sc.controller, sc.trajectory
    form = sc.form
    s0 = sc.initial_state
    y = (s0.x1, s0.x2, s0.x3) if form == "x3" else (s0.x1, s0.x2, math.sqrt(s0.x3))
    n_steps = int(round(sc.t_end / sc.dt))
    t0 = traj.t_i
    rec = _Recorder()
    status, contact_time, locked = COMPLETED, None, False
    hold_closed = traj.y_f >= 1.0

    def feedback(ts, x1, x2, c):
        x3 = c if form == "x3" else c * c
        return compute_control(x1, x2, x3, eval_reference(ts, traj), cfg, q=None if form == "x3" else c).u

    for k in range(n_steps + 1):
        t = t0 + k * sc.dt
        x1, x2, c = y
        x3 = c if form == "x3" else c * c
        ref = eval_reference(t, traj)
        out = compute_control(x1, x2, x3, ref, cfg, q=None if form == "x3" else c)
        if k % sc.record_every == 0 or k == n_steps:
            s = State(x1, x2, x3)
            diag = error_bound_diagnostics(s, out, cfg, p)
            b = beta_value(x1, p.r, p.rho_p, p.rho_s_at(x1))
            rec.add(t, x1, x2, x3, out.u, out.z1, out.z2, out.z3, diag.mu2, diag.mu3, b)
        if k == n_steps:
            break
        try:
            drive = feedback if sc.control == "continuous" else out.u
            y, contact = _advance(y, drive, p, sc.dt, form, locked, t)
        except NumericalFailure:
            status = FAILED
            break
        if contact and not locked:
            status, contact_time = CONTACT, t + sc.dt
            if not hold_closed:
                x1, x2, c = y
                x3 = c if form == "x3" else c * c
                out = compute_control(x1, x2, x3, eval_reference(t + sc.dt, traj), cfg)
                diag = error_bound_diagnostics(State(x1, x2, x3), out, cfg, p)
                b = beta_value(x1, p.r, p.rho_p, p.rho_s_at(x1))
                rec.add(t + sc.dt, x1, x2, x3, out.u, out.z1, out.z2, out.z3, diag.mu2, diag.mu3, b)
                break
            locked = True
    return rec.trace(status, contact_time)


def run_open_loop(
    u0: float,
    plant: NormalizedParams,
    t_end: float,
    dt: float = 1e-3,
    initial: Optional[State] = None,
    form: str = "charge",
) -> SimTrace:
    """Constant source voltage, no controller.

    Integrated in charge form by default so the device can charge from rest.
    Contact is absorbing and ends the run.
    """
    if not math.isfinite(u0):
        raise DomainError("u0 must be finite")
    s0 = initial or State(0.0, 0.0, 0.0)
    if not s0.in_space():
        raise DomainError(f"initial state outside X: {s0}")
    c0 = s0.x3 if form == "x3" else math.sqrt(s0.x3)
    y = (s0.x1, s0.x2, c0)
    n_steps = int(round(t_end / dt))
    rec = _Recorder()
    nan = math.nan
    status, contact_time = COMPLETED, None
    for k in range(n_steps + 1):
        t = k * dt
        x1, x2, c = y
        x3 = c if form == "x3" else c * c
        b = beta_value(x1, plant.r, plant.rho_p, plant.rho_s_at(x1))
        rec.add(t, x1, x2, x3, u0, nan, nan, nan, nan, nan, b)
        if k == n_steps or status == CONTACT:
            break
        try:
            y, contact = _advance(y, u0, plant, dt, form)
        except NumericalFailure:
            status = FAILED
            break
        if contact:
            status, contact_time = CONTACT, t + dt
    return rec.trace(status, contact_time)


@dataclass(frozen=True)
class SettleMetrics:
    final_error: float
    overshoot: float
    settle_time: float


def settle_metrics(trace: SimTrace, cfg: TrajectoryConfig, band: float = 0.01) -> SettleMetrics:
    """Hold-phase figures of merit.

    ``final_error`` averages ``|z1|`` over the last tenth of the hold phase;
    ``settle_time`` is the first time after ``t_f`` from which ``|z1|``
    stays below ``band`` (``inf`` if it never does).
    """
    hold = trace.t >= cfg.t_f - 1e-12
    idx = np.flatnonzero(hold)
    if len(idx) < 10:
        raise DomainError("trace too short: fewer than 10 samples after t_f")
    tail = idx[-max(1, len(idx) // 10):]
    final_error = float(np.mean(np.abs(trace.z1[tail])))
    overshoot = max(0.0, float(np.max(trace.x1)) - cfg.y_f) if cfg.y_f >= cfg.y_i else max(
        0.0, cfg.y_f - float(np.min(trace.x1))
    )
    outside = np.flatnonzero(np.abs(trace.z1[idx]) >= band)
    if len(outside) == 0:
        settle = float(trace.t[idx[0]])
    elif outside[-1] == len(idx) - 1:
        settle = math.inf
    else:
        settle = float(trace.t[idx[outside[-1] + 1]])
    return SettleMetrics(final_error, overshoot, settle)


def nominal_scenario(setpoint: float, **kw) -> Scenario:
    """Controller bounds collapsed onto an ideal plant (no uncertainty)."""
    traj = kw.pop("trajectory", None) or TrajectoryConfig(y_f=setpoint)
    return Scenario(NormalizedParams(), ControllerConfig(), traj, **kw)


PERTURBED_PLANT = NormalizedParams(zeta=3.0, r=2.0, rho_p=2.0, rho_s=0.226)
PERTURBED_CONTROLLER = ControllerConfig(zeta0=1.0, r_min=1.0, r_max=2.0, rho_p_bar=2.0, rho_s_bar=0.226)


def perturbed_scenario(setpoint: float, **kw) -> Scenario:
    """Worst-case truth (zeta = 3, r = 2, rho_p = 2, rho_s = 0.226) against the nominal design."""
    traj = kw.pop("trajectory", None) or TrajectoryConfig(y_f=setpoint)
    plant = kw.pop("plant", PERTURBED_PLANT)
    ctrl = kw.pop("controller", PERTURBED_CONTROLLER)
    return Scenario(plant, ctrl, traj, **kw)


def run_batch(
    scenarios: Sequence[Scenario], jobs: int = 1, runner: Callable[[Scenario], SimTrace] = run_closed_loop
) -> list[SimTrace]:
    """Run scenarios independently, optionally across worker processes."""
    if jobs <= 1 or len(scenarios) <= 1:
        return [runner(sc) for sc in scenarios]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(runner, scenarios))
