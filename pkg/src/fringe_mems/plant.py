"""Normalized dynamics of the voltage-driven actuator with parasitics.

Coordinates: ``x1 = 1 - G/G0`` (deflection fraction), ``x2 = dx1/dt``,
``x3 = q**2`` with ``q`` the device charge in units of the nominal pull-in
charge. Time is in units of ``1/omega0`` and the source voltage ``u`` in units
of the nominal pull-in voltage, so the ideal device pulls in at
``x1 = 1/3, u = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

from fringe_mems.capmodel import DeviceGeometry
from fringe_mems.errors import DomainError


@dataclass(frozen=True)
class PhysicalParams:
    """SI description of the actuator and its drive loop.

    ``c_sp`` is the serial parasitic capacitance; ``math.inf`` means none.
    """

    mass: float
    damping: float
    stiffness: float
    resistance: float
    geometry: DeviceGeometry
    c_pp: float = 0.0
    c_sp: float = math.inf

    def __post_init__(self):
        if not (self.mass > 0 and self.stiffness > 0 and self.resistance > 0):
            raise DomainError("mass, stiffness and resistance must be positive")
        if self.damping < 0 or self.c_pp < 0 or not self.c_sp > 0:
            raise DomainError("damping and parasitics must be non-negative")


@dataclass(frozen=True)
class NormalizedParams:
    """Dimensionless plant parameters.

    ``rho_s_fn`` optionally makes the serial ratio depend on ``x1``; when set
    it overrides the constant ``rho_s``.
    """

    zeta: float = 1.0
    r: float = 1.0
    rho_p: float = 0.0
    rho_s: float = 0.0
    omega0: float = 1.0
    c0: float = 1.0
    v_pi: float = 1.0
    q_pi: float = 1.0
    rho_s_fn: Optional[Callable[[float], float]] = field(default=None, compare=False)

    def __post_init__(self):
        for name in ("zeta", "r", "omega0", "c0", "v_pi", "q_pi"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive")
        if self.rho_p < 0 or self.rho_s < 0:
            raise DomainError("parasitic ratios must be non-negative")

    def rho_s_at(self, x1: float) -> float:
        if self.rho_s_fn is None:
            return self.rho_s
        return self.rho_s_fn(x1)


@dataclass(frozen=True)
class State:
    x1: float
    x2: float
    x3: float

    def in_space(self) -> bool:
        return 0.0 <= self.x1 <= 1.0 and self.x3 >= 0.0

    @property
    def q(self) -> float:
        return math.sqrt(max(self.x3, 0.0))

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x1, self.x2, self.x3)


@dataclass(frozen=True)
class DriveDiagnostics:
    """Electrical quantities at a state.

    Attributes:
        u: source voltage
        q: device charge
        i: source current
        v_a: actuator voltage in units of ``Q_pi/C0``, i.e. ``(1 - x1)*q``
        beta: electrical rate factor
    """

    u: float
    q: float
    i: float
    v_a: float
    beta: float


def normalize(phys: PhysicalParams) -> NormalizedParams:
    geom = phys.geometry
    omega0 = math.sqrt(phys.stiffness / phys.mass)
    c0 = geom.c0
    v_pi = math.sqrt(8.0 * phys.stiffness * geom.initial_gap**2 / (27.0 * c0))
    return NormalizedParams(
        zeta=phys.damping / (2.0 * phys.mass * omega0),
        r=omega0 * c0 * phys.resistance,
        rho_p=phys.c_pp / c0,
        rho_s=c0 / phys.c_sp,
        omega0=omega0,
        c0=c0,
        v_pi=v_pi,
        # 3/2, not 2/3: the factor that yields the x3/3 force term and the
        # 2u/3 drive term of the normalized equations.
        q_pi=1.5 * c0 * v_pi,
    )


def beta_value(x1: float, r: float, rho_p: float, rho_s: float) -> float:
    return 1.0 / (r * (1.0 + rho_p * (1.0 - x1) + rho_p * rho_s))


def beta(x1: float, params: NormalizedParams) -> float:
    """Position-dependent rate factor of the electrical subsystem."""
    return beta_value(x1, params.r, params.rho_p, params.rho_s_at(x1))


def beta_bounds(r_min: float, r_max: float, rho_p_bar: float, rho_s_bar: float) -> tuple[float, float]:
    """Lower and upper bound of ``beta`` over ``x1 in [0, 1]`` and the admissible uncertainty box."""
    return 1.0 / (r_max * (1.0 + rho_p_bar * (1.0 + rho_s_bar))), 1.0 / r_min


def _check(x1: float, x3: float) -> None:
    if not (0.0 <= x1 <= 1.0) or x3 < 0.0:
        raise DomainError(f"state outside X: x1={x1!r}, x3={x3!r}")


def rhs_x3(x1, x2, x3, u, zeta, r, rho_p, rho_s):
    """Scalar right-hand side in (x1, x2, x3) coordinates, no validation."""
    b = 1.0 / (r * (1.0 + rho_p * (1.0 - x1) + rho_p * rho_s))
    dx3 = b * (
        (4.0 / 3.0) * math.sqrt(x3) * u
        - 2.0 * (1.0 - x1) * x3
        - 2.0 * rho_s * x3
        + 2.0 * r * rho_p * x2 * x3
    )
    return x2, -2.0 * zeta * x2 - x1 + x3 / 3.0, dx3


def rhs_q(x1, x2, q, u, zeta, r, rho_p, rho_s):
    """Scalar right-hand side in (x1, x2, q) coordinates, no validation."""
    b = 1.0 / (r * (1.0 + rho_p * (1.0 - x1) + rho_p * rho_s))
    dq = b * ((2.0 / 3.0) * u - (1.0 - x1) * q - rho_s * q + r * rho_p * x2 * q)
    return x2, -2.0 * zeta * x2 - x1 + q * q / 3.0, dq


def rhs_x3_form(s: State, u: float, p: NormalizedParams) -> tuple[float, float, float]:
    _check(s.x1, s.x3)
    return rhs_x3(s.x1, s.x2, s.x3, u, p.zeta, p.r, p.rho_p, p.rho_s_at(s.x1))


def rhs_charge_form(x1: float, x2: float, q: float, u: float, p: NormalizedParams) -> tuple[float, float, float]:
    """Charge-form dynamics; ``q`` may be negative under a bipolar source."""
    _check(x1, 0.0)
    return rhs_q(x1, x2, q, u, p.zeta, p.r, p.rho_p, p.rho_s_at(x1))


def equilibrium_voltage(x1: float, rho_s: float = 0.0) -> float:
    """Source voltage that holds the device at rest at deflection ``x1``."""
    return 1.5 * math.sqrt(3.0 * x1) * (1.0 + rho_s - x1)


def static_pullin(rho_s: float) -> tuple[float, float]:
    """Peak of the static voltage curve: ``(x_pi, u_pi)``."""
    if rho_s < 0:
        raise DomainError("rho_s must be non-negative")
    x_pi = (1.0 + rho_s) / 3.0
    return x_pi, equilibrium_voltage(x_pi, rho_s)


def actuation_voltage(s: State, p: NormalizedParams, u: float = 0.0) -> DriveDiagnostics:
    _check(s.x1, s.x3)
    q = s.q
    rho_s = p.rho_s_at(s.x1)
    # Voltage across the parasitic-loaded network is 3/2*q*(1 - x1 + rho_s).
    i = (u - 1.5 * q * (1.0 - s.x1 + rho_s)) / p.r
    return DriveDiagnostics(u=u, q=q, i=i, v_a=(1.0 - s.x1) * q, beta=beta(s.x1, p))
