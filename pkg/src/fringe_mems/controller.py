"""Robust backstepping tracking law for the normalized actuator.

The law is designed on the ideal (parasitic-free, nominal-damping) model and
treats damping error, resistance spread and both parasitic ratios as bounded
disturbances. Nonlinear damping terms weighted by the ``kappa`` gains
dominate those disturbances so the three error coordinates are each
input-to-state stable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

from fringe_mems.errors import DomainError
from fringe_mems.plant import NormalizedParams, State, beta_bounds, beta_value
from fringe_mems.trajectory import ReferencePoint

__all__ = [
    "ControllerConfig",
    "ControlOutput",
    "ReferencePoint",
    "Diagnostics",
    "desired_velocity",
    "desired_charge_squared",
    "control_voltage",
    "compute_control",
    "error_bound_diagnostics",
    "z1_envelope",
]


def _sgn(v: float) -> float:
    return (v > 0.0) - (v < 0.0)


@dataclass(frozen=True)
class ControllerConfig:
    """Gains, nominal values and uncertainty bounds.

    The ISS argument needs every gain strictly positive; the ``kappa``
    damping gains may be set to zero here to recover the plain backstepping
    law.
    """

    k1: float = 10.0
    k2: float = 10.0
    k3: float = 10.0
    kappa2: float = 1.0
    kappa31: float = 1.0
    kappa32: float = 1.0
    kappa33: float = 1.0
    kappa34: float = 1.0
    zeta0: float = 1.0
    rho_p_bar: float = 0.0
    rho_s_bar: float = 0.0
    r_min: float = 1.0
    r_max: float = 1.0
    beta0: Optional[float] = None
    eps_q: float = 1e-6

    def __post_init__(self):
        if not (self.k1 > 0 and self.k2 > 0 and self.k3 > 0):
            raise DomainError("k1, k2, k3 must be positive")
        if min(self.kappa2, self.kappa31, self.kappa32, self.kappa33, self.kappa34) < 0:
            raise DomainError("damping gains must be non-negative")
        if not self.zeta0 > 0:
            raise DomainError("zeta0 must be positive")
        if self.rho_p_bar < 0 or self.rho_s_bar < 0:
            raise DomainError("parasitic bounds must be non-negative")
        if not 0 < self.r_min <= self.r_max:
            raise DomainError("need 0 < r_min <= r_max")
        if not self.eps_q > 0:
            raise DomainError("eps_q must be positive")
        lo, hi = self.beta_bounds
        b0 = self.beta_nominal
        if not lo * (1 - 1e-12) <= b0 <= hi * (1 + 1e-12):
            raise DomainError(f"beta0={b0} outside [{lo}, {hi}]")

    @cached_property
    def beta_bounds(self) -> tuple[float, float]:
        return beta_bounds(self.r_min, self.r_max, self.rho_p_bar, self.rho_s_bar)

    @cached_property
    def beta_lo(self) -> float:
        return self.beta_bounds[0]

    @cached_property
    def beta_hi(self) -> float:
        return self.beta_bounds[1]

    @cached_property
    def beta_nominal(self) -> float:
        return self.beta_lo if self.beta0 is None else self.beta0

    def scaled(self, factor: float) -> "ControllerConfig":
        """Copy with every feedback and damping gain multiplied by ``factor``."""
        from dataclasses import replace

        return replace(
            self,
            k1=self.k1 * factor,
            k2=self.k2 * factor,
            k3=self.k3 * factor,
            kappa2=self.kappa2 * factor,
            kappa31=self.kappa31 * factor,
            kappa32=self.kappa32 * factor,
            kappa33=self.kappa33 * factor,
            kappa34=self.kappa34 * factor,
        )


@dataclass(frozen=True)
class Diagnostics:
    """Ultimate-bound functions feeding the z2 and z3 envelopes."""

    mu2: float
    mu31: float
    mu32: float
    mu33: float
    mu34: float

    @property
    def mu3(self) -> float:
        return self.mu31 + self.mu32 + self.mu33 + self.mu34


@dataclass(frozen=True)
class ControlOutput:
    u: float
    x2d: float
    dx2d: float
    x3d: float
    z1: float
    z2: float
    z3: float
    a: float
    b1: float
    b2: float
    diagnostics: Optional[Diagnostics] = None

    @property
    def mu2(self) -> float:
        return math.nan if self.diagnostics is None else self.diagnostics.mu2

    @property
    def mu3(self) -> float:
        return math.nan if self.diagnostics is None else self.diagnostics.mu3


def desired_velocity(x1: float, x2: float, ref: ReferencePoint, cfg: ControllerConfig):
    """Virtual velocity and its exact time derivative.

    Returns:
        (x2d, dx2d, z1)
    """
    z1 = x1 - ref.y
    x2d = ref.dy - cfg.k1 * z1
    dx2d = ref.ddy - cfg.k1 * (x2 - ref.dy)
    return x2d, dx2d, z1


def desired_charge_squared(x1: float, x2: float, x2d: float, dx2d: float, cfg: ControllerConfig):
    """Virtual charge-squared.

    Returns:
        (x3d, z2)
    """
    z2 = x2 - x2d
    x3d = 3.0 * (
        2.0 * cfg.zeta0 * x2 + x1 + dx2d - cfg.kappa2 * cfg.zeta0 * abs(x2) * z2 - cfg.k2 * z2
    )
    return x3d, z2


def compute_control(x1, x2, x3, ref: ReferencePoint, cfg: ControllerConfig, q=None) -> ControlOutput:
    """Full pipeline on raw floats (no state validation).

    When the signed charge ``q`` is supplied (charge-form integration) it
    replaces ``sqrt(x3)`` in the final division, so a bipolar source keeps
    the right sign once ``q`` crosses zero.
    """
    zeta0 = cfg.zeta0
    x2d, dx2d, z1 = desired_velocity(x1, x2, ref, cfg)
    x3d, z2 = desired_charge_squared(x1, x2, x2d, dx2d, cfg)
    z3 = x3 - x3d

    a = -2.0 * zeta0 * x2 - x1 + x3 / 3.0
    b1 = 2.0 * zeta0 - cfg.k1 - cfg.k2 - cfg.kappa2 * zeta0 * (_sgn(x2) * z2 + abs(x2))
    # Time derivative of x3d/3 is a*b1 + b2; the reference term is k1 * ddy.
    b2 = ref.dddy + cfg.k1 * ref.ddy + (cfg.kappa2 * zeta0 * abs(x2) + cfg.k2) * dx2d + x2

    ab = a * b1 + b2
    shaped = (
        3.0 * ab
        - cfg.k3 * z3
        - cfg.kappa31 * zeta0 * abs(b1 * x2) * z3
        - cfg.kappa32 * abs(ab) * z3
        - cfg.kappa33 * cfg.r_max * cfg.rho_p_bar * abs(x2) * x3 * z3
        - cfg.kappa34 * cfg.rho_s_bar * x3 * z3
    )
    if q is None:
        sq = max(math.sqrt(max(x3, 0.0)), cfg.eps_q)
    else:
        sq = math.copysign(max(abs(q), cfg.eps_q), q)
    u = 0.75 / sq * (2.0 * x3 * (1.0 - x1) + shaped / cfg.beta_lo)
    return ControlOutput(u, x2d, dx2d, x3d, z1, z2, z3, a, b1, b2)


def control_voltage(
    s: State,
    ref: ReferencePoint,
    cfg: ControllerConfig,
    truth: Optional[NormalizedParams] = None,
) -> ControlOutput:
    """Control law at a state, with error-bound diagnostics when ``truth`` is given."""
    if not s.in_space():
        raise DomainError(f"state outside X: {s}")
    out = compute_control(s.x1, s.x2, s.x3, ref, cfg)
    if truth is None:
        return out
    diag = error_bound_diagnostics(s, out, cfg, truth)
    return ControlOutput(**{**out.__dict__, "diagnostics": diag})


def error_bound_diagnostics(
    s: State, out: ControlOutput, cfg: ControllerConfig, truth: NormalizedParams
) -> Diagnostics:
    x2, x3 = s.x2, s.x3
    zeta0 = cfg.zeta0
    dzeta = truth.zeta - zeta0
    rho_p = truth.rho_p
    rho_s = truth.rho_s_at(s.x1)
    beta = beta_value(s.x1, truth.r, rho_p, rho_s)
    ratio = beta / cfg.beta_lo
    dbeta = beta - cfg.beta_nominal
    ab = abs(out.a * out.b1 + out.b2)
    b1x2 = abs(out.b1 * x2)
    q3 = cfg.k3 / 8.0

    mu2 = (2.0 * abs(dzeta * x2) + abs(out.z3) / 3.0) / (cfg.k2 / 2.0 + cfg.kappa2 * zeta0 * abs(x2))
    mu31 = 6.0 * abs(dzeta) * b1x2 / (q3 + ratio * cfg.kappa31 * zeta0 * b1x2)
    mu32 = 3.0 * (dbeta / cfg.beta_lo) * ab / (q3 + ratio * cfg.kappa32 * ab)
    load = 1.0 + rho_p * (1.0 + rho_s)
    mu33 = (2.0 * rho_p / load) * abs(x2) * x3 / (
        q3 + ratio * cfg.kappa33 * cfg.r_max * cfg.rho_p_bar * abs(x2) * x3
    )
    mu34 = (2.0 * rho_s / (truth.r * load)) * x3 / (q3 + ratio * cfg.rho_s_bar * cfg.kappa34 * x3)
    return Diagnostics(mu2, mu31, mu32, mu33, mu34)


def z1_envelope(t, z1_0: float, z2_sup, k1: float, half_rate: bool = False):
    """Upper bound on ``|z1(t)|`` given the running supremum of ``|z2|``.

    ``dz1/dt = z2 - k1*z1`` gives ``|z1(0)|*exp(-k1*t) + sup|z2|/k1``. With
    ``half_rate`` the decay uses ``k1/2``, the slower Lyapunov-derived rate.
    """
    import numpy as np

    rate = 0.5 * k1 if half_rate else k1
    return abs(z1_0) * np.exp(-rate * np.asarray(t)) + np.asarray(z2_sup) / k1
