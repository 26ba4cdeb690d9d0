"""Rest-to-rest polynomial reference with analytic derivatives to third order."""

from __future__ import annotations

from dataclasses import dataclass

from fringe_mems.errors import DomainError

# tau^5 * (126 - 420 tau + 540 tau^2 - 315 tau^3 + 70 tau^4), expanded.
_COEFFS = {5: 126.0, 6: -420.0, 7: 540.0, 8: -315.0, 9: 70.0}


def _derivative_table(order: int) -> tuple[int, tuple[float, ...]]:
    """Lowest power and ascending coefficients of the order-th derivative."""
    coeffs = []
    for power, c in _COEFFS.items():
        factor = c
        for j in range(order):
            factor *= power - j
        coeffs.append(factor)
    return 5 - order, tuple(coeffs)


_TABLES = tuple(_derivative_table(n) for n in range(4))


def _poly(tau: float, order: int) -> float:
    low, coeffs = _TABLES[order]
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * tau + c
    return acc * tau**low


@dataclass(frozen=True)
class ReferencePoint:
    """Reference deflection and its first three time derivatives."""

    y: float
    dy: float = 0.0
    ddy: float = 0.0
    dddy: float = 0.0


@dataclass(frozen=True)
class TrajectoryConfig:
    t_i: float = 0.0
    t_f: float = 10.0
    y_i: float = 0.0
    y_f: float = 0.4

    def __post_init__(self):
        if not self.t_f > self.t_i:
            raise DomainError("t_f must exceed t_i")
        for y in (self.y_i, self.y_f):
            if not 0.0 <= y <= 1.0:
                raise DomainError(f"deflection {y!r} outside [0, 1]")

    @property
    def duration(self) -> float:
        return self.t_f - self.t_i


def eval_reference(t: float, cfg: TrajectoryConfig) -> ReferencePoint:
    """Reference value and its first three time derivatives at ``t``.

    Outside ``[t_i, t_f]`` the reference holds its end value.
    """
    if t <= cfg.t_i:
        return ReferencePoint(cfg.y_i, 0.0, 0.0, 0.0)
    if t >= cfg.t_f:
        return ReferencePoint(cfg.y_f, 0.0, 0.0, 0.0)
    T = cfg.duration
    tau = (t - cfg.t_i) / T
    amp = cfg.y_f - cfg.y_i
    # The profile is antisymmetric about tau = 1/2; evaluating the late half
    # from the far end avoids cancellation as the value approaches 1.
    if tau <= 0.5:
        p0, p1, p2, p3 = (_poly(tau, n) for n in range(4))
    else:
        s = 1.0 - tau
        p0, p1, p2, p3 = 1.0 - _poly(s, 0), _poly(s, 1), -_poly(s, 2), _poly(s, 3)
    return ReferencePoint(cfg.y_i + amp * p0, amp * p1 / T, amp * p2 / T**2, amp * p3 / T**3)
