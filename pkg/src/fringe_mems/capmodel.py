"""Capacitance models of a rectangular parallel-plate actuator.

Three views of the same device are provided:

* the ideal law ``eps*W*L/G`` with no fringing field,
* Palmer's zero-thickness fringing-field formula (the "real" device here),
* a substitute capacitor that follows the ideal law but is matched to the
  real capacitance at the initial gap, in series with a gap-dependent serial
  capacitor that absorbs the difference.

All functions accept scalar gaps; :func:`ideal_capacitance` and
:func:`palmer_capacitance` also broadcast over numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from fringe_mems.errors import DomainError, ModelInconsistencyError

EPS0 = 8.8541878128e-12  # F/m

# Finite-element reference values for the 600 um x 300 um, G0 = 305 um device.
FEM_C_REF = 1.474e-14  # F, real capacitance at the initial gap
FEM_C_SER_MIN = 6.47e-14  # F, minimum serial capacitance over the travel

CapacitanceFn = Callable[[float], float]


@dataclass(frozen=True)
class DeviceGeometry:
    """Rectangular electrode pair.

    Attributes:
        width: electrode width W (m)
        length: electrode length L (m)
        initial_gap: rest separation G0 (m)
        permittivity: gap permittivity (F/m)
    """

    width: float
    length: float
    initial_gap: float
    permittivity: float = EPS0

    def __post_init__(self):
        for name in ("width", "length", "initial_gap", "permittivity"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise DomainError(f"{name} must be positive and finite, got {value!r}")

    @property
    def area(self) -> float:
        return self.width * self.length

    @property
    def c0(self) -> float:
        """Ideal capacitance at the initial gap."""
        return self.permittivity * self.area / self.initial_gap

    def swapped(self) -> "DeviceGeometry":
        return DeviceGeometry(self.length, self.width, self.initial_gap, self.permittivity)


REFERENCE_GEOMETRY = DeviceGeometry(width=600e-6, length=300e-6, initial_gap=305e-6)


@dataclass(frozen=True)
class CapacitanceDecomposition:
    """Real capacitance split into a substitute and a serial capacitor.

    ``serial`` is ``math.inf`` exactly when ``gap`` equals the initial gap.
    """

    gap: float
    total: float
    substitute: float
    serial: float

    @property
    def unbounded(self) -> bool:
        return math.isinf(self.serial)

    def recombined(self) -> float:
        """Series combination of substitute and serial capacitors."""
        inv_serial = 0.0 if self.unbounded else 1.0 / self.serial
        return 1.0 / (1.0 / self.substitute + inv_serial)


def _check_gap(gap):
    arr = np.asarray(gap, dtype=float)
    if not np.all(arr > 0):
        raise DomainError(f"gap must be positive, got {gap!r}")
    return arr


def ideal_capacitance(geom: DeviceGeometry, gap):
    """Capacitance with the main field only: ``eps*W*L/gap``."""
    g = _check_gap(gap)
    c = geom.permittivity * geom.area / g
    return float(c) if c.ndim == 0 else c


def fringing_factor(side: float, gap):
    """Palmer's one-dimensional correction ``1 + a + a*ln(2*pi*side/gap)``, ``a = gap/(pi*side)``."""
    a = np.asarray(gap, dtype=float) / (math.pi * side)
    return 1.0 + a + a * np.log(2.0 * math.pi * side / np.asarray(gap, dtype=float))


def palmer_capacitance(geom: DeviceGeometry, gap):
    """Palmer's fringing-field capacitance for zero-thickness rectangular plates.

    The correction factors exceed one only while ``gap <= 2*pi*e*side``;
    beyond that the formula is outside its range of validity.
    """
    g = _check_gap(gap)
    c = (
        geom.permittivity
        * geom.area
        / g
        * fringing_factor(geom.width, g)
        * fringing_factor(geom.length, g)
    )
    return float(c) if c.ndim == 0 else c


def default_real_model(geom: DeviceGeometry) -> CapacitanceFn:
    return lambda gap: palmer_capacitance(geom, gap)


def substitute_capacitance(geom: DeviceGeometry, gap: float, c_ref: float) -> float:
    """Ideal-law capacitor matched to ``c_ref`` at the initial gap.

    Args:
        geom: device geometry (only the initial gap is used)
        gap: current separation (m)
        c_ref: real capacitance at the initial gap (F), from Palmer or FEM data

    Returns:
        ``c_ref * G0 / gap`` (F)
    """
    _check_gap(gap)
    if not c_ref > 0:
        raise DomainError(f"reference capacitance must be positive, got {c_ref!r}")
    return c_ref * geom.initial_gap / gap


def serial_capacitance(
    geom: DeviceGeometry,
    gap: float,
    real_model: CapacitanceFn | None = None,
    c_ref: float | None = None,
) -> float:
    """Serial capacitor that turns the substitute into the real capacitance.

    Returns ``math.inf`` at the initial gap. Raises
    :class:`ModelInconsistencyError` when the substitute under-estimates the
    real model somewhere in the travel.
    """
    if real_model is None:
        real_model = default_real_model(geom)
    if not 0 < gap <= geom.initial_gap:
        raise DomainError(f"gap must lie in (0, G0], got {gap!r}")
    if c_ref is None:
        c_ref = real_model(geom.initial_gap)
    c_sub = substitute_capacitance(geom, gap, c_ref)
    c_real = real_model(gap)
    diff = c_sub - c_real
    if gap == geom.initial_gap or diff == 0.0:
        return math.inf
    if diff < 0:
        if diff > -1e-12 * c_sub:
            return math.inf
        raise ModelInconsistencyError(
            f"substitute {c_sub:.6g} F below real {c_real:.6g} F at gap {gap:.6g} m"
        )
    return c_sub * c_real / diff


def decompose(
    geom: DeviceGeometry,
    gap: float,
    real_model: CapacitanceFn | None = None,
    c_ref: float | None = None,
) -> CapacitanceDecomposition:
    if real_model is None:
        real_model = default_real_model(geom)
    if c_ref is None:
        c_ref = real_model(geom.initial_gap)
    return CapacitanceDecomposition(
        gap=gap,
        total=real_model(gap),
        substitute=substitute_capacitance(geom, gap, c_ref),
        serial=serial_capacitance(geom, gap, real_model, c_ref),
    )


def gap_grid(geom: DeviceGeometry, points: int = 10_000, ratio: float = 1e3) -> np.ndarray:
    """Geometric grid from G0 down to G0/ratio (first entry is exactly G0)."""
    if points < 2:
        raise DomainError("a sweep needs at least two points")
    grid = geom.initial_gap * np.geomspace(1.0, 1.0 / ratio, points)
    grid[0] = geom.initial_gap
    return grid


def serial_minimum(
    geom: DeviceGeometry,
    real_model: CapacitanceFn | None = None,
    c_ref: float | None = None,
    points: int = 10_000,
    ratio: float = 1e3,
) -> tuple[float, float]:
    """Smallest serial capacitance over a geometric gap sweep.

    Returns:
        (gap at the minimum, minimum serial capacitance)
    """
    best_gap, best = geom.initial_gap, math.inf
    for gap in gap_grid(geom, points, ratio):
        c = serial_capacitance(geom, float(gap), real_model, c_ref)
        if c < best:
            best_gap, best = float(gap), c
    return best_gap, best


def rho_s_bound(c0: float, c_ser_min: float) -> float:
    """Worst-case serial-parasitic ratio ``C0 / C_ser_min``."""
    if not (c0 > 0 and c_ser_min > 0):
        raise DomainError("capacitances must be positive")
    return c0 / c_ser_min


def rho_s_profile(
    geom: DeviceGeometry,
    x1: float,
    real_model: CapacitanceFn | None = None,
    c_ref: float | None = None,
) -> float:
    """Serial ratio ``C_ref / C_ser`` at normalized deflection ``x1``.

    Zero at rest (infinite serial capacitance) and at full closure, where the
    fringing correction vanishes.
    """
    if real_model is None:
        real_model = default_real_model(geom)
    if c_ref is None:
        c_ref = real_model(geom.initial_gap)
    if x1 <= 0.0:
        return 0.0
    if x1 >= 1.0:
        return 0.0
    ratio = 1.0 - x1
    rho = c_ref / real_model(geom.initial_gap * ratio) - ratio
    if rho < -1e-12:
        raise ModelInconsistencyError(f"negative serial ratio {rho:.3g} at x1={x1}")
    return max(rho, 0.0)
