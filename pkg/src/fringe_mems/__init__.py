"""Electrostatic parallel-plate micro-actuator with fringing-field and parasitic
capacitance, closed with a robust ISS backstepping controller."""

from fringe_mems.capmodel import (
    EPS0,
    CapacitanceDecomposition,
    DeviceGeometry,
    decompose,
    ideal_capacitance,
    palmer_capacitance,
    rho_s_bound,
    serial_capacitance,
    substitute_capacitance,
)
from fringe_mems.controller import ControllerConfig, ControlOutput, ReferencePoint
from fringe_mems.plant import NormalizedParams, PhysicalParams, State
from fringe_mems.simulator import Scenario, SimTrace
from fringe_mems.trajectory import TrajectoryConfig

__all__ = [
    "EPS0",
    "CapacitanceDecomposition",
    "ControlOutput",
    "ControllerConfig",
    "DeviceGeometry",
    "NormalizedParams",
    "PhysicalParams",
    "ReferencePoint",
    "Scenario",
    "SimTrace",
    "State",
    "TrajectoryConfig",
    "decompose",
    "ideal_capacitance",
    "palmer_capacitance",
    "rho_s_bound",
    "serial_capacitance",
    "substitute_capacitance",
]
