"""Sectioned key-value run configuration.

Physical entries carry their unit in the key suffix (``_m``, ``_kg``,
``_F``, ``_ohm``, ...); unsuffixed entries are dimensionless. Unknown keys
and sections are rejected, missing keys take the defaults below.

Example::

    [geometry]
    width_m = 600e-6
    length_m = 300e-6
    gap_m = 305e-6

    [parasitics]
    rho_p = 2
    rho_s = 0.226
"""

from __future__ import annotations

import configparser
import difflib
import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from fringe_mems import capmodel
from fringe_mems.capmodel import DeviceGeometry
from fringe_mems.controller import ControllerConfig
from fringe_mems.errors import DomainError
from fringe_mems.plant import NormalizedParams, PhysicalParams, normalize
from fringe_mems.simulator import DEFAULT_PRECHARGE, Scenario
from fringe_mems.trajectory import TrajectoryConfig

UNIT_SUFFIXES = ("_F_per_m", "_N_per_m", "_Ns_per_m", "_kg", "_ohm", "_m", "_F")

# section -> key -> (kind, default); kind is float, int, str or "opt" (optional float)
SCHEMA: dict[str, dict[str, tuple[Any, Any]]] = {
    "geometry": {
        "width_m": (float, 600e-6),
        "length_m": (float, 300e-6),
        "gap_m": (float, 305e-6),
        "permittivity_F_per_m": (float, capmodel.EPS0),
    },
    "physical": {
        "zeta": (float, 1.0),
        "r": (float, 1.0),
        "mass_kg": ("opt", None),
        "damping_Ns_per_m": ("opt", None),
        "stiffness_N_per_m": ("opt", None),
        "resistance_ohm": ("opt", None),
    },
    "parasitics": {
        "rho_p": (float, 0.0),
        "rho_s": (float, 0.0),
        "rho_s_mode": (str, "constant"),
        "c_ref_F": ("opt", None),
        "c_ser_min_F": ("opt", None),
    },
    "controller": {
        "k1": (float, 10.0),
        "k2": (float, 10.0),
        "k3": (float, 10.0),
        "kappa2": (float, 1.0),
        "kappa31": (float, 1.0),
        "kappa32": (float, 1.0),
        "kappa33": (float, 1.0),
        "kappa34": (float, 1.0),
        "zeta0": (float, 1.0),
        "rho_p_bar": (float, 0.0),
        "rho_s_bar": (float, 0.0),
        "r_min": (float, 1.0),
        "r_max": (float, 1.0),
        "beta0": ("opt", None),
        "eps_q": (float, 1e-6),
    },
    "trajectory": {
        "t_i": (float, 0.0),
        "t_f": (float, 10.0),
        "y_i": (float, 0.0),
        "y_f": (float, 0.4),
    },
    "simulation": {
        "t_end": (float, 20.0),
        "dt": (float, 1e-3),
        "precharge": (float, DEFAULT_PRECHARGE),
        "form": (str, "x3"),
        "record_every": (int, 1),
    },
}

_SI_KEYS = ("mass_kg", "damping_Ns_per_m", "stiffness_N_per_m", "resistance_ohm")
_CHOICES = {("parasitics", "rho_s_mode"): ("constant", "gap"), ("simulation", "form"): ("x3", "charge")}


class ConfigError(ValueError):
    def __init__(self, message: str, line: Optional[int] = None, source: str = "<config>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}" if line is not None else source
        super().__init__(f"{where}: {message}")


def _unit_of(key: str) -> Optional[str]:
    for suffix in UNIT_SUFFIXES:
        if key.endswith(suffix):
            return suffix[1:]
    return None


def _locate(text: str, section: Optional[str], key: Optional[str] = None) -> Optional[int]:
    current = None
    for n, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1].strip()
            if key is None and current == section:
                return n
            continue
        if key is not None and current == section:
            name = line.split("=", 1)[0].split(":", 1)[0].strip()
            if name == key:
                return n
    return None


def _format(value: Any) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    """Resolved configuration values, defaults filled in."""

    values: dict[str, dict[str, Any]] = field(default_factory=lambda: {
        sec: {k: d for k, (_, d) in keys.items()} for sec, keys in SCHEMA.items()
    })

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
        parser.optionxform = str
        try:
            parser.read_string(text, source=source)
        except configparser.Error as exc:
            line = getattr(exc, "lineno", None)
            if line is None and getattr(exc, "errors", None):
                line = exc.errors[0][0]
            raise ConfigError(exc.message.splitlines()[0], line, source) from exc
        cfg = cls()
        for section in parser.sections():
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", _locate(text, section), source)
            for key, raw in parser.items(section):
                line = _locate(text, section, key)
                cfg._assign(section, key, raw, line, source)
        try:
            cfg.validate()
        except (ConfigError, DomainError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), None, source) from exc
        return cfg

    @classmethod
    def from_file(cls, path) -> "RunConfig":
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
        return cls.from_text(text, source=str(path))

    def _assign(self, section, key, raw, line=None, source="<config>"):
        keys = SCHEMA[section]
        if key not in keys:
            hint = difflib.get_close_matches(key, keys, n=1)
            extra = f" (did you mean {hint[0]}?)" if hint else ""
            raise ConfigError(f"unknown key '{key}' in [{section}]{extra}", line, source)
        kind, _ = keys[key]
        raw = raw.strip()
        try:
            if kind == "opt":
                value = None if raw.lower() in ("", "none") else float(raw)
            elif kind is int:
                value = int(raw)
            elif kind is float:
                value = float(raw)
            else:
                value = raw
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {raw!r}", line, source) from None
        if isinstance(value, float) and not math.isfinite(value):
            raise ConfigError(f"{key}: value must be finite", line, source)
        if _unit_of(key) and value is not None and not value > 0:
            raise ConfigError(f"{key}: physical quantity in {_unit_of(key)} must be positive", line, source)
        choices = _CHOICES.get((section, key))
        if choices and value not in choices:
            raise ConfigError(f"{key}: expected one of {', '.join(choices)}, got {raw!r}", line, source)
        self.values[section][key] = value

    def set(self, dotted: str, raw: str) -> None:
        """Override one key from ``section.key`` notation."""
        if "." not in dotted:
            raise ConfigError(f"override {dotted!r} must look like section.key", source="--set")
        section, key = dotted.split(".", 1)
        if section not in SCHEMA:
            raise ConfigError(f"unknown section [{section}]", source="--set")
        self._assign(section, key, raw, source="--set")
        self.validate()

    def validate(self) -> None:
        phys = self.values["physical"]
        given = [k for k in _SI_KEYS if phys[k] is not None]
        if given and len(given) != len(_SI_KEYS):
            missing = sorted(set(_SI_KEYS) - set(given))
            raise ConfigError(f"[physical] SI description incomplete, missing {', '.join(missing)}")
        # Building every object runs the domain checks.
        self.geometry()
        self.plant()
        self.controller()
        self.trajectory()

    def to_text(self) -> str:
        lines = []
        for section, keys in SCHEMA.items():
            lines.append(f"[{section}]")
            for key in keys:
                value = self.values[section][key]
                if value is not None:
                    lines.append(f"{key} = {_format(value)}")
            lines.append("")
        return "\n".join(lines)

    def geometry(self) -> DeviceGeometry:
        g = self.values["geometry"]
        return DeviceGeometry(g["width_m"], g["length_m"], g["gap_m"], g["permittivity_F_per_m"])

    def physical(self) -> Optional[PhysicalParams]:
        phys = self.values["physical"]
        if phys["mass_kg"] is None:
            return None
        return PhysicalParams(
            mass=phys["mass_kg"],
            damping=phys["damping_Ns_per_m"],
            stiffness=phys["stiffness_N_per_m"],
            resistance=phys["resistance_ohm"],
            geometry=self.geometry(),
        )

    def c_ref(self) -> float:
        """Real capacitance at the initial gap: override, else Palmer."""
        c = self.values["parasitics"]["c_ref_F"]
        geom = self.geometry()
        return c if c is not None else capmodel.palmer_capacitance(geom, geom.initial_gap)

    def plant(self) -> NormalizedParams:
        par = self.values["parasitics"]
        phys = self.physical()
        if phys is not None:
            base = normalize(phys)
        else:
            base = NormalizedParams(zeta=self.values["physical"]["zeta"], r=self.values["physical"]["r"])
        fn = None
        if par["rho_s_mode"] == "gap":
            geom = self.geometry()
            c_ref = capmodel.palmer_capacitance(geom, geom.initial_gap)

            def fn(x1, _g=geom, _c=c_ref):
                return capmodel.rho_s_profile(_g, x1, None, _c)

        return replace(base, rho_p=par["rho_p"], rho_s=par["rho_s"], rho_s_fn=fn)

    def controller(self) -> ControllerConfig:
        return ControllerConfig(**self.values["controller"])

    def trajectory(self, setpoint: Optional[float] = None) -> TrajectoryConfig:
        t = dict(self.values["trajectory"])
        if setpoint is not None:
            t["y_f"] = setpoint
        return TrajectoryConfig(**t)

    def scenario(self, setpoint: Optional[float] = None) -> Scenario:
        sim = self.values["simulation"]
        return Scenario(
            plant=self.plant(),
            controller=self.controller(),
            trajectory=self.trajectory(setpoint),
            t_end=sim["t_end"],
            dt=sim["dt"],
            precharge=sim["precharge"],
            form=sim["form"],
            record_every=sim["record_every"],
        )
