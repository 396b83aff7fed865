"""Run configuration: a flat, sectioned ``key = value`` document.

Exactly one system section is required::

    [cascaded]               omega1 omega2 gamma1 gamma2 kappa1 kappa2 phi f
                             nbar1 nbar2 nbar3
    [optomech-linearized]    delta1 delta2 kappa1 kappa2 omega_m gamma_m j
                             g1 g2 phi nbar1 nbar2 nbar_m   (g1, g2 are G1, G2)
    [optomech-full]          delta1 delta2 kappa1 kappa2 omega_m gamma_m j
                             g1 g2 e1 e2 nbar1 nbar2 nbar_m

plus the optional sections ``[sweep]`` (``delta_min delta_max delta_steps
m3_min m3_max m3_steps``) and ``[run]`` (``output``, ``omega_eval``).  Every
key of a present section is required except those in ``[run]``.  Keys are
case-insensitive; ``f``, ``e1`` and ``e2`` accept complex literals such as
``1-0.5j``.
"""

from __future__ import annotations

import configparser
import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

from .model import (
    CascadedParams,
    DriveCoupling,
    LinearCoupling,
    OptomechParams,
    ParameterError,
    validate_cascaded,
    validate_optomech,
)

SYSTEMS = ("cascaded", "optomech-linearized", "optomech-full")
OUTPUTS = ("csv", "json")

_COMMON_OPTOMECH = ("delta1", "delta2", "kappa1", "kappa2", "omega_m", "gamma_m", "j")
SECTION_KEYS = {
    "cascaded": (
        "omega1", "omega2", "gamma1", "gamma2", "kappa1", "kappa2", "phi", "f",
        "nbar1", "nbar2", "nbar3",
    ),
    "optomech-linearized": _COMMON_OPTOMECH + ("g1", "g2", "phi", "nbar1", "nbar2", "nbar_m"),
    "optomech-full": _COMMON_OPTOMECH + ("g1", "g2", "e1", "e2", "nbar1", "nbar2", "nbar_m"),
    "sweep": ("delta_min", "delta_max", "delta_steps", "m3_min", "m3_max", "m3_steps"),
    "run": ("output", "omega_eval"),
}
_COMPLEX_KEYS = {"f", "e1", "e2"}
_INT_KEYS = {"delta_steps", "m3_steps"}


class ConfigError(ValueError):
    def __init__(self, message: str, key: str | None = None, line: int | None = None):
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)
        self.key = key
        self.line = line


@dataclass(frozen=True)
class Range:
    min: float
    max: float
    steps: int

    def values(self) -> np.ndarray:
        return np.linspace(self.min, self.max, self.steps)


@dataclass(frozen=True)
class SweepSpec:
    delta: Range
    m3: Range


@dataclass(frozen=True)
class RunConfig:
    system: str
    params: Union[CascadedParams, OptomechParams]
    sweep: SweepSpec | None = None
    output: str = "csv"
    omega_eval: float | None = None


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        m = re.match(r"^\[(.+)\]$", line)
        if m:
            current = m.group(1).strip().lower()
            if key is None and current == section:
                return lineno
            continue
        if current == section and key is not None:
            m = re.match(r"^([^=:#;]+?)\s*[=:]", line)
            if m and m.group(1).strip().lower() == key:
                return lineno
    return None


def _number(text: str, section: str, key: str, raw: str, kind: str):
    try:
        if kind == "int":
            value = int(raw)
        elif kind == "complex":
            value = complex(raw.replace(" ", ""))
            if value.imag == 0:
                value = complex(value.real, 0.0)
        else:
            value = float(raw)
    except ValueError:
        raise ConfigError(
            f"malformed number {raw!r} for {key}", key, _locate(text, section, key)
        ) from None
    finite = math.isfinite(value.real) and math.isfinite(value.imag) if kind == "complex" else math.isfinite(value)
    if not finite:
        raise ConfigError(f"{key} must be finite", key, _locate(text, section, key))
    return value


def _read_section(cp, text: str, section: str) -> dict:
    allowed = SECTION_KEYS[section]
    values = {}
    for key in cp[section]:
        if key not in allowed:
            raise ConfigError(
                f"unknown key in [{section}]", key, _locate(text, section, key)
            )
    for key in allowed:
        if section == "run":
            if key in cp[section]:
                values[key] = cp[section][key].strip()
            continue
        if key not in cp[section]:
            raise ConfigError(f"missing required key in [{section}]", key, _locate(text, section))
        kind = "int" if key in _INT_KEYS else "complex" if key in _COMPLEX_KEYS else "float"
        values[key] = _number(text, section, key, cp[section][key].strip(), kind)
    return values


def _range(text: str, values: dict, name: str) -> Range:
    lo, hi, steps = values[f"{name}_min"], values[f"{name}_max"], values[f"{name}_steps"]
    if steps < 2:
        raise ConfigError(f"{name}_steps must be at least 2", f"{name}_steps", _locate(text, "sweep", f"{name}_steps"))
    if not lo < hi:
        raise ConfigError(f"{name}_min must be below {name}_max", f"{name}_min", _locate(text, "sweep", f"{name}_min"))
    return Range(lo, hi, steps)


def _build_params(text: str, system: str, v: dict):
    if system == "cascaded":
        params = CascadedParams(
            omega1=v["omega1"], omega2=v["omega2"], gamma1=v["gamma1"], gamma2=v["gamma2"],
            kappa1=v["kappa1"], kappa2=v["kappa2"], phi=v["phi"], F=v["f"],
            nbar1=v["nbar1"], nbar2=v["nbar2"], nbar3=v["nbar3"],
        )
        validator = validate_cascaded
    else:
        if system == "optomech-linearized":
            coupling = LinearCoupling(v["g1"], v["g2"], v["phi"])
        else:
            coupling = DriveCoupling(v["g1"], v["g2"], v["e1"], v["e2"])
        params = OptomechParams(
            delta1=v["delta1"], delta2=v["delta2"], kappa1=v["kappa1"], kappa2=v["kappa2"],
            omega_m=v["omega_m"], gamma_m=v["gamma_m"], J=v["j"], coupling=coupling,
            nbar1=v["nbar1"], nbar2=v["nbar2"], nbar_m=v["nbar_m"],
        )
        validator = validate_optomech
    try:
        validator(params)
    except ParameterError as exc:
        key = exc.field.lower()
        raise ConfigError(str(exc), key, _locate(text, system, key)) from None
    return params


def parse_config(text: str) -> RunConfig:
    """Parse and validate a run configuration; raises :class:`ConfigError`."""
    cp = configparser.ConfigParser(
        strict=True, interpolation=None, inline_comment_prefixes=("#", ";"), default_section="\0"
    )
    try:
        cp.read_string(text)
    except configparser.DuplicateSectionError as exc:
        raise ConfigError(f"duplicate section [{exc.section}]", line=exc.lineno) from None
    except configparser.DuplicateOptionError as exc:
        raise ConfigError(f"duplicate key in [{exc.section}]", exc.option, exc.lineno) from None
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside of any section", line=exc.lineno) from None
    except configparser.Error as exc:
        raise ConfigError(f"unreadable config: {exc}") from None

    sections = [s.lower() for s in cp.sections()]
    if len(set(sections)) != len(sections):
        raise ConfigError("duplicate section (names are case-insensitive)")
    for original in cp.sections():
        if original.lower() not in SECTION_KEYS:
            raise ConfigError(f"unknown section [{original}]", line=_locate(text, original.lower()))
    if any(s != s.lower() for s in cp.sections()):
        for s in list(cp.sections()):
            if s != s.lower():
                cp[s.lower()] = dict(cp[s])
                cp.remove_section(s)

    systems = [s for s in cp.sections() if s in SYSTEMS]
    if len(systems) != 1:
        found = ", ".join(systems) if systems else "none"
        raise ConfigError(f"exactly one system section required, found: {found}")
    system = systems[0]
    params = _build_params(text, system, _read_section(cp, text, system))

    sweep = None
    if cp.has_section("sweep"):
        v = _read_section(cp, text, "sweep")
        sweep = SweepSpec(_range(text, v, "delta"), _range(text, v, "m3"))

    output, omega_eval = "csv", None
    if cp.has_section("run"):
        v = _read_section(cp, text, "run")
        if "output" in v:
            output = v["output"].lower()
            if output not in OUTPUTS:
                raise ConfigError(f"output must be one of {OUTPUTS}", "output", _locate(text, "run", "output"))
        if "omega_eval" in v:
            omega_eval = _number(text, "run", "omega_eval", v["omega_eval"], "float")
    return RunConfig(system, params, sweep, output, omega_eval)


def load_config(path) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())
