"""INI run configuration: typed sections, defaults, strict key checking and echo."""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import dataclass

from .kernel import FAMILIES, PRESETS, KernelSpec, preset


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> list[float]:
    return [float(x) for x in s.replace(",", " ").split()]


def _ints(s: str) -> list[int]:
    return [int(x) for x in s.replace(",", " ").split()]


def _optional_int(s: str):
    return None if s.strip() in ("", "auto") else int(s)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt(x) for x in v)
    if v is None:
        return ""
    return repr(v) if isinstance(v, float) else str(v)


# section -> key -> (parser, default)
SCHEMA = {
    "kernel": {
        "preset": (str, "bargmann_fock"),
        "family": (str, ""),
        "scale": (float, None),
        "a": (float, None),
        "beta": (float, None),
        "r_cut": (float, None),
        "value": (float, None),
        "normalize_sigma": (_bool, None),
    },
    "grid": {
        "n": (int, 64),
        "side": (float, 16.0),
        "cells_per_unit": (int, 4),
        "connectivity": (int, 4),
    },
    "run": {
        "seed": (int, 1),
        "samples": (int, 100),
        "jobs": (_optional_int, None),
        "route": (str, "white_noise"),
        "out": (str, "out"),
    },
    "event": {
        "kind": (str, "loop"),
        "direction": (int, 1),
        "R": (float, 1.0),
        "origin": (_floats, [0.0, 0.0]),
        "rotation": (int, 0),
        "center": (_floats, [0.0, 0.0]),
        "r1": (float, 1.0),
        "r2": (float, 4.0),
    },
    "experiment": {
        "sides": (_floats, [64.0, 128.0, 256.0]),
        "eps_list": (_floats, [1.0, 2.0]),
        "R_list": (_floats, [4.0, 8.0, 16.0, 32.0]),
        "levels": (_floats, [-0.2, 0.0, 0.2]),
        "side_factor": (int, 10),
        "target": (float, 0.9),
        "R": (float, 4.0),
        "L": (int, 2),
        "gap": (float, 1.0),
        "level": (float, 0.0),
        "loop_level": (float, 0.0),
        "glue_level": (float, 0.4),
        "r_list": (_floats, [1.0]),
        "L_list": (_floats, [2.0, 4.0, 8.0]),
    },
    "debug": {
        "corrupt_topology": (_bool, False),
    },
}


@dataclass
class RunConfig:
    sections: dict

    def __getitem__(self, section: str) -> dict:
        return self.sections[section]

    def kernel_spec(self) -> KernelSpec:
        k = self.sections["kernel"]
        overrides = {key: k[key] for key in ("scale", "a", "beta", "r_cut", "value") if k[key] is not None}
        if k["family"]:
            if k["family"] not in FAMILIES or k["family"] == "custom_table":
                raise ConfigError(f"kernel family {k['family']!r} cannot be built from a config file")
            return KernelSpec(k["family"], overrides, bool(k["normalize_sigma"]), name=k["family"])
        if k["preset"] not in PRESETS:
            raise ConfigError(f"unknown kernel preset {k['preset']!r}; known: {sorted(PRESETS)}")
        if k["normalize_sigma"] is not None:
            overrides["normalize_sigma"] = k["normalize_sigma"]
        return preset(k["preset"], **overrides)

    def to_ini(self, skip=()) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for section, values in self.sections.items():
            cp[section] = {key: _fmt(v) for key, v in values.items() if key not in skip}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        """Hash of every setting that can change results; output directory and worker count cannot."""
        return hashlib.sha256(self.to_ini(skip=("out", "jobs")).encode()).hexdigest()[:16]


def parse_config(text: str = "", overrides: dict | None = None) -> RunConfig:
    """Parse INI text, reject unknown sections and keys, fill defaults, apply ``overrides``.

    ``overrides`` maps ``(section, key)`` to an already typed value.
    """
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    sections = {}
    for name in cp.sections():
        if name not in SCHEMA:
            raise ConfigError(f"unknown section [{name}]; known: {sorted(SCHEMA)}")
    for name, keys in SCHEMA.items():
        given = cp[name] if cp.has_section(name) else {}
        for key in given:
            if key not in keys:
                raise ConfigError(f"unknown key {key!r} in [{name}]; known: {sorted(keys)}")
        vals = {}
        for key, (conv, default) in keys.items():
            if key in given and default is None and given[key].strip() == "":
                # unset optional keys are echoed as empty values
                vals[key] = None
            elif key in given:
                try:
                    vals[key] = conv(given[key])
                except ValueError as exc:
                    raise ConfigError(f"[{name}] {key}: {exc}") from None
            else:
                vals[key] = list(default) if isinstance(default, list) else default
        sections[name] = vals
    for (section, key), value in (overrides or {}).items():
        if value is not None:
            sections[section][key] = value
    cfg = RunConfig(sections)
    cfg.kernel_spec()
    if sections["run"]["route"] not in ("white_noise", "spectral_oracle"):
        raise ConfigError(f"unknown route {sections['run']['route']!r}")
    if sections["grid"]["connectivity"] not in (4, 8):
        raise ConfigError("connectivity must be 4 or 8")
    if sections["run"]["samples"] < 1:
        raise ConfigError("samples must be positive")
    return cfg
