"""TOML scenario files.

A config is a handful of flat tables, all in SI units::

    [geometry]
    kind = "rectangle"     # rectangle | bottleneck | curved | shifted
    L = 100.0              # m
    B = 4.0                # m
    h = 0.5                # m, target element size
    buffer_depth = 4.0     # m, defaults to 2 R

    [crowd]
    N = 1500
    V = 1.18               # m/s
    rho_C = 1.3            # ped/m^2

    [model]
    c = 5e-4               # dimensionless
    theta_deg = 2.0
    R = 2.0                # m
    alpha_deg = 45.0
    wall_mode = "scrape"   # scrape | stop

    [entrance]
    F = 60.0               # ped/s
    p = 0.05

    [time]
    safety = 0.9
    dt_max = 1.0           # s
    T_end = 1200.0         # s
    snapshot_every = 0.5   # scaled time units (t / T)

Every key is optional; missing keys take the :class:`Scenario` defaults.
"""

from __future__ import annotations

import dataclasses
import math
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .simulation import Scenario

SECTIONS = {
    "geometry": ("kind", "L", "B", "h", "buffer_depth"),
    "crowd": ("N", "V", "rho_C"),
    "model": ("c", "theta_deg", "R", "alpha_deg", "wall_mode"),
    "entrance": ("F", "p"),
    "time": ("safety", "dt_max", "T_end", "snapshot_every", "stop_at_egress"),
    "output": ("section_x", "normalization", "outlet", "seed"),
}

_STR = {"kind", "wall_mode", "normalization", "outlet"}
_BOOL = {"stop_at_egress"}
_INT = {"seed"}


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


def _coerce(key: str, value, where: str, errs: list[str]):
    if key in _STR:
        if not isinstance(value, str):
            errs.append(f"{where}: expected a string (got {value!r})")
            return None
        return value
    if key in _BOOL:
        if not isinstance(value, bool):
            errs.append(f"{where}: expected true or false (got {value!r})")
            return None
        return value
    if key in _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            errs.append(f"{where}: expected an integer (got {value!r})")
            return None
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errs.append(f"{where}: expected a number (got {value!r})")
        return None
    if not math.isfinite(value):
        errs.append(f"{where}: must be finite (got {value!r})")
        return None
    return float(value)


def scenario_from_dict(data: dict) -> Scenario:
    """Build and validate a scenario; every problem is reported at once."""
    errs: list[str] = []
    kw = {}
    for section, body in data.items():
        if section not in SECTIONS:
            errs.append(f"{section}: unknown section (expected one of {', '.join(SECTIONS)})")
            continue
        if not isinstance(body, dict):
            errs.append(f"{section}: expected a table")
            continue
        for key, value in body.items():
            where = f"{section}.{key}"
            if key not in SECTIONS[section]:
                errs.append(f"{where}: unknown key")
                continue
            v = _coerce(key, value, where, errs)
            if v is not None:
                kw[key] = v
    # badly typed keys were dropped above, so the rest can still be checked
    scn = Scenario(**kw)
    where = {k: f"{s}.{k}" for s, keys in SECTIONS.items() for k in keys}
    for msg in scn.validate():
        name, _, rest = msg.partition(":")
        errs.append(f"{where.get(name, name)}:{rest}")
    if errs:
        raise ConfigError(errs)
    return scn


def load_config(path) -> Scenario:
    path = Path(path)
    try:
        with path.open("rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError([f"{path}: cannot read ({exc.strerror})"]) from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([f"{path}: not valid TOML ({exc})"]) from exc
    return scenario_from_dict(data)


def scenario_to_dict(scn: Scenario) -> dict:
    """Inverse of :func:`scenario_from_dict` (``None`` values are omitted)."""
    values = dataclasses.asdict(scn)
    out = {}
    for section, keys in SECTIONS.items():
        body = {k: values[k] for k in keys if values[k] is not None}
        if body:
            out[section] = body
    return out


def dump_config(scn: Scenario) -> str:
    lines = []
    for section, body in scenario_to_dict(scn).items():
        lines.append(f"[{section}]")
        for k, v in body.items():
            if isinstance(v, bool):
                lines.append(f"{k} = {'true' if v else 'false'}")
            elif isinstance(v, str):
                lines.append(f'{k} = "{v}"')
            else:
                lines.append(f"{k} = {v!r}")
        lines.append("")
    return "\n".join(lines)
