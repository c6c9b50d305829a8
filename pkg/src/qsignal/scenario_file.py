"""Reader and canonical writer for scenario files.

Format::

    # comment
    [scenario]
    distance = 1.0
    t_a = 0.8          # trailing comments are fine
    regime = electromagnetic

    [sphere.inner]
    radius = 10
    density = 2.5464790894703255
    phi = 0.5

Sections: ``[scenario]``, ``[traps]``, ``[sphere.<label>]`` (any number),
``[sweep]`` and ``[packets]``; all optional, but a section that is present
must carry its required keys. Keys are lowercase identifiers; values are
decimal numbers, ``true``/``false``, or identifiers. Numbers keep full
double precision.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields
from typing import Any, Callable

from .gedanken import FULL_SOLID_ANGLE, Regime, Scenario, SphereArrangement, TrapArray


class ScenarioFileError(ValueError):
    pass


class ScenarioSyntaxError(ScenarioFileError):
    def __init__(self, msg: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {msg}")
        self.line = line
        self.column = column


class UnknownKeyError(ScenarioFileError):
    """Unknown key or section name."""


class MissingKeyError(ScenarioFileError):
    pass


class ValueTypeError(ScenarioFileError):
    """Value of the wrong kind (e.g. an identifier where a number is due)."""


class OutOfRangeError(ScenarioFileError):
    pass


_REQUIRED = object()

_NUMBER = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?")
_INT = re.compile(r"[+-]?\d+")
_IDENT = re.compile(r"[a-z_][a-z0-9_\-]*")
_KEY = re.compile(r"[a-z_][a-z0-9_]*")
_SECTION = re.compile(r"(scenario|traps|sweep|packets|sphere\.[a-z0-9_]+)")

_REGIMES = {"electromagnetic": Regime.EM, "em": Regime.EM,
            "gravitational": Regime.GRAV, "grav": Regime.GRAV}


@dataclass(frozen=True)
class _Key:
    kind: str                       # "float", "int", "bool", "ident"
    default: Any = _REQUIRED
    check: Callable[[Any], bool] | None = None
    rule: str = ""


def _nonneg(v):
    return v >= 0


def _pos(v):
    return v > 0


_SCHEMA: dict[str, dict[str, _Key]] = {
    "scenario": {
        "distance": _Key("float", check=_pos, rule="distance > 0"),
        "t_a": _Key("float", check=_nonneg, rule="t_a >= 0"),
        "t_b": _Key("float", check=_nonneg, rule="t_b >= 0"),
        "dipole": _Key("float", 0.0, _nonneg, "dipole >= 0"),
        "quadrupole": _Key("float", 0.0, _nonneg, "quadrupole >= 0"),
        "separation": _Key("float", 0.0, _nonneg, "separation >= 0"),
        "q_b": _Key("float", 1.0, _nonneg, "q_b >= 0"),
        "m_b": _Key("float", 1.0, _pos, "m_b > 0"),
        "regime": _Key("ident", "electromagnetic", lambda v: v in _REGIMES,
                       "regime in {electromagnetic, gravitational}"),
    },
    "traps": {
        "count": _Key("int", check=lambda v: v >= 1, rule="count >= 1"),
        "epsilon": _Key("float", check=lambda v: 0 <= v < 1, rule="0 <= epsilon < 1"),
        "branches": _Key("int", 1, lambda v: v >= 1, "branches >= 1"),
        "leak": _Key("float", 0.0, lambda v: 0 <= v <= 1, "0 <= leak <= 1"),
    },
    "sphere": {
        "radius": _Key("float", check=_pos, rule="radius > 0"),
        "density": _Key("float", check=_nonneg, rule="density >= 0"),
        # phi = 1 is admitted as the light-cone limit of the closed forms
        "phi": _Key("float", check=lambda v: 0 < v <= 1,
                    rule="phi < 1 (0 < phi, with phi = 1 only as the light-cone limit)"),
        "solid_angle": _Key("float", FULL_SOLID_ANGLE, lambda v: 0 < v <= FULL_SOLID_ANGLE,
                            "0 < solid_angle <= 4 pi"),
    },
    "sweep": {
        "trials": _Key("int", 1000, lambda v: v >= 1, "trials >= 1"),
        "dim_min": _Key("int", 2, lambda v: v >= 1, "dim_min >= 1"),
        "dim_max": _Key("int", 8, lambda v: 1 <= v <= 32, "1 <= dim_max <= 32"),
        "grid": _Key("int", 50, lambda v: v >= 1, "grid >= 1"),
        "pairs": _Key("int", 50, lambda v: v >= 1, "pairs >= 1"),
        "models": _Key("int", 100, lambda v: v >= 1, "models >= 1"),
    },
    "packets": {
        "a": _Key("float", 10.0, _pos, "a > 0"),
        "width": _Key("float", 1.0, _pos, "width > 0"),
        "shift": _Key("float", 0.1, _nonneg, "shift >= 0"),
    },
}


@dataclass(frozen=True)
class TrapsSection:
    array: TrapArray
    branches: int = 1
    leak: float = 0.0


@dataclass(frozen=True)
class SweepSection:
    trials: int = 1000
    dim_min: int = 2
    dim_max: int = 8
    grid: int = 50
    pairs: int = 50
    models: int = 100


@dataclass(frozen=True)
class PacketsSection:
    a: float = 10.0
    width: float = 1.0
    shift: float = 0.1


@dataclass(frozen=True)
class ScenarioBundle:
    scenario: Scenario | None = None
    traps: TrapsSection | None = None
    spheres: tuple[tuple[str, SphereArrangement], ...] = ()
    sweep: SweepSection = field(default_factory=SweepSection)
    packets: PacketsSection = field(default_factory=PacketsSection)


def _strip_comment(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _parse_value(tok: str, lineno: int, col: int):
    if tok in ("true", "false"):
        return tok == "true"
    if _NUMBER.fullmatch(tok):
        return int(tok) if _INT.fullmatch(tok) else float(tok)
    if _IDENT.fullmatch(tok):
        return tok
    raise ScenarioSyntaxError(f"cannot read value {tok!r}", lineno, col)


def _coerce(section: str, key: str, spec: _Key, raw):
    where = f"[{section}] {key}"
    if spec.kind == "float":
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise ValueTypeError(f"{where}: expected a number, got {raw!r}")
        v = float(raw)
        if not math.isfinite(v):
            raise OutOfRangeError(f"{where}: must be finite")
    elif spec.kind == "int":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise ValueTypeError(f"{where}: expected an integer, got {raw!r}")
        v = raw
    elif spec.kind == "bool":
        if not isinstance(raw, bool):
            raise ValueTypeError(f"{where}: expected true or false, got {raw!r}")
        v = raw
    else:
        if not isinstance(raw, str):
            raise ValueTypeError(f"{where}: expected an identifier, got {raw!r}")
        v = raw
    if spec.check is not None and not spec.check(v):
        raise OutOfRangeError(f"{where} = {raw!r} violates {spec.rule}")
    return v


def _tokenize(text: str) -> list[tuple[str, dict[str, tuple[Any, int]], int]]:
    """Split into sections of raw key -> (value, line); syntax checks only."""
    sections: list[tuple[str, dict[str, tuple[Any, int]], int]] = []
    seen = set()
    current = None
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw_line)
        body = line.strip()
        if not body:
            continue
        col = len(line) - len(line.lstrip()) + 1
        if body.startswith("["):
            if not body.endswith("]"):
                raise ScenarioSyntaxError("unterminated section header", lineno, col + len(body))
            name = body[1:-1].strip()
            if not _SECTION.fullmatch(name):
                if re.fullmatch(r"[a-z_][a-z0-9_]*(?:\.[a-z0-9_]+)?", name):
                    raise UnknownKeyError(f"line {lineno}: unknown section [{name}]")
                raise ScenarioSyntaxError(f"bad section name {name!r}", lineno, col + 1)
            if name in seen:
                raise ScenarioSyntaxError(f"duplicate section [{name}]", lineno, col)
            seen.add(name)
            current = {}
            sections.append((name, current, lineno))
            continue
        eq = line.find("=")
        if eq < 0:
            raise ScenarioSyntaxError("expected 'key = value'", lineno, col)
        key = line[:eq].strip()
        if not _KEY.fullmatch(key):
            raise ScenarioSyntaxError(f"bad key {key!r}", lineno, col)
        if current is None:
            raise ScenarioSyntaxError(f"key {key!r} outside any section", lineno, col)
        if key in current:
            raise ScenarioSyntaxError(f"duplicate key {key!r}", lineno, col)
        rest = line[eq + 1:]
        tok = rest.strip()
        vcol = eq + 2 + (len(rest) - len(rest.lstrip()))
        if not tok:
            raise ScenarioSyntaxError(f"missing value for {key!r}", lineno, eq + 2)
        if " " in tok or "\t" in tok:
            raise ScenarioSyntaxError(f"unexpected text after value in {tok!r}", lineno, vcol)
        current[key] = (_parse_value(tok, lineno, vcol), lineno)
    return sections


def _fill(section: str, kind: str, raw: dict[str, tuple[Any, int]]) -> dict[str, Any]:
    schema = _SCHEMA[kind]
    for key, (_, lineno) in raw.items():
        if key not in schema:
            raise UnknownKeyError(f"line {lineno}: unknown key {key!r} in [{section}]")
    out = {}
    for key, spec in schema.items():
        if key in raw:
            out[key] = _coerce(section, key, spec, raw[key][0])
        elif spec.default is _REQUIRED:
            raise MissingKeyError(f"[{section}] is missing required key {key!r}")
        else:
            out[key] = spec.default
    return out


def parse_scenario(text: str) -> ScenarioBundle:
    """Parse scenario-file text; raises a ``ScenarioFileError`` subclass."""
    scenario = traps = None
    spheres = []
    sweep, packets = SweepSection(), PacketsSection()
    for name, raw, _ in _tokenize(text):
        kind = name.split(".", 1)[0]
        v = _fill(name, kind, raw)
        if kind == "scenario":
            regime = _REGIMES[v.pop("regime")]
            if regime is Regime.EM and "dipole" not in raw:
                raise MissingKeyError("[scenario] electromagnetic regime requires 'dipole'")
            if regime is Regime.GRAV and "quadrupole" not in raw:
                raise MissingKeyError("[scenario] gravitational regime requires 'quadrupole'")
            scenario = Scenario(regime=regime, **v)
        elif kind == "traps":
            traps = TrapsSection(TrapArray(v["count"], v["epsilon"]), v["branches"], v["leak"])
        elif kind == "sphere":
            spheres.append((name.split(".", 1)[1], SphereArrangement(**v)))
        elif kind == "sweep":
            if v["dim_min"] > v["dim_max"]:
                raise OutOfRangeError("[sweep] violates dim_min <= dim_max")
            sweep = SweepSection(**v)
        else:
            packets = PacketsSection(**v)
    return ScenarioBundle(scenario, traps, tuple(spheres), sweep, packets)


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def dump_scenario(b: ScenarioBundle) -> str:
    """Canonical text: fixed section and key order, every key written out."""
    lines = []
    if b.scenario is not None:
        s = b.scenario
        lines.append("[scenario]")
        for key in _SCHEMA["scenario"]:
            val = s.regime.value if key == "regime" else getattr(s, key)
            lines.append(f"{key} = {_fmt(val)}")
        lines.append("")
    if b.traps is not None:
        lines += ["[traps]", f"count = {b.traps.array.count}",
                  f"epsilon = {_fmt(float(b.traps.array.epsilon))}",
                  f"branches = {b.traps.branches}", f"leak = {_fmt(float(b.traps.leak))}", ""]
    for label, sp in b.spheres:
        lines.append(f"[sphere.{label}]")
        for key in _SCHEMA["sphere"]:
            lines.append(f"{key} = {_fmt(float(getattr(sp, key)))}")
        lines.append("")
    for name, sec in (("sweep", b.sweep), ("packets", b.packets)):
        lines.append(f"[{name}]")
        for f in fields(sec):
            lines.append(f"{f.name} = {_fmt(getattr(sec, f.name))}")
        lines.append("")
    return "\n".join(lines)
