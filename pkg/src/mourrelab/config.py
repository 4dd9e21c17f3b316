"""Line-oriented experiment configuration.

A config file is a sequence of ``[kind]`` sections with ``key = value`` lines.
Lines starting with ``#`` or ``;`` are comments. Keys before the first
section form a preamble (only ``output`` is recognised there). Example::

    output = reports

    [mourre-scan]
    name = mourre_d1
    d = 1
    L = 300
    delta = 0.1
    lambda = 0.1:3.9:0.1

Values are numbers, comma lists (``10, 50, 400``), inclusive ranges
(``start:stop:step``) or potential specs::

    zero | short_range:ALPHA | oscillating:OMEGA,ALPHA | point:SITE:STRENGTH
    custom:SITE=VALUE|SITE=VALUE      (SITE is a comma list of coordinates)

Lists of potentials are separated by ``;``. Parsing reports every problem
with its line number instead of stopping at the first one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .lattice import PotentialSpec
from .spectral import Interval, SmoothCutoff

__all__ = ["ConfigError", "ExperimentConfig", "KINDS", "parse_config", "parse_potential", "format_potential"]


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


# ---------------------------------------------------------------------------
# value parsers; each raises ValueError with a short reason


def _number(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise ValueError(f"malformed number {text!r}") from None


def _int(text: str) -> int:
    x = _number(text)
    if x != int(x):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(x)


def _positive(parse):
    def inner(text):
        x = parse(text)
        if not x > 0:
            raise ValueError(f"expected a positive value, got {text!r}")
        return x

    return inner


def _choice(*options):
    def inner(text):
        text = text.strip()
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}, got {text!r}")
        return text

    return inner


def _grid(text: str) -> list[float]:
    """Comma list or inclusive ``start:stop:step`` range."""
    text = text.strip()
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"range must be start:stop:step, got {text!r}")
        a, b, step = (_number(p) for p in parts)
        if not step > 0 or b < a:
            raise ValueError(f"empty range {text!r}")
        count = int(round((b - a) / step)) + 1
        return [round(a + i * step, 12) for i in range(count)]
    values = [_number(p) for p in text.split(",") if p.strip()]
    if not values:
        raise ValueError("empty list")
    return values


def _int_list(text: str) -> list[int]:
    return [_int(p) for p in text.split(",") if p.strip()] or _raise("empty list")


def _raise(msg):
    raise ValueError(msg)


def _interval(text: str) -> Interval:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 2:
        raise ValueError(f"interval must be 'lo, hi', got {text!r}")
    lo, hi = (_number(p) for p in parts)
    if not lo < hi:
        raise ValueError(f"interval {text!r} is empty")
    return Interval(lo, hi)


def _cutoff(text: str) -> SmoothCutoff:
    parts = [p for p in text.split(",") if p.strip()]
    if len(parts) != 3:
        raise ValueError(f"cutoff must be 'a, b, ramp', got {text!r}")
    a, b, w = (_number(p) for p in parts)
    return SmoothCutoff(a, b, w)


def _site(text: str) -> tuple[int, ...]:
    return tuple(_int(p) for p in text.split(","))


def parse_potential(text: str) -> PotentialSpec:
    text = text.strip()
    family, _, rest = text.partition(":")
    family = family.strip()
    if family == "zero":
        return PotentialSpec.zero()
    if family == "short_range":
        return PotentialSpec.short_range(_number(rest))
    if family == "oscillating":
        parts = rest.split(",")
        if len(parts) != 2:
            raise ValueError(f"oscillating needs OMEGA,ALPHA, got {rest!r}")
        return PotentialSpec.oscillating(_number(parts[0]), _number(parts[1]))
    if family == "point":
        site, _, strength = rest.rpartition(":")
        if not site:
            raise ValueError(f"point needs SITE:STRENGTH, got {rest!r}")
        return PotentialSpec.point(_site(site), _number(strength))
    if family == "custom":
        table = {}
        for entry in filter(None, (e.strip() for e in rest.split("|"))):
            site, eq, value = entry.partition("=")
            if not eq:
                raise ValueError(f"custom entry must be SITE=VALUE, got {entry!r}")
            table[_site(site)] = _number(value)
        return PotentialSpec.custom(table)
    raise ValueError(f"unknown potential family {family!r}")


def format_potential(spec: PotentialSpec) -> str:
    if spec.family == "zero":
        return "zero"
    if spec.family == "short_range":
        return f"short_range:{spec.alpha!r}"
    if spec.family == "oscillating":
        return f"oscillating:{spec.omega!r},{spec.alpha!r}"
    if spec.family == "point":
        return f"point:{','.join(map(str, spec.site))}:{spec.strength!r}"
    entries = "|".join(f"{','.join(map(str, k))}={v!r}" for k, v in sorted(spec.table.items()))
    return f"custom:{entries}"


def _potential_list(text: str) -> list[PotentialSpec]:
    specs = [parse_potential(p) for p in text.split(";") if p.strip()]
    if not specs:
        raise ValueError("empty potential list")
    return specs


# ---------------------------------------------------------------------------
# schema

REQUIRED = object()

_COMMON: dict[str, tuple[Callable[[str], Any], Any]] = {
    "name": (str.strip, None),
    "d": (_positive(_int), 1),
}

_BOX = {"L": (_positive(_int), REQUIRED), "potential": (parse_potential, PotentialSpec.zero())}

KINDS: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "commutator": {
        "L": (_positive(_int), REQUIRED),
        "potentials": (_potential_list, [PotentialSpec.zero(), PotentialSpec.short_range(2.0)]),
        "margin": (_positive(_int), 2),
    },
    "mourre-scan": {
        **_BOX,
        "delta": (_positive(_number), 0.1),
        "step": (_positive(_number), 0.05),
        "lambda": (_grid, None),
        "commutator": (_choice("closed", "matrix"), "closed"),
    },
    "propagation": {
        **_BOX,
        "interval": (_interval, Interval(1.0, 3.0)),
        "s": (_positive(_number), 1.0),
        "t_step": (_positive(_number), 1.0),
        "t_end": (_positive(_number), None),
    },
    "cesaro": {
        **_BOX,
        "interval": (_interval, Interval(1.0, 3.0)),
        "s": (_positive(_number), 1.0),
        "T": (_grid, [10.0, 50.0, 100.0, 200.0, 400.0]),
        "plateau_sizes": (_int_list, None),
        "quad_points": (_positive(_int), 64),
        "quad_T_max": (_positive(_number), 50.0),
    },
    "rage": {
        **_BOX,
        "T": (_grid, [10.0, 50.0, 200.0]),
        "site": (_site, None),
    },
    "kato": {
        **_BOX,
        "interval": (_interval, Interval(1.0, 3.0)),
        "s": (_positive(_number), 1.0),
        "T": (_positive(_number), None),
    },
    "rajchman": {
        **_BOX,
        "interval": (_interval, None),
        "t_step": (_positive(_number), 0.5),
        "t_end": (_positive(_number), None),
    },
    "heisenberg": {
        **_BOX,
        "interval": (_interval, Interval(1.0, 3.0)),
        "t_step": (_positive(_number), 1.0),
        "t_end": (_positive(_number), None),
    },
    "compactness": {
        "sizes": (_int_list, REQUIRED),
        "s": (_positive(_number), 1.0),
        "cutoff": (_cutoff, SmoothCutoff(1.0, 3.0, 0.25)),
        "k": (_positive(_int), 50),
    },
    "weyl": {
        "d": (_positive(_int), 2),
        "L": (_positive(_int), 64),
        "cutoff": (_cutoff, SmoothCutoff(1.0, 3.0, 0.25)),
        "nu": (_int, 1),
        "n": (_int_list, [2, 4, 8]),
    },
    "regularity": {
        "sizes": (_int_list, [100, 200]),
        "potentials": (_potential_list, [PotentialSpec.short_range(2.0), PotentialSpec.oscillating(1.0, 1.0)]),
        "k": (_positive(_int), 50),
    },
    "hs-kernel": {
        "L": (_positive(_int), 400),
        "cutoff": (_cutoff, SmoothCutoff(1.0, 3.0, 0.25)),
        "continuum_cutoff": (_cutoff, SmoothCutoff(1.0, 4.0, 0.25)),
        "resolution": (_positive(_int), 256),
    },
    "level-curves": {
        "energies": (_grid, [round(0.5 * i, 12) for i in range(1, 16)]),
        "resolution": (_positive(_int), 512),
    },
}

_PREAMBLE = {"output": (str.strip, None)}


@dataclass
class ExperimentConfig:
    kind: str
    name: str
    params: dict[str, Any]
    line: int = 0
    output: str | None = None

    def __getitem__(self, key):
        return self.params[key]

    def get(self, key, default=None):
        value = self.params.get(key)
        return default if value is None else value

    @property
    def d(self) -> int:
        return self.params["d"]


@dataclass
class _Section:
    kind: str
    line: int
    entries: dict[str, tuple[str, int]] = field(default_factory=dict)


def parse_config(text: str) -> list[ExperimentConfig]:
    """Parse and validate a config; raises ConfigError listing every problem."""
    errors: list[str] = []
    preamble: dict[str, tuple[str, int]] = {}
    sections: list[_Section] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                errors.append(f"line {lineno}: malformed section header {line!r}")
                continue
            kind = line[1:-1].strip()
            if kind not in KINDS:
                errors.append(f"line {lineno}: unknown experiment kind {kind!r}")
            sections.append(_Section(kind, lineno))
            continue
        key, eq, value = line.partition("=")
        key = key.strip()
        if not eq or not key:
            errors.append(f"line {lineno}: expected 'key = value', got {line!r}")
            continue
        target = sections[-1].entries if sections else preamble
        if key in target:
            errors.append(f"line {lineno}: duplicate key {key!r} (first set on line {target[key][1]})")
            continue
        target[key] = (value.strip(), lineno)

    output = None
    for key, (value, lineno) in preamble.items():
        if key not in _PREAMBLE:
            errors.append(f"line {lineno}: unknown key {key!r} outside any section")
        else:
            output = value
    if not sections:
        errors.append("no experiment section")

    configs = []
    names: dict[str, int] = {}
    for sec in sections:
        if sec.kind not in KINDS:
            continue
        schema = {**_COMMON, **KINDS[sec.kind]}
        params: dict[str, Any] = {}
        for key, (value, lineno) in sec.entries.items():
            if key not in schema:
                errors.append(f"line {lineno}: unknown key {key!r} for [{sec.kind}]")
                continue
            try:
                params[key] = schema[key][0](value)
            except ValueError as exc:
                errors.append(f"line {lineno}: {key}: {exc}")
        for key, (_, default) in schema.items():
            if key in params or key in {k for k in sec.entries}:
                continue
            if default is REQUIRED:
                errors.append(f"line {sec.line}: [{sec.kind}] missing required key {key!r}")
            else:
                params[key] = default
        name = params.get("name") or sec.kind
        if name in names:
            errors.append(f"line {sec.line}: experiment name {name!r} already used on line {names[name]}")
        names[name] = sec.line
        params["name"] = name
        configs.append(ExperimentConfig(sec.kind, name, params, sec.line, output))
    if errors:
        raise ConfigError(errors)
    return configs
