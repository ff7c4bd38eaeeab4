"""Domain specifications (TOML format) and run configuration.

A domain spec names a source domain and a map:

    [domain]
    name = "cardioid-2"
    source = "disc"            # "disc" | "square"
    convex_hint = false
    diameter_hint = 2.0        # optional, enables the convex lower baseline

    [domain.map]
    family = "cardioid"        # identity | radial-power | cardioid |
    k = 2.0                    #   moebius | composition
    # moebius:      a_re, a_im, theta
    # composition:  composition = [ {family = "...", ...}, ... ]

Specs round-trip losslessly through ``to_toml`` / ``parse_domain_spec``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from .errors import SpecParseError
from .maps import CardioidPower, Composition, Identity, Moebius, PlanarMap, RadialPower, Source

FAMILIES = ("identity", "radial-power", "cardioid", "moebius", "composition")


@dataclass(frozen=True)
class DomainSpec:
    name: str
    map: PlanarMap
    source: Source
    convex_hint: bool = False
    diameter_hint: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    """Defaults reproduce the acceptance suite."""

    beta_max: float = 64.0
    quadrature_level: int = 1
    fem_levels: tuple[int, int] = (2, 4)  # inclusive range
    json_path: Optional[str] = None
    csv_path: Optional[str] = None
    verify: bool = False
    baselines: bool = False

    @property
    def fem_level_list(self) -> list[int]:
        return list(range(self.fem_levels[0], self.fem_levels[1] + 1))


def _parse_source(text: str) -> Source:
    if text == "disc":
        return Source.UNIT_DISC
    if text == "square":
        return Source.CENTERED_SQUARE
    raise SpecParseError(f"unknown source {text!r} (expected 'disc' or 'square')")


def build_map(entry: dict, source: Source) -> PlanarMap:
    family = entry.get("family")
    if family not in FAMILIES:
        raise SpecParseError(f"unknown map family {family!r} (expected one of {FAMILIES})")
    try:
        if family == "identity":
            return Identity(source=source)
        if family == "radial-power":
            return RadialPower(k=float(entry["k"]), source=source)
        if family == "cardioid":
            return CardioidPower(k=float(entry["k"]), source=source)
        if family == "moebius":
            a = complex(float(entry.get("a_re", 0.0)), float(entry.get("a_im", 0.0)))
            return Moebius(a=a, theta=float(entry.get("theta", 0.0)), source=source)
        parts = entry.get("composition")
        if not isinstance(parts, list) or not parts:
            raise SpecParseError("composition requires a nonempty 'composition' list")
        built = [build_map(p, source) for p in parts]
        return Composition(parts=tuple(built))
    except SpecParseError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise SpecParseError(f"bad parameters for family {family!r}: {err}") from err


def parse_domain_spec(text: str) -> DomainSpec:
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as err:
        raise SpecParseError(f"invalid TOML: {err}") from err
    if "domain" not in data:
        raise SpecParseError("missing [domain] table")
    dom = data["domain"]
    source = _parse_source(dom.get("source", "disc"))
    if "map" not in dom:
        raise SpecParseError("missing [domain.map] table")
    pmap = build_map(dom["map"], source)
    diameter = dom.get("diameter_hint")
    return DomainSpec(
        name=str(dom.get("name", "")),
        map=pmap,
        source=source,
        convex_hint=bool(dom.get("convex_hint", False)),
        diameter_hint=None if diameter is None else float(diameter),
    )


def load_domain_spec(path) -> DomainSpec:
    with open(path, "rb") as fh:
        text = fh.read().decode()
    return parse_domain_spec(text)


def _map_fields(pmap: PlanarMap) -> dict:
    out: dict = {"family": pmap.family}
    if isinstance(pmap, (RadialPower, CardioidPower)):
        out["k"] = pmap.k
    elif isinstance(pmap, Moebius):
        out["a_re"] = pmap.a.real
        out["a_im"] = pmap.a.imag
        out["theta"] = pmap.theta
    elif isinstance(pmap, Composition):
        out["composition"] = [_map_fields(p) for p in pmap.parts]
    return out


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest round-trip representation
    if isinstance(v, int):
        return f"{v}.0"  # map parameters are floats
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, list):
        inner = ", ".join("{" + _inline_table(t) + "}" for t in v)
        return f"[{inner}]"
    raise TypeError(f"cannot serialize {type(v)}")


def _inline_table(d: dict) -> str:
    return ", ".join(f"{k} = {_toml_value(v)}" for k, v in d.items())


def to_toml(spec: DomainSpec) -> str:
    lines = ["[domain]"]
    lines.append(f'name = {_toml_value(spec.name)}')
    lines.append(f'source = "{spec.source.value}"')
    lines.append(f"convex_hint = {_toml_value(spec.convex_hint)}")
    if spec.diameter_hint is not None:
        lines.append(f"diameter_hint = {_toml_value(float(spec.diameter_hint))}")
    lines.append("")
    lines.append("[domain.map]")
    for k, v in _map_fields(spec.map).items():
        lines.append(f"{k} = {_toml_value(v)}")
    return "\n".join(lines) + "\n"
