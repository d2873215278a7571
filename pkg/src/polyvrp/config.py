"""Formulation configuration: one point of the benchmark factor grid.

A configuration picks one of the four formulations plus the optional
tightening constraints, and serializes to a compact token such as
``GG+MinNVt+MaxNV+VI-010(G)`` (the VI bits are, in order, the depot
balance equality, the pair cuts and the triple cuts).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum


class Formulation(Enum):
    MTZ_L = "MTZ-L"
    GG = "GG"
    BHM = "BHM"
    MCF = "MCF"


class MinNv(Enum):
    OFF = "off"
    LOOSE = "loose"
    TIGHT = "tight"


class Vi2Mode(Enum):
    OFF = "off"
    FULL = "full"
    GRANULAR = "granular"


class ConfigError(ValueError):
    pass


_DIRECTED = (Formulation.MTZ_L, Formulation.GG, Formulation.MCF)
_VI_FORMS = (Formulation.MTZ_L, Formulation.GG)


@dataclass(frozen=True)
class FormulationConfig:
    formulation: Formulation
    minnv: MinNv = MinNv.OFF
    maxnv: bool = False
    fixedk: bool = False
    vi1: bool = False
    vi2: Vi2Mode = Vi2Mode.OFF
    vi3: bool = False
    fgx: bool = False
    mtd: bool = False

    def __post_init__(self):
        f = self.formulation
        if self.minnv is not MinNv.OFF and f not in _DIRECTED:
            raise ConfigError(f"MinNV does not apply to {f.value}")
        if self.maxnv and f not in _DIRECTED:
            raise ConfigError(f"MaxNV does not apply to {f.value}")
        if self.fixedk and f is not Formulation.BHM:
            raise ConfigError("FixedK applies to BHM only")
        if (self.vi1 or self.vi2 is not Vi2Mode.OFF or self.vi3) and f not in _VI_FORMS:
            raise ConfigError(f"VI-1/2/3 apply to MTZ-L and GG only, not {f.value}")
        if self.fgx and f is not Formulation.MCF:
            raise ConfigError("FGX applies to MCF only")
        if self.mtd and f not in _DIRECTED:
            raise ConfigError("tour-duration rows need directed arcs; BHM is edge-based")

    # -- token form -----------------------------------------------------

    def token(self) -> str:
        parts = [self.formulation.value]
        if self.minnv is not MinNv.OFF:
            parts.append("MinNVt" if self.minnv is MinNv.TIGHT else "MinNVl")
        if self.maxnv:
            parts.append("MaxNV")
        if self.fixedk:
            parts.append("FixedK")
        if self.vi1 or self.vi2 is not Vi2Mode.OFF or self.vi3:
            bits = f"{int(self.vi1)}{int(self.vi2 is not Vi2Mode.OFF)}{int(self.vi3)}"
            suffix = "(G)" if self.vi2 is Vi2Mode.GRANULAR else ""
            parts.append(f"VI-{bits}{suffix}")
        if self.fgx:
            parts.append("FGX")
        if self.mtd:
            parts.append("MTD")
        return "+".join(parts)

    def with_mtd(self, on: bool = True) -> "FormulationConfig":
        return replace(self, mtd=on)

    @classmethod
    def parse(cls, token: str) -> "FormulationConfig":
        parts = token.strip().split("+")
        by_value = {f.value.upper(): f for f in Formulation}
        head = parts[0].upper()
        if head not in by_value:
            raise ConfigError(f"unknown formulation {parts[0]!r}")
        kwargs: dict = {"formulation": by_value[head]}
        vi_re = re.compile(r"VI-([01])([01])([01])(\(G\))?$", re.IGNORECASE)
        for part in parts[1:]:
            p = part.strip()
            low = p.lower()
            if low == "minnvl":
                kwargs["minnv"] = MinNv.LOOSE
            elif low == "minnvt":
                kwargs["minnv"] = MinNv.TIGHT
            elif low == "maxnv":
                kwargs["maxnv"] = True
            elif low == "fixedk":
                kwargs["fixedk"] = True
            elif low == "fgx":
                kwargs["fgx"] = True
            elif low == "mtd":
                kwargs["mtd"] = True
            else:
                m = vi_re.match(p)
                if not m:
                    raise ConfigError(f"unknown config part {part!r}")
                kwargs["vi1"] = m.group(1) == "1"
                if m.group(2) == "1":
                    kwargs["vi2"] = Vi2Mode.GRANULAR if m.group(4) else Vi2Mode.FULL
                elif m.group(4):
                    raise ConfigError("granular marker (G) needs the middle VI bit set")
                kwargs["vi3"] = m.group(3) == "1"
        return cls(**kwargs)
