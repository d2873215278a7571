"""CVRP instance loading and basic instance-level quantities.

Reads TSPLIB/CVRPLIB ``.vrp`` files (EUC_2D, GEO and EXPLICIT edge weights),
normalizes the depot to node 0 and customers to 1..n, and exposes the
demand/capacity/distance data every model builder works from.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np


class InstanceError(Exception):
    """Base class for instance loading failures."""


class ParseError(InstanceError):
    """Malformed file content; carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)


class SchemaError(InstanceError):
    """Required section or header missing."""


class UnsupportedFormatError(InstanceError):
    """Edge-weight type or format this reader does not handle."""


class InstanceDataError(InstanceError):
    """Data violates a CVRP invariant (e.g. a demand exceeds capacity)."""


class Rounding(Enum):
    NEAREST_INTEGER = "nearest"
    EXACT = "exact"


def nint(x: float) -> int:
    """TSPLIB nearest-integer rounding (half away from zero)."""
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


@dataclass(frozen=True)
class MtdData:
    """Maximum-tour-duration data: duration cap, service times, travel times."""

    d_max: float
    service_time: np.ndarray  # per node, index 0 (depot) is 0
    travel: np.ndarray  # (n+1)x(n+1); defaults to the distance matrix


@dataclass(frozen=True)
class Instance:
    """A CVRP instance with depot = node 0 and customers 1..n.

    ``demands[0]`` is 0 by construction; ``dist[i][i]`` is stored as 0 but
    means "arc absent" -- no builder ever creates a self-arc.
    """

    name: str
    n: int
    demands: np.ndarray  # length n+1
    capacity: float
    k_fixed: int | None  # None = unlimited fleet
    dist: np.ndarray  # (n+1)x(n+1)
    rounding: Rounding
    coords: np.ndarray | None = None  # (n+1)x2 when the file had coordinates
    mtd: MtdData | None = None

    def __post_init__(self):
        q, d = self.demands, self.dist
        if q.shape != (self.n + 1,) or d.shape != (self.n + 1, self.n + 1):
            raise InstanceDataError(f"{self.name}: inconsistent array shapes")
        if q[0] != 0:
            raise InstanceDataError(f"{self.name}: depot demand must be 0")
        if self.n >= 1 and q[1:].min() <= 0:
            bad = int(np.argmin(q[1:]) + 1)
            raise InstanceDataError(f"{self.name}: customer {bad} has non-positive demand")
        if q.max() > self.capacity:
            bad = int(np.argmax(q))
            raise InstanceDataError(
                f"{self.name}: demand of customer {bad} exceeds capacity {self.capacity}"
            )
        if d.min() < 0:
            raise InstanceDataError(f"{self.name}: negative distance entry")
        if self.rounding is Rounding.NEAREST_INTEGER and not np.all(d == np.round(d)):
            raise InstanceDataError(f"{self.name}: non-integral distances under integer rounding")
        if self.mtd is not None:
            t, fst = self.mtd.travel, self.mtd.service_time
            for i in range(1, self.n + 1):
                if fst[i] + t[0, i] + t[i, 0] > self.mtd.d_max + 1e-9:
                    raise InstanceDataError(
                        f"{self.name}: customer {i} unreachable within tour duration "
                        f"{self.mtd.d_max}"
                    )
        for arr in (q, d, self.coords):
            if arr is not None:
                arr.setflags(write=False)

    @property
    def customers(self) -> range:
        return range(1, self.n + 1)

    @property
    def nodes(self) -> range:
        return range(self.n + 1)

    @property
    def total_demand(self) -> float:
        return float(self.demands.sum())

    def min_vehicles(self) -> int:
        """Bin-packing lower bound on the number of routes."""
        return int(demand_ceiling(self.total_demand, self.capacity, self.integral_demands))

    @property
    def integral_demands(self) -> bool:
        return bool(np.all(self.demands == np.round(self.demands)))

    def is_symmetric(self, tol: float = 0.0) -> bool:
        return bool(np.all(np.abs(self.dist - self.dist.T) <= tol))

    def with_mtd(self, d_max: float, fst: float, travel: np.ndarray | None = None) -> "Instance":
        """Return a copy restricted by a maximum tour duration."""
        t = self.dist if travel is None else travel
        service = np.zeros(self.n + 1)
        service[1:] = fst
        mtd = MtdData(d_max=float(d_max), service_time=service, travel=np.array(t, dtype=float))
        return Instance(
            name=self.name,
            n=self.n,
            demands=self.demands,
            capacity=self.capacity,
            k_fixed=self.k_fixed,
            dist=self.dist,
            rounding=self.rounding,
            coords=self.coords,
            mtd=mtd,
        )


def demand_ceiling(total: float, capacity: float, integral: bool) -> int:
    """Ceiling of total/capacity, exact for integral data, tolerant otherwise.

    The tolerance keeps float noise (e.g. 3.0000000001 from a fractional
    demand sum) from pushing the ceiling one step too high.
    """
    if integral and float(total).is_integer() and float(capacity).is_integer():
        t, c = int(round(total)), int(round(capacity))
        return -(-t // c)
    return int(math.ceil(total / capacity - 1e-9))


def tightness(inst: Instance) -> float | None:
    """Total demand over total fleet capacity; None for an unlimited fleet."""
    if inst.k_fixed is None:
        return None
    return inst.total_demand / (inst.capacity * inst.k_fixed)


def space_diameter(inst: Instance) -> float:
    """Largest distance over all ordered node pairs i != j."""
    d = inst.dist.copy()
    np.fill_diagonal(d, -np.inf)
    return float(d.max())


def instance_class(n: int) -> int:
    """Size class 1-4 by customer count (41-50, 51-71 and >=72 boundaries)."""
    if n <= 40:
        return 1
    if n <= 50:
        return 2
    if n <= 71:
        return 3
    return 4


# ---------------------------------------------------------------------------
# TSPLIB / CVRPLIB reader


_TRUCKS_RE = re.compile(r"(?:no\s+of\s+trucks|trucks)\s*:\s*(\d+)", re.IGNORECASE)

_HEADER_KEYS = {
    "NAME",
    "TYPE",
    "COMMENT",
    "DIMENSION",
    "CAPACITY",
    "VEHICLES",
    "EDGE_WEIGHT_TYPE",
    "EDGE_WEIGHT_FORMAT",
    "DISPLAY_DATA_TYPE",
    "NODE_COORD_TYPE",
    "DISTANCE",
}

_SECTION_KEYS = {
    "NODE_COORD_SECTION",
    "DEMAND_SECTION",
    "DEPOT_SECTION",
    "EDGE_WEIGHT_SECTION",
    "DISPLAY_DATA_SECTION",
}


def parse_instance(path: str | Path, rounding_override: Rounding | None = None) -> Instance:
    """Read a CVRPLIB ``.vrp`` file into an :class:`Instance`.

    The depot found in DEPOT_SECTION becomes node 0 and the remaining nodes
    are renumbered 1..n in file order. EUC_2D distances are rounded to the
    nearest integer unless ``rounding_override`` asks for exact values; GEO
    uses the TSPLIB geographical formula; EXPLICIT matrices are taken as
    written.
    """
    path = Path(path)
    lines = path.read_text().splitlines()

    headers: dict[str, str] = {}
    sections: dict[str, list[tuple[int, str]]] = {}
    current: str | None = None
    for idx, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line:
            continue
        if line.upper().startswith("EOF"):
            break
        key = line.split(":", 1)[0].strip().upper() if ":" in line else line.split()[0].upper()
        if key in _HEADER_KEYS and (":" in line or len(line.split()) == 1):
            headers[key] = line.split(":", 1)[1].strip() if ":" in line else ""
            current = None
            continue
        if line.upper() in _SECTION_KEYS:
            current = line.upper()
            sections[current] = []
            continue
        if current is None:
            raise ParseError(f"unexpected content {line!r} outside any section", idx)
        sections[current].append((idx, line))

    if "DIMENSION" not in headers:
        raise SchemaError(f"{path.name}: missing DIMENSION header")
    try:
        dim = int(headers["DIMENSION"])
    except ValueError:
        raise SchemaError(f"{path.name}: non-integer DIMENSION {headers['DIMENSION']!r}")
    if dim < 2:
        raise SchemaError(f"{path.name}: DIMENSION must be at least 2")
    if "CAPACITY" not in headers:
        raise SchemaError(f"{path.name}: missing CAPACITY header")
    capacity = float(headers["CAPACITY"])
    name = headers.get("NAME", path.stem) or path.stem
    ew_type = headers.get("EDGE_WEIGHT_TYPE", "EUC_2D").upper()

    if "DEMAND_SECTION" not in sections:
        raise SchemaError(f"{path.name}: missing DEMAND_SECTION")
    if "DEPOT_SECTION" not in sections:
        raise SchemaError(f"{path.name}: missing DEPOT_SECTION")

    # Fleet size comes from an explicit VEHICLES header or the conventional
    # "No of trucks: k" comment. The -k suffix of the file name is not
    # trusted: some libraries use it for the route count of the best known
    # solution rather than an actual fleet bound.
    k_fixed: int | None = None
    if "VEHICLES" in headers:
        k_fixed = int(headers["VEHICLES"])
    else:
        m = _TRUCKS_RE.search(headers.get("COMMENT", ""))
        if m:
            k_fixed = int(m.group(1))

    demands_raw = _read_demands(sections["DEMAND_SECTION"], dim, path.name)
    depot_file_id = _read_depot(sections["DEPOT_SECTION"], path.name)

    coords_raw = None
    if ew_type in ("EUC_2D", "GEO"):
        if "NODE_COORD_SECTION" not in sections:
            raise SchemaError(f"{path.name}: {ew_type} requires NODE_COORD_SECTION")
        coords_raw = _read_coords(sections["NODE_COORD_SECTION"], dim, path.name)

    if ew_type == "EUC_2D":
        rounding = rounding_override or Rounding.NEAREST_INTEGER
        full = _euclidean_matrix(coords_raw, rounding)
    elif ew_type == "GEO":
        rounding = Rounding.NEAREST_INTEGER
        full = _geo_matrix(coords_raw)
    elif ew_type == "EXPLICIT":
        if "EDGE_WEIGHT_SECTION" not in sections:
            raise SchemaError(f"{path.name}: EXPLICIT requires EDGE_WEIGHT_SECTION")
        fmt = headers.get("EDGE_WEIGHT_FORMAT", "FULL_MATRIX").upper()
        full = _explicit_matrix(sections["EDGE_WEIGHT_SECTION"], dim, fmt, path.name)
        integral = bool(np.all(full == np.round(full)))
        rounding = Rounding.NEAREST_INTEGER if integral else Rounding.EXACT
    else:
        raise UnsupportedFormatError(f"{path.name}: EDGE_WEIGHT_TYPE {ew_type} not supported")

    # Relabel: depot to position 0, remaining nodes keep file order.
    order = [depot_file_id] + [i for i in range(dim) if i != depot_file_id]
    perm = np.array(order)
    dist = full[np.ix_(perm, perm)]
    demands = demands_raw[perm]
    coords = coords_raw[perm] if coords_raw is not None else None
    if demands[0] != 0:
        raise InstanceDataError(f"{path.name}: depot has nonzero demand {demands[0]}")

    return Instance(
        name=name,
        n=dim - 1,
        demands=demands,
        capacity=capacity,
        k_fixed=k_fixed,
        dist=dist,
        rounding=rounding,
        coords=coords,
    )


def _read_coords(entries: list[tuple[int, str]], dim: int, fname: str) -> np.ndarray:
    coords = np.full((dim, 2), np.nan)
    for line_no, line in entries:
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"{fname}: coordinate row needs 'id x y', got {line!r}", line_no)
        try:
            node, x, y = int(parts[0]), float(parts[1]), float(parts[2])
        except ValueError:
            raise ParseError(f"{fname}: bad coordinate row {line!r}", line_no)
        if not 1 <= node <= dim:
            raise ParseError(f"{fname}: node id {node} out of range 1..{dim}", line_no)
        coords[node - 1] = (x, y)
    if np.isnan(coords).any():
        raise SchemaError(f"{fname}: NODE_COORD_SECTION incomplete")
    return coords


def _read_demands(entries: list[tuple[int, str]], dim: int, fname: str) -> np.ndarray:
    demands = np.full(dim, np.nan)
    for line_no, line in entries:
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"{fname}: demand row needs 'id q', got {line!r}", line_no)
        try:
            node, q = int(parts[0]), float(parts[1])
        except ValueError:
            raise ParseError(f"{fname}: bad demand row {line!r}", line_no)
        if not 1 <= node <= dim:
            raise ParseError(f"{fname}: node id {node} out of range 1..{dim}", line_no)
        demands[node - 1] = q
    if np.isnan(demands).any():
        raise SchemaError(f"{fname}: DEMAND_SECTION incomplete")
    return demands


def _read_depot(entries: list[tuple[int, str]], fname: str) -> int:
    ids = []
    for line_no, line in entries:
        for tok in line.split():
            try:
                v = int(float(tok))
            except ValueError:
                raise ParseError(f"{fname}: bad depot entry {tok!r}", line_no)
            if v == -1:
                continue
            ids.append((line_no, v))
    if len(ids) != 1:
        raise SchemaError(f"{fname}: expected exactly one depot, got {len(ids)}")
    return ids[0][1] - 1


def _euclidean_matrix(coords: np.ndarray, rounding: Rounding) -> np.ndarray:
    diff = coords[:, None, :] - coords[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    if rounding is Rounding.NEAREST_INTEGER:
        d = np.floor(d + 0.5)  # nonnegative, so this is TSPLIB nint
    return d


def _geo_matrix(coords: np.ndarray) -> np.ndarray:
    """TSPLIB geographical distances (DDD.MM coordinates, earth radius 6378.388)."""
    pi = 3.141592
    rrr = 6378.388
    deg = np.array([[nint(v) for v in row] for row in coords], dtype=float)
    minutes = coords - deg
    rad = pi * (deg + 5.0 * minutes / 3.0) / 180.0
    lat, lon = rad[:, 0], rad[:, 1]
    q1 = np.cos(lon[:, None] - lon[None, :])
    q2 = np.cos(lat[:, None] - lat[None, :])
    q3 = np.cos(lat[:, None] + lat[None, :])
    arg = np.clip(0.5 * ((1.0 + q1) * q2 - (1.0 - q1) * q3), -1.0, 1.0)
    d = np.trunc(rrr * np.arccos(arg) + 1.0)
    np.fill_diagonal(d, 0.0)
    return d


def _explicit_matrix(
    entries: list[tuple[int, str]], dim: int, fmt: str, fname: str
) -> np.ndarray:
    values: list[float] = []
    last_line = entries[-1][0] if entries else 0
    for line_no, line in entries:
        try:
            values.extend(float(tok) for tok in line.split())
        except ValueError:
            raise ParseError(f"{fname}: non-numeric weight in {line!r}", line_no)

    counts = {
        "FULL_MATRIX": dim * dim,
        "LOWER_ROW": dim * (dim - 1) // 2,
        "UPPER_ROW": dim * (dim - 1) // 2,
        "LOWER_DIAG_ROW": dim * (dim + 1) // 2,
        "UPPER_DIAG_ROW": dim * (dim + 1) // 2,
    }
    if fmt not in counts:
        raise UnsupportedFormatError(f"{fname}: EDGE_WEIGHT_FORMAT {fmt} not supported")
    if len(values) != counts[fmt]:
        raise ParseError(
            f"{fname}: EDGE_WEIGHT_SECTION has {len(values)} values, "
            f"{fmt} with DIMENSION {dim} needs {counts[fmt]}",
            last_line,
        )

    m = np.zeros((dim, dim))
    it = iter(values)
    if fmt == "FULL_MATRIX":
        m = np.array(values).reshape(dim, dim)
    elif fmt == "LOWER_ROW":
        for i in range(1, dim):
            for j in range(i):
                m[i, j] = m[j, i] = next(it)
    elif fmt == "UPPER_ROW":
        for i in range(dim - 1):
            for j in range(i + 1, dim):
                m[i, j] = m[j, i] = next(it)
    elif fmt == "LOWER_DIAG_ROW":
        for i in range(dim):
            for j in range(i + 1):
                m[i, j] = m[j, i] = next(it)
    elif fmt == "UPPER_DIAG_ROW":
        for i in range(dim):
            for j in range(i, dim):
                m[i, j] = m[j, i] = next(it)
    np.fill_diagonal(m, 0.0)
    return m
