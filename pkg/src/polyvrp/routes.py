"""Route decoding, formulation-independent validation, and the exhaustive oracle.

Everything here works from the instance data alone: objectives are always
recomputed from the distance matrix, never taken from a solver, so that
model-construction bugs cannot hide behind their own numbers.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from .config import Formulation
from .instances import Instance
from .model import MilpModel
from .registry import BksEntry

log = logging.getLogger(__name__)

INTEGRALITY_TOL = 1e-6


class DecodeError(Exception):
    pass


class InfeasibleError(Exception):
    pass


@dataclass
class RouteSet:
    """Depot-rooted routes; each entry lists the customers in visit order."""

    routes: list[list[int]]
    loads: list[float]
    total_distance: float
    durations: list[float] | None = None

    @property
    def k(self) -> int:
        return len(self.routes)


def route_distance(inst: Instance, route: list[int]) -> float:
    d = inst.dist
    total = d[0, route[0]]
    for a, b in zip(route, route[1:]):
        total += d[a, b]
    return float(total + d[route[-1], 0])


def route_duration(inst: Instance, route: list[int]) -> float:
    mtd = inst.mtd
    t, fst = mtd.travel, mtd.service_time
    total = t[0, route[0]]
    for a, b in zip(route, route[1:]):
        total += fst[a] + t[a, b]
    return float(total + fst[route[-1]] + t[route[-1], 0])


def make_route_set(inst: Instance, routes: list[list[int]]) -> RouteSet:
    loads = [float(sum(inst.demands[c] for c in r)) for r in routes]
    total = sum(route_distance(inst, r) for r in routes)
    durations = [route_duration(inst, r) for r in routes] if inst.mtd is not None else None
    return RouteSet(routes=[list(r) for r in routes], loads=loads,
                    total_distance=float(total), durations=durations)


# ---------------------------------------------------------------------------
# decoding variable assignments


def _arc_value(model: MilpModel, values: np.ndarray, i: int, j: int) -> float:
    return float(values[model.var_id(f"X_{i}_{j}")])


def decode_routes(inst: Instance, model: MilpModel, values: np.ndarray) -> RouteSet:
    """Turn an integral assignment of a built model back into routes.

    Directed formulations follow successor arcs from the depot; the
    edge-based model walks each degree-2 path from the depot to the dummy
    node, oriented by the flow values when they are present.
    """
    form = model.metadata.get("formulation")
    if form == Formulation.BHM.value:
        return _decode_edges(inst, model, values)
    return _decode_arcs(inst, model, values)


def _check_binary(name: str, v: float) -> bool:
    if min(abs(v), abs(v - 1.0)) > INTEGRALITY_TOL:
        raise DecodeError(f"variable {name} = {v} is not integral")
    return v > 0.5


def _decode_arcs(inst: Instance, model: MilpModel, values: np.ndarray) -> RouteSet:
    succ: dict[int, list[int]] = {i: [] for i in inst.nodes}
    for i in inst.nodes:
        for j in inst.nodes:
            if i != j and _check_binary(f"X_{i}_{j}", _arc_value(model, values, i, j)):
                succ[i].append(j)
    for c in inst.customers:
        if len(succ[c]) != 1:
            raise DecodeError(f"customer {c} has out-degree {len(succ[c])}")

    seen: set[int] = set()
    routes = []
    for start in sorted(succ[0]):
        route = []
        cur = start
        while cur != 0:
            if cur in seen:
                raise DecodeError(f"node {cur} visited twice")
            seen.add(cur)
            route.append(cur)
            cur = succ[cur][0]
        routes.append(route)
    missing = set(inst.customers) - seen
    if missing:
        cycle = _trace_cycle(succ, min(missing))
        raise DecodeError(f"subtour {{{', '.join(map(str, cycle))}}} not connected to the depot")
    return make_route_set(inst, routes)


def _trace_cycle(succ: dict[int, list[int]], start: int) -> list[int]:
    cycle = [start]
    cur = succ[start][0]
    while cur != start:
        cycle.append(cur)
        cur = succ[cur][0]
    return sorted(cycle)


def _decode_edges(inst: Instance, model: MilpModel, values: np.ndarray) -> RouteSet:
    n = inst.n
    dummy = n + 1
    adj: dict[int, list[int]] = {i: [] for i in range(n + 2)}
    for i in range(n + 2):
        for j in range(i + 1, n + 2):
            if (i, j) == (0, dummy):
                continue
            if _check_binary(f"X_{i}_{j}", float(values[model.var_id(f"X_{i}_{j}")])):
                adj[i].append(j)
                adj[j].append(i)
    for c in inst.customers:
        if len(adj[c]) != 2:
            raise DecodeError(f"customer {c} has degree {len(adj[c])}")

    seen: set[int] = set()
    routes = []
    for first in sorted(adj[0]):
        if first in seen:
            continue
        path = []
        prev, cur = 0, first
        while cur not in (0, dummy):
            if cur in seen:
                raise DecodeError(f"node {cur} visited twice")
            seen.add(cur)
            path.append(cur)
            nxt = [v for v in adj[cur] if v != prev]
            if len(nxt) != 1:
                raise DecodeError(f"broken path at customer {cur}")
            prev, cur = cur, nxt[0]
        if cur == 0:
            raise DecodeError(f"path through {path} returns to the depot without the dummy")
        # orient by flow: the departure side carries the route load
        g_out = f"G_0_{path[0]}"
        g_in = f"G_{path[-1]}_{dummy}"
        if model.has_var(g_out) and model.has_var(g_in):
            if values[model.var_id(g_out)] + 1e-6 < values[model.var_id(g_in)]:
                path.reverse()
        routes.append(path)
    missing = set(inst.customers) - seen
    if missing:
        comp = sorted(_edge_component(adj, min(missing)))
        raise DecodeError(f"subtour {{{', '.join(map(str, comp))}}} not connected to the depot")
    return make_route_set(inst, routes)


def _edge_component(adj: dict[int, list[int]], start: int) -> set[int]:
    comp = {start}
    stack = [start]
    while stack:
        for v in adj[stack.pop()]:
            if v not in comp:
                comp.add(v)
                stack.append(v)
    return comp


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    coverage_ok: bool
    capacity_ok: bool
    fleet_ok: bool
    duration_ok: bool | None
    objective: float
    messages: list[str]

    @property
    def passed(self) -> bool:
        checks = [self.coverage_ok, self.capacity_ok, self.fleet_ok]
        if self.duration_ok is not None:
            checks.append(self.duration_ok)
        return all(checks)


def validate(inst: Instance, rs: RouteSet, cap_tol: float = 1e-9) -> ValidationReport:
    """Check coverage, capacity, fleet and duration rules against the instance."""
    messages: list[str] = []
    visits: dict[int, int] = {}
    for r in rs.routes:
        for c in r:
            visits[c] = visits.get(c, 0) + 1
    missing = [c for c in inst.customers if c not in visits]
    repeated = [c for c, k in visits.items() if k > 1]
    unknown = [c for c in visits if not 1 <= c <= inst.n]
    coverage_ok = not (missing or repeated or unknown)
    if missing:
        messages.append(f"unvisited customers: {missing}")
    if repeated:
        messages.append(f"customers visited more than once: {repeated}")
    if unknown:
        messages.append(f"unknown customers: {unknown}")

    capacity_ok = True
    for idx, r in enumerate(rs.routes):
        load = float(sum(inst.demands[c] for c in r))
        if load > inst.capacity + cap_tol:
            capacity_ok = False
            messages.append(f"route {idx + 1} load {load} exceeds capacity {inst.capacity}")

    fleet_ok = inst.k_fixed is None or rs.k <= inst.k_fixed
    if not fleet_ok:
        messages.append(f"{rs.k} routes exceed the fleet bound {inst.k_fixed}")

    duration_ok = None
    if inst.mtd is not None:
        duration_ok = True
        for idx, r in enumerate(rs.routes):
            dur = route_duration(inst, r)
            if dur > inst.mtd.d_max + 1e-9:
                duration_ok = False
                messages.append(
                    f"route {idx + 1} duration {dur} exceeds the cap {inst.mtd.d_max}"
                )

    objective = float(sum(route_distance(inst, r) for r in rs.routes if r))
    return ValidationReport(coverage_ok, capacity_ok, fleet_ok, duration_ok, objective, messages)


# ---------------------------------------------------------------------------
# exhaustive oracle


def brute_force_optimum(inst: Instance, max_n: int = 9) -> tuple[float, RouteSet]:
    """Provably optimal objective for tiny instances.

    Enumerates set partitions of the customers into at most K capacity- and
    duration-feasible groups, each ordered optimally by trying every
    permutation. Independent of any LP machinery by design.
    """
    n = inst.n
    if n > max_n:
        raise ValueError(f"exhaustive oracle capped at {max_n} customers, got {n}")
    customers = list(inst.customers)
    max_routes = inst.k_fixed if inst.k_fixed is not None else n

    best_order: dict[int, tuple[float, tuple[int, ...]]] = {}
    for size in range(1, n + 1):
        for subset in itertools.combinations(customers, size):
            demand = float(sum(inst.demands[c] for c in subset))
            if demand > inst.capacity:
                continue
            best = None
            for perm in itertools.permutations(subset):
                cost = route_distance(inst, list(perm))
                if inst.mtd is not None and route_duration(inst, list(perm)) > inst.mtd.d_max + 1e-9:
                    continue
                if best is None or cost < best[0]:
                    best = (cost, perm)
            if best is not None:
                mask = sum(1 << (c - 1) for c in subset)
                best_order[mask] = best

    full = (1 << n) - 1
    # dp[mask][r] = best cost covering the customers in mask with r routes
    dp: list[dict[int, float]] = [dict() for _ in range(full + 1)]
    choice: list[dict[int, int]] = [dict() for _ in range(full + 1)]
    dp[0][0] = 0.0
    for mask in range(full + 1):
        if not dp[mask]:
            continue
        rest = full & ~mask
        if rest == 0:
            continue
        low = rest & (-rest)
        sub = rest
        while sub:
            if sub & low and sub in best_order:
                cost = best_order[sub][0]
                for r, base in dp[mask].items():
                    if r + 1 > max_routes:
                        continue
                    nxt = dp[mask | sub]
                    if base + cost < nxt.get(r + 1, np.inf):
                        nxt[r + 1] = base + cost
                        choice[mask | sub][r + 1] = sub
            sub = (sub - 1) & rest

    if not dp[full]:
        raise InfeasibleError(
            f"{inst.name}: no feasible partition into {max_routes} routes"
        )
    r_best = min(dp[full], key=lambda r: (dp[full][r], r))
    routes_masks = []
    mask, r = full, r_best
    while mask:
        sub = choice[mask][r]
        routes_masks.append(sub)
        mask &= ~sub
        r -= 1
    routes = [list(best_order[m][1]) for m in reversed(routes_masks)]
    routes.sort(key=lambda r: r[0])
    return float(dp[full][r_best]), make_route_set(inst, routes)


# ---------------------------------------------------------------------------
# the best-known-solution KPI


def kpi_bks(bfs_objective: float, entry: BksEntry) -> float:
    """Relative gap of an objective to the registry value, in percent."""
    pct = (bfs_objective - entry.value) / entry.value * 100.0
    if pct < 0:
        log.warning(
            "objective %s beats the registry value %s by %.4f%% -- registry may be stale",
            bfs_objective, entry.value, -pct,
        )
    return pct


# ---------------------------------------------------------------------------
# solution files (one route per line, then the cost)


def write_solution(path, rs: RouteSet) -> None:
    lines = [
        f"Route #{idx + 1}: " + " ".join(str(c) for c in route)
        for idx, route in enumerate(rs.routes)
    ]
    lines.append(f"Cost {rs.total_distance:g}")
    from pathlib import Path

    Path(path).write_text("\n".join(lines) + "\n")


def read_solution(path, inst: Instance) -> RouteSet:
    from pathlib import Path

    routes: list[list[int]] = []
    for raw in Path(path).read_text().splitlines():
        line = raw.strip()
        if line.lower().startswith("route"):
            _, _, body = line.partition(":")
            routes.append([int(tok) for tok in body.split()])
    if not routes:
        raise ValueError(f"{path}: no routes found")
    return make_route_set(inst, routes)
