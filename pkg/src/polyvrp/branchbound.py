"""LP-based branch-and-bound for models with binary and continuous variables.

Node relaxations reuse one warm-started simplex engine (bound changes keep
the basis dual feasible). Search is best-bound with depth-first plunging
for early incumbents; branching picks the most fractional binary with
deterministic tie-breaking, so runs are reproducible for a fixed seed.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .model import MilpModel
from .simplex import LpEngine, LpOptions, LpStatus

INTEGRALITY_TOL = 1e-6


class MipStatus(Enum):
    OPTIMAL = "optimal"
    FEASIBLE = "feasible"
    INFEASIBLE = "infeasible"
    TIME_LIMIT = "time_limit"
    NODE_LIMIT = "node_limit"


@dataclass
class SolveLimits:
    time_limit: float = 10800.0
    node_limit: int = 500_000_000
    gap_tolerance: float = 0.0

    def __post_init__(self):
        if self.time_limit <= 0 or self.node_limit <= 0 or self.gap_tolerance < 0:
            raise ValueError("limits must be positive (gap tolerance nonnegative)")


@dataclass
class MipSolution:
    status: MipStatus
    objective: float | None  # BFS
    values: np.ndarray | None
    best_bound: float  # BPS
    nodes: int
    wall_time: float
    lp_iterations: int = 0
    improvements: list[tuple[float, int, float, float]] = field(default_factory=list)

    @property
    def has_incumbent(self) -> bool:
        return self.objective is not None


def gap_percent(sol: MipSolution) -> float:
    """Optimality gap |BFS - BPS| / |BFS| in percent; 100 without incumbent."""
    if sol.objective is None:
        return 100.0
    if sol.objective == 0.0:
        return 0.0 if abs(sol.best_bound) <= 1e-12 else 100.0
    return abs(sol.objective - sol.best_bound) / abs(sol.objective) * 100.0


def root_bound(model: MilpModel, options: LpOptions | None = None) -> float:
    """LP-relaxation optimum (the formulation-tightness primitive)."""
    sol = LpEngine(model, options).solve(warm=False)
    if sol.status is not LpStatus.OPTIMAL:
        raise RuntimeError(f"root relaxation of {model.name} is {sol.status.value}")
    return sol.objective


class _Node:
    __slots__ = ("var", "lo", "hi", "parent", "bound", "depth")

    def __init__(self, var, lo, hi, parent, bound, depth):
        self.var = var
        self.lo = lo
        self.hi = hi
        self.parent = parent
        self.bound = bound
        self.depth = depth

    def overrides(self) -> dict[int, tuple[float, float]]:
        out: dict[int, tuple[float, float]] = {}
        node = self
        while node.var is not None:
            if node.var not in out:  # nearest frame wins
                out[node.var] = (node.lo, node.hi)
            node = node.parent
        return out


def solve_mip(
    model: MilpModel,
    limits: SolveLimits | None = None,
    seed: int = 0,
    incumbent_check=None,
    log=None,
    lp_options: LpOptions | None = None,
) -> MipSolution:
    """Exact solve. ``incumbent_check(values) -> float | None`` may revalidate
    candidate incumbents (route decoding); ``log`` receives one text line per
    incumbent improvement."""
    limits = limits or SolveLimits()
    t0 = time.perf_counter()
    engine = LpEngine(model, lp_options or LpOptions())
    rng = np.random.default_rng(seed)
    binaries = np.array(model.binary_ids(), dtype=np.int64)
    obj_coeffs = np.array([v.obj for v in model.variables])

    # With an all-binary integral-coefficient objective, any integer solution
    # has an integral value, so bounds can be rounded up when pruning.
    cont_ids = [i for i, v in enumerate(model.variables) if v.kind.value == "continuous"]
    integral_obj = np.all(obj_coeffs == np.round(obj_coeffs)) and all(
        obj_coeffs[i] == 0.0 for i in cont_ids
    )

    incumbent_obj: float | None = None
    incumbent_vals: np.ndarray | None = None
    improvements: list[tuple[float, int, float, float]] = []
    nodes_solved = 0
    lp_iters = 0
    rejected = 0

    heap: list[tuple[float, int, _Node]] = []
    stack: list[_Node] = []
    counter = 0
    root = _Node(None, 0.0, 0.0, None, -math.inf, 0)
    stack.append(root)

    def cutoff() -> float:
        if incumbent_obj is None:
            return math.inf
        slack = max(limits.gap_tolerance * abs(incumbent_obj), 1e-9)
        if integral_obj:
            slack = max(slack, 1.0 - 1e-6)
        return incumbent_obj - slack

    def open_bound() -> float:
        best = math.inf
        if heap:
            best = min(best, heap[0][0])
        for nd in stack:
            best = min(best, nd.bound)
        return best

    def bps() -> float:
        ob = open_bound()
        if incumbent_obj is not None:
            ob = min(ob, incumbent_obj) if ob != math.inf else incumbent_obj
        return ob if ob != math.inf else -math.inf

    def note_improvement():
        t = time.perf_counter() - t0
        improvements.append((t, nodes_solved, incumbent_obj, bps()))
        if log is not None:
            g = (
                abs(incumbent_obj - bps()) / max(abs(incumbent_obj), 1e-9) * 100.0
                if incumbent_obj
                else 100.0
            )
            log(
                f"improve t={t:.2f}s nodes={nodes_solved} "
                f"bfs={incumbent_obj:.8g} bps={bps():.8g} gap={g:.4f}%"
            )

    status = None
    while heap or stack:
        if time.perf_counter() - t0 > limits.time_limit:
            status = MipStatus.TIME_LIMIT
            break
        if nodes_solved >= limits.node_limit:
            status = MipStatus.NODE_LIMIT
            break
        if incumbent_obj is not None and open_bound() > cutoff():
            break  # every open node is fathomed by the incumbent

        node = stack.pop() if stack else heapq.heappop(heap)[2]
        if node.bound > cutoff():
            continue

        lp = engine.solve(bound_overrides=node.overrides(), warm=True)
        nodes_solved += 1
        lp_iters += lp.iterations
        if lp.status is LpStatus.INFEASIBLE:
            continue
        if lp.status is not LpStatus.OPTIMAL:
            lp = engine.solve(bound_overrides=node.overrides(), warm=False)
            lp_iters += lp.iterations
            if lp.status is LpStatus.INFEASIBLE:
                continue
            if lp.status is not LpStatus.OPTIMAL:
                raise RuntimeError(f"node relaxation failed with {lp.status.value}")
        bound = lp.objective
        if bound > cutoff():
            continue

        x = lp.values
        frac = np.abs(x[binaries] - np.round(x[binaries]))
        frac_ids = binaries[frac > INTEGRALITY_TOL]
        if frac_ids.size == 0:
            cand_obj = bound
            if incumbent_check is not None:
                checked = incumbent_check(x)
                if checked is None:
                    rejected += 1
                    continue
                cand_obj = checked
            if incumbent_obj is None or cand_obj < incumbent_obj - 1e-9:
                incumbent_obj = cand_obj
                incumbent_vals = x.copy()
                note_improvement()
            continue

        # most fractional binary; ties by larger cost, then lower id
        f = frac[frac > INTEGRALITY_TOL]
        dist = np.abs(f - 0.5)
        best = np.flatnonzero(dist <= dist.min() + 1e-12)
        if best.size > 1:
            costs = np.abs(obj_coeffs[frac_ids[best]])
            best = best[costs >= costs.max() - 1e-12]
        branch_var = int(frac_ids[best].min())
        val = x[branch_var]

        up_first = val >= 0.5
        if rng.random() < 0.1:
            up_first = not up_first
        lo_child = _Node(branch_var, 0.0, 0.0, node, bound, node.depth + 1)
        up_child = _Node(branch_var, 1.0, 1.0, node, bound, node.depth + 1)
        dive, later = (up_child, lo_child) if up_first else (lo_child, up_child)
        counter += 1
        heapq.heappush(heap, (bound, counter, later))
        stack.append(dive)  # plunge depth-first into the rounded child

    wall = time.perf_counter() - t0
    if status is None:
        if incumbent_obj is None:
            status = MipStatus.INFEASIBLE
            final_bps = math.inf
        elif limits.gap_tolerance > 0:
            # proven only up to the requested tolerance
            status = MipStatus.FEASIBLE
            final_bps = incumbent_obj - limits.gap_tolerance * abs(incumbent_obj)
        else:
            status = MipStatus.OPTIMAL
            final_bps = incumbent_obj
    else:
        final_bps = bps()
    if rejected and log is not None:
        log(f"note {rejected} integral relaxations failed revalidation")

    return MipSolution(
        status=status,
        objective=incumbent_obj,
        values=incumbent_vals,
        best_bound=final_bps,
        nodes=nodes_solved,
        wall_time=wall,
        lp_iterations=lp_iters,
        improvements=improvements,
    )


def is_proven(sol: MipSolution) -> bool:
    return sol.status is MipStatus.OPTIMAL


def solve_mip_portfolio(
    model: MilpModel,
    limits: SolveLimits | None = None,
    seeds: tuple[int, ...] = (0, 1),
    incumbent_check=None,
    log=None,
) -> MipSolution:
    """Race independent solves with different seeds; deterministic selection.

    All runs are completed and the winner is chosen by (proven optimality,
    objective, lowest seed), so the result does not depend on scheduling.
    Off by default in the harness.
    """
    results = [
        (seed, solve_mip(model, limits, seed=seed, incumbent_check=incumbent_check, log=log))
        for seed in sorted(seeds)
    ]

    def rank(item):
        seed, sol = item
        opt = 0 if sol.status is MipStatus.OPTIMAL else 1
        obj = sol.objective if sol.objective is not None else math.inf
        return (opt, obj, seed)

    return min(results, key=rank)[1]
