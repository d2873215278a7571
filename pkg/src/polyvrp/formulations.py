"""The four polynomial-size CVRP formulations and their tightening rows.

All builders compile an :class:`~polyvrp.instances.Instance` into a
:class:`~polyvrp.model.MilpModel`:

* MTZ-L -- node-based, lifted load variables ``U_i`` (collection problem).
* GG    -- single-commodity arc flows ``F_i_j``.
* BHM   -- two-commodity edge flows ``G_i_j`` on a graph augmented with a
  dummy depot ``n+1``; edge variables, symmetric data, fixed fleet. Its
  objective is twice the directed-model objective and is reported halved.
* MCF   -- one unit flow pair ``Fk/Gk`` per customer (depot->k and
  k->depot), the strongest LP relaxation of the four.

Arc variables are named ``X_i_j``; the depot is node 0 throughout and
self-arcs are never created.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ConfigError, Formulation, FormulationConfig, MinNv, Vi2Mode
from .instances import Instance, demand_ceiling, space_diameter
from .model import INF, MilpModel, Sense, VarKind


@dataclass(frozen=True)
class GranulationReport:
    """Pair-cut counts before and after the distance-threshold filter."""

    full_count: int
    kept_count: int
    threshold: float

    @property
    def reduction(self) -> float:
        return 1.0 - self.kept_count / self.full_count if self.full_count else 0.0


def x_name(i: int, j: int) -> str:
    return f"X_{i}_{j}"


# ---------------------------------------------------------------------------
# shared skeleton (directed formulations)


def build_generic_skeleton(inst: Instance, tag: str = "skeleton") -> MilpModel:
    """Arc variables, distance objective, and one-in/one-out degree rows."""
    model = MilpModel(name=f"{inst.name}_{tag}", metadata={"instance": inst.name})
    n, d = inst.n, inst.dist
    for i in inst.nodes:
        for j in inst.nodes:
            if i != j:
                model.add_variable(x_name(i, j), VarKind.BINARY, obj=float(d[i, j]))
    for i in inst.customers:
        terms = [(model.var_id(x_name(j, i)), 1.0) for j in inst.nodes if j != i]
        model.add_constraint(f"deg_in_{i}", terms, Sense.EQ, 1.0)
    for i in inst.customers:
        terms = [(model.var_id(x_name(i, j)), 1.0) for j in inst.nodes if j != i]
        model.add_constraint(f"deg_out_{i}", terms, Sense.EQ, 1.0)
    return model


# ---------------------------------------------------------------------------
# MTZ-L


def build_mtz_l(inst: Instance, cfg: FormulationConfig) -> MilpModel:
    if cfg.formulation is not Formulation.MTZ_L:
        raise ConfigError("config is not MTZ-L")
    model = build_generic_skeleton(inst, "mtzl")
    n, Q, q = inst.n, inst.capacity, inst.demands

    u = {i: model.add_variable(f"U_{i}", VarKind.CONTINUOUS, 0.0, Q) for i in inst.customers}

    # Lifted ordering rows: U_i - U_j + Q X_ij + (Q - q_i - q_j) X_ji <= Q - q_j
    for i in inst.customers:
        for j in inst.customers:
            if i == j:
                continue
            terms = [
                (u[i], 1.0),
                (u[j], -1.0),
                (model.var_id(x_name(i, j)), Q),
                (model.var_id(x_name(j, i)), Q - q[i] - q[j]),
            ]
            model.add_constraint(f"lift_{i}_{j}", terms, Sense.LE, Q - q[j])

    for i in inst.customers:
        # load after i is at least q_i plus whatever arrived with the vehicle
        terms = [(u[i], 1.0)]
        terms += [
            (model.var_id(x_name(j, i)), -q[j]) for j in inst.customers if j != i
        ]
        model.add_constraint(f"load_lb_{i}", terms, Sense.GE, q[i])

        # and leaves room for the next customer's pickup
        terms = [(u[i], 1.0)]
        terms += [(model.var_id(x_name(i, j)), q[j]) for j in inst.customers if j != i]
        model.add_constraint(f"load_ub_{i}", terms, Sense.LE, Q)

        # vehicles arriving straight from the depot carry exactly q_i
        model.add_constraint(
            f"depot_start_{i}",
            [(u[i], 1.0), (model.var_id(x_name(0, i)), Q - q[i])],
            Sense.LE,
            Q,
        )

        q_max = max((q[j] for j in inst.customers if j != i), default=0.0)
        terms = [(u[i], 1.0), (model.var_id(x_name(0, i)), Q - q_max - q[i])]
        terms += [(model.var_id(x_name(i, j)), q[j]) for j in inst.customers if j != i]
        model.add_constraint(f"depot_start_tight_{i}", terms, Sense.LE, Q)

    return _finish(model, inst, cfg)


# ---------------------------------------------------------------------------
# GG


def build_gg(inst: Instance, cfg: FormulationConfig) -> MilpModel:
    if cfg.formulation is not Formulation.GG:
        raise ConfigError("config is not GG")
    model = build_generic_skeleton(inst, "gg")
    Q, q = inst.capacity, inst.demands

    f = {}
    for i in inst.nodes:
        for j in inst.nodes:
            if i != j:
                f[i, j] = model.add_variable(f"F_{i}_{j}", VarKind.CONTINUOUS, 0.0, INF)

    # collected load grows by q_i across customer i
    for i in inst.customers:
        terms = [(f[i, j], 1.0) for j in inst.nodes if j != i]
        terms += [(f[j, i], -1.0) for j in inst.nodes if j != i]
        model.add_constraint(f"flow_bal_{i}", terms, Sense.EQ, q[i])

    for i in inst.nodes:
        for j in inst.nodes:
            if i == j:
                continue
            xid = model.var_id(x_name(i, j))
            model.add_constraint(f"flow_lb_{i}_{j}", [(f[i, j], 1.0), (xid, -q[i])], Sense.GE, 0.0)
            model.add_constraint(
                f"flow_ub_{i}_{j}", [(f[i, j], 1.0), (xid, -(Q - q[j]))], Sense.LE, 0.0
            )

    return _finish(model, inst, cfg)


# ---------------------------------------------------------------------------
# BHM


def bhm_edges(n: int) -> list[tuple[int, int]]:
    """Undirected edges over nodes 0..n+1 except the depot-dummy pair."""
    return [
        (i, j)
        for i in range(n + 2)
        for j in range(i + 1, n + 2)
        if not (i == 0 and j == n + 1)
    ]


def build_bhm(inst: Instance, cfg: FormulationConfig) -> MilpModel:
    if cfg.formulation is not Formulation.BHM:
        raise ConfigError("config is not BHM")
    if inst.k_fixed is None:
        raise ConfigError("the two-commodity model needs a fixed fleet size")
    if not inst.is_symmetric():
        raise ConfigError("the two-commodity model needs symmetric distances")

    n, Q, q, K = inst.n, inst.capacity, inst.demands, inst.k_fixed
    dummy = n + 1

    def node_dist(i: int, j: int) -> float:
        a = 0 if i == dummy else i
        b = 0 if j == dummy else j
        return float(inst.dist[a, b])

    model = MilpModel(name=f"{inst.name}_bhm", metadata={"instance": inst.name})
    edges = bhm_edges(n)
    x = {}
    g = {}
    for i, j in edges:
        # objective counts each edge twice, matching the doubled objective
        x[i, j] = model.add_variable(x_name(i, j), VarKind.BINARY, obj=2.0 * node_dist(i, j))
    for i, j in edges:
        g[i, j] = model.add_variable(f"G_{i}_{j}", VarKind.CONTINUOUS, 0.0, INF)
        g[j, i] = model.add_variable(f"G_{j}_{i}", VarKind.CONTINUOUS, 0.0, INF)

    def neighbors(i: int):
        for j in range(n + 2):
            if j == i or {i, j} == {0, dummy}:
                continue
            yield j

    total = inst.total_demand
    for i in inst.customers:
        terms = [(g[j, i], 1.0) for j in neighbors(i)]
        terms += [(g[i, j], -1.0) for j in neighbors(i)]
        model.add_constraint(f"bal_{i}", terms, Sense.EQ, 2.0 * q[i])

    model.add_constraint(
        "depot_out", [(g[0, j], 1.0) for j in inst.customers], Sense.EQ, total
    )
    model.add_constraint(
        "depot_ret", [(g[j, 0], 1.0) for j in inst.customers], Sense.EQ, K * Q - total
    )
    model.add_constraint(
        "dummy_out", [(g[dummy, j], 1.0) for j in inst.customers], Sense.EQ, K * Q
    )

    for i, j in edges:
        model.add_constraint(
            f"link_{i}_{j}", [(g[i, j], 1.0), (g[j, i], 1.0), (x[i, j], -Q)], Sense.EQ, 0.0
        )

    for i in inst.customers:
        terms = [(x[min(i, j), max(i, j)], 1.0) for j in neighbors(i)]
        model.add_constraint(f"deg_{i}", terms, Sense.EQ, 2.0)

    return _finish(model, inst, cfg)


# ---------------------------------------------------------------------------
# MCF


def build_mcf(inst: Instance, cfg: FormulationConfig) -> MilpModel:
    if cfg.formulation is not Formulation.MCF:
        raise ConfigError("config is not MCF")
    model = build_generic_skeleton(inst, "mcf")
    Q, q = inst.capacity, inst.demands
    arcs = [(i, j) for i in inst.nodes for j in inst.nodes if i != j]

    fk = {}
    gk = {}
    for k in inst.customers:
        for i, j in arcs:
            fk[k, i, j] = model.add_variable(f"Fk_{k}_{i}_{j}", VarKind.CONTINUOUS, 0.0, 1.0)
            gk[k, i, j] = model.add_variable(f"Gk_{k}_{i}_{j}", VarKind.CONTINUOUS, 0.0, 1.0)

    for k in inst.customers:
        terms = [(fk[k, 0, j], 1.0) for j in inst.customers]
        terms += [(fk[k, j, 0], -1.0) for j in inst.customers]
        model.add_constraint(f"path_src_{k}", terms, Sense.EQ, 1.0)
        terms = [(gk[k, j, 0], 1.0) for j in inst.customers]
        terms += [(gk[k, 0, j], -1.0) for j in inst.customers]
        model.add_constraint(f"ret_sink_{k}", terms, Sense.EQ, 1.0)

    for k in inst.customers:
        for i in inst.customers:
            if i == k:
                continue
            terms = [(fk[k, i, j], 1.0) for j in inst.nodes if j != i]
            terms += [(fk[k, j, i], -1.0) for j in inst.nodes if j != i]
            model.add_constraint(f"path_bal_{i}_{k}", terms, Sense.EQ, 0.0)
            terms = [(gk[k, i, j], 1.0) for j in inst.nodes if j != i]
            terms += [(gk[k, j, i], -1.0) for j in inst.nodes if j != i]
            model.add_constraint(f"ret_bal_{i}_{k}", terms, Sense.EQ, 0.0)

    for k in inst.customers:
        for i, j in arcs:
            xid = model.var_id(x_name(i, j))
            model.add_constraint(
                f"use_{k}_{i}_{j}",
                [(fk[k, i, j], 1.0), (gk[k, i, j], 1.0), (xid, -1.0)],
                Sense.LE,
                0.0,
            )

    for i, j in arcs:
        xid = model.var_id(x_name(i, j))
        terms = []
        for k in inst.customers:
            if k in (i, j):
                continue
            terms += [(fk[k, i, j], q[k]), (gk[k, i, j], q[k])]
        terms.append((xid, -(Q - q[i] - q[j])))
        model.add_constraint(f"cap_{i}_{j}", terms, Sense.LE, 0.0)

    return _finish(model, inst, cfg)


# ---------------------------------------------------------------------------
# valid inequalities


def add_minnv(model: MilpModel, inst: Instance, variant: MinNv) -> None:
    """Lower-bound the depot out-degree by the fleet size the demand needs."""
    if variant is MinNv.OFF:
        return
    terms = [(model.var_id(x_name(0, i)), 1.0) for i in inst.customers]
    if variant is MinNv.LOOSE:
        model.add_constraint(
            "min_vehicles", [(vid, inst.capacity) for vid, _ in terms], Sense.GE, inst.total_demand
        )
    else:
        model.add_constraint("min_vehicles", terms, Sense.GE, float(inst.min_vehicles()))


def add_maxnv(model: MilpModel, inst: Instance) -> None:
    if inst.k_fixed is None:
        raise ConfigError(f"{inst.name}: MaxNV needs a fixed fleet size")
    terms = [(model.var_id(x_name(0, i)), 1.0) for i in inst.customers]
    model.add_constraint("max_vehicles", terms, Sense.LE, float(inst.k_fixed))


def add_fixedk(model: MilpModel, inst: Instance) -> None:
    """BHM variant: exactly K edges incident to the real depot."""
    if inst.k_fixed is None:
        raise ConfigError(f"{inst.name}: FixedK needs a fixed fleet size")
    terms = [(model.var_id(x_name(0, i)), 1.0) for i in inst.customers]
    model.add_constraint("fixed_vehicles", terms, Sense.EQ, float(inst.k_fixed))


def add_vi1(model: MilpModel, inst: Instance) -> None:
    """As many arcs leave the depot as enter it."""
    terms = [(model.var_id(x_name(0, i)), 1.0) for i in inst.customers]
    terms += [(model.var_id(x_name(i, 0)), -1.0) for i in inst.customers]
    model.add_constraint("depot_balance", terms, Sense.EQ, 0.0)


def vi2_threshold(inst: Instance) -> float:
    """Distance cutoff: problem-space diameter over ceil(ln(n+1))."""
    return space_diameter(inst) / math.ceil(math.log(inst.n + 1))


def _vi2_keep(inst: Instance, i: int, j: int, threshold: float) -> bool:
    # symmetric test beds reduce to d_ij <= T; the min covers asymmetric data
    return min(inst.dist[i, j], inst.dist[j, i]) <= threshold


def granulation_report(inst: Instance) -> GranulationReport:
    """Pair-cut counts with the distance filter applied (no model needed)."""
    threshold = vi2_threshold(inst)
    n = inst.n
    kept = sum(
        1
        for i in inst.customers
        for j in range(i + 1, n + 1)
        if _vi2_keep(inst, i, j, threshold)
    )
    return GranulationReport(full_count=n * (n - 1) // 2, kept_count=kept, threshold=threshold)


def add_vi2(model: MilpModel, inst: Instance, mode: Vi2Mode) -> GranulationReport:
    """Pair cuts X_ij + X_ji <= 2 - ceil((q_i+q_j)/Q), optionally granulated.

    In granular mode a pair is kept only when the two customers are within
    the threshold distance of one another (a two-customer subtour between
    far-apart customers is unlikely to survive in the relaxation anyway).
    """
    n, Q, q = inst.n, inst.capacity, inst.demands
    integral = inst.integral_demands
    threshold = vi2_threshold(inst)
    full = n * (n - 1) // 2
    kept = 0
    for i in inst.customers:
        for j in range(i + 1, n + 1):
            if mode is Vi2Mode.GRANULAR and not _vi2_keep(inst, i, j, threshold):
                continue
            kept += 1
            rhs = 2 - demand_ceiling(q[i] + q[j], Q, integral)
            if rhs >= 2:
                continue  # unreachable for positive demands; kept for safety
            model.add_constraint(
                f"pair_cut_{i}_{j}",
                [(model.var_id(x_name(i, j)), 1.0), (model.var_id(x_name(j, i)), 1.0)],
                Sense.LE,
                float(rhs),
            )
    return GranulationReport(full_count=full, kept_count=kept, threshold=threshold)


def add_vi3(model: MilpModel, inst: Instance) -> None:
    """Directed triple cuts X_ij + X_jk + X_ki <= 3 - ceil((q_i+q_j+q_k)/Q)."""
    n, Q, q = inst.n, inst.capacity, inst.demands
    integral = inst.integral_demands
    for i in inst.customers:
        for j in range(i + 1, n + 1):
            for k in range(j + 1, n + 1):
                rhs = 3 - demand_ceiling(q[i] + q[j] + q[k], Q, integral)
                if rhs >= 3:
                    continue
                terms = [
                    (model.var_id(x_name(i, j)), 1.0),
                    (model.var_id(x_name(j, k)), 1.0),
                    (model.var_id(x_name(k, i)), 1.0),
                ]
                model.add_constraint(f"triple_cut_{i}_{j}_{k}", terms, Sense.LE, float(rhs))


def add_fgx(model: MilpModel, inst: Instance) -> None:
    """Couple each commodity to its own entering/leaving arcs (MCF only)."""
    for i in inst.customers:
        for k in inst.customers:
            if i == k:
                continue
            model.add_constraint(
                f"path_fix_{i}_{k}",
                [(model.var_id(f"Fk_{k}_{i}_{k}"), 1.0), (model.var_id(x_name(i, k)), -1.0)],
                Sense.EQ,
                0.0,
            )
            model.add_constraint(
                f"ret_fix_{i}_{k}",
                [(model.var_id(f"Gk_{i}_{i}_{k}"), 1.0), (model.var_id(x_name(i, k)), -1.0)],
                Sense.EQ,
                0.0,
            )


def mtd_big_m(inst: Instance) -> float:
    """D_max plus the largest service-plus-travel step over all arcs."""
    mtd = inst.mtd
    worst = 0.0
    for i in inst.nodes:
        fst_i = 0.0 if i == 0 else float(mtd.service_time[i])
        for j in inst.nodes:
            if i != j:
                worst = max(worst, fst_i + float(mtd.travel[i, j]))
    return mtd.d_max + worst


def add_mtd(model: MilpModel, inst: Instance) -> None:
    """Arrival-time variables and tour-duration rows (depot time fixed at 0)."""
    if inst.mtd is None:
        raise ConfigError(f"{inst.name}: no tour-duration data attached")
    mtd = inst.mtd
    t, fst, d_max = mtd.travel, mtd.service_time, mtd.d_max
    big_m = mtd_big_m(inst)

    a = {i: model.add_variable(f"A_{i}", VarKind.CONTINUOUS, 0.0, INF) for i in inst.customers}

    for i in inst.nodes:
        fst_i = 0.0 if i == 0 else float(fst[i])
        for j in inst.customers:
            if i == j:
                continue
            xid = model.var_id(x_name(i, j))
            step = fst_i + float(t[i, j])
            lhs = [(a[j], 1.0), (xid, -big_m)]
            if i != 0:
                lhs.append((a[i], -1.0))
            model.add_constraint(f"time_lb_{i}_{j}", lhs, Sense.GE, step - big_m)
            lhs = [(a[j], 1.0), (xid, big_m)]
            if i != 0:
                lhs.append((a[i], -1.0))
            model.add_constraint(f"time_ub_{i}_{j}", lhs, Sense.LE, step + big_m)

    for i in inst.customers:
        model.add_constraint(
            f"time_ret_{i}", [(a[i], 1.0)], Sense.LE, d_max - float(fst[i]) - float(t[i, 0])
        )


# ---------------------------------------------------------------------------
# assembly


def _finish(model: MilpModel, inst: Instance, cfg: FormulationConfig) -> MilpModel:
    if cfg.formulation is Formulation.BHM:
        if cfg.fixedk:
            add_fixedk(model, inst)
    else:
        if cfg.minnv is not MinNv.OFF:
            add_minnv(model, inst, cfg.minnv)
        if cfg.maxnv:
            add_maxnv(model, inst)
    report = None
    if cfg.vi1:
        add_vi1(model, inst)
    if cfg.vi2 is not Vi2Mode.OFF:
        report = add_vi2(model, inst, cfg.vi2)
    if cfg.vi3:
        add_vi3(model, inst)
    if cfg.fgx:
        add_fgx(model, inst)
    if cfg.mtd:
        add_mtd(model, inst)

    model.name = f"{inst.name}_{cfg.token()}"
    model.metadata.update(formulation=cfg.formulation.value, config=cfg.token())
    if report is not None:
        model.metadata["vi2_kept"] = str(report.kept_count)
        model.metadata["vi2_full"] = str(report.full_count)

    expect_v, expect_c = expected_counts(inst, cfg, vi2_kept=report.kept_count if report else 0)
    if (model.num_vars, model.num_cons) != (expect_v, expect_c):
        raise AssertionError(
            f"{model.name}: built {model.num_vars} vars / {model.num_cons} rows, "
            f"index formulas predict {expect_v} / {expect_c}"
        )
    return model


def build_model(inst: Instance, cfg: FormulationConfig) -> MilpModel:
    """Compile an instance under one configuration of the factor grid."""
    builder = {
        Formulation.MTZ_L: build_mtz_l,
        Formulation.GG: build_gg,
        Formulation.BHM: build_bhm,
        Formulation.MCF: build_mcf,
    }[cfg.formulation]
    return builder(inst, cfg)


def expected_counts(inst: Instance, cfg: FormulationConfig, vi2_kept: int = 0) -> tuple[int, int]:
    """Closed-form variable/constraint counts for a built model."""
    n = inst.n
    arcs = n * (n + 1)
    if cfg.formulation is Formulation.BHM:
        edges = (n + 2) * (n + 1) // 2 - 1
        nv = edges * 3
        nc = n + 3 + edges + n
        if cfg.fixedk:
            nc += 1
        return nv, nc

    nv = arcs
    nc = 2 * n
    if cfg.formulation is Formulation.MTZ_L:
        nv += n
        nc += n * (n - 1) + 4 * n
    elif cfg.formulation is Formulation.GG:
        nv += arcs
        nc += n + 2 * arcs
    elif cfg.formulation is Formulation.MCF:
        nv += 2 * n * arcs
        nc += 2 * n + 2 * n * (n - 1) + n * arcs + arcs
    if cfg.minnv is not MinNv.OFF:
        nc += 1
    if cfg.maxnv:
        nc += 1
    if cfg.vi1:
        nc += 1
    if cfg.vi2 is not Vi2Mode.OFF:
        nc += vi2_kept if cfg.vi2 is Vi2Mode.GRANULAR else n * (n - 1) // 2
    if cfg.vi3:
        nc += n * (n - 1) * (n - 2) // 6
    if cfg.fgx:
        nc += 2 * n * (n - 1)
    if cfg.mtd:
        nv += n
        nc += 2 * n * n + n
    return nv, nc


# ---------------------------------------------------------------------------
# lifting routes into variable assignments (used by validity checks)


def lift_routes(model: MilpModel, inst: Instance, routes: list[list[int]]) -> np.ndarray:
    """Variable assignment realizing the given routes in this model.

    Routes are customer sequences (depot implicit at both ends). The result
    satisfies every constraint of the model the routes are feasible for,
    which makes it the reference point for inequality-validity checks.
    """
    values = np.zeros(model.num_vars)
    form = model.metadata.get("formulation")
    q, Q = inst.demands, inst.capacity

    def set_if_present(name: str, val: float) -> None:
        if model.has_var(name):
            values[model.var_id(name)] = val

    if form == Formulation.BHM.value:
        dummy = inst.n + 1
        for route in routes:
            load = float(sum(q[c] for c in route))
            path = [0, *route, dummy]
            onboard = load
            for a, b in zip(path, path[1:]):
                e = (min(a, b), max(a, b))
                values[model.var_id(x_name(*e))] = 1.0
                values[model.var_id(f"G_{a}_{b}")] = onboard
                values[model.var_id(f"G_{b}_{a}")] = Q - onboard
                if b != dummy:
                    onboard -= float(q[b])
        return values

    for route in routes:
        path = [0, *route, 0]
        for a, b in zip(path, path[1:]):
            values[model.var_id(x_name(a, b))] = 1.0
        collected = 0.0
        for a, b in zip(path, path[1:]):
            set_if_present(f"F_{a}_{b}", collected + (q[a] if a != 0 else 0.0))
            collected += float(q[a]) if a != 0 else 0.0
        cum = 0.0
        for c in route:
            cum += float(q[c])
            set_if_present(f"U_{c}", cum)
        if model.has_var(f"Fk_{route[0]}_0_{route[0]}"):
            for t, k in enumerate(route):
                for a, b in zip(path[: t + 1], path[1 : t + 2]):
                    values[model.var_id(f"Fk_{k}_{a}_{b}")] = 1.0
                for a, b in zip(path[t + 1 :], path[t + 2 :]):
                    values[model.var_id(f"Gk_{k}_{a}_{b}")] = 1.0
        if inst.mtd is not None and model.has_var(f"A_{route[0]}"):
            t_mat, fst = inst.mtd.travel, inst.mtd.service_time
            clock = 0.0
            prev = 0
            for c in route:
                clock += (0.0 if prev == 0 else float(fst[prev])) + float(t_mat[prev, c])
                set_if_present(f"A_{c}", clock)
                prev = c
    return values
