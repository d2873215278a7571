"""Scenario runner, KPI aggregation, and report emission.

A scenario is a declarative set of instances x configurations x seeds. Each
cell produces one KPI row (time, best feasible value, best bound, the two
percentage gaps, and the best-known/proven flags); aggregation then mirrors
the layout of the benchmark tables: per-configuration averages, counts of
best-known and proven-optimal hits, and the frequency with which each
configuration achieved the fastest time on an instance.
"""

from __future__ import annotations

import concurrent.futures
import csv
import logging
import time
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

from .branchbound import MipStatus, SolveLimits, gap_percent, solve_mip
from .config import Formulation, FormulationConfig
from .formulations import build_model, granulation_report
from .instances import Instance, Rounding, instance_class, parse_instance, tightness
from .registry import BksRegistry, load_mtd_sidecar
from .routes import decode_routes, kpi_bks, validate

log = logging.getLogger(__name__)

# library convention: these families publish unrounded Euclidean objectives
_EXACT_PREFIXES = ("CMT", "tai")

_TIME_TIE_TOL = 1e-3  # seconds; faster-than-measurable differences count as ties


@dataclass
class Scenario:
    name: str
    instances: list[str]
    configs: list[FormulationConfig]
    limits: SolveLimits = field(default_factory=SolveLimits)
    seeds: list[int] = field(default_factory=lambda: [0])

    def __post_init__(self):
        if not self.instances or not self.configs or not self.seeds:
            raise ValueError("scenario needs instances, configs and seeds")


@dataclass
class KpiRow:
    instance: str
    config: str
    seed: int
    status: str
    t: float
    build_t: float
    nodes: int
    bfs: float | None
    bps: float
    pct_bks: float | None
    pct_opt: float
    hit_bks: bool
    proven_opt: bool
    note: str = ""


def bundled_instance_dir() -> Path:
    return Path(str(resources.files("polyvrp.data").joinpath("instances")))


def default_rounding_override(name: str) -> Rounding | None:
    if name.startswith(_EXACT_PREFIXES):
        return Rounding.EXACT
    return None


def resolve_instance(name: str, search_dirs: list[Path] | None = None) -> Instance:
    """Locate ``<name>.vrp`` in the search directories (bundled dir last)."""
    dirs = list(search_dirs or []) + [bundled_instance_dir()]
    for d in dirs:
        path = Path(d) / f"{name}.vrp"
        if path.exists():
            return parse_instance(path, rounding_override=default_rounding_override(name))
    raise FileNotFoundError(
        f"instance {name!r} not found in {[str(d) for d in dirs]}"
    )


def adapt_config(cfg: FormulationConfig, inst: Instance) -> FormulationConfig:
    """Drop fleet-bound rows for instances without a fixed fleet size."""
    if inst.k_fixed is None and (cfg.maxnv or cfg.fixedk):
        return replace(cfg, maxnv=False, fixedk=False)
    return cfg


def make_incumbent_check(inst: Instance, model):
    """Route-level revalidation of integral incumbents."""
    scale = 2.0 if model.metadata.get("formulation") == Formulation.BHM.value else 1.0

    def check(values):
        try:
            rs = decode_routes(inst, model, values)
        except Exception as exc:  # decode failures reject the incumbent
            log.warning("incumbent rejected: %s", exc)
            return None
        report = validate(inst, rs)
        if not report.passed:
            log.warning("incumbent rejected by validator: %s", "; ".join(report.messages))
            return None
        return report.objective * scale

    return check


def hit_bks_flag(bfs: float, bks_value: float, inst: Instance) -> bool:
    if inst.rounding is Rounding.NEAREST_INTEGER:
        return abs(bfs - bks_value) < 1e-6
    return abs(bfs - bks_value) <= 1e-4 * abs(bks_value)


def run_cell(
    inst: Instance,
    cfg: FormulationConfig,
    limits: SolveLimits,
    seed: int,
    registry: BksRegistry | None,
    mtd_sidecar: dict[str, tuple[float, float]] | None = None,
    log_sink=None,
) -> KpiRow:
    """One (instance, configuration, seed) benchmark cell."""
    cfg = adapt_config(cfg, inst)
    work = inst
    if cfg.mtd and inst.mtd is None:
        sidecar = mtd_sidecar if mtd_sidecar is not None else load_mtd_sidecar()
        if inst.name not in sidecar:
            return KpiRow(
                instance=inst.name, config=cfg.token(), seed=seed, status="error",
                t=0.0, build_t=0.0, nodes=0, bfs=None, bps=float("nan"),
                pct_bks=None, pct_opt=100.0, hit_bks=False, proven_opt=False,
                note="no tour-duration data for this instance",
            )
        d_max, fst = sidecar[inst.name]
        work = inst.with_mtd(d_max, fst)

    t0 = time.perf_counter()
    try:
        model = build_model(work, cfg)
    except Exception as exc:
        return KpiRow(
            instance=inst.name, config=cfg.token(), seed=seed, status="error",
            t=0.0, build_t=time.perf_counter() - t0, nodes=0, bfs=None,
            bps=float("nan"), pct_bks=None, pct_opt=100.0, hit_bks=False,
            proven_opt=False, note=f"build failed: {exc}",
        )
    build_t = time.perf_counter() - t0

    sol = solve_mip(
        model, limits, seed=seed,
        incumbent_check=make_incumbent_check(work, model), log=log_sink,
    )
    halve = 2.0 if cfg.formulation is Formulation.BHM else 1.0
    bfs = sol.objective / halve if sol.objective is not None else None
    bps = sol.best_bound / halve

    entry = registry.get(inst.name) if registry is not None else None
    pct = None
    hit = False
    if entry is not None and bfs is not None:
        pct = kpi_bks(bfs, entry)
        hit = hit_bks_flag(bfs, entry.value, inst)
    return KpiRow(
        instance=inst.name, config=cfg.token(), seed=seed, status=sol.status.value,
        t=sol.wall_time, build_t=build_t, nodes=sol.nodes, bfs=bfs, bps=bps,
        pct_bks=pct, pct_opt=gap_percent(sol), hit_bks=hit,
        proven_opt=sol.status is MipStatus.OPTIMAL,
    )


def _cell_task(args):
    name, dirs, token, limits, seed = args
    inst = resolve_instance(name, dirs)
    cfg = FormulationConfig.parse(token)
    return run_cell(inst, cfg, limits, seed, BksRegistry.load())


def run_scenario(
    sc: Scenario,
    search_dirs: list[Path] | None = None,
    registry: BksRegistry | None = None,
    workers: int = 1,
    log_sink=None,
) -> list[KpiRow]:
    """All scenario cells; failures become rows, never silent drops."""
    registry = registry or BksRegistry.load()
    cells = [
        (name, cfg, seed)
        for name in sc.instances
        for cfg in sc.configs
        for seed in sc.seeds
    ]
    rows: list[KpiRow] = []
    if workers <= 1:
        for name, cfg, seed in cells:
            inst = resolve_instance(name, search_dirs)
            rows.append(run_cell(inst, cfg, sc.limits, seed, registry, log_sink=log_sink))
    else:
        args = [
            (name, search_dirs, cfg.token(), sc.limits, seed) for name, cfg, seed in cells
        ]
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_cell_task, args))
    rows.sort(key=lambda r: (r.instance, r.config, r.seed))
    return rows


# ---------------------------------------------------------------------------
# aggregation


@dataclass
class ConfigSummary:
    config: str
    runs: int
    mean_t: float
    mean_pct_bks: float | None
    mean_pct_opt: float
    n_bks: int
    n_opt: int
    tmin_freq: int


@dataclass
class BenchSummary:
    configs: list[ConfigSummary]
    tmin_ties: int


def aggregate(rows: list[KpiRow]) -> BenchSummary:
    by_config: dict[str, list[KpiRow]] = {}
    for row in rows:
        by_config.setdefault(row.config, []).append(row)

    # fastest-configuration tally per (instance, seed); ties award everyone
    freq: dict[str, int] = {c: 0 for c in by_config}
    ties = 0
    by_cell: dict[tuple[str, int], list[KpiRow]] = {}
    for row in rows:
        by_cell.setdefault((row.instance, row.seed), []).append(row)
    for cell_rows in by_cell.values():
        best = min(r.t for r in cell_rows)
        winners = [r.config for r in cell_rows if r.t <= best + _TIME_TIE_TOL]
        if len(winners) > 1:
            ties += 1
        for c in winners:
            freq[c] += 1

    summaries = []
    for config in sorted(by_config):
        group = by_config[config]
        with_bks = [r.pct_bks for r in group if r.pct_bks is not None]
        summaries.append(
            ConfigSummary(
                config=config,
                runs=len(group),
                mean_t=sum(r.t for r in group) / len(group),
                mean_pct_bks=sum(with_bks) / len(with_bks) if with_bks else None,
                mean_pct_opt=sum(r.pct_opt for r in group) / len(group),
                n_bks=sum(r.hit_bks for r in group),
                n_opt=sum(r.proven_opt for r in group),
                tmin_freq=freq[config],
            )
        )
    return BenchSummary(configs=summaries, tmin_ties=ties)


# ---------------------------------------------------------------------------
# granulation statistics


@dataclass
class GranulationRow:
    instance: str
    n: int
    cls: int
    full: int
    kept: int
    reduction: float


def granulation_stats(instances: list[Instance]) -> list[GranulationRow]:
    rows = []
    for inst in instances:
        rep = granulation_report(inst)
        rows.append(
            GranulationRow(
                instance=inst.name, n=inst.n, cls=instance_class(inst.n),
                full=rep.full_count, kept=rep.kept_count, reduction=rep.reduction,
            )
        )
    return rows


def granulation_class_averages(rows: list[GranulationRow]) -> dict[int | str, tuple[float, float, float]]:
    """Per class (and 'all'): mean full count, mean kept count, mean reduction."""
    out: dict[int | str, tuple[float, float, float]] = {}
    for key in sorted({r.cls for r in rows}) + ["all"]:
        group = rows if key == "all" else [r for r in rows if r.cls == key]
        if group:
            out[key] = (
                sum(r.full for r in group) / len(group),
                sum(r.kept for r in group) / len(group),
                sum(r.reduction for r in group) / len(group),
            )
    return out


# ---------------------------------------------------------------------------
# report emission


def write_rows_csv(rows: list[KpiRow], path) -> None:
    fields = [
        "instance", "config", "seed", "status", "t", "build_t", "nodes",
        "bfs", "bps", "pct_bks", "pct_opt", "hit_bks", "proven_opt", "note",
    ]
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(fields)
        for r in rows:
            writer.writerow([
                r.instance, r.config, r.seed, r.status, repr(r.t), repr(r.build_t),
                r.nodes, "" if r.bfs is None else repr(r.bfs), repr(r.bps),
                "" if r.pct_bks is None else repr(r.pct_bks), repr(r.pct_opt),
                int(r.hit_bks), int(r.proven_opt), r.note,
            ])


def read_rows_csv(path) -> list[KpiRow]:
    rows = []
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            rows.append(
                KpiRow(
                    instance=rec["instance"], config=rec["config"], seed=int(rec["seed"]),
                    status=rec["status"], t=float(rec["t"]), build_t=float(rec["build_t"]),
                    nodes=int(rec["nodes"]),
                    bfs=float(rec["bfs"]) if rec["bfs"] else None,
                    bps=float(rec["bps"]),
                    pct_bks=float(rec["pct_bks"]) if rec["pct_bks"] else None,
                    pct_opt=float(rec["pct_opt"]),
                    hit_bks=rec["hit_bks"] == "1", proven_opt=rec["proven_opt"] == "1",
                    note=rec["note"],
                )
            )
    return rows


def _fmt(value, best=False, pct=False) -> str:
    if value is None:
        return "n/a"
    text = f"{value:.2f}%" if pct else (f"{value:.1f}" if isinstance(value, float) else str(value))
    return f"**{text}**" if best else text


def summary_markdown(summary: BenchSummary, title: str = "Benchmark summary") -> str:
    cfgs = summary.configs
    if not cfgs:
        return f"## {title}\n\n(no rows)\n"
    best_t = min(c.mean_t for c in cfgs)
    with_bks = [c.mean_pct_bks for c in cfgs if c.mean_pct_bks is not None]
    best_bks = min(with_bks) if with_bks else None
    best_opt = min(c.mean_pct_opt for c in cfgs)
    most_bks = max(c.n_bks for c in cfgs)
    most_opt = max(c.n_opt for c in cfgs)
    most_freq = max(c.tmin_freq for c in cfgs)

    lines = [f"## {title}", ""]
    lines.append("| Config | Runs | Avg t (s) | Avg %BKS | Avg %Opt | #BKS | #Opt | Freq. of t_min |")
    lines.append("|---|---:|---:|---:|---:|---:|---:|---:|")
    for c in cfgs:
        lines.append(
            "| {} | {} | {} | {} | {} | {} | {} | {} |".format(
                c.config, c.runs,
                _fmt(c.mean_t, c.mean_t <= best_t),
                _fmt(c.mean_pct_bks, best_bks is not None and c.mean_pct_bks == best_bks, pct=True),
                _fmt(c.mean_pct_opt, c.mean_pct_opt <= best_opt, pct=True),
                _fmt(c.n_bks, c.n_bks >= most_bks),
                _fmt(c.n_opt, c.n_opt >= most_opt),
                _fmt(c.tmin_freq, c.tmin_freq >= most_freq),
            )
        )
    if summary.tmin_ties:
        lines.append("")
        lines.append(
            f"*{summary.tmin_ties} instance cell(s) had timing ties; "
            "all tied configurations were awarded.*"
        )
    return "\n".join(lines) + "\n"


def summary_csv(summary: BenchSummary, path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["config", "runs", "mean_t", "mean_pct_bks", "mean_pct_opt",
                         "n_bks", "n_opt", "tmin_freq"])
        for c in summary.configs:
            writer.writerow([
                c.config, c.runs, repr(c.mean_t),
                "" if c.mean_pct_bks is None else repr(c.mean_pct_bks),
                repr(c.mean_pct_opt), c.n_bks, c.n_opt, c.tmin_freq,
            ])


def granulation_markdown(rows: list[GranulationRow]) -> str:
    lines = ["## Pair-cut granulation", ""]
    lines.append("| Instance | n | Class | Full count | Kept | Reduction |")
    lines.append("|---|---:|---:|---:|---:|---:|")
    for r in rows:
        lines.append(f"| {r.instance} | {r.n} | {r.cls} | {r.full} | {r.kept} | {r.reduction:.1%} |")
    for key, (full, kept, red) in granulation_class_averages(rows).items():
        label = f"Class {key} average" if key != "all" else "Grand average"
        lines.append(f"| *{label}* | | | {full:.0f} | {kept:.0f} | {red:.1%} |")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# scenario files


def parse_scenario_file(path) -> Scenario:
    """Line-oriented scenario format: ``key value...`` with # comments."""
    name = Path(path).stem
    instances: list[str] = []
    configs: list[FormulationConfig] = []
    seeds: list[int] = [0]
    limit_kw: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, _, rest = line.partition(" ")
        rest = rest.strip()
        if key == "name":
            name = rest
        elif key == "instances":
            instances.extend(rest.split())
        elif key == "configs":
            configs.extend(FormulationConfig.parse(tok) for tok in rest.split())
        elif key == "seeds":
            seeds = [int(tok) for tok in rest.split()]
        elif key == "time-limit":
            limit_kw["time_limit"] = float(rest)
        elif key == "node-limit":
            limit_kw["node_limit"] = int(float(rest))
        elif key == "gap-tolerance":
            limit_kw["gap_tolerance"] = float(rest)
        else:
            raise ValueError(f"unknown scenario key {key!r}")
    return Scenario(
        name=name, instances=instances, configs=configs,
        limits=SolveLimits(**limit_kw), seeds=seeds,
    )


def instance_summary(inst: Instance) -> str:
    tight = tightness(inst)
    fleet = str(inst.k_fixed) if inst.k_fixed is not None else "unlimited"
    return (
        f"{inst.name}: n={inst.n} capacity={inst.capacity:g} fleet={fleet} "
        f"tightness={'n/a' if tight is None else f'{tight:.2f}'} "
        f"class={instance_class(inst.n)} rounding={inst.rounding.value}"
    )
