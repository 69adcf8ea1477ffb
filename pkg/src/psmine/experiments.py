"""T1/T2/T3 experiment protocols with success-rate aggregation.

T1 compares PS mining configurations by how often the returned catalog
holds every known building block of a benchmark within a fixed budget of
aggregated-score evaluations.  T2 repeats the winning configuration over
reference populations of varying size and GA-evolution depth.  T3 splits
a raw fitness-evaluation budget between building a reference population
and mining it, then samples full solutions via pick-and-merge and counts
how often a global optimum appears, against GA and UMDA baselines.

Every run's seed derives deterministically from (base seed, cell key, run
index), so re-running a spec reproduces every number; result CSVs carry
no timing data and are byte-stable.
"""

from __future__ import annotations

import csv
import hashlib
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .baselines import (
    GAConfig,
    UMDAConfig,
    evolve_reference_population,
    run_full_ga,
    run_ps_ga,
    run_ps_hill_climber,
    run_umda,
)
from .benchmarks import (
    BenchmarkProblem,
    catalog_contains_all_targets,
    make_problem,
    royal_road_overlaps,
)
from .core import ContractViolation, EvaluatedPopulation
from .generator import GeneratorConfig, generate
from .miner import SPECIALIZATION, VARIANTS, MinerConfig, mine

log = logging.getLogger(__name__)

# Configuration that wins the T1 mining comparison; reused by T2 and T3.
RECOMMENDED_MINER = MinerConfig(
    population_size=150, variant=SPECIALIZATION, use_archive=True
)

_ALL_PROBLEMS = ("rr", "rro", "trap")


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary labeled parts (hash-randomization free)."""
    text = "|".join(str(p) for p in parts)
    digest = hashlib.sha256(text.encode()).digest()
    return int.from_bytes(digest[:8], "little") & (2**63 - 1)


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str  # "t1" | "t2" | "t3"
    problems: tuple[str, ...] = _ALL_PROBLEMS
    runs_per_cell: int = 100
    base_seed: int = 0
    workers: int | None = None
    # shared mining knobs
    fpsi_budget: int = 100_000
    ref_size: int = 10_000
    qty_ret: int = 50
    # T1 grid
    variants: tuple[str, ...] = VARIANTS
    pop_sizes: tuple[int, ...] = (50, 100, 150)
    archive_options: tuple[bool, ...] = (True, False)
    include_ps_ga: bool = True
    include_hill_climber: bool = True
    # T2 grid
    ref_sizes: tuple[int, ...] = (100, 200, 500, 1000, 2000, 5000, 10000)
    generations: tuple[int, ...] = (0, 10, 20, 50, 100, 200)
    # T3 grid
    budgets: tuple[int, ...] = (1000, 5000, 10000, 15000, 20000, 25000, 30000)
    shares: tuple[int, ...] = (10, 20, 30, 40, 50, 60, 70, 80, 90)
    include_full_ga: bool = True
    include_umda: bool = True
    generated_per_run: int = 10_000

    def validate(self) -> None:
        if self.experiment not in ("t1", "t2", "t3"):
            raise ContractViolation(f"unknown experiment {self.experiment!r}")
        if self.runs_per_cell < 1:
            raise ContractViolation("runs_per_cell must be at least 1")
        for p in self.problems:
            if p not in _ALL_PROBLEMS:
                raise ContractViolation(f"unknown problem {p!r}")


def quick_spec(experiment: str, **overrides) -> ExperimentSpec:
    """Reduced-grid profile (20 runs) for smoke testing and CI."""
    quick = dict(
        runs_per_cell=20,
        variants=(SPECIALIZATION,),
        pop_sizes=(150,),
        archive_options=(True,),
        include_ps_ga=False,
        include_hill_climber=False,
        ref_sizes=(1000, 10000),
        generations=(0, 10),
        budgets=(5000, 30000),
        shares=(20, 50),
    )
    quick.update(overrides)
    return ExperimentSpec(experiment=experiment, **quick)


@dataclass(frozen=True)
class RunRecord:
    cell_id: int
    run_index: int
    seed: int
    success: bool
    best_fitness: float | None
    evals_to_success: int | None
    fpsi_search: int
    fpsi_total: int
    fpsi_budget: int
    f_evals: int
    f_budget: int | None
    duration: float


@dataclass
class CellResult:
    experiment: str
    problem: str
    cell: dict
    runs: int
    successes: int
    mean_evals_to_success: float | None
    std_evals_to_success: float | None
    mean_best_fitness: float | None
    wall_clock: float
    records: list[RunRecord] = field(repr=False, default_factory=list)

    @property
    def success_rate(self) -> float:
        return self.successes / self.runs


def _cell_key(problem: str, cell: dict) -> str:
    parts = [f"problem={problem}"] + [f"{k}={cell[k]}" for k in sorted(cell)]
    return "|".join(parts)


def _cells_for(spec: ExperimentSpec) -> list[tuple[str, dict]]:
    cells: list[tuple[str, dict]] = []
    for problem in spec.problems:
        if spec.experiment == "t1":
            for archive in spec.archive_options:
                for variant in spec.variants:
                    for size in spec.pop_sizes:
                        cells.append(
                            (problem, {"method": "miner", "variant": variant,
                                       "pop_size": size, "archive": archive})
                        )
            if spec.include_ps_ga:
                for size in spec.pop_sizes:
                    cells.append((problem, {"method": "ps-ga", "pop_size": size}))
            if spec.include_hill_climber:
                cells.append((problem, {"method": "hill-climber"}))
        elif spec.experiment == "t2":
            for size in spec.ref_sizes:
                for gens in spec.generations:
                    cells.append((problem, {"ref_size": size, "generations": gens}))
        else:
            for budget in spec.budgets:
                for share in spec.shares:
                    cells.append(
                        (problem, {"method": "pm", "share": share, "budget": budget})
                    )
                if spec.include_full_ga:
                    cells.append((problem, {"method": "ga", "budget": budget}))
                if spec.include_umda:
                    cells.append((problem, {"method": "umda", "budget": budget}))
    return cells


@dataclass(frozen=True)
class _WorkItem:
    experiment: str
    problem_name: str
    problem_payload: str | None  # fixed instance JSON; None = fresh per run (rro)
    cell_id: int
    cell: dict
    run_index: int
    seed: int
    fpsi_budget: int
    ref_size: int
    qty_ret: int
    generated_per_run: int


def _problem_for_run(item: _WorkItem) -> BenchmarkProblem:
    if item.problem_payload is not None:
        return BenchmarkProblem.from_json(item.problem_payload)
    return royal_road_overlaps(rng_seed=derive_seed(item.seed, "problem"))


def _uniform_reference(
    problem: BenchmarkProblem, size: int, seed: int
) -> tuple[EvaluatedPopulation, int]:
    """Uniform random reference population; returns it plus the F-eval count."""
    rng = np.random.default_rng(seed)
    cards = np.asarray(problem.space.cardinalities, dtype=np.int64)
    matrix = rng.integers(0, cards, size=(size, problem.space.n), dtype=np.uint8)
    raw = problem.fitness_batch(matrix)
    return EvaluatedPopulation(problem.space, matrix, raw), size


def _mine_record(item: _WorkItem, problem: BenchmarkProblem, pop: EvaluatedPopulation,
                 f_evals: int, f_budget: int | None, start: float) -> RunRecord:
    cell = item.cell
    if cell.get("method") == "ps-ga":
        catalog = run_ps_ga(
            pop,
            GAConfig(population_size=cell["pop_size"],
                     rng_seed=derive_seed(item.seed, "search")),
            item.fpsi_budget,
            stop_targets=problem.targets,
            qty_ret=item.qty_ret,
        )
    elif cell.get("method") == "hill-climber":
        catalog = run_ps_hill_climber(
            pop,
            item.fpsi_budget,
            stop_targets=problem.targets,
            qty_ret=item.qty_ret,
            rng_seed=derive_seed(item.seed, "search"),
        )
    else:
        cfg = MinerConfig(
            population_size=cell.get("pop_size", RECOMMENDED_MINER.population_size),
            variant=cell.get("variant", RECOMMENDED_MINER.variant),
            use_archive=cell.get("archive", RECOMMENDED_MINER.use_archive),
            qty_ret=item.qty_ret,
            eval_budget=item.fpsi_budget,
            rng_seed=derive_seed(item.seed, "search"),
        )
        catalog = mine(cfg, pop, stop_targets=problem.targets)
    success = catalog_contains_all_targets(catalog, problem)
    return RunRecord(
        cell_id=item.cell_id,
        run_index=item.run_index,
        seed=item.seed,
        success=success,
        best_fitness=None,
        evals_to_success=catalog.evals_search if success else None,
        fpsi_search=catalog.evals_search,
        fpsi_total=catalog.evals_used,
        fpsi_budget=item.fpsi_budget,
        f_evals=f_evals,
        f_budget=f_budget,
        duration=time.perf_counter() - start,
    )


def _execute_run(item: _WorkItem) -> RunRecord:
    start = time.perf_counter()
    problem = _problem_for_run(item)
    cell = item.cell

    if item.experiment == "t1":
        pop, f_evals = _uniform_reference(
            problem, item.ref_size, derive_seed(item.seed, "ref")
        )
        return _mine_record(item, problem, pop, f_evals, None, start)

    if item.experiment == "t2":
        pop = evolve_reference_population(
            problem,
            cell["ref_size"],
            cell["generations"],
            GAConfig(rng_seed=derive_seed(item.seed, "ref")),
        )
        return _mine_record(item, problem, pop, 0, None, start)

    # t3
    budget = cell["budget"]
    if cell["method"] == "pm":
        ps_budget = round(budget * cell["share"] / 100)
        ref_n = budget - ps_budget
        pop, f_evals = _uniform_reference(problem, ref_n, derive_seed(item.seed, "ref"))
        cfg = MinerConfig(
            population_size=RECOMMENDED_MINER.population_size,
            variant=RECOMMENDED_MINER.variant,
            use_archive=RECOMMENDED_MINER.use_archive,
            qty_ret=item.qty_ret,
            eval_budget=ps_budget,
            rng_seed=derive_seed(item.seed, "search"),
        )
        catalog = mine(cfg, pop)
        solutions = generate(
            catalog,
            GeneratorConfig(rng_seed=derive_seed(item.seed, "generate")),
            item.generated_per_run,
        )
        # optimum checks are oracle queries, not budgeted evaluations
        mat = np.frombuffer(
            b"".join(s.values for s in solutions), dtype=np.uint8
        ).reshape(len(solutions), problem.space.n)
        fits = problem.fitness_batch(mat)
        best_fit = float(fits.max()) if len(fits) else float("-inf")
        return RunRecord(
            cell_id=item.cell_id,
            run_index=item.run_index,
            seed=item.seed,
            success=best_fit == problem.max_fitness,
            best_fitness=best_fit,
            evals_to_success=None,
            fpsi_search=catalog.evals_search,
            fpsi_total=catalog.evals_used,
            fpsi_budget=ps_budget,
            f_evals=f_evals,
            f_budget=ref_n,
            duration=time.perf_counter() - start,
        )

    if cell["method"] == "ga":
        result = run_full_ga(
            problem,
            GAConfig(rng_seed=derive_seed(item.seed, "search")),
            budget,
        )
    elif cell["method"] == "umda":
        result = run_umda(
            problem,
            UMDAConfig(rng_seed=derive_seed(item.seed, "search")),
            budget,
        )
    else:
        raise ContractViolation(f"unknown t3 method {cell['method']!r}")
    success = result.best_fitness == problem.max_fitness
    evals_to_success = None
    if success:
        for _, best, evals in result.history:
            if best == problem.max_fitness:
                evals_to_success = evals
                break
    return RunRecord(
        cell_id=item.cell_id,
        run_index=item.run_index,
        seed=item.seed,
        success=success,
        best_fitness=result.best_fitness,
        evals_to_success=evals_to_success,
        fpsi_search=0,
        fpsi_total=0,
        fpsi_budget=0,
        f_evals=result.evals_used,
        f_budget=budget,
        duration=time.perf_counter() - start,
    )


def _worker_count(spec: ExperimentSpec) -> int:
    if spec.workers is not None:
        return max(1, spec.workers)
    env = os.environ.get("PSMINE_WORKERS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(spec: ExperimentSpec) -> list[CellResult]:
    """Execute every (cell, run) of the spec and aggregate per cell."""
    spec.validate()
    cells = _cells_for(spec)
    payloads: dict[str, str | None] = {}
    for problem in spec.problems:
        if problem == "rro":
            payloads[problem] = None  # fresh instance per run
        else:
            payloads[problem] = make_problem(
                problem, rng_seed=derive_seed(spec.base_seed, "problem", problem)
            ).to_json()

    items: list[_WorkItem] = []
    for cell_id, (problem, cell) in enumerate(cells):
        key = _cell_key(problem, cell)
        for run_index in range(spec.runs_per_cell):
            items.append(
                _WorkItem(
                    experiment=spec.experiment,
                    problem_name=problem,
                    problem_payload=payloads[problem],
                    cell_id=cell_id,
                    cell=cell,
                    run_index=run_index,
                    seed=derive_seed(spec.base_seed, key, run_index),
                    fpsi_budget=spec.fpsi_budget,
                    ref_size=spec.ref_size,
                    qty_ret=spec.qty_ret,
                    generated_per_run=spec.generated_per_run,
                )
            )

    workers = _worker_count(spec)
    started = time.perf_counter()
    if workers > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunk = max(1, len(items) // (workers * 8))
            records = list(pool.map(_execute_run, items, chunksize=chunk))
    else:
        records = [_execute_run(item) for item in items]
    log.info(
        "%s: %d cells x %d runs in %.1fs",
        spec.experiment, len(cells), spec.runs_per_cell,
        time.perf_counter() - started,
    )

    by_cell: dict[int, list[RunRecord]] = {}
    for rec in records:
        by_cell.setdefault(rec.cell_id, []).append(rec)

    results = []
    for cell_id, (problem, cell) in enumerate(cells):
        recs = sorted(by_cell.get(cell_id, []), key=lambda r: r.run_index)
        evals = [r.evals_to_success for r in recs if r.evals_to_success is not None]
        fits = [r.best_fitness for r in recs if r.best_fitness is not None]
        results.append(
            CellResult(
                experiment=spec.experiment,
                problem=problem,
                cell=cell,
                runs=len(recs),
                successes=sum(r.success for r in recs),
                mean_evals_to_success=float(np.mean(evals)) if evals else None,
                std_evals_to_success=float(np.std(evals)) if evals else None,
                mean_best_fitness=float(np.mean(fits)) if fits else None,
                wall_clock=sum(r.duration for r in recs),
                records=recs,
            )
        )
    return results


def run_t1(spec: ExperimentSpec) -> list[CellResult]:
    if spec.experiment != "t1":
        raise ContractViolation("spec.experiment must be 't1'")
    return run_experiment(spec)


def run_t2(spec: ExperimentSpec) -> list[CellResult]:
    if spec.experiment != "t2":
        raise ContractViolation("spec.experiment must be 't2'")
    return run_experiment(spec)


def run_t3(spec: ExperimentSpec) -> list[CellResult]:
    if spec.experiment != "t3":
        raise ContractViolation("spec.experiment must be 't3'")
    return run_experiment(spec)


# --- result emission -------------------------------------------------------


def _fmt(value, pattern="{:.4f}") -> str:
    return "" if value is None else pattern.format(value)


def results_csv(results: list[CellResult]) -> str:
    """Aggregated results as CSV text (timing-free, byte-stable per seed)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    experiment = results[0].experiment if results else ""
    if experiment == "t1":
        writer.writerow(
            ["problem", "method", "variant", "pop_size", "archive", "runs",
             "successes", "success_rate", "mean_evals_to_success",
             "std_evals_to_success"]
        )
        for r in results:
            c = r.cell
            writer.writerow(
                [r.problem, c["method"], c.get("variant", ""),
                 c.get("pop_size", ""),
                 "" if "archive" not in c else str(c["archive"]).lower(),
                 r.runs, r.successes, f"{r.success_rate:.4f}",
                 _fmt(r.mean_evals_to_success, "{:.1f}"),
                 _fmt(r.std_evals_to_success, "{:.1f}")]
            )
    elif experiment == "t2":
        writer.writerow(
            ["problem", "ref_size", "generations", "runs", "successes",
             "success_rate", "mean_evals_to_success", "std_evals_to_success"]
        )
        for r in results:
            writer.writerow(
                [r.problem, r.cell["ref_size"], r.cell["generations"],
                 r.runs, r.successes, f"{r.success_rate:.4f}",
                 _fmt(r.mean_evals_to_success, "{:.1f}"),
                 _fmt(r.std_evals_to_success, "{:.1f}")]
            )
    else:
        writer.writerow(
            ["problem", "method", "share", "budget", "runs", "successes",
             "success_rate", "mean_best_fitness"]
        )
        for r in results:
            writer.writerow(
                [r.problem, r.cell["method"], r.cell.get("share", ""),
                 r.cell["budget"], r.runs, r.successes,
                 f"{r.success_rate:.4f}", _fmt(r.mean_best_fitness)]
            )
    return buf.getvalue()


def runs_csv(results: list[CellResult]) -> str:
    """Per-run records as CSV text (budget audit trail)."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["problem", "cell", "run", "seed", "success", "best_fitness",
         "evals_to_success", "fpsi_search", "fpsi_total", "fpsi_budget",
         "f_evals", "f_budget"]
    )
    for r in results:
        key = _cell_key(r.problem, r.cell)
        for rec in r.records:
            writer.writerow(
                [r.problem, key, rec.run_index, rec.seed, int(rec.success),
                 _fmt(rec.best_fitness), _fmt(rec.evals_to_success, "{:.0f}"),
                 rec.fpsi_search, rec.fpsi_total, rec.fpsi_budget,
                 rec.f_evals, "" if rec.f_budget is None else rec.f_budget]
            )
    return buf.getvalue()


def _rate(r: CellResult) -> str:
    return f"{100 * r.success_rate:.0f}%"


def results_markdown(results: list[CellResult]) -> str:
    """Human-readable success-rate tables, one pivot per problem."""
    if not results:
        return "(no results)\n"
    experiment = results[0].experiment
    lines: list[str] = []
    problems = sorted({r.problem for r in results})
    for problem in problems:
        rows = [r for r in results if r.problem == problem]
        lines.append(f"## {problem} ({experiment})")
        lines.append("")
        if experiment == "t1":
            lines.append("| method | variant | pop size | archive | success |")
            lines.append("|---|---|---|---|---|")
            for r in rows:
                c = r.cell
                lines.append(
                    f"| {c['method']} | {c.get('variant', '-')} "
                    f"| {c.get('pop_size', '-')} "
                    f"| {c.get('archive', '-')} | {_rate(r)} |"
                )
        elif experiment == "t2":
            gens = sorted({r.cell["generations"] for r in rows})
            sizes = sorted({r.cell["ref_size"] for r in rows})
            lines.append("| ref size | " + " | ".join(f"gen {g}" for g in gens) + " |")
            lines.append("|---|" + "---|" * len(gens))
            cellmap = {(r.cell["ref_size"], r.cell["generations"]): r for r in rows}
            for size in sizes:
                vals = [
                    _rate(cellmap[(size, g)]) if (size, g) in cellmap else "-"
                    for g in gens
                ]
                lines.append(f"| {size} | " + " | ".join(vals) + " |")
        else:
            budgets = sorted({r.cell["budget"] for r in rows})
            methods: list[tuple[str, object]] = []
            for r in rows:
                key = (r.cell["method"], r.cell.get("share"))
                if key not in methods:
                    methods.append(key)
            methods.sort(key=lambda m: (m[0] != "pm", m[1] if m[1] is not None else -1, m[0]))
            lines.append("| method | " + " | ".join(str(b) for b in budgets) + " |")
            lines.append("|---|" + "---|" * len(budgets))
            cellmap = {
                (r.cell["method"], r.cell.get("share"), r.cell["budget"]): r for r in rows
            }
            for method, share in methods:
                label = f"pm {share}%" if method == "pm" else method
                vals = [
                    _rate(cellmap[(method, share, b)]) if (method, share, b) in cellmap else "-"
                    for b in budgets
                ]
                lines.append(f"| {label} | " + " | ".join(vals) + " |")
        lines.append("")
    return "\n".join(lines)


def write_results(results: list[CellResult], out_dir: str) -> dict[str, str]:
    """Write results.csv, runs.csv and results.md; returns the paths."""
    os.makedirs(out_dir, exist_ok=True)
    experiment = results[0].experiment if results else "results"
    paths = {}
    for suffix, text in (
        ("results.csv", results_csv(results)),
        ("runs.csv", runs_csv(results)),
        ("results.md", results_markdown(results)),
    ):
        path = os.path.join(out_dir, f"{experiment}_{suffix}")
        with open(path, "w", newline="") as fh:
            fh.write(text)
        paths[suffix] = path
    return paths
