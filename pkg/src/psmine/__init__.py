"""Partial-solution mining for explainable combinatorial optimization.

Mine a catalog of simple, high-fitness, atomic partial solutions from a
reference population, use it to explain solutions, and sample new full
solutions from it by pick-and-merge.
"""

from .core import (
    STAR,
    ContractViolation,
    EvaluatedPopulation,
    FullSolution,
    PartialSolution,
    SearchSpace,
    contains,
    format_full,
    format_partial,
    from_full,
    merge,
    mergeable,
    observations,
    parse_full,
    parse_partial,
    to_full,
)
from .metrics import (
    WORST,
    EvalCounter,
    MetricTriple,
    aggregate_scores,
    atomicity,
    benefit,
    contribution,
    exclude,
    isolate,
    mean_fitness,
    simplicity,
)
from .miner import (
    FULL_LOCAL,
    SIMPLIFICATION,
    SPECIALIZATION,
    VARIANTS,
    CatalogEntry,
    MinerConfig,
    PSCatalog,
    get_init,
    get_local,
    mine,
)
from .generator import GeneratorConfig, fill_gaps, generate, merge_from, weighted_random_choice
from .benchmarks import (
    BenchmarkProblem,
    catalog_contains_all_targets,
    make_problem,
    royal_road,
    royal_road_overlaps,
    trap_k,
)
from .baselines import (
    GAConfig,
    SearchResult,
    UMDAConfig,
    evolve_reference_population,
    run_full_ga,
    run_ps_ga,
    run_ps_hill_climber,
    run_umda,
)
from .experiments import (
    RECOMMENDED_MINER,
    CellResult,
    ExperimentSpec,
    RunRecord,
    derive_seed,
    quick_spec,
    run_experiment,
    run_t1,
    run_t2,
    run_t3,
)
from .explain import explain_global, explain_local

__version__ = "0.1.0"
