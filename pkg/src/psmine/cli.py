"""Command-line interface: mine, generate, explain, bench, problem."""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import experiments
from .benchmarks import BenchmarkProblem, make_problem
from .core import ContractViolation, format_full, parse_full
from .experiments import ExperimentSpec, derive_seed, quick_spec, run_experiment
from .explain import explain_global, explain_local
from .generator import GeneratorConfig, generate
from .miner import VARIANTS, MinerConfig, PSCatalog, mine


def _add_problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--problem", choices=("rr", "rro", "trap"), default="rr")
    p.add_argument("--problem-seed", type=int, default=0,
                   help="seed for the problem's position shuffle / group draw")
    p.add_argument("--problem-file", default=None,
                   help="load a serialized problem instead of generating one")


def _load_problem(args) -> BenchmarkProblem:
    if args.problem_file:
        with open(args.problem_file) as fh:
            return BenchmarkProblem.from_json(fh.read())
    return make_problem(args.problem, rng_seed=args.problem_seed)


def _cmd_mine(args) -> int:
    problem = _load_problem(args)
    rng = np.random.default_rng(derive_seed(args.seed, "ref"))
    cards = np.asarray(problem.space.cardinalities, dtype=np.int64)
    matrix = rng.integers(0, cards, size=(args.ref_size, problem.space.n), dtype=np.uint8)
    from .core import EvaluatedPopulation

    pop = EvaluatedPopulation(problem.space, matrix, problem.fitness_batch(matrix))
    cfg = MinerConfig(
        population_size=args.pop_size,
        variant=args.variant,
        use_archive=args.archive,
        qty_ret=args.qty_ret,
        eval_budget=args.budget,
        rng_seed=derive_seed(args.seed, "search"),
    )
    catalog = mine(cfg, pop)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(catalog.to_json())
        print(f"catalog with {len(catalog)} PSs -> {args.out}", file=sys.stderr)
    if args.tsv:
        with open(args.tsv, "w", newline="") as fh:
            fh.write(catalog.to_tsv())
    if not args.out and not args.tsv:
        sys.stdout.write(catalog.to_tsv())
    return 0


def _load_catalog(path: str) -> PSCatalog:
    with open(path) as fh:
        return PSCatalog.from_json(fh.read())


def _cmd_generate(args) -> int:
    catalog = _load_catalog(args.catalog)
    cfg = GeneratorConfig(merge_limit=args.merge_limit, rng_seed=args.seed)
    solutions = generate(catalog, cfg, args.count)
    lines = [format_full(s, catalog.space) for s in solutions]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def _cmd_explain(args) -> int:
    catalog = _load_catalog(args.catalog)
    if args.what == "global":
        problem = None
        if args.problem_file:
            with open(args.problem_file) as fh:
                problem = BenchmarkProblem.from_json(fh.read())
        sys.stdout.write(explain_global(catalog, problem))
    else:
        if not args.solution:
            raise ContractViolation("explain local needs --solution")
        solution = parse_full(args.solution, catalog.space)
        sys.stdout.write(explain_local(solution, catalog))
    return 0


def _parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(v) for v in text.split(",") if v.strip())


def _cmd_bench(args) -> int:
    problems = tuple(p.strip() for p in args.problems.split(",") if p.strip())
    overrides: dict = {"problems": problems, "base_seed": args.base_seed}
    if args.workers is not None:
        overrides["workers"] = args.workers
    if args.runs is not None:
        overrides["runs_per_cell"] = args.runs
    if args.experiment == "t1":
        if args.variants:
            overrides["variants"] = tuple(args.variants.split(","))
        if args.pop_sizes:
            overrides["pop_sizes"] = _parse_int_list(args.pop_sizes)
        if args.archive_mode == "true":
            overrides["archive_options"] = (True,)
        elif args.archive_mode == "false":
            overrides["archive_options"] = (False,)
        if args.no_ps_ga:
            overrides["include_ps_ga"] = False
        if args.no_hill_climber:
            overrides["include_hill_climber"] = False
    elif args.experiment == "t2":
        if args.ref_sizes:
            overrides["ref_sizes"] = _parse_int_list(args.ref_sizes)
        if args.generations:
            overrides["generations"] = _parse_int_list(args.generations)
    else:
        if args.budgets:
            overrides["budgets"] = _parse_int_list(args.budgets)
        if args.shares:
            overrides["shares"] = _parse_int_list(args.shares)
        if args.no_ga:
            overrides["include_full_ga"] = False
        if args.no_umda:
            overrides["include_umda"] = False

    if args.quick:
        spec = quick_spec(args.experiment, **overrides)
    else:
        spec = ExperimentSpec(experiment=args.experiment, **overrides)
    results = run_experiment(spec)
    paths = experiments.write_results(results, args.out)
    for path in paths.values():
        print(path, file=sys.stderr)
    sys.stdout.write(experiments.results_markdown(results))
    return 0


def _cmd_problem(args) -> int:
    problem = make_problem(args.problem, rng_seed=args.problem_seed)
    text = problem.to_json() + "\n"
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="psmine",
        description="Mine, inspect and sample catalogs of partial solutions.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine a PS catalog from a fresh reference population")
    _add_problem_args(p)
    p.add_argument("--ref-size", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--pop-size", type=int, default=150)
    p.add_argument("--variant", choices=VARIANTS, default="specialization")
    p.add_argument("--archive", dest="archive", action="store_true", default=True)
    p.add_argument("--no-archive", dest="archive", action="store_false")
    p.add_argument("--budget", type=int, default=100_000,
                   help="PS-evaluation budget")
    p.add_argument("--qty-ret", type=int, default=50)
    p.add_argument("--out", default=None, help="catalog JSON path")
    p.add_argument("--tsv", default=None, help="catalog TSV path")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("generate", help="sample full solutions from a catalog")
    p.add_argument("--catalog", required=True, help="catalog JSON path")
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--merge-limit", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("explain", help="render global or local explanations")
    p.add_argument("what", choices=("global", "local"))
    p.add_argument("--catalog", required=True)
    p.add_argument("--solution", default=None, help="solution string for local reports")
    p.add_argument("--problem-file", default=None,
                   help="annotate a global report with a problem's known blocks")
    p.set_defaults(func=_cmd_explain)

    p = sub.add_parser("bench", help="run the T1/T2/T3 benchmark protocols")
    p.add_argument("experiment", choices=("t1", "t2", "t3"))
    p.add_argument("--problems", default="rr,rro,trap")
    p.add_argument("--runs", type=int, default=None)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--out", default="bench-out")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel worker processes (or set PSMINE_WORKERS)")
    p.add_argument("--quick", action="store_true", help="reduced CI profile")
    p.add_argument("--variants", default=None)
    p.add_argument("--pop-sizes", default=None)
    p.add_argument("--archive-mode", choices=("true", "false", "both"), default="both")
    p.add_argument("--no-ps-ga", action="store_true")
    p.add_argument("--no-hill-climber", action="store_true")
    p.add_argument("--ref-sizes", default=None)
    p.add_argument("--generations", default=None)
    p.add_argument("--budgets", default=None)
    p.add_argument("--shares", default=None)
    p.add_argument("--no-ga", action="store_true")
    p.add_argument("--no-umda", action="store_true")
    p.set_defaults(func=_cmd_bench)

    p = sub.add_parser("problem", help="serialize a benchmark problem for replay")
    p.add_argument("--problem", choices=("rr", "rro", "trap"), default="rr")
    p.add_argument("--problem-seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_problem)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
