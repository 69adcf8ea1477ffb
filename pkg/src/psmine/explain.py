"""Plain-text explanation reports built from a PS catalog.

Global reports describe the landscape: the ranked catalog plus any pairs
of patterns that cannot coexist in one solution.  Local reports describe
one solution by the catalog patterns it contains.
"""

from __future__ import annotations

from .benchmarks import BenchmarkProblem
from .core import FullSolution, contains, format_full, format_partial, mergeable
from .miner import CatalogEntry, PSCatalog


def _entry_line(rank: int, entry: CatalogEntry, catalog: PSCatalog) -> str:
    pattern = format_partial(entry.ps, catalog.space)
    m = entry.metrics
    mean = "none" if m.mean_fitness == float("-inf") else f"{m.mean_fitness:.4f}"
    return (
        f"{rank:>4}  {pattern:<{catalog.space.n + 2}}"
        f"score={entry.score:.4f}  meanFitness={mean}  "
        f"simplicity={m.simplicity}  atomicity={m.atomicity:.6f}"
    )


def explain_global(catalog: PSCatalog, problem: BenchmarkProblem | None = None) -> str:
    """Landscape summary: ranked patterns and mutually exclusive pairs."""
    if not catalog.entries:
        return "Catalog is empty: nothing to explain.\n"
    lines = [f"Catalog of {len(catalog.entries)} partial solutions (best first):"]
    for rank, entry in enumerate(catalog.entries, start=1):
        lines.append(_entry_line(rank, entry, catalog))

    conflicts = []
    entries = catalog.entries
    for i in range(len(entries)):
        for j in range(i + 1, len(entries)):
            if not mergeable(entries[i].ps, entries[j].ps):
                conflicts.append(
                    f"  {format_partial(entries[i].ps, catalog.space)}"
                    f"  conflicts with  {format_partial(entries[j].ps, catalog.space)}"
                )
    lines.append("")
    if conflicts:
        lines.append(
            f"{len(conflicts)} pattern pairs cannot coexist in one solution:"
        )
        lines.extend(conflicts)
    else:
        lines.append("All catalog patterns are mutually compatible.")

    if problem is not None:
        lines.append("")
        lines.append(f"Known building blocks of problem '{problem.name}':")
        for t in problem.targets:
            status = "present" if t in catalog else "missing"
            lines.append(f"  {format_partial(t, catalog.space)}  -> {status}")
    return "\n".join(lines) + "\n"


def explain_local(solution: FullSolution, catalog: PSCatalog) -> str:
    """List exactly the catalog patterns contained in the solution."""
    text = format_full(solution, catalog.space)
    found = [e for e in catalog.entries if contains(solution, e.ps)]
    if not found:
        return f"Solution {text} contains no catalog patterns.\n"
    lines = [f"Solution {text} contains {len(found)} catalog patterns:"]
    for rank, entry in enumerate(found, start=1):
        lines.append(_entry_line(rank, entry, catalog))
    return "\n".join(lines) + "\n"
