"""Backdoor analysis: path enumeration, adjustment sets, confounder augmentation.

The criterion used throughout is the classic backdoor criterion: a candidate
set is a valid adjustment set for (treatment, outcome) when it contains no
descendant of the treatment and blocks every backdoor path, i.e. every
undirected path whose first edge points into the treatment.  Graphs in this
problem domain are small (tens of nodes), so set enumeration is exhaustive
by increasing size, pruning supersets of sets already found.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import AbstractSet, Iterable, Sequence

from .dag import CausalDag, DagError, ancestors, descendants

__all__ = [
    "AdjustmentReport",
    "CausalQuery",
    "EdgeEntry",
    "augment_with_confounder",
    "backdoor_paths",
    "edge_confounder_report",
    "is_valid_adjustment",
    "minimal_adjustment_sets",
]


@dataclass(frozen=True)
class CausalQuery:
    """A treatment/outcome pair over a DAG."""

    dag: CausalDag
    treatment: str
    outcome: str

    def __post_init__(self):
        self.dag.require(self.treatment)
        self.dag.require(self.outcome)
        if self.treatment == self.outcome:
            raise DagError("treatment and outcome must differ")


def backdoor_paths(query: CausalQuery) -> list[tuple[str, ...]]:
    """All simple undirected treatment-outcome paths entering the treatment.

    Returned shortest first, ties broken lexicographically.
    """
    dag = query.dag
    neighbors = {
        n: sorted(set(dag.parents(n)) | set(dag.children(n))) for n in dag.nodes
    }
    paths: list[tuple[str, ...]] = []

    def walk(path: list[str]) -> None:
        node = path[-1]
        if node == query.outcome:
            paths.append(tuple(path))
            return
        for nxt in neighbors[node]:
            if nxt not in path:
                path.append(nxt)
                walk(path)
                path.pop()

    for first in dag.parents(query.treatment):
        walk([query.treatment, first])
    return sorted(paths, key=lambda p: (len(p), p))


def _path_blocked(
    dag: CausalDag,
    path: Sequence[str],
    given: AbstractSet[str],
    open_collider: AbstractSet[str],
) -> bool:
    for a, mid, b in zip(path, path[1:], path[2:]):
        if (a, mid) in dag.edges and (b, mid) in dag.edges:
            if mid not in open_collider:
                return True
        elif mid in given:
            return True
    return False


def _open_colliders(dag: CausalDag, given: AbstractSet[str]) -> set[str]:
    opened = set(given)
    for z in given:
        opened.update(ancestors(dag, z))
    return opened


def is_valid_adjustment(query: CausalQuery, adjustment: Iterable[str]) -> bool:
    """Backdoor criterion: no treatment descendants, every backdoor path blocked."""
    adjustment = frozenset(adjustment)
    for node in adjustment:
        query.dag.require(node)
    if query.treatment in adjustment or query.outcome in adjustment:
        raise DagError("adjustment set may not contain the treatment or outcome")
    if adjustment & descendants(query.dag, query.treatment):
        return False
    opened = _open_colliders(query.dag, adjustment)
    return all(
        _path_blocked(query.dag, path, adjustment, opened)
        for path in backdoor_paths(query)
    )


def minimal_adjustment_sets(
    query: CausalQuery, observed_only: bool = False
) -> list[frozenset[str]]:
    """All inclusion-minimal valid adjustment sets, smallest first then lexicographic.

    With ``observed_only`` latent nodes are excluded from the candidate pool.
    An empty list means no valid set exists under the constraint; a single
    empty set means no adjustment is needed.
    """
    dag = query.dag
    pool = dag.nodes - {query.treatment, query.outcome} - descendants(dag, query.treatment)
    if observed_only:
        pool -= dag.latent
    candidates = sorted(pool)
    paths = backdoor_paths(query)
    found: list[frozenset[str]] = []
    for size in range(len(candidates) + 1):
        for combo in combinations(candidates, size):
            subset = frozenset(combo)
            if any(prior <= subset for prior in found):
                continue
            opened = _open_colliders(dag, subset)
            if all(_path_blocked(dag, p, subset, opened) for p in paths):
                found.append(subset)
    return found


def augment_with_confounder(dag: CausalDag, edge: tuple[str, str]) -> CausalDag:
    """Add a latent common cause ``Z_<From>_<To>`` of both endpoints of ``edge``."""
    edge = tuple(edge)
    if edge not in dag.edges:
        raise DagError(f"edge {edge[0]} -> {edge[1]} is not in the DAG")
    name = f"Z_{edge[0]}_{edge[1]}"
    if name in dag.nodes:
        raise DagError(f"confounder name {name!r} collides with an existing node")
    return CausalDag(
        nodes=dag.nodes | {name},
        edges=dag.edges | {(name, edge[0]), (name, edge[1])},
        latent=dag.latent | {name},
        treatment=dag.treatment,
        outcome=dag.outcome,
    )


@dataclass(frozen=True)
class EdgeEntry:
    """Adjustment-set analysis of one edge's hypothetical confounder."""

    edge: tuple[str, str]
    sets: tuple[frozenset[str], ...]           # minimal sets, latents allowed
    observed_sets: tuple[frozenset[str], ...]  # minimal sets over observed nodes
    unadjustable: bool


@dataclass(frozen=True)
class AdjustmentReport:
    """Per-edge confounder analysis for a fixed treatment/outcome pair."""

    treatment: str
    outcome: str
    entries: tuple[EdgeEntry, ...]

    def to_json_dict(self) -> dict:
        return {
            "treatment": self.treatment,
            "outcome": self.outcome,
            "edges": [
                {
                    "from": e.edge[0],
                    "to": e.edge[1],
                    "sets": [sorted(s) for s in e.sets],
                    "observed_sets": [sorted(s) for s in e.observed_sets],
                    "unadjustable": e.unadjustable,
                }
                for e in self.entries
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def to_text(self) -> str:
        rows = []
        for i, e in enumerate(self.entries, start=1):
            sets = "  ".join(format_set(s) for s in e.sets) or "(none)"
            note = "  [unadjustable without latents]" if e.unadjustable else ""
            rows.append((str(i), f"{e.edge[0]} -> {e.edge[1]}", sets + note))
        if not rows:
            return "no edges to analyze\n"
        width = max(len(r[1]) for r in rows)
        num = max(len(r[0]) for r in rows)
        lines = [
            f"{i:>{num}}  {edge:<{width}}  {sets}" for i, edge, sets in rows
        ]
        header = f"{'':>{num}}  {'edge':<{width}}  adjustment sets"
        return "\n".join([header] + lines) + "\n"


def format_set(values: AbstractSet[str]) -> str:
    return "{" + ", ".join(sorted(values)) + "}"


def edge_confounder_report(query: CausalQuery) -> AdjustmentReport:
    """Re-derive adjustment sets after confounding each edge in turn.

    Every edge ``X -> Y`` of the DAG is augmented with a latent common cause
    ``Z_X_Y`` and the minimal adjustment sets of the augmented graph are
    listed, both with latent nodes allowed and restricted to observed nodes.
    An edge is flagged unadjustable when no observed-only set exists.
    """
    entries = []
    for edge in sorted(query.dag.edges):
        augmented = augment_with_confounder(query.dag, edge)
        sub = CausalQuery(augmented, query.treatment, query.outcome)
        with_latents = minimal_adjustment_sets(sub, observed_only=False)
        observed = minimal_adjustment_sets(sub, observed_only=True)
        entries.append(
            EdgeEntry(
                edge=edge,
                sets=tuple(with_latents),
                observed_sets=tuple(observed),
                unadjustable=not observed,
            )
        )
    return AdjustmentReport(query.treatment, query.outcome, tuple(entries))
