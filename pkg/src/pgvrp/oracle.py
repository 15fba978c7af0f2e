"""Brute-force reference solvers for desk-scale validation.

Everything here trades speed for obvious correctness: full enumeration of
candidate solutions and of presence scenarios. Solvers pick exactly
min(K, m) nonempty tours, one representative node per cluster; when K
exceeds the cluster count the remaining vehicles stay at the depot as empty
tours. Representative choice, cluster-to-tour partition, and tour order are
enumerated exhaustively, with tour orientation halved by symmetry.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator

from .model import AprioriSolution, Instance, enumerate_scenarios
from .evaluation import expected_length, realized_length


class BudgetExceeded(RuntimeError):
    """Raised when an enumeration would exceed its guard limits."""


@dataclass(frozen=True)
class EnumerationBudget:
    """Guards against combinatorial blow-up of the brute-force solvers."""

    max_nodes: int = 10
    max_clusters: int = 5
    max_vehicles: int = 3
    max_candidates: int = 2_000_000

    def __post_init__(self):
        if min(self.max_nodes, self.max_clusters, self.max_vehicles, self.max_candidates) <= 0:
            raise ValueError("budget limits must be positive")

    def admit(self, instance: Instance):
        if instance.n_nodes > self.max_nodes:
            raise BudgetExceeded(f"{instance.n_nodes} nodes > budget {self.max_nodes}")
        if instance.n_clusters > self.max_clusters:
            raise BudgetExceeded(f"{instance.n_clusters} clusters > budget {self.max_clusters}")
        if instance.vehicles > self.max_vehicles:
            raise BudgetExceeded(f"{instance.vehicles} vehicles > budget {self.max_vehicles}")


def _set_partitions(items: list[int], parts: int) -> Iterator[list[list[int]]]:
    """All partitions of `items` into exactly `parts` nonempty unordered blocks."""
    n = len(items)
    if parts > n:
        return
    assignment = [0] * n

    def rec(i: int, used: int):
        if i == n:
            if used == parts:
                blocks: list[list[int]] = [[] for _ in range(parts)]
                for idx, part in enumerate(assignment):
                    blocks[part].append(items[idx])
                yield blocks
            return
        # canonical restricted-growth placement avoids duplicate partitions
        for part in range(min(used + 1, parts)):
            assignment[i] = part
            yield from rec(i + 1, max(used, part + 1))

    yield from rec(0, 0)


def _tour_orders(nodes: list[int]) -> Iterator[tuple[int, ...]]:
    """Permutations of a tour's interior, one per orientation pair."""
    for perm in itertools.permutations(nodes):
        if perm <= perm[::-1]:
            yield perm


def enumerate_apriori_solutions(
    instance: Instance, budget: EnumerationBudget
) -> Iterator[AprioriSolution]:
    """Every candidate solution: one representative per cluster, exactly
    min(K, m) nonempty tours, padded to K with empty tours."""
    budget.admit(instance)
    k = instance.vehicles
    m = instance.n_clusters
    nonempty = min(k, m)
    member_sets = [c.members for c in instance.clusters]
    count = 0
    for reps in itertools.product(*member_sets):
        for blocks in _set_partitions(list(range(m)), nonempty):
            for ordered in itertools.product(
                *(_tour_orders([reps[ci] for ci in block]) for block in blocks)
            ):
                count += 1
                if count > budget.max_candidates:
                    raise BudgetExceeded(
                        f"candidate count exceeds budget {budget.max_candidates}"
                    )
                tours = [(0, *seq, 0) for seq in ordered]
                tours += [(0, 0)] * (k - nonempty)
                yield AprioriSolution(tuple(tours))


def best_apriori_bruteforce(
    instance: Instance, budget: EnumerationBudget | None = None
) -> tuple[AprioriSolution, float]:
    """Global minimizer of the expected a-priori length by full enumeration.

    Ties are broken by the lexicographically smallest canonical tour
    encoding, so the result is unique and deterministic.
    """
    budget = budget or EnumerationBudget()
    best: tuple[float, tuple, AprioriSolution] | None = None
    for sol in enumerate_apriori_solutions(instance, budget):
        obj = expected_length(sol, instance, check=False)
        canon = sol.canonical()
        key = (obj, canon.tours)
        if best is None or key < (best[0], best[1]):
            best = (obj, canon.tours, canon)
    if best is None:
        raise BudgetExceeded("no candidate solutions (empty enumeration)")
    return best[2], best[0]


def gvrp_optimal(
    instance: Instance, budget: EnumerationBudget | None = None
) -> tuple[AprioriSolution, float]:
    """Deterministic optimum: presence probabilities forced to 1."""
    return best_apriori_bruteforce(instance.with_probability_one(), budget)


def expected_length_enumerated(sol: AprioriSolution, instance: Instance) -> float:
    """Expectation by direct summation over all 2^m scenarios."""
    return float(
        sum(
            sc.probability * realized_length(sol, sc, instance)
            for sc in enumerate_scenarios(instance)
        )
    )
