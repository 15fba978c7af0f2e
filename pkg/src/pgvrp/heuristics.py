"""Construction heuristics.

The stochastic heuristics rank candidate insertions by *expected* insertion
value: the exact increase in expected tour length caused by splicing a node
into a slot, accounting for every presence scenario of the surrounding
nodes. Three builders use it:

* min-min: globally cheapest insertion, vehicle by vehicle under a
  clusters-per-tour capacity;
* max-min: per cluster take its cheapest insertion, then insert the cluster
  whose cheapest insertion is the most expensive (hard clusters first);
* unbounded: seed every vehicle with one cluster, then cheapest insertion
  across all partial tours with no capacity.

Two deterministic baselines round the module out: Clarke-Wright savings
merges and the polar-angle sweep.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import AprioriSolution, Instance, ValidationError
from .evaluation import tour_probabilities


@dataclass(frozen=True)
class InsertionCandidate:
    node: int
    tour_index: int
    position: int
    value: float

    def sort_key(self):
        return (self.value, self.node, self.tour_index, self.position)


def expected_insertion_value(
    tour: Sequence[int], slot: int, node: int, instance: Instance
) -> float:
    """Exact expected-length increase of inserting `node` at `slot`.

    `slot` is the index the node takes in the new tour, i.e. the insertion
    happens between positions slot-1 and slot of the current tour. The
    candidate node pairs with every possible realized predecessor r < slot
    and successor z >= slot, weighted by the probability that the nodes
    between them are absent; the closing depot acts as a final successor
    with probability one.
    """
    tour = tuple(tour)
    if not (1 <= slot <= len(tour) - 1):
        raise ValidationError(f"slot {slot} invalid for tour of length {len(tour)}")
    if node in tour[1:-1]:
        raise ValidationError(f"node {node} already on the tour")
    p = tour_probabilities(tour, instance)
    pj = instance.node_probabilities()[node]
    if pj == 0.0:
        return 0.0
    d = instance.distances
    nodes = np.asarray(tour)

    # w[r]: probability r is the realized predecessor of the slot
    w = np.zeros(slot)
    absent = 1.0
    for r in range(slot - 1, -1, -1):
        w[r] = p[r] * absent
        absent *= 1.0 - p[r]
    # v[z]: probability z is the realized successor of the slot
    v = np.zeros(len(tour) - slot)
    absent = 1.0
    for z in range(slot, len(tour)):
        v[z - slot] = p[z] * absent
        absent *= 1.0 - p[z]

    before, after = nodes[:slot], nodes[slot:]
    to_node = d[before, node] @ w
    from_node = d[node, after] @ v
    across = w @ d[np.ix_(before, after)] @ v
    return float(pj * (to_node * v.sum() + w.sum() * from_node - across))


def _cluster_capacity(instance: Instance, capacity: int | None) -> int:
    m, k = instance.n_clusters, instance.vehicles
    if capacity is None:
        capacity = math.ceil(m / k)
    if capacity < 1:
        raise ValidationError(f"capacity {capacity} < 1")
    if capacity * k < m:
        raise ValidationError(
            f"{k} vehicles with {capacity} clusters each cannot cover {m} clusters"
        )
    return capacity


def _insertions_into(
    tour: tuple[int, ...], tour_index: int, members: Sequence[int], instance: Instance
):
    for node in members:
        for slot in range(1, len(tour)):
            yield InsertionCandidate(
                node,
                tour_index,
                slot,
                expected_insertion_value(tour, slot, node, instance),
            )


def _insert(tour: tuple[int, ...], cand: InsertionCandidate) -> tuple[int, ...]:
    return tour[: cand.position] + (cand.node,) + tour[cand.position :]


def _pad_to_k(tours: list[tuple[int, ...]], k: int) -> AprioriSolution:
    return AprioriSolution(tuple(tours + [(0, 0)] * (k - len(tours))))


def _build_capacitated(instance: Instance, capacity: int | None, pick) -> AprioriSolution:
    """Vehicle-by-vehicle construction shared by the capacitated builders.

    `pick` selects one candidate from the per-cluster candidate lists of the
    current partial tour.
    """
    capacity = _cluster_capacity(instance, capacity)
    unvisited = set(range(instance.n_clusters))
    tours: list[tuple[int, ...]] = []
    tour: tuple[int, ...] = (0, 0)
    while unvisited:
        per_cluster = [
            sorted(
                _insertions_into(tour, len(tours), instance.clusters[ci].members, instance),
                key=InsertionCandidate.sort_key,
            )
            for ci in sorted(unvisited)
        ]
        chosen = pick(per_cluster)
        tour = _insert(tour, chosen)
        unvisited.discard(instance.cluster_of(chosen.node))
        if len(tour) - 2 >= capacity and unvisited:
            tours.append(tour)
            tour = (0, 0)
    tours.append(tour)
    return _pad_to_k(tours, instance.vehicles)


def solve_mmI(instance: Instance, capacity: int | None = None) -> AprioriSolution:
    """Min-min insertion: always take the globally cheapest insertion."""

    def pick(per_cluster):
        return min(
            (cands[0] for cands in per_cluster), key=InsertionCandidate.sort_key
        )

    return _build_capacitated(instance, capacity, pick)


def solve_MmI(instance: Instance, capacity: int | None = None) -> AprioriSolution:
    """Max-min insertion: place the cluster whose best insertion is worst."""

    def pick(per_cluster):
        best = [cands[0] for cands in per_cluster]
        return min(best, key=lambda c: (-c.value, c.node, c.tour_index, c.position))

    return _build_capacitated(instance, capacity, pick)


def solve_unbounded(instance: Instance) -> AprioriSolution:
    """Seed each vehicle with one cluster, then insert without capacity."""
    unvisited = set(range(instance.n_clusters))
    tours: list[tuple[int, ...]] = []
    for _ in range(instance.vehicles):
        if not unvisited:
            break
        members = [
            m for ci in sorted(unvisited) for m in instance.clusters[ci].members
        ]
        chosen = min(
            _insertions_into((0, 0), len(tours), members, instance),
            key=InsertionCandidate.sort_key,
        )
        tours.append(_insert((0, 0), chosen))
        unvisited.discard(instance.cluster_of(chosen.node))
    while unvisited:
        members = [
            m for ci in sorted(unvisited) for m in instance.clusters[ci].members
        ]
        chosen = min(
            (
                cand
                for ti, t in enumerate(tours)
                for cand in _insertions_into(t, ti, members, instance)
            ),
            key=InsertionCandidate.sort_key,
        )
        tours[chosen.tour_index] = _insert(tours[chosen.tour_index], chosen)
        unvisited.discard(instance.cluster_of(chosen.node))
    return _pad_to_k(tours, instance.vehicles)


# ---------------------------------------------------------------------------
# deterministic baselines
# ---------------------------------------------------------------------------


def clarke_wright(
    instance: Instance,
    capacity: float = math.inf,
    demands: Sequence[float] | None = None,
) -> list[tuple[int, ...]]:
    """Savings merges over out-and-back routes; probabilities ignored.

    Deterministic: savings sorted descending with (i, j) lexicographic
    ties, merges only while positive and capacity-feasible.
    """
    n = instance.n_nodes
    d = instance.distances
    if demands is None:
        demands = [0.0] + [1.0] * (n - 1)
    route_of = {i: i for i in range(1, n)}
    routes: dict[int, list[int]] = {i: [i] for i in range(1, n)}
    loads = {i: float(demands[i]) for i in range(1, n)}

    savings = sorted(
        ((d[0, i] + d[0, j] - d[i, j], i, j) for i in range(1, n) for j in range(i + 1, n)),
        key=lambda s: (-s[0], s[1], s[2]),
    )
    for s, i, j in savings:
        if s <= 0:
            break
        ri, rj = route_of[i], route_of[j]
        if ri == rj:
            continue  # would close a subtour
        a, b = routes[ri], routes[rj]
        if i not in (a[0], a[-1]) or j not in (b[0], b[-1]):
            continue  # only route endpoints can be joined
        if loads[ri] + loads[rj] > capacity:
            continue
        if a[-1] != i:
            a.reverse()
        if b[0] != j:
            b.reverse()
        merged = a + b
        routes[ri] = merged
        loads[ri] += loads[rj]
        del routes[rj], loads[rj]
        for v in merged:
            route_of[v] = ri

    tours = sorted(routes.values(), key=lambda r: r[0])
    return [(0, *r, 0) for r in tours]


def _tsp_exact(nodes: list[int], d: np.ndarray) -> tuple[tuple[int, ...], float]:
    """Optimal depot-rooted tour over a small node group."""
    if not nodes:
        return (0, 0), 0.0
    if len(nodes) > 12:
        raise ValidationError(f"group of {len(nodes)} too large for exact routing")
    best_perm, best_len = None, math.inf
    for perm in itertools.permutations(nodes):
        if perm > perm[::-1]:
            continue
        walk = (0, *perm, 0)
        length = sum(d[a, b] for a, b in zip(walk[:-1], walk[1:]))
        if length < best_len:
            best_perm, best_len = walk, length
    return best_perm, best_len


def sweep(
    instance: Instance,
    capacity: float = math.inf,
    demands: Sequence[float] | None = None,
) -> list[tuple[int, ...]]:
    """Polar-angle sweep: group customers by angle under capacity, route
    each group exactly, try every rotational offset forward and backward."""
    if instance.coordinates is None:
        raise ValidationError("sweep requires node coordinates")
    n = instance.n_nodes
    if n == 1:
        return []
    if demands is None:
        demands = [0.0] + [1.0] * (n - 1)
    xy = instance.coordinates
    angles = {
        v: math.atan2(xy[v, 1] - xy[0, 1], xy[v, 0] - xy[0, 0]) for v in range(1, n)
    }
    ordered = sorted(range(1, n), key=lambda v: (angles[v], v))
    d = instance.distances

    best_tours, best_len = None, math.inf
    for direction in (1, -1):
        seq = ordered if direction == 1 else ordered[::-1]
        for offset in range(len(seq)):
            rotation = seq[offset:] + seq[:offset]
            groups: list[list[int]] = [[]]
            load = 0.0
            for v in rotation:
                dv = float(demands[v])
                if groups[-1] and load + dv > capacity:
                    groups.append([])
                    load = 0.0
                groups[-1].append(v)
                load += dv
            tours, total = [], 0.0
            for g in groups:
                walk, length = _tsp_exact(g, d)
                tours.append(walk)
                total += length
            if total < best_len - 1e-12:
                best_tours, best_len = tours, total
    return best_tours
