"""Bounds on the optimal expected length and on the recourse variable.

Three upper bounds on the expected length saving (the recourse) are used by
the exact solver to cap its recourse variable:

* a per-node sum of worst-case detour savings (`ub_simple`),
* the tighter per-cluster version (`ub_clustered`), and
* a per-edge functional bound derived from a matrix B of lower bounds on
  the expected second-stage distance attributable to each edge
  (`b_matrix` / `theta_cap`).

A lower bound on the optimal expected length scales the deterministic
optimum by the smallest cluster probability (`lower_bound_scaled`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import FractionalPoint, Instance, edges


@dataclass(frozen=True, eq=False)
class ThetaBounds:
    """Container for the recourse caps of one instance."""

    u_simple: float
    u_clustered: float
    b: np.ndarray  # (n, n) symmetric


def lower_bound_scaled(instance: Instance, gvrp_opt_length: float) -> float:
    """min_k p_k times the deterministic optimum bounds the expected optimum."""
    p_min = min(c.probability for c in instance.clusters)
    return p_min * gvrp_opt_length


def _best_detour_saving(instance: Instance, t: int) -> float:
    """Largest saving (1-p_t)(d_it + d_tj - d_ij) over entry/exit pairs.

    Candidates i, j lie outside t's cluster; the depot is always allowed
    and may serve as both entry and exit (an out-and-back visit of t), so
    the pair (0, 0) is always in range. Each term is clamped at zero,
    which keeps the bound valid on near-metric data.
    """
    d = instance.distances
    p = instance.node_probabilities()
    ct = instance.cluster_of(t)
    candidates = [0] + [
        v for v in range(1, instance.n_nodes) if instance.cluster_of(v) != ct
    ]
    factor = 1.0 - p[t]
    if factor == 0.0:
        return 0.0
    best = 2.0 * d[0, t]  # enter and leave through the depot
    for ai, i in enumerate(candidates):
        for j in candidates[ai + 1 :]:
            saving = d[i, t] + d[t, j] - d[i, j]
            if saving > best:
                best = saving
    return factor * max(best, 0.0)


def ub_simple(instance: Instance) -> float:
    """Sum over nodes of the largest detour saving their absence can yield."""
    return float(
        sum(_best_detour_saving(instance, t) for t in range(1, instance.n_nodes))
    )


def ub_clustered(instance: Instance) -> float:
    """Per-cluster maximum instead of per-node sum; never looser than ub_simple."""
    total = 0.0
    for c in instance.clusters:
        total += max(_best_detour_saving(instance, t) for t in c.members)
    return float(total)


def b_matrix(instance: Instance) -> np.ndarray:
    """Per-edge lower bounds on the expected realized distance at that edge.

    For customer pairs in different clusters, absence of one endpoint forces
    a hop to some node outside both clusters; half of the shortest such hop
    is attributed to each incident edge. Depot edges reduce to p_j * d_0j,
    and intra-cluster pairs (which co-absent) keep the plain product term.
    """
    n = instance.n_nodes
    d = instance.distances
    p = instance.node_probabilities()
    b = np.zeros((n, n))
    cluster = [instance.cluster_of(v) for v in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            base = p[i] * p[j] * d[i, j]
            if i == 0 or cluster[i] == cluster[j]:
                b[i, j] = b[j, i] = base
                continue
            outside = [
                t
                for t in range(n)
                if t != i and t != j and cluster[t] != cluster[i] and cluster[t] != cluster[j]
            ]
            min_i = min(d[i, t] for t in outside)
            min_j = min(d[j, t] for t in outside)
            val = base + 0.5 * p[i] * (1 - p[j]) * min_i + 0.5 * (1 - p[i]) * p[j] * min_j
            b[i, j] = b[j, i] = val
    return b


def theta_cap(instance: Instance, point: FractionalPoint, b: np.ndarray | None = None) -> float:
    """Functional recourse cap sum_{i<j} (d_ij - b_ij) x_ij at a point."""
    if b is None:
        b = b_matrix(instance)
    d = instance.distances
    total = 0.0
    for k, (i, j) in enumerate(edges(instance.n_nodes)):
        x = point.x[k]
        if x:
            total += (d[i, j] - b[i, j]) * x
    return float(total)


def theta_bounds(instance: Instance) -> ThetaBounds:
    return ThetaBounds(
        u_simple=ub_simple(instance),
        u_clustered=ub_clustered(instance),
        b=b_matrix(instance),
    )
