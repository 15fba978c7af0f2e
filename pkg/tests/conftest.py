"""Shared builders for small test instances."""

from __future__ import annotations

import numpy as np
import pytest

from pgvrp.model import Cluster, Instance


def explicit_instance(dist, clusters, vehicles=1, name=""):
    """Instance from a dense symmetric matrix and (prob, members) pairs."""
    d = np.array(dist, dtype=float)
    cs = tuple(
        Cluster(k, prob, tuple(members))
        for k, (prob, members) in enumerate(clusters, start=1)
    )
    return Instance(
        n_nodes=d.shape[0],
        distances=d,
        clusters=cs,
        vehicles=vehicles,
        metric_kind="explicit",
        name=name,
    )


def euclid_instance(coords, clusters, vehicles=1, name=""):
    xy = np.array(coords, dtype=float)
    diff = xy[:, None, :] - xy[None, :, :]
    d = np.sqrt((diff**2).sum(axis=2))
    cs = tuple(
        Cluster(k, prob, tuple(members))
        for k, (prob, members) in enumerate(clusters, start=1)
    )
    return Instance(
        n_nodes=xy.shape[0],
        distances=d,
        clusters=cs,
        vehicles=vehicles,
        metric_kind="euclid",
        coordinates=xy,
        name=name,
    )


def random_euclid_instance(rng, n_nodes, n_clusters, vehicles, p_range=(0.1, 0.9), box=100.0):
    """Random instance in a square box; depot at the center; clusters are a
    shuffled contiguous partition of the customers."""
    coords = np.vstack(
        [[box / 2.0, box / 2.0], rng.uniform(0.0, box, size=(n_nodes - 1, 2))]
    )
    ids = list(range(1, n_nodes))
    rng.shuffle(ids)
    base, extra = divmod(n_nodes - 1, n_clusters)
    clusters, at = [], 0
    for k in range(n_clusters):
        size = base + (1 if k < extra else 0)
        members = ids[at : at + size]
        at += size
        clusters.append((float(rng.uniform(*p_range)), members))
    return euclid_instance(coords, clusters, vehicles=vehicles)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


def triangle_345(p1=1.0, p2=1.0, vehicles=1):
    """3-4-5 right triangle: depot at the right angle."""
    return euclid_instance(
        [(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)],
        [(p1, [1]), (p2, [2])],
        vehicles=vehicles,
    )
