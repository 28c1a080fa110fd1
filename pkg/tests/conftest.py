"""Shared fixtures: small canonical instances and brute-force oracles.

The oracles deliberately avoid the production search/DP machinery: they
enumerate subsets or orderings directly so solver results can be checked
against an independent computation.
"""

from __future__ import annotations

import random
from itertools import combinations, permutations

import pytest

from kexsim.graph import (
    BloodType,
    CompatibilityGraph,
    Vertex,
    altruist,
    blood_compatible,
    derive_edges,
    pair,
)

A, B, AB, O = BloodType.A, BloodType.B, BloodType.AB, BloodType.O


@pytest.fixture
def tie_triangle() -> CompatibilityGraph:
    """Three pairs forming two 2-cycles that share the middle vertex.

    Only one 2-cycle can be selected, so two maximum-cardinality matchings
    tie and the middle pair is matched either way.
    """
    vertices = [
        pair(1, donor=A, patient=B, profile=1),
        pair(2, donor=B, patient=A, profile=5),
        pair(3, donor=A, patient=B, profile=8),
    ]
    return derive_edges(vertices, 0.0, random.Random(0))


@pytest.fixture
def short_vs_long() -> CompatibilityGraph:
    """A 2-cycle and a 3-cycle competing for the same hub vertex.

    The 3-cycle matches more patients, so it must win no matter what the
    profile weights say.
    """
    vertices = [
        pair(1, donor=AB, patient=O, profile=2),
        pair(2, donor=O, patient=AB, profile=1),
        pair(3, donor=AB, patient=A, profile=3),
        pair(4, donor=A, patient=O, profile=4),
    ]
    edges = [(1, 2), (2, 1), (3, 2), (2, 4), (4, 3)]
    return CompatibilityGraph(vertices, edges)


def random_pool(
    rng: random.Random,
    n_pairs: int,
    n_altruists: int = 0,
    crossmatch: float = 0.3,
) -> CompatibilityGraph:
    """A random instance with uniformly drawn blood types and profiles."""
    bloods = list(BloodType)
    vertices: list[Vertex] = []
    for i in range(n_pairs):
        vertices.append(
            pair(i, donor=rng.choice(bloods), patient=rng.choice(bloods), profile=rng.randint(1, 8))
        )
    for j in range(n_altruists):
        vertices.append(altruist(n_pairs + j, donor=rng.choice(bloods)))
    return derive_edges(vertices, crossmatch, rng)


def complete_pair_graph(n: int) -> CompatibilityGraph:
    """All n(n-1) directed edges: identical blood types, zero crossmatch."""
    vertices = [pair(i, donor=A, patient=A, profile=1 + i % 8) for i in range(n)]
    return derive_edges(vertices, 0.0, random.Random(0))


# --- oracles ----------------------------------------------------------------

def oracle_enumerate(graph: CompatibilityGraph, cycle_cap: int, chain_cap: int) -> set[tuple[int, ...]]:
    """Exchange enumeration by checking every subset and cyclic ordering."""
    found: set[tuple[int, ...]] = set()
    ids = [v.id for v in graph.vertices]
    max_size = max(cycle_cap, chain_cap + 1)
    for size in range(2, max_size + 1):
        for subset in combinations(ids, size):
            altruists = [i for i in subset if not graph.vertex(i).is_pair]
            n_pairs = size - len(altruists)
            if len(altruists) == 0:
                if not 2 <= n_pairs <= cycle_cap:
                    continue
            elif len(altruists) == 1:
                if not 1 <= n_pairs <= chain_cap:
                    continue
            else:
                continue
            first, rest = subset[0], subset[1:]
            for order in permutations(rest):
                seq = (first,) + order
                if all(graph.has_edge(seq[i], seq[(i + 1) % size]) for i in range(size)):
                    found.add(seq)
    return found


def oracle_max_cardinality(cycles) -> int:
    """Exhaustive maximum number of pairs over vertex-disjoint cycle subsets."""

    def best(idx: int, used: frozenset[int]) -> int:
        if idx == len(cycles):
            return 0
        skip = best(idx + 1, used)
        ids = set(cycles[idx].vertex_ids)
        if used & ids:
            return skip
        take = cycles[idx].pair_count + best(idx + 1, used | ids)
        return max(take, skip)

    return best(0, frozenset())


def oracle_best_weight(cycles, values: list[float], floor: int) -> float | None:
    """Exhaustive maximum total value among disjoint subsets with >= floor pairs."""
    best: float | None = None

    def walk(idx: int, used: frozenset[int], pairs: int, value: float) -> None:
        nonlocal best
        if pairs >= floor and (best is None or value > best):
            best = value
        if idx == len(cycles):
            return
        walk(idx + 1, used, pairs, value)
        ids = set(cycles[idx].vertex_ids)
        if not used & ids:
            walk(idx + 1, used | ids, pairs + cycles[idx].pair_count, value + values[idx])

    walk(0, frozenset(), 0, 0.0)
    return best


def assert_graph_invariants(graph: CompatibilityGraph) -> None:
    for u, v in graph.edges:
        assert u != v
        target = graph.vertex(v)
        if target.is_pair:
            assert blood_compatible(graph.vertex(u).donor_blood, target.patient_blood)
        else:
            assert graph.vertex(u).is_pair
    for p in graph.pair_vertices:
        for a in graph.altruist_vertices:
            assert graph.has_edge(p.id, a.id)
