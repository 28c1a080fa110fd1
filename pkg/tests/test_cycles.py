import random

import pytest

from kexsim.cycles import (
    ExchangeCycle,
    ExchangeKind,
    cycle_value,
    enumerate_exchanges,
    exchanges_through,
)
from kexsim.graph import CompatibilityGraph, altruist, derive_edges, pair
from kexsim.weights import survey_direct_scores

from conftest import A, AB, B, O, complete_pair_graph, oracle_enumerate, random_pool


def ids(cycles):
    return [c.vertex_ids for c in cycles]


def test_two_overlapping_two_cycles(tie_triangle):
    assert ids(enumerate_exchanges(tie_triangle, 3, 0)) == [(1, 2), (2, 3)]


def test_two_cycle_and_three_cycle(short_vs_long):
    assert ids(enumerate_exchanges(short_vs_long, 3, 0)) == [(1, 2), (2, 4, 3)]


def test_empty_graph():
    graph = CompatibilityGraph([], [])
    assert enumerate_exchanges(graph, 3, 2) == []


def test_cycle_cap_below_two_rejected(tie_triangle):
    with pytest.raises(ValueError):
        enumerate_exchanges(tie_triangle, 1, 0)
    with pytest.raises(ValueError):
        enumerate_exchanges(tie_triangle, 3, -1)


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_complete_graph_counts(n):
    graph = complete_pair_graph(n)
    two_only = enumerate_exchanges(graph, 2, 0)
    assert len(two_only) == n * (n - 1) // 2
    with_three = enumerate_exchanges(graph, 3, 0)
    assert len(with_three) == n * (n - 1) // 2 + n * (n - 1) * (n - 2) // 3


def test_enumeration_matches_subset_oracle():
    rng = random.Random(2024)
    for trial in range(40):
        graph = random_pool(rng, n_pairs=rng.randint(2, 8), n_altruists=rng.randint(0, 2),
                            crossmatch=rng.random() * 0.6)
        cycle_cap = rng.randint(2, 3)
        chain_cap = rng.randint(0, 2)
        got = {c.vertex_ids for c in enumerate_exchanges(graph, cycle_cap, chain_cap)}
        assert got == oracle_enumerate(graph, cycle_cap, chain_cap), f"trial {trial}"


def test_enumeration_is_deterministic_and_canonical():
    rng = random.Random(7)
    graph = random_pool(rng, n_pairs=8, crossmatch=0.3)
    first = enumerate_exchanges(graph, 3, 0)
    second = enumerate_exchanges(graph, 3, 0)
    assert ids(first) == ids(second)
    assert ids(first) == sorted(ids(first))
    for c in first:
        assert c.vertex_ids[0] == min(c.vertex_ids)
        assert c.is_legal_in(graph)


def test_relabeling_round_trip():
    rng = random.Random(15)
    graph = random_pool(rng, n_pairs=7, crossmatch=0.3)
    baseline = {c.vertex_ids for c in enumerate_exchanges(graph, 3, 0)}
    # relabel ids by an order-reversing map, enumerate, and map back
    n = len(graph.vertices)
    fwd = {v.id: n - 1 - v.id for v in graph.vertices}
    back = {b: a for a, b in fwd.items()}
    relabeled = CompatibilityGraph(
        [pair(fwd[v.id], v.donor_blood, v.patient_blood, v.profile) for v in graph.vertices],
        [(fwd[u], fwd[w]) for u, w in graph.edges],
    )
    restored = set()
    for c in enumerate_exchanges(relabeled, 3, 0):
        orig = tuple(back[i] for i in c.vertex_ids)
        start = orig.index(min(orig))
        restored.add(orig[start:] + orig[:start])
    assert restored == baseline


def test_chain_structure():
    vertices = [
        altruist(0, donor=O),
        pair(1, donor=A, patient=A, profile=1),
        pair(2, donor=B, patient=A, profile=2),
    ]
    graph = derive_edges(vertices, 0.0, random.Random(0))
    chains = enumerate_exchanges(graph, 3, 2)
    got = {(c.vertex_ids, c.kind, c.pair_count) for c in chains}
    assert got == {
        ((0, 1), ExchangeKind.CHAIN, 1),
        ((0, 2), ExchangeKind.CHAIN, 1),
        ((0, 1, 2), ExchangeKind.CHAIN, 2),
    }
    # chain cap zero keeps altruists out entirely
    assert enumerate_exchanges(graph, 3, 0) == []
    # cap one drops the longer chain
    assert {c.vertex_ids for c in enumerate_exchanges(graph, 3, 1)} == {(0, 1), (0, 2)}


def test_exchange_type_invariants():
    p1 = pair(1, donor=A, patient=A, profile=1)
    p2 = pair(2, donor=A, patient=A, profile=2)
    with pytest.raises(ValueError):
        ExchangeCycle((p1, p2), ExchangeKind.CYCLE, 1)  # wrong pair count
    with pytest.raises(ValueError):
        ExchangeCycle((p2, p1), ExchangeKind.CYCLE, 2)  # not canonical rotation
    with pytest.raises(ValueError):
        ExchangeCycle((p1,), ExchangeKind.CYCLE, 1)  # too short
    with pytest.raises(ValueError):
        ExchangeCycle((p1, p1), ExchangeKind.CYCLE, 2)  # repeated vertex
    chain = ExchangeCycle.from_vertices((altruist(0, donor=O), p1))
    assert chain.kind is ExchangeKind.CHAIN and chain.pair_count == 1


def test_cycle_value_sums_recipient_weights():
    scores = survey_direct_scores()
    c = ExchangeCycle.from_vertices((
        pair(1, donor=A, patient=B, profile=1),
        pair(2, donor=B, patient=A, profile=1),
    ))
    assert cycle_value(c, scores) == pytest.approx(2.0)
    assert cycle_value(c, {pid: 0.0 for pid in range(1, 9)}) == 0.0
    chain = ExchangeCycle.from_vertices((
        altruist(0, donor=O),
        pair(1, donor=A, patient=B, profile=3),
    ))
    assert cycle_value(chain, scores) == pytest.approx(0.236280167)


def test_exchanges_through_matches_full_enumeration():
    rng = random.Random(99)
    for _ in range(20):
        graph = random_pool(rng, n_pairs=rng.randint(2, 7), n_altruists=rng.randint(0, 1),
                            crossmatch=0.3)
        vertices = {v.id: v for v in graph.vertices}
        out_adj = {v.id: set(graph.out_edges[v.id]) for v in graph.vertices}
        full = {c.vertex_ids for c in enumerate_exchanges(graph, 3, 1)}
        for v in graph.vertices:
            through = {c.vertex_ids for c in exchanges_through(v, vertices, out_adj, 3, 1)}
            assert through == {key for key in full if v.id in key}
