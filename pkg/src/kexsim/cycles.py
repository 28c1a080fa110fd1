"""Enumeration of legal exchange cycles and altruist-initiated chains.

Every cycle or chain becomes one 0/1 decision variable in the clearing
solver, so the enumeration must be exhaustive, duplicate-free, and in a
deterministic canonical order.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Mapping

from .graph import CompatibilityGraph, Vertex


class ExchangeKind(str, Enum):
    CYCLE = "cycle"
    CHAIN = "chain"


@dataclass(frozen=True)
class ExchangeCycle:
    """A cyclic sequence of vertices, each receiving from its predecessor.

    Chains are stored as cycles through the altruist: the pair before the
    altruist closes the loop by "donating" to the dummy patient.  The
    sequence is canonical: it starts at the smallest vertex id.
    """

    vertices: tuple[Vertex, ...]
    kind: ExchangeKind
    pair_count: int

    def __post_init__(self) -> None:
        ids = [v.id for v in self.vertices]
        if len(set(ids)) != len(ids):
            raise ValueError("repeated vertex in exchange")
        if ids[0] != min(ids):
            raise ValueError("exchange not in canonical rotation")
        n_pairs = sum(1 for v in self.vertices if v.is_pair)
        n_altruists = len(self.vertices) - n_pairs
        if self.pair_count != n_pairs:
            raise ValueError("pair_count does not match vertices")
        if self.kind is ExchangeKind.CYCLE:
            if n_altruists != 0 or n_pairs < 2:
                raise ValueError("a cycle needs >= 2 pair vertices and no altruists")
        else:
            if n_altruists != 1 or n_pairs < 1:
                raise ValueError("a chain needs exactly one altruist and >= 1 pair")

    @classmethod
    def from_vertices(cls, vertices: tuple[Vertex, ...]) -> "ExchangeCycle":
        start = min(range(len(vertices)), key=lambda i: vertices[i].id)
        rotated = vertices[start:] + vertices[:start]
        n_pairs = sum(1 for v in rotated if v.is_pair)
        kind = ExchangeKind.CYCLE if n_pairs == len(rotated) else ExchangeKind.CHAIN
        return cls(rotated, kind, n_pairs)

    @cached_property
    def vertex_ids(self) -> tuple[int, ...]:
        return tuple(v.id for v in self.vertices)

    @cached_property
    def pair_profile_ids(self) -> tuple[int, ...]:
        """Profile ids of the patients served, one per pair vertex."""
        return tuple(v.profile.id for v in self.vertices if v.is_pair and v.profile)

    def is_legal_in(self, graph: CompatibilityGraph) -> bool:
        ids = self.vertex_ids
        return all(graph.has_edge(ids[i], ids[(i + 1) % len(ids)]) for i in range(len(ids)))


def enumerate_exchanges(
    graph: CompatibilityGraph, cycle_cap: int, chain_cap: int
) -> list[ExchangeCycle]:
    """All cycles with 2..cycle_cap pairs and chains with 1..chain_cap pairs.

    Depth-first search from each start vertex, extending only to vertices
    with a larger id, so each cyclic sequence is produced exactly once in
    its canonical rotation.  Output is sorted lexicographically by vertex
    ids.
    """
    if cycle_cap < 2:
        raise ValueError(f"cycle_cap must be >= 2, got {cycle_cap}")
    if chain_cap < 0:
        raise ValueError(f"chain_cap must be >= 0, got {chain_cap}")

    by_id = {v.id: v for v in graph.vertices}
    max_pairs_in_path = max(cycle_cap, chain_cap)
    found: list[ExchangeCycle] = []

    def extend(start_id: int, path: list[Vertex], on_path: set[int],
               n_pairs: int, has_altruist: bool) -> None:
        last = path[-1]
        if graph.has_edge(last.id, start_id):
            if has_altruist:
                if 1 <= n_pairs <= chain_cap:
                    found.append(ExchangeCycle.from_vertices(tuple(path)))
            elif 2 <= n_pairs <= cycle_cap:
                found.append(ExchangeCycle.from_vertices(tuple(path)))
        for nxt_id in graph.out_edges[last.id]:
            if nxt_id <= start_id or nxt_id in on_path:
                continue
            nxt = by_id[nxt_id]
            if nxt.is_pair:
                if has_altruist:
                    if n_pairs + 1 > chain_cap:
                        continue
                elif n_pairs + 1 > max_pairs_in_path:
                    continue
                path.append(nxt)
                on_path.add(nxt_id)
                extend(start_id, path, on_path, n_pairs + 1, has_altruist)
                on_path.discard(nxt_id)
                path.pop()
            else:
                if has_altruist or n_pairs > chain_cap:
                    continue
                path.append(nxt)
                on_path.add(nxt_id)
                extend(start_id, path, on_path, n_pairs, True)
                on_path.discard(nxt_id)
                path.pop()

    for start in sorted(graph.vertices, key=lambda v: v.id):
        if not start.is_pair and chain_cap == 0:
            continue
        extend(
            start.id,
            [start],
            {start.id},
            1 if start.is_pair else 0,
            not start.is_pair,
        )
    found.sort(key=lambda c: c.vertex_ids)
    return found


def cycle_value(cycle: ExchangeCycle, weight_of_profile: Mapping[int, float]) -> float:
    """Total prioritization weight of the patients served by this exchange.

    Each vertex receives from its predecessor, so the value is the sum of
    the recipients' profile weights; an altruist's dummy patient adds 0.
    """
    return sum(weight_of_profile[pid] for pid in cycle.pair_profile_ids)


def exchanges_through(
    base: Vertex,
    vertices: Mapping[int, Vertex],
    out_adj: Mapping[int, set[int]],
    cycle_cap: int,
    chain_cap: int,
) -> list[ExchangeCycle]:
    """All legal cycles and chains that pass through `base`.

    Used to keep a cycle registry current as vertices arrive: every exchange
    created by admitting a vertex must contain it.  Works on raw adjacency
    sets rather than a frozen graph.
    """
    found: list[ExchangeCycle] = []
    max_pairs_in_path = max(cycle_cap, chain_cap)
    base_pairs = 1 if base.is_pair else 0
    if not base.is_pair and chain_cap == 0:
        return found

    def walk(path: list[Vertex], on_path: set[int], n_pairs: int, has_altruist: bool) -> None:
        last = path[-1]
        if base.id in out_adj.get(last.id, ()) and len(path) > 1:
            if has_altruist:
                if 1 <= n_pairs <= chain_cap:
                    found.append(ExchangeCycle.from_vertices(tuple(path)))
            elif 2 <= n_pairs <= cycle_cap:
                found.append(ExchangeCycle.from_vertices(tuple(path)))
        for nxt_id in out_adj.get(last.id, ()):
            if nxt_id in on_path:
                continue
            nxt = vertices[nxt_id]
            if nxt.is_pair:
                if has_altruist:
                    if n_pairs + 1 > chain_cap:
                        continue
                elif n_pairs + 1 > max_pairs_in_path:
                    continue
                path.append(nxt)
                on_path.add(nxt_id)
                walk(path, on_path, n_pairs + 1, has_altruist)
                on_path.discard(nxt_id)
                path.pop()
            else:
                if has_altruist or n_pairs > chain_cap:
                    continue
                path.append(nxt)
                on_path.add(nxt_id)
                walk(path, on_path, n_pairs, True)
                on_path.discard(nxt_id)
                path.pop()

    walk([base], {base.id}, base_pairs, not base.is_pair)
    return found
