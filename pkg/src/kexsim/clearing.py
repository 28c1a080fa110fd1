"""Exact two-stage clearing of a compatibility graph.

Stage 1 finds the maximum number of patients that can be matched with
vertex-disjoint cycles and chains.  Stage 2 re-optimizes total profile
weight subject to matching at least that many patients, so prioritization
only ever breaks ties between full-size solutions.

Both stages run the same branch-and-bound over cycle variables.  Candidate
selections are explored in lexicographic order of the canonical cycle list
and the incumbent is replaced only on strict improvement, which pins the
otherwise arbitrary choice among optimal matchings.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

from .cycles import ExchangeCycle, cycle_value, enumerate_exchanges
from .graph import PROFILE_IDS, CompatibilityGraph


class ClearingMode(str, Enum):
    STANDARD = "standard"
    PRIORITIZED = "prioritized"


class InfeasibleFloorError(RuntimeError):
    """The cardinality floor cannot be met; indicates a caller bug."""


def unit_weights() -> dict[int, float]:
    return {pid: 1.0 for pid in PROFILE_IDS}


@dataclass(frozen=True)
class Matching:
    """A set of vertex-disjoint cycles and chains."""

    cycles: tuple[ExchangeCycle, ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for c in self.cycles:
            for vid in c.vertex_ids:
                if vid in seen:
                    raise ValueError(f"vertex {vid} appears in two selected cycles")
                seen.add(vid)

    @property
    def matched_pair_ids(self) -> frozenset[int]:
        return frozenset(v.id for c in self.cycles for v in c.vertices if v.is_pair)

    @property
    def pair_count(self) -> int:
        return sum(c.pair_count for c in self.cycles)

    def value(self, weights: Mapping[int, float]) -> float:
        return sum(cycle_value(c, weights) for c in self.cycles)


@dataclass(frozen=True)
class ClearingResult:
    standard: Matching
    prioritized: Matching
    max_cardinality: int
    weighted_value: float

    def to_dict(self) -> dict:
        """Wire format: {Q, weighted_value, cycles, matched_pairs}."""
        return {
            "Q": self.max_cardinality,
            "weighted_value": self.weighted_value,
            "cycles": [list(c.vertex_ids) for c in self.prioritized.cycles],
            "matched_pairs": sorted(self.prioritized.matched_pair_ids),
        }


class _CycleSet:
    """Bitmask view of the cycle list used by the search."""

    def __init__(self, cycles: Sequence[ExchangeCycle], weights: Mapping[int, float] | None):
        vertex_ids = sorted({vid for c in cycles for vid in c.vertex_ids})
        slot = {vid: i for i, vid in enumerate(vertex_ids)}
        self.cycles = list(cycles)
        self.conflict_mask: list[int] = []
        self.pair_mask: list[int] = []
        self.pair_count: list[int] = []
        self.value: list[float] = []
        self.slot_weight: dict[int, float] = {}
        for c in cycles:
            cmask = 0
            pmask = 0
            for v in c.vertices:
                bit = 1 << slot[v.id]
                cmask |= bit
                if v.is_pair:
                    pmask |= bit
                    if weights is not None:
                        assert v.profile is not None
                        self.slot_weight[slot[v.id]] = weights[v.profile.id]
            self.conflict_mask.append(cmask)
            self.pair_mask.append(pmask)
            self.pair_count.append(c.pair_count)
            self.value.append(cycle_value(c, weights) if weights is not None else 0.0)

    def positive_weight_of(self, mask: int) -> float:
        total = 0.0
        while mask:
            low = mask & -mask
            w = self.slot_weight.get(low.bit_length() - 1, 0.0)
            if w > 0.0:
                total += w
            mask ^= low
        return total

    def components(self) -> list[list[int]]:
        """Cycle indices grouped by vertex-sharing, each group sorted.

        Groups are independent subproblems: no vertex appears in two groups,
        so disjoint selections compose freely across them.
        """
        parent: dict[int, int] = {}

        def find(x: int) -> int:
            root = x
            while parent[root] != root:
                root = parent[root]
            while parent[x] != root:
                parent[x], x = root, parent[x]
            return root

        for mask in self.conflict_mask:
            bits = []
            m = mask
            while m:
                low = m & -m
                bits.append(low.bit_length() - 1)
                m ^= low
            for b in bits:
                parent.setdefault(b, b)
            for b in bits[1:]:
                parent[find(bits[0])] = find(b)
        groups: dict[int, list[int]] = {}
        for i, mask in enumerate(self.conflict_mask):
            root = find((mask & -mask).bit_length() - 1)
            groups.setdefault(root, []).append(i)
        return sorted(groups.values())


def _solve_component(
    cs: _CycleSet, component: list[int], weighted: bool
) -> tuple[list[int], int, float]:
    """Best (pairs, value) selection within one component, with its witness.

    Memoized include/exclude recursion over the component's cycles in
    canonical order; the state is (position, used vertices that still matter
    for the suffix), so search paths that strand the same vertices merge.
    The objective is lexicographic: pairs first, then total weight.  On
    exact ties the including branch wins, which pins the returned selection
    to the optimum using the earliest-listed cycles.
    """
    n = len(component)
    conflict = [cs.conflict_mask[i] for i in component]
    pairs = [cs.pair_count[i] for i in component]
    values = [cs.value[i] for i in component] if weighted else [0.0] * n
    suffix_rel = [0] * (n + 1)
    for i in range(n - 1, -1, -1):
        suffix_rel[i] = suffix_rel[i + 1] | conflict[i]
    memo: dict[tuple[int, int], tuple[int, float]] = {}

    limit = sys.getrecursionlimit()
    if limit < 2 * n + 100:
        sys.setrecursionlimit(2 * n + 100)

    def best_from(pos: int, used: int) -> tuple[int, float]:
        while pos < n and conflict[pos] & used:
            pos += 1
        if pos == n:
            return (0, 0.0)
        key = (pos, used & suffix_rel[pos])
        hit = memo.get(key)
        if hit is not None:
            return hit
        with_pos = best_from(pos + 1, used | conflict[pos])
        incl = (with_pos[0] + pairs[pos], with_pos[1] + values[pos])
        excl = best_from(pos + 1, used)
        best = incl if incl >= excl else excl
        memo[key] = best
        return best

    total_pairs, total_value = best_from(0, 0)

    selection: list[int] = []
    pos, used = 0, 0
    while True:
        while pos < n and conflict[pos] & used:
            pos += 1
        if pos == n:
            break
        with_pos = best_from(pos + 1, used | conflict[pos])
        incl = (with_pos[0] + pairs[pos], with_pos[1] + values[pos])
        if incl >= best_from(pos + 1, used):
            selection.append(component[pos])
            used |= conflict[pos]
        pos += 1
    return selection, total_pairs, total_value


def solve_max_cardinality(cycles: Sequence[ExchangeCycle]) -> tuple[Matching, int]:
    """Vertex-disjoint selection maximizing the number of matched patients.

    The cycle set splits into vertex-sharing components that are optimized
    independently.  Ties between optima are broken deterministically toward
    the selection using the earliest cycles in canonical order.
    """
    cs = _CycleSet(cycles, weights=None)
    selection: list[int] = []
    total = 0
    for component in cs.components():
        sel, pairs, _ = _solve_component(cs, component, weighted=False)
        selection.extend(sel)
        total += pairs
    selection.sort()
    return Matching(tuple(cs.cycles[i] for i in selection)), total


def _best_weight_in(
    cs: _CycleSet, component: list[int], floor: int, max_pairs: int, w_max: float
) -> tuple[tuple[int, ...], int] | None:
    """Lex-first maximum-value selection with >= floor pairs, or None.

    `max_pairs` is the true maximum cardinality within the searched cycles,
    so a partial selection with k pairs can gain at most (max_pairs - k)
    more patients; that slack times the largest positive pair weight caps
    the remaining value, which prunes hard when weights are nearly flat.
    """
    conflict_mask = cs.conflict_mask
    pair_mask = cs.pair_mask
    pair_count = cs.pair_count
    value = cs.value
    best_value = float("-inf")
    best: tuple[tuple[int, ...], int] | None = None

    def search(eligible: list[int], cur_pairs: int, cur_value: float, chosen: list[int]) -> None:
        nonlocal best_value, best
        if cur_pairs >= floor and cur_value > best_value:
            best_value = cur_value
            best = (tuple(chosen), cur_pairs)
        if not eligible:
            return
        n = len(eligible)
        suffix_union = [0] * (n + 1)
        suffix_gain = [0.0] * (n + 1)
        acc_mask = 0
        acc_gain = 0.0
        for i in range(n - 1, -1, -1):
            ci = eligible[i]
            acc_mask |= pair_mask[ci]
            gain = value[ci]
            if gain > 0.0:
                acc_gain += gain
            suffix_union[i] = acc_mask
            suffix_gain[i] = acc_gain
        if cur_pairs + acc_mask.bit_count() < floor:
            return
        slack_cap = (max_pairs - cur_pairs) * w_max
        if cur_value + min(acc_gain, slack_cap, cs.positive_weight_of(acc_mask)) <= best_value:
            return
        for pos, ci in enumerate(eligible):
            if cur_pairs + suffix_union[pos].bit_count() < floor:
                break
            if cur_value + min(suffix_gain[pos], slack_cap) <= best_value:
                break
            cmask = conflict_mask[ci]
            rest = [cj for cj in eligible[pos + 1 :] if not conflict_mask[cj] & cmask]
            chosen.append(ci)
            search(rest, cur_pairs + pair_count[ci], cur_value + value[ci], chosen)
            chosen.pop()

    search(component, 0, 0.0, [])
    return best


def solve_prioritized(
    cycles: Sequence[ExchangeCycle],
    weights: Mapping[int, float],
    floor: int,
) -> Matching:
    """Maximize total profile weight among selections matching >= floor patients.

    `floor` is the stage-1 cardinality for the same cycles.  When it equals
    the true maximum (the normal case), selections meeting the floor are
    exactly the maximum-cardinality ones, so the lexicographic
    (pairs, weight) optimum per component answers the question.  A floor
    strictly below the maximum falls back to a bounded search over the whole
    cycle set.
    """
    cs = _CycleSet(cycles, weights)
    components = cs.components()
    solved = [_solve_component(cs, comp, weighted=True) for comp in components]
    max_pairs = sum(pairs for _, pairs, _ in solved)
    if max_pairs < floor:
        raise InfeasibleFloorError(f"no vertex-disjoint selection matches {floor} patients")
    if max_pairs == floor:
        selection = sorted(i for sel, _, _ in solved for i in sel)
        return Matching(tuple(cs.cycles[i] for i in selection))
    w_max = max((w for w in cs.slot_weight.values() if w > 0), default=0.0)
    found = _best_weight_in(cs, list(range(len(cs.cycles))), floor, max_pairs, w_max)
    assert found is not None
    return Matching(tuple(cs.cycles[i] for i in found[0]))


def clear(
    graph: CompatibilityGraph,
    cycle_cap: int = 3,
    chain_cap: int = 0,
    weights: Mapping[int, float] | None = None,
    mode: ClearingMode = ClearingMode.STANDARD,
) -> ClearingResult:
    """Enumerate exchanges and run the one- or two-stage optimization."""
    if weights is None:
        weights = unit_weights()
    cycles = enumerate_exchanges(graph, cycle_cap, chain_cap)
    standard, q = solve_max_cardinality(cycles)
    if mode is ClearingMode.PRIORITIZED:
        prioritized = solve_prioritized(cycles, weights, q)
    else:
        prioritized = standard
    return ClearingResult(
        standard=standard,
        prioritized=prioritized,
        max_cardinality=q,
        weighted_value=prioritized.value(weights),
    )
