"""Daily matching simulation over a multi-year horizon.

Each day: pairs arrive, some waiting pairs depart, matches formed the
previous day either execute or fall through, and the clearing engine is run
on the remaining pool.  Selected exchanges sit pending for one day and are
invisible to departures and to the next day's matcher.

Randomness is split by purpose so that runs differing only in the matching
policy see identical arrivals, attributes, crossmatch outcomes, departure
times, and execution luck: arrival and attribute draws come from dedicated
generators whose consumption never depends on pool state, while crossmatch,
departure, and execution draws are keyed by (vertex ids, day) through a
counter-based hash rather than consumed from a shared stream.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Mapping

import numpy as np

from .clearing import ClearingMode, solve_max_cardinality, solve_prioritized
from .cycles import ExchangeCycle, exchanges_through
from .graph import (
    BloodClass,
    BloodType,
    CompatibilityGraph,
    Vertex,
    altruist,
    blood_compatible,
    classify_pair,
    pair,
)
from .weights import WeightVector, unit_weight_vector

US_BLOOD_TYPE_DISTRIBUTION: dict[BloodType, float] = {
    BloodType.O: 0.44,
    BloodType.A: 0.42,
    BloodType.B: 0.10,
    BloodType.AB: 0.04,
}

UNIFORM_PROFILE_DISTRIBUTION: dict[int, float] = {pid: 1.0 / 8.0 for pid in range(1, 9)}


def _validate_distribution(dist: Mapping, name: str) -> None:
    total = sum(dist.values())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"{name} must sum to 1, got {total}")
    if any(p < 0 or p > 1 for p in dist.values()):
        raise ValueError(f"{name} entries must be probabilities")


@dataclass(frozen=True)
class SimulationConfig:
    days: int = 1825
    arrival_rate: float = 1.0
    departure_prob: float = 0.005
    execution_prob: float = 0.5
    crossmatch_positive_prob: float = 0.10
    cycle_cap: int = 3
    chain_cap: int = 0
    altruist_rate: float = 0.0
    blood_type_distribution: Mapping[BloodType, float] | None = None
    profile_distribution: Mapping[int, float] | None = None
    seed: int = 0
    weights: WeightVector | None = None
    mode: ClearingMode = ClearingMode.STANDARD

    def __post_init__(self) -> None:
        if self.blood_type_distribution is None:
            object.__setattr__(self, "blood_type_distribution", dict(US_BLOOD_TYPE_DISTRIBUTION))
        if self.profile_distribution is None:
            object.__setattr__(self, "profile_distribution", dict(UNIFORM_PROFILE_DISTRIBUTION))
        if self.weights is None:
            object.__setattr__(self, "weights", unit_weight_vector())
        if self.days < 0:
            raise ValueError("days must be >= 0")
        for prob_name in ("departure_prob", "execution_prob", "crossmatch_positive_prob"):
            p = getattr(self, prob_name)
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{prob_name} must be in [0, 1]")
        if self.arrival_rate < 0 or self.altruist_rate < 0:
            raise ValueError("arrival rates must be >= 0")
        _validate_distribution(self.blood_type_distribution, "blood_type_distribution")
        _validate_distribution(self.profile_distribution, "profile_distribution")
        bt_items = tuple(self.blood_type_distribution.items())
        object.__setattr__(self, "_blood_choices", tuple(k for k, _ in bt_items))
        object.__setattr__(self, "_blood_cum", tuple(accumulate(p for _, p in bt_items)))
        pr_items = tuple(sorted(self.profile_distribution.items()))
        object.__setattr__(self, "_profile_choices", tuple(k for k, _ in pr_items))
        object.__setattr__(self, "_profile_cum", tuple(accumulate(p for _, p in pr_items)))


def config_from_dict(data: Mapping) -> SimulationConfig:
    """Build a SimulationConfig from its JSON representation."""
    kwargs: dict = {}
    plain = (
        "days", "arrival_rate", "departure_prob", "execution_prob",
        "crossmatch_positive_prob", "cycle_cap", "chain_cap", "altruist_rate", "seed",
    )
    for name in plain:
        if name in data:
            kwargs[name] = data[name]
    if "blood_type_distribution" in data:
        kwargs["blood_type_distribution"] = {
            BloodType(k): float(v) for k, v in data["blood_type_distribution"].items()
        }
    if "profile_distribution" in data:
        kwargs["profile_distribution"] = {
            int(k): float(v) for k, v in data["profile_distribution"].items()
        }
    if "mode" in data:
        kwargs["mode"] = ClearingMode(data["mode"])
    if "weights" in data:
        from .weights import weight_vector_from_spec

        kwargs["weights"] = weight_vector_from_spec(data["weights"])
    return SimulationConfig(**kwargs)


# --- purpose-split randomness -------------------------------------------------

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


def _event_uniform(*coords: int) -> float:
    """Deterministic uniform in [0, 1) keyed by integer coordinates."""
    h = 0
    for c in coords:
        h = _splitmix64(h ^ (c & _MASK64))
    return h / 2.0**64


@dataclass
class RandomStreams:
    """One independently seeded source per purpose."""

    arrivals: np.random.Generator
    attributes: np.random.Generator
    crossmatch_salt: int
    departure_salt: int
    execution_salt: int

    @classmethod
    def from_seed(cls, seed: int) -> "RandomStreams":
        children = np.random.SeedSequence(seed).spawn(5)
        salts = [int(c.generate_state(2, np.uint64)[0]) for c in children[2:]]
        return cls(
            arrivals=np.random.default_rng(children[0]),
            attributes=np.random.default_rng(children[1]),
            crossmatch_salt=salts[0],
            departure_salt=salts[1],
            execution_salt=salts[2],
        )


def _draw(rng: np.random.Generator, choices: tuple, cum: tuple[float, ...]):
    return choices[min(bisect_left(cum, rng.random()), len(choices) - 1)]


def generate_pair(rng: np.random.Generator, config: SimulationConfig, vertex_id: int = 0) -> Vertex:
    """Sample an incompatible patient-donor pair.

    Pairs whose donor is blood compatible and crossmatch negative would
    transplant directly, so they are rejected and redrawn; this skews the
    entering population toward hard-to-match patients.
    """
    while True:
        patient = _draw(rng, config._blood_choices, config._blood_cum)  # type: ignore[attr-defined]
        donor = _draw(rng, config._blood_choices, config._blood_cum)  # type: ignore[attr-defined]
        profile = _draw(rng, config._profile_choices, config._profile_cum)  # type: ignore[attr-defined]
        if blood_compatible(donor, patient) and rng.random() >= config.crossmatch_positive_prob:
            continue
        return pair(vertex_id, donor, patient, profile)


def generate_altruist(rng: np.random.Generator, config: SimulationConfig, vertex_id: int = 0) -> Vertex:
    return altruist(vertex_id, _draw(rng, config._blood_choices, config._blood_cum))  # type: ignore[attr-defined]


# --- state and metrics ---------------------------------------------------------

@dataclass
class PendingExchange:
    cycle: ExchangeCycle
    day_formed: int


@dataclass
class CellCounts:
    entered: int = 0
    matched: int = 0
    departed: int = 0
    remaining: int = 0


@dataclass(frozen=True)
class DayTrace:
    day: int
    pool_size: int
    matched_today: int


@dataclass
class SimulationState:
    """Mutable pool state plus an incrementally maintained cycle registry.

    The registry holds every legal exchange among vertices still in the
    system (available or pending); `active` is the subset whose vertices are
    all available today.  Admitting a vertex adds only the exchanges through
    it; evicting one drops its exchanges.
    """

    day: int = 0
    next_id: int = 0
    vertices: dict[int, Vertex] = field(default_factory=dict)
    available: set[int] = field(default_factory=set)
    pending: list[PendingExchange] = field(default_factory=list)
    out_adj: dict[int, set[int]] = field(default_factory=dict)
    in_adj: dict[int, set[int]] = field(default_factory=dict)
    registry: dict[tuple[int, ...], ExchangeCycle] = field(default_factory=dict)
    cycles_of: dict[int, set[tuple[int, ...]]] = field(default_factory=dict)
    blocked: dict[tuple[int, ...], int] = field(default_factory=dict)
    active: set[tuple[int, ...]] = field(default_factory=set)
    cells: dict[tuple[int, BloodClass], CellCounts] = field(default_factory=dict)
    trace: list[DayTrace] = field(default_factory=list)

    def cell(self, v: Vertex) -> CellCounts:
        assert v.is_pair and v.profile is not None
        key = (v.profile.id, v.blood_class)
        if key not in self.cells:
            self.cells[key] = CellCounts()
        return self.cells[key]

    @property
    def pending_ids(self) -> set[int]:
        return {vid for p in self.pending for vid in p.cycle.vertex_ids}

    def pair_pool_size(self) -> int:
        in_system = set(self.available) | self.pending_ids
        return sum(1 for vid in in_system if self.vertices[vid].is_pair)

    def day_cycles(self) -> list[ExchangeCycle]:
        """Exchanges selectable today, in canonical order."""
        return [self.registry[key] for key in sorted(self.active)]

    def mark_unavailable(self, vid: int) -> None:
        self.available.remove(vid)
        for key in self.cycles_of[vid]:
            self.blocked[key] += 1
            self.active.discard(key)

    def mark_available(self, vid: int) -> None:
        self.available.add(vid)
        for key in self.cycles_of[vid]:
            self.blocked[key] -= 1
            if self.blocked[key] == 0:
                self.active.add(key)


@dataclass
class RunMetrics:
    """Entered/matched/departed tallies per (profile, blood class) plus a daily trace."""

    cells: dict[tuple[int, BloodClass], CellCounts]
    trace: list[DayTrace]

    @property
    def entered(self) -> int:
        return sum(c.entered for c in self.cells.values())

    @property
    def matched(self) -> int:
        return sum(c.matched for c in self.cells.values())

    def totals(
        self,
        profile: int | None = None,
        blood_classes: frozenset[BloodClass] | None = None,
    ) -> tuple[int, int]:
        """(entered, matched) restricted to a profile and/or class group."""
        entered = matched = 0
        for (pid, bclass), counts in self.cells.items():
            if profile is not None and pid != profile:
                continue
            if blood_classes is not None and bclass not in blood_classes:
                continue
            entered += counts.entered
            matched += counts.matched
        return entered, matched

    def matched_proportion(
        self,
        profile: int | None = None,
        blood_classes: frozenset[BloodClass] | None = None,
    ) -> float | None:
        entered, matched = self.totals(profile, blood_classes)
        return matched / entered if entered else None


# --- dynamics -------------------------------------------------------------------

def _edge_exists(u: Vertex, v: Vertex, salt: int, prob: float) -> bool:
    if v.is_pair:
        assert v.patient_blood is not None
        if not blood_compatible(u.donor_blood, v.patient_blood):
            return False
        return _event_uniform(salt, u.id, v.id) >= prob
    return u.is_pair


def _admit(state: SimulationState, v: Vertex, config: SimulationConfig, salt: int) -> None:
    prob = config.crossmatch_positive_prob
    state.out_adj[v.id] = set()
    state.in_adj[v.id] = set()
    for other in state.vertices.values():
        if _edge_exists(other, v, salt, prob):
            state.out_adj[other.id].add(v.id)
            state.in_adj[v.id].add(other.id)
        if _edge_exists(v, other, salt, prob):
            state.out_adj[v.id].add(other.id)
            state.in_adj[other.id].add(v.id)
    state.vertices[v.id] = v
    state.available.add(v.id)
    state.cycles_of[v.id] = set()
    for cycle in exchanges_through(v, state.vertices, state.out_adj, config.cycle_cap, config.chain_cap):
        key = cycle.vertex_ids
        state.registry[key] = cycle
        n_blocked = sum(1 for vid in key if vid not in state.available)
        state.blocked[key] = n_blocked
        if n_blocked == 0:
            state.active.add(key)
        for vid in key:
            state.cycles_of[vid].add(key)


def _evict(state: SimulationState, vid: int) -> None:
    for key in state.cycles_of.pop(vid, set()):
        state.registry.pop(key, None)
        state.blocked.pop(key, None)
        state.active.discard(key)
        for other in key:
            if other != vid:
                state.cycles_of[other].discard(key)
    for w in state.out_adj.pop(vid, set()):
        state.in_adj[w].discard(vid)
    for u in state.in_adj.pop(vid, set()):
        state.out_adj[u].discard(vid)
    del state.vertices[vid]
    state.available.discard(vid)


def _day_graph(state: SimulationState) -> CompatibilityGraph:
    vertices = sorted((state.vertices[vid] for vid in state.available), key=lambda v: v.id)
    edges = [
        (u.id, w)
        for u in vertices
        for w in state.out_adj[u.id]
        if w in state.available
    ]
    return CompatibilityGraph(vertices, edges)


def step_day(state: SimulationState, streams: RandomStreams, config: SimulationConfig) -> SimulationState:
    """Advance one day: arrivals, departures, match resolution, matching."""
    day = state.day

    n_pairs = int(streams.arrivals.poisson(config.arrival_rate))
    n_altruists = int(streams.arrivals.poisson(config.altruist_rate))
    for _ in range(n_pairs):
        v = generate_pair(streams.attributes, config, vertex_id=state.next_id)
        state.next_id += 1
        _admit(state, v, config, streams.crossmatch_salt)
        state.cell(v).entered += 1
    for _ in range(n_altruists):
        v = generate_altruist(streams.attributes, config, vertex_id=state.next_id)
        state.next_id += 1
        _admit(state, v, config, streams.crossmatch_salt)

    for vid in sorted(state.available):
        if _event_uniform(streams.departure_salt, vid, day) < config.departure_prob:
            v = state.vertices[vid]
            if v.is_pair:
                state.cell(v).departed += 1
            _evict(state, vid)

    matched_today = 0
    for pend in state.pending:
        executed = (
            _event_uniform(streams.execution_salt, pend.day_formed, *pend.cycle.vertex_ids)
            < config.execution_prob
        )
        for v in pend.cycle.vertices:
            if executed:
                if v.is_pair:
                    state.cell(v).matched += 1
                    matched_today += 1
                _evict(state, v.id)
            else:
                state.mark_available(v.id)
    state.pending = []

    if state.active:
        cycles = state.day_cycles()
        selected, floor = solve_max_cardinality(cycles)
        if config.mode is ClearingMode.PRIORITIZED:
            assert config.weights is not None
            selected = solve_prioritized(cycles, config.weights.weights, floor)
        if selected.pair_count != floor:
            raise AssertionError(
                f"day {day}: selected {selected.pair_count} pairs but the pool supports {floor}"
            )
        for cycle in selected.cycles:
            for vid in cycle.vertex_ids:
                state.mark_unavailable(vid)
            state.pending.append(PendingExchange(cycle, day))

    state.trace.append(DayTrace(day, state.pair_pool_size(), matched_today))
    state.day += 1
    return state


def run_simulation(config: SimulationConfig) -> RunMetrics:
    """Run the daily dynamics for the configured horizon and tally outcomes."""
    streams = RandomStreams.from_seed(config.seed)
    state = SimulationState()
    for _ in range(config.days):
        step_day(state, streams, config)

    for vid in set(state.available) | state.pending_ids:
        v = state.vertices[vid]
        if v.is_pair:
            state.cell(v).remaining += 1
    for key, counts in state.cells.items():
        if counts.entered != counts.matched + counts.departed + counts.remaining:
            raise AssertionError(f"conservation violated for cell {key}: {counts}")
    return RunMetrics(cells=state.cells, trace=state.trace)
