"""Compatibility graph model: blood types, patient profiles, vertices and edges.

A vertex is either a patient-donor pair or an altruistic donor.  Altruists
are modeled with a fictitious patient who accepts any kidney, so chains can
be handled by the same cycle machinery as ordinary exchanges.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence


class BloodType(str, Enum):
    O = "O"
    A = "A"
    B = "B"
    AB = "AB"


class BloodClass(str, Enum):
    """Demand classes of a patient-donor blood type combination."""

    UNDERDEMANDED = "underdemanded"
    OVERDEMANDED = "overdemanded"
    SELF_DEMANDED = "self_demanded"
    RECIPROCAL = "reciprocal"


class VertexKind(str, Enum):
    PAIR = "pair"
    ALTRUIST = "altruist"


def blood_compatible(donor: BloodType, patient: BloodType) -> bool:
    """True if a donor kidney of type `donor` can go to a patient of type `patient`."""
    return donor is BloodType.O or patient is BloodType.AB or donor is patient


def classify_pair(patient: BloodType, donor: BloodType) -> BloodClass:
    """Classify a pair's blood type combination into its demand class.

    The four textual definitions overlap; the rules below are applied in
    order so that every combination lands in exactly one class.
    """
    if patient is donor:
        return BloodClass.SELF_DEMANDED
    if {patient, donor} == {BloodType.A, BloodType.B}:
        return BloodClass.RECIPROCAL
    if patient is BloodType.O or donor is BloodType.AB:
        return BloodClass.UNDERDEMANDED
    return BloodClass.OVERDEMANDED


@dataclass(frozen=True)
class PatientProfile:
    """One of the eight patient profiles built from three binary attributes.

    Attribute value 0 is the alternative expected to be preferred (young,
    rare drinking, healthy); 1 is the other (old, frequent drinking, cancer).
    The id encodes the attributes: id - 1 = 4*old + 2*cancer + 1*frequent.
    """

    id: int

    def __post_init__(self) -> None:
        if not 1 <= self.id <= 8:
            raise ValueError(f"profile id must be 1..8, got {self.id}")

    @property
    def old(self) -> bool:
        return bool((self.id - 1) & 4)

    @property
    def cancer(self) -> bool:
        return bool((self.id - 1) & 2)

    @property
    def frequent_drinker(self) -> bool:
        return bool((self.id - 1) & 1)

    @property
    def attributes(self) -> tuple[int, int, int]:
        """(age, drinking, health) indicators, 0/1 coded."""
        return (int(self.old), int(self.frequent_drinker), int(self.cancer))

    @property
    def label(self) -> str:
        return (
            ("O" if self.old else "Y")
            + ("F" if self.frequent_drinker else "R")
            + ("C" if self.cancer else "H")
        )


PROFILES: tuple[PatientProfile, ...] = tuple(PatientProfile(i) for i in range(1, 9))
PROFILE_IDS: tuple[int, ...] = tuple(p.id for p in PROFILES)


@dataclass(frozen=True)
class Vertex:
    """A patient-donor pair, or an altruistic donor with a dummy patient."""

    id: int
    kind: VertexKind
    donor_blood: BloodType
    patient_blood: BloodType | None = None
    profile: PatientProfile | None = None
    is_pair: bool = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "is_pair", self.kind is VertexKind.PAIR)
        if self.is_pair:
            if self.patient_blood is None or self.profile is None:
                raise ValueError(f"pair vertex {self.id} needs patient blood and profile")
        else:
            if self.patient_blood is not None or self.profile is not None:
                raise ValueError(f"altruist vertex {self.id} must not carry a patient")

    @property
    def blood_class(self) -> BloodClass | None:
        if not self.is_pair:
            return None
        assert self.patient_blood is not None
        return classify_pair(self.patient_blood, self.donor_blood)


def pair(vertex_id: int, donor: BloodType, patient: BloodType, profile: int | PatientProfile) -> Vertex:
    if isinstance(profile, int):
        profile = PatientProfile(profile)
    return Vertex(vertex_id, VertexKind.PAIR, donor, patient, profile)


def altruist(vertex_id: int, donor: BloodType) -> Vertex:
    return Vertex(vertex_id, VertexKind.ALTRUIST, donor)


class GraphValidationError(ValueError):
    """Raised when a vertex/edge set violates the compatibility graph invariants."""


class CompatibilityGraph:
    """Directed graph of feasible transplants.

    An edge (u, v) means u's donor can give to v's patient.  Every pair has
    an edge into every altruist (the dummy patient accepts anyone); there
    are never edges between altruists or self-edges.
    """

    def __init__(self, vertices: Sequence[Vertex], edges: Iterable[tuple[int, int]]):
        self.vertices: tuple[Vertex, ...] = tuple(vertices)
        self.edges: frozenset[tuple[int, int]] = frozenset(edges)
        self._by_id: dict[int, Vertex] = {v.id: v for v in self.vertices}
        if len(self._by_id) != len(self.vertices):
            raise GraphValidationError("duplicate vertex ids")
        self._validate()
        out: dict[int, list[int]] = {v.id: [] for v in self.vertices}
        for u, w in self.edges:
            out[u].append(w)
        # sorted adjacency keeps enumeration order canonical
        self.out_edges: dict[int, tuple[int, ...]] = {u: tuple(sorted(ws)) for u, ws in out.items()}

    def _validate(self) -> None:
        ids = set(self._by_id)
        altruist_ids = [v.id for v in self.vertices if not v.is_pair]
        pair_ids = [v.id for v in self.vertices if v.is_pair]
        for u, v in self.edges:
            if u == v:
                raise GraphValidationError(f"self-edge at vertex {u}")
            if u not in ids or v not in ids:
                raise GraphValidationError(f"edge ({u}, {v}) references unknown vertex")
            target = self._by_id[v]
            if target.is_pair:
                assert target.patient_blood is not None
                if not blood_compatible(self._by_id[u].donor_blood, target.patient_blood):
                    raise GraphValidationError(
                        f"edge ({u}, {v}) violates blood compatibility"
                    )
            else:
                if not self._by_id[u].is_pair:
                    raise GraphValidationError(
                        f"altruist-to-altruist edge ({u}, {v}) is not allowed"
                    )
        for p in pair_ids:
            for a in altruist_ids:
                if (p, a) not in self.edges:
                    raise GraphValidationError(
                        f"missing dummy-patient edge ({p}, {a}); every pair feeds every altruist"
                    )

    def __len__(self) -> int:
        return len(self.vertices)

    def vertex(self, vertex_id: int) -> Vertex:
        return self._by_id[vertex_id]

    def has_edge(self, u: int, v: int) -> bool:
        return (u, v) in self.edges

    @property
    def pair_vertices(self) -> list[Vertex]:
        return [v for v in self.vertices if v.is_pair]

    @property
    def altruist_vertices(self) -> list[Vertex]:
        return [v for v in self.vertices if not v.is_pair]


def derive_edges(
    vertices: Sequence[Vertex],
    crossmatch_positive_prob: float,
    rng: random.Random,
) -> CompatibilityGraph:
    """Build the graph implied by blood types plus random tissue incompatibility.

    A candidate edge into a pair survives when the donor and patient blood
    types are compatible and an independent uniform draw clears the positive
    crossmatch probability.  Edges into altruists' dummy patients always
    exist.  Deterministic for a fixed rng seed and vertex order.
    """
    if not 0.0 <= crossmatch_positive_prob <= 1.0:
        raise ValueError("crossmatch_positive_prob must be in [0, 1]")
    edges: set[tuple[int, int]] = set()
    for u in vertices:
        for v in vertices:
            if u.id == v.id:
                continue
            if v.is_pair:
                assert v.patient_blood is not None
                if blood_compatible(u.donor_blood, v.patient_blood):
                    if rng.random() >= crossmatch_positive_prob:
                        edges.add((u.id, v.id))
            elif u.is_pair:
                edges.add((u.id, v.id))
    return CompatibilityGraph(vertices, edges)


# --- JSON interchange -------------------------------------------------------

def graph_to_dict(graph: CompatibilityGraph) -> dict:
    vertices = []
    for v in graph.vertices:
        rec: dict = {"id": v.id, "kind": v.kind.value, "donor_blood": v.donor_blood.value}
        if v.is_pair:
            assert v.patient_blood is not None and v.profile is not None
            rec["patient_blood"] = v.patient_blood.value
            rec["profile_id"] = v.profile.id
        vertices.append(rec)
    return {
        "vertices": vertices,
        "edges": sorted([u, w] for u, w in graph.edges),
    }


def graph_from_dict(data: dict) -> CompatibilityGraph:
    try:
        raw_vertices = data["vertices"]
        raw_edges = data["edges"]
    except (KeyError, TypeError) as exc:
        raise GraphValidationError(f"graph JSON needs 'vertices' and 'edges': {exc}") from exc
    vertices = []
    for rec in raw_vertices:
        try:
            kind = VertexKind(rec["kind"])
            donor = BloodType(rec["donor_blood"])
            if kind is VertexKind.PAIR:
                vertices.append(
                    pair(int(rec["id"]), donor, BloodType(rec["patient_blood"]), int(rec["profile_id"]))
                )
            else:
                vertices.append(altruist(int(rec["id"]), donor))
        except (KeyError, ValueError) as exc:
            raise GraphValidationError(f"bad vertex record {rec!r}: {exc}") from exc
    edges = []
    for e in raw_edges:
        if not (isinstance(e, (list, tuple)) and len(e) == 2):
            raise GraphValidationError(f"bad edge record {e!r}: expected [from_id, to_id]")
        edges.append((int(e[0]), int(e[1])))
    return CompatibilityGraph(vertices, edges)


def save_graph(graph: CompatibilityGraph, path: str | Path) -> None:
    Path(path).write_text(json.dumps(graph_to_dict(graph), indent=2) + "\n")


def load_graph(path: str | Path) -> CompatibilityGraph:
    return graph_from_dict(json.loads(Path(path).read_text()))
