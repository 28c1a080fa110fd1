import json
import random

import pytest

from kexsim.graph import (
    PROFILES,
    BloodClass,
    BloodType,
    GraphValidationError,
    altruist,
    blood_compatible,
    classify_pair,
    derive_edges,
    graph_from_dict,
    graph_to_dict,
    load_graph,
    pair,
    save_graph,
)

from conftest import A, AB, B, O, assert_graph_invariants, random_pool

# donor -> set of compatible patients, all 16 combinations
COMPATIBILITY_TABLE = {
    O: {O, A, B, AB},
    A: {A, AB},
    B: {B, AB},
    AB: {AB},
}


def test_compatibility_matches_table_exactly():
    true_cells = 0
    for donor in BloodType:
        for patient in BloodType:
            expected = patient in COMPATIBILITY_TABLE[donor]
            assert blood_compatible(donor, patient) == expected
            true_cells += expected
    assert true_cells == 9


@pytest.mark.parametrize(
    "donor,patient,expected",
    [(O, A, True), (AB, A, False), (A, A, True)],
)
def test_compatibility_spot_checks(donor, patient, expected):
    assert blood_compatible(donor, patient) is expected


def test_classification_is_total_and_disjoint():
    seen = {}
    for patient in BloodType:
        for donor in BloodType:
            seen[(patient, donor)] = classify_pair(patient, donor)
    assert len(seen) == 16
    counts = {cls: sum(1 for v in seen.values() if v is cls) for cls in BloodClass}
    assert counts[BloodClass.SELF_DEMANDED] == 4
    assert counts[BloodClass.RECIPROCAL] == 2
    assert counts[BloodClass.UNDERDEMANDED] == 5
    assert counts[BloodClass.OVERDEMANDED] == 5


@pytest.mark.parametrize(
    "patient,donor,expected",
    [
        (O, AB, BloodClass.UNDERDEMANDED),
        (A, B, BloodClass.RECIPROCAL),
        (O, O, BloodClass.SELF_DEMANDED),  # identical types before the O-patient rule
        (AB, O, BloodClass.OVERDEMANDED),
        (A, AB, BloodClass.UNDERDEMANDED),
    ],
)
def test_classification_examples(patient, donor, expected):
    assert classify_pair(patient, donor) is expected


def test_profile_attribute_encoding():
    labels = {p.id: p.label for p in PROFILES}
    assert labels == {1: "YRH", 2: "YFH", 3: "YRC", 4: "YFC", 5: "ORH", 6: "OFH", 7: "ORC", 8: "OFC"}


def test_vertex_validation():
    from kexsim.graph import Vertex, VertexKind

    with pytest.raises(ValueError):
        Vertex(1, VertexKind.PAIR, donor_blood=A)  # pair without a patient
    with pytest.raises(ValueError):
        Vertex(1, VertexKind.ALTRUIST, donor_blood=A, patient_blood=B)


def test_derived_edges_follow_blood_types(tie_triangle):
    assert tie_triangle.edges == {(1, 2), (2, 1), (2, 3), (3, 2)}


def test_all_crossmatches_positive_leaves_only_altruist_edges():
    vertices = [
        pair(1, donor=O, patient=A, profile=1),
        pair(2, donor=O, patient=B, profile=2),
        altruist(3, donor=A),
    ]
    graph = derive_edges(vertices, 1.0, random.Random(1))
    assert graph.edges == {(1, 3), (2, 3)}


def test_zero_crossmatch_gives_every_compatible_edge():
    rng = random.Random(3)
    bloods = list(BloodType)
    vertices = [
        pair(i, donor=rng.choice(bloods), patient=rng.choice(bloods), profile=rng.randint(1, 8))
        for i in range(8)
    ]
    graph = derive_edges(vertices, 0.0, random.Random(0))
    for u in vertices:
        for v in vertices:
            if u.id != v.id:
                expected = blood_compatible(u.donor_blood, v.patient_blood)
                assert graph.has_edge(u.id, v.id) == expected


def test_derive_edges_is_deterministic_under_seed():
    rng = random.Random(9)
    bloods = list(BloodType)
    vertices = [
        pair(i, donor=rng.choice(bloods), patient=rng.choice(bloods), profile=1) for i in range(6)
    ]
    g1 = derive_edges(vertices, 0.1, random.Random(77))
    g2 = derive_edges(vertices, 0.1, random.Random(77))
    assert g1.edges == g2.edges


def test_construction_validates_invariants():
    vertices = [pair(1, donor=A, patient=B, profile=1), pair(2, donor=B, patient=A, profile=2)]
    with pytest.raises(GraphValidationError):
        graph_from_dict({"vertices": [{"id": 1, "kind": "pair", "donor_blood": "A",
                                       "patient_blood": "B", "profile_id": 1}],
                         "edges": [[1, 1]]})
    # incompatible edge rejected: A donor cannot feed a B patient
    with pytest.raises(GraphValidationError):
        graph_from_dict({
            "vertices": [
                {"id": 1, "kind": "pair", "donor_blood": "A", "patient_blood": "B", "profile_id": 1},
                {"id": 2, "kind": "pair", "donor_blood": "A", "patient_blood": "B", "profile_id": 2},
            ],
            "edges": [[1, 2]],
        })
    # a pair lacking its edge into an altruist is rejected
    with pytest.raises(GraphValidationError):
        graph_from_dict({
            "vertices": [
                {"id": 1, "kind": "pair", "donor_blood": "A", "patient_blood": "B", "profile_id": 1},
                {"id": 2, "kind": "altruist", "donor_blood": "O"},
            ],
            "edges": [],
        })
    # duplicate ids rejected
    with pytest.raises(GraphValidationError):
        graph_from_dict({
            "vertices": [
                {"id": 1, "kind": "altruist", "donor_blood": "O"},
                {"id": 1, "kind": "altruist", "donor_blood": "A"},
            ],
            "edges": [],
        })
    del vertices


def test_json_round_trip(tmp_path, tie_triangle):
    path = tmp_path / "graph.json"
    save_graph(tie_triangle, path)
    loaded = load_graph(path)
    assert loaded.edges == tie_triangle.edges
    assert [v.id for v in loaded.vertices] == [v.id for v in tie_triangle.vertices]
    assert loaded.vertex(1).profile.id == 1
    payload = json.loads(path.read_text())
    assert set(payload) == {"vertices", "edges"}


def test_random_constructions_keep_invariants():
    rng = random.Random(123)
    for _ in range(25):
        graph = random_pool(rng, n_pairs=rng.randint(0, 10), n_altruists=rng.randint(0, 2),
                            crossmatch=rng.random())
        assert_graph_invariants(graph)


def test_graph_dict_round_trip_with_altruists():
    vertices = [pair(1, donor=A, patient=B, profile=3), altruist(2, donor=O)]
    graph = derive_edges(vertices, 0.0, random.Random(0))
    rebuilt = graph_from_dict(graph_to_dict(graph))
    assert rebuilt.edges == graph.edges
    assert not rebuilt.vertex(2).is_pair
