from __future__ import annotations

import json

import pytest

from vatkg.errors import (
    DescriptionIndexOutOfRangeError,
    EmptyCandidateListError,
    InvariantViolationOnLoadError,
    SchemaVersionMismatchError,
    StorageError,
    TooManyCandidatesError,
    UnknownConceptError,
    UnknownSampleError,
)
from vatkg.graph import (
    ConceptDescription,
    KnowledgeGraph,
    MultimodalSample,
    MultimodalTriplet,
    Source,
    graph_stats,
    graph_to_bytes,
    load_graph,
    normalize_surface,
    save_graph,
    triplet_id_for,
    triplet_to_sentence,
)


def desc(text: str, source: Source = Source.WIKIPEDIA) -> ConceptDescription:
    return ConceptDescription(text=text, source=source)


def sample(sid: str) -> MultimodalSample:
    return MultimodalSample(
        id=sid, video_uri=f"vid://{sid}", audio_uri=f"aud://{sid}", caption=f"caption {sid}"
    )


# --- surface normalization ----------------------------------------------------


def test_normalize_surface_collapses_whitespace():
    assert normalize_surface("  desert   tawny\towl ") == "desert tawny owl"
    assert normalize_surface("Apple") == "Apple"  # case-preserving


# --- upsert_concept -----------------------------------------------------------


def test_upsert_inserts_concept():
    graph = KnowledgeGraph()
    graph.upsert_concept("quokka", [desc("a small wallaby")])
    assert len(graph.concepts) == 1


def test_upsert_rejects_bad_cardinality():
    graph = KnowledgeGraph()
    with pytest.raises(TooManyCandidatesError):
        graph.upsert_concept("goal", [desc(f"d{i}") for i in range(6)])
    with pytest.raises(EmptyCandidateListError):
        graph.upsert_concept("goal", [])


def test_upsert_is_idempotent():
    graph = KnowledgeGraph()
    candidates = [desc("ambition"), desc("soccer score")]
    graph.upsert_concept("goal", candidates)
    graph.upsert_concept("goal", candidates)
    assert len(graph.concepts) == 1


def test_reupsert_superset_replaces_non_superset_rejected():
    graph = KnowledgeGraph()
    graph.upsert_concept("goal", [desc("ambition"), desc("soccer score")])
    # superset by text: replaced
    graph.upsert_concept(
        "goal", [desc("soccer score"), desc("ambition"), desc("game objective")]
    )
    assert len(graph.concepts["goal"].candidates) == 3
    # non-superset: stored list kept
    kept = graph.upsert_concept("goal", [desc("something else")])
    assert len(kept.candidates) == 3
    assert {c.text for c in graph.concepts["goal"].candidates} == {
        "ambition",
        "soccer score",
        "game objective",
    }


# --- add_triplet ----------------------------------------------------------------


def build_base_graph() -> KnowledgeGraph:
    graph = KnowledgeGraph()
    graph.add_sample(sample("s1"))
    graph.upsert_concept("quokka", [desc("a"), desc("b")])
    graph.upsert_concept("mammal", [desc("c")])
    return graph


def test_add_triplet_appends():
    graph = build_base_graph()
    before = len(graph.triplets)
    tid = graph.add_triplet("quokka", "IsA", "mammal", "s1", 0, 0)
    assert len(graph.triplets) == before + 1
    assert graph.triplets_by_id[tid].head == "quokka"
    assert tid == triplet_id_for("s1", "quokka", "IsA", "mammal")


def test_add_triplet_validates_references():
    graph = build_base_graph()
    with pytest.raises(UnknownConceptError):
        graph.add_triplet("wombat", "IsA", "mammal", "s1", 0, 0)
    with pytest.raises(UnknownSampleError):
        graph.add_triplet("quokka", "IsA", "mammal", "s9", 0, 0)
    with pytest.raises(DescriptionIndexOutOfRangeError):
        graph.add_triplet("quokka", "IsA", "mammal", "s1", 5, 0)


# --- triplet_to_sentence ----------------------------------------------------------


def make_triplet(head: str, relation: str, tail: str) -> MultimodalTriplet:
    return MultimodalTriplet(
        triplet_id="t", head=head, relation=relation, tail=tail,
        sample_id="s", head_desc_idx=0, tail_desc_idx=0,
    )


def test_sentence_concatenation():
    assert triplet_to_sentence(make_triplet("quokka", "IsA", "mammal")) == "quokka IsA mammal"
    assert triplet_to_sentence(make_triplet("a", "b", "c")) == "a b c"
    assert (
        triplet_to_sentence(make_triplet("desert tawny owl", "lives in", "desert"))
        == "desert tawny owl lives in desert"
    )


def test_sentence_injective_without_spaces():
    triples = [("a", "b", "c"), ("ab", "", "c"), ("x", "y", "z"), ("a", "bc", "c")]
    sentences = {
        triplet_to_sentence(make_triplet(h, r, t)) for h, r, t in triples if h and r and t
    }
    assert len(sentences) == len([t for t in triples if all(t)])


# --- persistence -------------------------------------------------------------------


def test_empty_graph_round_trip(tmp_path):
    graph = KnowledgeGraph()
    path = tmp_path / "graph.json"
    save_graph(graph, path)
    assert load_graph(path) == graph


def test_fixture_round_trip(tmp_path, small_graph):
    path = tmp_path / "graph.json"
    save_graph(small_graph, path)
    loaded = load_graph(path)
    assert loaded == small_graph
    # byte stability: re-saving the loaded graph gives identical bytes
    assert graph_to_bytes(loaded) == path.read_bytes()


def test_dangling_sample_reference_rejected(tmp_path, small_graph):
    path = tmp_path / "graph.json"
    save_graph(small_graph, path)
    doc = json.loads(path.read_text())
    doc["samples"] = [s for s in doc["samples"] if s["id"] != "s2"]
    path.write_text(json.dumps(doc))
    with pytest.raises(InvariantViolationOnLoadError):
        load_graph(path)


def test_schema_version_checked(tmp_path):
    path = tmp_path / "graph.json"
    path.write_text(json.dumps({"schema": "vatkg-graph/9", "concepts": [], "triplets": [], "samples": []}))
    with pytest.raises(SchemaVersionMismatchError):
        load_graph(path)


def test_unknown_keys_rejected(tmp_path, small_graph):
    path = tmp_path / "graph.json"
    save_graph(small_graph, path)
    doc = json.loads(path.read_text())
    doc["extra"] = 1
    path.write_text(json.dumps(doc))
    with pytest.raises(InvariantViolationOnLoadError):
        load_graph(path)


def test_missing_file_is_storage_error(tmp_path):
    with pytest.raises(StorageError):
        load_graph(tmp_path / "absent.json")


# --- statistics ----------------------------------------------------------------------


def test_stats_empty_graph():
    stats = graph_stats(KnowledgeGraph())
    assert stats.concept_count == 0
    assert stats.triplet_count == 0
    assert stats.grounding_per_concept == {}
    assert stats.description_word_lengths == {}
    assert stats.category_counts == {}


def test_stats_grounding_histogram():
    graph = KnowledgeGraph()
    for sid in ("s1", "s2", "s3"):
        graph.add_sample(sample(sid))
    graph.upsert_concept("hub", [desc("the hub")])
    graph.upsert_concept("x1", [desc("one")])
    graph.upsert_concept("x2", [desc("two")])
    graph.upsert_concept("x3", [desc("three")])
    graph.add_triplet("hub", "r", "x1", "s1", 0, 0)
    graph.add_triplet("hub", "r", "x2", "s2", 0, 0)
    graph.add_triplet("hub", "r", "x3", "s3", 0, 0)
    stats = graph_stats(graph)
    # hub grounded by 3 triplets, each xN by 1
    assert stats.grounding_per_concept == {3: 1, 1: 3}


def test_stats_word_length_buckets():
    graph = KnowledgeGraph()
    twelve = " ".join(f"w{i}" for i in range(12))
    graph.upsert_concept("c", [desc(twelve)])
    stats = graph_stats(graph)
    assert stats.description_word_lengths[12] == 1


def test_stats_reference_conservation(small_graph):
    stats = graph_stats(small_graph)
    total_refs = sum(count * n for count, n in stats.grounding_per_concept.items())
    self_loops = sum(1 for t in small_graph.triplets if t.head == t.tail)
    assert total_refs == 2 * len(small_graph.triplets) - self_loops


def test_stats_categories(small_graph):
    stats = graph_stats(small_graph)
    assert stats.category_counts == {"vehicles": 1}
