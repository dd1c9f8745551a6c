from __future__ import annotations

import numpy as np
import pytest

from vatkg.clients import MockEncoder
from vatkg.graph import ConceptDescription, KnowledgeGraph, MultimodalSample, Source


@pytest.fixture
def small_graph() -> KnowledgeGraph:
    """Three concepts, two triplets, two samples; hand-checkable."""
    graph = KnowledgeGraph()
    graph.add_sample(
        MultimodalSample(
            id="s1",
            video_uri="vid://s1",
            audio_uri="aud://s1",
            caption="a quokka forages near shrubs",
            title="quokka clip",
            description_meta="wildlife footage",
            frame_count=30,
        )
    )
    graph.add_sample(
        MultimodalSample(
            id="s2",
            video_uri="vid://s2",
            audio_uri="aud://s2",
            caption="an engine idles in a garage",
            category="vehicles",
        )
    )
    graph.upsert_concept(
        "quokka",
        [
            ConceptDescription("A small wallaby native to Western Australia.", Source.WIKIPEDIA),
            ConceptDescription("A marsupial of the genus Setonix.", Source.WIKTIONARY),
        ],
    )
    graph.upsert_concept(
        "mammal",
        [ConceptDescription("A warm-blooded vertebrate animal.", Source.WIKIPEDIA)],
    )
    graph.upsert_concept(
        "engine",
        [ConceptDescription("A machine converting energy into motion.", Source.LLM)],
    )
    graph.add_triplet("quokka", "IsA", "mammal", "s1", 0, 0)
    graph.add_triplet("engine", "runs in", "engine", "s2", 0, 0)
    return graph


@pytest.fixture
def audio_encoder() -> MockEncoder:
    return MockEncoder(family="audio", dims={"text": 8, "audio": 8}, salt="audio-family")


@pytest.fixture
def video_encoder() -> MockEncoder:
    return MockEncoder(
        family="video",
        dims={"text": 8, "video": 8, "image": 8, "video_conditioned": 8},
        salt="video-family",
    )


def unit(values) -> np.ndarray:
    vec = np.asarray(values, dtype=np.float64)
    return (vec / np.linalg.norm(vec)).astype(np.float32)
