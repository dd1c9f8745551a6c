"""Shared 12-sample fixture: manifest rows, scripted clients and config.

The stage-by-stage expectation for this fixture is frozen in
tests/data/e2e/expected.json, which is produced by tests/trace_e2e.py
applying each filtering/selection rule directly to the mock outputs,
independently of the pipeline implementation.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from vatkg.clients import ClientBundle, EchoLlm, InMemoryKb, MockEncoder, ScriptedLlm
from vatkg.pipeline import PipelineConfig
from vatkg.prompts import DESCRIPTION_HEADER, RECAPTION_HEADER, TRIPLET_HEADER

DATA_DIR = Path(__file__).parent / "data" / "e2e"

# manifest rows in deliberately shuffled order; the pipeline must process
# in ascending id order regardless
MANIFEST_ROWS = [
    {
        "id": "s04",
        "video_uri": "vid://s04",
        "audio_uri": "aud://s04",
        "caption": "a steam locomotive departs the station",
        "title": "Steam railway",
        "description": "heritage railway day",
        "frame_count": 96,
        "category": "vehicles",
    },
    {
        "id": "s01",
        "video_uri": "vid://s01",
        "audio_uri": "aud://s01",
        "caption": "a border collie herds sheep on a hillside",
        "title": "Herding dogs at work",
        "description": "sheepdog trial footage",
        "frame_count": 48,
        "category": "animals",
    },
    {
        "id": "s12",
        "video_uri": "vid://s12",
        "audio_uri": "aud://s12",
        "caption": "a busker plays guitar in a subway",
        "title": "Subway busker",
        "description": "street music",
        "frame_count": 88,
        "category": "music",
    },
    {
        "id": "s02",
        "video_uri": "vid://s02",
        "audio_uri": "aud://s02?v=4",
        "caption": "waves crash against a rocky shore",
        "title": "Ocean sounds",
        "description": "coastal ambience",
        "frame_count": 60,
        "category": "nature",
    },
    {
        "id": "s03",
        "video_uri": "vid://s03",
        "audio_uri": "aud://s03",
        "caption": "synth demo with voice over",
        "title": "Synth review",
        "description": "spoken review",
        "frame_count": 24,
    },
    {
        "id": "s05",
        "video_uri": "vid://s05",
        "audio_uri": "aud://s05",
        "caption": "a violinist rehearses a concerto",
        "description": "practice room recording",
        "frame_count": 32,
        "category": "music",
    },
    {
        "id": "s06",
        "video_uri": "vid://s06?v=0",
        "audio_uri": "aud://s06?v=1",
        "caption": "an excavator digs a trench at a construction site",
        "title": "Excavator at work",
        "description": "construction timelapse",
        "frame_count": 80,
        "category": "machines",
    },
    {
        "id": "s07",
        "video_uri": "vid://s07",
        "audio_uri": "aud://s07",
        "caption": "tutorial narration over gameplay",
        "title": "Game guide",
        "description": "walkthrough",
        "frame_count": 40,
    },
    {
        "id": "s08",
        "video_uri": "vid://s08",
        "audio_uri": "aud://s08",
        "caption": "a hailstorm batters a tin roof",
        "title": "Hail storm",
        "description": "severe weather clip",
        "frame_count": 56,
        "category": "weather",
    },
    {
        "id": "s09",
        "video_uri": "vid://s09",
        "audio_uri": "aud://s09",
        "caption": "a diesel engine idles in a garage",
        "title": "Engine test",
        "description": "mechanic diagnostics",
        "frame_count": 64,
        "category": "vehicles",
    },
    {
        "id": "s10",
        "video_uri": "vid://s10",
        "audio_uri": "aud://s10",
        "caption": "a flock of geese lands on a pond",
        "title": "Geese landing",
        "description": "birdwatching",
        "frame_count": 72,
        "category": "animals",
    },
    {
        "id": "s11",
        "video_uri": "vid://s11",
        "audio_uri": "aud://s11?v=0",
        "caption": "static noise over a blank screen",
        "title": "Calibration",
        "description": "test pattern",
        "frame_count": 16,
    },
]

# both veto labels among the top-5 tags for s03 and s07 (s07 mixed-case)
AUDIO_TAGS = {
    "aud://s01": ["dog", "sheep", "wind", "speech", "birdsong"],
    "aud://s02?v=4": ["water", "waves", "wind", "rain", "surf"],
    "aud://s03": ["speech", "audio", "music", "synth", "crowd"],
    "aud://s04": ["engine", "steam", "whistle", "rail", "crowd"],
    "aud://s05": ["violin", "music", "room", "strings", "practice"],
    "aud://s06?v=1": ["engine", "machinery", "digging", "gravel", "diesel"],
    "aud://s07": ["Speech", "AUDIO", "game", "narration", "music"],
    "aud://s08": ["hail", "rain", "roof", "storm", "wind"],
    "aud://s09": ["engine", "idle", "garage", "diesel", "hum"],
    "aud://s10": ["geese", "honking", "water", "splash", "wings"],
    "aud://s11?v=0": ["static", "noise", "hiss", "hum", "silence"],
    "aud://s12": ["guitar", "music", "subway", "crowd", "strings"],
}

# candidate triplet lines keyed by a distinctive substring of the caption;
# s02 carries one malformed and one pipe-form line, s11 parses to nothing
TRIPLET_LINES = {
    "border collie": "(border collie; herds; sheep)\n(border collie; IsA; dog breed)\n(sheep; graze on; hillside)",
    "waves crash": "(waves; crash against; rocky shore)\ngarbage line without form\nwaves | part of | ocean",
    "steam locomotive": "(steam locomotive; departs from; station)\n(steam locomotive; IsA; locomotive)",
    "excavator": "(excavator; digs; trench)\n(excavator; powered by; engine)",
    "hailstorm": "(hail; batters; tin roof)\n(tin roof; withstands; hail)",
    "diesel engine": "(diesel engine; IsA; engine)\n(engine; idles in; garage)",
    "geese": "(geese; land on; pond)\n(flock; composed of; geese)",
    "static noise": "no triplets here\nstill nothing",
    "busker": "(busker; plays; guitar)\n(busker; performs in; subway)",
    "violinist": "(violinist; rehearses; concerto)",
}

WIKIPEDIA = {
    "engine": [
        "A machine that converts energy into mechanical force.",
        "The motive power unit of a vehicle.",
        "A software component that drives other programs.",
        "A locomotive pulling a train.",
        "A device producing thrust for propulsion.",
    ],
    "excavator": [
        "A heavy construction machine with a bucket arm.",
        "An archaeologist who digs historical sites.",
    ],
    "hail": ["Precipitation of solid ice pellets."],
    "diesel engine": ["An internal combustion engine ignited by compression."],
    "garage": ["A building for housing or repairing vehicles."],
    "border collie": [
        "A herding dog breed from the Anglo-Scottish border.",
        "A working dog bred for intelligence and obedience.",
    ],
    "sheep": ["A domesticated ruminant kept for wool and meat."],
    "dog breed": ["A particular strain of dog selected by humans."],
    "waves": ["Disturbances moving across the surface of water."],
    "rocky shore": ["An intertidal coastline of solid rock."],
    "ocean": ["The body of salt water covering most of Earth."],
    "steam locomotive": [
        "A railway engine driven by steam power.",
        "A locomotive fueled by coal or oil heating a boiler.",
    ],
    "station": ["A place where trains stop for passengers."],
    "locomotive": ["A rail vehicle that pulls a train."],
    "trench": ["A long narrow excavation in the ground."],
    "construction site": ["An area where a structure is being built."],
    "geese": ["Large waterfowl of the family Anatidae."],
    "pond": ["A small still body of water."],
    "guitar": [
        "A fretted string instrument played by strumming.",
        "A six-stringed musical instrument.",
    ],
    "string instrument": ["An instrument producing sound from vibrating strings."],
}

WIKTIONARY = {
    "hillside": ["The sloping side of a hill."],
    "flock": ["A group of birds or sheep."],
    "excavator": ["One who excavates."],
}

# concepts whose LLM supplement is pinned; everything else gets the
# generic two-line fallback
LLM_DESCRIPTIONS = {
    "excavator": ["A digging machine used in earthmoving."],
    "tin roof": ["A roof made of corrugated metal sheets."],
    "busker": ["A street performer playing for donations."],
}

# thresholds picked between the sorted mock cosine values (see trace_e2e.py)
AUDIO_TEXT_MIN_COS = 0.05
VIDEO_TEXT_DROP_FRACTION = 0.25


def _field(prompt: str, name: str) -> str:
    # the triplet template carries example Caption lines; the real input
    # is always the last occurrence
    matches = re.findall(rf"^{name}: (.*)$", prompt, re.MULTILINE)
    return matches[-1].strip() if matches else ""


def recaption_response(prompt: str) -> str:
    return f"RECAP: {_field(prompt, 'Caption')} [{_field(prompt, 'Title')}]"


def triplet_response(prompt: str) -> str:
    caption = _field(prompt, "Caption")
    for key, lines in TRIPLET_LINES.items():
        if key in caption:
            return lines
    raise AssertionError(f"no scripted triplets for caption {caption!r}")


def description_response(prompt: str) -> str:
    concept = _field(prompt, "Concept")
    if concept == "engine":
        raise AssertionError("LLM must not be asked to describe 'engine'")
    if concept in LLM_DESCRIPTIONS:
        return "\n".join(LLM_DESCRIPTIONS[concept])
    return f"A {concept} as seen in the clip.\nThe {concept} in a broader sense."


def build_llm() -> ScriptedLlm:
    return ScriptedLlm(
        {
            re.escape(RECAPTION_HEADER): recaption_response,
            re.escape(TRIPLET_HEADER): triplet_response,
            re.escape(DESCRIPTION_HEADER): description_response,
        }
    )


def build_audio_encoder() -> MockEncoder:
    return MockEncoder(
        family="audio",
        dims={"audio": 8, "text": 8},
        salt="clap-mock",
        tags_script=AUDIO_TAGS,
    )


def build_video_encoder() -> MockEncoder:
    return MockEncoder(
        family="video",
        dims={"video": 8, "text": 8, "image": 8, "video_conditioned": 8},
        salt="viclip-mock",
    )


def build_clients() -> ClientBundle:
    return ClientBundle(
        audio_encoder=build_audio_encoder(),
        video_encoder=build_video_encoder(),
        llm=build_llm(),
        kb=InMemoryKb(wikipedia=WIKIPEDIA, wiktionary=WIKTIONARY),
        generator=EchoLlm(),
    )


def build_config() -> PipelineConfig:
    return PipelineConfig(
        audio_text_min_cos=AUDIO_TEXT_MIN_COS,
        video_text_drop_fraction=VIDEO_TEXT_DROP_FRACTION,
        retry_base_delay=0.0,
    )


def write_manifest(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        for row in MANIFEST_ROWS:
            fh.write(json.dumps(row, sort_keys=True) + "\n")
    return path
