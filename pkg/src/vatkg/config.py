"""Operator configuration: key=value file merged with CLI flags.

The config file is flat `section.key = value` lines with `#` comments.
Recognized keys:

    pipeline.audio_text_min_cos      float in (0, 1)
    pipeline.video_text_drop_fraction float in [0, 1)
    pipeline.voice_over_labels       comma-separated labels
    pipeline.max_descriptions        int >= 1
    pipeline.candidate_count_hint    int >= 1
    pipeline.retry_attempts          int >= 1
    pipeline.retry_base_delay        float >= 0
    rag.top_k                        int >= 1
    rag.l2_threshold                 float (unset = pure top-k)
    rag.checker_min_cos              float
    rag.checker_encoder              audio | video
    clients.encoder_audio_url        base URL
    clients.encoder_video_url        base URL
    clients.encoder_text_url         base URL (defaults to the video one)
    clients.llm_url                  base URL

Flags always win over file values; the VATKG_CONFIG environment
variable supplies the file path when --config is absent.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

from .pipeline import PipelineConfig
from .rag import RagConfig

ENV_CONFIG_PATH = "VATKG_CONFIG"


class ConfigError(ValueError):
    """Raised for unreadable files, unknown keys or unparsable values."""


@dataclass
class CliConfig:
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    rag: RagConfig = field(default_factory=RagConfig)
    encoder_audio_url: str | None = None
    encoder_video_url: str | None = None
    encoder_text_url: str | None = None
    llm_url: str | None = None


def parse_config_text(text: str, where: str = "<config>") -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{where}:{lineno}: expected key = value")
        key, _, value = stripped.partition("=")
        values[key.strip()] = value.strip().strip('"')
    return values


def _as_float(key: str, value: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise ConfigError(f"{key} must be a number, got {value!r}") from None


def _as_int(key: str, value: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key} must be an integer, got {value!r}") from None


def load_cli_config(path: str | Path | None) -> CliConfig:
    """Build a validated CliConfig from a file path (or defaults when None)."""
    config = CliConfig()
    if path is None:
        env_path = os.environ.get(ENV_CONFIG_PATH)
        path = env_path if env_path else None
    if path is None:
        return config
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = parse_config_text(text, where=str(path))
    apply_overrides(config, values)
    return config


def apply_overrides(config: CliConfig, values: dict[str, str]) -> None:
    """Apply dotted-key overrides in place, validating as we go."""
    pipeline_kwargs: dict = {}
    for key, value in values.items():
        if key == "pipeline.audio_text_min_cos":
            pipeline_kwargs["audio_text_min_cos"] = _as_float(key, value)
        elif key == "pipeline.video_text_drop_fraction":
            pipeline_kwargs["video_text_drop_fraction"] = _as_float(key, value)
        elif key == "pipeline.voice_over_labels":
            labels = [part.strip() for part in value.split(",") if part.strip()]
            pipeline_kwargs["voice_over_labels"] = frozenset(labels)
        elif key == "pipeline.max_descriptions":
            pipeline_kwargs["max_descriptions"] = _as_int(key, value)
        elif key == "pipeline.candidate_count_hint":
            pipeline_kwargs["candidate_count_hint"] = _as_int(key, value)
        elif key == "pipeline.retry_attempts":
            pipeline_kwargs["retry_attempts"] = _as_int(key, value)
        elif key == "pipeline.retry_base_delay":
            pipeline_kwargs["retry_base_delay"] = _as_float(key, value)
        elif key == "rag.top_k":
            config.rag.top_k = _as_int(key, value)
        elif key == "rag.l2_threshold":
            config.rag.l2_threshold = _as_float(key, value)
        elif key == "rag.checker_min_cos":
            config.rag.checker_min_cos = _as_float(key, value)
        elif key == "rag.checker_encoder":
            if value not in ("audio", "video"):
                raise ConfigError(f"{key} must be 'audio' or 'video', got {value!r}")
            config.rag.checker_encoder = value
        elif key == "clients.encoder_audio_url":
            config.encoder_audio_url = value
        elif key == "clients.encoder_video_url":
            config.encoder_video_url = value
        elif key == "clients.encoder_text_url":
            config.encoder_text_url = value
        elif key == "clients.llm_url":
            config.llm_url = value
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if pipeline_kwargs:
        current = config.pipeline
        merged = {
            "audio_text_min_cos": current.audio_text_min_cos,
            "video_text_drop_fraction": current.video_text_drop_fraction,
            "voice_over_labels": current.voice_over_labels,
            "max_descriptions": current.max_descriptions,
            "candidate_count_hint": current.candidate_count_hint,
            "retry_attempts": current.retry_attempts,
            "retry_base_delay": current.retry_base_delay,
        }
        merged.update(pipeline_kwargs)
        try:
            config.pipeline = PipelineConfig(**merged)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        config.rag = RagConfig(
            top_k=config.rag.top_k,
            l2_threshold=config.rag.l2_threshold,
            checker_min_cos=config.rag.checker_min_cos,
            checker_encoder=config.rag.checker_encoder,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
