"""Projection heads and checkpoint management.

Each embedding kind is served by a small torch MLP projecting the
deterministic features into the advertised output space. Weights are
loaded from checkpoint files on disk; `create_checkpoints` writes a
seeded set so a service can be stood up anywhere without downloads.
Swapping in real pretrained towers means pointing a kind at a different
state dict with matching feature/output dims.
"""

from __future__ import annotations

import json
from pathlib import Path

import torch
from torch import nn

from .features import MEDIA_FEATURE_DIM, TEXT_FEATURE_DIM

DEFAULT_OUTPUT_DIMS = {
    "text": 64,
    "audio": 64,
    "video": 64,
    "image": 64,
    "video_conditioned": 64,
}

# audio tagging vocabulary; includes the voice-over veto labels so the
# construction pipeline's filter is exercisable against this service
TAG_VOCABULARY = (
    "speech",
    "audio",
    "music",
    "singing",
    "guitar",
    "piano",
    "drum",
    "violin",
    "dog",
    "cat",
    "bird",
    "engine",
    "car",
    "train",
    "water",
    "rain",
    "wind",
    "thunder",
    "crowd",
    "applause",
    "siren",
    "footsteps",
    "machinery",
    "silence",
)

FEATURE_DIMS = {
    "text": TEXT_FEATURE_DIM,
    "audio": MEDIA_FEATURE_DIM,
    "video": MEDIA_FEATURE_DIM,
    "image": MEDIA_FEATURE_DIM,
}


class ProjectionHead(nn.Module):
    """features -> hidden tanh -> output; eval-mode deterministic."""

    def __init__(self, in_dim: int, out_dim: int, hidden: int = 128):
        super().__init__()
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden),
            nn.Tanh(),
            nn.Linear(hidden, out_dim),
        )

    def forward(self, feats: torch.Tensor) -> torch.Tensor:
        return self.net(feats)


class TagHead(nn.Module):
    """features -> per-label logits over the tag vocabulary."""

    def __init__(self, in_dim: int, n_labels: int = len(TAG_VOCABULARY)):
        super().__init__()
        self.linear = nn.Linear(in_dim, n_labels)

    def forward(self, feats: torch.Tensor) -> torch.Tensor:
        return self.linear(feats)


def _seeded(module: nn.Module, seed: int) -> nn.Module:
    generator = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for param in module.parameters():
            param.copy_(torch.empty_like(param).uniform_(-0.5, 0.5, generator=generator))
    return module


def create_checkpoints(
    out_dir: str | Path,
    seed: int = 7,
    output_dims: dict[str, int] | None = None,
) -> Path:
    """Write seeded state dicts plus a dims manifest; returns the directory."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    dims = dict(DEFAULT_OUTPUT_DIMS)
    dims.update(output_dims or {})
    # the conditioned space is the video tower's space by construction
    dims["video_conditioned"] = dims["video"]
    for offset, kind in enumerate(("text", "audio", "video", "image")):
        head = _seeded(ProjectionHead(FEATURE_DIMS[kind], dims[kind]), seed + offset)
        torch.save(head.state_dict(), out / f"{kind}.pt")
    tagger = _seeded(TagHead(MEDIA_FEATURE_DIM), seed + 101)
    torch.save(tagger.state_dict(), out / "tags.pt")
    (out / "dims.json").write_text(json.dumps(dims, sort_keys=True, indent=2) + "\n")
    return out


def load_heads(weights_dir: str | Path):
    """Load every head in eval mode; raises FileNotFoundError when absent."""
    root = Path(weights_dir)
    dims_path = root / "dims.json"
    if not dims_path.is_file():
        raise FileNotFoundError(f"no dims.json under {root}; run init-weights first")
    dims = json.loads(dims_path.read_text())
    heads: dict[str, nn.Module] = {}
    for kind in ("text", "audio", "video", "image"):
        head = ProjectionHead(FEATURE_DIMS[kind], dims[kind])
        state_path = root / f"{kind}.pt"
        if not state_path.is_file():
            raise FileNotFoundError(f"missing checkpoint {state_path}")
        head.load_state_dict(torch.load(state_path, weights_only=True))
        head.eval()
        heads[kind] = head
    tagger = TagHead(MEDIA_FEATURE_DIM)
    tagger.load_state_dict(torch.load(root / "tags.pt", weights_only=True))
    tagger.eval()
    return heads, tagger, dims
