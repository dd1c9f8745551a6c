"""Service entry point: create checkpoints and serve.

    python -m encoder_service init-weights --out ./weights [--seed 7]
    python -m encoder_service serve --weights ./weights [--port 8707]
                                    [--family video] [--no-normalize]
                                    [--media-root DIR] [--num-frames 8]
                                    [--config service.json]

A JSON config file may carry the same keys as the serve flags
(weights_dir, family, normalize, media_root, num_frames); flags win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .models import create_checkpoints
from .registry import RegistryConfig


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="encoder-service")
    sub = parser.add_subparsers(dest="command", required=True)

    p_init = sub.add_parser("init-weights", help="write seeded checkpoints to disk")
    p_init.add_argument("--out", required=True)
    p_init.add_argument("--seed", type=int, default=7)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--config", default=None, help="JSON config file")
    p_serve.add_argument("--weights", default=None)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8707)
    p_serve.add_argument("--family", default=None, choices=("audio", "video", "text"))
    p_serve.add_argument("--no-normalize", action="store_true")
    p_serve.add_argument("--media-root", default=None)
    p_serve.add_argument("--num-frames", type=int, default=None)

    args = parser.parse_args(argv)

    if args.command == "init-weights":
        out = create_checkpoints(args.out, seed=args.seed)
        print(f"wrote checkpoints to {out}")
        return 0

    file_config: dict = {}
    if args.config:
        file_config = json.loads(Path(args.config).read_text())
    weights = args.weights or file_config.get("weights_dir")
    if not weights:
        print("error: --weights (or weights_dir in --config) is required", file=sys.stderr)
        return 2
    config = RegistryConfig(
        weights_dir=weights,
        family=args.family or file_config.get("family", "video"),
        normalize=(not args.no_normalize) and file_config.get("normalize", True),
        media_root=args.media_root or file_config.get("media_root"),
        num_frames=args.num_frames or file_config.get("num_frames", 8),
    )

    import uvicorn

    from .app import create_app

    uvicorn.run(create_app(config), host=args.host, port=args.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())
