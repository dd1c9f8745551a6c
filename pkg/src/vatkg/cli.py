"""Operator entry point: build the graph, query it, report statistics.

stdout carries machine-readable JSON only; diagnostics go to stderr.
Exit codes: 0 success, 2 configuration, 3 manifest, 4 client, 5 I/O.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .clients import (
    ClientBundle,
    FixtureKb,
    HttpEncoderClient,
    HttpLlmClient,
    LiveKb,
    mock_bundle,
)
from .config import CliConfig, ConfigError, apply_overrides, load_cli_config
from .errors import (
    BadMagicError,
    BadStatusError,
    ChecksumMismatchError,
    EmptyCompletionError,
    EncoderUnavailableError,
    InvariantViolationOnLoadError,
    LlmUnavailableError,
    ManifestParseError,
    SchemaError,
    SchemaVersionMismatchError,
    StorageError,
    UnknownModalityError,
    UnreachableError,
    UnscriptedPromptError,
    VatkgError,
)
from .graph import graph_stats, load_graph, save_graph, triplet_to_sentence
from .index import load_index, save_index
from .pipeline import load_stage_reports, run_pipeline, save_stage_reports
from .rag import QueryRequest, answer
from .report import render_stats_report

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_MANIFEST = 3
EXIT_CLIENT = 4
EXIT_IO = 5

GRAPH_FILE = "graph.json"
REPORTS_FILE = "stage_reports.json"
INDEX_FILES = {
    "audio": "index_audio.vkgidx",
    "video": "index_video.vkgidx",
    "text": "index_text.vkgidx",
    "joint": "index_joint.vkgidx",
}

_CLIENT_ERRORS = (
    UnreachableError,
    BadStatusError,
    SchemaError,
    LlmUnavailableError,
    EncoderUnavailableError,
    UnscriptedPromptError,
    EmptyCompletionError,
)
_IO_ERRORS = (
    StorageError,
    BadMagicError,
    ChecksumMismatchError,
    SchemaVersionMismatchError,
    InvariantViolationOnLoadError,
    OSError,
)


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _emit(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=True))


def _load_config(args: argparse.Namespace) -> CliConfig:
    config = load_cli_config(args.config)
    overrides: dict[str, str] = {}
    if getattr(args, "top_k", None) is not None:
        overrides["rag.top_k"] = str(args.top_k)
    if getattr(args, "l2_threshold", None) is not None:
        overrides["rag.l2_threshold"] = str(args.l2_threshold)
    if getattr(args, "checker_min_cos", None) is not None:
        overrides["rag.checker_min_cos"] = str(args.checker_min_cos)
    if overrides:
        apply_overrides(config, overrides)
    if getattr(args, "encoder_url", None):
        config.encoder_audio_url = config.encoder_audio_url or args.encoder_url
        config.encoder_video_url = config.encoder_video_url or args.encoder_url
    if getattr(args, "llm_url", None):
        config.llm_url = args.llm_url
    return config


def _build_clients(args: argparse.Namespace, config: CliConfig) -> ClientBundle:
    if args.mock_clients:
        bundle = mock_bundle()
        if getattr(args, "kb_fixtures", None):
            bundle.kb = FixtureKb(args.kb_fixtures)
        return bundle
    if not config.encoder_audio_url or not config.encoder_video_url or not config.llm_url:
        raise ConfigError(
            "live mode needs --encoder-url and --llm-url (or config equivalents); "
            "pass --mock-clients to run offline"
        )
    audio = HttpEncoderClient(config.encoder_audio_url)
    video = HttpEncoderClient(config.encoder_video_url)
    text = HttpEncoderClient(config.encoder_text_url) if config.encoder_text_url else video
    llm = HttpLlmClient(config.llm_url)
    kb = FixtureKb(args.kb_fixtures) if getattr(args, "kb_fixtures", None) else LiveKb()
    return ClientBundle(
        audio_encoder=audio, video_encoder=video, text_encoder=text, llm=llm, kb=kb
    )


def _load_artifacts(out_dir: Path):
    graph = load_graph(out_dir / GRAPH_FILE)
    indexes = {name: load_index(out_dir / fname) for name, fname in INDEX_FILES.items()}
    return graph, indexes


def cmd_build(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        clients = _build_clients(args, config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    manifest = Path(args.manifest)
    if not manifest.exists():
        return _fail(EXIT_MANIFEST, f"manifest not found: {manifest}")
    try:
        result = run_pipeline(manifest, config.pipeline, clients)
    except ManifestParseError as exc:
        return _fail(EXIT_MANIFEST, str(exc))
    except _CLIENT_ERRORS as exc:
        return _fail(EXIT_CLIENT, str(exc))
    except VatkgError as exc:
        return _fail(EXIT_IO, str(exc))
    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        save_graph(result.graph, out_dir / GRAPH_FILE)
        save_stage_reports(result.reports, out_dir / REPORTS_FILE)
        for name, fname in INDEX_FILES.items():
            save_index(result.indexes[name], out_dir / fname)
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))
    summary = {
        "out_dir": str(out_dir),
        "samples": len(result.graph.samples),
        "concepts": len(result.graph.concepts),
        "triplets": len(result.graph.triplets),
        "stages": [
            {
                "stage": r.stage.value,
                "input": r.input_count,
                "kept": r.kept_count,
                "dropped": len(r.dropped_ids),
            }
            for r in result.reports
        ],
    }
    _emit(summary)
    return EXIT_OK


def cmd_query(args: argparse.Namespace) -> int:
    try:
        config = _load_config(args)
        clients = _build_clients(args, config)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, str(exc))
    out_dir = Path(args.out)
    try:
        graph, indexes = _load_artifacts(out_dir)
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))
    try:
        if args.request == "-":
            raw = sys.stdin.read()
        else:
            raw = Path(args.request).read_text(encoding="utf-8")
        request_doc = json.loads(raw)
    except OSError as exc:
        return _fail(EXIT_IO, f"cannot read request: {exc}")
    except json.JSONDecodeError as exc:
        return _fail(EXIT_CONFIG, f"request is not valid JSON: {exc}")
    rag_config = config.rag
    if isinstance(request_doc, dict) and isinstance(request_doc.get("config"), dict):
        inline = {f"rag.{k}": str(v) for k, v in request_doc["config"].items()}
        try:
            apply_overrides(config, inline)
        except ConfigError as exc:
            return _fail(EXIT_CONFIG, str(exc))
        rag_config = config.rag
    try:
        request = QueryRequest.from_json_doc(request_doc)
    except (UnknownModalityError, VatkgError) as exc:
        return _fail(EXIT_CONFIG, f"bad query request: {exc}")
    try:
        result = answer(
            request, indexes, graph, clients, rag_config, dry_run=args.dry_run
        )
    except _CLIENT_ERRORS as exc:
        return _fail(EXIT_CLIENT, str(exc))
    except VatkgError as exc:
        return _fail(EXIT_IO, str(exc))
    _emit(result.bundle.to_json_doc() if args.dry_run else result.to_json_doc())
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    try:
        graph = load_graph(out_dir / GRAPH_FILE)
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))
    stats = graph_stats(graph)
    doc = stats.to_json_doc()
    reports_path = out_dir / REPORTS_FILE
    if reports_path.exists():
        try:
            reports = load_stage_reports(reports_path)
        except _IO_ERRORS as exc:
            return _fail(EXIT_IO, str(exc))
        doc["stages"] = [
            {
                "stage": r.stage.value,
                "input": r.input_count,
                "kept": r.kept_count,
                "dropped_ids": list(r.dropped_ids),
            }
            for r in reports
        ]
    if args.report_dir:
        try:
            written = render_stats_report(stats, args.report_dir)
        except OSError as exc:
            return _fail(EXIT_IO, f"cannot render report: {exc}")
        doc["report_files"] = [str(p) for p in written]
    _emit(doc)
    return EXIT_OK


def cmd_inspect_triplet(args: argparse.Namespace) -> int:
    out_dir = Path(args.out)
    try:
        graph = load_graph(out_dir / GRAPH_FILE)
    except _IO_ERRORS as exc:
        return _fail(EXIT_IO, str(exc))
    triplet = graph.triplets_by_id.get(args.id)
    if triplet is None:
        return _fail(EXIT_CONFIG, f"unknown triplet id {args.id!r}")
    head = graph.concepts[triplet.head]
    tail = graph.concepts[triplet.tail]
    sample = graph.samples[triplet.sample_id]
    _emit(
        {
            "triplet_id": triplet.triplet_id,
            "head": triplet.head,
            "relation": triplet.relation,
            "tail": triplet.tail,
            "sentence": triplet_to_sentence(triplet),
            "sample": {
                "id": sample.id,
                "video_uri": sample.video_uri,
                "audio_uri": sample.audio_uri,
                "caption": sample.caption,
            },
            "head_description": head.candidates[triplet.head_desc_idx].text,
            "tail_description": tail.candidates[triplet.tail_desc_idx].text,
        }
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vatkg",
        description="Build and query a concept-centric multimodal knowledge graph.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def _common_client_flags(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", default=None, help="key=value config file")
        p.add_argument("--mock-clients", action="store_true", help="run with offline mocks")
        p.add_argument("--encoder-url", default=None, help="encoder service base URL")
        p.add_argument("--llm-url", default=None, help="LLM service base URL")
        p.add_argument(
            "--kb-fixtures", default=None, help="directory of KB fixture JSON files"
        )

    p_build = sub.add_parser("build", help="run the construction pipeline")
    p_build.add_argument("--manifest", required=True, help="JSON-Lines corpus manifest")
    p_build.add_argument("--out", required=True, help="output directory for artifacts")
    _common_client_flags(p_build)
    p_build.set_defaults(func=cmd_build)

    p_query = sub.add_parser("query", help="answer a query over built artifacts")
    p_query.add_argument("--out", required=True, help="directory of build artifacts")
    p_query.add_argument(
        "--request", required=True, help="query request JSON file, or - for stdin"
    )
    p_query.add_argument("--top-k", type=int, default=None)
    p_query.add_argument("--l2-threshold", type=float, default=None)
    p_query.add_argument("--checker-min-cos", type=float, default=None)
    p_query.add_argument(
        "--dry-run", action="store_true", help="stop after prompt assembly"
    )
    _common_client_flags(p_query)
    p_query.set_defaults(func=cmd_query)

    p_stats = sub.add_parser("stats", help="print graph statistics")
    p_stats.add_argument("--out", required=True, help="directory of build artifacts")
    p_stats.add_argument(
        "--report-dir", default=None, help="also render figures and CSVs here"
    )
    p_stats.set_defaults(func=cmd_stats)

    p_inspect = sub.add_parser("inspect-triplet", help="show one triplet in detail")
    p_inspect.add_argument("--out", required=True, help="directory of build artifacts")
    p_inspect.add_argument("--id", required=True, help="triplet id")
    p_inspect.set_defaults(func=cmd_inspect_triplet)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
