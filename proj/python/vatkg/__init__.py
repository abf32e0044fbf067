"""Python bindings for the vatkg knowledge-graph builder and retriever."""

import json
import os

from ._vatkg import (
    FlatIndex,
    VatkgError,
    audio_text_filter,
    build_index,
    load_index,
    mock_embed,
    parse_candidate_triplets,
    run_cli,
    triplet_id,
    video_text_percentile_filter,
    voice_over_filter,
)

__all__ = [
    "CliError", "FlatIndex", "VatkgError", "audio_text_filter", "build", "build_index", "inspect_triplet",
    "load_index", "mock_embed", "parse_candidate_triplets", "query", "run_cli", "stats", "triplet_id",
    "video_text_percentile_filter", "voice_over_filter",
]


class CliError(RuntimeError):
    """A command exited non-zero; .exit_code holds the process exit code."""

    def __init__(self, exit_code, message):
        super().__init__(message.strip())
        self.exit_code = exit_code


def _global_args(config, mock_clients):
    args = []
    if config is not None:
        args += ["--config", os.fspath(config)]
    if mock_clients:
        args.append("--mock-clients")
    return args


def _run(args, stdin=""):
    code, out, err = run_cli([str(a) for a in args], stdin)
    if code != 0:
        raise CliError(code, err)
    return json.loads(out)


def build(manifest, out_dir, config=None, mock_clients=False):
    """Runs the construction pipeline and writes graph, indexes and stage report."""
    return _run(_global_args(config, mock_clients) + ["build", "--manifest", manifest, "--out", out_dir])


def query(out_dir, request, config=None, mock_clients=False, dry_run=False):
    """Answers a request dict ({"question", "modality", ...}) against a build."""
    args = _global_args(config, mock_clients) + ["query", "--out", out_dir]
    if dry_run:
        args.append("--dry-run")
    return _run(args, json.dumps(request))


def stats(out_dir):
    return _run(["stats", "--out", out_dir])


def inspect_triplet(out_dir, triplet):
    return _run(["inspect-triplet", "--out", out_dir, "--id", triplet])
