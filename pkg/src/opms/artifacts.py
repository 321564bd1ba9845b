"""File artifact helpers: canonical JSON, atomic writes, type dispatch.

Artifact bodies never contain wall-clock state, so re-running a command
with identical inputs and seeds rewrites byte-identical files.
"""
from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

FORMAT_VERSION = 1

ARTIFACT_EVAL = "eval"
ARTIFACT_EXPLANATION = "explanation"
ARTIFACT_FEATURESET = "featureset"
ARTIFACT_MODEL = "model"
ARTIFACT_RANKING = "ranking"
ARTIFACT_RESILIENCE = "resilience"
ARTIFACT_TIMING = "timing"


def atomic_write_text(path: str | Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(doc: dict, path: str | Path, artifact: str | None = None) -> None:
    body = dict(doc)
    if artifact is not None:
        body["artifact"] = artifact
    body.setdefault("format_version", FORMAT_VERSION)
    atomic_write_text(path, json.dumps(body, sort_keys=True, indent=2) + "\n")


def load_json(path: str | Path) -> dict:
    with Path(path).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def scan_artifacts(directory: str | Path, artifact: str) -> list[tuple[Path, dict]]:
    """All JSON artifacts of one type under a directory, sorted by filename."""
    out = []
    for path in sorted(Path(directory).glob("*.json")):
        try:
            doc = load_json(path)
        except (json.JSONDecodeError, OSError):
            continue
        if isinstance(doc, dict) and doc.get("artifact") == artifact:
            out.append((path, doc))
    return out
