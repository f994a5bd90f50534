"""Versioned JSON artifacts.

Every persisted object is a single JSON document with ``format`` and
``version`` keys.  Output is canonical (sorted keys, fixed separators) so the
same object always serializes to the same bytes.
"""

import json
from pathlib import Path

from .errors import ArtifactVersionError, MissingArtifact


def dumps_artifact(kind: str, version: int, payload: dict) -> str:
    doc = {"format": kind, "version": version, **payload}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False) + "\n"


def loads_artifact(text: str, kind: str, version: int) -> dict:
    doc = json.loads(text)
    if not isinstance(doc, dict) or doc.get("format") != kind:
        raise ArtifactVersionError(f"expected a {kind!r} artifact, got format {doc.get('format')!r}")
    if doc.get("version") != version:
        raise ArtifactVersionError(
            f"{kind} artifact has format version {doc.get('version')!r}; this build reads version {version}"
        )
    return doc


def write_artifact(path, kind: str, version: int, payload: dict) -> None:
    Path(path).write_text(dumps_artifact(kind, version, payload), encoding="utf-8")


def read_artifact(path, kind: str, version: int) -> dict:
    path = Path(path)
    if not path.exists():
        raise MissingArtifact(f"missing artifact: {path}")
    return loads_artifact(path.read_text(encoding="utf-8"), kind, version)
