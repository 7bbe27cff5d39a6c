"""Workspace layout and stage-level content caching.

A workspace is a directory tree (data/, checkpoints/, banks/, reports/)
plus an index (workspace.json) recording, per pipeline stage, the hash of
everything the stage consumed and the hashes of every file it produced.
A stage is skipped when both sides still match, which makes reruns cheap
and the index hash a fingerprint of the whole artifact.
"""
from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

from .config import PipelineConfig, config_from_dict

INDEX_NAME = "workspace.json"
FORMAT_VERSION = 1


class WorkspaceError(RuntimeError):
    pass


def file_sha256(path: str | os.PathLike) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def doc_sha256(doc) -> str:
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


class Workspace:
    def __init__(self, root: str | os.PathLike, config: PipelineConfig | None = None):
        self.root = Path(root)
        index_path = self.root / INDEX_NAME
        if index_path.exists():
            with open(index_path) as fh:
                self.index = json.load(fh)
            if self.index.get("format_version") != FORMAT_VERSION:
                raise WorkspaceError(f"unsupported workspace version at {root}")
            stored = config_from_dict(self.index["config"])
            if config is not None and config.to_dict() != stored.to_dict():
                self.index["config"] = config.to_dict()
                self.config = config
            else:
                self.config = stored
        else:
            if config is None:
                raise WorkspaceError(f"no workspace at {root} and no config given")
            self.config = config
            self.index = {
                "format_version": FORMAT_VERSION,
                "config": config.to_dict(),
                "stages": {},
            }
        for sub in ("data", "checkpoints", "banks", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- paths ----------------------------------------------------------
    @property
    def data_dir(self) -> Path:
        return self.root / "data"

    def path(self, rel: str) -> Path:
        return self.root / rel

    # -- index ----------------------------------------------------------
    def save_index(self) -> None:
        with open(self.root / INDEX_NAME, "w") as fh:
            json.dump(self.index, fh, sort_keys=True, indent=1)

    def index_hash(self) -> str:
        return doc_sha256(self.index)

    def record_stage(self, name: str, inputs_hash: str, outputs: list[str]) -> None:
        self.index["stages"][name] = {
            "inputs_hash": inputs_hash,
            "outputs": {rel: file_sha256(self.root / rel) for rel in sorted(outputs)},
        }
        self.save_index()

    def stage_is_current(self, name: str, inputs_hash: str) -> bool:
        rec = self.index["stages"].get(name)
        if rec is None or rec["inputs_hash"] != inputs_hash:
            return False
        for rel, digest in rec["outputs"].items():
            p = self.root / rel
            if not p.exists() or file_sha256(p) != digest:
                return False
        return True

    def stage_outputs_hash(self, name: str) -> str:
        rec = self.index["stages"].get(name)
        if rec is None:
            raise WorkspaceError(f"stage {name!r} has not run")
        return doc_sha256(rec["outputs"])

    def require_stage(self, name: str) -> None:
        if name not in self.index["stages"]:
            raise WorkspaceError(
                f"stage {name!r} has not run in workspace {self.root}; "
                "run the pipeline (or the corresponding command) first")
