"""Append-only JSON-lines record store keyed by (config hash, seed).

Each line holds ``{"key", "seed", "config", "record", "digest"}`` serialized
canonically (sorted keys, no whitespace), so rerunning a cell reproduces
the same bytes.  ``digest`` covers config, seed and record and exposes
hand edits.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterator


def canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def config_hash(config: dict) -> str:
    return hashlib.sha256(canonical(config).encode()).hexdigest()[:16]


def _digest(config: dict, seed: int, record: dict) -> str:
    return hashlib.sha256(canonical({"config": config, "seed": seed, "record": record}).encode()).hexdigest()


def make_entry(config: dict, seed: int, record: dict) -> dict:
    return {"key": config_hash(config), "seed": seed, "config": config, "record": record, "digest": _digest(config, seed, record)}


class StoreError(Exception):
    """Unreadable store line; ``line`` is 1-based."""

    def __init__(self, path, line, reason):
        super().__init__(f"{path}:{line}: {reason}")
        self.path, self.line, self.reason = path, line, reason


class ResultStore:
    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    def entries(self) -> Iterator[dict]:
        if not self.path.exists():
            return
        with self.path.open() as fh:
            for i, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    e = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise StoreError(self.path, i, f"invalid JSON ({exc.msg})") from None
                if not isinstance(e, dict) or not {"key", "seed", "config", "record", "digest"} <= e.keys():
                    raise StoreError(self.path, i, "missing fields")
                yield e

    def get(self, config: dict, seed: int) -> dict | None:
        key = config_hash(config)
        for e in self.entries():
            if e["key"] == key and e["seed"] == seed:
                return e["record"]
        return None

    def append(self, config: dict, seed: int, record: dict) -> dict:
        """Add a record unless the same (config, seed) is already stored."""
        old = self.get(config, seed)
        if old is not None:
            return old
        entry = make_entry(config, seed, record)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        with self.path.open("a") as fh:
            fh.write(canonical(entry) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        return record

    def find(self, **match) -> list[dict]:
        """Entries whose config contains every ``match`` item."""
        return [e for e in self.entries() if all(e["config"].get(k) == v for k, v in match.items())]


@dataclass
class IntegrityReport:
    entries: int = 0
    problems: list = field(default_factory=list)
    rerun: int = 0

    @property
    def clean(self) -> bool:
        return not self.problems


def verify_store(path, rerun: int = 0, execute: Callable[[dict, int], dict] | None = None) -> IntegrityReport:
    """Recompute hashes and digests; re-execute the first ``rerun`` entries with ``execute``."""
    rep = IntegrityReport()
    store = ResultStore(path)
    seen: dict = {}
    lines = []
    try:
        for e in store.entries():
            lines.append(e)
    except StoreError as exc:
        rep.problems.append({"line": exc.line, "problem": exc.reason})
    for i, e in enumerate(lines):
        rep.entries += 1
        where = {"entry": i + 1, "key": e["key"], "seed": e["seed"]}
        if config_hash(e["config"]) != e["key"]:
            rep.problems.append({**where, "problem": "config hash mismatch"})
        if _digest(e["config"], e["seed"], e["record"]) != e["digest"]:
            rep.problems.append({**where, "problem": "record digest mismatch"})
        k = (e["key"], e["seed"])
        if k in seen and seen[k] != e["digest"]:
            rep.problems.append({**where, "problem": "conflicting duplicate"})
        seen[k] = e["digest"]
    if execute is not None:
        for e in lines[:rerun]:
            rep.rerun += 1
            if canonical(execute(e["config"], e["seed"])) != canonical(e["record"]):
                rep.problems.append({"key": e["key"], "seed": e["seed"], "problem": "re-execution diverges"})
    return rep
