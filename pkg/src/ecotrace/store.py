"""Append-only run store.

Records live in <root>/runs.jsonl, one canonical JSON object per line,
human-diffable and safe to append to: a crash mid-write can at worst
leave a partial final line, which the loader discards, never touching
prior records. Optional raw traces go to <root>/traces/<id>.csv and
configuration to <root>/config.toml. The root defaults to ~/.ecotrace
and is overridden by the ECOTRACE_HOME environment variable or the
--home flag.

Writers take an advisory lock on the store directory; readers never
block.
"""

from __future__ import annotations

import dataclasses
import json
import os
import sys
import warnings
from pathlib import Path
from typing import Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ecotrace import fixtures
from ecotrace.analytics import RunRecord, consistency_check
from ecotrace.errors import DuplicateId, InvalidRecord, IoFailure, ZeroEnergy

ENV_HOME = "ECOTRACE_HOME"
_RUNS_FILE = "runs.jsonl"
_CONFIG_FILE = "config.toml"
_LOCK_FILE = ".lock"
SCHEMA_VERSION = 1

# Serialized field order is fixed for cross-tool compatibility.
_FIELD_ORDER = [
    "id", "label", "architecture", "lang_pair", "phase", "precision",
    "gpu_model", "n_gpus", "elapsed_h", "kwh", "avg_power_w", "region",
    "steps", "audit",
]

AUDIT_THRESHOLD = 0.05


def default_root() -> Path:
    env = os.environ.get(ENV_HOME)
    if env:
        return Path(env)
    return Path.home() / ".ecotrace"


def record_to_json(record: RunRecord) -> str:
    """Canonical one-line serialization; optional fields omitted when unset."""
    data = dataclasses.asdict(record)
    ordered = {
        name: data[name]
        for name in _FIELD_ORDER
        if data.get(name) is not None
    }
    return json.dumps(ordered, separators=(", ", ": "), ensure_ascii=False)


def record_from_json(text: str) -> RunRecord:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise IoFailure(f"corrupt record line: {exc}") from exc
    unknown = set(data) - set(_FIELD_ORDER)
    if unknown:
        raise IoFailure(f"record has unknown fields: {sorted(unknown)}")
    try:
        return RunRecord(**data).validate()
    except (TypeError, InvalidRecord) as exc:
        raise IoFailure(f"record failed validation on load: {exc}") from exc


class _DirLock:
    """Advisory writer lock on the store directory (flock on POSIX)."""

    def __init__(self, root: Path):
        self._path = root / _LOCK_FILE
        self._handle = None

    def __enter__(self):
        self._handle = open(self._path, "a+")
        try:
            import fcntl

            fcntl.flock(self._handle.fileno(), fcntl.LOCK_EX)
        except ImportError:
            pass
        return self

    def __exit__(self, *exc_info):
        try:
            import fcntl

            fcntl.flock(self._handle.fileno(), fcntl.LOCK_UN)
        except ImportError:
            pass
        self._handle.close()
        self._handle = None


class RunStore:
    """Record collection rooted at a directory, keyed by unique id."""

    def __init__(self, root: Optional[Path] = None):
        self.root = Path(root) if root is not None else default_root()
        try:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / "traces").mkdir(exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create store root {self.root}: {exc}") from exc
        config = self.root / _CONFIG_FILE
        if not config.exists():
            config.write_text(
                f"[store]\nschema_version = {SCHEMA_VERSION}\n", encoding="utf-8"
            )

    @property
    def runs_path(self) -> Path:
        return self.root / _RUNS_FILE

    def trace_path(self, record_id: str) -> Path:
        return self.root / "traces" / f"{record_id}.csv"

    def config(self) -> dict:
        """Parsed config.toml (intensity overrides live under [intensity])."""
        path = self.root / _CONFIG_FILE
        if not path.exists():
            return {}
        try:
            with path.open("rb") as handle:
                return tomllib.load(handle)
        except tomllib.TOMLDecodeError as exc:
            raise IoFailure(f"{path}: {exc}") from exc

    def records(self) -> dict[str, RunRecord]:
        """All records by id. Tolerates only a torn final line."""
        path = self.runs_path
        if not path.exists():
            return {}
        by_id: dict[str, RunRecord] = {}
        raw = path.read_text(encoding="utf-8")
        lines = raw.split("\n")
        complete, trailer = lines[:-1], lines[-1]
        for line_no, line in enumerate(complete, 1):
            if not line.strip():
                continue
            try:
                record = record_from_json(line)
            except IoFailure as exc:
                raise IoFailure(f"{path}:{line_no}: {exc}") from exc
            if record.id in by_id:
                raise IoFailure(f"{path}:{line_no}: duplicate id {record.id!r}")
            by_id[record.id] = record
        if trailer.strip():
            # No trailing newline: interrupted append, drop the residue.
            warnings.warn(
                f"{path}: discarding torn trailing record ({len(trailer)} bytes)",
                stacklevel=2,
            )
        return by_id

    def save(self, record: RunRecord) -> str:
        """Append one validated record durably; returns its id."""
        record.validate()
        with _DirLock(self.root):
            if record.id in self.records():
                raise DuplicateId(record.id)
            self._append_lines([record_to_json(record)])
        return record.id

    def save_many(self, records: list[RunRecord]) -> int:
        """Append a batch atomically with respect to duplicate checking."""
        for record in records:
            record.validate()
        ids = [r.id for r in records]
        if len(set(ids)) != len(ids):
            raise DuplicateId([i for i in ids if ids.count(i) > 1])
        with _DirLock(self.root):
            existing = self.records()
            clashes = [i for i in ids if i in existing]
            if clashes:
                raise DuplicateId(clashes)
            self._append_lines([record_to_json(r) for r in records])
        return len(records)

    def _append_lines(self, lines: list[str]) -> None:
        try:
            with self.runs_path.open("a", encoding="utf-8") as handle:
                handle.write("".join(line + "\n" for line in lines))
                handle.flush()
                os.fsync(handle.fileno())
        except OSError as exc:
            raise IoFailure(f"cannot append to {self.runs_path}: {exc}") from exc

    def get(self, record_id: str) -> RunRecord:
        try:
            return self.records()[record_id]
        except KeyError:
            raise InvalidRecord(f"no record with id {record_id!r}") from None

    def query(
        self,
        architecture: Optional[str] = None,
        phase: Optional[str] = None,
        gpu_model: Optional[str] = None,
        lang_pair: Optional[str] = None,
        precision: Optional[str] = None,
    ) -> list[RunRecord]:
        """Conjunctive filter over all records, ordered by id."""
        wanted = {
            "architecture": architecture,
            "phase": phase,
            "gpu_model": gpu_model,
            "lang_pair": lang_pair,
            "precision": precision,
        }
        results = [
            record
            for record in self.records().values()
            if all(
                value is None or getattr(record, field) == value
                for field, value in wanted.items()
            )
        ]
        results.sort(key=lambda r: r.id)
        return results

    def import_fixtures(self) -> int:
        """Load the bundled reference dataset; returns the record count.

        Every record is audited against its own average power and
        duration; rows that deviate beyond 5% are imported unaltered
        but carry an explicit audit annotation. Re-importing raises
        DuplicateId and leaves the store unchanged.
        """
        annotated = []
        for record in fixtures.fixture_records():
            try:
                check = consistency_check(record, AUDIT_THRESHOLD)
            except ZeroEnergy:
                check = None
            if check is not None and not check.ok:
                record = dataclasses.replace(
                    record,
                    audit=(
                        f"reported kwh deviates {check.relative_error:.1%} from "
                        f"avg_power_w x n_gpus x elapsed_h "
                        f"(implied {check.implied_kwh:.2f} kWh, "
                        f"threshold {AUDIT_THRESHOLD:.0%})"
                    ),
                )
            annotated.append(record)
        return self.save_many(annotated)
