"""Append-only JSONL trajectory memory with embedding retrieval."""

from __future__ import annotations

import json
import logging
import os
import threading
from pathlib import Path
from typing import Iterator, Sequence

from .domain import Trajectory
from .errors import DimensionMismatch, StorageFailure
from .index import EmbeddingIndex, EmbeddingVector, as_vector

log = logging.getLogger(__name__)

STORE_FILENAME = "trajectories.jsonl"


def _resolve(path: str | os.PathLike) -> Path:
    p = Path(path)
    if p.suffix != ".jsonl":
        p = p / STORE_FILENAME
    return p


def _read_records(path: Path) -> tuple[list[Trajectory], int]:
    """Parse the store file. Returns records and the byte length of the valid prefix."""
    if not path.exists():
        return [], 0
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise StorageFailure(f"cannot read {path}: {exc}") from exc
    records: list[Trajectory] = []
    offset = 0
    lines = raw.split(b"\n")
    for lineno, line in enumerate(lines, 1):
        is_last = lineno == len(lines)
        if is_last and not line:
            break
        try:
            records.append(Trajectory.from_dict(json.loads(line.decode("utf-8"))))
        except (ValueError, KeyError, TypeError) as exc:
            # An unterminated final line is a torn write; anything earlier is corruption.
            if is_last:
                log.warning("skipping truncated final record at %s line %d", path, lineno)
                break
            raise StorageFailure(f"{path} line {lineno}: corrupt record ({exc})") from exc
        offset += len(line) + (0 if is_last else 1)
    return records, offset


class TrajectoryStore:
    """Trajectory memory backed by one JSONL file.

    One writer appends; readers see the snapshot loaded at open time or at
    the last ``refresh()``. Only records carrying an embedding are indexed.
    """

    def __init__(self, path: str | os.PathLike, dim: int | None = None):
        self.path = _resolve(path)
        self._dim = dim
        self._write_lock = threading.Lock()
        self.refresh()

    @classmethod
    def open(cls, path: str | os.PathLike, dim: int | None = None) -> TrajectoryStore:
        return cls(path, dim=dim)

    def refresh(self) -> None:
        records, valid_bytes = _read_records(self.path)
        index = EmbeddingIndex(self._dim)
        for pos, rec in enumerate(records):
            if rec.embedding is not None:
                try:
                    index.add(str(pos), rec.embedding)
                except DimensionMismatch as exc:
                    raise StorageFailure(f"{self.path}: record {pos}: {exc}") from exc
        self._records = records
        self._index = index
        self._valid_bytes = valid_bytes

    # -- reads --

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[Trajectory]:
        return iter(list(self._records))

    @property
    def records(self) -> list[Trajectory]:
        return list(self._records)

    @property
    def dim(self) -> int | None:
        return self._index.dim

    @property
    def index_size(self) -> int:
        return len(self._index)

    def retrieve(
        self,
        query: EmbeddingVector | Sequence[float],
        k: int,
        min_verifier_score: float | None = None,
    ) -> list[Trajectory]:
        """Top-k trajectories by cosine similarity of their stored embeddings.

        ``min_verifier_score`` optionally restricts retrieval to records whose
        verifier score meets the threshold; records without one are excluded.
        """
        if not len(self._index):
            return []
        keys = None
        if min_verifier_score is not None:
            keys = {
                str(pos)
                for pos, rec in enumerate(self._records)
                if rec.embedding is not None and rec.verifier is not None and rec.verifier >= min_verifier_score
            }
            if not keys:
                return []
        hits = self._index.search(as_vector(query), k, keys=keys)
        return [self._records[int(key)] for key, _ in hits]

    # -- writes --

    def append(self, t: Trajectory) -> TrajectoryStore:
        """Durably persist one trajectory, then index it.

        A rejected or failed write leaves both the file and the in-memory
        state as they were.
        """
        with self._write_lock:
            vector = self._index.check(t.embedding) if t.embedding is not None else None
            line = (json.dumps(t.to_dict(), ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")
            try:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "r+b" if self.path.exists() else "wb") as fh:
                    # Drop a torn tail left by an earlier crash before appending.
                    fh.truncate(self._valid_bytes)
                    if self._valid_bytes:
                        fh.seek(self._valid_bytes - 1)
                        if fh.read(1) != b"\n":
                            # Complete final record written without its newline.
                            fh.write(b"\n")
                            self._valid_bytes += 1
                    fh.seek(self._valid_bytes)
                    try:
                        fh.write(line)
                        fh.flush()
                        os.fsync(fh.fileno())
                    except OSError:
                        fh.truncate(self._valid_bytes)
                        raise
            except OSError as exc:
                raise StorageFailure(f"cannot append to {self.path}: {exc}") from exc
            pos = len(self._records)
            if vector is not None:
                self._index.add(str(pos), vector)
            self._records.append(t)
            self._valid_bytes += len(line)
        return self
