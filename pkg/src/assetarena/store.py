"""Durable append-only persistence for votes, registry manifests, and snapshots.

Log format (documented byte-level in docs/log-format.md):

* one record per line, UTF-8, LF terminated;
* each record is a JSON object with a ``kind`` field (model, prompt, asset,
  vote, flag) and alphabetically ordered keys, compact separators;
* timestamps are ISO-8601 UTC with exactly three fractional digits;
* a cleanly closed file ends with a trailer line ``#checksum <16 hex>``
  holding the first 8 bytes of the SHA-256 of every byte before the trailer.

Appending validates records against the state accumulated so far, so a log
that was written through this module always replays cleanly. Replay of the
same bytes always reconstructs the same state.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from .models import (
    AssetEntry,
    AssetFormat,
    ModelEntry,
    PromptEntry,
    Registry,
    Slot,
    UserRecord,
    VoteMode,
    VoteRecord,
    format_ts,
    parse_ts,
    validate_vote,
)

CHECKSUM_PREFIX = "#checksum "

Record = Union[ModelEntry, PromptEntry, AssetEntry, VoteRecord, "FlagRecord"]


class LogValidationError(ValueError):
    """A record failed domain validation at append or replay time."""


class ChecksumMismatchError(ValueError):
    """Trailer missing or not matching the file contents (explicit recovery required)."""


class UnknownKindError(ValueError):
    """A record line carries an unrecognized kind."""


@dataclass(frozen=True, slots=True)
class FlagRecord:
    """Fraud flag event; persisting flags keeps rating replays reproducible from the log."""

    user_id: str
    p_value: Optional[float]

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValueError("user_id must be non-empty")


def _checksum(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()[:16]


def encode_record(record: Record) -> str:
    """Canonical single-line JSON for one record (alphabetical keys, compact)."""
    if isinstance(record, ModelEntry):
        payload = {
            "anonymous": record.anonymous,
            "display_name": record.display_name,
            "format": record.format.value,
            "kind": "model",
            "model_id": record.model_id,
            "registered_at": format_ts(record.registered_at),
            "source_url": record.source_url,
            "textured": record.textured,
        }
    elif isinstance(record, PromptEntry):
        payload = {
            "description": record.description,
            "image_ref": record.image_ref,
            "kind": "prompt",
            "prompt_id": record.prompt_id,
        }
    elif isinstance(record, AssetEntry):
        payload = {
            "asset_id": record.asset_id,
            "file_ref": record.file_ref,
            "format": record.format.value,
            "kind": "asset",
            "model_id": record.model_id,
            "polygon_count": record.polygon_count,
            "prompt_id": record.prompt_id,
            "textured": record.textured,
        }
    elif isinstance(record, VoteRecord):
        payload = {
            "cast_at": format_ts(record.cast_at),
            "kind": "vote",
            "left_slot": record.left_slot.value,
            "mode": record.mode.value,
            "model_a": record.model_a,
            "model_b": record.model_b,
            "prompt_id": record.prompt_id,
            "user_id": record.user_id,
            "vote_id": record.vote_id,
            "winner": record.winner.value,
        }
    elif isinstance(record, FlagRecord):
        payload = {
            "kind": "flag",
            "p_value": record.p_value,
            "user_id": record.user_id,
        }
    else:
        raise TypeError(f"cannot encode {type(record).__name__}")
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def decode_record(line: str) -> Record:
    obj = json.loads(line)
    if not isinstance(obj, dict) or "kind" not in obj:
        raise UnknownKindError(f"record line has no kind: {line[:80]!r}")
    kind = obj["kind"]
    if kind == "model":
        return ModelEntry(
            model_id=obj["model_id"],
            display_name=obj["display_name"],
            format=AssetFormat(obj["format"]),
            textured=obj["textured"],
            anonymous=obj["anonymous"],
            registered_at=parse_ts(obj["registered_at"]),
            source_url=obj["source_url"],
        )
    if kind == "prompt":
        return PromptEntry(
            prompt_id=obj["prompt_id"],
            image_ref=obj["image_ref"],
            description=obj["description"],
        )
    if kind == "asset":
        return AssetEntry(
            asset_id=obj["asset_id"],
            model_id=obj["model_id"],
            prompt_id=obj["prompt_id"],
            format=AssetFormat(obj["format"]),
            polygon_count=obj["polygon_count"],
            file_ref=obj["file_ref"],
            textured=obj["textured"],
        )
    if kind == "vote":
        return VoteRecord(
            vote_id=obj["vote_id"],
            user_id=obj["user_id"],
            prompt_id=obj["prompt_id"],
            model_a=obj["model_a"],
            model_b=obj["model_b"],
            winner=Slot(obj["winner"]),
            left_slot=Slot(obj["left_slot"]),
            mode=VoteMode(obj["mode"]),
            cast_at=parse_ts(obj["cast_at"]),
        )
    if kind == "flag":
        return FlagRecord(user_id=obj["user_id"], p_value=obj["p_value"])
    raise UnknownKindError(f"unknown record kind {kind!r}")


@dataclass
class ArenaState:
    """Full in-memory state reconstructed from a log."""

    registry: Registry = field(default_factory=Registry)
    votes: list[VoteRecord] = field(default_factory=list)
    flags: dict[str, Optional[float]] = field(default_factory=dict)

    def apply(self, record: Record) -> None:
        if isinstance(record, ModelEntry):
            self.registry.add_model(record)
        elif isinstance(record, PromptEntry):
            self.registry.add_prompt(record)
        elif isinstance(record, AssetEntry):
            self.registry.add_asset(record)
        elif isinstance(record, VoteRecord):
            last = self.votes[-1].cast_at if self.votes else None
            rejection = validate_vote(record, self.registry, last)
            if rejection is not None:
                raise LogValidationError(f"vote {record.vote_id!r} rejected: {rejection.value}")
            self.votes.append(record)
        elif isinstance(record, FlagRecord):
            self.flags[record.user_id] = record.p_value
        else:
            raise TypeError(f"cannot apply {type(record).__name__}")

    def records(self) -> Iterable[Record]:
        """All records in a replayable order: registry first, then votes, then flags."""
        yield from self.registry.models.values()
        yield from self.registry.prompts.values()
        yield from self.registry.assets.values()
        yield from self.votes
        for user_id in self.flags:
            yield FlagRecord(user_id=user_id, p_value=self.flags[user_id])

    def flagged_users(self) -> frozenset[str]:
        return frozenset(self.flags)

    def users(self) -> dict[str, UserRecord]:
        """Per-user records derived from the vote log plus flag events."""
        first_seen: dict[str, VoteRecord] = {}
        counts: dict[str, int] = {}
        for vote in self.votes:
            counts[vote.user_id] = counts.get(vote.user_id, 0) + 1
            first_seen.setdefault(vote.user_id, vote)
        out = {}
        for user_id, first in first_seen.items():
            p = self.flags.get(user_id)
            out[user_id] = UserRecord(
                user_id=user_id,
                first_seen=first.cast_at,
                vote_count=counts[user_id],
                flagged=user_id in self.flags,
                flag_p_value=p,
            )
        return out

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ArenaState):
            return NotImplemented
        return (
            self.registry == other.registry
            and self.votes == other.votes
            and self.flags == other.flags
        )


@dataclass(frozen=True, slots=True)
class RecoveryReport:
    """What recovery dropped: complete records kept, trailing bytes discarded."""

    records_kept: int
    dropped_bytes: int
    dropped_reason: Optional[str]
    checksum_present: bool
    checksum_ok: bool


class VoteLog:
    """Single-writer append-only log file.

    Opening an existing file verifies and strips the checksum trailer (or
    recovers a valid prefix when ``recover=True``); appends are flushed to
    disk before returning; closing writes a fresh trailer.
    """

    def __init__(self, path: Union[str, Path], recover: bool = False, fsync: bool = True):
        self.path = Path(path)
        self._fsync = fsync
        self.state = ArenaState()
        self.last_recovery: Optional[RecoveryReport] = None
        existing = b""
        if self.path.exists():
            existing = self.path.read_bytes()
        records, body, report = _parse_bytes(existing, recover=recover)
        applied = 0
        for record in records:
            try:
                self.state.apply(record)
            except ValueError:
                if not recover:
                    raise
                break
            applied += 1
        if applied < len(records):
            # drop the invalid suffix; records re-encode to their exact original bytes
            body = b"".join(
                (encode_record(r) + "\n").encode("utf-8") for r in records[:applied]
            )
            report = RecoveryReport(
                records_kept=applied,
                dropped_bytes=len(existing) - len(body),
                dropped_reason="record failed domain validation",
                checksum_present=report.checksum_present,
                checksum_ok=report.checksum_ok,
            )
        self.last_recovery = report
        self._offset = applied
        # rewrite without the trailer so appends extend the record stream
        if body != existing:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.write_bytes(body)
        self._fh: IO[bytes] = open(self.path, "ab")

    def append(self, record: Record) -> int:
        """Validate, persist, and apply one record; returns its offset in the log."""
        if self._fh.closed:
            raise ValueError("log is closed")
        line = encode_record(record) + "\n"
        # apply() validates against current state and raises before any write
        self.state.apply(record)
        self._fh.write(line.encode("utf-8"))
        self._fh.flush()
        if self._fsync:
            os.fsync(self._fh.fileno())
        offset = self._offset
        self._offset += 1
        return offset

    def close(self) -> None:
        """Flush and write the checksum trailer."""
        if self._fh.closed:
            return
        self._fh.flush()
        self._fh.close()
        body = self.path.read_bytes()
        trailer = f"{CHECKSUM_PREFIX}{_checksum(body)}\n"
        with open(self.path, "ab") as fh:
            fh.write(trailer.encode("ascii"))
            fh.flush()
            os.fsync(fh.fileno())

    def __enter__(self) -> "VoteLog":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def _parse_bytes(data: bytes, recover: bool) -> tuple[list[Record], bytes, RecoveryReport]:
    """Decode log bytes into records plus the trailer-free body they came from.

    Strict mode (recover=False) demands a valid trailer and fully valid lines.
    Recovery keeps the longest valid record prefix and reports what fell off.
    """
    checksum_present = False
    checksum_ok = False
    body = data
    if data:
        # locate a trailer as the final complete line
        stripped = data[:-1] if data.endswith(b"\n") else data
        nl = stripped.rfind(b"\n")
        last_line = stripped[nl + 1:]
        if last_line.startswith(CHECKSUM_PREFIX.encode("ascii")) and data.endswith(b"\n"):
            checksum_present = True
            body = data[: nl + 1] if nl >= 0 else b""
            expected = last_line[len(CHECKSUM_PREFIX):].decode("ascii", "replace")
            checksum_ok = _checksum(body) == expected
        elif last_line.startswith(CHECKSUM_PREFIX.encode("ascii")):
            checksum_present = True  # trailer itself truncated
            body = data[: nl + 1] if nl >= 0 else b""

    if not recover:
        if data and not checksum_present:
            raise ChecksumMismatchError(
                "log has no checksum trailer (unclean close?); pass recover=True to read a prefix"
            )
        if checksum_present and not checksum_ok:
            raise ChecksumMismatchError("log checksum trailer does not match contents")

    records: list[Record] = []
    consumed = 0
    dropped_reason = None
    pos = 0
    while pos < len(body):
        nl = body.find(b"\n", pos)
        if nl < 0:
            dropped_reason = "partial trailing line"
            break
        line = body[pos:nl]
        try:
            record = decode_record(line.decode("utf-8"))
        except Exception as exc:
            if not recover:
                raise UnknownKindError(f"bad record at byte {pos}: {exc}") from exc
            dropped_reason = f"undecodable record at byte {pos}"
            break
        records.append(record)
        pos = nl + 1
        consumed = pos

    report = RecoveryReport(
        records_kept=len(records),
        dropped_bytes=len(body) - consumed,
        dropped_reason=dropped_reason,
        checksum_present=checksum_present,
        checksum_ok=checksum_ok,
    )
    return records, body[:consumed], report


def read_records(path: Union[str, Path], recover: bool = False) -> tuple[list[Record], RecoveryReport]:
    data = Path(path).read_bytes() if Path(path).exists() else b""
    records, _, report = _parse_bytes(data, recover=recover)
    return records, report


def replay(path: Union[str, Path], recover: bool = False) -> ArenaState:
    """Reconstruct full state from a log file.

    Requires a valid checksum trailer unless recovery is explicitly
    requested; recovery keeps the longest valid prefix. Records that fail
    domain validation stop recovery at that point (valid-prefix semantics).
    """
    records, _ = read_records(path, recover=recover)
    state = ArenaState()
    for record in records:
        try:
            state.apply(record)
        except ValueError:
            if recover:
                break
            raise
    return state


def write_log(path: Union[str, Path], records: Iterable[Record]) -> None:
    """Write a complete log in one pass (bulk path: one flush, one trailer)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    state = ArenaState()
    buf = bytearray()
    for record in records:
        state.apply(record)  # same validation as append()
        buf += (encode_record(record) + "\n").encode("utf-8")
    buf += f"{CHECKSUM_PREFIX}{_checksum(bytes(buf))}\n".encode("ascii")
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(bytes(buf))
        fh.flush()
        os.fsync(fh.fileno())
    os.replace(tmp, path)


def serialize_state(state: ArenaState, path: Union[str, Path]) -> None:
    """Serialize state to a fresh log; replaying it reconstructs an equal state."""
    write_log(path, state.records())


def snapshot_export(
    out_dir: Union[str, Path],
    state: ArenaState,
    snapshot,
    fraud_result=None,
    elo_config=None,
    bt_config=None,
    fraud_config=None,
) -> Path:
    """Emit a deterministic report bundle: leaderboard, ratings, fraud, manifest.

    Two exports of the same inputs produce byte-identical files; the manifest
    records the configuration (including the K-factor) and per-file digests.
    Returns the manifest path.
    """
    from dataclasses import asdict

    from .models import RatingState, leaderboard_row, sort_leaderboard
    from .rating import EloConfig

    elo_config = elo_config or EloConfig()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    rows = []
    for model in state.registry.models.values():
        rating = snapshot.ratings.get(
            model.model_id,
            RatingState(model_id=model.model_id, elo=elo_config.initial_rating),
        )
        rows.append(leaderboard_row(model, rating))
    rows = sort_leaderboard(rows)
    rank = 0
    row_payloads = []
    for row in rows:
        entry = asdict(row)
        entry["markers"] = list(row.markers)
        if row.public:
            rank += 1
            entry["rank"] = rank
        else:
            entry["rank"] = None
        row_payloads.append(json.dumps(entry, sort_keys=True, separators=(",", ":")))
    leaderboard_path = out / "leaderboard.jsonl"
    leaderboard_path.write_text("\n".join(row_payloads) + ("\n" if row_payloads else ""), "utf-8")

    ratings_path = out / "ratings.jsonl"
    ratings_path.write_text(snapshot.to_jsonl(), "utf-8")

    fraud_path = out / "fraud.jsonl"
    fraud_lines = []
    if fraud_result is not None:
        for user_id in sorted(fraud_result.reports):
            r = fraud_result.reports[user_id]
            fraud_lines.append(json.dumps(
                {
                    "agreements": r.agreements,
                    "flagged": r.flagged,
                    "null_p0": r.null_p0,
                    "p_value": r.p_value,
                    "scorable_votes": r.scorable_votes,
                    "user_id": r.user_id,
                },
                sort_keys=True,
                separators=(",", ":"),
            ))
    fraud_path.write_text("\n".join(fraud_lines) + ("\n" if fraud_lines else ""), "utf-8")

    manifest = {
        "config": {
            "elo": asdict(elo_config),
            "bt": asdict(bt_config) if bt_config is not None else None,
            "fraud": asdict(fraud_config) if fraud_config is not None else None,
        },
        "fingerprint": snapshot.config_fingerprint,
        "mode": snapshot.mode.value,
        "votes_processed": snapshot.vote_count_processed,
        "models": len(snapshot.ratings),
        "files": {
            p.name: hashlib.sha256(p.read_bytes()).hexdigest()
            for p in (leaderboard_path, ratings_path, fraud_path)
        },
    }
    manifest_path = out / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n", "utf-8")
    return manifest_path
