"""Shared domain types for the arena: models, prompts, assets, votes, users, ratings.

All entry types are immutable value objects validated at construction.
Timestamps are timezone-aware UTC with millisecond precision so that log
serialization round-trips bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Optional


class AssetFormat(str, Enum):
    MESH = "mesh"
    SPLAT = "splat"


class VoteMode(str, Enum):
    STANDARD = "standard"
    TOPOLOGY = "topology"


class Slot(str, Enum):
    A = "a"
    B = "b"


class Rejection(str, Enum):
    """Reasons a vote can be rejected against a registry snapshot."""

    UNKNOWN_MODEL = "unknown-model"
    UNKNOWN_PROMPT = "unknown-prompt"
    SELF_COMPARISON = "self-comparison"
    MISSING_ASSET = "missing-asset"
    BAD_TIMESTAMP = "bad-timestamp"


EXCLUDED_FROM_PUBLIC = "excluded-from-public"


def _require_utc_ms(ts: datetime, what: str) -> None:
    if ts.tzinfo is None or ts.utcoffset() != timezone.utc.utcoffset(None):
        raise ValueError(f"{what} must be timezone-aware UTC, got {ts!r}")
    if ts.microsecond % 1000 != 0:
        raise ValueError(f"{what} must have millisecond precision, got {ts!r}")


def utc_now_ms() -> datetime:
    """Current UTC time truncated to millisecond precision."""
    now = datetime.now(timezone.utc)
    return now.replace(microsecond=(now.microsecond // 1000) * 1000)


def format_ts(ts: datetime) -> str:
    """Serialize a UTC timestamp as ISO-8601 with exactly three fractional digits."""
    _require_utc_ms(ts, "timestamp")
    return ts.strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def parse_ts(text: str) -> datetime:
    """Parse an ISO-8601 UTC timestamp produced by :func:`format_ts`."""
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    ts = datetime.fromisoformat(text)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp {text!r} is not timezone-aware")
    ts = ts.astimezone(timezone.utc)
    _require_utc_ms(ts, "timestamp")
    return ts


@dataclass(frozen=True, slots=True)
class ModelEntry:
    """A registered generation system.

    Anonymous entries stay in the rating pool but are excluded from public
    leaderboard output; non-anonymous entries must carry a source URL.
    """

    model_id: str
    display_name: str
    format: AssetFormat
    textured: bool
    anonymous: bool
    registered_at: datetime
    source_url: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.model_id:
            raise ValueError("model_id must be non-empty")
        if not self.anonymous and not self.source_url:
            raise ValueError(f"model {self.model_id!r}: non-anonymous entries require source_url")
        _require_utc_ms(self.registered_at, "registered_at")


@dataclass(frozen=True, slots=True)
class PromptEntry:
    prompt_id: str
    image_ref: str
    description: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.prompt_id:
            raise ValueError("prompt_id must be non-empty")
        if not self.image_ref:
            raise ValueError(f"prompt {self.prompt_id!r}: image_ref must be non-empty")


@dataclass(frozen=True, slots=True)
class AssetEntry:
    """One model's output for one prompt.

    polygon_count is the triangle count for meshes (>= 1) or the Gaussian
    primitive count for splats (0 when unknown; such assets are excluded
    from polygon analyses).
    """

    asset_id: str
    model_id: str
    prompt_id: str
    format: AssetFormat
    polygon_count: int
    file_ref: str
    textured: bool

    def __post_init__(self) -> None:
        if not self.asset_id:
            raise ValueError("asset_id must be non-empty")
        if self.polygon_count < 0:
            raise ValueError(f"asset {self.asset_id!r}: polygon_count must be non-negative")
        if self.format is AssetFormat.MESH and self.polygon_count < 1:
            raise ValueError(f"asset {self.asset_id!r}: mesh assets need polygon_count >= 1")
        if not self.file_ref:
            raise ValueError(f"asset {self.asset_id!r}: file_ref must be non-empty")


@dataclass(frozen=True, slots=True)
class VoteRecord:
    """One user's preference between two anonymized assets for the same prompt.

    winner names the preferred model slot (a or b); left_slot records which
    slot was rendered on the left so that position bias stays analyzable.
    """

    vote_id: str
    user_id: str
    prompt_id: str
    model_a: str
    model_b: str
    winner: Slot
    left_slot: Slot
    mode: VoteMode
    cast_at: datetime

    def __post_init__(self) -> None:
        if not self.vote_id:
            raise ValueError("vote_id must be non-empty")
        if not self.user_id:
            raise ValueError("user_id must be non-empty")
        _require_utc_ms(self.cast_at, "cast_at")

    @property
    def winner_model(self) -> str:
        return self.model_a if self.winner is Slot.A else self.model_b

    @property
    def loser_model(self) -> str:
        return self.model_b if self.winner is Slot.A else self.model_a


@dataclass(frozen=True, slots=True)
class UserRecord:
    user_id: str
    first_seen: datetime
    vote_count: int = 0
    flagged: bool = False
    flag_p_value: Optional[float] = None

    def __post_init__(self) -> None:
        if self.vote_count < 0:
            raise ValueError("vote_count must be non-negative")
        if self.flagged and self.flag_p_value is None:
            raise ValueError(f"user {self.user_id!r}: flagged users must carry flag_p_value")
        if self.flag_p_value is not None and not 0.0 <= self.flag_p_value <= 1.0:
            raise ValueError(f"user {self.user_id!r}: flag_p_value must be in [0, 1]")


@dataclass(frozen=True, slots=True)
class RatingState:
    """Per-model rating summary: ELO points, optional BT strength, tallies, bounds."""

    model_id: str
    elo: float
    votes: int = 0
    wins: int = 0
    bt_strength: Optional[float] = None
    ci_low: Optional[float] = None
    ci_high: Optional[float] = None

    def __post_init__(self) -> None:
        if self.wins < 0 or self.votes < 0 or self.wins > self.votes:
            raise ValueError(f"model {self.model_id!r}: need 0 <= wins <= votes")
        if self.bt_strength is not None and self.bt_strength <= 0:
            raise ValueError(f"model {self.model_id!r}: bt_strength must be positive")

    @property
    def win_rate(self) -> Optional[float]:
        """wins / votes, undefined (None) when the model has no votes."""
        if self.votes == 0:
            return None
        return self.wins / self.votes


class Registry:
    """Catalog of registered models, prompts, and assets with invariant checks."""

    def __init__(self) -> None:
        self.models: dict[str, ModelEntry] = {}
        self.prompts: dict[str, PromptEntry] = {}
        self.assets: dict[str, AssetEntry] = {}
        self._asset_by_pair: dict[tuple[str, str], str] = {}
        self.version = 0  # bumped on every successful add, for cache invalidation

    def add_model(self, entry: ModelEntry) -> None:
        if entry.model_id in self.models:
            raise ValueError(f"duplicate model_id {entry.model_id!r}")
        self.models[entry.model_id] = entry
        self.version += 1

    def add_prompt(self, entry: PromptEntry) -> None:
        if entry.prompt_id in self.prompts:
            raise ValueError(f"duplicate prompt_id {entry.prompt_id!r}")
        self.prompts[entry.prompt_id] = entry
        self.version += 1

    def add_asset(self, entry: AssetEntry) -> None:
        if entry.asset_id in self.assets:
            raise ValueError(f"duplicate asset_id {entry.asset_id!r}")
        model = self.models.get(entry.model_id)
        if model is None:
            raise ValueError(f"asset {entry.asset_id!r} references unknown model {entry.model_id!r}")
        if entry.prompt_id not in self.prompts:
            raise ValueError(f"asset {entry.asset_id!r} references unknown prompt {entry.prompt_id!r}")
        if entry.format is not model.format:
            raise ValueError(
                f"asset {entry.asset_id!r} format {entry.format.value} does not match "
                f"model {entry.model_id!r} format {model.format.value}"
            )
        pair = (entry.model_id, entry.prompt_id)
        if pair in self._asset_by_pair:
            raise ValueError(f"duplicate asset for model/prompt pair {pair!r}")
        self.assets[entry.asset_id] = entry
        self._asset_by_pair[pair] = entry.asset_id
        self.version += 1

    def asset_for(self, model_id: str, prompt_id: str) -> Optional[AssetEntry]:
        asset_id = self._asset_by_pair.get((model_id, prompt_id))
        return self.assets[asset_id] if asset_id is not None else None

    def prompts_shared_by(self, model_a: str, model_b: str) -> list[str]:
        """Prompt ids for which both models have a registered asset, sorted."""
        return sorted(
            p for p in self.prompts
            if (model_a, p) in self._asset_by_pair and (model_b, p) in self._asset_by_pair
        )

    def eligible_pairs(self) -> dict[tuple[str, str], list[str]]:
        """All unordered model pairs sharing at least one prompt, with shared prompts.

        Pair keys are lexicographically ordered (smaller id first).
        """
        by_prompt: dict[str, list[str]] = {}
        for (model_id, prompt_id) in self._asset_by_pair:
            by_prompt.setdefault(prompt_id, []).append(model_id)
        pairs: dict[tuple[str, str], list[str]] = {}
        for prompt_id, members in by_prompt.items():
            members.sort()
            for i in range(len(members)):
                for j in range(i + 1, len(members)):
                    pairs.setdefault((members[i], members[j]), []).append(prompt_id)
        for prompt_ids in pairs.values():
            prompt_ids.sort()
        return pairs

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Registry):
            return NotImplemented
        return (
            self.models == other.models
            and self.prompts == other.prompts
            and self.assets == other.assets
        )


def validate_vote(
    vote: VoteRecord,
    registry: Registry,
    last_cast_at: Optional[datetime] = None,
) -> Optional[Rejection]:
    """Check a vote against a registry snapshot; return None when acceptable.

    Checks run in a fixed precedence: self-comparison, unknown model,
    unknown prompt, missing asset, bad timestamp. ``last_cast_at`` is the
    previous persisted vote time; ordering in the log must be non-decreasing.
    Pure function: neither the vote nor the registry is modified.
    """
    if vote.model_a == vote.model_b:
        return Rejection.SELF_COMPARISON
    if vote.model_a not in registry.models or vote.model_b not in registry.models:
        return Rejection.UNKNOWN_MODEL
    if vote.prompt_id not in registry.prompts:
        return Rejection.UNKNOWN_PROMPT
    if (
        registry.asset_for(vote.model_a, vote.prompt_id) is None
        or registry.asset_for(vote.model_b, vote.prompt_id) is None
    ):
        return Rejection.MISSING_ASSET
    if last_cast_at is not None and vote.cast_at < last_cast_at:
        return Rejection.BAD_TIMESTAMP
    return None


@dataclass(frozen=True, slots=True)
class LeaderboardRow:
    """Display row for one model: rounded ELO, tallies, formatted win rate."""

    model_id: str
    display_name: str
    elo: int
    elo_exact: float
    votes: int
    win_rate: Optional[float]
    win_rate_label: str
    format_label: str
    public: bool
    markers: tuple[str, ...] = ()


def leaderboard_row(model: ModelEntry, rating: RatingState) -> LeaderboardRow:
    """Render one leaderboard row; anonymous entries carry the exclusion marker."""
    if model.model_id != rating.model_id:
        raise ValueError(f"model/rating mismatch: {model.model_id!r} vs {rating.model_id!r}")
    rate = rating.win_rate
    label = "—" if rate is None else f"{rate * 100:.1f}%"
    markers = (EXCLUDED_FROM_PUBLIC,) if model.anonymous else ()
    return LeaderboardRow(
        model_id=model.model_id,
        display_name=model.display_name,
        elo=round(rating.elo),
        elo_exact=rating.elo,
        votes=rating.votes,
        win_rate=rate,
        win_rate_label=label,
        format_label=model.format.value.capitalize(),
        public=not model.anonymous,
        markers=markers,
    )


def leaderboard_sort_key(row: LeaderboardRow) -> tuple:
    """Ordering contract: ELO desc, then votes desc, then model_id ascending."""
    return (-row.elo_exact, -row.votes, row.model_id)


def sort_leaderboard(rows: Iterable[LeaderboardRow]) -> list[LeaderboardRow]:
    return sorted(rows, key=leaderboard_sort_key)
