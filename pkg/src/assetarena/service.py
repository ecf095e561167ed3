"""HTTP service: serves anonymous pairs, ingests votes, exposes the leaderboard.

Model identities never appear in a response until the vote that resolves the
comparison has been accepted; assets travel as opaque content addresses.
Every accepted vote is appended to the durable log before the reveal is
returned, and live ratings are the fold of exactly that log, so a crashed
service rebuilt from the log continues with identical state.
"""

from __future__ import annotations

import base64
import binascii
import hashlib
import hmac
import json
import os
import threading
import uuid
from contextlib import asynccontextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime, timedelta
from pathlib import Path
from typing import Callable, Literal, Optional, Protocol

from fastapi import Depends, FastAPI, Header, HTTPException, Response
from pydantic import BaseModel, ConfigDict

from .fraud import FraudConfig, run_fraud_sweep
from .models import (
    AssetFormat,
    ModelEntry,
    PromptEntry,
    AssetEntry,
    RatingState,
    Registry,
    Slot,
    VoteMode,
    VoteRecord,
    format_ts,
    leaderboard_row,
    sort_leaderboard,
    utc_now_ms,
)
from .rating import EloConfig, elo_update, replay_elo
from .scheduler import NoEligiblePairError, PairScheduler, SchedulerConfig
from .store import FlagRecord, LogValidationError, VoteLog


class ConfigError(ValueError):
    """Service configuration is missing or invalid."""


class IdentityProvider(Protocol):
    """Maps bearer tokens to verified user ids; None means unauthenticated."""

    def resolve(self, token: str) -> Optional[str]:
        ...


class StaticTokenIdentityProvider:
    """Fixed token table; the test/fixture provider."""

    def __init__(self, tokens: dict[str, str]):
        self._tokens = dict(tokens)

    def resolve(self, token: str) -> Optional[str]:
        return self._tokens.get(token)


class SignedTokenIdentityProvider:
    """Self-contained bearer tokens: ``user_id.expires_unix.hmac_sha256``."""

    def __init__(self, secret: str, clock: Callable[[], datetime] = utc_now_ms):
        self._secret = secret.encode("utf-8")
        self._clock = clock

    def issue(self, user_id: str, ttl_seconds: int = 3600) -> str:
        expires = int(self._clock().timestamp()) + ttl_seconds
        payload = f"{user_id}.{expires}"
        sig = hmac.new(self._secret, payload.encode("utf-8"), hashlib.sha256).hexdigest()
        return f"{payload}.{sig}"

    def resolve(self, token: str) -> Optional[str]:
        parts = token.rsplit(".", 2)
        if len(parts) != 3:
            return None
        user_id, expires_text, sig = parts
        payload = f"{user_id}.{expires_text}"
        expected = hmac.new(self._secret, payload.encode("utf-8"), hashlib.sha256).hexdigest()
        if not hmac.compare_digest(sig, expected):
            return None
        try:
            expires = int(expires_text)
        except ValueError:
            return None
        if int(self._clock().timestamp()) >= expires:
            return None
        return user_id or None


@dataclass(frozen=True)
class ServiceConfig:
    data_dir: Path
    host: str = "127.0.0.1"
    port: int = 8000
    k_factor: float = 32.0
    initial_rating: float = 1200.0
    pending_expiry_minutes: float = 30.0
    min_display_votes: int = 0
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)
    fraud: FraudConfig = field(default_factory=FraudConfig)
    identity_provider: str = "static"  # "static" or "signed"
    static_tokens: dict[str, str] = field(default_factory=dict)
    identity_secret: Optional[str] = None
    ui_dir: Optional[Path] = None

    def elo_config(self) -> EloConfig:
        return EloConfig(initial_rating=self.initial_rating, k_factor=self.k_factor)

    def log_path(self) -> Path:
        return self.data_dir / "arena.log.jsonl"

    def assets_dir(self) -> Path:
        return self.data_dir / "assets"

    def build_identity_provider(self, clock: Callable[[], datetime] = utc_now_ms) -> IdentityProvider:
        if self.identity_provider == "static":
            return StaticTokenIdentityProvider(self.static_tokens)
        if self.identity_provider == "signed":
            if not self.identity_secret:
                raise ConfigError("identity_provider 'signed' requires identity_secret")
            return SignedTokenIdentityProvider(self.identity_secret, clock)
        raise ConfigError(f"unknown identity_provider {self.identity_provider!r}")


def load_config(path: str | Path) -> ServiceConfig:
    """Parse a JSON config file; ARENA_PORT and ARENA_DATA_DIR override."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text("utf-8"))
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")

    data_dir = os.environ.get("ARENA_DATA_DIR") or raw.get("data_dir")
    if not data_dir:
        raise ConfigError("config requires data_dir (or ARENA_DATA_DIR)")
    port = os.environ.get("ARENA_PORT") or raw.get("port", 8000)

    try:
        scheduler = SchedulerConfig(**raw.get("scheduler", {}))
        fraud = FraudConfig(**raw.get("fraud", {}))
        identity = raw.get("identity", {"provider": "static", "tokens": {}})
        config = ServiceConfig(
            data_dir=Path(data_dir),
            host=raw.get("host", "127.0.0.1"),
            port=int(port),
            k_factor=float(raw.get("k_factor", 32.0)),
            initial_rating=float(raw.get("initial_rating", 1200.0)),
            pending_expiry_minutes=float(raw.get("pending_expiry_minutes", 30.0)),
            min_display_votes=int(raw.get("min_display_votes", 0)),
            scheduler=scheduler,
            fraud=fraud,
            identity_provider=identity.get("provider", "static"),
            static_tokens=identity.get("tokens", {}),
            identity_secret=identity.get("secret"),
            ui_dir=Path(raw["ui_dir"]) if raw.get("ui_dir") else None,
        )
        config.elo_config()  # validate numeric ranges
        config.build_identity_provider()
        return config
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid config value: {exc}") from exc


@dataclass
class PendingComparison:
    comparison_id: str
    user_id: str
    prompt_id: str
    model_a: str
    model_b: str
    left_slot: Slot
    mode: VoteMode
    issued_at: datetime
    expires_at: datetime
    used: bool = False

    def left_right(self) -> tuple[str, str]:
        if self.left_slot is Slot.A:
            return self.model_a, self.model_b
        return self.model_b, self.model_a


class ContentStore:
    """Content-addressed blob store: files keyed by their SHA-256 digest."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, data: bytes) -> str:
        digest = hashlib.sha256(data).hexdigest()
        path = self.root / digest
        if not path.exists():
            tmp = path.with_suffix(".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return digest

    def get(self, digest: str) -> Optional[bytes]:
        if not digest or any(c not in "0123456789abcdef" for c in digest):
            return None
        path = self.root / digest
        return path.read_bytes() if path.exists() else None


class ArenaService:
    """All mutable service state behind one lock; the log is the source of truth."""

    def __init__(
        self,
        config: ServiceConfig,
        clock: Callable[[], datetime] = utc_now_ms,
        identity: Optional[IdentityProvider] = None,
    ):
        self.config = config
        self.clock = clock
        self.identity = identity or config.build_identity_provider(clock)
        config.data_dir.mkdir(parents=True, exist_ok=True)
        self.log = VoteLog(config.log_path(), recover=True, fsync=True)
        self.content = ContentStore(config.assets_dir())
        self._lock = threading.Lock()
        self.pending: dict[str, PendingComparison] = {}
        self._elo = config.elo_config()

        excluded = self.log.state.flagged_users()
        self._live: dict[VoteMode, dict[str, RatingState]] = {}
        pair_counts: dict[tuple[str, str], int] = {}
        for mode in VoteMode:
            snapshot = replay_elo(self.log.state.votes, excluded, mode, self._elo)
            self._live[mode] = dict(snapshot.ratings)
        for vote in self.log.state.votes:
            pair = tuple(sorted((vote.model_a, vote.model_b)))
            pair_counts[pair] = pair_counts.get(pair, 0) + 1
        self.scheduler = PairScheduler(config.scheduler, pair_counts)

    # -- internals ---------------------------------------------------------

    @property
    def registry(self) -> Registry:
        return self.log.state.registry

    def resolve_user(self, authorization: Optional[str]) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail="missing bearer token")
        user_id = self.identity.resolve(authorization[len("Bearer "):])
        if user_id is None:
            raise HTTPException(status_code=401, detail="invalid or expired token")
        return user_id

    def _rating(self, mode: VoteMode, model_id: str) -> RatingState:
        state = self._live[mode].get(model_id)
        if state is None:
            state = RatingState(model_id=model_id, elo=self._elo.initial_rating)
        return state

    def _apply_online(self, vote: VoteRecord) -> None:
        live = self._live[vote.mode]
        winner, loser = vote.winner_model, vote.loser_model
        w = self._rating(vote.mode, winner)
        l = self._rating(vote.mode, loser)
        new_w, new_l = elo_update(w.elo, l.elo, self._elo)
        live[winner] = replace(w, elo=new_w, votes=w.votes + 1, wins=w.wins + 1)
        live[loser] = replace(l, elo=new_l, votes=l.votes + 1)

    def _next_vote_id(self) -> str:
        return f"v-{len(self.log.state.votes):08d}-{uuid.uuid4().hex[:8]}"

    # -- operations exposed through the API ---------------------------------

    def issue_pair(self, user_id: str, mode: VoteMode) -> PendingComparison:
        with self._lock:
            try:
                scheduled = self.scheduler.next_pair(user_id, self.registry, mode=mode)
            except NoEligiblePairError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            now = self.clock()
            pending = PendingComparison(
                comparison_id=uuid.uuid4().hex,
                user_id=user_id,
                prompt_id=scheduled.prompt_id,
                model_a=scheduled.model_a,
                model_b=scheduled.model_b,
                left_slot=scheduled.left_slot,
                mode=mode,
                issued_at=now,
                expires_at=now + timedelta(minutes=self.config.pending_expiry_minutes),
            )
            self.pending[pending.comparison_id] = pending
            self._purge_expired(now)
            return pending

    def _purge_expired(self, now: datetime) -> None:
        # single-use entries linger briefly after use so double votes get 409 not 404
        cutoff = now - timedelta(minutes=self.config.pending_expiry_minutes)
        stale = [
            cid for cid, p in self.pending.items()
            if p.expires_at < cutoff or (p.used and p.expires_at < now)
        ]
        for cid in stale:
            del self.pending[cid]

    def accept_vote(self, user_id: str, comparison_id: str, winner_side: str) -> dict:
        with self._lock:
            pending = self.pending.get(comparison_id)
            if pending is None or pending.user_id != user_id:
                raise HTTPException(status_code=404, detail="unknown comparison")
            if pending.used:
                raise HTTPException(status_code=409, detail="already voted")
            now = self.clock()
            if now >= pending.expires_at:
                raise HTTPException(status_code=410, detail="comparison expired")

            if winner_side == "left":
                winner = pending.left_slot
            else:
                winner = Slot.B if pending.left_slot is Slot.A else Slot.A

            last = self.log.state.votes[-1].cast_at if self.log.state.votes else None
            cast_at = now if last is None or now >= last else last
            vote = VoteRecord(
                vote_id=self._next_vote_id(),
                user_id=user_id,
                prompt_id=pending.prompt_id,
                model_a=pending.model_a,
                model_b=pending.model_b,
                winner=winner,
                left_slot=pending.left_slot,
                mode=pending.mode,
                cast_at=cast_at,
            )
            try:
                self.log.append(vote)
            except LogValidationError as exc:
                raise HTTPException(status_code=409, detail=str(exc)) from exc
            pending.used = True
            self._apply_online(vote)
            self.scheduler.record_vote(vote.model_a, vote.model_b)

            left_id, right_id = pending.left_right()
            return {
                "accepted": True,
                "vote_id": vote.vote_id,
                "mode": vote.mode.value,
                "reveal": {
                    side: {
                        "model_id": model_id,
                        "display_name": self.registry.models[model_id].display_name,
                        "elo": self._rating(vote.mode, model_id).elo,
                        "votes": self._rating(vote.mode, model_id).votes,
                    }
                    for side, model_id in (("left", left_id), ("right", right_id))
                },
            }

    def leaderboard(self, mode: VoteMode) -> dict:
        with self._lock:
            rows = []
            for model in self.registry.models.values():
                if model.anonymous:
                    continue
                rating = self._rating(mode, model.model_id)
                if rating.votes < self.config.min_display_votes:
                    continue
                rows.append(leaderboard_row(model, rating))
            rows = sort_leaderboard(rows)
            votes = [v for v in self.log.state.votes if v.mode is mode]
            return {
                "mode": mode.value,
                "total_votes": len(votes),
                "snapshot_at": format_ts(votes[-1].cast_at) if votes else None,
                "rows": [
                    {
                        "rank": i + 1,
                        "display_name": row.display_name,
                        "elo": row.elo,
                        "votes": row.votes,
                        "win_rate": row.win_rate,
                        "win_rate_label": row.win_rate_label,
                        "format": row.format_label,
                    }
                    for i, row in enumerate(rows)
                ],
            }

    def submit_model(self, payload: "ModelSubmission") -> ModelEntry:
        with self._lock:
            try:
                entry = ModelEntry(
                    model_id=payload.model_id,
                    display_name=payload.display_name or payload.model_id,
                    format=AssetFormat(payload.format),
                    textured=payload.textured,
                    anonymous=payload.anonymous,
                    source_url=payload.source_url,
                    registered_at=self.clock(),
                )
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            if entry.model_id in self.registry.models:
                raise HTTPException(status_code=409, detail=f"duplicate model_id {entry.model_id!r}")
            self.log.append(entry)
            return entry

    def submit_prompt(self, payload: "PromptSubmission") -> PromptEntry:
        with self._lock:
            image_ref = payload.image_ref
            if payload.image_b64:
                image_ref = self.content.put(_decode_b64(payload.image_b64))
            try:
                entry = PromptEntry(
                    prompt_id=payload.prompt_id,
                    image_ref=image_ref or "",
                    description=payload.description,
                )
            except ValueError as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            if entry.prompt_id in self.registry.prompts:
                raise HTTPException(status_code=409, detail=f"duplicate prompt_id {entry.prompt_id!r}")
            self.log.append(entry)
            return entry

    def submit_asset(self, model_id: str, payload: "AssetSubmission") -> AssetEntry:
        with self._lock:
            model = self.registry.models.get(model_id)
            if model is None:
                raise HTTPException(status_code=404, detail=f"unknown model {model_id!r}")
            file_ref = payload.file_ref
            if payload.content_b64:
                file_ref = self.content.put(_decode_b64(payload.content_b64))
            try:
                entry = AssetEntry(
                    asset_id=f"{model_id}--{payload.prompt_id}",
                    model_id=model_id,
                    prompt_id=payload.prompt_id,
                    format=AssetFormat(payload.format) if payload.format else model.format,
                    polygon_count=payload.polygon_count,
                    file_ref=file_ref or "",
                    textured=payload.textured if payload.textured is not None else model.textured,
                )
                self.log.append(entry)
            except ValueError as exc:
                status = 404 if "unknown prompt" in str(exc) else 400
                raise HTTPException(status_code=status, detail=str(exc)) from exc
            return entry

    def run_fraud_sweep_and_flag(self) -> dict:
        """Scheduled-job entry point: sweep, persist new flags, rebuild ratings."""
        with self._lock:
            votes = list(self.log.state.votes)
            users = sorted({v.user_id for v in votes})
            result = run_fraud_sweep(votes, users, self.config.fraud)
            new_flags = [u for u in sorted(result.flagged) if u not in self.log.state.flags]
            for user_id in new_flags:
                self.log.append(FlagRecord(user_id=user_id, p_value=result.reports[user_id].p_value))
            excluded = self.log.state.flagged_users()
            for mode in VoteMode:
                snapshot = replay_elo(votes, excluded, mode, self._elo)
                self._live[mode] = dict(snapshot.ratings)
            return {
                "flagged": sorted(result.flagged),
                "newly_flagged": new_flags,
                "authenticity_rate": result.authenticity_rate,
            }

    def close(self) -> None:
        self.log.close()


def _decode_b64(text: str) -> bytes:
    try:
        return base64.b64decode(text, validate=True)
    except (binascii.Error, ValueError) as exc:
        raise HTTPException(status_code=400, detail="invalid base64 content") from exc


class VoteRequest(BaseModel):
    comparison_id: str
    winner: Literal["left", "right"]


class ModelSubmission(BaseModel):
    model_config = ConfigDict(protected_namespaces=())

    model_id: str
    display_name: Optional[str] = None
    format: str = "mesh"
    textured: bool = True
    anonymous: bool = False
    source_url: Optional[str] = None


class PromptSubmission(BaseModel):
    prompt_id: str
    image_ref: Optional[str] = None
    image_b64: Optional[str] = None
    description: Optional[str] = None


class AssetSubmission(BaseModel):
    prompt_id: str
    polygon_count: int = 0
    format: Optional[str] = None
    textured: Optional[bool] = None
    file_ref: Optional[str] = None
    content_b64: Optional[str] = None


def _parse_mode(mode: str) -> VoteMode:
    try:
        return VoteMode(mode)
    except ValueError as exc:
        raise HTTPException(status_code=400, detail=f"unknown mode {mode!r}") from exc


def create_app(service: ArenaService) -> FastAPI:
    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        service.close()

    app = FastAPI(title="asset arena", lifespan=lifespan)

    def current_user(authorization: Optional[str] = Header(default=None)) -> str:
        return service.resolve_user(authorization)

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok"}

    @app.get("/api/pair")
    def get_pair(mode: str = "standard", user_id: str = Depends(current_user)) -> dict:
        """Serve an anonymous comparison; the response never names the models."""
        vote_mode = _parse_mode(mode)
        pending = service.issue_pair(user_id, vote_mode)
        left_id, right_id = pending.left_right()
        sides = {}
        for side, model_id in (("left", left_id), ("right", right_id)):
            asset = service.registry.asset_for(model_id, pending.prompt_id)
            sides[side] = {
                "file_ref": asset.file_ref,
                "format": asset.format.value,
                "polygon_count": asset.polygon_count,
            }
        prompt = service.registry.prompts[pending.prompt_id]
        return {
            "comparison_id": pending.comparison_id,
            "mode": pending.mode.value,
            "prompt": {"prompt_id": prompt.prompt_id, "image_ref": prompt.image_ref},
            "left": sides["left"],
            "right": sides["right"],
            "expires_at": format_ts(pending.expires_at),
        }

    @app.post("/api/vote")
    def post_vote(body: VoteRequest, user_id: str = Depends(current_user)) -> dict:
        """Accept a vote, persist it, and reveal the two identities."""
        return service.accept_vote(user_id, body.comparison_id, body.winner)

    @app.get("/api/leaderboard")
    def get_leaderboard(mode: str = "standard") -> dict:
        return service.leaderboard(_parse_mode(mode))

    @app.post("/api/models", status_code=201)
    def post_model(body: ModelSubmission, user_id: str = Depends(current_user)) -> dict:
        entry = service.submit_model(body)
        return {
            "model_id": entry.model_id,
            "display_name": entry.display_name,
            "format": entry.format.value,
            "anonymous": entry.anonymous,
            "registered_at": format_ts(entry.registered_at),
        }

    @app.post("/api/prompts", status_code=201)
    def post_prompt(body: PromptSubmission, user_id: str = Depends(current_user)) -> dict:
        entry = service.submit_prompt(body)
        return {"prompt_id": entry.prompt_id, "image_ref": entry.image_ref}

    @app.post("/api/models/{model_id}/assets", status_code=201)
    def post_asset(model_id: str, body: AssetSubmission, user_id: str = Depends(current_user)) -> dict:
        entry = service.submit_asset(model_id, body)
        return {"asset_id": entry.asset_id, "file_ref": entry.file_ref}

    @app.get("/api/assets/{file_ref}")
    def get_asset(file_ref: str) -> Response:
        data = service.content.get(file_ref)
        if data is None:
            raise HTTPException(status_code=404, detail="unknown asset")
        return Response(content=data, media_type="application/octet-stream")

    ui_dir = service.config.ui_dir
    if ui_dir and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
