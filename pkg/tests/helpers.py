"""Shared fixture builders for the test suite."""

from __future__ import annotations

import hashlib
from datetime import datetime, timedelta, timezone

from assetarena.models import (
    AssetEntry,
    AssetFormat,
    ModelEntry,
    PromptEntry,
    Registry,
    Slot,
    VoteMode,
    VoteRecord,
)

EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)


def ts(i: int) -> datetime:
    """Deterministic millisecond-spaced timestamps."""
    return EPOCH + timedelta(milliseconds=i)


def ref(name: str) -> str:
    return hashlib.sha256(name.encode()).hexdigest()


def make_model(model_id: str, fmt: str = "mesh", textured: bool = True,
               anonymous: bool = False) -> ModelEntry:
    return ModelEntry(
        model_id=model_id,
        display_name=model_id.title(),
        format=AssetFormat(fmt),
        textured=textured,
        anonymous=anonymous,
        source_url=None if anonymous else f"https://example.org/{model_id}",
        registered_at=EPOCH,
    )


def make_registry(models: dict[str, str] | list[str], prompts: list[str] | None = None,
                  polygon_count: int = 10_000) -> Registry:
    """Registry with an asset for every (model, prompt) pair.

    ``models`` maps model_id -> format, or is a list of mesh model ids.
    """
    if isinstance(models, list):
        models = {m: "mesh" for m in models}
    prompts = prompts or ["p0"]
    registry = Registry()
    for model_id, fmt in models.items():
        registry.add_model(make_model(model_id, fmt))
    for prompt_id in prompts:
        registry.add_prompt(PromptEntry(prompt_id=prompt_id, image_ref=ref(prompt_id)))
        for model_id, fmt in models.items():
            registry.add_asset(AssetEntry(
                asset_id=f"{model_id}--{prompt_id}",
                model_id=model_id,
                prompt_id=prompt_id,
                format=AssetFormat(fmt),
                polygon_count=polygon_count if fmt == "mesh" else 0,
                file_ref=ref(f"{model_id}/{prompt_id}"),
                textured=True,
            ))
    return registry


def vote(i: int, a: str, b: str, winner: str = "a", user: str = "u0",
         prompt: str = "p0", mode: str = "standard", left: str = "a") -> VoteRecord:
    return VoteRecord(
        vote_id=f"v{i:06d}",
        user_id=user,
        prompt_id=prompt,
        model_a=a,
        model_b=b,
        winner=Slot(winner),
        left_slot=Slot(left),
        mode=VoteMode(mode),
        cast_at=ts(i),
    )


def votes_between(a: str, b: str, a_wins: int, b_wins: int, start: int = 0,
                  user: str = "u0") -> list[VoteRecord]:
    out = []
    i = start
    for _ in range(a_wins):
        out.append(vote(i, a, b, "a", user=user))
        i += 1
    for _ in range(b_wins):
        out.append(vote(i, a, b, "b", user=user))
        i += 1
    return out
