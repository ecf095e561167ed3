"""Pair scheduling: which comparison to serve next, and on which side.

Left/right placement is always a fair coin, independent of model identity.
Pair choice follows the configured strategy:

* uniform_random: uniform over eligible pairs;
* count_balanced (default): prefer the pair with the fewest recorded votes,
  breaking ties uniformly at random;
* uncertainty_weighted: sample pairs proportional to the overlap of their
  bootstrap rating intervals (pairs the data has not separated yet).

A small per-user memory avoids re-serving a user their recent pairs when
other pairs are available.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .models import Registry, Slot, VoteMode
from .rating import RatingSnapshot


class NoEligiblePairError(ValueError):
    """Fewer than two models share a prompt."""


@dataclass(frozen=True, slots=True)
class SchedulerConfig:
    strategy: str = "count_balanced"
    seed: int = 0
    recent_pair_memory: int = 20

    def __post_init__(self) -> None:
        if self.strategy not in ("uniform_random", "count_balanced", "uncertainty_weighted"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.recent_pair_memory < 0:
            raise ValueError("recent_pair_memory must be >= 0")


@dataclass(frozen=True, slots=True)
class ScheduledPair:
    prompt_id: str
    model_a: str
    model_b: str
    left_slot: Slot
    mode: VoteMode = VoteMode.STANDARD


class PairScheduler:
    """Stateful scheduler: one logical writer, deterministic given seed and history."""

    def __init__(
        self,
        config: SchedulerConfig = SchedulerConfig(),
        pair_counts: Optional[dict[tuple[str, str], int]] = None,
    ):
        self.config = config
        self._rng = np.random.default_rng(config.seed)
        self.pair_counts: dict[tuple[str, str], int] = dict(pair_counts or {})
        self._recent: dict[str, deque[tuple[str, str]]] = {}
        self._pair_cache: Optional[tuple[int, dict[tuple[str, str], list[str]]]] = None

    def record_vote(self, model_a: str, model_b: str) -> None:
        pair = (model_a, model_b) if model_a <= model_b else (model_b, model_a)
        self.pair_counts[pair] = self.pair_counts.get(pair, 0) + 1

    def next_pair(
        self,
        user_id: str,
        registry: Registry,
        snapshot: Optional[RatingSnapshot] = None,
        mode: VoteMode = VoteMode.STANDARD,
    ) -> ScheduledPair:
        if self._pair_cache is None or self._pair_cache[0] != registry.version:
            self._pair_cache = (registry.version, registry.eligible_pairs())
        eligible = self._pair_cache[1]
        if not eligible:
            raise NoEligiblePairError("no two models share a prompt")
        pairs = sorted(eligible)

        recent = self._recent.get(user_id)
        if recent:
            fresh = [p for p in pairs if p not in recent]
            if fresh:
                pairs = fresh

        pair = self._choose(pairs, snapshot)
        prompts = eligible[pair]
        prompt_id = prompts[self._rng.integers(0, len(prompts))]
        left = Slot.A if self._rng.integers(0, 2) == 0 else Slot.B

        memory = self.config.recent_pair_memory
        if memory > 0:
            queue = self._recent.setdefault(user_id, deque(maxlen=memory))
            queue.append(pair)

        return ScheduledPair(
            prompt_id=prompt_id,
            model_a=pair[0],
            model_b=pair[1],
            left_slot=left,
            mode=mode,
        )

    def _choose(
        self,
        pairs: list[tuple[str, str]],
        snapshot: Optional[RatingSnapshot],
    ) -> tuple[str, str]:
        strategy = self.config.strategy
        if strategy == "uniform_random":
            return pairs[self._rng.integers(0, len(pairs))]
        if strategy == "count_balanced":
            counts = [self.pair_counts.get(p, 0) for p in pairs]
            lowest = min(counts)
            candidates = [p for p, c in zip(pairs, counts) if c == lowest]
            return candidates[self._rng.integers(0, len(candidates))]
        return self._choose_uncertainty(pairs, snapshot)

    def _choose_uncertainty(
        self,
        pairs: list[tuple[str, str]],
        snapshot: Optional[RatingSnapshot],
    ) -> tuple[str, str]:
        overlaps: list[Optional[float]] = []
        for a, b in pairs:
            ra = snapshot.ratings.get(a) if snapshot else None
            rb = snapshot.ratings.get(b) if snapshot else None
            if (
                ra is None or rb is None
                or ra.ci_low is None or ra.ci_high is None
                or rb.ci_low is None or rb.ci_high is None
            ):
                overlaps.append(None)
                continue
            overlaps.append(max(0.0, min(ra.ci_high, rb.ci_high) - max(ra.ci_low, rb.ci_low)))
        known = [o for o in overlaps if o is not None]
        # unmeasured pairs weigh as much as the most uncertain measured pair
        default = max(known) if known else 1.0
        weights = np.array(
            [o if o is not None else default for o in overlaps], dtype=float
        ) + 1e-6
        weights /= weights.sum()
        return pairs[self._rng.choice(len(pairs), p=weights)]
