"""Statistical fraud detection: exact binomial tests against community consensus.

A user is scored on how often their standard-mode votes agree with the
per-pair majority computed from everyone else's votes (leave-one-user-out,
so heavy voters cannot confirm themselves). Systematic disagreement shows up
as a small lower-tail binomial p-value; users below the threshold are
flagged. Super-agreement is deliberately not flagged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .models import VoteMode, VoteRecord

Pair = tuple[str, str]


@dataclass(frozen=True, slots=True)
class FraudConfig:
    p_threshold: float = 1e-5
    min_consensus_votes_per_pair: int = 10
    min_scorable_votes_per_user: int = 10
    null_agreement: str = "community_mean"  # or "fixed_half"
    sweep_iterations: int = 1  # >1 re-sweeps with flagged users' votes removed

    def __post_init__(self) -> None:
        if not 0.0 < self.p_threshold < 1.0:
            raise ValueError("p_threshold must be in (0, 1)")
        if self.min_consensus_votes_per_pair < 1 or self.min_scorable_votes_per_user < 1:
            raise ValueError("minimum vote counts must be >= 1")
        if self.null_agreement not in ("community_mean", "fixed_half"):
            raise ValueError("null_agreement must be 'community_mean' or 'fixed_half'")
        if self.sweep_iterations < 1:
            raise ValueError("sweep_iterations must be >= 1")


@dataclass(frozen=True, slots=True)
class PairConsensus:
    """Vote counts for one unordered model pair, keyed lexicographically."""

    pair: Pair
    votes_first: int
    votes_second: int

    @property
    def total(self) -> int:
        return self.votes_first + self.votes_second

    @property
    def majority_winner(self) -> Optional[str]:
        if self.votes_first > self.votes_second:
            return self.pair[0]
        if self.votes_second > self.votes_first:
            return self.pair[1]
        return None


@dataclass(frozen=True)
class ConsensusTable:
    """Per-pair community counts, with pairs below the vote floor marked unscorable."""

    pairs: dict[Pair, PairConsensus]
    min_votes_per_pair: int

    def scorable(self, pair: Pair) -> bool:
        entry = self.pairs.get(pair)
        return (
            entry is not None
            and entry.total >= self.min_votes_per_pair
            and entry.majority_winner is not None
        )

    def majority(self, pair: Pair) -> Optional[str]:
        entry = self.pairs.get(pair)
        return entry.majority_winner if entry is not None else None


@dataclass(frozen=True, slots=True)
class FraudReport:
    user_id: str
    scorable_votes: int
    agreements: int
    null_p0: Optional[float]
    p_value: Optional[float]
    flagged: bool


@dataclass(frozen=True)
class FraudSweepResult:
    flagged: frozenset[str]
    authenticity_rate: Optional[float]
    reports: dict[str, FraudReport]
    null_p0: Optional[float]


def _pair_key(model_a: str, model_b: str) -> tuple[Pair, bool]:
    """Canonical unordered pair plus whether the order was swapped."""
    if model_a <= model_b:
        return (model_a, model_b), False
    return (model_b, model_a), True


def _count_votes(votes: Iterable[VoteRecord], skip_user: Optional[str]) -> dict[Pair, list[int]]:
    counts: dict[Pair, list[int]] = {}
    for vote in votes:
        if vote.mode is not VoteMode.STANDARD:
            continue
        if skip_user is not None and vote.user_id == skip_user:
            continue
        pair, _ = _pair_key(vote.model_a, vote.model_b)
        entry = counts.setdefault(pair, [0, 0])
        entry[0 if vote.winner_model == pair[0] else 1] += 1
    return counts


def build_consensus(
    votes: Iterable[VoteRecord],
    holdout_user: Optional[str] = None,
    min_votes_per_pair: int = 10,
) -> ConsensusTable:
    """Aggregate standard-mode votes into per-pair counts, excluding the holdout user."""
    counts = _count_votes(votes, holdout_user)
    pairs = {
        pair: PairConsensus(pair=pair, votes_first=c[0], votes_second=c[1])
        for pair, c in counts.items()
    }
    return ConsensusTable(pairs=pairs, min_votes_per_pair=min_votes_per_pair)


def exact_binomial_lower_tail(k: int, n: int, p0: float) -> float:
    """P(X <= k) for X ~ Binomial(n, p0), summed in log space for stability.

    Exact within 1e-12 relative for n up to 10,000.
    """
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not 0.0 < p0 < 1.0:
        raise ValueError(f"need 0 < p0 < 1, got {p0}")
    if k == n:
        return 1.0
    log_p = math.log(p0)
    log_q = math.log1p(-p0)
    lgamma = math.lgamma
    log_n_fact = lgamma(n + 1)
    total = 0.0
    for i in range(k + 1):
        log_term = (
            log_n_fact - lgamma(i + 1) - lgamma(n - i + 1)
            + i * log_p + (n - i) * log_q
        )
        total += math.exp(log_term)
    return min(total, 1.0)


def _degenerate_lower_tail(k: int, n: int, p0: float) -> float:
    # consensus agreement rate of exactly 0 or 1 collapses the null to a point mass
    if p0 >= 1.0:
        return 1.0 if k == n else 0.0
    return 1.0


@dataclass(frozen=True)
class _SweepContext:
    """Shared per-sweep aggregates: global pair counts and per-user vote groupings."""

    global_counts: dict[Pair, list[int]]
    user_votes: dict[str, list[tuple[Pair, str]]]  # (pair, voted_model) per standard vote
    min_votes_per_pair: int

    def agreements_for(self, user_id: str) -> tuple[int, int]:
        """(n, k): scorable votes and majority agreements under leave-one-out consensus."""
        n = 0
        k = 0
        mine: dict[Pair, list[int]] = {}
        for pair, voted in self.user_votes.get(user_id, ()):
            entry = mine.setdefault(pair, [0, 0])
            entry[0 if voted == pair[0] else 1] += 1
        for pair, voted in self.user_votes.get(user_id, ()):
            total = self.global_counts.get(pair, (0, 0))
            own = mine[pair]
            first = total[0] - own[0]
            second = total[1] - own[1]
            if first + second < self.min_votes_per_pair or first == second:
                continue
            majority = pair[0] if first > second else pair[1]
            n += 1
            if voted == majority:
                k += 1
        return n, k


def _build_context(votes: Iterable[VoteRecord], config: FraudConfig) -> _SweepContext:
    global_counts: dict[Pair, list[int]] = {}
    user_votes: dict[str, list[tuple[Pair, str]]] = {}
    for vote in votes:
        if vote.mode is not VoteMode.STANDARD:
            continue
        pair, _ = _pair_key(vote.model_a, vote.model_b)
        entry = global_counts.setdefault(pair, [0, 0])
        voted = vote.winner_model
        entry[0 if voted == pair[0] else 1] += 1
        user_votes.setdefault(vote.user_id, []).append((pair, voted))
    return _SweepContext(
        global_counts=global_counts,
        user_votes=user_votes,
        min_votes_per_pair=config.min_consensus_votes_per_pair,
    )


def _pooled_agreement(ctx: _SweepContext) -> Optional[float]:
    total_n = 0
    total_k = 0
    for user_id in ctx.user_votes:
        n, k = ctx.agreements_for(user_id)
        total_n += n
        total_k += k
    if total_n == 0:
        return None
    return total_k / total_n


def _score(user_id: str, ctx: _SweepContext, p0: Optional[float], config: FraudConfig) -> FraudReport:
    n, k = ctx.agreements_for(user_id)
    if n < config.min_scorable_votes_per_user or p0 is None:
        return FraudReport(
            user_id=user_id, scorable_votes=n, agreements=k,
            null_p0=p0, p_value=None, flagged=False,
        )
    if 0.0 < p0 < 1.0:
        p_value = exact_binomial_lower_tail(k, n, p0)
    else:
        p_value = _degenerate_lower_tail(k, n, p0)
    flagged = p_value < config.p_threshold
    return FraudReport(
        user_id=user_id, scorable_votes=n, agreements=k,
        null_p0=p0, p_value=p_value, flagged=flagged,
    )


def _null_rate(ctx: _SweepContext, config: FraudConfig) -> Optional[float]:
    if config.null_agreement == "fixed_half":
        return 0.5
    return _pooled_agreement(ctx)


def score_user(user_id: str, votes: Iterable[VoteRecord], config: FraudConfig = FraudConfig()) -> FraudReport:
    """Score one user's agreement with leave-one-out community consensus."""
    ctx = _build_context(votes, config)
    return _score(user_id, ctx, _null_rate(ctx, config), config)


def run_fraud_sweep(
    votes: Sequence[VoteRecord],
    users: Optional[Iterable[str]] = None,
    config: FraudConfig = FraudConfig(),
) -> FraudSweepResult:
    """Score every user and report the flagged set.

    ``users`` defaults to everyone who voted; passing the full account list
    makes the authenticity rate reflect registered users rather than voters.
    By default the sweep is single-pass: flags do not feed back into
    consensus. With ``sweep_iterations > 1`` each extra pass rebuilds
    consensus without the flagged users' votes and may flag more users;
    flags accumulate and are never retracted.
    """
    user_ids = sorted(set(users)) if users is not None else None
    flagged: set[str] = set()
    reports: dict[str, FraudReport] = {}
    p0 = None
    for _ in range(config.sweep_iterations):
        remaining = [v for v in votes if v.user_id not in flagged]
        ctx = _build_context(remaining, config)
        if user_ids is None:
            user_ids = sorted(ctx.user_votes.keys())
        p0 = _null_rate(ctx, config)
        newly_flagged = False
        for u in user_ids:
            if u in flagged:
                continue
            report = _score(u, ctx, p0, config)
            reports[u] = report
            if report.flagged:
                flagged.add(u)
                newly_flagged = True
        if not newly_flagged:
            break
    user_ids = user_ids or []
    authenticity = 1.0 - len(flagged) / len(user_ids) if user_ids else None
    return FraudSweepResult(
        flagged=frozenset(flagged),
        authenticity_rate=authenticity,
        reports=reports,
        null_p0=p0,
    )
