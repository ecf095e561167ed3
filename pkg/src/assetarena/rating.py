"""Rating computation from vote logs.

Three routes into the same question of relative model strength:

* sequential ELO replay over the chronologically ordered log, zero-sum per
  vote: the winner gains ``K * (1 - E_winner)`` where
  ``E_winner = 1 / (1 + base^((r_loser - r_winner) / scale))``;
* Bradley-Terry maximum likelihood, fit with the standard MM iteration
  ``s_i <- W_i / sum_j n_ij / (s_i + s_j)`` and anchored by renormalizing to
  geometric mean 1 each sweep;
* bootstrap confidence intervals, resampling the vote log with replacement
  and replaying ELO per replicate.

Votes in topology mode feed a separate rating track and never touch the
standard one (and vice versa).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .models import RatingState, Slot, VoteMode, VoteRecord


class UnsortedVotesError(ValueError):
    """Raised when a replay input violates (cast_at, vote_id) ordering."""


class DisconnectedGraphError(ValueError):
    """Raised when a Bradley-Terry fit without regularization spans a disconnected comparison graph."""


@dataclass(frozen=True, slots=True)
class EloConfig:
    initial_rating: float = 1200.0
    k_factor: float = 32.0
    scale: float = 400.0
    base: float = 10.0

    def __post_init__(self) -> None:
        for name in ("initial_rating", "scale", "base"):
            if getattr(self, name) <= 0:
                raise ValueError(f"EloConfig.{name} must be strictly positive")
        if self.k_factor < 0:  # zero freezes ratings, useful for diagnostics
            raise ValueError("EloConfig.k_factor must be non-negative")


@dataclass(frozen=True, slots=True)
class BtConfig:
    max_iterations: int = 1000
    tolerance: float = 1e-10
    regularization: float = 0.1

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("BtConfig.max_iterations must be positive")
        if self.tolerance <= 0:
            raise ValueError("BtConfig.tolerance must be positive")
        if self.regularization < 0:
            raise ValueError("BtConfig.regularization must be non-negative")


@dataclass(frozen=True)
class RatingSnapshot:
    """Deterministic result of replaying one rating track over a vote log."""

    ratings: dict[str, RatingState]
    mode: VoteMode
    vote_count_processed: int
    config_fingerprint: str

    def to_jsonl(self) -> str:
        """Canonical line-delimited serialization, one model per line, sorted by id."""
        lines = []
        for model_id in sorted(self.ratings):
            r = self.ratings[model_id]
            lines.append(json.dumps(
                {
                    "bt_strength": r.bt_strength,
                    "ci_high": r.ci_high,
                    "ci_low": r.ci_low,
                    "elo": r.elo,
                    "mode": self.mode.value,
                    "model_id": r.model_id,
                    "votes": r.votes,
                    "wins": r.wins,
                },
                sort_keys=True,
                separators=(",", ":"),
            ))
        return "\n".join(lines) + ("\n" if lines else "")


def config_fingerprint(cfg: EloConfig, mode: VoteMode) -> str:
    payload = json.dumps(
        {
            "base": cfg.base,
            "initial_rating": cfg.initial_rating,
            "k_factor": cfg.k_factor,
            "mode": mode.value,
            "scale": cfg.scale,
        },
        sort_keys=True,
        separators=(",", ":"),
    )
    return hashlib.sha256(payload.encode("ascii")).hexdigest()[:16]


def elo_expected(r_a: float, r_b: float, config: EloConfig = EloConfig()) -> float:
    """Expected score of the first player; complements sum to one."""
    return 1.0 / (1.0 + config.base ** ((r_b - r_a) / config.scale))


def elo_update(r_winner: float, r_loser: float, config: EloConfig = EloConfig()) -> tuple[float, float]:
    """One zero-sum rating transfer; returns the updated (winner, loser) pair."""
    delta = config.k_factor * (1.0 - elo_expected(r_winner, r_loser, config))
    return r_winner + delta, r_loser - delta


def _ordering_key(vote: VoteRecord) -> tuple:
    return (vote.cast_at, vote.vote_id)


def check_votes_sorted(votes: Iterable[VoteRecord]) -> None:
    """Raise UnsortedVotesError unless votes are ordered by (cast_at, vote_id)."""
    last = None
    for vote in votes:
        key = _ordering_key(vote)
        if last is not None and key < last:
            raise UnsortedVotesError(
                f"vote {vote.vote_id!r} at {vote.cast_at} breaks (cast_at, vote_id) ordering"
            )
        last = key


def replay_elo(
    votes: Sequence[VoteRecord],
    excluded_users: frozenset[str] | set[str] = frozenset(),
    mode: VoteMode = VoteMode.STANDARD,
    config: EloConfig = EloConfig(),
) -> RatingSnapshot:
    """Fold the ordered vote stream into a rating snapshot for one mode.

    Votes from excluded users are skipped entirely; votes in the other mode
    are skipped for this snapshot. Models enter at ``initial_rating`` the
    first time a counted vote touches them. Raises UnsortedVotesError if the
    stream is out of order.
    """
    ratings: dict[str, float] = {}
    wins: dict[str, int] = {}
    counts: dict[str, int] = {}
    processed = 0
    last = None

    base = config.base
    scale = config.scale
    k = config.k_factor
    initial = config.initial_rating

    for vote in votes:
        key = (vote.cast_at, vote.vote_id)
        if last is not None and key < last:
            raise UnsortedVotesError(
                f"vote {vote.vote_id!r} at {vote.cast_at} breaks (cast_at, vote_id) ordering"
            )
        last = key
        if vote.user_id in excluded_users or vote.mode is not mode:
            continue
        a, b = vote.model_a, vote.model_b
        if vote.winner is Slot.A:
            winner, loser = a, b
        else:
            winner, loser = b, a
        r_w = ratings.get(winner, initial)
        r_l = ratings.get(loser, initial)
        delta = k * (1.0 - 1.0 / (1.0 + base ** ((r_l - r_w) / scale)))
        ratings[winner] = r_w + delta
        ratings[loser] = r_l - delta
        wins[winner] = wins.get(winner, 0) + 1
        counts[winner] = counts.get(winner, 0) + 1
        counts[loser] = counts.get(loser, 0) + 1
        wins.setdefault(loser, 0)
        processed += 1

    states = {
        model_id: RatingState(
            model_id=model_id,
            elo=ratings[model_id],
            votes=counts[model_id],
            wins=wins[model_id],
        )
        for model_id in ratings
    }
    return RatingSnapshot(
        ratings=states,
        mode=mode,
        vote_count_processed=processed,
        config_fingerprint=config_fingerprint(config, mode),
    )


def win_rate_table(snapshot: RatingSnapshot) -> dict[str, Optional[float]]:
    """Per-model win rate from the snapshot tallies; None when a model has no votes."""
    return {model_id: state.win_rate for model_id, state in snapshot.ratings.items()}


@dataclass(frozen=True)
class BtResult:
    """Fitted Bradley-Terry strengths, normalized to geometric mean one."""

    strengths: dict[str, float]
    converged: bool
    iterations: int

    def win_probability(self, model_a: str, model_b: str) -> float:
        s_a = self.strengths[model_a]
        s_b = self.strengths[model_b]
        return s_a / (s_a + s_b)


def _components(n: int, edges: Iterable[tuple[int, int]]) -> int:
    parent = list(range(n))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in edges:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[ri] = rj
    return len({find(i) for i in range(n)})


def fit_bradley_terry(
    votes: Iterable[VoteRecord],
    excluded_users: frozenset[str] | set[str] = frozenset(),
    config: BtConfig = BtConfig(),
    mode: VoteMode = VoteMode.STANDARD,
) -> BtResult:
    """Fit Bradley-Terry strengths to the vote multiset (order-independent).

    Regularization adds a virtual win and loss between every pair of
    participating models, which keeps the comparison graph connected and all
    strengths finite. With regularization zero the graph must be connected
    and every model needs at least one win and one loss, otherwise the
    maximum likelihood estimate degenerates.
    """
    index: dict[str, int] = {}
    order: list[str] = []
    raw: dict[tuple[int, int], int] = {}
    for vote in votes:
        if vote.user_id in excluded_users or vote.mode is not mode:
            continue
        for m in (vote.model_a, vote.model_b):
            if m not in index:
                index[m] = len(order)
                order.append(m)
        w = index[vote.winner_model]
        l = index[vote.loser_model]
        raw[(w, l)] = raw.get((w, l), 0) + 1

    n = len(order)
    if n == 0:
        return BtResult(strengths={}, converged=True, iterations=0)
    if n == 1:
        return BtResult(strengths={order[0]: 1.0}, converged=True, iterations=0)

    wins = np.zeros((n, n), dtype=float)
    for (w, l), c in raw.items():
        wins[w, l] += c

    if config.regularization > 0:
        wins += config.regularization
        np.fill_diagonal(wins, 0.0)
    else:
        games_ = wins + wins.T
        edges = [(i, j) for i in range(n) for j in range(i + 1, n) if games_[i, j] > 0]
        if _components(n, edges) > 1:
            raise DisconnectedGraphError(
                "comparison graph is disconnected; set regularization > 0 or fit components separately"
            )
        row_wins = wins.sum(axis=1)
        row_losses = wins.sum(axis=0)
        degenerate = [order[i] for i in range(n) if row_wins[i] == 0 or row_losses[i] == 0]
        if degenerate:
            raise ValueError(
                f"models {degenerate!r} have no wins or no losses; "
                "the unregularized MLE is degenerate (set regularization > 0)"
            )

    games = wins + wins.T
    total_wins = wins.sum(axis=1)
    s = np.ones(n, dtype=float)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        denom = (games / (s[:, None] + s[None, :])).sum(axis=1)
        s_new = total_wins / denom
        log_s_new = np.log(s_new)
        log_s_new -= log_s_new.mean()  # geometric mean 1
        s_new = np.exp(log_s_new)
        delta = float(np.max(np.abs(log_s_new - np.log(s))))
        s = s_new
        if delta < config.tolerance:
            converged = True
            break

    return BtResult(
        strengths={order[i]: float(s[i]) for i in range(n)},
        converged=converged,
        iterations=iterations,
    )


def bt_display_rating(strength: float, config: EloConfig = EloConfig()) -> float:
    """Affine map of a BT strength onto the ELO display scale (presentation only)."""
    return config.scale * math.log(strength, config.base) + config.initial_rating


def bootstrap_ci(
    votes: Sequence[VoteRecord],
    excluded_users: frozenset[str] | set[str] = frozenset(),
    config: EloConfig = EloConfig(),
    resamples: int = 200,
    seed: int = 0,
    mode: VoteMode = VoteMode.STANDARD,
) -> dict[str, tuple[float, float]]:
    """Percentile bootstrap (2.5/97.5) of per-model ELO over log resamples.

    Each replicate draws ``len(votes)`` votes with replacement, restores
    (cast_at, vote_id) order, and replays ELO. Replicate r uses an RNG seeded
    by (seed, r), so results are deterministic and replicates independent.
    Models missing from a replicate sit at the initial rating there.
    """
    if resamples < 100:
        raise ValueError("bootstrap requires resamples >= 100")
    check_votes_sorted(votes)

    base_votes = [
        v for v in votes
        if v.user_id not in excluded_users and v.mode is mode
    ]
    m = len(base_votes)
    models = sorted({v.model_a for v in base_votes} | {v.model_b for v in base_votes})
    if not models:
        return {}
    model_index = {model: i for i, model in enumerate(models)}

    # compact arrays: winner/loser index per vote, in chronological order
    winners = np.array([model_index[v.winner_model] for v in base_votes], dtype=np.int64)
    losers = np.array([model_index[v.loser_model] for v in base_votes], dtype=np.int64)

    base = config.base
    scale = config.scale
    k = config.k_factor
    initial = config.initial_rating

    outcomes = np.empty((resamples, len(models)), dtype=float)
    for r in range(resamples):
        rng = np.random.default_rng([seed, r])
        idx = np.sort(rng.integers(0, m, size=m)) if m else np.empty(0, dtype=np.int64)
        ratings = [initial] * len(models)
        for i in idx:
            w = winners[i]
            l = losers[i]
            r_w = ratings[w]
            r_l = ratings[l]
            delta = k * (1.0 - 1.0 / (1.0 + base ** ((r_l - r_w) / scale)))
            ratings[w] = r_w + delta
            ratings[l] = r_l - delta
        outcomes[r] = ratings

    lo = np.percentile(outcomes, 2.5, axis=0)
    hi = np.percentile(outcomes, 97.5, axis=0)
    return {model: (float(lo[i]), float(hi[i])) for model, i in model_index.items()}


def build_snapshot(
    votes: Sequence[VoteRecord],
    excluded_users: frozenset[str] | set[str] = frozenset(),
    mode: VoteMode = VoteMode.STANDARD,
    elo_config: EloConfig = EloConfig(),
    bt_config: Optional[BtConfig] = BtConfig(),
    resamples: int = 0,
    seed: int = 0,
) -> RatingSnapshot:
    """Full pipeline convenience: ELO replay, optional BT fit, optional bootstrap CIs."""
    snapshot = replay_elo(votes, excluded_users, mode, elo_config)
    ratings = dict(snapshot.ratings)
    if bt_config is not None and ratings:
        bt = fit_bradley_terry(votes, excluded_users, bt_config, mode)
        for model_id, strength in bt.strengths.items():
            ratings[model_id] = replace(ratings[model_id], bt_strength=strength)
    if resamples:
        cis = bootstrap_ci(votes, excluded_users, elo_config, resamples, seed, mode)
        for model_id, (lo, hi) in cis.items():
            ratings[model_id] = replace(ratings[model_id], ci_low=lo, ci_high=hi)
    return replace(snapshot, ratings=ratings)
