"""Estimator-style facade over the rating and fraud machinery.

These classes follow the scikit-learn parameter protocol (constructor
params mirrored as attributes, ``get_params``/``set_params``, ``fit``
returning ``self``, fitted attributes with a trailing underscore) so the
statistical core composes with pipelines, grid search, and ``clone`` without
importing anything from scikit-learn itself.
"""

from __future__ import annotations

import inspect
from typing import Iterable, Optional, Sequence

from .fraud import FraudConfig, run_fraud_sweep
from .models import VoteMode, VoteRecord
from .rating import (
    BtConfig,
    EloConfig,
    bootstrap_ci,
    elo_expected,
    fit_bradley_terry,
    replay_elo,
)


class ParamsMixin:
    """scikit-learn compatible get_params/set_params over __init__ keywords."""

    @classmethod
    def _param_names(cls) -> list[str]:
        signature = inspect.signature(cls.__init__)
        return [
            name for name, p in signature.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params):
        valid = set(self._param_names())
        for name, value in params.items():
            if name not in valid:
                raise ValueError(f"invalid parameter {name!r} for {type(self).__name__}")
            setattr(self, name, value)
        return self

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({args})"


def check_votes(votes: Iterable[VoteRecord]) -> list[VoteRecord]:
    """Materialize and type-check a vote collection."""
    out = list(votes)
    for v in out:
        if not isinstance(v, VoteRecord):
            raise TypeError(f"expected VoteRecord, got {type(v).__name__}")
    return out


def _as_mode(mode) -> VoteMode:
    return mode if isinstance(mode, VoteMode) else VoteMode(mode)


class EloRatingSystem(ParamsMixin):
    """Sequential ELO ratings fit by replaying a chronologically ordered vote log.

    Fitted attributes: ``ratings_`` (model -> points), ``snapshot_`` (full
    per-model states), ``n_votes_``.
    """

    def __init__(
        self,
        k_factor: float = 32.0,
        initial_rating: float = 1200.0,
        scale: float = 400.0,
        base: float = 10.0,
        mode: str = "standard",
    ):
        self.k_factor = k_factor
        self.initial_rating = initial_rating
        self.scale = scale
        self.base = base
        self.mode = mode

    def _config(self) -> EloConfig:
        return EloConfig(
            initial_rating=self.initial_rating,
            k_factor=self.k_factor,
            scale=self.scale,
            base=self.base,
        )

    def fit(self, votes: Sequence[VoteRecord], excluded_users: Iterable[str] = ()):
        votes = check_votes(votes)
        snapshot = replay_elo(votes, frozenset(excluded_users), _as_mode(self.mode), self._config())
        self.snapshot_ = snapshot
        self.ratings_ = {m: s.elo for m, s in snapshot.ratings.items()}
        self.n_votes_ = snapshot.vote_count_processed
        return self

    def predict_proba(self, pairs: Iterable[tuple[str, str]]) -> list[float]:
        """P(first beats second) for each pair; unseen models sit at the initial rating."""
        self._check_fitted()
        cfg = self._config()
        return [
            elo_expected(
                self.ratings_.get(a, self.initial_rating),
                self.ratings_.get(b, self.initial_rating),
                cfg,
            )
            for a, b in pairs
        ]

    def confidence_intervals(
        self,
        votes: Sequence[VoteRecord],
        excluded_users: Iterable[str] = (),
        resamples: int = 200,
        seed: int = 0,
    ) -> dict[str, tuple[float, float]]:
        return bootstrap_ci(
            check_votes(votes), frozenset(excluded_users), self._config(),
            resamples, seed, _as_mode(self.mode),
        )

    def _check_fitted(self) -> None:
        if not hasattr(self, "ratings_"):
            raise RuntimeError("estimator is not fitted; call fit(votes) first")


class BradleyTerryRanker(ParamsMixin):
    """Bradley-Terry strengths fit by minorization-maximization on a vote multiset.

    Fitted attributes: ``strengths_`` (geometric mean one), ``ranking_``
    (model ids, strongest first), ``converged_``, ``n_iter_``.
    """

    def __init__(
        self,
        max_iterations: int = 1000,
        tolerance: float = 1e-10,
        regularization: float = 0.1,
        mode: str = "standard",
    ):
        self.max_iterations = max_iterations
        self.tolerance = tolerance
        self.regularization = regularization
        self.mode = mode

    def _config(self) -> BtConfig:
        return BtConfig(
            max_iterations=self.max_iterations,
            tolerance=self.tolerance,
            regularization=self.regularization,
        )

    def fit(self, votes: Sequence[VoteRecord], excluded_users: Iterable[str] = ()):
        result = fit_bradley_terry(
            check_votes(votes), frozenset(excluded_users), self._config(), _as_mode(self.mode)
        )
        self.strengths_ = result.strengths
        self.converged_ = result.converged
        self.n_iter_ = result.iterations
        self.ranking_ = sorted(result.strengths, key=result.strengths.__getitem__, reverse=True)
        return self

    def predict_proba(self, pairs: Iterable[tuple[str, str]]) -> list[float]:
        if not hasattr(self, "strengths_"):
            raise RuntimeError("estimator is not fitted; call fit(votes) first")
        out = []
        for a, b in pairs:
            s_a = self.strengths_[a]
            s_b = self.strengths_[b]
            out.append(s_a / (s_a + s_b))
        return out


class FraudDetector(ParamsMixin):
    """Binomial-test fraud sweep as a fit-shaped estimator.

    Fitted attributes: ``reports_``, ``flagged_``, ``authenticity_rate_``,
    ``null_p0_``. ``predict`` returns flag booleans for user ids.
    """

    def __init__(
        self,
        p_threshold: float = 1e-5,
        min_consensus_votes_per_pair: int = 10,
        min_scorable_votes_per_user: int = 10,
        null_agreement: str = "community_mean",
    ):
        self.p_threshold = p_threshold
        self.min_consensus_votes_per_pair = min_consensus_votes_per_pair
        self.min_scorable_votes_per_user = min_scorable_votes_per_user
        self.null_agreement = null_agreement

    def _config(self) -> FraudConfig:
        return FraudConfig(
            p_threshold=self.p_threshold,
            min_consensus_votes_per_pair=self.min_consensus_votes_per_pair,
            min_scorable_votes_per_user=self.min_scorable_votes_per_user,
            null_agreement=self.null_agreement,
        )

    def fit(self, votes: Sequence[VoteRecord], users: Optional[Iterable[str]] = None):
        result = run_fraud_sweep(check_votes(votes), users, self._config())
        self.reports_ = result.reports
        self.flagged_ = result.flagged
        self.authenticity_rate_ = result.authenticity_rate
        self.null_p0_ = result.null_p0
        return self

    def predict(self, user_ids: Iterable[str]) -> list[bool]:
        if not hasattr(self, "flagged_"):
            raise RuntimeError("estimator is not fitted; call fit(votes) first")
        return [u in self.flagged_ for u in user_ids]
