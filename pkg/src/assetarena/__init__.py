"""Arena-style pairwise preference collection and rating for generative 3D models."""

from .models import (
    AssetEntry,
    AssetFormat,
    LeaderboardRow,
    ModelEntry,
    PromptEntry,
    RatingState,
    Registry,
    Rejection,
    Slot,
    UserRecord,
    VoteMode,
    VoteRecord,
    leaderboard_row,
    sort_leaderboard,
    utc_now_ms,
    validate_vote,
)
from .rating import (
    BtConfig,
    BtResult,
    EloConfig,
    RatingSnapshot,
    bootstrap_ci,
    build_snapshot,
    elo_expected,
    elo_update,
    fit_bradley_terry,
    replay_elo,
    win_rate_table,
)
from .fraud import (
    ConsensusTable,
    FraudConfig,
    FraudReport,
    FraudSweepResult,
    build_consensus,
    exact_binomial_lower_tail,
    run_fraud_sweep,
    score_user,
)
from .scheduler import NoEligiblePairError, PairScheduler, SchedulerConfig, ScheduledPair
from .store import ArenaState, FlagRecord, VoteLog, replay, snapshot_export, write_log
from .estimators import BradleyTerryRanker, EloRatingSystem, FraudDetector
from .simulator import PersonaSpec, SimConfig, SimModel, recovery_experiment, simulate

__version__ = "0.1.0"

__all__ = [
    "AssetEntry",
    "AssetFormat",
    "ArenaState",
    "BradleyTerryRanker",
    "BtConfig",
    "BtResult",
    "ConsensusTable",
    "EloConfig",
    "EloRatingSystem",
    "FlagRecord",
    "FraudConfig",
    "FraudDetector",
    "FraudReport",
    "FraudSweepResult",
    "LeaderboardRow",
    "ModelEntry",
    "NoEligiblePairError",
    "PairScheduler",
    "PersonaSpec",
    "PromptEntry",
    "RatingSnapshot",
    "RatingState",
    "Registry",
    "Rejection",
    "ScheduledPair",
    "SchedulerConfig",
    "SimConfig",
    "SimModel",
    "Slot",
    "UserRecord",
    "VoteLog",
    "VoteMode",
    "VoteRecord",
    "bootstrap_ci",
    "build_consensus",
    "build_snapshot",
    "elo_expected",
    "elo_update",
    "exact_binomial_lower_tail",
    "fit_bradley_terry",
    "leaderboard_row",
    "recovery_experiment",
    "replay",
    "replay_elo",
    "run_fraud_sweep",
    "score_user",
    "simulate",
    "snapshot_export",
    "sort_leaderboard",
    "utc_now_ms",
    "validate_vote",
    "win_rate_table",
    "write_log",
]
