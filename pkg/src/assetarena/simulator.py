"""Synthetic vote-log generation with known ground truth.

The simulator builds a registry, a voter population of configurable
personas, and a vote log, all deterministically from one seed:

* honest voters pick the stronger side with the logistic probability implied
  by the true ratings;
* inverters pick the complement;
* uniform_random voters flip a fair coin;
* position_biased voters pick the left pane with a fixed probability.

Per-user vote counts follow a log-normal whose default parameters reproduce
a heavy-tailed participation split of roughly 61.6% / 34.7% / 3.7% across
the 1-10 / 11-50 / >50 buckets. Ground-truth persona assignments ride along
in the result so recovery experiments can score detector output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Optional, Sequence

import numpy as np
from scipy.stats import kendalltau, spearmanr

from .fraud import FraudConfig, run_fraud_sweep
from .models import (
    AssetEntry,
    AssetFormat,
    ModelEntry,
    PromptEntry,
    Registry,
    Slot,
    VoteMode,
    VoteRecord,
)
from .rating import BtConfig, EloConfig, elo_expected, fit_bradley_terry, replay_elo
from .scheduler import PairScheduler, SchedulerConfig
from .store import Record

# defaults calibrated so rounded draws land in the target participation buckets
VOTES_LOGNORMAL_MU = 2.0408
VOTES_LOGNORMAL_SIGMA = 1.0530

_EPOCH = datetime(2025, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True, slots=True)
class SimModel:
    model_id: str
    true_elo: float
    format: AssetFormat = AssetFormat.MESH
    textured: bool = True
    exposure_weight: float = 1.0
    polygon_count: int = 50_000

    def __post_init__(self) -> None:
        if self.exposure_weight <= 0:
            raise ValueError("exposure_weight must be positive")


@dataclass(frozen=True, slots=True)
class PersonaSpec:
    count: int
    min_votes: int = 1
    fixed_votes: Optional[int] = None

    def __post_init__(self) -> None:
        if self.count < 0:
            raise ValueError("persona count must be >= 0")
        if self.min_votes < 0:
            raise ValueError("min_votes must be >= 0")


PERSONAS = ("honest", "inverter", "uniform_random", "position_biased")


@dataclass(frozen=True)
class SimConfig:
    models: Sequence[SimModel]
    personas: dict[str, PersonaSpec] = field(
        default_factory=lambda: {"honest": PersonaSpec(count=100)}
    )
    total_votes: Optional[int] = None
    n_prompts: int = 20
    seed: int = 0
    position_left_prob: float = 0.9
    mode: VoteMode = VoteMode.STANDARD
    votes_lognormal_mu: float = VOTES_LOGNORMAL_MU
    votes_lognormal_sigma: float = VOTES_LOGNORMAL_SIGMA

    def __post_init__(self) -> None:
        if len(self.models) < 2:
            raise ValueError("simulation needs at least two models")
        ids = [m.model_id for m in self.models]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate model ids in simulation config")
        for name in self.personas:
            if name not in PERSONAS:
                raise ValueError(f"unknown persona {name!r}")
        if not 0.0 <= self.position_left_prob <= 1.0:
            raise ValueError("position_left_prob must be in [0, 1]")
        if self.total_votes is not None and self.total_votes < 0:
            raise ValueError("total_votes must be >= 0")
        if self.n_prompts < 1:
            raise ValueError("n_prompts must be >= 1")


@dataclass(frozen=True)
class SimResult:
    registry: Registry
    votes: list[VoteRecord]
    personas: dict[str, str]  # user_id -> persona
    true_elo: dict[str, float]

    def records(self) -> list[Record]:
        out: list[Record] = []
        out.extend(self.registry.models.values())
        out.extend(self.registry.prompts.values())
        out.extend(self.registry.assets.values())
        out.extend(self.votes)
        return out

    def users(self) -> list[str]:
        return sorted(self.personas)


def _build_registry(cfg: SimConfig) -> Registry:
    registry = Registry()
    for m in cfg.models:
        registry.add_model(ModelEntry(
            model_id=m.model_id,
            display_name=m.model_id,
            format=m.format,
            textured=m.textured,
            anonymous=False,
            source_url=f"https://example.org/{m.model_id}",
            registered_at=_EPOCH,
        ))
    for p in range(cfg.n_prompts):
        prompt_id = f"prompt-{p:04d}"
        registry.add_prompt(PromptEntry(
            prompt_id=prompt_id,
            image_ref=hashlib.sha256(prompt_id.encode()).hexdigest(),
        ))
        for m in cfg.models:
            polygons = m.polygon_count if m.format is AssetFormat.MESH else 0
            if m.format is AssetFormat.MESH:
                polygons = max(1, polygons)
            registry.add_asset(AssetEntry(
                asset_id=f"{m.model_id}--{prompt_id}",
                model_id=m.model_id,
                prompt_id=prompt_id,
                format=m.format,
                polygon_count=polygons,
                file_ref=hashlib.sha256(f"{m.model_id}/{prompt_id}".encode()).hexdigest(),
                textured=m.textured,
            ))
    return registry


def _draw_vote_counts(cfg: SimConfig, rng: np.random.Generator) -> tuple[list[str], dict[str, str], np.ndarray]:
    user_ids: list[str] = []
    personas: dict[str, str] = {}
    counts: list[int] = []
    serial = 0
    for persona in PERSONAS:
        spec = cfg.personas.get(persona)
        if spec is None or spec.count == 0:
            continue
        draws = np.maximum(
            1,
            np.rint(rng.lognormal(cfg.votes_lognormal_mu, cfg.votes_lognormal_sigma, spec.count)),
        ).astype(np.int64)
        if spec.fixed_votes is not None:
            draws[:] = spec.fixed_votes
        draws = np.maximum(draws, spec.min_votes)
        for c in draws:
            user_id = f"user-{serial:06d}"
            serial += 1
            user_ids.append(user_id)
            personas[user_id] = persona
            counts.append(int(c))
    counts_arr = np.array(counts, dtype=np.int64)
    if cfg.total_votes is not None and counts_arr.sum() > 0:
        counts_arr = _rescale_counts(counts_arr, cfg.total_votes, cfg, personas, user_ids)
    return user_ids, personas, counts_arr


def _rescale_counts(
    counts: np.ndarray,
    target: int,
    cfg: SimConfig,
    personas: dict[str, str],
    user_ids: list[str],
) -> np.ndarray:
    """Scale per-user counts to hit the exact total while honoring per-persona floors."""
    floors = np.array(
        [max(1, cfg.personas[personas[u]].min_votes) for u in user_ids], dtype=np.int64
    )
    scaled = np.maximum(floors, np.rint(counts * (target / counts.sum())).astype(np.int64))
    diff = int(target - scaled.sum())
    order = np.argsort(-scaled)  # adjust heaviest users first
    i = 0
    while diff != 0 and len(order):
        j = order[i % len(order)]
        if diff > 0:
            scaled[j] += 1
            diff -= 1
        elif scaled[j] > floors[j]:
            scaled[j] -= 1
            diff += 1
        i += 1
        if i > 10 * len(order) and diff < 0:
            break  # floors make the target unreachable; keep the floor total
    return scaled


def simulate(cfg: SimConfig, scheduler_config: Optional[SchedulerConfig] = None) -> SimResult:
    """Generate a registry and vote log; byte-identical output for a fixed seed.

    Pair selection is exposure-weighted by default (probability proportional
    to the product of the two models' weights). Passing a scheduler
    configuration routes pair choice through that policy instead.
    """
    rng = np.random.default_rng(cfg.seed)
    registry = _build_registry(cfg)
    user_ids, personas, counts = _draw_vote_counts(cfg, rng)
    total = int(counts.sum()) if len(counts) else 0
    true_elo = {m.model_id: m.true_elo for m in cfg.models}

    if total == 0 or len(cfg.models) < 2:
        return SimResult(registry=registry, votes=[], personas=personas, true_elo=true_elo)

    # one slot per vote, shuffled so heavy users do not cluster in time
    user_idx = np.repeat(np.arange(len(user_ids)), counts)
    rng.shuffle(user_idx)

    models = list(cfg.models)
    n = len(models)
    pair_list = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if scheduler_config is None:
        weights = np.array(
            [models[i].exposure_weight * models[j].exposure_weight for i, j in pair_list]
        )
        weights = weights / weights.sum()
        pair_idx = rng.choice(len(pair_list), size=total, p=weights)
    else:
        pair_idx = None  # chosen per vote through the scheduler

    prompt_idx = rng.integers(0, cfg.n_prompts, size=total)
    left_draws = rng.integers(0, 2, size=total)
    outcome_draws = rng.random(size=total)

    # probability that the lexicographic pair's first element wins, per pair
    elo_cfg = EloConfig()
    ordered: list[tuple[str, str]] = []
    p_first = np.empty(len(pair_list))
    for k, (i, j) in enumerate(pair_list):
        a_id, b_id = models[i].model_id, models[j].model_id
        if b_id < a_id:
            a_id, b_id = b_id, a_id
        ordered.append((a_id, b_id))
        p_first[k] = elo_expected(true_elo[a_id], true_elo[b_id], elo_cfg)

    sched = PairScheduler(scheduler_config) if scheduler_config is not None else None
    ordered_index = {pair: k for k, pair in enumerate(ordered)}

    votes: list[VoteRecord] = []
    for t in range(total):
        user_id = user_ids[user_idx[t]]
        persona = personas[user_id]
        if sched is not None:
            scheduled = sched.next_pair(user_id, registry, mode=cfg.mode)
            pair = (scheduled.model_a, scheduled.model_b)
            k = ordered_index[pair]
            prompt_id = scheduled.prompt_id
            left = scheduled.left_slot
        else:
            k = int(pair_idx[t])
            pair = ordered[k]
            prompt_id = f"prompt-{int(prompt_idx[t]):04d}"
            left = Slot.A if left_draws[t] == 0 else Slot.B

        p_a = p_first[k]
        if persona == "inverter":
            p_a = 1.0 - p_a
        elif persona == "uniform_random":
            p_a = 0.5
        elif persona == "position_biased":
            p_a = cfg.position_left_prob if left is Slot.A else 1.0 - cfg.position_left_prob
        winner = Slot.A if outcome_draws[t] < p_a else Slot.B

        cast_at = _EPOCH + timedelta(milliseconds=t)
        votes.append(VoteRecord(
            vote_id=f"sim-{t:08d}",
            user_id=user_id,
            prompt_id=prompt_id,
            model_a=pair[0],
            model_b=pair[1],
            winner=winner,
            left_slot=left,
            mode=cfg.mode,
            cast_at=cast_at,
        ))
        if sched is not None:
            sched.record_vote(pair[0], pair[1])

    return SimResult(registry=registry, votes=votes, personas=personas, true_elo=true_elo)


@dataclass(frozen=True, slots=True)
class ExperimentResult:
    spearman_true_vs_elo: Optional[float]
    kendall_elo_vs_bt: Optional[float]
    fraud_recall: Optional[float]
    honest_false_positive_rate: Optional[float]
    flagged_count: int
    persona_flag_rates: dict[str, Optional[float]]
    vote_count: int
    bt_converged: bool


def recovery_experiment(
    cfg: SimConfig,
    elo_config: EloConfig = EloConfig(),
    bt_config: BtConfig = BtConfig(),
    fraud_config: FraudConfig = FraudConfig(),
) -> ExperimentResult:
    """Full-pipeline validation: simulate, sweep for fraud, exclude, re-rate.

    Reports rank agreement between the ground truth and the recovered ELO,
    between the ELO and BT rankings, and the fraud detector's confusion rates
    against the known persona assignment.
    """
    sim = simulate(cfg)
    if not sim.votes:
        return ExperimentResult(
            spearman_true_vs_elo=None,
            kendall_elo_vs_bt=None,
            fraud_recall=None,
            honest_false_positive_rate=None,
            flagged_count=0,
            persona_flag_rates={},
            vote_count=0,
            bt_converged=True,
        )

    sweep = run_fraud_sweep(sim.votes, users=sim.users(), config=fraud_config)
    excluded = set(sweep.flagged)
    snapshot = replay_elo(sim.votes, excluded, cfg.mode, elo_config)
    bt = fit_bradley_terry(sim.votes, excluded, bt_config, cfg.mode)

    models = sorted(snapshot.ratings)
    true_vals = [sim.true_elo[m] for m in models]
    elo_vals = [snapshot.ratings[m].elo for m in models]
    spearman = float(spearmanr(true_vals, elo_vals)[0]) if len(models) >= 2 else None
    if len(models) >= 2 and all(m in bt.strengths for m in models):
        bt_vals = [bt.strengths[m] for m in models]
        kendall = float(kendalltau(elo_vals, bt_vals)[0])
    else:
        kendall = None

    rates: dict[str, Optional[float]] = {}
    for persona in PERSONAS:
        members = [u for u, p in sim.personas.items() if p == persona]
        if not members:
            continue
        rates[persona] = sum(1 for u in members if u in excluded) / len(members)
    return ExperimentResult(
        spearman_true_vs_elo=spearman,
        kendall_elo_vs_bt=kendall,
        fraud_recall=rates.get("inverter"),
        honest_false_positive_rate=rates.get("honest"),
        flagged_count=len(excluded),
        persona_flag_rates=rates,
        vote_count=len(sim.votes),
        bt_converged=bt.converged,
    )
