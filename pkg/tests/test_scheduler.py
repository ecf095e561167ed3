"""Pair selection strategies, placement fairness, determinism."""

import math
from collections import Counter

import pytest

from assetarena.models import RatingState, Slot, VoteMode
from assetarena.rating import RatingSnapshot, config_fingerprint, EloConfig
from assetarena.scheduler import NoEligiblePairError, PairScheduler, SchedulerConfig

from helpers import make_registry


class TestEligibility:
    def test_forced_choice_with_two_models(self):
        registry = make_registry(["alpha", "beta"])
        scheduler = PairScheduler(SchedulerConfig(seed=1))
        pair = scheduler.next_pair("u", registry)
        assert {pair.model_a, pair.model_b} == {"alpha", "beta"}
        assert pair.prompt_id == "p0"
        assert pair.left_slot in (Slot.A, Slot.B)

    def test_single_model_has_no_pair(self):
        registry = make_registry(["alpha"])
        with pytest.raises(NoEligiblePairError):
            PairScheduler().next_pair("u", registry)

    def test_models_without_shared_prompt_have_no_pair(self):
        registry = make_registry(["alpha"], prompts=["p0"])
        other = make_registry(["beta"], prompts=["p1"])
        registry.add_model(other.models["beta"])
        registry.add_prompt(other.prompts["p1"])
        registry.add_asset(other.assets["beta--p1"])
        with pytest.raises(NoEligiblePairError):
            PairScheduler().next_pair("u", registry)


class TestCountBalanced:
    def test_serves_least_voted_pair(self):
        registry = make_registry(["a", "b", "c"])
        scheduler = PairScheduler(
            SchedulerConfig(strategy="count_balanced", seed=0, recent_pair_memory=0),
            pair_counts={("a", "b"): 10, ("a", "c"): 2, ("b", "c"): 5},
        )
        pair = scheduler.next_pair("u", registry)
        assert (pair.model_a, pair.model_b) == ("a", "c")

    def test_balances_over_time(self):
        registry = make_registry(["a", "b", "c", "d"])
        scheduler = PairScheduler(SchedulerConfig(strategy="count_balanced", seed=3, recent_pair_memory=0))
        for _ in range(600):
            pair = scheduler.next_pair("u", registry)
            scheduler.record_vote(pair.model_a, pair.model_b)
        counts = scheduler.pair_counts
        assert max(counts.values()) - min(counts.values()) <= 1


class TestDeterminism:
    def test_same_seed_same_sequence(self):
        registry = make_registry(["a", "b", "c"])
        def run(seed):
            scheduler = PairScheduler(SchedulerConfig(strategy="uniform_random", seed=seed))
            return [
                (p.model_a, p.model_b, p.left_slot.value, p.prompt_id)
                for p in (scheduler.next_pair("u", registry) for _ in range(40))
            ]
        assert run(9) == run(9)
        assert run(9) != run(10)


class TestPlacementFairness:
    def test_left_assignment_balanced_per_model(self):
        registry = make_registry(["a", "b", "c"], prompts=["p0", "p1"])
        scheduler = PairScheduler(SchedulerConfig(strategy="uniform_random", seed=7, recent_pair_memory=0))
        left = Counter()
        appearances = Counter()
        n = 10_000
        for _ in range(n):
            pair = scheduler.next_pair("u", registry)
            left_model = pair.model_a if pair.left_slot is Slot.A else pair.model_b
            left[left_model] += 1
            appearances[pair.model_a] += 1
            appearances[pair.model_b] += 1
        for model in ("a", "b", "c"):
            share = left[model] / appearances[model]
            assert abs(share - 0.5) <= 0.02

    def test_uniform_pair_frequencies(self):
        registry = make_registry(["a", "b", "c", "d", "e"], prompts=["p0"])
        scheduler = PairScheduler(SchedulerConfig(strategy="uniform_random", seed=11, recent_pair_memory=0))
        n = 100_000
        counts = Counter()
        for _ in range(n):
            pair = scheduler.next_pair("u", registry)
            counts[(pair.model_a, pair.model_b)] += 1
        n_pairs = 10
        expected = n / n_pairs
        sigma = math.sqrt(n * (1 / n_pairs) * (1 - 1 / n_pairs))
        for pair_key, count in counts.items():
            assert abs(count - expected) <= 3 * sigma, (pair_key, count)
        assert len(counts) == n_pairs


class TestRecentMemory:
    def test_avoids_recent_pairs_when_possible(self):
        registry = make_registry(["a", "b", "c"])
        scheduler = PairScheduler(SchedulerConfig(strategy="uniform_random", seed=2, recent_pair_memory=2))
        served = [scheduler.next_pair("u", registry) for _ in range(3)]
        pairs = [(p.model_a, p.model_b) for p in served]
        assert len(set(pairs)) == 3  # three distinct pairs before any repeat

    def test_falls_back_when_everything_is_recent(self):
        registry = make_registry(["a", "b"])
        scheduler = PairScheduler(SchedulerConfig(strategy="uniform_random", seed=2, recent_pair_memory=5))
        for _ in range(4):
            pair = scheduler.next_pair("u", registry)
            assert (pair.model_a, pair.model_b) == ("a", "b")

    def test_memory_is_per_user(self):
        registry = make_registry(["a", "b", "c"])
        scheduler = PairScheduler(SchedulerConfig(strategy="uniform_random", seed=4, recent_pair_memory=3))
        first = scheduler.next_pair("u1", registry)
        second = scheduler.next_pair("u2", registry)
        assert first is not None and second is not None
        assert len(scheduler._recent["u1"]) == 1
        assert len(scheduler._recent["u2"]) == 1


class TestUncertaintyWeighted:
    def _snapshot(self, cis):
        ratings = {
            model: RatingState(model_id=model, elo=1200.0, votes=10, wins=5,
                               ci_low=lo, ci_high=hi)
            for model, (lo, hi) in cis.items()
        }
        return RatingSnapshot(
            ratings=ratings, mode=VoteMode.STANDARD, vote_count_processed=0,
            config_fingerprint=config_fingerprint(EloConfig(), VoteMode.STANDARD),
        )

    def test_prefers_overlapping_intervals(self):
        registry = make_registry(["a", "b", "c"])
        snapshot = self._snapshot({
            "a": (1150.0, 1250.0),
            "b": (1160.0, 1260.0),   # overlaps a heavily
            "c": (1500.0, 1600.0),   # far away from both
        })
        scheduler = PairScheduler(SchedulerConfig(strategy="uncertainty_weighted", seed=5, recent_pair_memory=0))
        counts = Counter()
        for _ in range(2000):
            pair = scheduler.next_pair("u", registry, snapshot)
            counts[(pair.model_a, pair.model_b)] += 1
        assert counts[("a", "b")] > 0.95 * 2000

    def test_without_cis_still_serves(self):
        registry = make_registry(["a", "b", "c"])
        scheduler = PairScheduler(SchedulerConfig(strategy="uncertainty_weighted", seed=6))
        pair = scheduler.next_pair("u", registry, None)
        assert pair.model_a < pair.model_b


def test_invalid_config():
    with pytest.raises(ValueError):
        SchedulerConfig(strategy="greedy")
    with pytest.raises(ValueError):
        SchedulerConfig(recent_pair_memory=-1)
