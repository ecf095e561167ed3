"""Participation, segment effects, polygon correlation, geometry stats."""

import math

import pytest

from assetarena.analytics import (
    EmptySegmentError,
    InsufficientDataError,
    mesh_geometry_stats,
    participation_stats,
    polygon_correlation,
    segment_effect,
    two_proportion_z,
)
from assetarena.models import AssetEntry, AssetFormat, RatingState, VoteMode
from assetarena.rating import EloConfig, RatingSnapshot, config_fingerprint, replay_elo
from assetarena.simulator import PersonaSpec, SimConfig, SimModel, simulate

from helpers import make_model, make_registry, ref, vote

# frozen: z = 0.2 / sqrt(0.5 * 0.5 * (1/100 + 1/100)) = 2*sqrt(2), p = erfc(2)
Z_60_40 = 2.8284271247461903
P_60_40 = 0.004677734981047266


def snapshot_from(states: dict[str, RatingState]) -> RatingSnapshot:
    return RatingSnapshot(
        ratings=states,
        mode=VoteMode.STANDARD,
        vote_count_processed=sum(s.wins for s in states.values()),
        config_fingerprint=config_fingerprint(EloConfig(), VoteMode.STANDARD),
    )


class TestParticipation:
    def test_three_user_example(self):
        votes = []
        i = 0
        for user, count in (("u1", 1), ("u2", 8), ("u3", 100)):
            for _ in range(count):
                votes.append(vote(i, "a", "b", user=user))
                i += 1
        report = participation_stats(votes)
        assert report.user_count == 3
        assert report.vote_count == 109
        assert report.median_votes_per_user == 8
        assert report.mean_votes_per_user == pytest.approx(109 / 3, abs=5e-3)
        assert report.bucket_shares == {
            "1-10": pytest.approx(2 / 3), "11-50": 0.0, ">50": pytest.approx(1 / 3),
        }

    def test_single_user_single_vote(self):
        report = participation_stats([vote(0, "a", "b")])
        assert report.median_votes_per_user == report.mean_votes_per_user == 1

    def test_lower_median_for_even_counts(self):
        votes = []
        i = 0
        for user, count in (("u1", 2), ("u2", 4), ("u3", 6), ("u4", 9)):
            for _ in range(count):
                votes.append(vote(i, "a", "b", user=user))
                i += 1
        assert participation_stats(votes).median_votes_per_user == 4

    def test_empty(self):
        report = participation_stats([])
        assert report.user_count == 0
        assert report.bucket_shares is None

    def test_bucket_shares_sum_to_one(self):
        votes = []
        i = 0
        for u in range(37):
            for _ in range((u % 13) + 1):
                votes.append(vote(i, "a", "b", user=f"u{u}"))
                i += 1
        shares = participation_stats(votes).bucket_shares
        assert sum(shares.values()) == pytest.approx(1.0, abs=1e-9)

    def test_default_population_matches_target_buckets(self):
        cfg = SimConfig(
            models=[SimModel("m1", 1250.0), SimModel("m2", 1150.0)],
            personas={"honest": PersonaSpec(count=8096)},
            n_prompts=2,
            seed=17,
        )
        sim = simulate(cfg)
        shares = participation_stats(sim.votes).bucket_shares
        assert shares["1-10"] == pytest.approx(0.616, abs=0.02)
        assert shares["11-50"] == pytest.approx(0.347, abs=0.02)
        assert shares[">50"] == pytest.approx(0.037, abs=0.02)


class TestTwoProportion:
    def test_identical_proportions(self):
        z, p = two_proportion_z(40, 100, 40, 100)
        assert z == 0.0
        assert p == 1.0

    def test_frozen_example(self):
        z, p = two_proportion_z(60, 100, 40, 100)
        assert z == pytest.approx(Z_60_40, rel=1e-12)
        assert p == pytest.approx(P_60_40, rel=1e-6)

    def test_swap_negates_z_preserves_p(self):
        z1, p1 = two_proportion_z(60, 100, 40, 100)
        z2, p2 = two_proportion_z(40, 100, 60, 100)
        assert z2 == -z1
        assert p2 == p1


def two_segment_registry():
    return make_registry({"m-mesh1": "mesh", "m-mesh2": "mesh", "s-splat1": "splat", "s-splat2": "splat"})


class TestSegmentEffect:
    def test_win_rate_pooling_equals_weighted_mean(self):
        registry = two_segment_registry()
        states = {
            "m-mesh1": RatingState(model_id="m-mesh1", elo=1210.0, votes=100, wins=60),
            "m-mesh2": RatingState(model_id="m-mesh2", elo=1190.0, votes=50, wins=20),
            "s-splat1": RatingState(model_id="s-splat1", elo=1230.0, votes=80, wins=50),
            "s-splat2": RatingState(model_id="s-splat2", elo=1170.0, votes=40, wins=15),
        }
        report = segment_effect(registry, snapshot_from(states), "format")
        mesh = report.segments[0]
        assert mesh.label == "mesh"
        pooled = (60 + 20) / 150
        weighted = (100 * 0.6 + 50 * 0.4) / 150
        assert mesh.win_rate == pytest.approx(pooled) == pytest.approx(weighted)
        assert mesh.mean_elo == pytest.approx(1200.0)
        assert mesh.elo_std == pytest.approx(10.0)

    def test_z_example_through_pipeline(self):
        registry = two_segment_registry()
        states = {
            "m-mesh1": RatingState(model_id="m-mesh1", elo=1250.0, votes=100, wins=60),
            "s-splat1": RatingState(model_id="s-splat1", elo=1150.0, votes=100, wins=40),
        }
        report = segment_effect(registry, snapshot_from(states), "format")
        assert report.test == "two-proportion-z"
        assert abs(report.z_statistic) == pytest.approx(Z_60_40, rel=1e-12)
        assert report.p_value == pytest.approx(P_60_40, rel=1e-6)

    def test_small_cells_use_exact_test(self):
        registry = two_segment_registry()
        states = {
            "m-mesh1": RatingState(model_id="m-mesh1", elo=1210.0, votes=6, wins=5),
            "s-splat1": RatingState(model_id="s-splat1", elo=1190.0, votes=6, wins=2),
        }
        report = segment_effect(registry, snapshot_from(states), "format")
        assert report.test == "fisher-exact"
        assert 0.0 <= report.p_value <= 1.0

    def test_empty_segment_raises(self):
        registry = make_registry({"m-mesh1": "mesh", "m-mesh2": "mesh"})
        states = {
            "m-mesh1": RatingState(model_id="m-mesh1", elo=1210.0, votes=10, wins=5),
            "m-mesh2": RatingState(model_id="m-mesh2", elo=1190.0, votes=10, wins=5),
        }
        with pytest.raises(EmptySegmentError):
            segment_effect(registry, snapshot_from(states), "format")

    def test_textured_key(self):
        from dataclasses import replace

        registry = make_registry(["t1", "t2"])
        registry.add_model(replace(make_model("bare1"), textured=False))
        states = {
            "t1": RatingState(model_id="t1", elo=1260.0, votes=40, wins=28),
            "t2": RatingState(model_id="t2", elo=1220.0, votes=40, wins=22),
            "bare1": RatingState(model_id="bare1", elo=1100.0, votes=40, wins=10),
        }
        report = segment_effect(registry, snapshot_from(states), "textured")
        textured, untextured = report.segments
        assert textured.model_count == 2
        assert untextured.model_count == 1
        assert textured.mean_elo > untextured.mean_elo

    def test_format_advantage_detected_in_simulation(self):
        cfg = SimConfig(
            models=[
                SimModel("mesh-1", 1200.0, format=AssetFormat.MESH),
                SimModel("mesh-2", 1180.0, format=AssetFormat.MESH),
                SimModel("splat-1", 1278.0, format=AssetFormat.SPLAT),
                SimModel("splat-2", 1258.0, format=AssetFormat.SPLAT),
            ],
            personas={"honest": PersonaSpec(count=120)},
            total_votes=5000,
            n_prompts=5,
            seed=23,
        )
        sim = simulate(cfg)
        snapshot = replay_elo(sim.votes)
        report = segment_effect(sim.registry, snapshot, "format")
        mesh, splat = report.segments
        assert splat.win_rate > mesh.win_rate
        assert splat.mean_elo > mesh.mean_elo
        assert report.p_value < 0.01


class TestPolygonCorrelation:
    def _registry_with_polygons(self, polys: dict[str, int]):
        from dataclasses import replace

        registry = make_registry({m: "mesh" for m in polys}, prompts=["p0"])
        for model_id, count in polys.items():
            asset = registry.assets[f"{model_id}--p0"]
            registry.assets[f"{model_id}--p0"] = replace(asset, polygon_count=count)
        return registry

    def test_constant_win_rate_has_undefined_r(self):
        polys = {"a": 1000, "b": 5000, "c": 40000}
        registry = self._registry_with_polygons(polys)
        states = {
            m: RatingState(model_id=m, elo=1200.0, votes=10, wins=5) for m in polys
        }
        report = polygon_correlation(registry, snapshot_from(states))
        assert report.pearson_r is None

    def test_collinear_increasing_r_is_one(self):
        polys = {"a": 100, "b": 1000, "c": 10000}
        registry = self._registry_with_polygons(polys)
        states = {
            "a": RatingState(model_id="a", elo=1100.0, votes=10, wins=2),
            "b": RatingState(model_id="b", elo=1200.0, votes=10, wins=5),
            "c": RatingState(model_id="c", elo=1300.0, votes=10, wins=8),
        }
        report = polygon_correlation(registry, snapshot_from(states))
        assert report.pearson_r == pytest.approx(1.0, abs=1e-12)

    def test_five_model_fixture_matches_direct_formula(self):
        polys = {"a": 800, "b": 3000, "c": 12000, "d": 45000, "e": 220000}
        rates = {"a": 0.31, "b": 0.58, "c": 0.61, "d": 0.55, "e": 0.49}
        registry = self._registry_with_polygons(polys)
        states = {
            m: RatingState(model_id=m, elo=1200.0, votes=100, wins=int(rates[m] * 100))
            for m in polys
        }
        report = polygon_correlation(registry, snapshot_from(states))

        xs = [math.log10(polys[m]) for m in sorted(polys)]
        ys = [states[m].win_rate for m in sorted(polys)]
        n = len(xs)
        mx, my = sum(xs) / n, sum(ys) / n
        cov = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
        vx = sum((x - mx) ** 2 for x in xs)
        vy = sum((y - my) ** 2 for y in ys)
        expected = cov / math.sqrt(vx * vy)
        assert report.pearson_r == pytest.approx(expected, abs=1e-12)

    def test_bins_aggregate_votes(self):
        polys = {"a": 800, "b": 3000, "c": 12000, "d": 45000, "e": 220000}
        registry = self._registry_with_polygons(polys)
        states = {
            m: RatingState(model_id=m, elo=1200.0, votes=10, wins=6) for m in polys
        }
        report = polygon_correlation(registry, snapshot_from(states))
        labels = [b.label for b in report.bins]
        assert labels == ["<1K", "1K-5K", "5K-20K", "20K-100K", ">100K"]
        assert [b.model_count for b in report.bins] == [1, 1, 1, 1, 1]
        assert all(b.win_rate == pytest.approx(0.6) for b in report.bins)

    def test_insufficient_models(self):
        polys = {"a": 800, "b": 3000}
        registry = self._registry_with_polygons(polys)
        states = {m: RatingState(model_id=m, elo=1200.0, votes=10, wins=5) for m in polys}
        with pytest.raises(InsufficientDataError):
            polygon_correlation(registry, snapshot_from(states))

    def test_exclusion_list_removes_models(self):
        polys = {"a": 800, "b": 3000, "c": 12000, "d": 45000}
        registry = self._registry_with_polygons(polys)
        states = {m: RatingState(model_id=m, elo=1200.0, votes=10, wins=5) for m in polys}
        report = polygon_correlation(registry, snapshot_from(states), exclude_models=["a"])
        assert report.model_count == 3

    def test_affine_rescale_invariance(self):
        polys = {"a": 800, "b": 3000, "c": 12000, "d": 45000, "e": 220000}
        registry_1 = self._registry_with_polygons(polys)
        registry_2 = self._registry_with_polygons({m: v * 10 for m, v in polys.items()})
        rates = {"a": 0.31, "b": 0.58, "c": 0.61, "d": 0.55, "e": 0.49}
        states = {
            m: RatingState(model_id=m, elo=1200.0, votes=100, wins=int(rates[m] * 100))
            for m in polys
        }
        r1 = polygon_correlation(registry_1, snapshot_from(states)).pearson_r
        r2 = polygon_correlation(registry_2, snapshot_from(states)).pearson_r
        assert r1 == pytest.approx(r2, abs=1e-12)
        assert -1.0 <= r1 <= 1.0


class TestMeshGeometry:
    def test_small_example(self):
        registry = make_registry(["a", "b", "c"], prompts=["p0"])
        from dataclasses import replace
        for model_id, count in (("a", 1), ("b", 2), ("c", 3)):
            key = f"{model_id}--p0"
            registry.assets[key] = replace(registry.assets[key], polygon_count=count)
        stats = mesh_geometry_stats(registry)
        assert stats.file_count == 3
        assert stats.mean_polygons == 2
        assert stats.median_polygons == 2

    def test_empty(self):
        stats = mesh_geometry_stats(make_registry({"s": "splat"}))
        assert stats.file_count == 0
        assert stats.mean_polygons is None

    def test_ten_asset_fixture(self):
        counts = [120, 480, 950, 2200, 7600, 15000, 36000, 64000, 120000, 500000]
        registry = make_registry([f"m{i}" for i in range(10)], prompts=["p0"])
        from dataclasses import replace
        for i, count in enumerate(counts):
            key = f"m{i}--p0"
            registry.assets[key] = replace(registry.assets[key], polygon_count=count)
        stats = mesh_geometry_stats(registry)
        assert stats.file_count == 10
        assert stats.mean_polygons == pytest.approx(sum(counts) / 10)
        assert stats.median_polygons == pytest.approx((7600 + 15000) / 2)
