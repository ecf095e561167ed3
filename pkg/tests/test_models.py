"""Domain type validation, vote validation, leaderboard rows."""

from datetime import datetime, timezone

import pytest
from hypothesis import given
from hypothesis import strategies as st

from assetarena.models import (
    AssetEntry,
    AssetFormat,
    LeaderboardRow,
    ModelEntry,
    RatingState,
    Rejection,
    Slot,
    UserRecord,
    VoteRecord,
    VoteMode,
    format_ts,
    leaderboard_row,
    parse_ts,
    sort_leaderboard,
    validate_vote,
)

from helpers import EPOCH, make_model, make_registry, ref, ts, vote


class TestEntryInvariants:
    def test_model_requires_source_url_unless_anonymous(self):
        with pytest.raises(ValueError, match="source_url"):
            ModelEntry(
                model_id="m", display_name="M", format=AssetFormat.MESH,
                textured=True, anonymous=False, source_url=None, registered_at=EPOCH,
            )
        anon = make_model("ghost", anonymous=True)
        assert anon.source_url is None

    def test_model_id_must_be_non_empty(self):
        with pytest.raises(ValueError):
            make_model("")

    def test_mesh_asset_needs_polygons(self):
        with pytest.raises(ValueError, match="polygon_count"):
            AssetEntry(
                asset_id="a", model_id="m", prompt_id="p",
                format=AssetFormat.MESH, polygon_count=0, file_ref=ref("a"), textured=True,
            )

    def test_splat_asset_may_have_zero_polygons(self):
        entry = AssetEntry(
            asset_id="a", model_id="m", prompt_id="p",
            format=AssetFormat.SPLAT, polygon_count=0, file_ref=ref("a"), textured=True,
        )
        assert entry.polygon_count == 0

    def test_negative_polygon_count_rejected(self):
        with pytest.raises(ValueError):
            AssetEntry(
                asset_id="a", model_id="m", prompt_id="p",
                format=AssetFormat.SPLAT, polygon_count=-1, file_ref=ref("a"), textured=True,
            )

    def test_naive_timestamp_rejected(self):
        with pytest.raises(ValueError, match="UTC"):
            VoteRecord(
                vote_id="v", user_id="u", prompt_id="p", model_a="a", model_b="b",
                winner=Slot.A, left_slot=Slot.A, mode=VoteMode.STANDARD,
                cast_at=datetime(2025, 1, 1),
            )

    def test_submillisecond_timestamp_rejected(self):
        with pytest.raises(ValueError, match="millisecond"):
            VoteRecord(
                vote_id="v", user_id="u", prompt_id="p", model_a="a", model_b="b",
                winner=Slot.A, left_slot=Slot.A, mode=VoteMode.STANDARD,
                cast_at=datetime(2025, 1, 1, microsecond=1, tzinfo=timezone.utc),
            )

    def test_flagged_user_needs_p_value(self):
        with pytest.raises(ValueError):
            UserRecord(user_id="u", first_seen=EPOCH, flagged=True)
        record = UserRecord(user_id="u", first_seen=EPOCH, flagged=True, flag_p_value=1e-7)
        assert record.flag_p_value == 1e-7

    def test_rating_state_tallies(self):
        with pytest.raises(ValueError):
            RatingState(model_id="m", elo=1200.0, votes=1, wins=2)
        state = RatingState(model_id="m", elo=1200.0, votes=4, wins=3)
        assert state.win_rate == 0.75
        assert RatingState(model_id="m", elo=1200.0).win_rate is None


class TestRegistry:
    def test_duplicate_model_rejected(self):
        registry = make_registry(["alpha"])
        with pytest.raises(ValueError, match="duplicate"):
            registry.add_model(make_model("alpha"))

    def test_asset_format_must_match_model(self):
        registry = make_registry({"alpha": "mesh"})
        with pytest.raises(ValueError, match="format"):
            registry.add_asset(AssetEntry(
                asset_id="x", model_id="alpha", prompt_id="p0",
                format=AssetFormat.SPLAT, polygon_count=0, file_ref=ref("x"), textured=True,
            ))

    def test_duplicate_model_prompt_pair_rejected(self):
        registry = make_registry(["alpha"])
        with pytest.raises(ValueError, match="pair"):
            registry.add_asset(AssetEntry(
                asset_id="x2", model_id="alpha", prompt_id="p0",
                format=AssetFormat.MESH, polygon_count=5, file_ref=ref("x2"), textured=True,
            ))

    def test_eligible_pairs(self):
        registry = make_registry(["a", "b", "c"], prompts=["p0", "p1"])
        pairs = registry.eligible_pairs()
        assert set(pairs) == {("a", "b"), ("a", "c"), ("b", "c")}
        assert pairs[("a", "b")] == ["p0", "p1"]


class TestValidateVote:
    def test_self_comparison_rejected(self):
        registry = make_registry(["alpha", "beta"])
        assert validate_vote(vote(0, "alpha", "alpha"), registry) is Rejection.SELF_COMPARISON

    def test_unknown_model_rejected(self):
        registry = make_registry(["alpha", "beta"])
        assert validate_vote(vote(0, "alpha", "gamma"), registry) is Rejection.UNKNOWN_MODEL

    def test_unknown_prompt_rejected(self):
        registry = make_registry(["alpha", "beta"])
        assert validate_vote(vote(0, "alpha", "beta", prompt="nope"), registry) is Rejection.UNKNOWN_PROMPT

    def test_missing_asset_rejected(self):
        registry = make_registry(["alpha", "beta"], prompts=["p0"])
        registry.add_model(make_model("gamma"))
        assert validate_vote(vote(0, "alpha", "gamma"), registry) is Rejection.MISSING_ASSET

    def test_backwards_timestamp_rejected(self):
        registry = make_registry(["alpha", "beta"])
        assert validate_vote(vote(0, "alpha", "beta"), registry, last_cast_at=ts(5)) is Rejection.BAD_TIMESTAMP
        assert validate_vote(vote(5, "alpha", "beta"), registry, last_cast_at=ts(5)) is None

    def test_well_formed_vote_accepted(self):
        registry = make_registry(["alpha", "beta"], prompts=["p0", "p1"])
        assert validate_vote(vote(3, "alpha", "beta", prompt="p1"), registry) is None

    def test_pure_no_mutation(self):
        registry = make_registry(["alpha", "beta"])
        before = dict(registry.models)
        validate_vote(vote(0, "alpha", "beta"), registry)
        assert registry.models == before


class TestLeaderboardRow:
    def test_top_row_formatting(self):
        model = ModelEntry(
            model_id="cube", display_name="CSM/Cube", format=AssetFormat.SPLAT,
            textured=True, anonymous=False, source_url="https://example.org/cube",
            registered_at=EPOCH,
        )
        rating = RatingState(model_id="cube", elo=1405.2, votes=3027, wins=2521)
        row = leaderboard_row(model, rating)
        assert (row.elo, row.votes, row.win_rate_label, row.format_label) == (1405, 3027, "83.3%", "Splat")
        assert row.public

    def test_zero_votes_renders_dash(self):
        model = make_model("fresh")
        row = leaderboard_row(model, RatingState(model_id="fresh", elo=1200.0))
        assert row.win_rate_label == "—"
        assert row.win_rate is None

    def test_anonymous_marked_excluded(self):
        model = make_model("strawberry", anonymous=True)
        row = leaderboard_row(model, RatingState(model_id="strawberry", elo=1382.0, votes=10, wins=8))
        assert not row.public
        assert "excluded-from-public" in row.markers

    def test_mismatched_ids_rejected(self):
        with pytest.raises(ValueError):
            leaderboard_row(make_model("a"), RatingState(model_id="b", elo=1200.0))

    def test_sort_order_elo_votes_id(self):
        def row(mid, elo, votes):
            return LeaderboardRow(
                model_id=mid, display_name=mid, elo=round(elo), elo_exact=elo,
                votes=votes, win_rate=None, win_rate_label="-", format_label="Mesh",
                public=True,
            )
        rows = [row("c", 1200.0, 5), row("a", 1200.0, 5), row("b", 1300.0, 1), row("d", 1200.0, 9)]
        ordered = [r.model_id for r in sort_leaderboard(rows)]
        assert ordered == ["b", "d", "a", "c"]


class TestTimestamps:
    def test_format_examples(self):
        assert format_ts(EPOCH) == "2025-01-01T00:00:00.000Z"
        assert format_ts(ts(1234)) == "2025-01-01T00:00:01.234Z"

    def test_parse_accepts_offset_form(self):
        assert parse_ts("2025-01-01T00:00:00.000+00:00") == EPOCH

    @given(st.integers(min_value=0, max_value=10**10))
    def test_round_trip(self, ms):
        stamp = ts(ms)
        assert parse_ts(format_ts(stamp)) == stamp
