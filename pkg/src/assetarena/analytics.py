"""Aggregate analyses over a replayed vote log.

Everything here is a pure function of (log, config): participation
distributions, per-segment rating and win-rate effects with a two-proportion
significance test, and the polygon-complexity correlation for mesh models.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from scipy.stats import fisher_exact

from .models import AssetFormat, Registry, VoteRecord
from .rating import RatingSnapshot


class EmptySegmentError(ValueError):
    """A requested segment split has no models on one side."""


class InsufficientDataError(ValueError):
    """Not enough models for a correlation estimate."""


DEFAULT_POLYGON_BIN_EDGES = (1_000, 5_000, 20_000, 100_000)


@dataclass(frozen=True, slots=True)
class ParticipationReport:
    user_count: int
    vote_count: int
    median_votes_per_user: Optional[float]
    mean_votes_per_user: Optional[float]
    bucket_shares: Optional[dict[str, float]]  # "1-10", "11-50", ">50"


@dataclass(frozen=True, slots=True)
class SegmentStats:
    label: str
    model_count: int
    mean_elo: float
    elo_std: float
    votes: int
    wins: int
    win_rate: Optional[float]


@dataclass(frozen=True, slots=True)
class SegmentReport:
    key: str
    segments: tuple[SegmentStats, SegmentStats]
    z_statistic: Optional[float]
    p_value: Optional[float]
    test: str  # "two-proportion-z" or "fisher-exact"


@dataclass(frozen=True, slots=True)
class PolygonBin:
    label: str
    low: float
    high: float
    model_count: int
    votes: int
    wins: int
    win_rate: Optional[float]


@dataclass(frozen=True, slots=True)
class PolygonReport:
    pearson_r: Optional[float]
    model_count: int
    bins: tuple[PolygonBin, ...]


@dataclass(frozen=True, slots=True)
class MeshGeometryStats:
    file_count: int
    mean_polygons: Optional[float]
    median_polygons: Optional[float]


def participation_stats(votes: Iterable[VoteRecord]) -> ParticipationReport:
    """Vote-count distribution across users; lower median for even counts."""
    counts: dict[str, int] = {}
    total = 0
    for vote in votes:
        counts[vote.user_id] = counts.get(vote.user_id, 0) + 1
        total += 1
    if not counts:
        return ParticipationReport(0, 0, None, None, None)
    per_user = sorted(counts.values())
    n = len(per_user)
    median = float(per_user[(n - 1) // 2])
    mean = total / n
    b1 = sum(1 for c in per_user if c <= 10)
    b2 = sum(1 for c in per_user if 10 < c <= 50)
    b3 = n - b1 - b2
    shares = {"1-10": b1 / n, "11-50": b2 / n, ">50": b3 / n}
    return ParticipationReport(n, total, median, mean, shares)


def two_proportion_z(k1: int, n1: int, k2: int, n2: int) -> tuple[float, float]:
    """Two-sided two-proportion z-test with pooled variance; returns (z, p)."""
    if n1 <= 0 or n2 <= 0:
        raise ValueError("both sample sizes must be positive")
    p1 = k1 / n1
    p2 = k2 / n2
    pooled = (k1 + k2) / (n1 + n2)
    var = pooled * (1.0 - pooled) * (1.0 / n1 + 1.0 / n2)
    if var == 0.0:
        return 0.0, 1.0
    z = (p1 - p2) / math.sqrt(var)
    p = math.erfc(abs(z) / math.sqrt(2.0))
    return z, p


def _proportion_test(k1: int, n1: int, k2: int, n2: int) -> tuple[Optional[float], float, str]:
    cells = (k1, n1 - k1, k2, n2 - k2)
    if min(cells) < 5:
        _, p = fisher_exact([[k1, n1 - k1], [k2, n2 - k2]], alternative="two-sided")
        return None, float(p), "fisher-exact"
    z, p = two_proportion_z(k1, n1, k2, n2)
    return z, p, "two-proportion-z"


def _segment_stats(label: str, ratings: Sequence) -> SegmentStats:
    elos = [r.elo for r in ratings]
    votes = sum(r.votes for r in ratings)
    wins = sum(r.wins for r in ratings)
    return SegmentStats(
        label=label,
        model_count=len(ratings),
        mean_elo=statistics.fmean(elos),
        elo_std=statistics.pstdev(elos),
        votes=votes,
        wins=wins,
        win_rate=(wins / votes) if votes else None,
    )


def segment_effect(
    registry: Registry,
    snapshot: RatingSnapshot,
    key: str,
) -> SegmentReport:
    """Compare two model segments (by format or texture flag).

    Mean ELO is unweighted across models; the segment win rate pools wins
    and votes (equivalently the vote-weighted mean of model win rates). The
    significance test compares pooled win/vote counts between the segments,
    switching to Fisher's exact test when any cell drops below 5.
    """
    if key == "format":
        labels = (AssetFormat.MESH.value, AssetFormat.SPLAT.value)
        def side(model):  # noqa: E306
            return model.format.value
    elif key == "textured":
        labels = ("textured", "untextured")
        def side(model):  # noqa: E306
            return "textured" if model.textured else "untextured"
    else:
        raise ValueError(f"unknown segment key {key!r}")

    groups: dict[str, list] = {labels[0]: [], labels[1]: []}
    for model_id, rating in snapshot.ratings.items():
        model = registry.models.get(model_id)
        if model is None:
            continue
        groups[side(model)].append(rating)
    if not groups[labels[0]] or not groups[labels[1]]:
        empty = labels[0] if not groups[labels[0]] else labels[1]
        raise EmptySegmentError(f"segment {empty!r} has no rated models")

    first = _segment_stats(labels[0], groups[labels[0]])
    second = _segment_stats(labels[1], groups[labels[1]])
    if first.votes and second.votes:
        z, p, test = _proportion_test(first.wins, first.votes, second.wins, second.votes)
    else:
        z, p, test = None, None, "none"
    return SegmentReport(key=key, segments=(first, second), z_statistic=z, p_value=p, test=test)


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    n = len(xs)
    mx = sum(xs) / n
    my = sum(ys) / n
    sxx = sum((x - mx) ** 2 for x in xs)
    syy = sum((y - my) ** 2 for y in ys)
    if sxx == 0.0 or syy == 0.0:
        return None
    sxy = sum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return sxy / math.sqrt(sxx * syy)


def polygon_correlation(
    registry: Registry,
    snapshot: RatingSnapshot,
    bin_edges: Sequence[int] = DEFAULT_POLYGON_BIN_EDGES,
    exclude_models: Iterable[str] = (),
) -> PolygonReport:
    """Correlate log10 median polygon count with model win rate (mesh models).

    ``exclude_models`` removes models whose design target is topology rather
    than visual density, which would otherwise confound the trend. Requires
    at least three usable models; zero variance yields r reported as None.
    """
    excluded = set(exclude_models)
    per_model: list[tuple[str, float, float, int, int]] = []
    for model_id, rating in snapshot.ratings.items():
        model = registry.models.get(model_id)
        if model is None or model.format is not AssetFormat.MESH or model_id in excluded:
            continue
        polys = [
            a.polygon_count
            for a in registry.assets.values()
            if a.model_id == model_id and a.format is AssetFormat.MESH and a.polygon_count >= 1
        ]
        if not polys or rating.win_rate is None:
            continue
        median_poly = float(statistics.median(polys))
        per_model.append((model_id, median_poly, rating.win_rate, rating.votes, rating.wins))

    if len(per_model) < 3:
        raise InsufficientDataError(f"need >= 3 mesh models with votes, have {len(per_model)}")

    xs = [math.log10(m[1]) for m in per_model]
    ys = [m[2] for m in per_model]
    r = _pearson(xs, ys)

    edges = [1.0, *[float(e) for e in bin_edges], math.inf]
    bins = []
    for low, high in zip(edges[:-1], edges[1:]):
        members = [m for m in per_model if low <= m[1] < high]
        votes = sum(m[3] for m in members)
        wins = sum(m[4] for m in members)
        if high == math.inf:
            label = f">{_fmt_poly(low)}"
        elif low == 1.0:
            label = f"<{_fmt_poly(high)}"
        else:
            label = f"{_fmt_poly(low)}-{_fmt_poly(high)}"
        bins.append(PolygonBin(
            label=label, low=low, high=high,
            model_count=len(members), votes=votes, wins=wins,
            win_rate=(wins / votes) if votes else None,
        ))
    return PolygonReport(pearson_r=r, model_count=len(per_model), bins=tuple(bins))


def _fmt_poly(value: float) -> str:
    if value >= 1000 and value % 1000 == 0:
        return f"{int(value) // 1000}K"
    return str(int(value))


def mesh_geometry_stats(registry: Registry) -> MeshGeometryStats:
    """Polygon-count summary over all registered mesh assets."""
    counts = [
        a.polygon_count for a in registry.assets.values()
        if a.format is AssetFormat.MESH
    ]
    if not counts:
        return MeshGeometryStats(0, None, None)
    return MeshGeometryStats(
        file_count=len(counts),
        mean_polygons=statistics.fmean(counts),
        median_polygons=float(statistics.median(counts)),
    )
