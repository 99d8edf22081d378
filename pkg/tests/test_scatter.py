import random

import pytest

from election_forensics.errors import DegenerateX, UnknownParty
from election_forensics.scatter import OTHERS, ScatterPoint, build_points, fit_trend
from conftest import quick_dataset, record


def test_everyone_votes_one_party_lies_on_diagonal():
    records = [
        record(pid=f"p{i}", registered=1000, cast=c, votes=(c, 0))
        for i, c in enumerate((100, 400, 700, 1000))
    ]
    points = build_points(quick_dataset(records), "A")
    for p in points:
        assert p.y == pytest.approx(p.x, abs=1e-12)


def test_everyone_takes_ballot_away_lies_on_x_axis():
    records = [
        record(pid=f"p{i}", registered=1000, cast=c, votes=(0, 0), invalid=0)
        for i, c in enumerate((100, 500, 900))
    ]
    points = build_points(quick_dataset(records), "A")
    assert all(p.y == 0.0 for p in points)


def test_fixed_turnout_stacks_points_vertically():
    records = [
        record(pid=f"p{i}", registered=1000, cast=500, votes=(v, 500 - v))
        for i, v in enumerate((100, 250, 400))
    ]
    points = build_points(quick_dataset(records), "A")
    assert all(p.x == 0.5 for p in points)


def test_point_count_and_share_bound():
    rng = random.Random(3)
    records = []
    for i in range(300):
        reg = rng.randint(100, 3000)
        cast = rng.randint(0, reg)
        v1 = rng.randint(0, cast)
        records.append(record(pid=f"p{i}", registered=reg, cast=cast, votes=(v1, cast - v1)))
    ds = quick_dataset(records)
    for party in ("A", "B", OTHERS):
        points = build_points(ds, party)
        assert len(points) == len(ds)
        assert all(0 <= p.y <= p.x <= 1 + 1e-12 for p in points)


def test_others_pseudo_party_sums_non_leader():
    ds = quick_dataset(
        [record(votes=(300, 150), invalid=50)], parties=("A", "B"), leader="A"
    )
    (point,) = build_points(ds, OTHERS)
    assert point.y == pytest.approx(150 / 1000)


def test_unknown_party_raises():
    with pytest.raises(UnknownParty):
        build_points(quick_dataset([record()]), "nope")


def test_fit_exact_diagonal():
    points = [ScatterPoint(str(i), x, x, 1) for i, x in enumerate((0.1, 0.4, 0.8))]
    fit = fit_trend(points)
    assert fit.slope == pytest.approx(1.0, abs=1e-12)
    assert fit.intercept == pytest.approx(0.0, abs=1e-12)
    assert fit.residual_rms == pytest.approx(0.0, abs=1e-12)


def test_fit_flat_cloud():
    points = [ScatterPoint(str(i), x, 0.15, 1) for i, x in enumerate((0.2, 0.5, 0.6, 0.9))]
    fit = fit_trend(points)
    assert fit.slope == pytest.approx(0.0, abs=1e-12)
    assert fit.intercept == pytest.approx(0.15, abs=1e-12)


def test_fit_invariant_under_permutation_and_duplication():
    rng = random.Random(11)
    points = [
        ScatterPoint(str(i), rng.random(), rng.random(), rng.randint(100, 2000))
        for i in range(50)
    ]
    base = fit_trend(points)
    shuffled = points[:]
    rng.shuffle(shuffled)
    assert fit_trend(shuffled).slope == pytest.approx(base.slope, rel=1e-12)
    doubled = fit_trend(points + points)
    assert doubled.slope == pytest.approx(base.slope, rel=1e-12)
    assert doubled.intercept == pytest.approx(base.intercept, rel=1e-12)
    assert doubled.point_count == 2 * base.point_count


def test_fit_weighted_by_registered_moves_toward_big_precincts():
    points = [
        ScatterPoint("small", 0.2, 0.9, 10),
        ScatterPoint("big1", 0.5, 0.25, 5000),
        ScatterPoint("big2", 0.8, 0.40, 5000),
    ]
    uniform = fit_trend(points, weighting="uniform")
    weighted = fit_trend(points, weighting="by_registered")
    assert weighted.slope == pytest.approx(0.5, abs=0.05)  # the two big points dominate
    assert uniform.slope < 0  # dragged negative by the tiny outlier


def test_fit_degenerate_x_raises():
    points = [ScatterPoint(str(i), 0.5, y, 1) for i, y in enumerate((0.1, 0.2, 0.3))]
    with pytest.raises(DegenerateX):
        fit_trend(points)
    with pytest.raises(DegenerateX):
        fit_trend(points[:1])
