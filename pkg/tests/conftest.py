"""Shared builders and the naive-baseline detector used by regression tests."""

from __future__ import annotations

import math
from pathlib import Path

import pytest

from election_forensics.dataset import ElectionDataset, PartyRoster, PrecinctRecord

FIXTURES = Path(__file__).parent.parent / "fixtures"


def record(
    pid: str = "p1",
    registered: int = 1000,
    cast: int = 500,
    votes: tuple[int, ...] = (300, 200),
    invalid: int = 0,
    territory: str = "T1",
    machine: bool = False,
    region: str = "R1",
) -> PrecinctRecord:
    rec = PrecinctRecord(
        precinct_id=pid,
        region=region,
        territory=territory,
        registered=registered,
        ballots_cast=cast,
        invalid=invalid,
        machine_counted=machine,
        votes=votes,
    )
    rec.validate()
    return rec


def quick_dataset(records, parties=("A", "B"), leader="A", election_id="test") -> ElectionDataset:
    return ElectionDataset(election_id, PartyRoster(tuple(parties)), tuple(records), leader)


def naive_smooth_neighbor_flags(bins, targets, alpha: float = 0.01) -> list[int]:
    """Test-only baseline: Poisson z-test of a bin against its smooth neighborhood.

    This is the over-eager detector the Monte-Carlo null is designed to
    improve on: it flags any bin well above the mean of its six flanking
    bins, including bumps that are pure small-denominator discreteness.
    """
    from statistics import NormalDist

    z_crit = NormalDist().inv_cdf(1 - alpha)
    flagged = []
    for t in targets:
        neighbors = [bins[j] for j in range(t - 3, t + 4) if j != t and 0 <= j <= 100]
        expected = sum(neighbors) / len(neighbors)
        if expected > 0 and (bins[t] - expected) / math.sqrt(expected) > z_crit:
            flagged.append(t)
    return flagged


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
