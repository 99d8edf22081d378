"""Matched-subset contrasts and cross-source consistency checks.

Covers four comparisons analysts run on precinct data:

* machine-counted vs hand-counted subsets (aggregate shares, turnout, and a
  two-sample KS distance between the turnout distributions),
* the same units across two elections (delta table in percent points),
* observer-protocol copies vs officially published numbers (displacement
  in the (turnout, leader share) plane),
* two simultaneous contests at the same precincts (large vote gaps).

Aggregate shares are totals over the subset (total votes / total ballots),
matching how observers quote subset results, not means of per-precinct
shares.  Delta-table percents are carried as exact decimals.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal
from typing import Iterable, Sequence

from .dataset import ElectionDataset, PartyRoster, PrecinctRecord, parse_dataset
from .errors import (
    MalformedRow,
    PairMismatch,
    RosterMismatch,
    UnitMismatch,
    UnknownParty,
)


def ks_statistic(xs: Sequence[float], ys: Sequence[float]) -> float:
    """Two-sample Kolmogorov-Smirnov distance: sup |F_x - F_y| over the data."""
    nx, ny = len(xs), len(ys)
    if nx == 0 or ny == 0:
        raise ValueError("both samples must be non-empty")
    sx = sorted(xs)
    sy = sorted(ys)
    best = 0.0
    i = j = 0
    while i < nx or j < ny:
        if j >= ny or (i < nx and sx[i] <= sy[j]):
            v = sx[i]
        else:
            v = sy[j]
        while i < nx and sx[i] <= v:
            i += 1
        while j < ny and sy[j] <= v:
            j += 1
        d = abs(i / nx - j / ny)
        if d > best:
            best = d
    return best


@dataclass(frozen=True)
class SubsetContrast:
    label_a: str
    label_b: str
    parties: tuple[str, ...]
    share_of_cast_a: tuple[float, ...]
    share_of_cast_b: tuple[float, ...]
    turnout_a: float
    turnout_b: float
    share_diff_points: tuple[float, ...]  # (b - a) * 100 per party
    turnout_ks: float

    def as_dict(self) -> dict:
        return {
            "labels": [self.label_a, self.label_b],
            "turnout": {self.label_a: self.turnout_a, self.label_b: self.turnout_b},
            "share_of_cast": {
                self.label_a: dict(zip(self.parties, self.share_of_cast_a)),
                self.label_b: dict(zip(self.parties, self.share_of_cast_b)),
            },
            "share_diff_points": dict(zip(self.parties, self.share_diff_points)),
            "turnout_ks": self.turnout_ks,
        }


def _aggregate(dataset: ElectionDataset) -> tuple[tuple[float, ...], float, list[float]]:
    arrays = dataset.counts()
    total_cast = int(arrays.ballots_cast.sum())
    total_reg = int(arrays.registered.sum())
    votes = arrays.votes.sum(axis=0)
    shares = tuple((int(v) / total_cast if total_cast else 0.0) for v in votes)
    turnout = total_cast / total_reg if total_reg else 0.0
    per_precinct_turnout = [r.ballots_cast / r.registered for r in dataset.records]
    return shares, turnout, per_precinct_turnout


def subset_contrast(
    a: ElectionDataset,
    b: ElectionDataset,
    label_a: str = "a",
    label_b: str = "b",
) -> SubsetContrast:
    """Aggregate share/turnout contrast plus KS distance of turnout distributions."""
    if a.roster.ids != b.roster.ids:
        raise RosterMismatch(f"rosters differ: {a.roster.ids} vs {b.roster.ids}")
    shares_a, turnout_a, turnouts_a = _aggregate(a)
    shares_b, turnout_b, turnouts_b = _aggregate(b)
    ks = ks_statistic(turnouts_a, turnouts_b) if turnouts_a and turnouts_b else 0.0
    return SubsetContrast(
        label_a=label_a,
        label_b=label_b,
        parties=a.roster.ids,
        share_of_cast_a=shares_a,
        share_of_cast_b=shares_b,
        turnout_a=turnout_a,
        turnout_b=turnout_b,
        share_diff_points=tuple((sb - sa) * 100.0 for sa, sb in zip(shares_a, shares_b)),
        turnout_ks=ks,
    )


@dataclass(frozen=True)
class DeltaRow:
    """Share/turnout change for one unit between elections A (older) and B (newer)."""

    unit: str
    share_b: Decimal
    share_a: Decimal
    turnout_b: Decimal
    turnout_a: Decimal
    d_share: Decimal
    d_turnout: Decimal

    def as_dict(self) -> dict:
        return {
            "unit": self.unit,
            "share_b": str(self.share_b),
            "share_a": str(self.share_a),
            "turnout_b": str(self.turnout_b),
            "turnout_a": str(self.turnout_a),
            "d_share": str(self.d_share),
            "d_turnout": str(self.d_turnout),
        }


UnitEntry = tuple[str, Decimal | str | float, Decimal | str | float]


def _as_decimal(v) -> Decimal:
    if isinstance(v, Decimal):
        return v
    return Decimal(str(v))


def cross_election_delta(
    table_a: Iterable[UnitEntry],
    table_b: Iterable[UnitEntry],
) -> list[DeltaRow]:
    """Join two (unit, share%, turnout%) tables by unit and compute B - A deltas."""
    a_map = {u: (_as_decimal(s), _as_decimal(t)) for u, s, t in table_a}
    b_map = {u: (_as_decimal(s), _as_decimal(t)) for u, s, t in table_b}
    if set(a_map) != set(b_map):
        only_a = sorted(set(a_map) - set(b_map))
        only_b = sorted(set(b_map) - set(a_map))
        raise UnitMismatch(f"units differ: only in A {only_a}, only in B {only_b}")
    rows = []
    for unit in a_map:
        sa, ta = a_map[unit]
        sb, tb = b_map[unit]
        rows.append(
            DeltaRow(
                unit=unit,
                share_b=sb,
                share_a=sa,
                turnout_b=tb,
                turnout_a=ta,
                d_share=sb - sa,
                d_turnout=tb - ta,
            )
        )
    rows.sort(key=lambda r: r.unit)
    return rows


@dataclass(frozen=True)
class ProtocolDisplacement:
    precinct_id: str
    from_point: tuple[float, float]  # (turnout, leader share of cast) per observer copy
    to_point: tuple[float, float]  # same per official data
    displacement: tuple[float, float]  # official - observer

    def as_dict(self) -> dict:
        return {
            "precinct_id": self.precinct_id,
            "observer": list(self.from_point),
            "official": list(self.to_point),
            "displacement": list(self.displacement),
        }


@dataclass(frozen=True)
class DisplacementSummary:
    count: int
    mean_d_turnout: float
    mean_d_leader_share: float


def _point(rec: PrecinctRecord, leader_idx: int) -> tuple[float, float]:
    turnout = rec.ballots_cast / rec.registered
    share = rec.votes[leader_idx] / rec.ballots_cast if rec.ballots_cast else 0.0
    return turnout, share


def protocol_displacements(
    pairs: Sequence[tuple[PrecinctRecord, PrecinctRecord]],
    roster: PartyRoster,
    leader: str,
) -> tuple[list[ProtocolDisplacement], DisplacementSummary]:
    """Displacement official-minus-observer per precinct, plus the mean vector."""
    leader_idx = roster.index(leader)
    rows: list[ProtocolDisplacement] = []
    for observer, official in pairs:
        if observer.precinct_id != official.precinct_id:
            raise PairMismatch(
                f"paired records disagree on id: {observer.precinct_id!r} vs {official.precinct_id!r}"
            )
        if observer.registered != official.registered:
            raise PairMismatch(
                f"precinct {observer.precinct_id!r}: registered differs "
                f"({observer.registered} vs {official.registered})"
            )
        src = _point(observer, leader_idx)
        dst = _point(official, leader_idx)
        rows.append(
            ProtocolDisplacement(
                precinct_id=observer.precinct_id,
                from_point=src,
                to_point=dst,
                displacement=(dst[0] - src[0], dst[1] - src[1]),
            )
        )
    n = len(rows)
    summary = DisplacementSummary(
        count=n,
        mean_d_turnout=sum(r.displacement[0] for r in rows) / n if n else 0.0,
        mean_d_leader_share=sum(r.displacement[1] for r in rows) / n if n else 0.0,
    )
    return rows, summary


PROTOCOL_SOURCES = ("observer", "official")


def parse_protocols(csv_text: str, leader: str) -> tuple[PartyRoster, list[tuple[PrecinctRecord, PrecinctRecord]]]:
    """Parse protocols.csv into (observer, official) record pairs.

    Format: ``precinct_id,source,registered,ballots_cast,invalid,votes_<party>...``
    with source in {observer, official}; each precinct must appear once per source.
    """
    import csv as _csv
    import io as _io

    reader = _csv.reader(_io.StringIO(csv_text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedRow(1, "missing header row") from None
    fixed = ("precinct_id", "source", "registered", "ballots_cast", "invalid")
    if tuple(header[: len(fixed)]) != fixed:
        raise MalformedRow(1, f"header must start with {','.join(fixed)}")
    party_cols = header[len(fixed) :]
    if not party_cols or not all(c.startswith("votes_") for c in party_cols):
        raise MalformedRow(1, "expected one or more votes_<party> columns")
    roster = PartyRoster(tuple(c[len("votes_") :] for c in party_cols))
    if leader not in roster.ids:
        raise UnknownParty(f"leader {leader!r} not among parties {roster.ids}")

    by_source: dict[str, dict[str, PrecinctRecord]] = {s: {} for s in PROTOCOL_SOURCES}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise MalformedRow(line_no, f"expected {len(header)} fields, got {len(row)}")
        source = row[1].strip()
        if source not in PROTOCOL_SOURCES:
            raise MalformedRow(line_no, f"source must be observer or official, got {source!r}")
        try:
            rec = PrecinctRecord(
                precinct_id=row[0].strip(),
                region="",
                territory="",
                registered=int(row[2]),
                ballots_cast=int(row[3]),
                invalid=int(row[4]),
                machine_counted=False,
                votes=tuple(int(v) for v in row[5:]),
            )
        except ValueError:
            raise MalformedRow(line_no, "counts must be base-10 integers") from None
        rec.validate()
        if rec.precinct_id in by_source[source]:
            raise MalformedRow(line_no, f"duplicate {source} row for {rec.precinct_id!r}")
        by_source[source][rec.precinct_id] = rec

    obs, off = by_source["observer"], by_source["official"]
    if set(obs) != set(off):
        missing = sorted(set(obs) ^ set(off))
        raise PairMismatch(f"precincts missing a counterpart: {missing}")
    pairs = [(obs[pid], off[pid]) for pid in sorted(obs)]
    return roster, pairs


@dataclass(frozen=True)
class PairedScanResult:
    party: str
    threshold: int
    a_over_b: tuple[tuple[str, int], ...]  # (precinct_id, gap)
    b_over_a: tuple[tuple[str, int], ...]

    def as_dict(self) -> dict:
        return {
            "party": self.party,
            "threshold": self.threshold,
            "a_over_b": [{"precinct_id": p, "gap": g} for p, g in self.a_over_b],
            "b_over_a": [{"precinct_id": p, "gap": g} for p, g in self.b_over_a],
            "counts": {"a_over_b": len(self.a_over_b), "b_over_a": len(self.b_over_a)},
        }


def paired_contest_scan(
    records_a: ElectionDataset,
    records_b: ElectionDataset,
    threshold: int = 300,
    party: str | None = None,
) -> PairedScanResult:
    """Precincts where one contest's party total beats the other's by > threshold.

    Defaults to the leader of dataset A; both contests must field that party.
    Only precinct ids present in both datasets are scanned.
    """
    party = party or records_a.designated_leader
    ia = records_a.roster.index(party)
    ib = records_b.roster.index(party)
    b_by_id = {r.precinct_id: r for r in records_b.records}
    a_over: list[tuple[str, int]] = []
    b_over: list[tuple[str, int]] = []
    for rec in records_a.records:
        other = b_by_id.get(rec.precinct_id)
        if other is None:
            continue
        gap = rec.votes[ia] - other.votes[ib]
        if gap > threshold:
            a_over.append((rec.precinct_id, gap))
        elif -gap > threshold:
            b_over.append((rec.precinct_id, -gap))
    a_over.sort()
    b_over.sort()
    return PairedScanResult(party, threshold, tuple(a_over), tuple(b_over))
