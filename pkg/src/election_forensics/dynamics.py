"""Intraday turnout trajectories and hyperactive-precinct flagging.

Commissions report cumulative voter counts several times during election
day.  A precinct whose final official ballot count sits far above its last
intraday report acquired most of that excess in the unobserved closing
interval; precincts where this final increment exceeds a threshold
(default 13% of registered voters) are flagged as hyperactive.  The
threshold is measured against registered voters, not against final
turnout, and the comparison is strict: an increment exactly at the
threshold is not flagged.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping

from .dataset import ElectionDataset
from .errors import EmptySeries, InvariantViolation, MalformedRow

DEFAULT_HYPERACTIVE_THRESHOLD = 0.13


@dataclass(frozen=True)
class IntradaySeries:
    """Ordered intraday reports plus the final official ballot count, when joined."""

    precinct_id: str
    reports: tuple[tuple[int, int], ...]  # (minutes since midnight, cumulative voters)
    official_cast: int | None = None

    def validate(self) -> None:
        if len(self.reports) < 2:
            raise EmptySeries(f"precinct {self.precinct_id!r}: need at least 2 reports")
        times = [t for t, _ in self.reports]
        counts = [c for _, c in self.reports]
        if any(b <= a for a, b in zip(times, times[1:])):
            raise InvariantViolation(self.precinct_id, "report times must strictly increase")
        if any(b < a for a, b in zip(counts, counts[1:])):
            raise InvariantViolation(self.precinct_id, "cumulative counts must be non-decreasing")
        if any(c < 0 for c in counts):
            raise InvariantViolation(self.precinct_id, "cumulative counts must be non-negative")
        if self.official_cast is not None and counts[-1] > self.official_cast:
            raise InvariantViolation(
                self.precinct_id,
                f"last intraday count {counts[-1]} exceeds official ballots_cast {self.official_cast}",
            )

    def with_official(self, official_cast: int) -> "IntradaySeries":
        series = IntradaySeries(self.precinct_id, self.reports, official_cast)
        series.validate()
        return series


def parse_time(text: str, line_no: int) -> int:
    parts = text.strip().split(":")
    if len(parts) != 2 or not all(p.isdigit() for p in parts):
        raise MalformedRow(line_no, f"time must be HH:MM, got {text!r}")
    hh, mm = int(parts[0]), int(parts[1])
    if hh > 23 or mm > 59:
        raise MalformedRow(line_no, f"time out of range: {text!r}")
    return hh * 60 + mm


def format_time(minutes: int) -> str:
    return f"{minutes // 60:02d}:{minutes % 60:02d}"


def parse_intraday(csv_text: str) -> dict[str, IntradaySeries]:
    """Parse ``intraday.csv`` (precinct_id,time,cumulative_voted) into series."""
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise MalformedRow(1, "missing header row") from None
    if header != ["precinct_id", "time", "cumulative_voted"]:
        raise MalformedRow(1, "header must be precinct_id,time,cumulative_voted")
    rows: dict[str, list[tuple[int, int]]] = {}
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 3:
            raise MalformedRow(line_no, f"expected 3 fields, got {len(row)}")
        minutes = parse_time(row[1], line_no)
        if not row[2].strip().isdigit():
            raise MalformedRow(line_no, f"cumulative_voted must be an integer, got {row[2]!r}")
        rows.setdefault(row[0].strip(), []).append((minutes, int(row[2])))
    out: dict[str, IntradaySeries] = {}
    for pid, reports in rows.items():
        reports.sort()
        series = IntradaySeries(pid, tuple(reports))
        series.validate()
        out[pid] = series
    return out


def serialize_intraday(series_map: Mapping[str, IntradaySeries]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["precinct_id", "time", "cumulative_voted"])
    for pid in sorted(series_map):
        for minutes, count in series_map[pid].reports:
            writer.writerow([pid, format_time(minutes), count])
    return out.getvalue()


def final_increment(series: IntradaySeries, registered: int) -> float:
    """Fraction of registered voters appearing only in the final official count."""
    if len(series.reports) < 2:
        raise EmptySeries(f"precinct {series.precinct_id!r}: need at least 2 reports")
    if series.official_cast is None:
        raise EmptySeries(f"precinct {series.precinct_id!r}: official ballot count not joined")
    last = series.reports[-1][1]
    return (series.official_cast - last) / registered


@dataclass(frozen=True)
class HyperactiveRow:
    precinct_id: str
    increment: float
    turnout: float
    leader_share_of_cast: float
    flagged: bool


@dataclass(frozen=True)
class HyperactiveReport:
    threshold: float
    flagged: tuple[str, ...]
    skipped_missing_series: tuple[str, ...]
    rows: tuple[HyperactiveRow, ...]

    def as_dict(self) -> dict:
        return {
            "threshold": self.threshold,
            "flagged": list(self.flagged),
            "skipped_missing_series": list(self.skipped_missing_series),
            "rows": [
                {
                    "precinct_id": r.precinct_id,
                    "increment": r.increment,
                    "turnout": r.turnout,
                    "leader_share_of_cast": r.leader_share_of_cast,
                    "flagged": r.flagged,
                }
                for r in self.rows
            ],
        }


def flag_hyperactive(
    dataset: ElectionDataset,
    series_map: Mapping[str, IntradaySeries],
    threshold: float = DEFAULT_HYPERACTIVE_THRESHOLD,
) -> HyperactiveReport:
    """Flag precincts whose final increment strictly exceeds the threshold.

    Precincts without intraday data are skipped (and reported as such), not
    treated as errors: real feeds are incomplete.
    """
    if not 0 < threshold < 1:
        raise ValueError(f"threshold must be in (0, 1), got {threshold}")
    leader_idx = dataset.leader_index
    flagged: list[str] = []
    skipped: list[str] = []
    rows: list[HyperactiveRow] = []
    for rec in dataset.records:
        series = series_map.get(rec.precinct_id)
        if series is None:
            skipped.append(rec.precinct_id)
            continue
        joined = series.with_official(rec.ballots_cast)
        inc = final_increment(joined, rec.registered)
        is_hot = inc > threshold
        if is_hot:
            flagged.append(rec.precinct_id)
        rows.append(
            HyperactiveRow(
                precinct_id=rec.precinct_id,
                increment=inc,
                turnout=rec.ballots_cast / rec.registered,
                leader_share_of_cast=(
                    rec.votes[leader_idx] / rec.ballots_cast if rec.ballots_cast else 0.0
                ),
                flagged=is_hot,
            )
        )
    return HyperactiveReport(
        threshold=threshold,
        flagged=tuple(flagged),
        skipped_missing_series=tuple(skipped),
        rows=tuple(rows),
    )
