"""Precinct-level data model, CSV parsing/serialization, and share derivation.

File format (``precincts.csv``, UTF-8, comma separated, header required)::

    precinct_id,region,territory,registered,ballots_cast,invalid,machine_counted,votes_<party1>,...,votes_<partyK>

``machine_counted`` is 0 or 1; all counts are non-negative base-10 integers
with no thousands separators.  An optional trailing ``tags`` column holds
semicolon-joined free-form tags; it is written only when a record carries
tags, and absent columns parse as "no tags".

Per-record invariants enforced at parse time:

* ``sum(votes) + invalid <= ballots_cast <= registered``
* ``registered > 0`` (a precinct with an empty voter list has no defined
  turnout, so such rows are rejected outright)

Official tallies count ballots found in boxes, not ballots issued; the
``ballots_cast`` column is interpreted as ballots counted.  All arithmetic
downstream works on exact integer counts; percentages appear only when a
histogram is built.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import InvariantViolation, MalformedRow, UnknownLeader, ZeroRegistered

FIXED_COLUMNS = (
    "precinct_id",
    "region",
    "territory",
    "registered",
    "ballots_cast",
    "invalid",
    "machine_counted",
)
VOTES_PREFIX = "votes_"
TAGS_COLUMN = "tags"


@dataclass(frozen=True)
class PartyRoster:
    """Ordered, immutable list of party identifiers.

    Order is fixed for the lifetime of a dataset; vote vectors are aligned
    positionally to it.
    """

    ids: tuple[str, ...]
    display_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if not self.ids:
            raise InvariantViolation("<roster>", "party roster must be non-empty")
        if len(set(self.ids)) != len(self.ids):
            raise InvariantViolation("<roster>", "party identifiers must be unique")
        if self.display_names is not None and len(self.display_names) != len(self.ids):
            raise InvariantViolation("<roster>", "display names must align with ids")

    def __len__(self) -> int:
        return len(self.ids)

    def index(self, party: str) -> int:
        try:
            return self.ids.index(party)
        except ValueError:
            from .errors import UnknownParty

            raise UnknownParty(f"party {party!r} not in roster {self.ids}") from None


@dataclass(frozen=True)
class PrecinctRecord:
    """One polling station's protocol line."""

    precinct_id: str
    region: str
    territory: str
    registered: int
    ballots_cast: int
    invalid: int
    machine_counted: bool
    votes: tuple[int, ...]
    tags: tuple[str, ...] = ()

    def validate(self) -> None:
        counts = (self.registered, self.ballots_cast, self.invalid, *self.votes)
        if any(c < 0 for c in counts):
            raise InvariantViolation(self.precinct_id, "all counts must be non-negative")
        if self.registered == 0:
            raise InvariantViolation(self.precinct_id, "registered must be positive")
        if self.ballots_cast > self.registered:
            raise InvariantViolation(
                self.precinct_id,
                f"ballots_cast {self.ballots_cast} exceeds registered {self.registered}",
            )
        if sum(self.votes) + self.invalid > self.ballots_cast:
            raise InvariantViolation(
                self.precinct_id,
                f"votes {sum(self.votes)} + invalid {self.invalid} exceed ballots_cast {self.ballots_cast}",
            )


@dataclass(frozen=True)
class ShareView:
    """Per-precinct turnout and vote shares derived from exact counts."""

    precinct_id: str
    turnout: float
    share_of_registered: tuple[float, ...]
    share_of_cast: tuple[float, ...]


@dataclass(frozen=True)
class ElectionDataset:
    """Validated collection of precinct records plus roster and leader."""

    election_id: str
    roster: PartyRoster
    records: tuple[PrecinctRecord, ...]
    designated_leader: str
    _arrays: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.designated_leader not in self.roster.ids:
            raise UnknownLeader(f"leader {self.designated_leader!r} not in roster")
        seen: set[str] = set()
        for rec in self.records:
            if rec.precinct_id in seen:
                raise InvariantViolation(rec.precinct_id, "duplicate precinct_id")
            seen.add(rec.precinct_id)
            if len(rec.votes) != len(self.roster):
                raise InvariantViolation(rec.precinct_id, "votes vector does not match roster")
        object.__setattr__(self, "_arrays", {})

    def __len__(self) -> int:
        return len(self.records)

    @property
    def leader_index(self) -> int:
        return self.roster.index(self.designated_leader)

    def counts(self) -> "DatasetArrays":
        """Column-oriented numpy view of the records (computed once, cached)."""
        if "c" not in self._arrays:
            self._arrays["c"] = DatasetArrays(
                precinct_ids=[r.precinct_id for r in self.records],
                registered=np.array([r.registered for r in self.records], dtype=np.int64),
                ballots_cast=np.array([r.ballots_cast for r in self.records], dtype=np.int64),
                invalid=np.array([r.invalid for r in self.records], dtype=np.int64),
                votes=np.array([r.votes for r in self.records], dtype=np.int64).reshape(
                    len(self.records), len(self.roster)
                ),
                machine_counted=np.array([r.machine_counted for r in self.records], dtype=bool),
            )
        return self._arrays["c"]


@dataclass(frozen=True)
class DatasetArrays:
    precinct_ids: list[str]
    registered: np.ndarray
    ballots_cast: np.ndarray
    invalid: np.ndarray
    votes: np.ndarray
    machine_counted: np.ndarray


def make_dataset(
    election_id: str,
    roster: PartyRoster,
    records: Iterable[PrecinctRecord],
    leader: str,
) -> ElectionDataset:
    """Validate every record and assemble a dataset."""
    recs = tuple(records)
    for rec in recs:
        rec.validate()
    return ElectionDataset(election_id, roster, recs, leader)


def _parse_count(value: str, line_no: int, column: str) -> int:
    text = value.strip()
    if not text.lstrip("-").isdigit():
        raise MalformedRow(line_no, f"column {column!r}: {value!r} is not an integer")
    return int(text)


def parse_dataset(csv_text: str, leader: str, election_id: str = "dataset") -> ElectionDataset:
    """Parse ``precincts.csv`` content into a validated dataset.

    Raises MalformedRow for structural problems, InvariantViolation for
    rows that fail count invariants, and UnknownLeader when ``leader`` is
    not among the vote columns.
    """
    reader = csv.reader(io.StringIO(csv_text))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(1, "missing header row") from None
    header = [h.strip() for h in header]

    has_tags = bool(header) and header[-1] == TAGS_COLUMN
    core = header[:-1] if has_tags else header
    if tuple(core[: len(FIXED_COLUMNS)]) != FIXED_COLUMNS:
        raise MalformedRow(1, f"header must start with {','.join(FIXED_COLUMNS)}")
    party_cols = core[len(FIXED_COLUMNS) :]
    if not party_cols or not all(c.startswith(VOTES_PREFIX) for c in party_cols):
        raise MalformedRow(1, "expected one or more votes_<party> columns")
    roster = PartyRoster(tuple(c[len(VOTES_PREFIX) :] for c in party_cols))
    if leader not in roster.ids:
        raise UnknownLeader(f"leader {leader!r} not among parties {roster.ids}")

    expected = len(header)
    records: list[PrecinctRecord] = []
    for line_no, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != expected:
            raise MalformedRow(line_no, f"expected {expected} fields, got {len(row)}")
        mc_raw = row[6].strip()
        if mc_raw not in ("0", "1"):
            raise MalformedRow(line_no, f"machine_counted must be 0 or 1, got {mc_raw!r}")
        votes = tuple(
            _parse_count(row[7 + i], line_no, party_cols[i]) for i in range(len(roster))
        )
        tags: tuple[str, ...] = ()
        if has_tags and row[-1].strip():
            tags = tuple(t for t in row[-1].split(";") if t)
        rec = PrecinctRecord(
            precinct_id=row[0].strip(),
            region=row[1].strip(),
            territory=row[2].strip(),
            registered=_parse_count(row[3], line_no, "registered"),
            ballots_cast=_parse_count(row[4], line_no, "ballots_cast"),
            invalid=_parse_count(row[5], line_no, "invalid"),
            machine_counted=mc_raw == "1",
            votes=votes,
            tags=tags,
        )
        rec.validate()
        records.append(rec)
    return ElectionDataset(election_id, roster, tuple(records), leader)


def serialize_dataset(dataset: ElectionDataset) -> str:
    """Render a dataset back to CSV text; parse(serialize(d)) == d field-for-field."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    any_tags = any(r.tags for r in dataset.records)
    header = list(FIXED_COLUMNS) + [VOTES_PREFIX + p for p in dataset.roster.ids]
    if any_tags:
        header.append(TAGS_COLUMN)
    writer.writerow(header)
    for rec in dataset.records:
        row = [
            rec.precinct_id,
            rec.region,
            rec.territory,
            rec.registered,
            rec.ballots_cast,
            rec.invalid,
            1 if rec.machine_counted else 0,
            *rec.votes,
        ]
        if any_tags:
            row.append(";".join(rec.tags))
        writer.writerow(row)
    return out.getvalue()


def derive_shares(record: PrecinctRecord) -> ShareView:
    """Turnout and per-party shares of registered voters and of ballots cast.

    share_of_cast is defined as 0 for every party when no ballots were cast.
    """
    if record.registered <= 0:
        raise ZeroRegistered(f"precinct {record.precinct_id!r} has no registered voters")
    reg = record.registered
    cast = record.ballots_cast
    turnout = cast / reg
    of_registered = tuple(v / reg for v in record.votes)
    if cast > 0:
        of_cast = tuple(v / cast for v in record.votes)
    else:
        of_cast = tuple(0.0 for _ in record.votes)
    return ShareView(record.precinct_id, turnout, of_registered, of_cast)


def partition(
    dataset: ElectionDataset,
    predicate: Callable[[PrecinctRecord], bool],
) -> tuple[ElectionDataset, ElectionDataset]:
    """Split into (matching, non-matching) datasets sharing roster and leader."""
    hit: list[PrecinctRecord] = []
    miss: list[PrecinctRecord] = []
    for rec in dataset.records:
        (hit if predicate(rec) else miss).append(rec)
    return (
        ElectionDataset(dataset.election_id + "/in", dataset.roster, tuple(hit), dataset.designated_leader),
        ElectionDataset(dataset.election_id + "/out", dataset.roster, tuple(miss), dataset.designated_leader),
    )
