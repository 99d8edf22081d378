"""Synthetic election generator with injectable fraud mechanisms.

The honest generator draws precinct sizes from a clamped log-normal,
turnout probabilities from a truncated Gaussian mixture (heterogeneous
electorates are mixtures, so a multi-component turnout model is the
honest-world baseline detectors must tolerate), ballots as a binomial of
registered voters, and votes as a multinomial over jittered baseline
shares with the remainder going to invalid ballots.

Fraud mechanisms share a single per-precinct propensity draw: a mechanism
with fraction f affects exactly round(f * n_eligible) precincts, those
with the lowest propensity, so the sets of a combined scenario are nested
(precincts willing to stuff are also the ones willing to move votes).
Mechanisms:

* stuffing - adds ballots credited to the leader, raising turnout and the
  leader's share of registered 1:1; per-precinct intensity is a Gaussian
  spread around the scenario intensity, largest where propensity is lowest.
* transfer - moves a fraction of every other party's votes to the leader
  at fixed turnout.
* target_rounding - minimally adjusts counts so turnout or leader share
  lands within half a point of the nearest listed percent target (stuffing
  moves turnout up; transfer moves leader share in either direction).
  Precincts where no target is reachable within the cap are skipped and
  recorded.
* intraday_jump - end-of-day stuffing invisible to intraday reports.

Generation is deterministic for a fixed (model, scenario, seed): draws are
made in fixed-size precinct blocks, each from its own (seed, block) stream,
so a parallel map over blocks reproduces the sequential output exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dataset import ElectionDataset, PartyRoster, PrecinctRecord
from .dynamics import IntradaySeries, parse_time
from .errors import InvalidModel
from .histograms import QUANTITY_LEADER_SHARE, QUANTITY_TURNOUT

BLOCK = 4096
_FRAUD_STREAM = 1_000_003  # offset keeping fraud draws disjoint from generation blocks


@dataclass(frozen=True)
class TurnoutComponent:
    mean: float
    sd: float
    weight: float


@dataclass(frozen=True)
class HonestModel:
    precincts: int
    parties: tuple[str, ...]
    baseline_shares: tuple[float, ...]
    leader: str
    registered_median: float = 1500.0
    registered_sigma: float = 0.4
    registered_min: int = 100
    registered_max: int = 6000
    turnout_components: tuple[TurnoutComponent, ...] = (TurnoutComponent(0.5, 0.08, 1.0),)
    share_noise_sd: float = 0.04
    machine_fraction: float = 0.0
    territories: int = 1
    report_times: tuple[int, ...] = ()  # minutes since midnight; empty = no intraday

    def validate(self) -> None:
        if self.precincts < 0:
            raise InvalidModel(f"precincts must be >= 0, got {self.precincts}")
        if not self.parties or len(set(self.parties)) != len(self.parties):
            raise InvalidModel("parties must be non-empty and unique")
        if len(self.baseline_shares) != len(self.parties):
            raise InvalidModel("baseline_shares must align with parties")
        if any(s < 0 for s in self.baseline_shares):
            raise InvalidModel("baseline shares must be non-negative")
        if sum(self.baseline_shares) > 1 + 1e-12:
            raise InvalidModel(f"baseline shares sum to {sum(self.baseline_shares)} > 1")
        if self.leader not in self.parties:
            raise InvalidModel(f"leader {self.leader!r} not among parties")
        if not self.turnout_components:
            raise InvalidModel("need at least one turnout component")
        wsum = sum(c.weight for c in self.turnout_components)
        if abs(wsum - 1.0) > 1e-9:
            raise InvalidModel(f"turnout component weights sum to {wsum}, need 1")
        if any(c.sd < 0 or not 0 <= c.mean <= 1 for c in self.turnout_components):
            raise InvalidModel("turnout components need mean in [0,1] and sd >= 0")
        if not 1 <= self.registered_min <= self.registered_max:
            raise InvalidModel("need 1 <= registered_min <= registered_max")
        if not 0 <= self.machine_fraction <= 1:
            raise InvalidModel("machine_fraction must be in [0,1]")
        if self.territories < 1:
            raise InvalidModel("territories must be >= 1")
        if self.share_noise_sd < 0:
            raise InvalidModel("share_noise_sd must be >= 0")


def model_from_json(text: str) -> HonestModel:
    raw = json.loads(text)
    components = tuple(
        TurnoutComponent(float(c["mean"]), float(c["sd"]), float(c["weight"]))
        for c in raw.get("turnout_components", [{"mean": 0.5, "sd": 0.08, "weight": 1.0}])
    )
    registered = raw.get("registered", {})
    times = tuple(parse_time(t, 0) for t in raw.get("report_times", []))
    model = HonestModel(
        precincts=int(raw["precincts"]),
        parties=tuple(raw["parties"]),
        baseline_shares=tuple(float(s) for s in raw["baseline_shares"]),
        leader=str(raw["leader"]),
        registered_median=float(registered.get("median", 1500)),
        registered_sigma=float(registered.get("sigma", 0.4)),
        registered_min=int(registered.get("min", 100)),
        registered_max=int(registered.get("max", 6000)),
        turnout_components=components,
        share_noise_sd=float(raw.get("share_noise_sd", 0.04)),
        machine_fraction=float(raw.get("machine_fraction", 0.0)),
        territories=int(raw.get("territories", 1)),
        report_times=times,
    )
    model.validate()
    return model


@dataclass(frozen=True)
class StuffingSpec:
    fraction: float = 0.0
    intensity: float = 0.0  # mean stuffed ballots as a fraction of registered
    jitter: float = 1 / 3  # relative sd of per-precinct intensity


@dataclass(frozen=True)
class TransferSpec:
    fraction: float = 0.0
    amount: float = 0.0  # fraction of each other party's votes moved to the leader


@dataclass(frozen=True)
class RoundingSpec:
    fraction: float = 0.0
    targets: tuple[int, ...] = (70, 75, 80, 85)
    quantity: str = QUANTITY_LEADER_SHARE  # or "turnout"
    max_adjustment: float = 0.05  # cap on the share/turnout change, as a fraction


@dataclass(frozen=True)
class JumpSpec:
    fraction: float = 0.0
    size: float = 0.0  # end-of-day stuffed ballots as a fraction of registered


@dataclass(frozen=True)
class FraudScenario:
    stuffing: StuffingSpec = StuffingSpec()
    transfer: TransferSpec = TransferSpec()
    target_rounding: RoundingSpec = RoundingSpec()
    intraday_jump: JumpSpec = JumpSpec()
    exempt_machine_counted: bool = False
    seed: int | None = None

    def validate(self) -> None:
        for name, frac in (
            ("stuffing", self.stuffing.fraction),
            ("transfer", self.transfer.fraction),
            ("target_rounding", self.target_rounding.fraction),
            ("intraday_jump", self.intraday_jump.fraction),
        ):
            if not 0 <= frac <= 1:
                raise InvalidModel(f"{name}.fraction must be in [0,1], got {frac}")
        if not 0 <= self.stuffing.intensity <= 1 or self.stuffing.jitter < 0:
            raise InvalidModel("stuffing intensity must be in [0,1] and jitter >= 0")
        if not 0 <= self.transfer.amount <= 1:
            raise InvalidModel("transfer amount must be in [0,1]")
        if self.target_rounding.quantity not in (QUANTITY_TURNOUT, QUANTITY_LEADER_SHARE):
            raise InvalidModel(f"unknown rounding quantity {self.target_rounding.quantity!r}")
        if any(not 0 <= t <= 100 for t in self.target_rounding.targets):
            raise InvalidModel("rounding targets must be integer percents in [0,100]")
        if not 0 <= self.target_rounding.max_adjustment <= 1:
            raise InvalidModel("max_adjustment must be in [0,1]")
        if not 0 <= self.intraday_jump.size <= 1:
            raise InvalidModel("jump size must be in [0,1]")


def scenario_from_json(text: str) -> FraudScenario:
    raw = json.loads(text)
    stuffing = raw.get("stuffing", {})
    transfer = raw.get("transfer", {})
    rounding = raw.get("target_rounding", {})
    jump = raw.get("intraday_jump", {})
    scenario = FraudScenario(
        stuffing=StuffingSpec(
            fraction=float(stuffing.get("fraction", 0.0)),
            intensity=float(stuffing.get("intensity", 0.0)),
            jitter=float(stuffing.get("jitter", 1 / 3)),
        ),
        transfer=TransferSpec(
            fraction=float(transfer.get("fraction", 0.0)),
            amount=float(transfer.get("amount", 0.0)),
        ),
        target_rounding=RoundingSpec(
            fraction=float(rounding.get("fraction", 0.0)),
            targets=tuple(int(t) for t in rounding.get("targets", (70, 75, 80, 85))),
            quantity=str(rounding.get("quantity", QUANTITY_LEADER_SHARE)),
            max_adjustment=float(rounding.get("max_adjustment", 0.05)),
        ),
        intraday_jump=JumpSpec(
            fraction=float(jump.get("fraction", 0.0)),
            size=float(jump.get("size", 0.0)),
        ),
        exempt_machine_counted=bool(raw.get("exempt_machine_counted", False)),
        seed=raw.get("seed"),
    )
    scenario.validate()
    return scenario


@dataclass(frozen=True)
class GroundTruth:
    """Per-precinct generator bookkeeping, aligned with dataset record order."""

    precinct_ids: tuple[str, ...]
    component: np.ndarray
    turnout_prob: np.ndarray
    honest_ballots_cast: np.ndarray
    honest_leader_votes: np.ndarray
    stuffed: np.ndarray
    transferred: np.ndarray
    rounding_delta: np.ndarray
    jump: np.ndarray
    rounding_skipped: tuple[str, ...] = ()

    def to_csv(self) -> str:
        lines = [
            "precinct_id,component,turnout_prob,honest_ballots_cast,honest_leader_votes,"
            "stuffed_votes,transferred_votes,rounding_delta,jump_votes"
        ]
        for i, pid in enumerate(self.precinct_ids):
            lines.append(
                f"{pid},{int(self.component[i])},{self.turnout_prob[i]:.6f},"
                f"{int(self.honest_ballots_cast[i])},{int(self.honest_leader_votes[i])},"
                f"{int(self.stuffed[i])},{int(self.transferred[i])},"
                f"{int(self.rounding_delta[i])},{int(self.jump[i])}"
            )
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class SyntheticElection:
    dataset: ElectionDataset  # after fraud (equals honest when scenario is empty)
    honest: ElectionDataset
    truth: GroundTruth
    intraday: dict[str, IntradaySeries] = field(default_factory=dict)


def _block_rng(seed: int, block_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, block_index])))


def generate_honest(model: HonestModel, seed: int) -> SyntheticElection:
    """Draw an honest dataset plus ground truth; deterministic in (model, seed)."""
    model.validate()
    n = model.precincts
    k = len(model.parties)
    s_base = float(sum(model.baseline_shares))
    base = np.asarray(model.baseline_shares, dtype=np.float64)
    comp_means = np.array([c.mean for c in model.turnout_components])
    comp_sds = np.array([c.sd for c in model.turnout_components])
    comp_weights = np.array([c.weight for c in model.turnout_components])

    registered = np.empty(n, dtype=np.int64)
    component = np.empty(n, dtype=np.int64)
    turnout_prob = np.empty(n, dtype=np.float64)
    cast = np.empty(n, dtype=np.int64)
    votes = np.empty((n, k), dtype=np.int64)
    machine = np.zeros(n, dtype=bool)
    tail = np.empty(n, dtype=np.float64)
    mid = np.empty(n, dtype=np.float64)
    width = np.empty(n, dtype=np.float64)

    for b_start in range(0, n, BLOCK):
        b_end = min(b_start + BLOCK, n)
        m = b_end - b_start
        rng = _block_rng(seed, b_start // BLOCK)
        reg = rng.lognormal(math.log(model.registered_median), model.registered_sigma, m)
        reg = np.clip(np.rint(reg), model.registered_min, model.registered_max).astype(np.int64)
        comp = rng.choice(len(comp_weights), size=m, p=comp_weights)
        t = np.clip(rng.normal(comp_means[comp], comp_sds[comp]), 0.0, 1.0)
        c = rng.binomial(reg, t)
        eps = rng.normal(0.0, model.share_noise_sd, (m, k))
        raw = np.maximum(base[None, :] + eps, 1e-9)
        probs = raw * (s_base / raw.sum(axis=1))[:, None]
        # sequential binomial decomposition of the multinomial over parties
        v = np.zeros((m, k), dtype=np.int64)
        remaining = c.copy()
        used_p = np.zeros(m)
        for j in range(k):
            denom = np.maximum(1.0 - used_p, 1e-12)
            q = np.clip(probs[:, j] / denom, 0.0, 1.0)
            v[:, j] = rng.binomial(remaining, q)
            remaining -= v[:, j]
            used_p += probs[:, j]
        machine[b_start:b_end] = rng.random(m) < model.machine_fraction
        tail[b_start:b_end] = rng.uniform(0.02, 0.06, m)
        mid[b_start:b_end] = rng.uniform(13 * 60, 15 * 60, m)
        width[b_start:b_end] = rng.uniform(150, 210, m)

        registered[b_start:b_end] = reg
        component[b_start:b_end] = comp
        turnout_prob[b_start:b_end] = t
        cast[b_start:b_end] = c
        votes[b_start:b_end] = v

    leader_idx = model.parties.index(model.leader)
    pad = max(5, len(str(max(n - 1, 0))))
    pids = tuple(f"p{i:0{pad}d}" for i in range(n))
    records = tuple(
        PrecinctRecord(
            precinct_id=pids[i],
            region="R1",
            territory=f"T{(i % model.territories) + 1}",
            registered=int(registered[i]),
            ballots_cast=int(cast[i]),
            invalid=int(cast[i] - votes[i].sum()),
            machine_counted=bool(machine[i]),
            votes=tuple(int(x) for x in votes[i]),
        )
        for i in range(n)
    )
    dataset = ElectionDataset(
        f"synthetic-{seed}", PartyRoster(model.parties), records, model.leader
    )

    intraday: dict[str, IntradaySeries] = {}
    if model.report_times and n:
        times = np.asarray(sorted(model.report_times), dtype=np.float64)
        f = 1.0 / (1.0 + np.exp(-(times[None, :] - mid[:, None]) / width[:, None]))
        scale = (1.0 - tail)[:, None] / f[:, -1][:, None]
        cum = np.floor(cast[:, None] * f * scale).astype(np.int64)
        cum = np.maximum.accumulate(cum, axis=1)  # guard against float non-monotonicity
        for i, pid in enumerate(pids):
            intraday[pid] = IntradaySeries(
                pid, tuple((int(times[j]), int(cum[i, j])) for j in range(len(times)))
            )

    zeros = np.zeros(n, dtype=np.int64)
    truth = GroundTruth(
        precinct_ids=pids,
        component=component,
        turnout_prob=turnout_prob,
        honest_ballots_cast=cast.copy(),
        honest_leader_votes=votes[:, leader_idx].copy(),
        stuffed=zeros.copy(),
        transferred=zeros.copy(),
        rounding_delta=zeros.copy(),
        jump=zeros.copy(),
    )
    return SyntheticElection(dataset=dataset, honest=dataset, truth=truth, intraday=intraday)


def _half_up(numer: int, denom: int) -> int:
    """round-half-up of numer/denom for positive denom, in exact integers."""
    return (2 * numer + denom) // (2 * denom)


def _distribute(amount: int, weights: Sequence[int]) -> list[int]:
    """Split ``amount`` over non-negative integer weights, proportionally,
    largest-remainder, deterministic; never exceeds a weight when taking."""
    total = sum(weights)
    if total == 0 or amount == 0:
        return [0] * len(weights)
    shares = [amount * w // total for w in weights]
    leftover = amount - sum(shares)
    order = sorted(
        range(len(weights)),
        key=lambda j: (-(amount * weights[j] % total), j),
    )
    for j in order:
        if leftover == 0:
            break
        if weights[j] > shares[j]:
            shares[j] += 1
            leftover -= 1
    # any residue (all weights saturated) stays unassigned; callers cap amount first
    return shares


def apply_fraud(
    dataset: ElectionDataset,
    scenario: FraudScenario,
    seed: int | None = None,
    truth: GroundTruth | None = None,
) -> tuple[ElectionDataset, GroundTruth]:
    """Apply the scenario's mechanisms; returns the new dataset and ground truth.

    ``seed`` overrides ``scenario.seed``; one of them must be set unless the
    scenario is a no-op.  Ground-truth arrays record exact per-precinct
    stuffed, transferred, rounding, and jump vote counts.
    """
    scenario.validate()
    n = len(dataset)
    leader_idx = dataset.leader_index
    eff_seed = seed if seed is not None else scenario.seed
    active = (
        scenario.stuffing.fraction * scenario.stuffing.intensity > 0
        or scenario.transfer.fraction * scenario.transfer.amount > 0
        or scenario.target_rounding.fraction > 0
        or scenario.intraday_jump.fraction * scenario.intraday_jump.size > 0
    )
    if active and eff_seed is None:
        raise InvalidModel("scenario with active mechanisms needs a seed")

    if truth is None:
        zeros = np.zeros(n, dtype=np.int64)
        arrays = dataset.counts()
        truth = GroundTruth(
            precinct_ids=tuple(r.precinct_id for r in dataset.records),
            component=zeros.copy(),
            turnout_prob=arrays.ballots_cast / np.maximum(arrays.registered, 1),
            honest_ballots_cast=arrays.ballots_cast.copy(),
            honest_leader_votes=arrays.votes[:, leader_idx].copy(),
            stuffed=zeros.copy(),
            transferred=zeros.copy(),
            rounding_delta=zeros.copy(),
            jump=zeros.copy(),
        )
    if not active:
        return dataset, truth

    arrays = dataset.counts()
    registered = arrays.registered.copy()
    cast = arrays.ballots_cast.copy()
    invalid = arrays.invalid.copy()
    votes = arrays.votes.copy()

    rng = _block_rng(eff_seed, _FRAUD_STREAM)
    propensity = rng.random(n)
    shape = rng.standard_normal(n)

    eligible = np.ones(n, dtype=bool)
    if scenario.exempt_machine_counted:
        eligible &= ~arrays.machine_counted
    eligible_idx = np.flatnonzero(eligible)
    by_propensity = eligible_idx[np.argsort(propensity[eligible_idx], kind="stable")]

    def affected_set(fraction: float) -> np.ndarray:
        return by_propensity[: round(fraction * by_propensity.size)]

    stuffed = np.zeros(n, dtype=np.int64)
    transferred = np.zeros(n, dtype=np.int64)
    rounding_delta = np.zeros(n, dtype=np.int64)
    jump = np.zeros(n, dtype=np.int64)
    skipped: list[str] = []

    spec = scenario.stuffing
    if spec.fraction > 0 and spec.intensity > 0:
        affected = affected_set(spec.fraction)
        if affected.size:
            # Gaussian intensity spread, biggest where propensity is lowest:
            # rank-match a sorted normal sample against propensity order.
            z = np.sort(shape[affected])[::-1]
            rel = np.clip(1.0 + spec.jitter * np.clip(z, -3.0, 3.0), 0.0, None)
            amounts = np.rint(spec.intensity * rel * registered[affected]).astype(np.int64)
            amounts = np.minimum(amounts, registered[affected] - cast[affected])
            amounts = np.maximum(amounts, 0)
            stuffed[affected] = amounts
            cast[affected] += amounts
            votes[affected, leader_idx] += amounts

    spec = scenario.transfer
    if spec.fraction > 0 and spec.amount > 0:
        affected = affected_set(spec.fraction)
        for i in affected:
            moved = 0
            for j in range(votes.shape[1]):
                if j == leader_idx:
                    continue
                take = int(spec.amount * votes[i, j])
                votes[i, j] -= take
                moved += take
            votes[i, leader_idx] += moved
            transferred[i] = moved

    spec = scenario.target_rounding
    if spec.fraction > 0 and spec.targets:
        affected = affected_set(spec.fraction)
        targets = sorted(spec.targets)
        for i in affected:
            c = int(cast[i])
            reg = int(registered[i])
            if spec.quantity == QUANTITY_LEADER_SHARE:
                if c == 0:
                    skipped.append(dataset.records[i].precinct_id)
                    continue
                v = int(votes[i, leader_idx])
                current = 100.0 * v / c
                best = None
                for t in sorted(targets, key=lambda t: (abs(t - current), t)):
                    want = _half_up(c * t, 100)
                    delta = want - v
                    if abs(delta) / c > spec.max_adjustment + 1e-12:
                        continue
                    others = [int(votes[i, j]) for j in range(votes.shape[1]) if j != leader_idx]
                    if delta > sum(others):
                        continue
                    best = (delta, others)
                    break
                if best is None:
                    skipped.append(dataset.records[i].precinct_id)
                    continue
                delta, others = best
                other_idx = [j for j in range(votes.shape[1]) if j != leader_idx]
                if delta > 0:
                    taken = _distribute(delta, others)
                    for j, take in zip(other_idx, taken):
                        votes[i, j] -= take
                    votes[i, leader_idx] += sum(taken)
                    rounding_delta[i] = sum(taken)
                elif delta < 0:
                    give = -delta
                    weights = [o + 1 for o in others]  # allow giving to zero-vote parties
                    given = _distribute(give, weights)
                    for j, g in zip(other_idx, given):
                        votes[i, j] += g
                    votes[i, leader_idx] -= sum(given)
                    rounding_delta[i] = -sum(given)
            else:  # turnout: stuff up to the nearest reachable target at or above
                current = 100.0 * c / reg
                best = None
                for t in targets:
                    want = _half_up(reg * t, 100)
                    delta = want - c
                    if delta < 0:
                        continue
                    if delta / reg > spec.max_adjustment + 1e-12 or want > reg:
                        continue
                    best = delta
                    break
                if best is None:
                    skipped.append(dataset.records[i].precinct_id)
                    continue
                cast[i] += best
                votes[i, leader_idx] += best
                rounding_delta[i] = best

    spec = scenario.intraday_jump
    if spec.fraction > 0 and spec.size > 0:
        affected = affected_set(spec.fraction)
        amounts = np.rint(spec.size * registered[affected]).astype(np.int64)
        amounts = np.minimum(amounts, registered[affected] - cast[affected])
        amounts = np.maximum(amounts, 0)
        jump[affected] = amounts
        cast[affected] += amounts
        votes[affected, leader_idx] += amounts

    records = tuple(
        PrecinctRecord(
            precinct_id=rec.precinct_id,
            region=rec.region,
            territory=rec.territory,
            registered=int(registered[i]),
            ballots_cast=int(cast[i]),
            invalid=int(invalid[i]),
            machine_counted=rec.machine_counted,
            votes=tuple(int(x) for x in votes[i]),
            tags=rec.tags,
        )
        for i, rec in enumerate(dataset.records)
    )
    for rec in records:
        rec.validate()
    new_dataset = ElectionDataset(
        dataset.election_id, dataset.roster, records, dataset.designated_leader
    )
    new_truth = GroundTruth(
        precinct_ids=truth.precinct_ids,
        component=truth.component,
        turnout_prob=truth.turnout_prob,
        honest_ballots_cast=truth.honest_ballots_cast,
        honest_leader_votes=truth.honest_leader_votes,
        stuffed=truth.stuffed + stuffed,
        transferred=truth.transferred + transferred,
        rounding_delta=truth.rounding_delta + rounding_delta,
        jump=truth.jump + jump,
        rounding_skipped=truth.rounding_skipped + tuple(skipped),
    )
    return new_dataset, new_truth


def synthesize(model: HonestModel, scenario: FraudScenario | None, seed: int) -> SyntheticElection:
    """Honest generation followed by fraud injection; intraday series stay honest."""
    honest = generate_honest(model, seed)
    if scenario is None:
        return honest
    fraud_seed = scenario.seed if scenario.seed is not None else seed
    dataset, truth = apply_fraud(honest.dataset, scenario, seed=fraud_seed, truth=honest.truth)
    return SyntheticElection(
        dataset=dataset, honest=honest.dataset, truth=truth, intraday=honest.intraday
    )
