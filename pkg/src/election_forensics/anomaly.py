"""Comet-tail decomposition, super-linear growth check, and cluster split.

The stuffing estimate treats non-leader votes as a proxy for genuine
turnout: their vote mass per turnout bin is roughly flat when results are
clean, so the leader-to-others ratio in a low-turnout reference window
predicts how many leader votes each bin should hold.  Votes above that
prediction form the anomalous excess.  This proxy is an assumption and is
restated in every report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateX, EmptyReferenceWindow
from .histograms import TurnoutBinTable
from .scatter import ScatterPoint, TrendFit, fit_trend, slope_standard_error

DEFAULT_REFERENCE_WINDOW = (0.15, 0.35)
MIN_WINDOW_OTHER_SHARE = 0.05

PROXY_ASSUMPTION = (
    "Assumes non-leader vote mass per turnout bin tracks genuine turnout; "
    "the excess is measured against the leader/others ratio in the "
    "reference window, not against any external truth."
)


@dataclass(frozen=True)
class StuffingEstimate:
    reference_ratio: float
    reference_window: tuple[float, float]
    anomalous_by_bin: tuple[float, ...]
    total_anomalous: float
    leader_total: int
    ballots_total: int
    adjusted_leader_share: float
    assumption: str = PROXY_ASSUMPTION

    def as_dict(self) -> dict:
        return {
            "reference_ratio": self.reference_ratio,
            "reference_window": list(self.reference_window),
            "total_anomalous_votes": self.total_anomalous,
            "leader_total": self.leader_total,
            "ballots_total": self.ballots_total,
            "raw_leader_share": self.leader_total / self.ballots_total if self.ballots_total else 0.0,
            "adjusted_leader_share": self.adjusted_leader_share,
            "assumption": self.assumption,
        }


def estimate_stuffing(
    table: TurnoutBinTable,
    reference_window: tuple[float, float] = DEFAULT_REFERENCE_WINDOW,
) -> StuffingEstimate:
    """Excess leader votes per turnout bin relative to the reference-window ratio.

    Requires the window to hold at least 5% of all non-leader votes, so the
    ratio is estimated from real mass rather than stray precincts.
    """
    lo, hi = reference_window
    if not 0 <= lo < hi <= 1:
        raise EmptyReferenceWindow(f"bad reference window [{lo}, {hi}]")
    n_bins = table.n_bins
    votes = np.asarray(table.votes, dtype=np.int64)
    leader_idx = table.parties.index(table.leader)
    leader = votes[:, leader_idx].astype(np.float64)
    others = (votes.sum(axis=1) - votes[:, leader_idx]).astype(np.float64)

    lo_idx = math.ceil(lo * n_bins - 1e-9)
    hi_idx = math.floor(hi * n_bins + 1e-9)
    window = slice(max(lo_idx, 0), min(hi_idx, n_bins))
    others_total = float(others.sum())
    window_others = float(others[window].sum())
    if others_total == 0 or window_others < MIN_WINDOW_OTHER_SHARE * others_total:
        raise EmptyReferenceWindow(
            f"window [{lo}, {hi}] holds {window_others:.0f} of {others_total:.0f} "
            "non-leader votes (< 5%)"
        )
    k = float(leader[window].sum()) / window_others
    anomalous = np.maximum(0.0, leader - k * others)
    total = float(anomalous.sum())
    leader_total = int(leader.sum())
    ballots_total = int(table.ballots_total())
    denom = ballots_total - total
    adjusted = (leader_total - total) / denom if denom > 0 else 0.0
    return StuffingEstimate(
        reference_ratio=k,
        reference_window=(lo, hi),
        anomalous_by_bin=tuple(float(a) for a in anomalous),
        total_anomalous=total,
        leader_total=leader_total,
        ballots_total=ballots_total,
        adjusted_leader_share=adjusted,
    )


@dataclass(frozen=True)
class SuperlinearityResult:
    verdict: str  # "linear" | "superlinear"
    lower_fit: TrendFit
    upper_fit: TrendFit
    lower_se: float
    upper_se: float
    split_x: float

    @property
    def slope_gap(self) -> float:
        return self.upper_fit.slope - self.lower_fit.slope

    @property
    def combined_se(self) -> float:
        return math.hypot(self.lower_se, self.upper_se)

    def as_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "split_turnout": self.split_x,
            "lower_slope": self.lower_fit.slope,
            "upper_slope": self.upper_fit.slope,
            "slope_gap": self.slope_gap,
            "combined_se": self.combined_se,
        }


def superlinearity_check(points: Sequence[ScatterPoint]) -> SuperlinearityResult:
    """Compare trend slopes on the lower and upper turnout halves.

    Declares "superlinear" when the upper-half slope exceeds the lower-half
    slope by more than two combined standard errors; growth explainable by a
    single straight line stays "linear".
    """
    if len(points) < 50:
        raise ValueError(f"need at least 50 points, got {len(points)}")
    ordered = sorted(points, key=lambda p: (p.x, p.precinct_id))
    half = len(ordered) // 2
    lower, upper = ordered[:half], ordered[half:]
    split_x = ordered[half].x
    lower_fit = fit_trend(lower)
    upper_fit = fit_trend(upper)
    lower_se = slope_standard_error(lower, lower_fit)
    upper_se = slope_standard_error(upper, upper_fit)
    gap = upper_fit.slope - lower_fit.slope
    verdict = "superlinear" if gap > 2.0 * math.hypot(lower_se, upper_se) else "linear"
    return SuperlinearityResult(verdict, lower_fit, upper_fit, lower_se, upper_se, split_x)


@dataclass(frozen=True)
class ClusterSplit:
    assignments: tuple[int, ...]
    centroids: tuple[tuple[float, float], tuple[float, float]]
    weights: tuple[float, float]
    bic_one: float
    bic_two: float
    decision: str  # "one" | "two"

    @property
    def separation_score(self) -> float:
        """BIC improvement of the 2-cluster model over a single cluster."""
        return self.bic_one - self.bic_two

    def as_dict(self) -> dict:
        return {
            "decision": self.decision,
            "centroids": [list(c) for c in self.centroids],
            "weights": list(self.weights),
            "bic_one": self.bic_one,
            "bic_two": self.bic_two,
            "separation_score": self.separation_score,
        }


_VAR_FLOOR = 1e-10
_MAX_EM_ITER = 250  # a non-converged 2-component fit only loses likelihood
BIC_DECISION_MARGIN = 10.0


def _spherical_loglik_one(xy: np.ndarray) -> tuple[float, np.ndarray, float]:
    n = xy.shape[0]
    mu = xy.mean(axis=0)
    var = max(float(((xy - mu) ** 2).sum()) / (2 * n), _VAR_FLOOR)
    ll = -n * math.log(2 * math.pi * var) - float(((xy - mu) ** 2).sum()) / (2 * var)
    return ll, mu, var

def _log_gauss_spherical(xy: np.ndarray, mu: np.ndarray, var: float) -> np.ndarray:
    d2 = ((xy - mu) ** 2).sum(axis=1)
    return -math.log(2 * math.pi * var) - d2 / (2 * var)


def _kmeanspp_init(xy: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = xy.shape[0]
    first = int(rng.integers(n))
    d2 = ((xy - xy[first]) ** 2).sum(axis=1)
    total = float(d2.sum())
    if total <= 0:
        second = int(rng.integers(n))
    else:
        second = int(rng.choice(n, p=d2 / total))
    return np.stack([xy[first], xy[second]])


def _em_two_spherical(
    xy: np.ndarray, rng: np.random.Generator, tol: float
) -> tuple[float, np.ndarray, np.ndarray, np.ndarray]:
    n = xy.shape[0]
    mu = _kmeanspp_init(xy, rng)
    var = np.full(2, max(float(xy.var()), _VAR_FLOOR))
    w = np.array([0.5, 0.5])
    prev_ll = -np.inf
    resp = np.full((n, 2), 0.5)
    for _ in range(_MAX_EM_ITER):
        log_p = np.stack(
            [math.log(w[k]) + _log_gauss_spherical(xy, mu[k], float(var[k])) for k in range(2)],
            axis=1,
        )
        m = log_p.max(axis=1, keepdims=True)
        lse = m[:, 0] + np.log(np.exp(log_p - m).sum(axis=1))
        ll = float(lse.sum())
        resp = np.exp(log_p - lse[:, None])
        nk = resp.sum(axis=0)
        nk = np.maximum(nk, 1e-12)
        w = nk / n
        mu = (resp.T @ xy) / nk[:, None]
        for k in range(2):
            d2 = ((xy - mu[k]) ** 2).sum(axis=1)
            var[k] = max(float((resp[:, k] * d2).sum()) / (2 * nk[k]), _VAR_FLOOR)
        if abs(ll - prev_ll) < tol:
            prev_ll = ll
            break
        prev_ll = ll
    return prev_ll, mu, var, resp


def split_two_clusters(
    points: Sequence[ScatterPoint],
    seed: int = 0,
    restarts: int = 20,
    tol: float = 1e-8,
    bic_margin: float = BIC_DECISION_MARGIN,
) -> ClusterSplit:
    """Two-component spherical Gaussian mixture versus one, decided by BIC.

    The 2-component fit uses EM from k-means++ starts, one independent
    seeded restart stream per index; the winner is the restart with the
    lowest BIC (ties by restart index).  "two" requires a BIC improvement
    of at least ``bic_margin`` over the single-Gaussian model.
    """
    if len(points) < 20:
        raise ValueError(f"need at least 20 points, got {len(points)}")
    raw = np.array([(p.x, p.y) for p in points], dtype=np.float64)
    n = raw.shape[0]
    # canonical point order makes the result exactly permutation-invariant
    order = np.lexsort((raw[:, 1], raw[:, 0]))
    xy = raw[order]

    ll1, _, _ = _spherical_loglik_one(xy)
    bic_one = -2 * ll1 + 3 * math.log(n)

    best = None
    for r in range(restarts):
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, r])))
        ll2, mu, var, resp = _em_two_spherical(xy, rng, tol)
        bic_two = -2 * ll2 + 7 * math.log(n)
        if best is None or bic_two < best[0]:
            best = (bic_two, mu, var, resp)
    bic_two, mu, var, resp = best
    labels = resp.argmax(axis=1)
    assignments_arr = np.empty(n, dtype=np.int64)
    assignments_arr[order] = labels
    assignments = tuple(int(a) for a in assignments_arr)
    weights = resp.sum(axis=0) / n
    decision = "two" if (bic_one - bic_two) >= bic_margin else "one"
    return ClusterSplit(
        assignments=assignments,
        centroids=((float(mu[0, 0]), float(mu[0, 1])), (float(mu[1, 0]), float(mu[1, 1]))),
        weights=(float(weights[0]), float(weights[1])),
        bic_one=float(bic_one),
        bic_two=float(bic_two),
        decision=decision,
    )
