"""Monte-Carlo detector for spikes at round percentages.

The histogram of precinct results in whole percents develops spikes at
multiples of five when results are steered toward target figures.  But a
spike at a simple fraction such as 50% also arises for free from the
discreteness of k/n with small n, so comparing a bin against its smooth
neighborhood over-flags.  The null model here keeps every precinct's size
and observed proportion fixed and redraws only the counting noise:

* quantity ``turnout``: ballots ~ Binomial(registered, observed turnout)
* quantity ``leader_share`` / ``share:<party>``: votes ~ Binomial(ballots_cast,
  observed share of cast)

and rebuilds the histogram with the identical half-up integer rounding.
That reproduces every discreteness artifact, so surviving excess mass at a
target is evidence the reported values cluster there beyond counting noise.

One refinement is required for the null to actually reproduce the
artifact: redrawing at the raw observed proportion double-counts sampling
noise (the observed share is itself one binomial draw), which smears the
simulated shares and *undershoots* the discreteness atoms of small
precincts, turning the test anticonservative exactly where it must not be.
Each proportion is therefore shrunk toward the cross-precinct mean with an
empirical-Bayes factor v / (v + p(1-p)/n), where v is the across-precinct
share variance in excess of average sampling noise.  Shrinkage vanishes
when real spread dominates (large precincts, real clustering) and restores
the latent concentration when sampling noise dominates (the small-precinct
regime), so honest discreteness bumps survive in the null while genuine
target clustering still stands out.

The test is one-sided (excess only), with add-one smoothing on the
Monte-Carlo p-value: p = (1 + #{null >= observed}) / (replicates + 1).
Replicates draw from independent generators seeded by (seed, replicate
index), so any parallel schedule reproduces the sequential result.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import ElectionDataset
from .histograms import (
    QUANTITY_TURNOUT,
    bincount_percent,
    percent_bins,
    resolve_quantity,
    weights_for,
)
from .parallel import worker_count

DEFAULT_TARGETS = tuple(range(50, 101, 5))
MIN_REPLICATES = 100

DIAGNOSTIC_NOTE = (
    "Round-percent excess is a statistical diagnostic, not proof: it measures "
    "how unlikely the observed bin mass is under resampled counting noise, "
    "and says nothing about the cause of any excess."
)


@dataclass(frozen=True)
class NullDistribution:
    quantity: str
    weight_mode: str
    targets: tuple[int, ...]
    weights: np.ndarray  # (replicates, len(targets)) bin weights under the null
    seed: int

    @property
    def replicates(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class PeakReport:
    quantity: str
    weight_mode: str
    targets: tuple[int, ...]
    observed: tuple[int, ...]
    null_mean: tuple[float, ...]
    null_sd: tuple[float, ...]
    z_scores: tuple[float, ...]
    p_values: tuple[float, ...]
    flagged: tuple[int, ...]
    replicates: int
    seed: int
    alpha: float
    note: str = DIAGNOSTIC_NOTE

    def as_dict(self) -> dict:
        return {
            "quantity": self.quantity,
            "weight_mode": self.weight_mode,
            "replicates": self.replicates,
            "seed": self.seed,
            "alpha": self.alpha,
            "targets": [
                {
                    "percent": t,
                    "observed": o,
                    "null_mean": m,
                    "null_sd": s,
                    "z": z,
                    "p_value": p,
                    "flagged": t in self.flagged,
                }
                for t, o, m, s, z, p in zip(
                    self.targets,
                    self.observed,
                    self.null_mean,
                    self.null_sd,
                    self.z_scores,
                    self.p_values,
                )
            ],
            "flagged_targets": list(self.flagged),
            "note": self.note,
        }


def _replicate_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, index])))


def shrunken_proportions(numer: np.ndarray, denom: np.ndarray) -> np.ndarray:
    """Empirical-Bayes estimate of each precinct's latent proportion.

    Shrinks the observed proportion toward the cross-precinct mean by
    v / (v + mu(1-mu)/n), with v the observed share variance minus the
    average binomial sampling variance (floored at zero).
    """
    share = numer / denom
    if share.size < 2:
        return share
    mu = float(share.mean())
    mu_var = mu * (1.0 - mu)
    sampling = mu_var / denom
    v_latent = max(float(share.var(ddof=1)) - float(sampling.mean()), 0.0)
    lam = v_latent / (v_latent + sampling) if v_latent > 0 else np.zeros_like(sampling)
    return np.clip(mu + lam * (share - mu), 0.0, 1.0)


def _null_chunk(
    numer: np.ndarray,
    denom: np.ndarray,
    p_hat: np.ndarray,
    base_weights: np.ndarray,
    quantity: str,
    weight_mode: str,
    targets: np.ndarray,
    seed: int,
    indices: range,
) -> np.ndarray:
    out = np.empty((len(indices), len(targets)), dtype=np.int64)
    for row, rep in enumerate(indices):
        rng = _replicate_rng(seed, rep)
        sim = rng.binomial(denom, p_hat)
        bins = percent_bins(sim, denom)
        if quantity == QUANTITY_TURNOUT and weight_mode == "ballots":
            weights = sim  # the simulated dataset's own ballot counts
        else:
            weights = base_weights
        counts = bincount_percent(bins, weights)
        out[row] = counts[targets]
    return out


def simulate_null(
    dataset: ElectionDataset,
    quantity: str,
    replicates: int,
    seed: int,
    targets: tuple[int, ...] = DEFAULT_TARGETS,
    weight_mode: str = "precincts",
) -> NullDistribution:
    """Per-target bin weights under the size-and-proportion-preserving null."""
    if replicates < MIN_REPLICATES:
        raise ValueError(f"replicates must be >= {MIN_REPLICATES}, got {replicates}")
    numer, denom, mask = resolve_quantity(dataset, quantity)
    numer, denom = numer[mask], denom[mask]
    base_weights = weights_for(dataset, weight_mode)[mask]
    p_hat = shrunken_proportions(numer, denom)
    target_arr = np.asarray(targets, dtype=np.int64)

    n_workers = worker_count()
    if n_workers == 1 or replicates < 2 * n_workers:
        weights = _null_chunk(
            numer, denom, p_hat, base_weights, quantity, weight_mode, target_arr, seed, range(replicates)
        )
    else:
        bounds = np.linspace(0, replicates, n_workers + 1, dtype=int)
        chunks = [range(bounds[i], bounds[i + 1]) for i in range(n_workers)]
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(
                pool.map(
                    lambda idx: _null_chunk(
                        numer, denom, p_hat, base_weights, quantity, weight_mode, target_arr, seed, idx
                    ),
                    chunks,
                )
            )
        weights = np.vstack(parts)
    return NullDistribution(quantity, weight_mode, tuple(targets), weights, seed)


def mc_p_value(null_weights: np.ndarray, observed: int) -> float:
    """One-sided add-one Monte-Carlo p-value for an observed bin weight."""
    r = null_weights.shape[0]
    return (1 + int(np.count_nonzero(null_weights >= observed))) / (r + 1)


def detect_round_peaks(
    dataset: ElectionDataset,
    quantity: str,
    targets: tuple[int, ...] = DEFAULT_TARGETS,
    replicates: int = 1000,
    seed: int = 0,
    alpha: float = 0.01,
    weight_mode: str = "precincts",
) -> PeakReport:
    """Flag targets whose observed bin mass exceeds the Monte-Carlo null at level alpha."""
    null = simulate_null(dataset, quantity, replicates, seed, targets, weight_mode)
    numer, denom, mask = resolve_quantity(dataset, quantity)
    bins = percent_bins(numer[mask], denom[mask])
    counts = bincount_percent(bins, weights_for(dataset, weight_mode)[mask])
    observed = counts[np.asarray(targets, dtype=np.int64)]

    mean = null.weights.mean(axis=0)
    sd = null.weights.std(axis=0, ddof=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, (observed - mean) / sd, np.where(observed > mean, np.inf, 0.0))
    p = np.array([mc_p_value(null.weights[:, j], int(observed[j])) for j in range(len(targets))])
    flagged = tuple(int(t) for t, pj in zip(targets, p) if pj < alpha)
    return PeakReport(
        quantity=quantity,
        weight_mode=weight_mode,
        targets=tuple(targets),
        observed=tuple(int(o) for o in observed),
        null_mean=tuple(float(m) for m in mean),
        null_sd=tuple(float(s) for s in sd),
        z_scores=tuple(float(v) for v in z),
        p_values=tuple(float(v) for v in p),
        flagged=flagged,
        replicates=replicates,
        seed=seed,
        alpha=alpha,
    )
