"""Precinct-level election forensics toolkit.

Reconstructs the standard statistical diagnostics run on precinct returns:
turnout/share scatter fields with linear trends, integer-percent histograms
with a discreteness-aware Monte-Carlo peak test, vote decomposition by
turnout bin with a ballot-stuffing estimate, matched-subset contrasts,
cross-election deltas, observer-protocol displacements, intraday
hyperactivity flags, and a synthetic election generator with injectable
fraud used to validate every detector against known ground truth.
"""

__version__ = "0.1.0"
