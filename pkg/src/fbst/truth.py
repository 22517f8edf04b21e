"""Truth function estimation as a condensed step ladder, plus ladder algebra.

A TruthLadder is a right-continuous step CDF of the log-surprise value under
the posterior: W(v) = max{w_i : v_i <= v}, 0 below the first support point.
Support values are stored in log space throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sampler import SurpriseSample


@dataclass(frozen=True)
class TruthLadder:
    """Step-function CDF on log-surprise support points."""

    log_v: np.ndarray  # strictly increasing support (log values)
    w: np.ndarray  # non-decreasing cumulative masses, last == 1
    provenance: str = "empirical"  # empirical | convolved | analytic

    def __post_init__(self):
        log_v = np.asarray(self.log_v, dtype=float)
        w = np.asarray(self.w, dtype=float)
        object.__setattr__(self, "log_v", log_v)
        object.__setattr__(self, "w", w)
        if log_v.ndim != 1 or log_v.shape != w.shape or log_v.size == 0:
            raise ValueError("ladder needs matching 1-D support and mass arrays")
        if log_v.size > 1 and not np.all(np.diff(log_v) > 0):
            raise ValueError("support values must be strictly increasing")
        if np.any(np.diff(w) < 0) or w[0] < 0 or abs(w[-1] - 1.0) > 1e-12:
            raise ValueError("masses must be non-decreasing in [0, 1] ending at 1")

    @property
    def size(self) -> int:
        return self.log_v.size

    def atom_masses(self) -> np.ndarray:
        return np.diff(np.concatenate([[0.0], self.w]))

    def to_csv(self, path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.log_v, self.w]),
            delimiter=",",
            header="log_v,w",
            comments="",
        )


def eval_truth(ladder: TruthLadder, log_v) -> np.ndarray:
    """Right-continuous evaluation W(v) at log-scale query points."""
    q = np.asarray(log_v, dtype=float)
    idx = np.searchsorted(ladder.log_v, q, side="right")
    padded = np.concatenate([[0.0], ladder.w])
    out = padded[idx]
    # +inf queries always see full mass, -inf none
    out = np.where(np.isposinf(q), 1.0, out)
    out = np.where(np.isneginf(q), 0.0, out)
    return out[()] if np.ndim(out) == 0 else out


def _ladder_from_atoms(log_v: np.ndarray, masses: np.ndarray, provenance: str) -> TruthLadder:
    """Aggregate (possibly duplicated, unsorted) atoms into a valid ladder."""
    order = np.argsort(log_v, kind="stable")
    log_v = log_v[order]
    masses = masses[order]
    uniq, inverse = np.unique(log_v, return_inverse=True)
    agg = np.zeros(uniq.size)
    np.add.at(agg, inverse, masses)
    w = np.cumsum(agg)
    w /= w[-1]
    w[-1] = 1.0
    return TruthLadder(uniq, w, provenance)


def condense(ladder: TruthLadder, n_max: int) -> TruthLadder:
    """Reduce a ladder to at most n_max support points.

    Keeps quantile-spaced supports (first crossing of each level j/n_max)
    with masses snapped to the input CDF there; sup-norm error <= 1/n_max;
    idempotent when the input already fits.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    if ladder.size <= n_max:
        return ladder
    levels = np.arange(1, n_max + 1) / n_max
    idx = np.searchsorted(ladder.w, levels - 1e-15, side="left")
    idx = np.unique(np.minimum(idx, ladder.size - 1))
    return TruthLadder(ladder.log_v[idx], ladder.w[idx], ladder.provenance)


def estimate_truth_ladder(sample: SurpriseSample, n_max: int = 512) -> TruthLadder:
    """Empirical CDF of the per-draw log-surprise values, condensed to n_max."""
    if sample.size == 0:
        raise ValueError("empty sample")
    if sample.size < n_max:
        raise ValueError("sample smaller than the condensation bound")
    values = np.sort(sample.log_surprise)
    uniq, counts = np.unique(values, return_counts=True)
    w = np.cumsum(counts) / values.size
    w[-1] = 1.0
    full = TruthLadder(uniq, w, "empirical")
    return condense(full, n_max)


def sup_distance(a: TruthLadder, b: TruthLadder) -> float:
    """Sup-norm distance between two step ladders."""
    grid = np.union1d(a.log_v, b.log_v)
    diff = np.abs(eval_truth(a, grid) - eval_truth(b, grid))
    # also compare just below each jump point
    below = np.nextafter(grid, -np.inf)
    diff_below = np.abs(eval_truth(a, below) - eval_truth(b, below))
    return float(max(diff.max(), diff_below.max()))
