"""Statistical post-processing: confidence intervals, pmf comparison, and the
information quality ratio used as an empirical independence metric."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.stats

from .errors import DegenerateJoint


@dataclass(frozen=True)
class JointPMF:
    """Time-weighted joint pmf of two integer queue lengths.

    The last bin along each axis is an overflow bucket; it participates as an
    ordinary cell so the mass stays normalized (a documented caveat for
    tail-sensitive metrics).
    """

    p: np.ndarray               # 2D, sums to 1

    def __post_init__(self):
        total = float(self.p.sum())
        if not np.isclose(total, 1.0, atol=1e-9):
            raise ValueError(f"joint pmf mass {total} != 1")
        if np.any(self.p < 0):
            raise ValueError("joint pmf has negative cells")

    @staticmethod
    def from_counts(counts: np.ndarray) -> "JointPMF":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum()
        if total <= 0:
            raise ValueError("empty joint histogram")
        return JointPMF(counts / total)

    @property
    def marginal_x(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def marginal_y(self) -> np.ndarray:
        return self.p.sum(axis=0)


def iqr(joint: JointPMF) -> float:
    """Information quality ratio I(X;Y) / H(X,Y), natural logarithm.

    Computed as  sum p log(p_x p_y) / sum p log p  -  1  over cells with
    p > 0 (the 0 log 0 = 0 convention).  Zero iff X and Y are independent;
    1 for a deterministic relationship.  Raises DegenerateJoint when the
    joint entropy is zero (a single atom), where the ratio is undefined.
    """
    p = joint.p
    px = joint.marginal_x
    py = joint.marginal_y
    mask = p > 0
    log_joint = float(np.sum(p[mask] * np.log(p[mask])))
    if log_joint == 0.0:
        raise DegenerateJoint("joint distribution is a single atom; ratio undefined")
    prod = np.outer(px, py)
    log_prod = float(np.sum(p[mask] * np.log(prod[mask])))
    return log_prod / log_joint - 1.0


def ci(samples) -> tuple[float, float]:
    """Mean and 95% Student-t half-width across replication values."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("need at least 2 replications for a confidence interval")
    mean = float(x.mean())
    s = float(x.std(ddof=1))
    half = float(scipy.stats.t.ppf(0.975, n - 1) * s / np.sqrt(n))
    return mean, half


@dataclass(frozen=True)
class HistComparison:
    tv_distance: float
    tail_ratio_q90: float       # P_emp(Z > q90_ref) / P_ref(Z > q90_ref)
    tail_ratio_q99: float
    q90: int
    q99: int


def hist_compare(empirical: np.ndarray, reference: np.ndarray) -> HistComparison:
    """Total-variation distance plus tail exceedance ratios at the reference
    90% and 99% quantiles.  Both pmfs must share one support/binning."""
    emp = np.asarray(empirical, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if emp.shape != ref.shape:
        raise ValueError(f"binning mismatch: {emp.shape} vs {ref.shape}")
    tv = 0.5 * float(np.abs(emp - ref).sum())
    ref_cdf = np.cumsum(ref)
    out = []
    for q in (0.90, 0.99):
        idx = int(np.searchsorted(ref_cdf, q, side="left"))
        idx = min(idx, len(ref) - 1)
        p_ref = float(ref[idx + 1:].sum())
        p_emp = float(emp[idx + 1:].sum())
        ratio = p_emp / p_ref if p_ref > 0 else np.inf if p_emp > 0 else 1.0
        out.append((idx, ratio))
    return HistComparison(tv_distance=tv,
                          tail_ratio_q90=out[0][1], tail_ratio_q99=out[1][1],
                          q90=out[0][0], q99=out[1][0])
