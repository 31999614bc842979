"""Partition hypotheses by the similarity of their null p-value distributions.

Two strategies are provided.  The metric grouping extracts greedy metric
balls of adaptive radius from the pairwise distance matrix until the target
number of groups with the requested minimal size is reached.  The quantile
grouping bins scalar conditioning statistics (total counts) at equally
spaced percentiles, which is the cheap equivalent for binomial-test and
Fisher's-exact-test studies.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cdf_metric import SUPPORT_MATCH_RTOL, delta
from .errors import GroupingDidNotConvergeError, InvalidConfigError
from .exact_tests import DiscreteCDF


@dataclass(frozen=True)
class GroupingConfig:
    """Target number of groups, minimal size of the last group, restart cap."""

    l_star: int
    g_star: int = 1
    max_restarts: int = 64

    def __post_init__(self):
        if self.l_star < 1:
            raise InvalidConfigError(f"l_star must be >= 1, got {self.l_star}")
        if self.g_star < 1:
            raise InvalidConfigError(f"g_star must be >= 1, got {self.g_star}")
        if self.max_restarts < 0:
            raise InvalidConfigError("max_restarts must be nonnegative")


@dataclass(frozen=True)
class Partition:
    """Disjoint index groups covering 0..m-1, in extraction order."""

    groups: tuple[np.ndarray, ...]
    radius_final: float = 0.0
    iterations: int = 0

    def __post_init__(self):
        groups = tuple(
            np.sort(np.asarray(g, dtype=np.intp)) for g in self.groups
        )
        if not groups or any(g.size == 0 for g in groups):
            raise ValueError("every group must be nonempty")
        merged = np.concatenate(groups)
        m = merged.size
        if not np.array_equal(np.sort(merged), np.arange(m)):
            raise ValueError("groups must form a disjoint cover of 0..m-1")
        for g in groups:
            g.setflags(write=False)
        object.__setattr__(self, "groups", groups)

    @property
    def m(self) -> int:
        return int(sum(g.size for g in self.groups))

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(int(g.size) for g in self.groups)

    def group_of(self) -> np.ndarray:
        """Group id of every hypothesis index."""
        out = np.empty(self.m, dtype=np.intp)
        for j, g in enumerate(self.groups):
            out[g] = j
        return out


def pairwise_delta_matrix(
    cdfs, rtol: float = SUPPORT_MATCH_RTOL
) -> np.ndarray:
    """Symmetric matrix of CDF-metric totals for a sequence of CDFs."""
    cdfs = list(cdfs)
    m = len(cdfs)
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            d = delta(cdfs[i], cdfs[j], rtol=rtol).total
            out[i, j] = out[j, i] = d
    return out


def _largest_ball(dmat: np.ndarray, remaining: np.ndarray, sigma: float):
    """Biggest ball of radius sigma centred on a remaining point.

    Ties in ball size are broken by the lowest center index so repeated runs
    extract identical balls.
    """
    sub = dmat[np.ix_(remaining, remaining)] <= sigma
    counts = sub.sum(axis=1)
    center = int(np.argmax(counts))  # first max = lowest index
    return remaining[sub[center]]


def _attempt(dmat: np.ndarray, sigma: float, l_star: int, g_star: int):
    """One pass of greedy ball extraction at a fixed radius.

    Returns ("done", groups) on success, or ("halve" | "grow", None) when the
    radius must be adapted and the pass restarted from scratch.
    """
    m = dmat.shape[0]
    remaining = np.arange(m)
    groups: list[np.ndarray] = []
    for stage in range(1, l_star + 1):
        ball = _largest_ball(dmat, remaining, sigma)
        groups.append(ball)
        remaining = np.setdiff1d(remaining, ball, assume_unique=True)
        left = remaining.size
        if stage <= l_star - 1:
            if stage == l_star - 1 and left == g_star:
                # the leftover is exactly the minimal last group: take it
                groups.append(remaining)
                return "done", groups
            if left <= g_star:
                # too few left to form the remaining groups: shrink the balls
                return "halve", None
            # enough left; extract the next ball
        else:
            if left <= g_star:
                # fold the small leftover into the final ball
                if left:
                    groups[-1] = np.concatenate([groups[-1], remaining])
                return "done", groups
            # leftover too large after the last ball: grow the balls
            return "grow", None
    raise AssertionError("unreachable")


def group_from_distances(dmat: np.ndarray, cfg: GroupingConfig) -> Partition:
    """Greedy metric-ball grouping from a precomputed distance matrix.

    The initial radius is max distance / (2 * l_star).  The radius is halved
    whenever the remainder becomes too small before the last stage and grown
    by 1.5 when the final remainder is too large; each adaptation restarts
    the extraction.  If all pairwise distances vanish a single group is
    formed immediately.
    """
    dmat = np.asarray(dmat, dtype=float)
    m = dmat.shape[0]
    if dmat.shape != (m, m):
        raise InvalidConfigError("distance matrix must be square")
    if cfg.l_star * cfg.g_star > m:
        raise InvalidConfigError(
            f"l_star * g_star = {cfg.l_star * cfg.g_star} exceeds m = {m}"
        )
    delta_star = float(dmat.max(initial=0.0))
    if cfg.l_star == 1 or delta_star == 0.0:
        return Partition((np.arange(m),), radius_final=0.0, iterations=0)

    sigma = delta_star / (2.0 * cfg.l_star)
    restarts = 0
    trace: list[tuple[float, str]] = []
    while True:
        outcome, groups = _attempt(dmat, sigma, cfg.l_star, cfg.g_star)
        if outcome == "done":
            return Partition(tuple(groups), radius_final=sigma, iterations=restarts)
        trace.append((sigma, outcome))
        restarts += 1
        if restarts > cfg.max_restarts:
            raise GroupingDidNotConvergeError(
                f"no partition into {cfg.l_star} groups of size >= {cfg.g_star} "
                f"after {cfg.max_restarts} radius restarts",
                trace=trace,
            )
        sigma = sigma / 2.0 if outcome == "halve" else sigma * 1.5


def group_by_metric(cdfs, cfg: GroupingConfig) -> Partition:
    """Metric-ball grouping of p-value CDFs (greedy, adaptive radius)."""
    cdfs = list(cdfs)
    if not all(isinstance(c, DiscreteCDF) for c in cdfs):
        raise InvalidConfigError("group_by_metric expects DiscreteCDF inputs")
    return group_from_distances(pairwise_delta_matrix(cdfs), cfg)


def group_by_statistic_quantiles(stats, l_star: int) -> Partition:
    """Bin scalar conditioning statistics at equally spaced percentiles.

    Group j collects statistics in [q_{j-1}, q_j) with the last interval
    closed on the right; empty bins (coinciding quantiles) are dropped, which
    merges them into their nearest nonempty neighbour.
    """
    stats = np.asarray(stats, dtype=float)
    if stats.ndim != 1 or stats.size == 0:
        raise InvalidConfigError("stats must be a nonempty 1-d sequence")
    if l_star < 1:
        raise InvalidConfigError(f"l_star must be >= 1, got {l_star}")
    qs = np.percentile(stats, 100.0 * np.arange(l_star + 1) / l_star)
    groups = []
    for j in range(1, l_star + 1):
        if j < l_star:
            mask = (stats >= qs[j - 1]) & (stats < qs[j])
        else:
            mask = (stats >= qs[j - 1]) & (stats <= qs[j])
        idx = np.flatnonzero(mask)
        if idx.size:
            groups.append(idx)
    return Partition(tuple(groups), radius_final=0.0, iterations=0)
