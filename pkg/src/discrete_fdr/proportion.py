"""Estimating the proportion of true null hypotheses on discrete supports.

The estimator scans a grid of "guiding values".  For each guiding value tau
and each hypothesis it finds the largest attainable p-value lambda <= tau in
the hypothesis's null support and contributes 1{p > lambda} / (1 - lambda);
hypotheses whose support has no point below tau contribute 1.  The estimate
is the minimum of these trial averages over the grid.  Per-group estimates
combine into an overall estimate by a group-size weighted average.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyStudyError, InvalidConfigError
from .grouping import Partition


@dataclass(frozen=True)
class Pi0Config:
    """Guiding-value grid: 0, step, 2*step, ..., lambda_max (inclusive)."""

    lambda_max: float
    step: float

    def __post_init__(self):
        if not 0.0 < self.lambda_max < 1.0:
            raise InvalidConfigError(
                f"lambda_max must be in (0, 1), got {self.lambda_max}"
            )
        if not 0.0 < self.step < self.lambda_max:
            raise InvalidConfigError(
                f"step must be in (0, lambda_max), got {self.step}"
            )

    def guiding_values(self) -> np.ndarray:
        # Multiples of step from 0; the final step is shortened when
        # lambda_max is not an exact multiple, keeping both endpoints.
        n_full = int(np.floor(self.lambda_max / self.step + 1e-9))
        taus = self.step * np.arange(n_full + 1)
        if taus[-1] > self.lambda_max or self.lambda_max - taus[-1] <= 1e-12:
            taus[-1] = self.lambda_max
        else:
            taus = np.append(taus, self.lambda_max)
        return taus


# Grid settings used for each test family in the reference simulations.
BINOMIAL_PI0_CONFIG = Pi0Config(lambda_max=0.2, step=0.0005)
FET_PI0_CONFIG = Pi0Config(lambda_max=0.5, step=0.008)


@dataclass(frozen=True)
class Pi0Estimate:
    """A proportion estimate with its trial-value trace.

    ``value`` is clamped to [0, 1]; ``raw_value`` is the unclamped minimum of
    the trial estimates and ``clamped`` records whether clamping changed it.
    """

    value: float
    raw_value: float
    clamped: bool
    trial_values: tuple[tuple[float, float], ...]


def _trial_grid(pvalues, supports, taus: np.ndarray) -> np.ndarray:
    """Trial estimates at every guiding value; one pass per hypothesis."""
    pvalues = np.asarray(pvalues, dtype=float)
    m = pvalues.size
    if m == 0:
        raise EmptyStudyError("no hypotheses")
    if len(supports) != m:
        raise InvalidConfigError("pvalues and supports must have equal length")
    total = np.zeros(taus.size)
    one = np.ones(taus.size)
    for p_i, support in zip(pvalues, supports):
        s = np.asarray(support, dtype=float)
        idx = np.searchsorted(s, taus, side="right") - 1
        contrib = one.copy()
        has_point = idx >= 0
        if np.any(has_point):
            lam = s[idx[has_point]]
            if np.any(lam >= 1.0):
                raise InvalidConfigError(
                    "a guiding value reached a support point of 1"
                )
            contrib[has_point] = (p_i > lam) / (1.0 - lam)
        total += contrib
    return total / m


def trial_estimate(pvalues, supports, tau: float) -> float:
    """Trial estimate of the null proportion at a single guiding value.

    For each hypothesis i, let lambda be the largest point of its support
    that is <= ``tau``.  The trial estimate averages 1{p_i > lambda} /
    (1 - lambda) over hypotheses, counting hypotheses with no such support
    point as 1.
    """
    if not 0.0 <= tau < 1.0:
        raise InvalidConfigError(f"tau must be in [0, 1), got {tau}")
    return float(_trial_grid(pvalues, supports, np.array([float(tau)]))[0])


def estimate_pi0(pvalues, supports, cfg: Pi0Config) -> Pi0Estimate:
    """Null-proportion estimate: minimum trial estimate over the grid.

    The raw minimum can exceed 1 on sparse data; the returned ``value`` is
    clamped to [0, 1] with the raw value kept in the estimate.
    """
    taus = cfg.guiding_values()
    betas = _trial_grid(pvalues, supports, taus)
    raw = float(betas.min())
    value = min(raw, 1.0)
    return Pi0Estimate(
        value=value,
        raw_value=raw,
        clamped=raw > 1.0,
        trial_values=tuple(zip(taus.tolist(), betas.tolist())),
    )


def groupwise_pi0(
    pvalues, supports, partition: Partition, cfg: Pi0Config
) -> list[Pi0Estimate]:
    """Apply ``estimate_pi0`` to each group of the partition."""
    pvalues = np.asarray(pvalues, dtype=float)
    supports = list(supports)
    if partition.m != pvalues.size:
        raise InvalidConfigError("partition does not cover the study")
    return [
        estimate_pi0(pvalues[g], [supports[i] for i in g], cfg)
        for g in partition.groups
    ]


def overall_pi0(partition: Partition, groupwise: list[Pi0Estimate]) -> float:
    """Size-weighted average of the clamped per-group estimates."""
    if len(groupwise) != len(partition.groups):
        raise InvalidConfigError(
            "one estimate per group required: "
            f"{len(groupwise)} estimates for {len(partition.groups)} groups"
        )
    sizes = np.array(partition.sizes, dtype=float)
    values = np.array([e.value for e in groupwise])
    return float(np.dot(sizes, values) / sizes.sum())
