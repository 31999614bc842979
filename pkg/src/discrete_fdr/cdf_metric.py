"""A metric on discrete CDFs and its cheap surrogate on conditioning statistics.

The metric adds two components: the number of support points the two CDFs do
not share (counting measure of the symmetric difference) and the sup-norm gap
between the CDFs.  For null distributions of binomial-test or Fisher's-exact-
test p-values the expensive CDF metric can be replaced by the max-absolute
difference between the conditioning statistics (total counts or margins),
which is what ``marginal_distance`` computes.
"""

from __future__ import annotations

from dataclasses import dataclass
from numbers import Real

import numpy as np

from .errors import InvalidComparisonError
from .exact_tests import DiscreteCDF, MarginalVector

# Two support points count as the same attainable p-value when they agree to
# this relative tolerance.  The construction treats coincidence as exact; the
# tolerance only absorbs floating-point noise in log-space p-values.
SUPPORT_MATCH_RTOL = 1e-8


@dataclass(frozen=True)
class MetricValue:
    """The two components of the CDF metric and their sum."""

    jump_count_diff: int
    sup_norm: float

    @property
    def total(self) -> float:
        return self.jump_count_diff + self.sup_norm


def support_symmetric_difference_count(
    f: DiscreteCDF, g: DiscreteCDF, rtol: float = SUPPORT_MATCH_RTOL
) -> int:
    """Number of support points of ``f`` and ``g`` that are not shared.

    Point equality is judged at relative tolerance ``rtol``; matching walks
    both sorted supports once, so each point pairs with at most one point of
    the other support.
    """
    a = f.support
    b = g.support
    i = j = matches = 0
    while i < a.size and j < b.size:
        x, y = a[i], b[j]
        if abs(x - y) <= rtol * max(x, y):
            matches += 1
            i += 1
            j += 1
        elif x < y:
            i += 1
        else:
            j += 1
    return int(a.size + b.size - 2 * matches)


def sup_norm_diff(f: DiscreteCDF, g: DiscreteCDF) -> float:
    """Supremum-norm distance between two step CDFs.

    Evaluated right-continuously on the union of the jump points, which is
    exact for step functions (no grid approximation).
    """
    points = np.union1d(f.support, g.support)
    return float(np.max(np.abs(f.cdf(points) - g.cdf(points))))


def delta(
    f: DiscreteCDF, g: DiscreteCDF, rtol: float = SUPPORT_MATCH_RTOL
) -> MetricValue:
    """The CDF metric: jump-count symmetric difference plus sup-norm gap."""
    return MetricValue(
        jump_count_diff=support_symmetric_difference_count(f, g, rtol=rtol),
        sup_norm=sup_norm_diff(f, g),
    )


def marginal_distance(s, t) -> float:
    """Max-absolute difference between two conditioning statistics.

    Both arguments must be of the same kind: scalar total counts (binomial
    test) or ``MarginalVector`` margins (Fisher's exact test).
    """
    if isinstance(s, MarginalVector) and isinstance(t, MarginalVector):
        a = np.asarray(s.as_tuple(), dtype=float)
        b = np.asarray(t.as_tuple(), dtype=float)
        return float(np.max(np.abs(a - b)))
    if isinstance(s, Real) and isinstance(t, Real):
        return float(abs(s - t))
    raise InvalidComparisonError(
        f"cannot compare conditioning statistics of kinds "
        f"{type(s).__name__} and {type(t).__name__}"
    )
