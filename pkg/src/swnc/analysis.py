"""Delay bounds, empirical distributions and service-class tagging.

Delay upper bound
-----------------
``delay_upper_bound`` composes three pieces:

* the pessimistic erasure rate ``eps_max = eps_mean + alpha * sqrt(nu) / RTT``;
* the retransmission test ``1 - d - eps_max > th``; its slack
  ``1 - d - eps_max - th`` is the DoF rate left for repair, so one missing
  DoF costs ``1 / slack`` repair slots once detected one RTT later;
* the GE burst factor ``(1/(1-s))(1/s - s) - 1``, the number of
  retransmission rounds a burst can force.

    D_up = t_d + burst_factor(s) * eps_max * (RTT + 1 / slack)

With ``eps_mean = 0`` and ``nu = 0`` it reduces to the one-slot transmission
floor. It is reported as ``inf`` when the slack is not positive.
"""
import math
from dataclasses import dataclass

import numpy as np

from .schemes import eps_max_alpha

EULER_GAMMA = 0.5772156649015329
SCALING_S_MAX = 1.0 - 1e-9
LOW_LATENCY_MS = 10.0


def eps_max(inp):
    return eps_max_alpha(inp.eps_mean, inp.nu, inp.rtt_slots, inp.alpha)


def ge_variance(pi_b, eps_b, rtt_slots):
    """Variance of the erasure count over one RTT for a stationary GE channel."""
    m = pi_b * eps_b
    return (m - m * m) * rtt_slots


def ge_scaling(s):
    """Burst retransmission factor ``(1/(1-s))(1/s - s) - 1``."""
    if not 0.0 < s <= SCALING_S_MAX:
        raise ValueError(f"burst end probability s={s} must lie in (0, 1)")
    return (1.0 / (1.0 - s)) * (1.0 / s - s) - 1.0


@dataclass(frozen=True)
class DelayBoundInput:
    eps_mean: float
    nu: float
    rtt_slots: float
    alpha: float
    s: float
    th: float = 0.0
    d: float = 0.0
    t_d: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.eps_mean <= 1.0:
            raise ValueError("eps_mean must be in [0, 1]")
        if self.nu < 0 or self.alpha < 0:
            raise ValueError("nu and alpha must be non-negative")
        if self.rtt_slots <= 0:
            raise ValueError("rtt_slots must be positive")
        if not 0.0 < self.s < 1.0:
            raise ValueError("s must lie in (0, 1)")

    @classmethod
    def for_ge(cls, eps_mean, s, rtt_slots, alpha, eps_b=1.0, **kw):
        """Input whose variance is the GE closed form at mean erasure ``eps_mean``."""
        pi_b = eps_mean / eps_b
        return cls(eps_mean, ge_variance(pi_b, eps_b, rtt_slots), rtt_slots, alpha, s, **kw)


def delay_upper_bound(inp):
    em = eps_max(inp)
    slack = 1.0 - inp.d - em - inp.th
    if slack <= 0.0:
        return math.inf
    return inp.t_d + ge_scaling(inp.s) * em * (inp.rtt_slots + 1.0 / slack)


def bound_curves(alphas, eps_grid, s, rtt_slots, th=0.0):
    """``{alpha: array of bounds over eps_grid}`` with GE variance."""
    return {a: np.array([delay_upper_bound(DelayBoundInput.for_ge(e, s, rtt_slots, a, th=th))
                         for e in eps_grid])
            for a in alphas}


# ------------------------------------------------------------ distributions

def percentile(values, p):
    """Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample."""
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise ValueError("percentile of an empty sample")
    return float(np.percentile(x, p, method="inverted_cdf"))


def summarize(values):
    x = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(x.mean()),
        "stdev": float(x.std(ddof=1)) if x.size > 1 else 0.0,
        "p99": percentile(x, 99),
    }


class EmpiricalDistribution:
    def __init__(self, samples):
        x = np.sort(np.asarray(samples, dtype=np.float64))
        if x.size == 0:
            raise ValueError("empirical distribution needs at least one sample")
        self.samples = x

    def __len__(self):
        return int(self.samples.size)

    def cdf(self, x):
        return np.searchsorted(self.samples, x, side="right") / self.samples.size

    def quantile(self, p):
        return percentile(self.samples, 100.0 * p)

    def table(self):
        """Distinct sample values with their CDF."""
        xs = np.unique(self.samples)
        return xs, self.cdf(xs)


def coverage(dist, bound):
    """Fraction of samples at or below ``bound``."""
    if not isinstance(dist, EmpiricalDistribution):
        dist = EmpiricalDistribution(dist)
    return float(dist.cdf(bound))


@dataclass(frozen=True)
class GumbelFit:
    loc: float
    scale: float

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        if self.scale == 0.0:
            return (x >= self.loc).astype(np.float64)
        return np.exp(-np.exp(-(x - self.loc) / self.scale))


def gumbel_overlay(dist):
    """Type-1 extreme value CDF matched to the sample mean and standard deviation."""
    x = dist.samples if isinstance(dist, EmpiricalDistribution) else np.asarray(dist, float)
    if x.size < 2:
        raise ValueError("Gumbel overlay needs at least two samples")
    sigma = float(x.std(ddof=1))
    scale = sigma * math.sqrt(6.0) / math.pi
    return GumbelFit(float(x.mean()) - scale * EULER_GAMMA, scale)


# ------------------------------------------------------------ classification

def latency_threshold_slots(slot_us=450):
    return int(LOW_LATENCY_MS * 1000 // slot_us)


def classify_llc_urllc(summary, slot_us=450):
    """Tags for one (mode, algorithm) row.

    ``summary`` maps ``"mean_delay"`` and ``"max_delay"`` to dicts with
    ``mean`` and ``p99``. LLC: mean of the mean in-order delay within the
    threshold. URLLC: P99 of the max in-order delay within the threshold.
    """
    limit = latency_threshold_slots(slot_us)
    tags = []
    if summary["mean_delay"]["mean"] <= limit:
        tags.append("LLC")
    if summary["max_delay"]["p99"] <= limit:
        tags.append("URLLC")
    return tags
