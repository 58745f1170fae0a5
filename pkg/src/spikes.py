import logging
import math
from dataclasses import dataclass
from typing import Optional

from errors import (EdgeSpikeError, EmptyIntervalError, InvalidInputError,
                    NotApplicableError)
from exponents import ExponentSequence, is_rip
from muntz_poly import DiscreteFunctional, MuntzPolynomial, PointT, bisect_predicate

logger = logging.getLogger(__name__)

QUARTER = 0.25
QUARTER_SLACK = 1e-12


@dataclass(frozen=True)
class SpikeFunction:
    """p(x) = x^alpha - x^beta with 0 <= alpha < beta."""
    alpha: float
    beta: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and math.isfinite(self.beta)):
            raise InvalidInputError(f"Spike exponents must be finite: ({self.alpha}, {self.beta}).")
        if not 0 <= self.alpha < self.beta:
            raise InvalidInputError(f"Spike needs 0 <= alpha < beta, got ({self.alpha}, {self.beta}).")

    @property
    def gap(self) -> float:
        return self.beta - self.alpha

    def polynomial(self) -> MuntzPolynomial:
        return MuntzPolynomial([(self.alpha, 1.0), (self.beta, -1.0)])

    def value_t(self, t: float) -> float:
        if math.isinf(t):
            return 1.0 if self.alpha == 0 else 0.0
        return -math.exp(-self.alpha * t) * math.expm1(-self.gap * t)


@dataclass(frozen=True)
class SpikeProfile:
    alpha: float
    beta: float
    argmax: PointT
    norm: float
    y_lower_bound: float
    y_bound_valid: bool
    quarter_bound_applies: bool
    edge: bool = False

    def to_dict(self) -> dict:
        return {
            'alpha': self.alpha,
            'beta': self.beta,
            'argmax': self.argmax.to_dict(),
            'norm': self.norm,
            'y_lower_bound': self.y_lower_bound,
            'y_bound_valid': self.y_bound_valid,
            'quarter_bound_applies': self.quarter_bound_applies,
        }


def _y_lower_bound(s: SpikeFunction) -> float:
    # y = gap^(-1/gap)
    return math.exp(-math.log(s.gap) / s.gap)


def profile(s: SpikeFunction) -> SpikeProfile:
    """
    Closed-form maximizer t = ln(beta/alpha)/(beta - alpha), the norm at it
    and the lower bound y = (beta - alpha)^(-1/(beta - alpha)), which is only
    claimed for alpha > 3 on pairs with beta >= 2*alpha.
    """
    if s.alpha == 0:
        edge = SpikeProfile(
            alpha=s.alpha, beta=s.beta, argmax=PointT(math.inf), norm=1.0,
            y_lower_bound=_y_lower_bound(s), y_bound_valid=False,
            quarter_bound_applies=True, edge=True,
        )
        raise EdgeSpikeError("alpha = 0 gives a monotone edge profile (norm 1 at x = 0), not a spike.", edge)
    t_bar = math.log1p(s.gap / s.alpha) / s.gap
    return SpikeProfile(
        alpha=s.alpha,
        beta=s.beta,
        argmax=PointT(t_bar),
        norm=s.value_t(t_bar),
        y_lower_bound=_y_lower_bound(s),
        y_bound_valid=s.alpha > 3 and s.beta >= 2 * s.alpha,
        quarter_bound_applies=s.beta >= 2 * s.alpha,
    )


def normalized(s: SpikeFunction, prof: Optional[SpikeProfile] = None) -> MuntzPolynomial:
    prof = prof or profile(s)
    return s.polynomial() * (1.0 / prof.norm)


@dataclass(frozen=True)
class Interval:
    """Open interval (a, b) of [0,1]; a.x < b.x, i.e. a.t > b.t."""
    a: PointT
    b: PointT

    def contains_t(self, t: float) -> bool:
        return self.b.t < t < self.a.t

    def to_dict(self) -> dict:
        return {'a': self.a.to_dict(), 'b': self.b.to_dict()}

    @classmethod
    def from_dict(cls, data: dict) -> "Interval":
        return cls(a=PointT.from_dict(data['a']), b=PointT.from_dict(data['b']))


def superlevel_interval(s: SpikeFunction, level: float) -> Interval:
    """
    (a, b) with p(x) > level <=> x in (a, b). The spike is strictly monotone on
    each side of its maximizer, so each endpoint is a monotone bisection; the
    endpoints are returned on their p <= level side.
    """
    prof = profile(s)
    if level <= 0:
        raise InvalidInputError(f"Level must be positive, got {level}.")
    if level >= prof.norm:
        raise EmptyIntervalError(f"Level {level} is not below the spike norm {prof.norm}.")

    def above(t):
        return s.value_t(t) > level

    t_bar = prof.argmax.t
    _, t_b = bisect_predicate(above, t_bar, 0.0, rtol=1e-15)
    t_far = 2 * t_bar
    while above(t_far):
        t_far *= 2
    _, t_a = bisect_predicate(above, t_bar, t_far, rtol=1e-15)
    return Interval(a=PointT(t_a), b=PointT(t_b))


@dataclass(frozen=True)
class QuarterCheck:
    holds: bool
    witness: PointT
    value: float


def quarter_lower_bound_check(s: SpikeFunction) -> QuarterCheck:
    """
    For beta >= 2*alpha: x^alpha - x^(2 alpha) <= p and the former peaks at the
    point where x^alpha = 1/2 with value 1/4, so p there is at least 1/4.
    """
    if not (s.alpha > 0 and s.beta >= 2 * s.alpha):
        raise NotApplicableError(f"Quarter bound needs beta >= 2*alpha > 0, got ({s.alpha}, {s.beta}).")
    witness = PointT(math.log(2) / s.alpha)
    value = s.value_t(witness.t)
    return QuarterCheck(holds=value >= QUARTER - QUARTER_SLACK, witness=witness, value=value)


def consecutive_spike(seq: ExponentSequence, k: int) -> SpikeFunction:
    return SpikeFunction(seq[k], seq[k + 1])


def weak_null_trace(seq: ExponentSequence, functional: DiscreteFunctional, k_max: int) -> list[float]:
    """|mu(p_k/||p_k||)| for k = 1..k_max along consecutive RIP pairs."""
    if not is_rip(seq):
        raise InvalidInputError("Weak-null trace needs an RIP sequence.")
    last = min(k_max, len(seq) - 2)
    if last < k_max:
        logger.warning(f"Sequence prefix supports k <= {last}, trace truncated from k_max={k_max}.")
    trace = []
    for k in range(1, last + 1):
        s = consecutive_spike(seq, k)
        trace.append(abs(functional.apply(normalized(s))))
    return trace


def first_index_below(trace: list[float], threshold: float) -> Optional[int]:
    """Smallest k (1-based) with trace[j] < threshold for every stored j >= k."""
    k = None
    for i in range(len(trace) - 1, -1, -1):
        if trace[i] < threshold:
            k = i + 1
        else:
            break
    return k


@dataclass(frozen=True)
class YReport:
    values: tuple
    strictly_monotone: bool
    increasing: bool
    last: float

    def to_dict(self) -> dict:
        return {
            'values': list(self.values),
            'strictly_monotone': self.strictly_monotone,
            'increasing': self.increasing,
            'last': self.last,
            'distance_to_one': 1 - self.last,
        }


def y_sequence_report(seq: ExponentSequence, k_max: int) -> YReport:
    """
    The lower bounds y_k along consecutive pairs, with whether they are
    strictly monotone on the stored prefix. z -> z^(-1/z) only increases for
    z > e, so the answer depends on the gaps of the family.
    """
    last = min(k_max, len(seq) - 2)
    if last < 1:
        raise InvalidInputError("Need at least three exponents for a y-sequence.")
    values = tuple(_y_lower_bound(consecutive_spike(seq, k)) for k in range(1, last + 1))
    diffs = [b - a for a, b in zip(values[:-1], values[1:])]
    increasing = all(d > 0 for d in diffs)
    decreasing = all(d < 0 for d in diffs)
    return YReport(values=values, strictly_monotone=increasing or decreasing, increasing=increasing, last=values[-1])
