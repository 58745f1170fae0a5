"""
Greedy construction of an asymptotically isometric copy of c0 inside M(Lambda).

For an RIP sequence with spikes p_k = x^{lambda_k} - x^{lambda_{k+1}} the
builder picks indices k_1 < k_2 < ... and sets

    f_n = (1 - 2^-n) p_{k_n} / ||p_{k_n}||,   I_n = {f_n > 2^-2n}

so that
    (i)   f_n >= 0
    (ii)  ||f_n|| = 1 - 2^-n
    (iii) b_n < a_{n+1}
    (iv)  f_n(x) > 2^-2n  <=>  x in I_n
    (v)   f_n(x) < 2^-2m  for x in I_m, m > n

and 1/4 sup|t_n| <= ||sum t_n f_n|| <= sup|t_n|.
"""
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

import config
from errors import (CertificateFormatError, ConstructionFailure, InsufficientSequenceError,
                    InvalidInputError)
from exponents import ExponentSequence, is_rip
from muntz_poly import MuntzPolynomial, PointT, geometric_t_grid, sup_norm, t_bounds
from spikes import Interval, consecutive_spike, profile, superlevel_interval

logger = logging.getLogger(__name__)

LOWER_CONSTANT = 0.25
UPPER_CONSTANT = 1.0
OFF_INTERVAL_BOUND = 1.0 / 3.0
NORM_TOL = 1e-9


def scale_for(n: int) -> float:
    return 1.0 - 2.0 ** -n


def threshold_for(n: int) -> float:
    return 4.0 ** -n


@dataclass(frozen=True)
class C0Pick:
    n: int
    k: int
    scale: float
    level: float
    interval: Interval
    witness: PointT          # maximizer of p_{k_n}, where f_n = 1 - 2^-n
    spike_norm: float
    function: MuntzPolynomial

    def to_dict(self) -> dict:
        return {
            'n': self.n,
            'k': self.k,
            'scale': self.scale,
            'level': self.level,
            'interval': self.interval.to_dict(),
            'witness': self.witness.to_dict(),
            'spike_norm': self.spike_norm,
            'function': self.function.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "C0Pick":
        return cls(
            n=int(data['n']),
            k=int(data['k']),
            scale=float(data['scale']),
            level=float(data['level']),
            interval=Interval.from_dict(data['interval']),
            witness=PointT.from_dict(data['witness']),
            spike_norm=float(data['spike_norm']),
            function=MuntzPolynomial.from_list(data['function']),
        )


@dataclass(frozen=True)
class C0Certificate:
    exponents: ExponentSequence
    picks: tuple
    tol: float
    evidence: dict = field(default_factory=dict)

    @property
    def functions(self) -> list[MuntzPolynomial]:
        return [pick.function for pick in self.picks]

    def to_dict(self) -> dict:
        return {
            'schema': config.C0_SCHEMA,
            'exponents': self.exponents.to_dict(),
            'picks': [pick.to_dict() for pick in self.picks],
            'tol': self.tol,
            'constants': {'m': LOWER_CONSTANT, 'M': UPPER_CONSTANT},
            'settings': config.get_numeric_settings(),
            'evidence': self.evidence,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "C0Certificate":
        if data.get('schema') != config.C0_SCHEMA:
            raise CertificateFormatError(f"Expected schema {config.C0_SCHEMA}, got {data.get('schema')}.")
        try:
            return cls(
                exponents=ExponentSequence.from_dict(data['exponents']),
                picks=tuple(C0Pick.from_dict(p) for p in data['picks']),
                tol=float(data['tol']),
                evidence=data.get('evidence', {}),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CertificateFormatError(f"Malformed c0 certificate: {e}")


def _make_pick(seq: ExponentSequence, n: int, k: int) -> C0Pick:
    spike = consecutive_spike(seq, k)
    prof = profile(spike)
    scale = scale_for(n)
    level = threshold_for(n) / scale
    interval = superlevel_interval(spike, level * prof.norm)
    return C0Pick(
        n=n, k=k, scale=scale, level=level, interval=interval, witness=prof.argmax,
        spike_norm=prof.norm, function=spike.polynomial() * (scale / prof.norm),
    )


def _reject_reason(pick: C0Pick, previous: list[C0Pick]) -> Optional[str]:
    b_prev = previous[-1].interval.b.t
    a_t = pick.interval.a.t
    if not b_prev - a_t > config.MIN_T_SEPARATION * b_prev:
        return f"a_n (t={a_t:.6e}) not right of b_(n-1) (t={b_prev:.6e})"
    threshold = threshold_for(pick.n)
    for earlier in previous:
        value = earlier.function.eval(pick.interval.a)
        if not value < threshold:
            return f"f_{earlier.n}(a_n) = {value:.6e} >= {threshold:.6e}"
    return None


def build(seq: ExponentSequence, count: int, tol: float = config.DEFAULT_TOL) -> C0Certificate:
    """Greedy choice of the smallest admissible k_n for n = 1..count."""
    if count < 1:
        raise InvalidInputError(f"Count must be at least 1, got {count}.")
    if not tol > 0:
        raise InvalidInputError(f"Tolerance must be positive, got {tol}.")
    if len(seq) < 3:
        raise InsufficientSequenceError("Need at least three exponents for the first spike.", achieved=0)
    if not is_rip(seq):
        raise InvalidInputError("Construction needs an RIP sequence; extract an RIP subsequence first.")
    if seq[0] <= 0:
        raise InvalidInputError("Construction needs strictly positive exponents.")

    picks = [_make_pick(seq, 1, 1)]
    logger.info(f"n=1: k=1, I_1=({picks[0].interval.a.x:.9f}, {picks[0].interval.b.x:.9f})")
    for n in range(2, count + 1):
        k = picks[-1].k + 1
        while True:
            if k + 1 >= len(seq):
                raise InsufficientSequenceError(
                    f"Exponent prefix exhausted while choosing k_{n} (reached n={n}).", achieved=n - 1
                )
            pick = _make_pick(seq, n, k)
            reason = _reject_reason(pick, picks)
            if reason is None:
                break
            logger.debug(f"n={n}: k={k} rejected: {reason}")
            k += 1
        picks.append(pick)
        logger.info(f"n={n}: k={k} (lambda={seq[k]:g}), I_{n} t-range [{pick.interval.b.t:.6e}, {pick.interval.a.t:.6e}]")

    cert = C0Certificate(exponents=seq, picks=tuple(picks), tol=tol)
    report = verify_conditions(cert, config.BUILD_CHECK_GRID)
    if not report.passed:
        condition, where = next((c, report.offending.get(c)) for c in report.failed)
        raise ConstructionFailure(
            f"Condition ({condition}) fails on the final grid check at {where}.",
            condition=condition,
            n=(where or {}).get('n'),
            point=(where or {}).get('t'),
        )
    return replace(cert, evidence={'build_check': report.to_dict()})


# --- verification ---

def _samples(cert: C0Certificate, grid_points: int) -> np.ndarray:
    """Geometric t-grids over every interval and every gap, plus t = 0."""
    total = MuntzPolynomial([term for f in cert.functions for term in f.terms])
    t_lo, t_hi = t_bounds(total, cert.tol)
    edges = [t_hi]
    for pick in cert.picks:
        edges += [pick.interval.a.t, pick.interval.b.t]
    edges.append(min(t_lo, cert.picks[-1].interval.b.t / 2))
    pieces = [np.array([0.0])]
    for hi, lo in zip(edges[:-1], edges[1:]):
        lo, hi = sorted((lo, hi))
        if 0 < lo < hi:
            pieces.append(geometric_t_grid(lo, hi, grid_points))
        else:
            pieces.append(np.array([lo, hi]))
    return np.unique(np.concatenate(pieces))


def _membership(cert: C0Certificate, t: np.ndarray) -> list[np.ndarray]:
    return [(t > pick.interval.b.t) & (t < pick.interval.a.t) for pick in cert.picks]


@dataclass
class ConditionReport:
    margins: dict
    offending: dict
    grid_points: int
    samples: int
    tol: float

    @property
    def failed(self) -> list[str]:
        return [c for c, m in self.margins.items() if not self._ok(c, m)]

    def _ok(self, condition: str, margin: float) -> bool:
        if condition == 'iii':
            return margin > 0
        return margin >= -self.tol

    @property
    def passed(self) -> bool:
        return not self.failed

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'margins': self.margins,
            'offending': self.offending,
            'grid_points': self.grid_points,
            'samples': self.samples,
        }


def _record(margins: dict, offending: dict, condition: str, margin: float, where: dict):
    if condition not in margins or margin < margins[condition]:
        margins[condition] = float(margin)
        offending[condition] = where


def verify_conditions(cert: C0Certificate, grid_points: int = config.DEFAULT_GRID) -> ConditionReport:
    """
    Re-checks (i)-(v) on sampled grids. Margins are positive when a condition
    holds: (i) min f_n; (ii) tol minus the relative norm deviation; (iii) the
    relative t-gap between consecutive intervals; (iv) and (v) relative
    distance to the threshold on the correct side.
    """
    if not cert.picks:
        raise InvalidInputError("Certificate has no functions.")
    t = _samples(cert, grid_points)
    inside = _membership(cert, t)
    margins, offending = {}, {}

    for i, pick in enumerate(cert.picks):
        values = pick.function.eval_many(t)
        threshold = threshold_for(pick.n)
        j = int(np.argmin(values))
        _record(margins, offending, 'i', values[j], {'n': pick.n, 't': float(t[j])})

        norm = sup_norm(pick.function, cert.tol).value
        deviation = abs(norm - scale_for(pick.n)) / scale_for(pick.n)
        _record(margins, offending, 'ii', cert.tol - deviation, {'n': pick.n, 'norm': norm})

        rel = (values - threshold) / threshold
        if np.any(inside[i]):
            masked = np.where(inside[i], rel, np.inf)
            j = int(np.argmin(masked))
            _record(margins, offending, 'iv', masked[j], {'n': pick.n, 't': float(t[j]), 'side': 'inside'})
        masked = np.where(inside[i], np.inf, -rel)
        j = int(np.argmin(masked))
        _record(margins, offending, 'iv', masked[j], {'n': pick.n, 't': float(t[j]), 'side': 'outside'})

        for later, mask in zip(cert.picks[i + 1:], inside[i + 1:]):
            if not np.any(mask):
                continue
            later_threshold = threshold_for(later.n)
            masked = np.where(mask, (later_threshold - values) / later_threshold, np.inf)
            j = int(np.argmin(masked))
            _record(margins, offending, 'v', masked[j], {'n': pick.n, 'm': later.n, 't': float(t[j])})

    for pick, nxt in zip(cert.picks[:-1], cert.picks[1:]):
        b_t = pick.interval.b.t
        _record(margins, offending, 'iii', (b_t - nxt.interval.a.t) / b_t, {'n': pick.n})
    if len(cert.picks) == 1:
        margins['iii'] = math.inf
        offending['iii'] = None

    report = ConditionReport(margins=margins, offending=offending, grid_points=grid_points,
                             samples=int(t.size), tol=cert.tol)
    for condition in report.failed:
        logger.warning(f"Condition ({condition}) falsified: margin {margins[condition]:.3e} at {offending[condition]}")
    return report


# --- c0 inequalities ---

def _test_vectors(n_functions: int, trials: int, seed: int):
    for i in range(n_functions):
        v = np.zeros(n_functions)
        v[i] = 1.0
        yield f"e_{i + 1}", v
    yield "ones", np.ones(n_functions)
    yield "alternating", np.array([(-1.0) ** i for i in range(n_functions)])
    for trial in range(trials):
        # one generator per trial: the result never depends on evaluation order
        rng = np.random.default_rng([seed, trial])
        v = rng.uniform(-1.0, 1.0, n_functions)
        v[rng.integers(n_functions)] = rng.choice([-1.0, 1.0])
        yield f"random_{trial}", v


def combination(cert: C0Certificate, coefficients) -> MuntzPolynomial:
    return MuntzPolynomial([(e, float(t) * c) for t, f in zip(coefficients, cert.functions) for e, c in f.terms])


@dataclass
class InequalityReport:
    seed: int
    vectors_checked: int
    min_ratio: float
    max_ratio: float
    violations: list
    norm_deviations: list
    proof_bounds: dict

    @property
    def passed(self) -> bool:
        return (not self.violations
                and all(d <= NORM_TOL for d in self.norm_deviations)
                and all(b['passed'] for b in self.proof_bounds.values()))

    def to_dict(self) -> dict:
        return {
            'passed': self.passed,
            'seed': self.seed,
            'vectors_checked': self.vectors_checked,
            'min_norm': self.min_ratio,
            'max_norm': self.max_ratio,
            'violations': self.violations,
            'norm_deviations': self.norm_deviations,
            'proof_bounds': self.proof_bounds,
        }


def verify_proof_bounds(cert: C0Certificate, grid_points: int = config.BUILD_CHECK_GRID) -> dict:
    """
    The estimates used in the proof of the two inequalities:
      peak:     sum_{n != N} f_n(x_{k_N}) < 1/4
      off:      sum_n f_n <= 1/3 outside the union of the I_n
      tail:     sum_{n > n'} f_n <= 2^-2n' on I_n'
      interval: sum_n f_n <= 1 - 2^-2n' on I_n'
    """
    tol = cert.tol
    peak = 0.0
    for pick in cert.picks:
        others = math.fsum(f.eval(pick.witness) for f in cert.functions if f is not pick.function)
        peak = max(peak, others)
    t = _samples(cert, grid_points)
    inside = _membership(cert, t)
    values = np.array([f.eval_many(t) for f in cert.functions])
    total = values.sum(axis=0)
    outside = ~np.any(inside, axis=0)
    off = float(total[outside].max()) if np.any(outside) else 0.0
    tail_excess, interval_excess = -math.inf, -math.inf
    for i, pick in enumerate(cert.picks):
        if not np.any(inside[i]):
            continue
        bound = threshold_for(pick.n)
        tail = values[i + 1:, inside[i]].sum(axis=0) if i + 1 < len(cert.picks) else np.zeros(1)
        tail_excess = max(tail_excess, float(tail.max()) - bound)
        interval_excess = max(interval_excess, float(total[inside[i]].max()) - (1 - bound))
    return {
        'peak': {'value': peak, 'bound': LOWER_CONSTANT, 'passed': peak < LOWER_CONSTANT},
        'off_interval': {'value': off, 'bound': OFF_INTERVAL_BOUND, 'passed': off <= OFF_INTERVAL_BOUND + tol},
        'tail': {'excess': tail_excess, 'passed': tail_excess <= tol},
        'interval': {'excess': interval_excess, 'passed': interval_excess <= tol},
    }


def verify_c0_inequalities(cert: C0Certificate, trials: int = config.DEFAULT_TRIALS,
                           seed: int = config.DEFAULT_SEED) -> InequalityReport:
    """
    Checks 1/4 <= ||sum t_n f_n|| <= 1 for canonical, all-ones, alternating
    and `trials` seeded random vectors with sup|t| = 1, and ||f_n|| = 1 - 2^-n.
    """
    if trials < 0:
        raise InvalidInputError(f"Trials must be non-negative, got {trials}.")
    tol = cert.tol
    deviations = []
    for pick in cert.picks:
        norm = sup_norm(pick.function, tol).value
        deviations.append(abs(norm - scale_for(pick.n)))

    violations = []
    lowest, highest, checked = math.inf, -math.inf, 0
    for name, v in _test_vectors(len(cert.picks), trials, seed):
        norm = sup_norm(combination(cert, v), tol).value
        checked += 1
        lowest, highest = min(lowest, norm), max(highest, norm)
        if not LOWER_CONSTANT - tol <= norm <= UPPER_CONSTANT + tol:
            logger.warning(f"Inequality violated for {name}: ||sum t_n f_n|| = {norm}")
            violations.append({'vector': name, 't': v.tolist(), 'norm': norm})

    report = InequalityReport(
        seed=seed, vectors_checked=checked, min_ratio=lowest, max_ratio=highest,
        violations=violations, norm_deviations=deviations, proof_bounds=verify_proof_bounds(cert),
    )
    logger.info(f"c0 inequalities (seed={seed}): {checked} vectors, norms in [{lowest:.6f}, {highest:.6f}]")
    return report


# --- tampering, used to exercise the falsification path ---

def tamper_interval(cert: C0Certificate, n: int, factor: float) -> C0Certificate:
    """Widens I_n multiplicatively in t: a moves to t_a*factor, b to t_b/factor."""
    picks = list(cert.picks)
    pick = picks[n - 1]
    widened = Interval(a=PointT(pick.interval.a.t * factor), b=PointT(pick.interval.b.t / factor))
    picks[n - 1] = replace(pick, interval=widened)
    return replace(cert, picks=tuple(picks))


def tamper_scale(cert: C0Certificate, n: int, factor: float) -> C0Certificate:
    picks = list(cert.picks)
    picks[n - 1] = replace(picks[n - 1], function=picks[n - 1].function * factor)
    return replace(cert, picks=tuple(picks))
