"""
Diameter-2 certificates for finite convex combinations of slices of the unit
ball of M(Lambda).

Given slices S(mu_j, eps_j) with witnesses g^j, the spike perturbations

    h+ = g + (1 - g(x_k)) p_k/||p_k||
    h- = g - (1 + g(x_k)) p_k/||p_k||

satisfy ||h+-|| <= 1 + 2 eps once p_k/||p_k|| > eps only on an interval where
every g^j oscillates by less than eps. Scaled by 1/(1 + 2 eps) they stay in
their slices for large k, and the two convex combinations differ by
2/(1 + 2 eps) at the spike peak x_k.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

import config
from errors import (CertificateFormatError, EmptyIntervalError, InvalidInputError,
                    NotFoundError)
from exponents import ExponentSequence, is_rip
from muntz_poly import (DiscreteFunctional, MuntzPolynomial, PointT, geometric_t_grid,
                        sup_norm)
from spikes import (Interval, SpikeFunction, SpikeProfile, consecutive_spike, normalized,
                    profile, superlevel_interval)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SliceSpec:
    """S(mu, eps) = {f in B : mu(f) > 1 - eps}, certified non-empty by `witness`."""
    functional: DiscreteFunctional
    epsilon: float
    witness: MuntzPolynomial
    tol: float = config.DEFAULT_TOL

    def __post_init__(self):
        if not 0 < self.epsilon < 1:
            raise InvalidInputError(f"Slice epsilon must lie in (0, 1), got {self.epsilon}.")
        value = self.functional.apply(self.witness)
        if not value > 1 - self.epsilon:
            raise InvalidInputError(
                f"Witness does not lie in the slice: mu(g) = {value} is not > 1 - eps = {1 - self.epsilon}."
            )
        norm = sup_norm(self.witness, self.tol).value
        if norm > 1 + self.tol:
            raise InvalidInputError(f"Witness has sup-norm {norm} > 1.")

    def to_dict(self) -> dict:
        return {
            'functional': self.functional.to_list(),
            'epsilon': self.epsilon,
            'witness': self.witness.to_list(),
        }

    @classmethod
    def from_dict(cls, data: dict, tol: float = config.DEFAULT_TOL) -> "SliceSpec":
        try:
            return cls(
                functional=DiscreteFunctional.from_list(data['functional']),
                epsilon=float(data['epsilon']),
                witness=MuntzPolynomial.from_list(data['witness']),
                tol=tol,
            )
        except (KeyError, TypeError, ValueError) as e:
            raise CertificateFormatError(f"Malformed slice: {e}")


def build_perturbations(g: MuntzPolynomial, spike: SpikeFunction,
                        prof: Optional[SpikeProfile] = None) -> tuple[MuntzPolynomial, MuntzPolynomial]:
    """h+ and h-, equal to +1 and -1 at the spike maximizer."""
    prof = prof or profile(spike)
    peak = normalized(spike, prof)
    g_peak = g.eval(prof.argmax)
    return g + peak * (1.0 - g_peak), g - peak * (1.0 + g_peak)


def _oscillation(g: MuntzPolynomial, interval: Interval) -> float:
    lo, hi = interval.b.t, interval.a.t
    t = np.concatenate(([lo, hi], geometric_t_grid(lo, hi, config.OSCILLATION_SAMPLES))) if lo > 0 \
        else np.array([lo, hi])
    values = g.eval_many(t)
    return float(values.max() - values.min())


@dataclass
class KSearch:
    k: int
    spike: SpikeFunction
    profile: SpikeProfile
    interval: Optional[Interval]
    perturbations: list
    margins: dict


def _check_k(slices: list[SliceSpec], eps: float, spike: SpikeFunction, tol: float):
    prof = profile(spike)
    try:
        interval = superlevel_interval(spike, eps * prof.norm)
    except EmptyIntervalError:
        interval = None
    scale = 1.0 / (1.0 + 2.0 * eps)
    margins = {'oscillation': math.inf, 'norm': math.inf, 'membership': math.inf}
    perturbations = []
    for s in slices:
        if interval is not None:
            margins['oscillation'] = min(margins['oscillation'], eps - _oscillation(s.witness, interval))
        h_plus, h_minus = build_perturbations(s.witness, spike, prof)
        perturbations.append((h_plus, h_minus))
        for h in (h_plus, h_minus):
            margins['membership'] = min(margins['membership'],
                                        scale * s.functional.apply(h) - (1 - s.epsilon))
    if margins['oscillation'] > 0 and margins['membership'] > 0:
        for h_plus, h_minus in perturbations:
            for h in (h_plus, h_minus):
                margins['norm'] = min(margins['norm'], 1 + 2 * eps + tol - sup_norm(h, tol).value)
    else:
        margins['norm'] = -math.inf
    ok = margins['oscillation'] > 0 and margins['membership'] > 0 and margins['norm'] >= 0
    return ok, prof, interval, perturbations, margins


def _require_rip(seq: ExponentSequence):
    if not is_rip(seq):
        raise InvalidInputError("Spike perturbations need an RIP sequence; extract an RIP subsequence first.")
    if seq[1] <= 0:
        raise InvalidInputError("Spike perturbations need positive exponents.")


def find_K(slices: list[SliceSpec], eps: float, seq: ExponentSequence, k_max: int,
           tol: float = config.DEFAULT_TOL) -> KSearch:
    """
    Smallest k <= k_max at which, for every slice, g^j oscillates by less
    than eps on {p_k/||p_k|| > eps}, ||h_k^{j+-}|| <= 1 + 2 eps and
    mu_j(h_k^{j+-}/(1 + 2 eps)) > 1 - eps_j.
    """
    if not eps > 0:
        raise InvalidInputError(f"eps must be positive, got {eps}.")
    if not slices:
        raise InvalidInputError("At least one slice is required.")
    _require_rip(seq)
    best = None
    for k in range(1, min(k_max, len(seq) - 2) + 1):
        spike = consecutive_spike(seq, k)
        ok, prof, interval, perturbations, margins = _check_k(slices, eps, spike, tol)
        if ok:
            logger.info(f"K(eps={eps}) = {k} (lambda_k={seq[k]:g})")
            return KSearch(k=k, spike=spike, profile=prof, interval=interval,
                           perturbations=perturbations, margins=margins)
        logger.debug(f"k={k} rejected: {margins}")
        if best is None or min(margins.values()) > min(best['margins'].values()):
            best = {'k': k, 'margins': margins}
    raise NotFoundError(f"No k <= {k_max} qualifies for eps={eps}.", best_margins=best)


@dataclass
class OctaCertificate:
    slices: list
    weights: list
    eps: float
    exponents: ExponentSequence
    chosen_k: int
    spike: SpikeFunction
    peak: PointT
    interval: Optional[Interval]
    perturbations: list
    scale: float
    separation: float
    separation_at_peak: float
    target_separation: float
    combination_norms: dict
    member_norms: list
    membership_margins: list
    search_margins: dict
    tol: float
    passed: bool = field(default=False)

    def to_dict(self) -> dict:
        return {
            'schema': config.OCTA_SCHEMA,
            'slices': [s.to_dict() for s in self.slices],
            'weights': list(self.weights),
            'eps': self.eps,
            'exponents': self.exponents.to_dict(),
            'chosen_k': self.chosen_k,
            'spike': {'alpha': self.spike.alpha, 'beta': self.spike.beta},
            'peak': self.peak.to_dict(),
            'interval': self.interval.to_dict() if self.interval else None,
            'perturbations': [{'h_plus': hp.to_list(), 'h_minus': hm.to_list()} for hp, hm in self.perturbations],
            'scale': self.scale,
            'separation': self.separation,
            'separation_at_peak': self.separation_at_peak,
            'target_separation': self.target_separation,
            'combination_norms': self.combination_norms,
            'member_norms': self.member_norms,
            'membership_margins': self.membership_margins,
            'search_margins': self.search_margins,
            'settings': config.get_numeric_settings(),
            'tol': self.tol,
            'passed': self.passed,
        }


def _validate_weights(weights: list[float], n_slices: int):
    if len(weights) != n_slices:
        raise InvalidInputError(f"{len(weights)} weights given for {n_slices} slices.")
    if any(not w > 0 for w in weights):
        raise InvalidInputError(f"Weights must be positive: {weights}.")
    if abs(math.fsum(weights) - 1.0) > 1e-12:
        raise InvalidInputError(f"Weights must sum to 1, got {math.fsum(weights)}.")


def diameter_certificate(slices: list[SliceSpec], weights: list[float], eps: float,
                         seq: ExponentSequence, k_max: int,
                         tol: float = config.DEFAULT_TOL) -> OctaCertificate:
    """
    u+- = (1/(1 + 2 eps)) sum_j w_j h_k^{j+-} both lie in the convex
    combination of slices and ||u+ - u-|| >= (u+ - u-)(x_k) = 2/(1 + 2 eps).
    """
    _validate_weights(weights, len(slices))
    search = find_K(slices, eps, seq, k_max, tol)
    scale = 1.0 / (1.0 + 2.0 * eps)
    u_plus = MuntzPolynomial([(e, scale * w * c) for w, (h, _) in zip(weights, search.perturbations)
                              for e, c in h.terms])
    u_minus = MuntzPolynomial([(e, scale * w * c) for w, (_, h) in zip(weights, search.perturbations)
                               for e, c in h.terms])
    norms = {'u_plus': sup_norm(u_plus, tol).value, 'u_minus': sup_norm(u_minus, tol).value}
    member_norms, membership = [], []
    for s, (h_plus, h_minus) in zip(slices, search.perturbations):
        member_norms.append({'plus': scale * sup_norm(h_plus, tol).value,
                             'minus': scale * sup_norm(h_minus, tol).value})
        membership.append({'plus': scale * s.functional.apply(h_plus) - (1 - s.epsilon),
                           'minus': scale * s.functional.apply(h_minus) - (1 - s.epsilon)})
    difference = u_plus - u_minus
    at_peak = difference.eval(search.profile.argmax)
    separation = max(sup_norm(difference, tol).value, abs(at_peak))
    target = 2.0 * scale
    passed = (all(n <= 1 + tol for n in norms.values())
              and all(m > 0 for margin in membership for m in margin.values())
              and at_peak >= target - tol)
    if not passed:
        logger.warning(f"Octahedral certificate falsified at k={search.k}: norms={norms}, membership={membership}")
    return OctaCertificate(
        slices=slices, weights=list(weights), eps=eps, exponents=seq, chosen_k=search.k,
        spike=search.spike, peak=search.profile.argmax, interval=search.interval,
        perturbations=search.perturbations, scale=scale, separation=separation,
        separation_at_peak=at_peak, target_separation=target, combination_norms=norms,
        member_norms=member_norms, membership_margins=membership, search_margins=search.margins,
        tol=tol, passed=passed,
    )


@dataclass(frozen=True)
class WitnessSearch:
    witness: Optional[MuntzPolynomial]
    value: float
    evaluations: int

    @property
    def found(self) -> bool:
        return self.witness is not None


def witness_finder(functional: DiscreteFunctional, epsilon: float, seq: ExponentSequence,
                   budget: int, tol: float = config.DEFAULT_TOL) -> WitnessSearch:
    """
    Coordinate ascent for g with ||g|| = 1 and mu(g) > 1 - epsilon, supported
    on the first `budget` exponents of the sequence. Not finding one is a
    normal outcome, reported with the best value reached.
    """
    if budget < 1:
        raise InvalidInputError(f"Budget must be positive, got {budget}.")
    exponents = list(seq.values[:budget])
    target = 1 - epsilon
    evaluations = 0

    def normalized_value(coefficients):
        nonlocal evaluations
        g = MuntzPolynomial(zip(exponents, coefficients))
        if not len(g):
            return None, -math.inf
        evaluations += 1
        norm = sup_norm(g, tol).value
        if norm == 0:
            return None, -math.inf
        g = g * (1.0 / norm)
        return g, functional.apply(g)

    best_g, best, coefficients = None, -math.inf, None
    for i in range(len(exponents)):
        for sign in (1.0, -1.0):
            trial = np.zeros(len(exponents))
            trial[i] = sign
            g, value = normalized_value(trial)
            if value > best:
                best_g, best, coefficients = g, value, trial
    if best > target:
        return WitnessSearch(witness=best_g, value=best, evaluations=evaluations)

    step = 0.5
    for _ in range(config.WITNESS_MAX_SWEEPS):
        improved = False
        for i in range(len(exponents)):
            for delta in (step, -step):
                trial = coefficients.copy()
                trial[i] += delta
                g, value = normalized_value(trial)
                if value > best + 1e-15:
                    best_g, best, improved = g, value, True
                    coefficients = np.array([c for _, c in _aligned(exponents, g)])
                    if best > target:
                        return WitnessSearch(witness=best_g, value=best, evaluations=evaluations)
        if not improved:
            step /= 2
            if step < 1e-6:
                break
    logger.info(f"No witness with mu(g) > {target} found; best {best:.6f}")
    return WitnessSearch(witness=None, value=best, evaluations=evaluations)


def _aligned(exponents: list[float], g: MuntzPolynomial):
    coefficients = dict(g.terms)
    return [(e, coefficients.get(e, 0.0)) for e in exponents]


def weak_entry_trace(slice_spec: SliceSpec, seq: ExponentSequence, k_max: int) -> list[dict]:
    """mu(h_k^+) and mu(h_k^-) along the prefix; both tend to mu(g)."""
    _require_rip(seq)
    trace = []
    for k in range(1, min(k_max, len(seq) - 2) + 1):
        h_plus, h_minus = build_perturbations(slice_spec.witness, consecutive_spike(seq, k))
        trace.append({'k': k,
                      'plus': slice_spec.functional.apply(h_plus),
                      'minus': slice_spec.functional.apply(h_minus)})
    return trace
