import logging
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

import config
from errors import InvalidInputError, NumericalInconsistencyError, ToleranceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True, order=True)
class PointT:
    """A point of [0,1] in the log-domain coordinate t = -ln x (t = inf is x = 0)."""
    t: float

    def __post_init__(self):
        t = float(self.t)
        if math.isnan(t) or t < 0:
            raise InvalidInputError(f"Log-domain coordinate must be a non-negative number, got {self.t}.")
        object.__setattr__(self, 't', t)

    @property
    def x(self) -> float:
        return 0.0 if math.isinf(self.t) else math.exp(-self.t)

    @classmethod
    def from_x(cls, x: float) -> "PointT":
        if not 0 <= x <= 1:
            raise InvalidInputError(f"Point {x} lies outside [0, 1].")
        if x == 0:
            return cls(math.inf)
        return cls(-math.log(x))

    def to_dict(self) -> dict:
        return {'x': self.x, 't': None if math.isinf(self.t) else self.t}

    @classmethod
    def from_dict(cls, data: dict) -> "PointT":
        if 't' in data:
            return cls(math.inf if data['t'] is None else data['t'])
        if 'x' in data:
            return cls.from_x(float(data['x']))
        raise InvalidInputError(f"Point needs an 'x' or 't' field: {data}")


class MuntzPolynomial:
    """
    A finite sum of c * x^lambda with distinct non-negative exponents, sorted
    ascending. Duplicate exponents are merged and zero coefficients dropped.

    Evaluation happens in t = -ln x. Adjacent terms with opposite signs are
    evaluated as a pair, e^{-l1 t} * ((c1 + c2) + c2 * expm1(-(l2 - l1) t)),
    which keeps spikes x^a - x^b accurate near x = 1.
    """

    def __init__(self, terms: Iterable[tuple[float, float]] = ()):
        merged: dict[float, list[float]] = {}
        for exponent, coefficient in terms:
            exponent = float(exponent)
            coefficient = float(coefficient)
            if not math.isfinite(exponent) or exponent < 0:
                raise InvalidInputError(f"Exponent must be finite and non-negative, got {exponent}.")
            if not math.isfinite(coefficient):
                raise InvalidInputError(f"Coefficient must be finite, got {coefficient}.")
            merged.setdefault(exponent, []).append(coefficient)
        items = [(e, math.fsum(cs)) for e, cs in sorted(merged.items())]
        items = [(e, c) for e, c in items if c != 0.0]
        self.exponents = np.array([e for e, _ in items], dtype=float)
        self.coefficients = np.array([c for _, c in items], dtype=float)
        self._plan = self._evaluation_plan()

    def _evaluation_plan(self):
        singles, pairs = [], []
        lam, c = self.exponents, self.coefficients
        i = 0
        while i < len(lam):
            if i + 1 < len(lam) and (c[i] > 0) != (c[i + 1] > 0):
                pairs.append((lam[i], lam[i + 1] - lam[i], c[i] + c[i + 1], c[i + 1]))
                i += 2
            else:
                singles.append((lam[i], c[i]))
                i += 1
        return singles, pairs

    # --- basic protocol ---

    @property
    def terms(self) -> list[tuple[float, float]]:
        return list(zip(self.exponents.tolist(), self.coefficients.tolist()))

    def __len__(self):
        return len(self.exponents)

    def __repr__(self):
        body = " + ".join(f"{c:g}*x^{e:g}" for e, c in self.terms) or "0"
        return f"MuntzPolynomial({body})"

    def __eq__(self, other):
        return isinstance(other, MuntzPolynomial) and self.terms == other.terms

    def __add__(self, other: "MuntzPolynomial") -> "MuntzPolynomial":
        return MuntzPolynomial(self.terms + other.terms)

    def __sub__(self, other: "MuntzPolynomial") -> "MuntzPolynomial":
        return self + (-1.0) * other

    def __neg__(self):
        return (-1.0) * self

    def __mul__(self, scalar: float) -> "MuntzPolynomial":
        return MuntzPolynomial([(e, scalar * c) for e, c in self.terms])

    __rmul__ = __mul__

    @property
    def constant_term(self) -> float:
        if len(self.exponents) and self.exponents[0] == 0.0:
            return float(self.coefficients[0])
        return 0.0

    @property
    def coefficient_scale(self) -> float:
        """Sum of |c|, an upper bound for the sup-norm."""
        return math.fsum(abs(c) for c in self.coefficients.tolist())

    def derivative_t(self) -> "MuntzPolynomial":
        """d/dt p(e^{-t}) = -sum c*lambda*e^{-lambda t}, again an exponential sum."""
        return MuntzPolynomial([(e, -c * e) for e, c in self.terms])

    # --- evaluation ---

    def eval_t(self, t: float) -> float:
        if math.isnan(t) or t < 0:
            raise InvalidInputError(f"Log-domain coordinate must be a non-negative number, got {t}.")
        if t == 0.0:
            return math.fsum(self.coefficients.tolist())
        if math.isinf(t):
            return self.constant_term
        singles, pairs = self._plan
        total = 0.0
        for lam, c in singles:
            total += c * math.exp(-lam * t)
        for lam, gap, head, tail in pairs:
            total += math.exp(-lam * t) * (head + tail * math.expm1(-gap * t))
        return total

    def eval(self, at: PointT) -> float:
        return self.eval_t(at.t)

    def eval_x(self, x: float) -> float:
        return self.eval(PointT.from_x(x))

    def eval_many(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if np.any(np.isnan(t)) or np.any(t < 0):
            raise InvalidInputError("Log-domain coordinates must be non-negative numbers.")
        singles, pairs = self._plan
        finite = np.where(np.isinf(t), 0.0, t)
        out = np.zeros_like(finite)
        for lam, c in singles:
            out += c * np.exp(-lam * finite)
        for lam, gap, head, tail in pairs:
            out += np.exp(-lam * finite) * (head + tail * np.expm1(-gap * finite))
        out = np.where(t == 0.0, math.fsum(self.coefficients.tolist()), out)
        return np.where(np.isinf(t), self.constant_term, out)

    # --- serialization ---

    def to_list(self) -> list[dict]:
        return [{'exponent': e, 'coefficient': c} for e, c in self.terms]

    @classmethod
    def from_list(cls, data: list[dict]) -> "MuntzPolynomial":
        try:
            return cls((item['exponent'], item['coefficient']) for item in data)
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"Malformed polynomial: {e}")

    @classmethod
    def monomial(cls, exponent: float, coefficient: float = 1.0) -> "MuntzPolynomial":
        return cls([(exponent, coefficient)])


@dataclass(frozen=True)
class DiscreteFunctional:
    """
    mu(f) = sum w_i f(x_i). sum |w_i| <= 1 keeps mu inside the dual unit ball
    of C[0,1], hence of every Muntz space.
    """
    atoms: tuple

    def __post_init__(self):
        atoms = tuple((p if isinstance(p, PointT) else PointT.from_x(p), float(w)) for p, w in self.atoms)
        if self.norm_bound_of(atoms) > 1 + 1e-12:
            raise InvalidInputError(f"Functional weights have sum |w| = {self.norm_bound_of(atoms)} > 1.")
        object.__setattr__(self, 'atoms', atoms)

    @staticmethod
    def norm_bound_of(atoms) -> float:
        return math.fsum(abs(w) for _, w in atoms)

    @property
    def norm_bound(self) -> float:
        return self.norm_bound_of(self.atoms)

    def apply(self, p: MuntzPolynomial) -> float:
        return math.fsum(w * p.eval(point) for point, w in self.atoms)

    def to_list(self) -> list[dict]:
        return [{**point.to_dict(), 'weight': w} for point, w in self.atoms]

    @classmethod
    def from_list(cls, data: list[dict]) -> "DiscreteFunctional":
        try:
            return cls(tuple((PointT.from_dict(item), item['weight']) for item in data))
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"Malformed functional: {e}")

    @classmethod
    def parse(cls, text: str) -> "DiscreteFunctional":
        """Parses '<x>:<weight>,<x>:<weight>,...'."""
        atoms = []
        for chunk in text.split(','):
            if not chunk.strip():
                continue
            try:
                x, w = chunk.split(':')
                atoms.append((PointT.from_x(float(x)), float(w)))
            except ValueError:
                raise InvalidInputError(f"Invalid functional atom '{chunk}', expected <x>:<weight>.")
        return cls(tuple(atoms))


# --- grids and bisection ---

def geometric_t_grid(t_lo: float, t_hi: float, n: int) -> np.ndarray:
    if not 0 < t_lo < t_hi:
        raise InvalidInputError(f"Invalid t-grid bounds ({t_lo}, {t_hi}).")
    return np.geomspace(t_lo, t_hi, n)


def t_bounds(p: MuntzPolynomial, tol: float, floor: Optional[float] = None) -> tuple[float, float]:
    """
    Scan range in t. Beyond t_hi every non-constant term is below
    min(tol, floor) * scale; below t_lo nothing varies on the scale of tol.
    """
    positive = [(e, c) for e, c in p.terms if e > 0]
    if not positive:
        raise InvalidInputError("Polynomial has no non-constant term.")
    scale = p.coefficient_scale
    threshold = tol * scale
    if floor is not None:
        threshold = min(threshold, floor)
    lam_min = positive[0][0]
    lam_max = positive[-1][0]
    t_hi = math.log(2) / lam_min
    for e, c in positive:
        if abs(c) > threshold:
            t_hi = max(t_hi, math.log(abs(c) / threshold) / e)
    t_lo = min(tol, math.log(2) / lam_max) / 8
    return t_lo, max(t_hi, 2 * t_lo)


def bisect_predicate(pred: Callable[[float], bool], t_true: float, t_false: float,
                     rtol: float, max_steps: int = config.MAX_BISECTION_STEPS) -> tuple[float, float]:
    """
    Shrinks [t_true, t_false] (either order) keeping pred(t_true) and
    not pred(t_false). Midpoints are geometric on wide brackets so tiny t
    are reached in few steps.
    """
    for _ in range(max_steps):
        lo, hi = min(t_true, t_false), max(t_true, t_false)
        if hi - lo <= rtol * hi:
            return t_true, t_false
        if lo == 0.0:
            mid = hi / 16
        elif hi > 4 * lo:
            mid = math.sqrt(lo) * math.sqrt(hi)
        else:
            mid = lo + (hi - lo) / 2
        if not lo < mid < hi:
            return t_true, t_false
        if pred(mid):
            t_true = mid
        else:
            t_false = mid
    raise ToleranceError(f"Bisection did not reach rtol={rtol} in {max_steps} steps on [{t_true}, {t_false}].")


def _extrema(p: MuntzPolynomial, t_lo: float, t_hi: float, tol: float, scan_points: int) -> list[float]:
    """Refined t of every derivative sign change on the geometric scan grid."""
    derivative = p.derivative_t()
    if not len(derivative):
        return []
    grid = geometric_t_grid(t_lo, t_hi, scan_points)
    signs = np.sign(derivative.eval_many(grid))
    nonzero = np.nonzero(signs)[0]
    changes = [(a, b) for a, b in zip(nonzero[:-1], nonzero[1:]) if signs[a] != signs[b]]
    bound = len(derivative) - 1
    if len(changes) > bound:
        raise NumericalInconsistencyError(
            f"Derivative changes sign {len(changes)} times, more than the {bound} allowed for {len(p)} terms."
        )
    extrema = []
    for a, b in changes:
        rising = signs[a] > 0

        def same_sign(t):
            d = derivative.eval_t(t)
            return d != 0.0 and (d > 0) == rising

        t_true, t_false = bisect_predicate(same_sign, float(grid[a]), float(grid[b]), rtol=tol)
        extrema.append(math.sqrt(t_true) * math.sqrt(t_false))
    return extrema


@dataclass(frozen=True)
class SupNorm:
    value: float
    argmax: tuple
    degraded: bool = False

    def to_dict(self) -> dict:
        return {
            'value': self.value,
            'argmax': [p.to_dict() for p in self.argmax],
            'degraded_precision': self.degraded,
        }


def sup_norm(p: MuntzPolynomial, tol: float = config.DEFAULT_TOL,
             scan_points: int = config.SCAN_POINTS) -> SupNorm:
    """
    max over [0,1] of |p| within relative tolerance tol, with its maximizers.

    In t the derivative of an n-term exponential sum has at most n-1 positive
    zeros. They are bracketed by a sign scan on a geometric grid, refined by
    bisection, and compared with the values at t = 0 and t -> inf.
    """
    if not len(p):
        raise InvalidInputError("Sup-norm of an empty polynomial.")
    if not tol > 0:
        raise InvalidInputError(f"Tolerance must be positive, got {tol}.")
    degraded = tol < config.PRECISION_FLOOR
    if degraded:
        logger.warning(f"Tolerance {tol} is below double precision; result is degraded.")
    candidates = [0.0, math.inf]
    if np.any(p.exponents > 0):
        t_lo, t_hi = t_bounds(p, tol)
        candidates += _extrema(p, t_lo, t_hi, tol, scan_points)
    values = [abs(p.eval_t(t)) for t in candidates]
    value = max(values)
    argmax = tuple(sorted({PointT(t) for t, v in zip(candidates, values) if v >= value * (1 - tol)},
                          key=lambda point: -point.t))
    return SupNorm(value=value, argmax=argmax, degraded=degraded)


def level_crossings(p: MuntzPolynomial, level: float, bracket: Optional[tuple[PointT, PointT]] = None,
                    tol: float = config.DEFAULT_TOL, expected: Optional[int] = None,
                    scan_points: int = config.SCAN_POINTS) -> list[PointT]:
    """
    All solutions of p = level inside the bracket (default the whole of
    [0,1]), sorted by increasing x. The bracket is split into monotone pieces
    at the refined extrema; each piece with a sign change of p - level is
    bisected. Each crossing is reported on its non-strict side, p <= level.
    """
    if bracket is None:
        bracket = (PointT(math.inf), PointT(0.0))
    lo, hi = sorted(point.t for point in bracket)
    if not np.any(p.exponents > 0):
        return []
    t_lo, t_far = t_bounds(p, tol, floor=abs(level - p.constant_term) / 2 or None)
    if math.isinf(hi):
        hi = max(t_far, 2 * lo) if lo > 0 else t_far
    scan_lo = max(lo, t_lo)
    breaks = [lo]
    if scan_lo < hi:
        breaks += [t for t in _extrema(p, scan_lo, hi, tol, scan_points) if lo < t < hi]
    breaks.append(hi)

    def above(t):
        return p.eval_t(t) > level

    crossings = []
    for u, v in zip(breaks[:-1], breaks[1:]):
        above_u, above_v = above(u), above(v)
        if above_u == above_v:
            continue
        t_true, t_false = bisect_predicate(above, u if above_u else v, v if above_u else u, rtol=1e-15)
        crossings.append(PointT(t_false))
    crossings.sort(key=lambda point: -point.t)
    if expected is not None and len(crossings) != expected:
        raise NumericalInconsistencyError(f"Found {len(crossings)} crossings of level {level}, expected {expected}.")
    logger.debug(f"Level {level}: {len(crossings)} crossings")
    return crossings


def grid_oracle(p: MuntzPolynomial, points: int = 10 ** 6, t_lo: Optional[float] = None,
                t_hi: Optional[float] = None, tol: float = config.DEFAULT_TOL) -> tuple[float, float]:
    """Dense geometric t-grid maximum of |p|, endpoints included. Returns (value, t)."""
    default_lo, default_hi = t_bounds(p, tol)
    grid = geometric_t_grid(t_lo or default_lo, t_hi or default_hi, points)
    grid = np.concatenate(([0.0], grid, [math.inf]))
    values = np.abs(p.eval_many(grid))
    i = int(np.argmax(values))
    return float(values[i]), float(grid[i])
