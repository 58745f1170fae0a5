import logging
import math
import re
from dataclasses import dataclass, field
from typing import Optional

import mpmath

import config
from errors import InvalidInputError, InsufficientSequenceError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExponentSequence:
    """
    A finite prefix of a strictly increasing sequence of non-negative exponents.

    `family` is the generator tag (e.g. ``geometric:2:scale=1:start=0``) or
    ``list`` for explicit values.
    """
    values: tuple
    family: str = "list"
    origin_offset: int = field(init=False)

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        if not values:
            raise InvalidInputError("Exponent sequence is empty.")
        for v in values:
            if not math.isfinite(v):
                raise InvalidInputError(f"Exponent {v} is not finite.")
        if values[0] < 0:
            raise InvalidInputError(f"Exponents must be non-negative, got {values[0]}.")
        for i in range(len(values) - 1):
            if not values[i] < values[i + 1]:
                raise InvalidInputError(
                    f"Exponents must be strictly increasing: values[{i}]={values[i]} >= values[{i + 1}]={values[i + 1]}"
                )
        object.__setattr__(self, 'values', values)
        offset = next(i for i, v in enumerate(values) if v > 0) if values[-1] > 0 else len(values)
        object.__setattr__(self, 'origin_offset', offset)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, k):
        return self.values[k]

    def to_dict(self) -> dict:
        return {'family': self.family, 'values': list(self.values)}

    @classmethod
    def from_dict(cls, data: dict) -> "ExponentSequence":
        try:
            return cls(values=tuple(data['values']), family=data.get('family', 'list'))
        except (KeyError, TypeError) as e:
            raise InvalidInputError(f"Malformed exponent sequence: {e}")


def geometric(base: float, count: int, scale: float = 1.0, start: int = 0) -> ExponentSequence:
    """values[k] = scale * base**(k + start), computed in extended precision and rounded once."""
    if base < 2:
        raise InvalidInputError(f"Geometric base must be >= 2, got {base}.")
    if scale <= 0:
        raise InvalidInputError(f"Geometric scale must be positive, got {scale}.")
    if count < 1:
        raise InvalidInputError(f"Count must be positive, got {count}.")
    with mpmath.workdps(config.MPMATH_DPS):
        b = mpmath.mpf(base)
        s = mpmath.mpf(scale)
        values = tuple(float(s * b ** (k + start)) for k in range(count))
    if not math.isfinite(values[-1]):
        raise InvalidInputError(f"geometric:{base} overflows double precision before {count} values.")
    family = f"geometric:{float(base)!r}:scale={float(scale)!r}:start={start}"
    return ExponentSequence(values=values, family=family)


def from_list(values) -> ExponentSequence:
    return ExponentSequence(values=tuple(values), family="list")


_GEOMETRIC_OPTION = re.compile(r"^(scale|start|count)=(.+)$")


def parse_sequence_spec(text: str, count: Optional[int] = None) -> ExponentSequence:
    """
    Parses the sequence mini-language:
        geometric:<base>[:scale=<s>][:start=<k0>][:count=<m>]
        list:<v1>,<v2>,...
    """
    text = text.strip()
    kind, _, rest = text.partition(':')
    kind = kind.lower()
    if kind == 'list':
        try:
            values = [float(v) for v in rest.split(',') if v.strip()]
        except ValueError as e:
            raise InvalidInputError(f"Invalid list sequence '{text}': {e}")
        return from_list(values)
    if kind == 'geometric':
        parts = rest.split(':')
        options = {'scale': 1.0, 'start': 0, 'count': count or config.DEFAULT_PREFIX_LENGTH}
        try:
            base = float(parts[0])
            for part in parts[1:]:
                match = _GEOMETRIC_OPTION.match(part.strip())
                if not match:
                    raise InvalidInputError(f"Unknown geometric option '{part}' in '{text}'.")
                key, value = match.groups()
                options[key] = float(value) if key == 'scale' else int(value)
        except ValueError as e:
            raise InvalidInputError(f"Invalid geometric sequence '{text}': {e}")
        return geometric(base, options['count'], scale=options['scale'], start=options['start'])
    raise InvalidInputError(f"Unknown sequence family '{kind}' in '{text}'.")


def is_rip(seq: ExponentSequence) -> bool:
    """Rapid Increase Property: values[k+1] >= 2*values[k] for every consecutive pair."""
    if len(seq) < 2:
        raise InvalidInputError("RIP needs at least two exponents.")
    return all(seq[k + 1] >= 2 * seq[k] for k in range(len(seq) - 1))


def extract_rip_subsequence(seq: ExponentSequence, count: int) -> list[int]:
    """
    Greedy RIP extraction starting at the first strictly positive exponent;
    each next index is the smallest j with values[j] >= 2*values[previous].
    """
    if count < 1:
        raise InvalidInputError(f"Count must be positive, got {count}.")
    if seq.origin_offset >= len(seq):
        raise InsufficientSequenceError("Sequence has no positive exponent.", achieved=0)
    indices = [seq.origin_offset]
    j = seq.origin_offset + 1
    while len(indices) < count and j < len(seq):
        if seq[j] >= 2 * seq[indices[-1]]:
            indices.append(j)
        j += 1
    if len(indices) < count:
        raise InsufficientSequenceError(
            f"Only {len(indices)} RIP exponents available in the stored prefix, {count} requested.",
            achieved=len(indices),
        )
    logger.debug(f"Extracted RIP indices {indices}")
    return indices


def subsequence(seq: ExponentSequence, indices: list[int]) -> ExponentSequence:
    return ExponentSequence(
        values=tuple(seq[i] for i in indices),
        family=f"rip-subsequence({seq.family})",
    )


@dataclass(frozen=True)
class MuntzSum:
    partial: float
    tail_bound: Optional[float]


def muntz_partial_sum(seq: ExponentSequence) -> MuntzSum:
    """
    Sum of 1/lambda_k over the positive stored exponents. When the prefix is
    RIP the remaining tail is dominated by a geometric series, bounded by
    2/lambda_last.
    """
    partial = math.fsum(1.0 / v for v in seq.values if v > 0)
    tail = None
    if len(seq) >= 2 and seq[-1] > 0 and is_rip(seq):
        tail = 2.0 / seq[-1]
    return MuntzSum(partial=partial, tail_bound=tail)
