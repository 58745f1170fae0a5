import json
import logging
import math
import os
from datetime import datetime, timezone

import numpy as np
import pandas as pd
from filelock import FileLock, Timeout

from errors import CertificateFormatError
from muntz_poly import MuntzPolynomial, geometric_t_grid, t_bounds

logger = logging.getLogger(__name__)

TIMESTAMP_FIELD = 'generated_at'
LOCK_TIMEOUT = 10


def sanitize(value):
    """Non-finite floats become null; numpy scalars become Python numbers."""
    if isinstance(value, dict):
        return {k: sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [sanitize(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return None
    return value


def canonical_json(data: dict) -> str:
    """Deterministic text of a certificate, without the timestamp."""
    stripped = {k: v for k, v in data.items() if k != TIMESTAMP_FIELD}
    return json.dumps(sanitize(stripped), indent=2, sort_keys=True, allow_nan=False)


def write_certificate(data: dict, path: str, canonical: bool = False) -> str:
    """
    Saves a certificate as JSON. The write is guarded by a file lock so that
    concurrent runs never interleave partial files.
    """
    payload = dict(data)
    if not canonical:
        payload[TIMESTAMP_FIELD] = datetime.now(timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')
    text = canonical_json(payload) if canonical else json.dumps(sanitize(payload), indent=2, sort_keys=True, allow_nan=False)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    lock = FileLock(path + ".lock", timeout=LOCK_TIMEOUT)
    try:
        with lock:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(text + "\n")
    except Timeout:
        logger.error(f"Could not acquire lock for {path}.")
        raise
    logger.info(f"Certificate written to {path}")
    return text


def read_certificate(path: str) -> dict:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            content = f.read()
    except OSError as e:
        raise CertificateFormatError(f"Cannot read certificate {path}: {e}")
    if not content.strip():
        raise CertificateFormatError(f"Certificate {path} is empty.")
    try:
        return json.loads(content)
    except json.JSONDecodeError as e:
        raise CertificateFormatError(f"Certificate {path} is not valid JSON: {e}")


def sample_functions(functions: dict[str, MuntzPolynomial], points: int = 2000,
                     tol: float = 1e-10) -> pd.DataFrame:
    """
    Plot data for each named function on a geometric t-grid that covers the
    union of their scan ranges. Columns: series, x, t, f.
    """
    exponents = sorted({e for f in functions.values() for e, _ in f.terms if e > 0})
    if not exponents:
        t = np.array([0.0])
    else:
        t_lo, t_hi = t_bounds(MuntzPolynomial([(e, 1.0) for e in exponents]), tol)
        t = np.concatenate(([0.0], geometric_t_grid(t_lo, t_hi, points)))
    frames = []
    for name, f in functions.items():
        frames.append(pd.DataFrame({'series': name, 'x': np.exp(-t), 't': t, 'f': f.eval_many(t)}))
    return pd.concat(frames, ignore_index=True)


def write_plot_csv(frame: pd.DataFrame, path: str):
    frame.to_csv(path, index=False, float_format='%.17g')
    logger.info(f"Plot data ({len(frame)} rows) written to {path}")
