"""
Special functions used by the densities and the envelope construction.

All functions accept scalars or numpy arrays and return an object of the
same shape (a Python float for scalar input).  Arguments are shifted upward
by the recurrence until they reach ``_SHIFT`` and then evaluated with the
asymptotic (Stirling-type) series, which at that point is accurate to well
below one ulp.
"""

import numpy as np

from .errors import DomainError

__all__ = ["log_gamma", "digamma", "trigamma", "log_beta", "EULER_GAMMA"]

EULER_GAMMA = 0.57721566490153286061
_HALF_LOG_2PI = 0.91893853320467274178
_SHIFT = 10

# B_{2k} / (2k (2k-1)) for k = 1..7
_LGAMMA_COEF = (
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
)
# B_{2k} / (2k) for k = 1..7
_DIGAMMA_COEF = (
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
)
# B_{2k} for k = 1..7
_TRIGAMMA_COEF = (
    1.0 / 6.0,
    -1.0 / 30.0,
    1.0 / 42.0,
    -1.0 / 30.0,
    5.0 / 66.0,
    -691.0 / 2730.0,
    7.0 / 6.0,
)


def _checked(x, name):
    arr = np.asarray(x, dtype=float)
    if not (arr > 0).all() or not np.isfinite(arr).all():
        raise DomainError(f"{name} requires finite x > 0")
    return arr


def _out(arr, like):
    return float(arr) if np.ndim(like) == 0 else arr


def _horner(coef, z):
    acc = np.zeros_like(z)
    for c in reversed(coef):
        acc = acc * z + c
    return acc


_STEPS = np.arange(_SHIFT, dtype=float)


def _shifted(x):
    """Return (z, small, terms): z >= _SHIFT and the recurrence terms x + i for shifted entries."""
    small = x < _SHIFT
    z = np.where(small, x + _SHIFT, x)
    terms = x[..., None] + _STEPS
    return z, small, terms


def _log_gamma(x):
    z, small, terms = _shifted(x)
    inv = 1.0 / z
    series = inv * _horner(_LGAMMA_COEF, inv * inv)
    res = (z - 0.5) * np.log(z) - z + _HALF_LOG_2PI + series
    if np.any(small):
        res = res - np.where(small, np.log(np.prod(terms, axis=-1)), 0.0)
    return res


def _digamma(x):
    z, small, terms = _shifted(x)
    inv2 = 1.0 / (z * z)
    res = np.log(z) - 0.5 / z - inv2 * _horner(_DIGAMMA_COEF, inv2)
    if np.any(small):
        res = res - np.where(small, (1.0 / terms).sum(axis=-1), 0.0)
    return res


def _trigamma(x):
    z, small, terms = _shifted(x)
    inv = 1.0 / z
    inv2 = inv * inv
    res = inv + 0.5 * inv2 + inv * inv2 * _horner(_TRIGAMMA_COEF, inv2)
    if np.any(small):
        res = res + np.where(small, (1.0 / (terms * terms)).sum(axis=-1), 0.0)
    return res


def log_gamma(x):
    """Natural logarithm of the Gamma function for x > 0.

    Raises
    ------
    DomainError
        If any element is non-positive or not finite.
    """
    x = _checked(x, "log_gamma")
    return _out(_log_gamma(x), x)


def digamma(x):
    """Digamma function psi(x) = d/dx log Gamma(x) for x > 0."""
    x = _checked(x, "digamma")
    return _out(_digamma(x), x)


def trigamma(x):
    """Trigamma function psi'(x) for x > 0."""
    x = _checked(x, "trigamma")
    return _out(_trigamma(x), x)


def log_beta(a, b):
    """log B(a, b) = log Gamma(a) + log Gamma(b) - log Gamma(a + b)."""
    a = _checked(a, "log_beta")
    b = _checked(b, "log_beta")
    res = (
        np.asarray(log_gamma(a))
        + np.asarray(log_gamma(b))
        - np.asarray(log_gamma(a + b))
    )
    return float(res) if res.ndim == 0 else res
