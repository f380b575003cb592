"""
Exact rejection sampler for the tilted Gamma density

    f(x)  proportional to  Gamma(x)^(-d) x^(delta - 1) exp(-B x),   x > 0.

For d >= 1 the log-density ``h(x)`` is strictly concave, so tangent lines
at any set of knots give a piecewise-exponential upper envelope.  The
envelope uses 2N+2 knots around the mode: a flat (uniform) piece at the
mode, exponential pieces elsewhere, and an exponential tail with negative
slope that makes the cover integrable.

Every quantity that can overflow (segment masses, the acceptance ratio) is
kept in log space.  The batched functions (``find_modes``,
``build_covers``, ``sample_tilted_gamma_batch``) operate on arrays of
parameters at once and are what the Gibbs sampler uses; the scalar
functions are thin wrappers around them.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import (
    BracketError,
    DegenerateKnotError,
    DomainError,
    EnvelopeViolation,
    ProposalLimitError,
)
from .special import EULER_GAMMA, _digamma, _log_gamma, _trigamma

__all__ = [
    "TiltedGammaParams",
    "CoverDensity",
    "log_target",
    "log_target_derivative",
    "log_target_second_derivative",
    "find_mode",
    "find_modes",
    "build_cover",
    "build_covers",
    "log_envelope",
    "segment_cdf",
    "segment_inverse_cdf",
    "sample_cover",
    "sample_tilted_gamma",
    "sample_tilted_gamma_batch",
]

MODE_LOWER = 1e-10
MODE_TOL = 1e-13
MODE_MAX_ITER = 200
MAX_BRACKET_DOUBLINGS = 200
ZERO_SLOPE = 1e-12
KNOT_SEPARATION = 1e-12
VIOLATION_TOL = 1e-9
MAX_PROPOSALS = 10**6
MAX_BATCH_WIDTH = 1024


@dataclass(frozen=True)
class TiltedGammaParams:
    """Exponent ``d`` on Gamma(x), shape ``delta`` and tilt ``B`` (any sign)."""

    d: int
    delta: float
    B: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise DomainError("d must be an integer >= 1")
        if not (np.isfinite(self.delta) and self.delta > 0):
            raise DomainError("delta must be finite and > 0")
        if not np.isfinite(self.B):
            raise DomainError("B must be finite")


@dataclass(frozen=True)
class CoverDensity:
    """Piecewise-exponential envelope of one or many tilted Gamma targets.

    Arrays carry the segment index on the last axis; a single cover has
    1-D arrays, a batch of covers has 2-D arrays with one row per target.
    ``breakpoints`` has one more entry than ``knots``: segment ``k`` spans
    ``[breakpoints[k], breakpoints[k+1])`` and uses the tangent at
    ``knots[k]``.  ``central`` is the index of the knot at the mode.

    ``tangent_intercepts`` holds c_k = a_k - lam_k m_k, computed with the B
    terms cancelled analytically; every line is evaluated as c_k + lam_k x.
    The point-slope form loses all precision once B m_k reaches ~1e16,
    because a_k and lam_k m_k then carry rounding errors of order one in
    log space that do not cancel.
    """

    knots: np.ndarray
    tangent_values: np.ndarray
    tangent_slopes: np.ndarray
    breakpoints: np.ndarray
    log_segment_masses: np.ndarray
    mixture_weights: np.ndarray
    central: int
    tangent_intercepts: np.ndarray

    @property
    def n_segments(self):
        return self.knots.shape[-1]

    @property
    def log_mass(self):
        """log of the total envelope mass."""
        return logsumexp(self.log_segment_masses, axis=-1)


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)):
        raise DomainError("tilted Gamma log-density needs x > 0")
    return x


def _scalar(res):
    res = np.asarray(res)
    return float(res) if res.ndim == 0 else res


def _h(d, delta, B, x):
    return -d * _log_gamma(x) + (delta - 1.0) * np.log(x) - B * x


def _dh(d, delta, B, x):
    return -d * _digamma(x) + (delta - 1.0) / x - B


def _intercept(d, delta, x):
    # h(x) - x h'(x); the -Bx terms cancel exactly
    return -d * _log_gamma(x) + (delta - 1.0) * (np.log(x) - 1.0) + d * x * _digamma(x)


def _d2h(d, delta, x):
    return -d * _trigamma(x) - (delta - 1.0) / (x * x)


def log_target(params, x):
    """Unnormalised log-density -d log Gamma(x) + (delta - 1) log x - B x."""
    x = _check_x(x)
    return _scalar(_h(params.d, params.delta, params.B, x))


def log_target_derivative(params, x):
    """First derivative -d psi(x) + (delta - 1)/x - B."""
    x = _check_x(x)
    return _scalar(_dh(params.d, params.delta, params.B, x))


def log_target_second_derivative(params, x):
    """Second derivative -d psi'(x) - (delta - 1)/x^2 (negative for d >= 1)."""
    x = _check_x(x)
    return _scalar(_d2h(params.d, params.delta, x))


def _upper_bracket(d, B):
    # B = 0 follows the B > 0 rule
    return np.where(B >= 0, 1.5, np.exp(np.minimum(1.0 - B / d, 700.0)))


def find_modes(d, delta, B):
    """Modes of many tilted Gamma densities at once.

    Solves h'(x) = 0 by safeguarded Newton iteration in log x, falling back
    to geometric bisection whenever a Newton step leaves the bracket.  The
    initial bracket is [1e-10, U] with U = 1.5 for B >= 0 and
    exp(1 - B/d) for B < 0; U is doubled while h'(U) >= 0, since the
    nominal bound does not hold when delta > 1, and the lower end shrinks
    while h'(lower) <= 0.

    Raises
    ------
    BracketError
        If no sign change is found after expanding the bracket.
    """
    d, delta, B = np.broadcast_arrays(
        np.asarray(d, dtype=float), np.asarray(delta, dtype=float), np.asarray(B, dtype=float)
    )
    d, delta, B = d.ravel(), delta.ravel(), B.ravel()
    lo = np.full(d.shape, MODE_LOWER)
    # very large tilts push the mode below the nominal lower end
    for _ in range(MAX_BRACKET_DOUBLINGS):
        bad = ~(_dh(d, delta, B, lo) > 0)
        if not np.any(bad) or lo.min() < 1e-290:
            break
        lo = np.where(bad, lo * 1e-4, lo)
    if np.any(bad):
        i = int(np.flatnonzero(bad)[0])
        raise BracketError(
            f"h'({MODE_LOWER}) <= 0 for d={d[i]:g}, delta={delta[i]:g}, B={B[i]:g}"
        )
    hi = _upper_bracket(d, B)
    for _ in range(MAX_BRACKET_DOUBLINGS):
        open_ = _dh(d, delta, B, hi) >= 0
        if not np.any(open_):
            break
        lo = np.where(open_, hi, lo)
        hi = np.where(open_, 2.0 * hi, hi)
    else:
        i = int(np.flatnonzero(open_)[0])
        raise BracketError(
            f"no sign change of h' for d={d[i]:g}, delta={delta[i]:g}, B={B[i]:g}"
        )

    ylo, yhi = np.log(lo), np.log(hi)
    # start from the small-x root of (d + delta - 1)/x + d*euler - B = 0
    slope0 = B - d * EULER_GAMMA
    with np.errstate(divide="ignore", invalid="ignore"):
        guess = np.log((d + delta - 1.0) / slope0)
    inside = np.isfinite(guess) & (slope0 > 0) & (guess > ylo) & (guess < yhi)
    y = np.where(inside, guess, 0.5 * (ylo + yhi))
    # h' is a difference of terms of size |B|, d|psi| and |delta-1|/x, so the
    # tolerance is taken relative to their magnitude; at large B the absolute
    # value of h' cannot get below the rounding noise of B
    idx = np.arange(d.shape[0])
    for _ in range(MODE_MAX_ITER):
        x = np.exp(y[idx])
        dd, de, bb = d[idx], delta[idx], B[idx]
        psi = _digamma(x)
        g = -dd * psi + (de - 1.0) / x - bb
        scale = np.maximum(1.0, np.abs(bb) + dd * np.abs(psi) + np.abs(de - 1.0) / x)
        lo_i, hi_i = ylo[idx], yhi[idx]
        done = (np.abs(g) < MODE_TOL * scale) | (hi_i - lo_i <= 4e-16 * np.maximum(1.0, np.abs(y[idx])))
        keep = ~done
        if not np.any(keep):
            break
        idx, x, g = idx[keep], x[keep], g[keep]
        yi = y[idx]
        pos = g > 0
        ylo[idx] = np.where(pos, yi, ylo[idx])
        yhi[idx] = np.where(pos, yhi[idx], yi)
        dg = _d2h(d[idx], delta[idx], x) * x
        with np.errstate(divide="ignore", invalid="ignore"):
            step = yi - g / dg
        ok = np.isfinite(step) & (step > ylo[idx]) & (step < yhi[idx])
        y[idx] = np.where(ok, step, 0.5 * (ylo[idx] + yhi[idx]))
    return np.exp(y)


def find_mode(params):
    """Mode of a single tilted Gamma density (see :func:`find_modes`)."""
    return float(find_modes(params.d, params.delta, params.B)[0])


def _place_knots(mode, B, d, N):
    """2N+2 knots per row: mode/2, N-1 equidistant, mode, N-1 equidistant, penultimate, last."""
    last = np.where(B >= 0, mode + 1.5, np.exp(np.minimum(1.0 - B / d, 700.0)))
    # the nominal B < 0 last knot can fall left of a mode found after bracket expansion
    last = np.where(last > mode * (1.0 + 1e-6), last, mode + np.maximum(1.5, mode))
    first = 0.5 * mode
    penult = 0.5 * (mode + last)
    frac = np.arange(1, N) / N
    left = first[:, None] + (mode - first)[:, None] * frac
    right = mode[:, None] + (penult - mode)[:, None] * frac
    knots = np.concatenate(
        [first[:, None], left, mode[:, None], right, penult[:, None], last[:, None]], axis=1
    )
    gaps = np.diff(knots, axis=1) <= KNOT_SEPARATION * knots[:, 1:]
    tight = gaps.any(axis=1)
    if np.any(tight):
        # spread the left half multiplicatively: mode * 2^(k - N), k = 0..N
        factors = 2.0 ** (np.arange(N + 1) - N)
        knots[tight, : N + 1] = mode[tight, None] * factors
        gaps = np.diff(knots, axis=1) <= KNOT_SEPARATION * knots[:, 1:]
        if np.any(gaps.any(axis=1)):
            i = int(np.flatnonzero(gaps.any(axis=1))[0])
            raise DegenerateKnotError(f"knots collide at mode={mode[i]!r}")
    return knots


def _log_segment_masses(c, lam, lo, hi, central):
    """log of the integral of exp(c + lam x) over [lo, hi)."""
    width = hi - lo
    flat = np.abs(lam) < ZERO_SLOPE
    flat[:, central] = True
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        at_hi = c + lam * hi
        at_lo = c + lam * lo
        # anchor at the larger end so the exponent never overflows
        up = at_hi + np.log(-np.expm1(-lam * width)) - np.log(lam)
        down = at_lo + np.log(-np.expm1(lam * width)) - np.log(-lam)
        level = c + np.log(width)
        res = np.where(flat, level, np.where(lam > 0, up, down))
    return np.where(width > 0, res, -np.inf)


def build_covers(d, delta, B, N):
    """Envelopes for many tilted Gamma targets; returns a batched CoverDensity."""
    N = int(N)
    if N < 1:
        raise DomainError("knot parameter N must be >= 1")
    d, delta, B = np.broadcast_arrays(
        np.asarray(d, dtype=float), np.asarray(delta, dtype=float), np.asarray(B, dtype=float)
    )
    d, delta, B = d.ravel(), delta.ravel(), B.ravel()
    mode = find_modes(d, delta, B)
    knots = _place_knots(mode, B, d, N)
    dd, de, bb = d[:, None], delta[:, None], B[:, None]
    a = _h(dd, de, bb, knots)
    lam = _dh(dd, de, bb, knots)
    lam[:, N] = 0.0
    c = _intercept(dd, de, knots)
    c[:, N] = a[:, N]
    with np.errstate(divide="ignore", invalid="ignore"):
        q = (c[:, 1:] - c[:, :-1]) / (lam[:, :-1] - lam[:, 1:])
    # any tangent bounds a concave function, so clipping q into the knot gap
    # keeps the envelope valid when the intersection is ill-conditioned
    mid = 0.5 * (knots[:, :-1] + knots[:, 1:])
    q = np.where(np.isfinite(q), q, mid)
    q = np.clip(q, knots[:, :-1], knots[:, 1:])
    n = d.shape[0]
    bp = np.concatenate([np.zeros((n, 1)), q, np.full((n, 1), np.inf)], axis=1)
    if np.any(lam[:, -1] >= 0):
        raise DegenerateKnotError("last tangent slope is not negative; cover has infinite mass")
    logm = _log_segment_masses(c, lam, bp[:, :-1], bp[:, 1:], N)
    weights = np.exp(logm - logsumexp(logm, axis=1, keepdims=True))
    # log masses near 1e7 (delta ~ 1e6) leave ~1e-9 relative error in each weight
    weights /= weights.sum(axis=1, keepdims=True)
    return CoverDensity(knots, a, lam, bp, logm, weights, N, c)


def _row(cover, i):
    return CoverDensity(
        cover.knots[i],
        cover.tangent_values[i],
        cover.tangent_slopes[i],
        cover.breakpoints[i],
        cover.log_segment_masses[i],
        cover.mixture_weights[i],
        cover.central,
        cover.tangent_intercepts[i],
    )


def build_cover(params, N):
    """Envelope of a single tilted Gamma target."""
    return _row(build_covers(params.d, params.delta, params.B, N), 0)


def _is_flat(cover, k):
    lam = cover.tangent_slopes[k]
    return (np.abs(lam) < ZERO_SLOPE) | (k == cover.central), lam


def log_envelope(cover, x):
    """Evaluate the log-envelope nu(x) of a single cover at points ``x``."""
    x = np.asarray(x, dtype=float)
    k = np.clip(np.searchsorted(cover.breakpoints, x, side="right") - 1, 0, cover.n_segments - 1)
    return _scalar(cover.tangent_intercepts[k] + cover.tangent_slopes[k] * x)


def _segment_inverse(lam, lo, hi, u, flat):
    width = hi - lo
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        up = hi + np.log(u + (1.0 - u) * np.exp(-lam * width)) / lam
        down = lo + np.log((1.0 - u) + u * np.exp(lam * width)) / lam
        uni = lo + u * width
        s = np.where(flat, uni, np.where(lam > 0, up, down))
    return np.clip(s, lo, np.nextafter(hi, -np.inf))


def segment_inverse_cdf(cover, k, u):
    """Inverse CDF of the normalised segment ``k`` of a single cover."""
    lo, hi = cover.breakpoints[k], cover.breakpoints[k + 1]
    flat, lam = _is_flat(cover, k)
    return _scalar(_segment_inverse(lam, lo, hi, np.asarray(u, dtype=float), flat))


def segment_cdf(cover, k, x):
    """CDF of the normalised segment ``k`` of a single cover."""
    lo, hi = cover.breakpoints[k], cover.breakpoints[k + 1]
    flat, lam = _is_flat(cover, k)
    x = np.clip(np.asarray(x, dtype=float), lo, hi)
    if flat:
        return _scalar((x - lo) / (hi - lo))
    if lam > 0:
        # G(x) = (e^{lam x} - e^{lam lo}) / (e^{lam hi} - e^{lam lo}), anchored at hi
        res = (np.exp(lam * (x - hi)) - np.exp(-lam * (hi - lo))) / -np.expm1(-lam * (hi - lo))
    else:
        res = np.expm1(lam * (x - lo)) / np.expm1(lam * (hi - lo))
    return _scalar(res)


def _violation_tol(d, delta, B, s):
    # h and nu are sums of terms that can reach 1e7 in magnitude, whose
    # rounding alone exceeds the absolute tolerance
    with np.errstate(divide="ignore", invalid="ignore"):
        size = d * np.abs(_log_gamma(s)) + np.abs((delta - 1.0) * np.log(s)) + np.abs(B * s)
    return VIOLATION_TOL + 16.0 * np.finfo(float).eps * np.where(s > 0, size, 0.0)


def _draw_from_covers(rng, cover, rows):
    """One proposal per listed row of a batched cover; returns (s, log envelope at s)."""
    cw = np.cumsum(cover.mixture_weights[rows], axis=1)
    u = rng.random(rows.shape[0])
    k = np.minimum((u[:, None] >= cw).sum(axis=1), cover.n_segments - 1)
    # round-off in the cumulative weights can select an empty segment
    w_k = cover.mixture_weights[rows, k]
    if np.any(w_k == 0):
        k = np.where(w_k == 0, np.argmax(cover.mixture_weights[rows], axis=1), k)
    lam = cover.tangent_slopes[rows, k]
    lo = cover.breakpoints[rows, k]
    hi = cover.breakpoints[rows, k + 1]
    flat = (np.abs(lam) < ZERO_SLOPE) | (k == cover.central)
    s = _segment_inverse(lam, lo, hi, rng.random(rows.shape[0]), flat)
    nu = cover.tangent_intercepts[rows, k] + lam * s
    return s, nu, k


def sample_cover(rng, cover, size=None):
    """Exact draw(s) from the normalised envelope of a single cover."""
    n = 1 if size is None else int(size)
    batched = CoverDensity(
        np.broadcast_to(cover.knots, (n, cover.n_segments)),
        np.broadcast_to(cover.tangent_values, (n, cover.n_segments)),
        np.broadcast_to(cover.tangent_slopes, (n, cover.n_segments)),
        np.broadcast_to(cover.breakpoints, (n, cover.n_segments + 1)),
        np.broadcast_to(cover.log_segment_masses, (n, cover.n_segments)),
        np.broadcast_to(cover.mixture_weights, (n, cover.n_segments)),
        cover.central,
        np.broadcast_to(cover.tangent_intercepts, (n, cover.n_segments)),
    )
    s, _, _ = _draw_from_covers(rng, batched, np.arange(n))
    return float(s[0]) if size is None else s


def sample_tilted_gamma_batch(rng, d, delta, B, N, cover=None):
    """One exact draw from each tilted Gamma target in a batch.

    Returns
    -------
    draws : ndarray
        Accepted samples, one per parameter row.
    proposals : ndarray of int
        Number of envelope proposals used for each draw.

    Raises
    ------
    EnvelopeViolation
        If the target exceeds the envelope by more than 1e-9 in log space,
        widened by the rounding bound of the terms once they exceed ~1e6.
    ProposalLimitError
        If a draw needs more than 10^6 proposals.
    """
    if cover is None:
        cover = build_covers(d, delta, B, N)
    d, delta, B = (
        np.broadcast_to(np.asarray(v, dtype=float), cover.knots.shape[:1]) for v in (d, delta, B)
    )
    n = cover.knots.shape[0]
    draws = np.empty(n)
    proposals = np.zeros(n, dtype=np.int64)
    active = np.arange(n)
    width = 1
    while active.size:
        # `width` proposals per pending row, examined in order; keeping the
        # first acceptance is the same as proposing one at a time
        rows = np.repeat(active, width)
        s, nu, _ = _draw_from_covers(rng, cover, rows)
        log_u = np.log1p(-rng.random(rows.size))
        pos = s > 0
        h = np.full(rows.size, -np.inf)
        h[pos] = _h(d[rows][pos], delta[rows][pos], B[rows][pos], s[pos])
        gap = h - nu
        if np.any(gap > VIOLATION_TOL) and np.any(gap > _violation_tol(d[rows], delta[rows], B[rows], s)):
            i = rows[int(np.argmax(gap))]
            raise EnvelopeViolation(
                f"log f - log g = {gap.max():.3g} at d={d[i]:g}, delta={delta[i]:g}, B={B[i]:g}"
            )
        accept = (log_u <= gap).reshape(active.size, width)
        hit = accept.any(axis=1)
        first = np.argmax(accept, axis=1)
        proposals[active] += np.where(hit, first + 1, width)
        draws[active[hit]] = s.reshape(active.size, width)[hit, first[hit]]
        active = active[~hit]
        if active.size and proposals[active].max() >= MAX_PROPOSALS:
            i = active[int(np.argmax(proposals[active]))]
            raise ProposalLimitError(
                f"{MAX_PROPOSALS} proposals rejected for d={d[i]:g}, delta={delta[i]:g}, B={B[i]:g}"
            )
        width = min(2 * width, MAX_BATCH_WIDTH)
    return draws, proposals


def sample_tilted_gamma(rng, params, N):
    """One exact draw from a single tilted Gamma target.

    Returns
    -------
    (draw, proposals) : (float, int)
    """
    draws, proposals = sample_tilted_gamma_batch(rng, params.d, params.delta, params.B, N)
    return float(draws[0]), int(proposals[0])
