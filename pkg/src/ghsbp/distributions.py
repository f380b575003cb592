"""
Seeded variate generation and closed-form moments for Gamma, Beta,
Dirichlet, Generalized Dirichlet (Connor-Mosimann) and finite GGEM
stick-breaking weights.

Random streams are ``numpy.random.Generator`` objects backed by PCG64.
Independent sub-streams are derived with :func:`spawn_rngs`, which uses
``numpy.random.SeedSequence.spawn``: child ``k`` of seed ``s`` is keyed by
the spawn key ``(k,)`` under the entropy ``s``, so sub-streams are disjoint
by construction and stable across runs.

Gamma variates are produced in log space so that very small shapes (which
the Gibbs updates produce routinely) neither underflow to zero nor poison
downstream logarithms.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError
from .special import log_beta

__all__ = [
    "RngStream",
    "make_rng",
    "spawn_rngs",
    "GDParams",
    "GGEMParams",
    "sample_log_gamma",
    "sample_gamma",
    "sample_beta",
    "sample_dirichlet",
    "sample_log_dirichlet",
    "sample_gd",
    "gd_moments",
    "gd_log_density",
    "dirichlet_moments",
    "sample_ggem",
    "sample_row_stickbreaking",
]

RngStream = np.random.Generator

BETA_CLAMP = 1e-15
STICK_FLOOR = 1e-12
_TINY = np.finfo(float).tiny


def make_rng(seed):
    """Return a PCG64-backed generator for a 64-bit seed (or SeedSequence)."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed))))


def spawn_rngs(seed, n):
    """Derive ``n`` independent generators from ``seed``.

    Child ``k`` is always the same stream for the same ``(seed, k)``, so a
    worker that owns lane ``k`` reproduces exactly regardless of scheduling.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(int(seed))
    return [np.random.Generator(np.random.PCG64(child)) for child in ss.spawn(n)]


def _positive(value, name):
    arr = np.asarray(value, dtype=float)
    if arr.size == 0 or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and strictly positive")
    return arr


def _shape_of(size, *arrays):
    """Output shape: ``size`` replicate dimensions prepended to the parameter shape."""
    base = np.broadcast_shapes(*(np.shape(a) for a in arrays))
    if size is None:
        return base
    size = (int(size),) if np.ndim(size) == 0 else tuple(size)
    return size + base


def sample_log_gamma(rng, shape, size=None):
    """Draw ``log X`` with ``X ~ Gamma(shape, 1)``.

    Shapes below one use the boost identity
    ``X = Y * U**(1/shape)`` with ``Y ~ Gamma(shape + 1, 1)``, evaluated
    as ``log Y + log(U) / shape`` so the result stays finite.
    """
    shape = _positive(shape, "shape")
    out_shape = _shape_of(size, shape)
    shape = np.broadcast_to(shape, out_shape)
    small = shape < 1.0
    boosted = np.where(small, shape + 1.0, shape)
    log_y = np.log(rng.standard_gamma(boosted, size=out_shape))
    # 1 - random() lies in (0, 1], so the log is finite
    log_u = np.log1p(-rng.random(size=out_shape))
    res = np.where(small, log_y + log_u / shape, log_y)
    return float(res) if res.ndim == 0 else res


def sample_gamma(rng, shape, rate=1.0, size=None):
    """Draw from Gamma(shape, rate) with density proportional to x^(shape-1) e^(-rate x).

    Results are floored at the smallest normal double, so they are strictly
    positive even when the exact variate would underflow.
    """
    rate = _positive(rate, "rate")
    shape = _positive(shape, "shape")
    out_shape = _shape_of(size, shape, rate)
    log_x = np.asarray(sample_log_gamma(rng, np.broadcast_to(shape, out_shape)))
    res = np.maximum(np.exp(log_x - np.log(rate)), _TINY)
    return float(res) if res.ndim == 0 else res


def sample_beta(rng, a, b, size=None):
    """Draw from Beta(a, b), clamped into [1e-15, 1 - 1e-15]."""
    a = _positive(a, "a")
    b = _positive(b, "b")
    out_shape = _shape_of(size, a, b)
    la = np.asarray(sample_log_gamma(rng, np.broadcast_to(a, out_shape)))
    lb = np.asarray(sample_log_gamma(rng, np.broadcast_to(b, out_shape)))
    # X / (X + Y) = 1 / (1 + exp(log Y - log X))
    res = 0.5 * (1.0 + np.tanh(0.5 * (la - lb)))
    res = np.clip(res, BETA_CLAMP, 1.0 - BETA_CLAMP)
    return float(res) if res.ndim == 0 else res


def sample_dirichlet(rng, conc, size=None):
    """Draw from Dirichlet(conc) along the last axis.

    ``conc`` may be a matrix, in which case each row is an independent
    Dirichlet with its own concentration (this is how whole transition
    matrices are redrawn).  Normalisation happens in log space through
    log-sum-exp, so the normaliser cannot underflow; components that would
    underflow are floored at the smallest normal double and the vector is
    renormalised.
    """
    conc = _positive(conc, "conc")
    if conc.ndim == 0 or conc.shape[-1] < 2:
        raise DomainError("Dirichlet needs at least two components")
    out_shape = _shape_of(size, conc)
    lg = np.asarray(sample_log_gamma(rng, np.broadcast_to(conc, out_shape)))
    top = lg.max(axis=-1, keepdims=True)
    x = np.exp(lg - top)
    x /= x.sum(axis=-1, keepdims=True)
    if np.any(x < _TINY):
        x = np.maximum(x, _TINY)
        x /= x.sum(axis=-1, keepdims=True)
    return x


def sample_log_dirichlet(rng, conc, size=None):
    """Log of a Dirichlet(conc) draw along the last axis, exact even where the
    probabilities themselves would underflow."""
    conc = _positive(conc, "conc")
    if conc.ndim == 0 or conc.shape[-1] < 2:
        raise DomainError("Dirichlet needs at least two components")
    out_shape = _shape_of(size, conc)
    lg = np.asarray(sample_log_gamma(rng, np.broadcast_to(conc, out_shape)))
    return lg - logsumexp(lg, axis=-1, keepdims=True)


def dirichlet_moments(conc):
    """Means, variances and covariance matrix of Dirichlet(conc)."""
    conc = _positive(conc, "conc")
    total = conc.sum()
    mean = conc / total
    cov = -np.outer(mean, mean) / (total + 1.0)
    var = mean * (1.0 - mean) / (total + 1.0)
    np.fill_diagonal(cov, var)
    return mean, var, cov


@dataclass(frozen=True)
class GDParams:
    """Parameters (alpha_1..alpha_k; beta_1..beta_k) of a Generalized Dirichlet."""

    alphas: tuple
    betas: tuple

    def __post_init__(self):
        alphas = tuple(float(v) for v in np.atleast_1d(self.alphas))
        betas = tuple(float(v) for v in np.atleast_1d(self.betas))
        if len(alphas) != len(betas) or len(alphas) < 1:
            raise DomainError("alphas and betas must have equal length k >= 1")
        _positive(alphas, "alphas")
        _positive(betas, "betas")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "betas", betas)

    @property
    def k(self):
        return len(self.alphas)

    @property
    def gammas(self):
        """Exponents gamma_i = beta_i - alpha_{i+1} - beta_{i+1}, gamma_k = beta_k - 1."""
        a, b = np.array(self.alphas), np.array(self.betas)
        g = np.empty_like(a)
        g[:-1] = b[:-1] - a[1:] - b[1:]
        g[-1] = b[-1] - 1.0
        return g


@dataclass(frozen=True)
class GGEMParams:
    """Finite GGEM(alpha, beta) truncated to ``dim`` atoms."""

    alpha: float
    beta: float
    dim: int

    def __post_init__(self):
        _positive(self.alpha, "alpha")
        _positive(self.beta, "beta")
        if int(self.dim) != self.dim or self.dim < 2:
            raise DomainError("dim must be an integer >= 2")


def _stick_break(nu):
    """Weights nu_j * prod_{k<j} (1 - nu_k) along the last axis."""
    log_rest = np.cumsum(np.log1p(-nu), axis=-1)
    prefix = np.concatenate(
        [np.zeros(nu.shape[:-1] + (1,)), log_rest[..., :-1]], axis=-1
    )
    return nu * np.exp(prefix), np.exp(log_rest[..., -1])


def sample_gd(rng, params, size=None):
    """Draw (y_1..y_k) ~ GD(params) from independent Beta(alpha_j, beta_j) breaks."""
    a = np.array(params.alphas)
    b = np.array(params.betas)
    out_shape = _shape_of(size, a)
    nu = np.asarray(sample_beta(rng, np.broadcast_to(a, out_shape), np.broadcast_to(b, out_shape)))
    y, _ = _stick_break(nu)
    return y


def gd_moments(params):
    """Closed-form means, variances and covariance matrix of a GD vector.

    Uses ``M_{i-1} = prod_{k<i} (beta_k + 1) / (alpha_k + beta_k + 1)`` with
    the empty product ``M_0 = 1``.
    """
    a = np.array(params.alphas)
    b = np.array(params.betas)
    k = len(a)
    keep = b / (a + b)
    keep2 = (b + 1.0) / (a + b + 1.0)
    prefix = np.concatenate([[1.0], np.cumprod(keep)[:-1]])
    M = np.concatenate([[1.0], np.cumprod(keep2)[:-1]])
    mean = a / (a + b) * prefix
    var = mean * ((a + 1.0) / (a + b + 1.0) * M - mean)
    cov = np.diag(var)
    for i in range(k - 1):
        bracket = a[i] / (a[i] + b[i] + 1.0) * M[i] - mean[i]
        cov[i, i + 1:] = mean[i + 1:] * bracket
        cov[i + 1:, i] = cov[i, i + 1:]
    return mean, var, cov


def gd_log_density(params, y):
    """Log density of GD(params) at points ``y`` (last axis of length k).

    ``prod_i y_i^(alpha_i - 1) (1 - y_1 - ... - y_i)^gamma_i / B(alpha_i, beta_i)``;
    points outside the open region y_i > 0, sum(y) < 1 get -inf.
    """
    a = np.array(params.alphas)
    b = np.array(params.betas)
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != params.k:
        raise DomainError(f"points must have last dimension {params.k}")
    rest = 1.0 - np.cumsum(y, axis=-1)
    inside = np.all(y > 0, axis=-1) & (rest[..., -1] > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = (a - 1.0) * np.log(y) + params.gammas * np.log(rest)
        res = terms.sum(axis=-1) - np.sum(log_beta(a, b))
    return np.where(inside, res, -np.inf)


def sample_ggem(rng, params, size=None):
    """Finite GGEM weights: gamma_j = nu_j prod_{k<j}(1 - nu_k), last = residual stick."""
    out_shape = _shape_of(size, np.empty(params.dim - 1))
    nu = np.asarray(sample_beta(rng, params.alpha, params.beta, size=out_shape))
    head, tail = _stick_break(nu)
    return np.concatenate([head, tail[..., None]], axis=-1)


def sample_row_stickbreaking(rng, alpha0, gamma, size=None):
    """Draw a TPM row by Beta stick-breaking given the global weights.

    Breaks are ``pi'_j ~ Beta(alpha0 gamma_j, alpha0 (1 - sum_{k<=j} gamma_k))``
    for j < d; the remaining stick goes to the last state.  The second Beta
    parameter is floored at 1e-12 because cumulative sums may round to one.
    """
    alpha0 = float(_positive(alpha0, "alpha0"))
    gamma = _positive(gamma, "gamma")
    if gamma.ndim != 1 or gamma.shape[0] < 2:
        raise DomainError("gamma must be a vector of length >= 2")
    # tail sums are more accurate than 1 - cumsum
    tail = np.cumsum(gamma[::-1])[::-1][1:]
    a = alpha0 * gamma[:-1]
    b = np.maximum(alpha0 * tail, STICK_FLOOR)
    out_shape = _shape_of(size, a)
    nu = np.asarray(sample_beta(rng, np.broadcast_to(a, out_shape), np.broadcast_to(b, out_shape)))
    head, rest = _stick_break(nu)
    return np.concatenate([head, rest[..., None]], axis=-1)
