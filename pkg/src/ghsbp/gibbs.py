"""
Blocked Gibbs sampler for the truncated generalized hierarchical
stick-breaking model of a transition matrix.

State per sweep: the d x d matrix ``pi`` (rows on the simplex), the
unnormalised global weights ``t`` (gamma = t / sum(t), alpha0 = sum(t)) and
the auxiliary vectors ``u`` and ``w`` that factorise the conditional of
``t`` into independent tilted Gamma densities.  The scan order is fixed:
pi, u, w, t.

The tilt uses the exact log of each Dirichlet draw.  Flooring pi before
taking logs would bias B_j badly whenever alpha0 is small, because a large
share of the entries of Dirichlet(t) then lies below any fixed floor; the
floored matrix ``pi`` is kept only for reporting.

The stick-breaking suffix terms (t_j + ... + t_d)^(-alpha) of the prior
exist only for j < d, so only w_1..w_{d-1} enter the tilt B_j.  ``w_d`` is
still drawn from Gamma(alpha, t_d) and reported, but it is a free auxiliary
that does not feed back into the chain.
"""

from dataclasses import dataclass, field

import numpy as np

from .distributions import make_rng, sample_gamma, sample_log_dirichlet
from .errors import DomainError, GHSBPError, SweepError
from .tilted_gamma import sample_tilted_gamma_batch

__all__ = [
    "PI_FLOOR",
    "Hyperparams",
    "TransitionCounts",
    "GibbsState",
    "PosteriorSummary",
    "init_state",
    "update_pi",
    "update_u",
    "update_w",
    "tilt_parameters",
    "update_t",
    "sweep",
    "run",
]

PI_FLOOR = 1e-12


@dataclass(frozen=True)
class Hyperparams:
    """Prior and MCMC settings.

    ``beta`` is both the second GGEM parameter and the shape of the
    Gamma(beta, b0) prior on alpha0; that tie is what makes the augmentation
    factorise, so it is not configurable separately.
    """

    alpha: float
    beta: float
    b0: float
    knots_N: int = 2
    num_samples: int = 2000
    burn_in: int = 1000
    thin: int = 1
    seed: int = 0

    def __post_init__(self):
        for name in ("alpha", "beta", "b0"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise DomainError(f"{name} must be finite and > 0")
        if self.knots_N < 1 or self.num_samples < 1 or self.burn_in < 0 or self.thin < 1:
            raise DomainError("need knots_N >= 1, num_samples >= 1, burn_in >= 0, thin >= 1")


@dataclass(frozen=True)
class TransitionCounts:
    """Observed one-step transition counts n_ij on states 0..d-1."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts)
        if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 2:
            raise DomainError("counts must be a square matrix with d >= 2")
        if np.any(c < 0) or np.any(c != np.round(c)):
            raise DomainError("counts must be non-negative integers")
        object.__setattr__(self, "counts", c.astype(np.int64))

    @property
    def d(self):
        return self.counts.shape[0]

    @property
    def row_totals(self):
        return self.counts.sum(axis=1)


@dataclass
class GibbsState:
    """Current draw: ``pi`` (floored rows), its exact ``log_pi``, and t, u, w."""

    pi: np.ndarray
    t: np.ndarray
    u: np.ndarray
    w: np.ndarray
    log_pi: np.ndarray = None

    @property
    def alpha0(self):
        return float(self.t.sum())

    @property
    def gamma(self):
        return self.t / self.t.sum()

    def check(self):
        """Raise GHSBPError if any state invariant is broken."""
        if np.any(np.abs(self.pi.sum(axis=1) - 1.0) > 1e-12) or np.any(self.pi < PI_FLOOR * (1 - 1e-9)):
            raise GHSBPError("pi rows left the floored simplex")
        for name in ("t", "u", "w"):
            v = getattr(self, name)
            if not np.all(np.isfinite(v) & (v > 0)):
                raise GHSBPError(f"{name} must be finite and positive")


@dataclass
class PosteriorSummary:
    """Posterior-mean TPM plus per-sweep diagnostics.

    ``mean_tpm`` is the Rao-Blackwellised posterior mean: the average over
    retained sweeps of E[pi | t, n] = (n_ij + t_j) / (n_i + sum(t)).
    ``draw_mean_tpm`` is the plain average of the retained (floored) pi
    draws.  Both estimate the same matrix, but for a column with no counts
    a Dirichlet component with concentration t_j ~ 1e-5 is almost always
    negligibly small and only rarely large, so the plain average of a few
    thousand draws usually sits at the 1e-12 floor.

    ``diagnostics`` holds arrays over all sweeps (burn-in included):
    ``mean_proposals`` (average tilted-Gamma proposals per t_j draw),
    ``t_min``, ``t_max`` and ``alpha0`` (= sum of t).
    """

    mean_tpm: np.ndarray
    n_retained: int
    draw_mean_tpm: np.ndarray | None = None
    retained_samples: list | None = None
    gamma_trace: np.ndarray | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def acceptance_rate(self):
        return 1.0 / float(np.mean(self.diagnostics["mean_proposals"]))


def _floor_rows(pi):
    pi = np.maximum(pi, PI_FLOOR)
    return pi / pi.sum(axis=1, keepdims=True)


def _set_pi(state, log_pi):
    state.log_pi = log_pi
    state.pi = _floor_rows(np.exp(log_pi))


def _suffix_sums(t):
    return np.cumsum(t[::-1])[::-1]


def update_pi(rng, state, counts):
    """pi_i | t ~ Dirichlet(n_i + t); ``pi`` is floored at 1e-12 and renormalised."""
    _set_pi(state, sample_log_dirichlet(rng, counts.counts + state.t[None, :]))
    return state


def update_u(rng, state):
    """u_i | t ~ Gamma(sum(t), 1), i = 1..d, independently."""
    d = state.t.shape[0]
    state.u = np.asarray(sample_gamma(rng, state.t.sum(), 1.0, size=d))
    return state


def update_w(rng, state, hp):
    """w_j | t ~ Gamma(alpha, t_j + ... + t_d), j = 1..d, independently."""
    state.w = np.asarray(sample_gamma(rng, np.full(state.t.shape, hp.alpha), _suffix_sums(state.t)))
    return state


def tilt_parameters(state, hp):
    """(delta, B) of the tilted Gamma conditionals of t_1..t_d.

    delta_j = alpha for j < d and beta for j = d;
    B_j = b0 + sum_{k <= min(j, d-1)} w_k - sum_i log pi_ij - sum_i log u_i.
    """
    d = state.t.shape[0]
    delta = np.full(d, float(hp.alpha))
    delta[-1] = hp.beta
    w_prefix = np.cumsum(state.w)
    w_prefix[-1] = w_prefix[-2]
    log_pi = np.log(state.pi) if state.log_pi is None else state.log_pi
    B = hp.b0 + w_prefix - log_pi.sum(axis=0) - np.log(state.u).sum()
    return delta, B


def update_t(rng, state, counts, hp, N=None):
    """Redraw every t_j from its tilted Gamma conditional; returns (state, proposals)."""
    N = hp.knots_N if N is None else N
    d = counts.d
    delta, B = tilt_parameters(state, hp)
    try:
        t, proposals = sample_tilted_gamma_batch(rng, d, delta, B, N)
    except GHSBPError as exc:
        raise type(exc)(f"{exc} (d={d}, alpha={hp.alpha}, beta={hp.beta})") from exc
    state.t = t
    return state, proposals


def init_state(rng, counts, hp):
    """t = 1, u and w from their conditionals, pi rows from Dirichlet(n_i + 1)."""
    d = counts.d
    state = GibbsState(pi=None, t=np.ones(d), u=None, w=None)
    _set_pi(state, sample_log_dirichlet(rng, counts.counts + 1.0))
    update_u(rng, state)
    update_w(rng, state, hp)
    return state


def sweep(rng, state, counts, hp):
    """One full scan pi -> u -> w -> t; returns (state, proposals per t_j)."""
    update_pi(rng, state, counts)
    update_u(rng, state)
    update_w(rng, state, hp)
    return update_t(rng, state, counts, hp)


def run(counts, hp, rng=None, keep_samples=False, keep_gamma=False):
    """Run burn_in + num_samples * thin sweeps and summarise the retained draws.

    The point estimate is the entrywise posterior mean, Rao-Blackwellised
    over the retained t (see :class:`PosteriorSummary`).

    Raises
    ------
    SweepError
        Wrapping any failure, with the zero-based sweep index.
    """
    if not isinstance(counts, TransitionCounts):
        counts = TransitionCounts(np.asarray(counts))
    rng = make_rng(hp.seed) if rng is None else rng
    d = counts.d
    total = hp.burn_in + hp.num_samples * hp.thin
    state = init_state(rng, counts, hp)

    acc = np.zeros((d, d))
    acc_rb = np.zeros((d, d))
    n = counts.counts.astype(float)
    n_row = n.sum(axis=1, keepdims=True)
    kept = 0
    samples = [] if keep_samples else None
    gammas = np.empty((hp.num_samples, d)) if keep_gamma else None
    mean_prop = np.empty(total)
    t_min = np.empty(total)
    t_max = np.empty(total)
    alpha0 = np.empty(total)

    for s in range(total):
        try:
            state, proposals = sweep(rng, state, counts, hp)
            state.check()
        except GHSBPError as exc:
            raise SweepError(s, exc) from exc
        mean_prop[s] = proposals.mean()
        t_min[s] = state.t.min()
        t_max[s] = state.t.max()
        alpha0[s] = state.t.sum()
        after = s - hp.burn_in
        if after >= 0 and (after + 1) % hp.thin == 0:
            acc += state.pi
            acc_rb += (n + state.t) / (n_row + state.t.sum())
            if keep_samples:
                samples.append(state.pi.copy())
            if keep_gamma:
                gammas[kept] = state.gamma
            kept += 1

    return PosteriorSummary(
        mean_tpm=acc_rb / kept,
        n_retained=kept,
        draw_mean_tpm=acc / kept,
        retained_samples=samples,
        gamma_trace=gammas,
        diagnostics={
            "mean_proposals": mean_prop,
            "t_min": t_min,
            "t_max": t_max,
            "alpha0": alpha0,
            "burn_in": hp.burn_in,
        },
    )
