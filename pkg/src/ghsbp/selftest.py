"""
Desk-scale verification: quadrature and moment oracles.

The oracles here are deliberately independent of the code they check.  The
tilted Gamma CDF uses ``math.lgamma`` and adaptive quadrature from SciPy,
and the mode comes from Brent's method on SciPy's digamma, so a bug in
:mod:`ghsbp.special` or in the envelope cannot also corrupt the reference.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize, special

from . import distributions as dist
from .special import digamma, log_gamma, trigamma
from .tilted_gamma import sample_tilted_gamma_batch

__all__ = [
    "CheckResult",
    "reference_mode",
    "tilted_gamma_cdf",
    "ks_distance",
    "check_special",
    "check_tilted_gamma",
    "check_moments",
    "run_all",
]

QUAD_TOL = 1e-10


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str

    def line(self):
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def _log_f(d, delta, B, x):
    return -d * math.lgamma(x) + (delta - 1.0) * math.log(x) - B * x


def reference_mode(d, delta, B):
    """Root of -d psi(x) + (delta-1)/x - B = 0 by Brent's method."""
    f = lambda y: -d * special.digamma(math.exp(y)) + (delta - 1.0) / math.exp(y) - B  # noqa: E731
    lo, hi = -700.0, 1.0
    while f(hi) > 0:
        hi *= 2.0
    return math.exp(optimize.brentq(f, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500))


def tilted_gamma_cdf(d, delta, B, points, upper=None):
    """Quadrature-normalised CDF of the tilted Gamma at ``points``.

    The mass on (0, upper] is split at the sorted points and each piece is
    integrated adaptively (relative tolerance 1e-10) with the integrand
    rescaled by its value at the mode, so the pieces add up without
    catastrophic rounding.  ``upper`` defaults to ``mode * 10 + 50``.
    """
    mode = reference_mode(d, delta, B)
    upper = mode * 10.0 + 50.0 if upper is None else upper
    shift = _log_f(d, delta, B, mode)
    f = lambda x: math.exp(_log_f(d, delta, B, x) - shift) if x > 0 else 0.0  # noqa: E731
    pts = np.asarray(points, dtype=float)
    order = np.argsort(pts)
    grid = np.concatenate([[0.0], np.clip(pts[order], 0.0, upper), [upper]])
    pieces = np.empty(grid.size - 1)
    for k in range(grid.size - 1):
        a, b = grid[k], grid[k + 1]
        if b <= a:
            pieces[k] = 0.0
            continue
        brk = [mode] if a < mode < b else None
        pieces[k] = integrate.quad(f, a, b, epsrel=QUAD_TOL, epsabs=0.0, limit=200, points=brk)[0]
    cum = np.cumsum(pieces)
    out = np.empty(pts.size)
    out[order] = cum[:-1] / cum[-1]
    return out


def ks_distance(draws, cdf_values):
    """Two-sided KS statistic of ``draws`` against CDF values at those draws."""
    order = np.argsort(draws)
    F = np.asarray(cdf_values)[order]
    n = F.size
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - F), np.max(F - (i - 1) / n)))


def check_special():
    xs = np.concatenate([np.geomspace(1e-6, 1e6, 61), [0.5, 1.0, 2.0, 3.5]])
    ref_lg = special.gammaln(xs)
    err_lg = np.abs(log_gamma(xs) - ref_lg) / np.maximum(1.0, np.abs(ref_lg))
    ref_dg = special.digamma(xs)
    err_dg = np.abs(digamma(xs) - ref_dg) / np.maximum(1.0, np.abs(ref_dg))
    ref_tg = special.polygamma(1, xs)
    err_tg = np.abs(trigamma(xs) - ref_tg) / np.maximum(1.0, np.abs(ref_tg))
    worst = max(err_lg.max(), err_dg.max(), err_tg.max())
    return [
        CheckResult(
            "special functions vs SciPy on [1e-6, 1e6]",
            bool(err_lg.max() <= 1e-12 and err_dg.max() <= 1e-10 and err_tg.max() <= 1e-10),
            f"worst scaled error {worst:.2e}",
        )
    ]


SELFTEST_CASES = ((1, 1.0, 1.0), (1, 2.0, 1.0), (5, 0.5, 10.0), (5, 2.0, -3.0), (100, 1.0, 50.0))


def check_tilted_gamma(n_draws=20000, seed=20240601, N=2, cases=SELFTEST_CASES):
    res = []
    rng = dist.make_rng(seed)
    for d, delta, B in cases:
        draws, props = sample_tilted_gamma_batch(rng, d, np.full(n_draws, delta), np.full(n_draws, B), N)
        ks = ks_distance(draws, tilted_gamma_cdf(d, delta, B, draws))
        res.append(
            CheckResult(
                f"tilted Gamma (d={d}, delta={delta:g}, B={B:g}) vs quadrature CDF",
                ks < 0.02,
                f"KS={ks:.4f} over {n_draws} draws, acceptance {1.0 / props.mean():.3f}",
            )
        )
    return res


def _within(mc, exact, se, k=4.0):
    z = np.abs(mc - exact) / se
    return bool(np.all(z <= k)), float(np.max(z))


def check_moments(n_draws=200000, seed=7):
    rng = dist.make_rng(seed)
    out = []

    conc = np.array([2.0, 3.0, 5.0])
    x = dist.sample_dirichlet(rng, conc, size=n_draws)
    mean, var, _ = dist.dirichlet_moments(conc)
    ok, z = _within(x.mean(0), mean, np.sqrt(var / n_draws))
    out.append(CheckResult("Dirichlet(2,3,5) means", ok, f"max |z| = {z:.2f}"))

    gd = dist.GDParams((2.0, 3.0, 1.5), (4.0, 5.0, 2.5))
    y = dist.sample_gd(rng, gd, size=n_draws)
    mean, var, cov = dist.gd_moments(gd)
    ok1, z1 = _within(y.mean(0), mean, np.sqrt(var / n_draws))
    c = np.cov(y.T)
    se_c = np.sqrt((var[:, None] * var[None, :] + cov**2) / n_draws)
    ok2, z2 = _within(c, cov, se_c)
    out.append(CheckResult("generalized Dirichlet means and covariances", ok1 and ok2, f"max |z| = {max(z1, z2):.2f}"))

    gg = dist.GGEMParams(2.0, 2.0, 4)
    g = dist.sample_ggem(rng, gg, size=n_draws)
    mean, var, _ = dist.gd_moments(dist.GDParams((2.0,) * 3, (2.0,) * 3))
    ok, z = _within(g[:, :3].mean(0), mean, np.sqrt(var / n_draws))
    out.append(CheckResult("GGEM(2,2) truncated to 4 atoms, means", ok, f"max |z| = {z:.2f}"))

    gamma = np.array([0.4, 0.3, 0.2, 0.1])
    r = dist.sample_row_stickbreaking(rng, 3.0, gamma, size=n_draws)
    mean, var, _ = dist.dirichlet_moments(3.0 * gamma)
    ok, z = _within(r.mean(0), mean, np.sqrt(var / n_draws))
    out.append(CheckResult("row stick-breaking vs Dirichlet(alpha0 gamma) means", ok, f"max |z| = {z:.2f}"))
    return out


def run_all(emit=print):
    """Run every check, emit one line per check, return True iff all passed."""
    results = check_special() + check_tilted_gamma() + check_moments()
    for r in results:
        emit(r.line())
    passed = sum(r.passed for r in results)
    emit(f"{passed}/{len(results)} checks passed")
    return passed == len(results)
