"""
Scoring of estimated transition matrices and the MLE / HSBP / GHSBP
comparison behind the simulation tables.

HSBP is the ``alpha == 1`` special case of GHSBP; the label is derived from
the hyperparameters, never passed in.
"""

import dataclasses
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import gibbs
from .errors import DomainError
from .markov_sim import (
    ChainRealization,
    GeometricChainSpec,
    count_transitions,
    mle_tpm,
    simulate_chain,
    true_tpm,
)

__all__ = [
    "EvalReport",
    "TABLE1_GRID",
    "TABLE2_GRID",
    "REPORT_COLUMNS",
    "mae",
    "method_label",
    "compare_methods",
    "default_workers",
    "format_float",
    "write_reports",
    "read_reports",
]

# (alpha, beta, b0) rows of the two simulation tables, HSBP rows first
TABLE1_GRID = (
    (1, 0.5, 10), (1, 1, 10), (1, 2, 10), (1, 2, 25), (1, 2, 50), (1, 5, 50),
    (2, 0.5, 10), (2, 2, 10), (3, 2, 10), (3, 1, 10), (5, 2, 10), (2, 2, 25),
    (5, 2, 25), (2, 2, 50), (3, 2, 50), (2, 5, 50), (3, 5, 50), (5, 5, 50),
)
TABLE2_GRID = (
    (1, 1, 10), (1, 0.5, 10), (1, 0.1, 5), (1, 0.1, 2), (1, 0.001, 0.1),
    (20, 1, 10), (30, 1, 10), (50, 1, 10), (10, 0.5, 10), (15, 0.5, 10),
    (30, 0.5, 10), (50, 0.5, 10), (10, 0.1, 5), (20, 0.1, 5), (20, 0.1, 2),
    (10, 0.001, 2), (20, 0.001, 2),
)

REPORT_COLUMNS = ("method", "alpha", "beta", "b0", "mae_times_100", "d", "chain_length", "seed")


@dataclass(frozen=True)
class EvalReport:
    method: str
    alpha: float | None
    beta: float | None
    b0: float | None
    mae_times_100: float
    d: int
    chain_length: int
    seed: int

    def __post_init__(self):
        if self.method not in ("MLE", "HSBP", "GHSBP"):
            raise DomainError(f"unknown method {self.method!r}")
        if not self.mae_times_100 >= 0:
            raise DomainError("mae_times_100 must be non-negative")

    @property
    def hyperparams_used(self):
        return None if self.method == "MLE" else (self.alpha, self.beta, self.b0)


def mae(estimate, truth):
    """Mean absolute entrywise difference, averaged over all d^2 entries."""
    a = np.asarray(estimate, dtype=float)
    b = np.asarray(truth, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.abs(a - b).mean())


def method_label(alpha):
    return "HSBP" if alpha == 1 else "GHSBP"


def default_workers():
    """Worker cap: ``REPRO_THREADS`` if set, otherwise the CPU count."""
    env = os.environ.get("REPRO_THREADS")
    if env:
        try:
            n = int(env)
        except ValueError:
            raise DomainError(f"REPRO_THREADS must be an integer, got {env!r}") from None
        if n < 1:
            raise DomainError("REPRO_THREADS must be >= 1")
        return n
    return os.cpu_count() or 1


def _row_seeds(base_seed, n):
    children = np.random.SeedSequence(int(base_seed)).spawn(n)
    return [int(c.generate_state(1, np.uint64)[0]) for c in children]


def _fit(counts, hp):
    return gibbs.run(counts, hp).mean_tpm


def _prepare(chain, variant, truncation_extra):
    d = chain.max_state + 1 + truncation_extra
    if d < 2:
        d = 2
    return count_transitions(chain, d), true_tpm(variant, d), d


def compare_methods(
    chain,
    hp_grid,
    base_seed,
    *,
    variant=None,
    template=None,
    truncation_extra=0,
    workers=1,
    rerun_per_row=False,
    chain_seed=None,
):
    """Score MLE and one Gibbs fit per ``(alpha, beta, b0)`` in ``hp_grid``.

    ``chain`` is either an observed :class:`ChainRealization` (then
    ``variant`` names the generating TPM) or a :class:`GeometricChainSpec`,
    which is simulated here.  ``template`` supplies the MCMC settings shared
    by every fit.  Row ``k`` of the grid runs the sampler with seed
    ``SeedSequence(base_seed).spawn(len(hp_grid))[k]``, so the result does not
    depend on ``workers`` or scheduling.

    With ``rerun_per_row`` (requires a spec) every report, MLE included, is
    scored on its own freshly simulated chain whose seed is spawned from the
    spec seed; otherwise all methods share one realization.

    Returns the reports in order: MLE first, then the grid.
    """
    hp_grid = [tuple(float(v) for v in row) for row in hp_grid]
    if not hp_grid:
        raise DomainError("hp_grid must not be empty")
    template = gibbs.Hyperparams(1.0, 1.0, 1.0) if template is None else template
    if isinstance(chain, GeometricChainSpec):
        spec = chain
        variant = spec.variant
        chain_seed = spec.seed
    else:
        if rerun_per_row:
            raise DomainError("rerun_per_row needs a GeometricChainSpec")
        if variant is None:
            raise DomainError("variant is required for an observed chain")
        spec = None
        chain_seed = 0 if chain_seed is None else chain_seed

    n_jobs = len(hp_grid)
    gibbs_seeds = _row_seeds(base_seed, n_jobs)
    if rerun_per_row:
        chain_seeds = _row_seeds(spec.seed, n_jobs + 1)
        chains = [simulate_chain(dataclasses.replace(spec, seed=s)) for s in chain_seeds]
    else:
        shared = simulate_chain(spec) if spec is not None else chain
        chain_seeds = [chain_seed] * (n_jobs + 1)
        chains = [shared] * (n_jobs + 1)

    prepared = [_prepare(c, variant, truncation_extra) for c in chains]
    counts0, truth0, d0 = prepared[0]
    reports = [
        EvalReport("MLE", None, None, None, 100.0 * mae(mle_tpm(counts0), truth0), d0, len(chains[0]), chain_seeds[0])
    ]

    jobs = []
    for k, (a, b, b0) in enumerate(hp_grid):
        hp = dataclasses.replace(template, alpha=a, beta=b, b0=b0, seed=gibbs_seeds[k])
        jobs.append((prepared[k + 1][0], hp))

    if workers is None:
        workers = default_workers()
    workers = max(1, min(int(workers), n_jobs))
    if workers == 1:
        estimates = [_fit(c, hp) for c, hp in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            estimates = list(pool.map(_fit, *zip(*jobs)))

    for k, ((a, b, b0), est) in enumerate(zip(hp_grid, estimates)):
        counts, truth, d = prepared[k + 1]
        reports.append(
            EvalReport(method_label(a), a, b, b0, 100.0 * mae(est, truth), d, len(chains[k + 1]), chain_seeds[k + 1])
        )
    return reports


def format_float(x):
    """Shortest decimal string that round-trips to the same double."""
    return repr(float(x))


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return format_float(v)
    return str(v)


def write_reports(path, reports, header_lines=()):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(REPORT_COLUMNS) + "\n")
        for r in reports:
            fh.write(",".join(_cell(getattr(r, c)) for c in REPORT_COLUMNS) + "\n")


def read_reports(path):
    out = []
    with open(path, encoding="ascii") as fh:
        lines = [ln.rstrip("\n") for ln in fh if not ln.startswith("#")]
    for ln in lines[1:]:
        m, a, b, b0, v, d, n, s = ln.split(",")
        f = lambda x: None if x == "" else float(x)  # noqa: E731
        out.append(EvalReport(m, f(a), f(b), f(b0), float(v), int(d), int(n), int(s)))
    return out
