"""
Benchmark chains with geometric transition rows.

From state ``x`` the next state is ``j >= 0`` with probability
``(1 - p(x))**j * p(x)``, where ``p`` decays slowly in ``x``:

* ``LogP``:    p(x) = 1 / (ln(x + 1) + 10)
* ``LogLogP``: p(x) = 1 / ln(ln(x + 1) + 100)

Logs are natural and are taken at ``x + 1`` so that the start state 0 is
well defined.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .distributions import make_rng
from .errors import DomainError
from .gibbs import TransitionCounts

__all__ = [
    "Variant",
    "GeometricChainSpec",
    "ChainRealization",
    "p_of_state",
    "simulate_chain",
    "count_transitions",
    "true_tpm",
    "mle_tpm",
    "write_chain",
    "read_chain",
    "write_counts",
    "read_counts",
]


class Variant(str, enum.Enum):
    LOGP = "LogP"
    LOGLOGP = "LogLogP"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for v in cls:
            if v.value.lower() == str(value).lower():
                return v
        raise DomainError(f"unknown variant {value!r}; expected LogP or LogLogP")


@dataclass(frozen=True)
class GeometricChainSpec:
    variant: Variant
    length: int
    start_state: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant.parse(self.variant))
        if int(self.length) != self.length or self.length < 2:
            raise DomainError("chain length must be an integer >= 2")
        if int(self.start_state) != self.start_state or self.start_state < 0:
            raise DomainError("start_state must be a non-negative integer")


@dataclass(frozen=True)
class ChainRealization:
    """An observed state sequence; ``max_state`` is derived from ``states``."""

    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states)
        if s.ndim != 1 or s.size == 0:
            raise DomainError("a chain needs at least one state")
        if np.any(s < 0) or np.any(s != np.round(s)):
            raise DomainError("states must be non-negative integers")
        object.__setattr__(self, "states", s.astype(np.int64))

    @property
    def max_state(self):
        return int(self.states.max())

    def __len__(self):
        return self.states.shape[0]


def p_of_state(variant, x):
    """Geometric success probability of the row for state(s) ``x``."""
    variant = Variant.parse(variant)
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise DomainError("states must be non-negative")
    lx = np.log1p(x)
    p = 1.0 / (lx + 10.0) if variant is Variant.LOGP else 1.0 / np.log(lx + 100.0)
    return float(p) if p.ndim == 0 else p


def simulate_chain(spec, rng=None):
    """Simulate ``spec.length`` states starting at ``spec.start_state``.

    Each step inverts the geometric CDF, ``j = floor(log(1-U) / log(1-p))``,
    so one uniform is consumed per transition.
    """
    rng = make_rng(spec.seed) if rng is None else rng
    n = spec.length
    u = rng.random(n - 1)
    log_tail = np.log1p(-u).tolist()
    out = [spec.start_state]
    x = spec.start_state
    is_logp = spec.variant is Variant.LOGP
    log1p, log = math.log1p, math.log
    for lt in log_tail:
        lx = log1p(x)
        p = 1.0 / (lx + 10.0) if is_logp else 1.0 / log(lx + 100.0)
        x = int(lt // log1p(-p))
        out.append(x)
    return ChainRealization(np.array(out, dtype=np.int64))


def count_transitions(chain, d):
    """d x d matrix of one-step transition counts."""
    s = chain.states
    if chain.max_state >= d:
        raise DomainError(f"state {chain.max_state} does not fit in dimension d={d}")
    counts = np.zeros((d, d), dtype=np.int64)
    np.add.at(counts, (s[:-1], s[1:]), 1)
    return TransitionCounts(counts)


def true_tpm(variant, d):
    """Truncated true TPM: entry (i, j) = (1 - p_i)^j p_i, rows not renormalised."""
    if d < 2:
        raise DomainError("d must be >= 2")
    p = np.asarray(p_of_state(variant, np.arange(d)))
    j = np.arange(d)
    return np.exp(j[None, :] * np.log1p(-p)[:, None]) * p[:, None]


def mle_tpm(counts):
    """Row-wise relative frequencies; rows never left fall back to uniform."""
    c = counts.counts.astype(float)
    n = c.sum(axis=1, keepdims=True)
    out = np.full_like(c, 1.0 / counts.d)
    seen = n[:, 0] > 0
    out[seen] = c[seen] / n[seen]
    return out


def write_chain(path, chain):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(f"{s}\n" for s in chain.states.tolist())


def read_chain(path):
    """Inverse of :func:`write_chain` (no validation beyond integer parsing)."""
    return ChainRealization(np.loadtxt(path, dtype=np.int64, ndmin=1))


def write_counts(path, counts, header_lines=()):
    """CSV with a header row of state labels; ``header_lines`` become ``#`` comments."""
    d = counts.d
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(",".join(str(j) for j in range(d)) + "\n")
        for row in counts.counts.tolist():
            fh.write(",".join(str(v) for v in row) + "\n")


def read_counts(path):
    rows = []
    with open(path, encoding="ascii") as fh:
        lines = [ln for ln in fh if not ln.startswith("#") and ln.strip()]
    for ln in lines[1:]:
        rows.append([int(v) for v in ln.strip().split(",")])
    return TransitionCounts(np.array(rows, dtype=np.int64))
