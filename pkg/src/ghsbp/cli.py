"""
Command-line entry point.

Settings are resolved in three layers: built-in defaults, then an optional
flat ``key = value`` config file (``--config``), then command-line flags.
Every output file starts with ``#`` lines holding the resolved settings, so
a file is enough to reproduce itself.  No timestamps or host details are
written; identical settings give byte-identical files.
"""

import argparse
import os
import re
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__, evaluation, gibbs, markov_sim, selftest
from .errors import DomainError, GHSBPError, InputError

__all__ = ["RunConfig", "build_parser", "resolve_config", "ingest_sequence", "state_dimension", "main"]

MODES = ("estimate", "simulate", "reproduce-table1", "reproduce-table2", "selftest")

# defaults reproduce the published simulation protocol
DEFAULTS = {
    "mode": None,
    "input": None,
    "output": "ghsbp-out",
    "alpha": 1.0,
    "beta": 1.0,
    "b0": 10.0,
    "knots": 2,
    "samples": 2000,
    "burnin": 1000,
    "thin": 1,
    "seed": 0,
    "chain-length": 200000,
    "variant": "LogP",
    "truncation-extra": 0,
    "scale-length": 1.0,
    "scale-samples": 1.0,
    "rerun-per-row": False,
    "trace": False,
}

_TYPES = {
    "alpha": float, "beta": float, "b0": float, "knots": int, "samples": int, "burnin": int,
    "thin": int, "seed": int, "chain-length": int, "truncation-extra": int,
    "scale-length": float, "scale-samples": float,
}
_BOOL = ("rerun-per-row", "trace")
_INTEGER = re.compile(r"[+-]?[0-9]+")


@dataclass(frozen=True)
class RunConfig:
    mode: str
    input_path: str | None
    output_path: str
    hyperparams: gibbs.Hyperparams
    chain_spec: markov_sim.GeometricChainSpec
    truncation_extra: int
    scale_length: float
    scale_samples: float
    rerun_per_row: bool
    trace: bool
    settings: dict

    def header_lines(self):
        lines = [f"ghsbp {__version__}"]
        # the output location does not affect content, so it stays out
        lines += [f"{k} = {_show(v)}" for k, v in sorted(self.settings.items()) if k != "output"]
        hp = self.hyperparams
        lines.append(
            f"effective: chain_length = {self.chain_spec.length}, samples = {hp.num_samples}, "
            f"burnin = {hp.burn_in}"
        )
        return lines


def _show(v):
    if isinstance(v, float):
        return repr(v)
    return "" if v is None else str(v)


def build_parser():
    p = argparse.ArgumentParser(
        prog="ghsbp",
        description="Transition-matrix estimation under the generalized hierarchical stick-breaking prior.",
    )
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--config", help="flat key = value settings file; flags override it")
    p.add_argument("--input", help="state sequence, one non-negative integer per line")
    p.add_argument("--output", help="output directory")
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--b0", type=float)
    p.add_argument("--knots", type=int, help="envelope knot parameter N (2N+2 knots)")
    p.add_argument("--samples", type=int, help="retained posterior draws M")
    p.add_argument("--burnin", type=int)
    p.add_argument("--thin", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--chain-length", type=int)
    p.add_argument("--variant", choices=[v.value for v in markov_sim.Variant])
    p.add_argument("--truncation-extra", type=int, help="extra never-observed states in the model")
    p.add_argument("--scale-length", type=float, help="multiplier on the simulated chain length")
    p.add_argument("--scale-samples", type=float, help="multiplier on samples and burn-in")
    p.add_argument("--rerun-per-row", action="store_true", default=None, help="fresh chain per table row")
    p.add_argument("--trace", action="store_true", default=None, help="also write retained gamma and alpha0")
    return p


def read_config_file(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"expected key = value, got {raw.strip()!r}", lineno)
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.replace("_", "-")
            if key not in DEFAULTS or key == "config":
                raise InputError(f"unknown setting {key!r}", lineno)
            out[key] = _coerce(key, value, lineno)
    return out


def _coerce(key, value, lineno=None):
    if key in _BOOL:
        low = str(value).lower()
        if low not in ("true", "false", "1", "0", "yes", "no"):
            raise InputError(f"{key} must be a boolean, got {value!r}", lineno)
        return low in ("true", "1", "yes")
    if key in _TYPES:
        try:
            return _TYPES[key](value)
        except ValueError:
            raise InputError(f"{key} must be {_TYPES[key].__name__}, got {value!r}", lineno) from None
    return value


def _scaled(n, factor, minimum):
    if not (factor > 0 and np.isfinite(factor)):
        raise DomainError("scale factors must be finite and > 0")
    return max(minimum, int(round(n * factor)))


def resolve_config(argv=None):
    args = build_parser().parse_args(argv)
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config_file(args.config))
    for key in DEFAULTS:
        value = getattr(args, key.replace("-", "_"), None)
        if value is not None:
            settings[key] = value
    if settings["mode"] is None:
        raise DomainError("--mode is required (on the command line or in the config file)")
    if settings["mode"] not in MODES:
        raise DomainError(f"unknown mode {settings['mode']!r}")
    if settings["mode"] == "estimate" and not settings["input"]:
        raise DomainError("estimate mode requires --input")
    # each table is defined by its generating variant
    if settings["mode"] == "reproduce-table1":
        settings["variant"] = "LogP"
    elif settings["mode"] == "reproduce-table2":
        settings["variant"] = "LogLogP"
    if settings["truncation-extra"] < 0:
        raise DomainError("truncation-extra must be >= 0")

    hp = gibbs.Hyperparams(
        alpha=settings["alpha"],
        beta=settings["beta"],
        b0=settings["b0"],
        knots_N=settings["knots"],
        num_samples=_scaled(settings["samples"], settings["scale-samples"], 1),
        burn_in=_scaled(settings["burnin"], settings["scale-samples"], 0),
        thin=settings["thin"],
        seed=settings["seed"],
    )
    spec = markov_sim.GeometricChainSpec(
        variant=settings["variant"],
        length=_scaled(settings["chain-length"], settings["scale-length"], 2),
        seed=settings["seed"],
    )
    return RunConfig(
        mode=settings["mode"],
        input_path=settings["input"],
        output_path=settings["output"],
        hyperparams=hp,
        chain_spec=spec,
        truncation_extra=settings["truncation-extra"],
        scale_length=settings["scale-length"],
        scale_samples=settings["scale-samples"],
        rerun_per_row=bool(settings["rerun-per-row"]),
        trace=bool(settings["trace"]),
        settings=settings,
    )


def ingest_sequence(path):
    """Read a state sequence: one non-negative decimal integer per line.

    Blank lines and lines starting with ``#`` are skipped.  States need
    not be contiguous.

    Raises
    ------
    InputError
        On an unparsable or negative entry (with its line number) or when the
        file holds no states.
    """
    states = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.strip()
            if not text or text.startswith("#"):
                continue
            # int() alone would also take "1_000" and non-ASCII digits
            if not _INTEGER.fullmatch(text):
                raise InputError(f"not an integer state: {text!r}", lineno)
            value = int(text, 10)
            if value < 0:
                raise InputError(f"negative state {value}", lineno)
            states.append(value)
    if not states:
        raise InputError(f"{path} contains no states")
    return markov_sim.ChainRealization(np.array(states, dtype=np.int64))


def state_dimension(chain, truncation_extra=0):
    """Model dimension: max state + 1 + truncation_extra, at least 2."""
    return max(2, chain.max_state + 1 + int(truncation_extra))


def _write_matrix(path, mat, header):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        fh.write(",".join(str(j) for j in range(mat.shape[1])) + "\n")
        for row in mat:
            fh.write(",".join(evaluation.format_float(v) for v in row) + "\n")


def _summary(x):
    q = np.quantile(x, [0.05, 0.5, 0.95])
    return (
        f"mean {evaluation.format_float(np.mean(x))}, sd {evaluation.format_float(np.std(x))}, "
        f"q05 {evaluation.format_float(q[0])}, median {evaluation.format_float(q[1])}, "
        f"q95 {evaluation.format_float(q[2])}"
    )


def _diagnostics_text(summary, d, n_transitions):
    dg = summary.diagnostics
    burn = dg["burn_in"]
    post = slice(burn, None)
    lines = [
        f"d = {d}",
        f"transitions = {n_transitions}",
        f"retained draws = {summary.n_retained}",
        f"sweeps = {len(dg['mean_proposals'])} (burn-in {burn})",
        f"tilted Gamma acceptance rate = {evaluation.format_float(summary.acceptance_rate)}",
        f"proposals per t_j draw, all sweeps: {_summary(dg['mean_proposals'])}",
        f"alpha0 = sum(t), post burn-in: {_summary(dg['alpha0'][post])}",
        f"min t over sweeps = {evaluation.format_float(dg['t_min'].min())}",
        f"max t over sweeps = {evaluation.format_float(dg['t_max'].max())}",
    ]
    return "\n".join(lines) + "\n"


def run_estimate(cfg):
    chain = ingest_sequence(cfg.input_path)
    d = state_dimension(chain, cfg.truncation_extra)
    counts = markov_sim.count_transitions(chain, d)
    summary = gibbs.run(counts, cfg.hyperparams, keep_gamma=cfg.trace)
    header = cfg.header_lines()
    out = cfg.output_path
    _write_matrix(os.path.join(out, "tpm.csv"), summary.mean_tpm, header + ["posterior mean TPM"])
    _write_matrix(os.path.join(out, "mle_tpm.csv"), markov_sim.mle_tpm(counts), header + ["MLE TPM"])
    with open(os.path.join(out, "diagnostics.txt"), "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(f"# {line}\n" for line in header)
        fh.write(_diagnostics_text(summary, d, len(chain) - 1))
    if cfg.trace:
        alpha0 = summary.diagnostics["alpha0"]
        keep = np.arange(cfg.hyperparams.burn_in, len(alpha0))
        keep = keep[(keep - cfg.hyperparams.burn_in + 1) % cfg.hyperparams.thin == 0]
        trace = np.column_stack([alpha0[keep], summary.gamma_trace])
        path = os.path.join(out, "gamma_trace.csv")
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.writelines(f"# {line}\n" for line in header + ["retained alpha0 and gamma"])
            fh.write(",".join(["alpha0"] + [f"gamma_{j}" for j in range(d)]) + "\n")
            for row in trace:
                fh.write(",".join(evaluation.format_float(v) for v in row) + "\n")
    return 0


def run_simulate(cfg):
    chain = markov_sim.simulate_chain(cfg.chain_spec)
    d = state_dimension(chain, cfg.truncation_extra)
    header = cfg.header_lines()
    with open(os.path.join(cfg.output_path, "chain.txt"), "w", encoding="ascii", newline="\n") as fh:
        fh.writelines(f"# {line}\n" for line in header)
        fh.writelines(f"{s}\n" for s in chain.states.tolist())
    markov_sim.write_counts(
        os.path.join(cfg.output_path, "counts.csv"), markov_sim.count_transitions(chain, d), header
    )
    return 0


def run_reproduce(cfg, grid, name):
    spec = cfg.chain_spec
    reports = evaluation.compare_methods(
        spec,
        grid,
        base_seed=cfg.hyperparams.seed,
        template=cfg.hyperparams,
        truncation_extra=cfg.truncation_extra,
        workers=evaluation.default_workers(),
        rerun_per_row=cfg.rerun_per_row,
    )
    evaluation.write_reports(os.path.join(cfg.output_path, name), reports, cfg.header_lines())
    return 0


def run(cfg):
    if cfg.mode == "selftest":
        return 0 if selftest.run_all() else 1
    os.makedirs(cfg.output_path, exist_ok=True)
    if cfg.mode == "estimate":
        return run_estimate(cfg)
    if cfg.mode == "simulate":
        return run_simulate(cfg)
    if cfg.mode == "reproduce-table1":
        return run_reproduce(cfg, evaluation.TABLE1_GRID, "table1.csv")
    return run_reproduce(cfg, evaluation.TABLE2_GRID, "table2.csv")


def main(argv=None):
    try:
        cfg = resolve_config(argv)
        return run(cfg)
    except (GHSBPError, OSError) as exc:
        print(f"ghsbp: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
