"""Command-line front end: ``bounds``, ``bootstrap`` and ``simulate``.

Exit codes: 0 success, 2 when a requested polytope is infeasible (the report
is still written), 1 on any error, with a one-line message on stderr.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .basis import D4_CUSTOM, LADDER_LEVELS, d4_extra_columns, expand, ladder, parse_terms
from .bootstrap import PROPOSED, QB, analyse, bootstrap_bounds, write_replicates
from .bounds import CONTROL, TREATED, build_polytope, or_envelope
from .data import SensitivityConfig, load_csv, write_csv
from .errors import AllReplicatesInfeasible, CausalBoundsError, DuplicateTerm, ParseError, UsageError
from .linprog import LinearProgram, Sense, dump_lp
from .logistic import fit_mar_propensity
from .parallel import replicate_rng
from .report import ReportLine, write_replicate_dump, write_report, write_simulation
from .simulation import Scenario, generate_study, run_table

COMMANDS = ("bounds", "bootstrap", "simulate")
METHODS = ("Proposed", "QB", "Both")
# config-file keys, mapped to RunConfig-building names
CONFIG_KEYS = {
    "input": "input", "delta": "delta", "lambda": "lam", "g-terms": "g_terms", "g_terms": "g_terms",
    "ladder": "ladder", "method": "method", "bootstrap": "bootstrap", "seed": "seed",
    "scenario": "scenario", "replicates": "replicates", "output": "output", "n": "n",
    "folds": "folds", "threads": "threads", "standardize": "standardize",
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    sensitivity: SensitivityConfig
    method: str = "Proposed"
    input: Optional[str] = None
    output: str = "-"
    basis_label: str = ""
    deltas: tuple = (0.01,)
    lambdas: tuple = ()
    ladders: tuple = ("D1",)
    scenario: str = "S1"
    replicates: int = 1000
    n: int = 1000
    folds: int = 5
    threads: Optional[int] = None
    standardize: bool = False
    replicate_dump: Optional[str] = None
    export_study: Optional[str] = None
    dump_lp: Optional[str] = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class CustomColumns:
    """Resolves ``custom:<name>`` terms: the two D4 columns or a covariate looked up by name."""

    def __init__(self, names: Sequence[str], wanted: Sequence[str]):
        self.names = tuple(names)
        self.wanted = tuple(wanted)

    def __call__(self, x: np.ndarray) -> dict:
        out = {}
        if any(t in D4_CUSTOM for t in self.wanted):
            out.update(d4_extra_columns(x))
        for t in self.wanted:
            name = t.split(":", 1)[1]
            if t not in out and name in self.names:
                out[t] = x[:, self.names.index(name)]
        return out


def _parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value file; flags override it")
    common.add_argument("--delta", help="positivity level (simulate: comma-separated list)")
    common.add_argument("--lambda", dest="lam", help="odds-ratio bound >= 1 (simulate: list)")
    common.add_argument("--method", choices=METHODS)
    common.add_argument("--seed", type=int)
    common.add_argument("--output", help="report CSV path, '-' for stdout")
    common.add_argument("--threads", type=int, help="worker processes (default: $CAUSAL_BOUNDS_THREADS or 1)")

    data_opts = _Parser(add_help=False)
    data_opts.add_argument("--input", help="CSV with columns y, z and covariates")
    data_opts.add_argument("--g-terms", dest="g_terms", help='balancing terms, e.g. "1,x1,x2,x1*x2"')
    data_opts.add_argument("--ladder", help="polynomial basis level D1..D4")
    data_opts.add_argument("--bootstrap", type=int, help="bootstrap replicates B")
    data_opts.add_argument("--standardize", action="store_true", default=None, help="centre and scale covariates")
    data_opts.add_argument("--replicate-dump", help="write per-replicate bootstrap records here")
    data_opts.add_argument("--dump-lp", help="directory to write the four proposed LPs in text form")

    p = _Parser(prog="causal-bounds", description="Worst-case ATE bounds under unmeasured confounding.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("bounds", parents=[common, data_opts], help="bounds for one dataset")
    sub.add_parser("bootstrap", parents=[common, data_opts], help="bounds plus bootstrap intervals")
    sim = sub.add_parser("simulate", parents=[common], help="replicate the simulation tables")
    sim.add_argument("--scenario", choices=("S1", "S2"))
    sim.add_argument("--replicates", type=int)
    sim.add_argument("--ladder", help="comma-separated basis levels")
    sim.add_argument("--n", type=int, help="units per study")
    sim.add_argument("--folds", type=int, help="cross-fitting folds for QB")
    sim.add_argument("--replicate-dump", help="write per-replicate bounds here")
    sim.add_argument("--export-study", help="write replicate 0's observed data as CSV")
    return p


def read_config(path) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        out[CONFIG_KEYS[key]] = value
    return out


def _floats(text: str, what: str) -> tuple:
    try:
        return tuple(float(s) for s in str(text).split(",") if s.strip())
    except ValueError:
        raise UsageError(f"--{what} expects numbers, got {text!r}") from None


def _int(v, what: str) -> int:
    try:
        return int(v)
    except (TypeError, ValueError):
        raise UsageError(f"--{what} expects an integer, got {v!r}") from None


def parse_args(argv: Optional[Sequence[str]] = None) -> RunConfig:
    """Turn a command line into a validated RunConfig (raises UsageError)."""
    ns = _parser().parse_args(argv)
    merged = read_config(ns.config) if ns.config else {}
    for key, value in vars(ns).items():
        if value is not None and key not in ("config", "command"):
            merged[key] = value
    get = merged.get
    cmd = ns.command

    deltas = _floats(get("delta", "0.01"), "delta")
    lambdas = _floats(get("lam", ""), "lambda")
    if not deltas:
        raise UsageError("--delta needs a value")
    for dl in deltas:
        if not (0.0 < dl < 0.5):
            raise UsageError(f"delta must lie in (0, 0.5), got {dl}")
    for lam in lambdas:
        if not lam >= 1.0:
            raise UsageError(f"lambda must be >= 1, got {lam}")
    if cmd != "simulate" and (len(deltas) > 1 or len(lambdas) > 1):
        raise UsageError(f"{cmd} takes a single --delta and --lambda")
    method = get("method", "Proposed")
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}")
    if method in ("QB", "Both") and not lambdas:
        raise UsageError("the QB method needs --lambda")
    seed = _int(get("seed", 0), "seed")
    if seed < 0:
        raise UsageError("--seed must be non-negative")
    threads = get("threads")
    threads = None if threads is None else _int(threads, "threads")
    standardize = str(get("standardize", False)).lower() in ("1", "true", "yes")

    if cmd == "simulate":
        ladders = tuple(s.strip().upper() for s in str(get("ladder", "D1")).split(",") if s.strip())
        for lv in ladders:
            if lv not in LADDER_LEVELS:
                raise UsageError(f"unknown ladder level {lv!r}")
        reps = _int(get("replicates", 1000), "replicates")
        n = _int(get("n", 1000), "n")
        folds = _int(get("folds", 5), "folds")
        if reps < 1 or n < 10 or folds < 2:
            raise UsageError("need --replicates >= 1, --n >= 10 and --folds >= 2")
        scen = get("scenario", "S1")
        if scen not in ("S1", "S2"):
            raise UsageError(f"unknown scenario {scen!r}")
        sens = SensitivityConfig(delta=deltas[0], lam=lambdas[0] if lambdas else None, seed=seed)
        return RunConfig(
            cmd, sens, method, output=get("output", "-"), deltas=deltas, lambdas=lambdas,
            ladders=ladders, scenario=scen, replicates=reps, n=n, folds=folds, threads=threads,
            replicate_dump=get("replicate_dump"), export_study=get("export_study"),
        )

    if not get("input"):
        raise UsageError(f"{cmd} needs --input")
    if get("g_terms") and get("ladder"):
        raise UsageError("give either --g-terms or --ladder, not both")
    if get("ladder"):
        label = str(get("ladder")).upper()
        if label not in LADDER_LEVELS:
            raise UsageError(f"unknown ladder level {label!r}")
        terms: tuple = ()  # resolved once the covariate count is known
    else:
        label = str(get("g_terms", "1"))
        try:
            terms = tuple(parse_terms(label).labels)
        except (ParseError, DuplicateTerm) as exc:
            raise UsageError(f"--g-terms: {exc}") from None
    b = get("bootstrap")
    b = (1000 if cmd == "bootstrap" else 0) if b is None else _int(b, "bootstrap")
    if b < 0 or (cmd == "bootstrap" and b < 1):
        raise UsageError("--bootstrap must be >= 1")
    sens = SensitivityConfig(delta=deltas[0], lam=lambdas[0] if lambdas else None, basis_terms=terms, seed=seed, bootstrap_b=b)
    return RunConfig(
        cmd, sens, method, input=get("input"), output=get("output", "-"), basis_label=label,
        deltas=deltas, lambdas=lambdas, threads=threads, standardize=standardize,
        replicate_dump=get("replicate_dump"), dump_lp=get("dump_lp"),
    )


def _dump_path(path: str, method: str, both: bool) -> str:
    if not both:
        return path
    p = Path(path)
    return str(p.with_name(f"{p.stem}.{method}{p.suffix}"))


def proposed_programs(d, g, sens: SensitivityConfig, ehat=None) -> dict:
    """The four linear programs behind the proposed bounds, keyed mu1_lo ... mu0_hi."""
    out = {}
    for arm, what in ((TREATED, "mu1"), (CONTROL, "mu0")):
        env = or_envelope(ehat, sens.lam, arm) if sens.lam is not None else None
        poly = build_polytope(d, g, sens.delta, arm, env)
        c = d.y[poly.indices] / d.n
        for side, sense in (("lo", Sense.MIN), ("hi", Sense.MAX)):
            out[f"{what}_{side}"] = LinearProgram(c, poly.lower, poly.upper, poly.a, poly.b, sense)
    return out


def run_bounds(cfg: RunConfig) -> int:
    d = load_csv(cfg.input)
    if cfg.standardize:
        d = d.standardized()
    sens = cfg.sensitivity
    if not sens.basis_terms:
        sens = replace(sens, basis_terms=tuple(ladder(cfg.basis_label, d.k).labels))
    customs = [t for t in sens.basis_terms if t.startswith("custom:")]
    custom_fn = CustomColumns(d.names, customs) if customs else None
    methods = (PROPOSED, QB) if cfg.method == "Both" else (cfg.method,)
    lines = []
    infeasible = False
    for method in methods:
        res = analyse(d, sens, method, custom_fn)
        infeasible |= not res.feasible
        line = ReportLine(
            method,
            cfg.basis_label if method == PROPOSED else "",
            sens.delta if method == PROPOSED else None,
            sens.lam,
            res,
        )
        if sens.bootstrap_b > 0:
            try:
                summary = bootstrap_bounds(d, sens, method, custom_fn, cfg.threads)
                line.feasible_count = summary.feasible_count
                line.boot_lower, line.boot_upper = summary.boot_lower, summary.boot_upper
                if cfg.replicate_dump:
                    write_replicates(summary, _dump_path(cfg.replicate_dump, method, len(methods) > 1))
            except AllReplicatesInfeasible as exc:
                line.feasible_count = 0
                infeasible = True
                if cfg.replicate_dump:
                    write_replicates(exc.summary, _dump_path(cfg.replicate_dump, method, len(methods) > 1))
        lines.append(line)
        if method == PROPOSED and cfg.dump_lp:
            out = Path(cfg.dump_lp)
            out.mkdir(parents=True, exist_ok=True)
            g = expand(parse_terms(list(sens.basis_terms)), d, custom_fn(d.x) if custom_fn else None)
            ehat = fit_mar_propensity(d).ehat if sens.lam is not None else None
            for key, lp in proposed_programs(d, g, sens, ehat).items():
                dump_lp(lp, out / f"{key}.lp")
    write_report(lines, cfg.output)
    return 2 if infeasible else 0


def run_simulate(cfg: RunConfig) -> int:
    s = Scenario(cfg.scenario, n=cfg.n, replicates=cfg.replicates)
    methods = ("Proposed", "QB") if cfg.method == "Both" else (cfg.method,)
    rep = run_table(
        s, methods, cfg.deltas, cfg.lambdas, cfg.ladders, cfg.replicates,
        cfg.sensitivity.seed, cfg.n, cfg.folds, cfg.threads,
    )
    write_simulation(rep, cfg.output)
    if cfg.replicate_dump:
        write_replicate_dump(rep, cfg.replicate_dump)
    if cfg.export_study:
        write_csv(generate_study(s, replicate_rng(cfg.sensitivity.seed, 0), cfg.n).dataset, cfg.export_study)
    return 0


def run(cfg: RunConfig) -> int:
    if cfg.command == "simulate":
        return run_simulate(cfg)
    return run_bounds(cfg)


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        return run(parse_args(argv))
    except (CausalBoundsError, OSError, ValueError) as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"causal-bounds: {type(exc).__name__}: {msg}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
