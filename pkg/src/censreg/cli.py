"""Command-line entry point: ``censreg simulate`` and ``censreg fit``."""
from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import os
import sys
from dataclasses import dataclass
from typing import Sequence, TextIO

from .datagen import DesignKind
from .simulation import DEFAULT_CENSOR, DEFAULT_N, DEFAULT_REPS, FITTERS, McSummaryRow, run_grid
from .types import (BoundViolation, CensoredDataset, CensoringError, CensorSide, Model, ModelFit,
                    validate)

CSV_HEADER = ("design", "censor_rate", "model", "parameter", "true", "mean", "emp_sd",
              "rel_bias_pct", "n_converged", "n_total")

MODEL_ALIASES = {
    "semipar": Model.SEMIPAR_AFT, "tobit": Model.TOBIT, "weibull": Model.WEIBULL_AFT,
    "cox": Model.COXPH,
}
MODEL_ALIASES.update({m.value: m for m in Model})


class UsageError(Exception):
    pass


class ParseError(ValueError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class IoError(OSError):
    pass


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    designs: tuple[DesignKind, ...] = tuple(DesignKind)
    censor: tuple[float, ...] = DEFAULT_CENSOR
    n: int = DEFAULT_N
    reps: int = DEFAULT_REPS
    seed: int = 20261017
    models: tuple[Model, ...] | None = None
    out: str | None = None
    format: str = "csv"
    threads: int | None = None
    input: str | None = None
    model: Model | None = None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _split(values: list[str] | None) -> list[str]:
    out = []
    for v in values or []:
        out.extend(s.strip() for s in v.split(",") if s.strip())
    return out


def _build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="censreg", description=__doc__)
    sub = p.add_subparsers(dest="subcommand", parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run a Monte Carlo grid")
    sim.add_argument("--design", action="append",
                     help="lod|weibull|lognormal|tobit-normal (repeatable or comma-separated)")
    sim.add_argument("--censor", action="append", help="censoring fractions, e.g. 0.1,0.3,0.6")
    sim.add_argument("--n", type=int, default=DEFAULT_N)
    sim.add_argument("--reps", type=int, default=DEFAULT_REPS)
    sim.add_argument("--seed", type=int, default=RunConfig.seed)
    sim.add_argument("--models", action="append", help="semipar,tobit,weibull,cox")
    sim.add_argument("--out")
    sim.add_argument("--format", choices=("csv", "md"), default="csv")
    sim.add_argument("--threads", type=int)

    fit = sub.add_parser("fit", help="fit one model to a dataset CSV")
    fit.add_argument("--input", required=True)
    fit.add_argument("--model", required=True, choices=sorted(MODEL_ALIASES))
    fit.add_argument("--out")
    fit.add_argument("--format", choices=("csv", "md"), default="csv")
    return p


def _check_out(path: str | None):
    if path is None:
        return
    parent = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(parent) or not os.access(parent, os.W_OK):
        raise UsageError(f"cannot write to {path}")


def parse_args(argv: Sequence[str]) -> RunConfig:
    ns = _build_parser().parse_args(list(argv))
    if ns.subcommand is None:
        raise UsageError("expected a subcommand: simulate or fit")
    _check_out(ns.out)

    if ns.subcommand == "fit":
        return RunConfig("fit", out=ns.out, format=ns.format, input=ns.input,
                         model=MODEL_ALIASES[ns.model])

    try:
        designs = tuple(DesignKind(d) for d in _split(ns.design)) or tuple(DesignKind)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        censor = tuple(float(c) for c in _split(ns.censor)) or DEFAULT_CENSOR
    except ValueError as exc:
        raise UsageError(f"bad censoring fraction: {exc}") from None
    for c in censor:
        if not 0.0 < c < 1.0:
            raise UsageError(f"censoring fraction {c} is outside (0, 1)")
    models = None
    if ns.models:
        try:
            models = tuple(MODEL_ALIASES[m] for m in _split(ns.models))
        except KeyError as exc:
            raise UsageError(f"unknown model {exc.args[0]}") from None
    if ns.n < 2:
        raise UsageError("--n must be at least 2")
    if ns.reps < 2:
        raise UsageError("--reps must be at least 2")
    if ns.threads is not None and ns.threads < 1:
        raise UsageError("--threads must be positive")
    return RunConfig("simulate", tuple(dict.fromkeys(designs)), tuple(sorted(set(censor))),
                     ns.n, ns.reps, ns.seed, models, ns.out, ns.format, ns.threads)


# Output ----------------------------------------------------------------------

def _num(x: float | None) -> str:
    if x is None:
        return ""
    return f"{x:.6g}"


def _ordered(rows: Sequence[McSummaryRow]) -> list[McSummaryRow]:
    designs, models = list(DesignKind), list(Model)
    return sorted(rows, key=lambda r: (designs.index(r.design), r.censor_frac,
                                       models.index(r.model)))


def _fields(r: McSummaryRow, missing: str) -> list[str]:
    def opt(x):
        return missing if x is None else _num(x)

    return [r.design.value, _num(r.censor_frac), r.model.value, r.parameter, opt(r.truth),
            _num(r.mean), _num(r.emp_sd), opt(r.rel_bias_pct), str(r.n_converged),
            str(r.n_total)]


def _markdown(header: Sequence[str], body: list[list[str]], sink: TextIO):
    widths = [max(len(h), *(len(row[j]) for row in body)) for j, h in enumerate(header)]
    def line(cells):
        return "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |\n"
    sink.write(line(header))
    sink.write("|" + "|".join("-" * (w + 2) for w in widths) + "|\n")
    for row in body:
        sink.write(line(row))


def emit_rows(rows: Sequence[McSummaryRow], format: str, sink: TextIO) -> None:
    """Write summary rows as CSV (absent values empty) or markdown (absent values ``--``)."""
    if not rows:
        raise IoError("no rows to write")
    rows = _ordered(rows)
    if format == "csv":
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in rows:
            w.writerow(_fields(r, ""))
    elif format in ("md", "markdown"):
        _markdown(CSV_HEADER, [_fields(r, "--") for r in rows], sink)
    else:
        raise ValueError(f"unknown format {format!r}")


def emit_fit(fit: ModelFit, format: str, sink: TextIO) -> None:
    header = ("model", "parameter", "estimate", "converged", "objective", "iterations")
    body = [[fit.model.value, name, _num(v), str(fit.converged).lower(),
             _num(fit.objective_at_solution), str(fit.iterations)]
            for name, v in zip(fit.params.names, fit.params.values)]
    if format == "csv":
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(header)
        w.writerows(body)
    else:
        _markdown(header, body, sink)


# Input -----------------------------------------------------------------------

def read_dataset_csv(path) -> CensoredDataset:
    """Read ``y,delta,z1..zp`` rows; a leading ``#bound=<D>`` marks left-censoring."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    lineno = 0
    bound = None
    if lines and lines[0].startswith("#"):
        directive = lines[0][1:].strip()
        key, _, val = directive.partition("=")
        if key.strip() != "bound":
            raise ParseError(f"unknown directive {directive!r}", 1)
        try:
            bound = float(val)
        except ValueError:
            raise ParseError(f"bad bound value {val!r}", 1) from None
        lineno = 1

    reader = csv.reader(lines[lineno:])
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise ParseError("missing header", lineno + 1) from None
    lineno += 1
    if len(header) < 3 or header[:2] != ["y", "delta"]:
        raise ParseError("header must be y,delta,z1,...", lineno)

    ys, ds, zs, line_of = [], [], [], []
    for row in reader:
        lineno += 1
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", lineno)
        try:
            y = float(row[0])
            z = [float(c) for c in row[2:]]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        d = row[1].strip()
        if d not in ("0", "1"):
            raise ParseError(f"delta={d} is not 0 or 1", lineno)
        if not math.isfinite(y) or not all(map(math.isfinite, z)):
            raise ParseError("non-finite value", lineno)
        ys.append(y)
        ds.append(int(d))
        zs.append(z)
        line_of.append(lineno)

    side = CensorSide.LEFT if bound is not None else CensorSide.RIGHT
    ds_ = CensoredDataset(ys, ds, zs if zs else [[]], side, bound)
    try:
        validate(ds_)
    except CensoringError as exc:
        if exc.index is not None and exc.index < len(line_of):
            raise type(exc)(f"line {line_of[exc.index]}: {exc}", exc.index) from None
        raise
    return ds_


# Main ------------------------------------------------------------------------

def _open_sink(path: str | None):
    if path is None:
        return sys.stdout, False
    return open(path, "w", newline=""), True


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = parse_args(sys.argv[1:] if argv is None else argv)
    except UsageError as exc:
        print(f"censreg: {exc}", file=sys.stderr)
        return 2

    try:
        if cfg.subcommand == "fit":
            ds = read_dataset_csv(cfg.input)
            fit = FITTERS[cfg.model](ds)
            buf = io.StringIO()
            emit_fit(fit, cfg.format, buf)
            status = 0 if fit.converged else 1
        else:
            rows = run_grid(cfg.seed, cfg.designs, cfg.censor, cfg.n, cfg.reps, cfg.models,
                            workers=cfg.threads or 1)
            buf = io.StringIO()
            emit_rows(rows, cfg.format, buf)
            status = 0 if all(r.n_converged >= 2 for r in rows) else 1
        sink, close = _open_sink(cfg.out)
        try:
            sink.write(buf.getvalue())
        finally:
            if close:
                sink.close()
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"censreg: {exc}", file=sys.stderr)
        return 1
    return status


if __name__ == "__main__":
    sys.exit(main())
