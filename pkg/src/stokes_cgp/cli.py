"""Command-line front end: ``stokes-cgp {run,convergence,verify}``.

Settings come from built-in defaults, then an optional ``key = value``
config file, then command-line flags.  A flag that overrides a different
file value triggers a warning on stderr.  Data go to stdout or to files,
diagnostics to stderr.

Exit codes: 0 success, 1 failed invariant check, 2 configuration error,
3 solver failure.
"""

import argparse
import math
import os
import sys
from dataclasses import dataclass, fields
from pathlib import Path

from .analysis import (
    COLLOCATION,
    INTERPOLATION,
    NORM_FAMILIES,
    QUANTITIES,
    SETUPS,
    ErrorEvaluator,
    ManufacturedSolution,
    run_convergence_study,
    solve_level,
)
from .fem import PRESSURE, VELOCITY
from .linsolve import SaddleSolveError
from .verification import FAULTS, run_checks

EXIT_OK, EXIT_INVARIANT, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3

COMMANDS = ("run", "convergence", "verify")
VARIANT_CHOICES = (COLLOCATION, INTERPOLATION, "both")
FORMATS = ("csv", "markdown")
FAMILY_TITLES = {"L2": "L2 in time", "lbar2": "midpoint-sampled (lbar2)", "l2plus": "right-limit-sampled (l2plus)"}
CSV_HEADER = "level,tau,h,err_u_H1,eoc_u_H1,err_dtu_L2,eoc_dtu_L2,err_p_L2,eoc_p_L2"


class ConfigError(ValueError):
    """Invalid command line or config file."""


@dataclass(frozen=True)
class RunConfig:
    command: str = "convergence"
    levels: tuple = (0, 1, 2, 3)
    variant: str = "both"
    solver_tol: float = 1e-10
    output: str | None = None
    format: str = "csv"
    time_points: int = 5
    space_points: int = 5
    setup: str = "tables"
    seed: int = 0
    fault: str | None = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"unknown command {self.command!r}")
        if not self.levels:
            raise ConfigError("levels must not be empty")
        if any(lv < 0 for lv in self.levels):
            raise ConfigError("levels must be nonnegative")
        if self.variant not in VARIANT_CHOICES:
            raise ConfigError(f"variant must be one of {', '.join(VARIANT_CHOICES)}")
        if not (0.0 < self.solver_tol <= 1e-4) or math.isnan(self.solver_tol):
            raise ConfigError(f"solver tolerance {self.solver_tol} outside (0, 1e-4]")
        if self.format not in FORMATS:
            raise ConfigError(f"format must be one of {', '.join(FORMATS)}")
        if self.time_points < 5 or self.space_points < 5 or self.space_points > 6:
            raise ConfigError("need time points >= 5 and space points in 5..6")
        if self.setup not in SETUPS:
            raise ConfigError(f"setup must be one of {', '.join(SETUPS)}")
        if self.fault is not None and self.fault not in FAULTS:
            raise ConfigError(f"unknown fault {self.fault!r}")


def parse_levels(text) -> tuple:
    """``"0..3"``, ``"2"`` or ``"0,1,3"``."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty level range {text!r}")
            return tuple(range(lo, hi + 1))
        return tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise ConfigError(f"malformed levels {text!r}") from exc


_CONVERTERS = {
    "command": str,
    "levels": parse_levels,
    "variant": str,
    "solver_tol": float,
    "output": str,
    "format": str,
    "time_points": int,
    "space_points": int,
    "setup": str,
    "seed": int,
    "fault": str,
}


def read_config_file(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONVERTERS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = _CONVERTERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return values


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stokes-cgp", description=__doc__.splitlines()[0], argument_default=argparse.SUPPRESS)
    parser.add_argument("command", nargs="?", choices=COMMANDS, default=None, help="default: convergence")
    parser.add_argument("--config", help="key = value settings file")
    parser.add_argument("--levels", type=parse_levels, help="refinement levels, e.g. 0..3 (default)")
    parser.add_argument("--variant", choices=VARIANT_CHOICES, help="post-processing variant (default both)")
    parser.add_argument("--solver-tol", dest="solver_tol", type=float, help="relative residual tolerance")
    parser.add_argument("--output", "-o", help="output directory (convergence) or file (run); stdout if absent")
    parser.add_argument("--format", choices=FORMATS, help="csv (default) or markdown")
    parser.add_argument("--time-points", dest="time_points", type=int, help="Gauss points per time interval")
    parser.add_argument("--space-points", dest="space_points", type=int, help="Gauss points per cell axis")
    parser.add_argument("--setup", choices=tuple(SETUPS), help="tables (default) or formulated")
    parser.add_argument("--seed", type=int, help="random seed for verify")
    parser.add_argument("--inject-fault", dest="fault", choices=FAULTS, help=argparse.SUPPRESS)
    return parser


def parse_config(argv=None, config_file=None, stderr=None) -> RunConfig:
    """Merge defaults, an optional config file and ``argv`` into a :class:`RunConfig`."""
    stderr = stderr or sys.stderr
    flags = vars(build_parser().parse_args(list(argv) if argv is not None else []))
    if flags.get("command") is None:
        flags.pop("command", None)
    config_file = flags.pop("config", config_file)
    values = read_config_file(config_file) if config_file else {}
    for key, value in flags.items():
        if key in values and values[key] != value:
            print(f"warning: --{key.replace('_', '-')} overrides config file value {values[key]!r}", file=stderr)
        values[key] = value
    known = {f.name for f in fields(RunConfig)}
    return RunConfig(**{k: v for k, v in values.items() if k in known})


def _fmt_err(x) -> str:
    return f"{x:.9e}"


def _fmt_eoc(x) -> str:
    return "" if x is None or not math.isfinite(x) else f"{x:.2f}"


def format_csv(report, family) -> str:
    rows = [CSV_HEADER]
    for rec in report.records:
        cells = [str(rec.level), f"{rec.tau:.10g}", f"{rec.h:.10g}"]
        for q in QUANTITIES:
            cells += [_fmt_err(rec.errors[(family, q)]), _fmt_eoc(rec.eocs.get((family, q)))]
        rows.append(",".join(cells))
    return "\n".join(rows) + "\n"


def format_markdown(report) -> str:
    out = [f"## {report.variant} post-processing ({report.setup} setup)", ""]
    for family in NORM_FAMILIES:
        out += [f"### {FAMILY_TITLES[family]}", ""]
        out.append("| level | tau | h | u (H1) | EOC | dt u (L2) | EOC | p (L2) | EOC |")
        out.append("|---:|---:|---:|---:|---:|---:|---:|---:|---:|")
        for rec in report.records:
            cells = [str(rec.level), f"{rec.tau:.6g}", f"{rec.h:.6g}"]
            for q in QUANTITIES:
                cells += [_fmt_err(rec.errors[(family, q)]), _fmt_eoc(rec.eocs.get((family, q)))]
            out.append("| " + " | ".join(cells) + " |")
        out.append("")
    return "\n".join(out)


def _write(path: Path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def emit_report(report, fmt="csv", path=None, stream=None):
    """Write one report; returns the list of files written.

    With ``path`` a directory, CSV goes to ``<variant>_<family>.csv`` (one
    file per norm family) and Markdown to ``<variant>.md``.  Without a
    path everything is written to ``stream`` (stdout by default).
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    stream = stream or sys.stdout
    if path is None:
        if fmt == "csv":
            for family in NORM_FAMILIES:
                stream.write(f"# {report.variant} {family}\n")
                stream.write(format_csv(report, family))
        else:
            stream.write(format_markdown(report))
        return []
    directory = Path(path)
    directory.mkdir(parents=True, exist_ok=True)
    if fmt == "markdown":
        target = directory / f"{report.variant}.md"
        _write(target, format_markdown(report))
        return [target]
    written = []
    for family in NORM_FAMILIES:
        target = directory / f"{report.variant}_{family}.csv"
        _write(target, format_csv(report, family))
        written.append(target)
    return written


def _check_writable(cfg: RunConfig):
    if cfg.output is None:
        return
    target = Path(cfg.output)
    probe = target if cfg.command == "convergence" else target.parent
    while not probe.exists():
        probe = probe.parent
    if not os.access(probe, os.W_OK) or (probe == target and not probe.is_dir() and cfg.command == "convergence"):
        raise ConfigError(f"output path {cfg.output} is not writable")


def verify(seed=0, fault=None, stream=None) -> int:
    """Run the invariant suite, print one line per check and return the exit status."""
    stream = stream or sys.stdout
    results = run_checks(seed=seed, fault=fault)
    for res in results:
        stream.write(res.line() + "\n")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"{len(failed)} check(s) failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def run_single(cfg: RunConfig, stream=None):
    """Solve one level and report nodal velocity and midpoint pressure errors."""
    stream = stream or sys.stdout
    level = max(cfg.levels)
    problem = ManufacturedSolution()
    sol = solve_level(level, problem, solver_tol=cfg.solver_tol, variants=(), setup=cfg.setup)
    ev = ErrorEvaluator(sol.space, cfg.space_points)
    tm = sol.traj.time_mesh
    lines = ["n,t,err_u_H1,tbar,err_pbar_L2,div_ubar"]
    for n in range(tm.N + 1):
        t = tm.nodes[n]
        err_u = ev.h1semi(VELOCITY, sol.traj.u_nodes[n], lambda x: problem.grad_u(x, t))
        if n == 0:
            lines.append(f"0,{t:.10g},{_fmt_err(err_u)},,,")
            continue
        tb = tm.midpoints[n - 1]
        err_p = ev.l2(PRESSURE, sol.traj.p_mid[n - 1], lambda x: problem.p(x, tb))
        div = abs(sol.ops.B @ sol.traj.u_mid[n - 1]).max()
        lines.append(f"{n},{t:.10g},{_fmt_err(err_u)},{tb:.10g},{_fmt_err(err_p)},{div:.3e}")
    text = "\n".join(lines) + "\n"
    if cfg.output:
        _write(Path(cfg.output), text)
    else:
        stream.write(text)


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        cfg = parse_config(argv)
        _check_writable(cfg)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if cfg.command == "verify":
            return verify(cfg.seed, cfg.fault)
        if cfg.command == "run":
            run_single(cfg)
            return EXIT_OK
        reports = run_convergence_study(
            cfg.levels,
            variant=cfg.variant,
            solver_tol=cfg.solver_tol,
            time_points=cfg.time_points,
            space_points=cfg.space_points,
            setup=cfg.setup,
        )
        if not isinstance(reports, dict):
            reports = {reports.variant: reports}
        for report in reports.values():
            for target in emit_report(report, cfg.format, cfg.output):
                print(f"wrote {target}", file=sys.stderr)
    except SaddleSolveError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
