"""Command-line driver: ``qsignal <command> [scenario-file] [flags]``.

Each command writes one CSV (header row, comma separated, ``\\n`` line
endings, floats with 17 significant digits) and prints a short summary.
The exit status is 0 iff every check of the command passes.

Without ``--out`` the CSV goes to ``$QSIGNAL_OUT_DIR/<command>.csv``, or to
the current directory when that variable is unset.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from . import gedanken, nosignal, packets
from .config import DEFAULT
from .scenario_file import ScenarioBundle, ScenarioFileError, parse_scenario

OUT_DIR_ENV = "QSIGNAL_OUT_DIR"

COMMANDS = ("verify-nosignal", "window", "ntrap", "entangled-traps", "sphere",
            "packets", "com-example")


class UsageError(Exception):
    """Missing scenario section or other unusable input for a command."""


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class RunReport:
    command: str
    input_hash: str
    seed: int
    columns: list[str]
    rows: list[list[Any]] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def to_csv(report: RunReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    for row in report.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def summary(report: RunReport) -> str:
    lines = [f"command: {report.command}", f"input sha256: {report.input_hash}",
             f"seed: {report.seed}"]
    for c in report.checks:
        lines.append(f"  [{'PASS' if c.passed else 'FAIL'}] {c.name}: "
                     f"{c.value:.6g} (threshold {c.threshold:.6g})")
    lines.append(f"verdict: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines)


def _need(value, what: str):
    if value is None:
        raise UsageError(f"this command needs a {what} section in the scenario file")
    return value


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _verify_nosignal(b: ScenarioBundle, args, rep: RunReport):
    trials = args.trials or b.sweep.trials
    tol = args.tolerance if args.tolerance is not None else DEFAULT.invariance
    rep.columns = ["state_kind", "channel_kind", "sector", "trials", "max_trace_distance",
                   "worst_trial", "worst_dims", "pass"]
    worst = 0.0
    for kind in nosignal.STATE_KINDS:
        for g in nosignal.nosignal_sweep(trials, args.seed, kind,
                                         (b.sweep.dim_min, b.sweep.dim_max), args.jobs):
            rep.rows.append([g.state_kind, g.channel_kind.value, g.sector, g.trials,
                             g.max_distance, g.worst_trial, "x".join(map(str, g.worst_dims)),
                             g.max_distance < tol])
            worst = max(worst, g.max_distance)
    rep.checks.append(Check("max trace distance of Alice's state", worst, tol, worst < tol))


def _window(b: ScenarioBundle, args, rep: RunReport):
    n = args.grid or b.sweep.grid
    scan = gedanken.window_scan(n)
    rep.columns = ["quantity", "value"]
    rep.rows.append(["grid", n])
    rep.rows.append(["points", scan.points])
    for c in scan.certificates:
        rep.rows.append([f"counterexamples_{c.regime.value}", c.counterexamples])
    rep.rows.append(["counterexamples", scan.counterexamples])
    rep.checks.append(Check("counterexamples", scan.counterexamples, 0,
                            scan.counterexamples == 0))


def _ntrap(b: ScenarioBundle, args, rep: RunReport):
    traps = _need(b.traps, "[traps]")
    rows = gedanken.ntrap_table(traps.array.count, traps.array.epsilon)
    rep.columns = ["n", "exact", "linearized", "valid", "brute_force", "brute_error",
                   "linearization_error"]
    for r in rows:
        rep.rows.append([r.n, r.exact, r.linearized, r.valid, r.brute_force,
                         r.brute_error, r.linearization_error])
    brute = [r.brute_error for r in rows if r.brute_error is not None]
    if brute:
        rep.checks.append(Check("brute force vs (1-eps)^N", max(brute), 1e-12,
                                max(brute) < 1e-12))
    lin = [r.linearization_error for r in rows if r.valid]
    if lin:
        rep.checks.append(Check("linearization error where N eps < 0.1", max(lin), 5e-3,
                                max(lin) <= 5e-3))


def _entangled_traps(b: ScenarioBundle, args, rep: RunReport):
    traps = _need(b.traps, "[traps]")
    res = gedanken.entangled_trap_sweep(b.sweep.models, traps.array.count, traps.branches,
                                        traps.array.epsilon, traps.leak, args.seed)
    rep.columns = ["model", "exact_re", "exact_im", "approx_re", "approx_im", "difference",
                   "bound", "bound_holds"]
    for label, r in res:
        rep.rows.append([label, r.exact.real, r.exact.imag, r.approx.real, r.approx.imag,
                         r.difference, r.cross_bound, r.bound_holds])
    p = b.packets
    t = packets.entangled_pair_translation_overlap(p.a, p.width, p.shift)
    rep.rows.append(["planar-pair", t.exact, 0.0, t.printed_formula, 0.0, t.difference,
                     t.agreement_bound, t.agrees])
    bad = sum(not r.bound_holds for _, r in res)
    rep.checks.append(Check("models violating |exact-approx| <= cross_bound", bad, 0, bad == 0))
    rep.checks.append(Check("planar pair |exact - printed|", t.difference, 1e-6,
                            t.difference < 1e-6))


def _sphere(b: ScenarioBundle, args, rep: RunReport):
    s = _need(b.scenario, "[scenario]")
    if not b.spheres:
        raise UsageError("this command needs at least one [sphere.<label>] section")
    ordered = sorted(b.spheres, key=lambda ls: ls[1].radius)
    arrangements = [sp for _, sp in ordered]
    stack = gedanken.multi_sphere_stack(arrangements, s)
    signal = gedanken.spacelike_from_alice(gedanken.release_events(arrangements), s.t_a)
    shared = gedanken.spacelike_from_alice(
        gedanken.simultaneous_release_events(arrangements), s.t_a)
    rep.columns = ["sphere", "radius", "density", "phi", "solid_angle", "count",
                   "displacement", "single", "total", "min_pair_distance",
                   "release_signal_spacelike", "release_shared_spacelike"]
    for (label, sp), a, c in zip(ordered, signal, shared):
        o = gedanken.sphere_overlap(sp, s)
        rep.rows.append([label, sp.radius, sp.density, sp.phi, sp.solid_angle, o.count_real,
                         o.displacement, o.single, o.total, sp.min_pair_distance, a, c])
    rep.rows.append(["stack", None, None, None, None, None, None, None, stack.total,
                     stack.min_pair_distance, all(signal), all(shared)])
    late = min(sum(not ok for ok in signal), sum(not ok for ok in shared))
    rep.checks.append(Check("releases not spacelike from Alice (best coordination)", late, 0,
                            late == 0))


def _packets(b: ScenarioBundle, args, rep: RunReport):
    rows = packets.closed_form_vs_quadrature(b.sweep.pairs, args.seed)
    rep.columns = ["pair", "displacement", "width", "closed_form", "quadrature", "rel_error"]
    for i, r in enumerate(rows):
        rep.rows.append([i, r.displacement, r.width, r.closed_form, r.quadrature, r.rel_error])
    worst = max(r.rel_error for r in rows)
    rep.checks.append(Check("closed form vs quadrature, relative error", worst, 1e-8,
                            worst < 1e-8))


def _com_example(b: ScenarioBundle, args, rep: RunReport):
    p = b.packets
    r = packets.com_counterexample(p.a, p.width)
    rep.columns = ["quantity", "value"]
    rep.rows += [
        ["a", p.a], ["width", p.width],
        ["com_mean_1_x", float(r.com_mean_1[0])], ["com_mean_1_y", float(r.com_mean_1[1])],
        ["com_mean_2_x", float(r.com_mean_2[0])], ["com_mean_2_y", float(r.com_mean_2[1])],
        ["com_spread", r.com_spread],
        ["full_overlap_exact", r.full_overlap_exact],
        ["printed_value", r.printed_value],
        ["discrepancy", r.discrepancy],
        ["consistent", r.consistent],
    ]
    rep.checks.append(Check("max of computed and printed overlap",
                            max(r.full_overlap_exact, r.printed_value), 1e-2,
                            r.almost_vanishes(1e-2)))


_HANDLERS: dict[str, Callable] = {
    "verify-nosignal": _verify_nosignal,
    "window": _window,
    "ntrap": _ntrap,
    "entangled-traps": _entangled_traps,
    "sphere": _sphere,
    "packets": _packets,
    "com-example": _com_example,
}


def run(command: str, text: str = "", *, seed: int = 0, trials: int | None = None,
        tolerance: float | None = None, grid: int | None = None, jobs: int = 1) -> RunReport:
    """Execute ``command`` on scenario-file ``text``; no file I/O."""
    if command not in _HANDLERS:
        raise UsageError(f"unknown command {command!r}; choose from {', '.join(COMMANDS)}")
    bundle = parse_scenario(text)
    args = argparse.Namespace(seed=seed, trials=trials, tolerance=tolerance, grid=grid,
                              jobs=jobs)
    rep = RunReport(command, hashlib.sha256(text.encode("utf-8")).hexdigest(), seed, [])
    _HANDLERS[command](bundle, args, rep)
    return rep


def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qsignal", description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("scenario", nargs="?", help="scenario file (optional for some commands)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=_positive_int)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--grid", type=_positive_int)
    p.add_argument("--jobs", type=_positive_int, default=1)
    p.add_argument("--out", help="CSV path (default: $%s/<command>.csv)" % OUT_DIR_ENV)
    p.add_argument("--quiet", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    text = ""
    if args.scenario:
        try:
            text = Path(args.scenario).read_text(encoding="utf-8")
        except OSError as e:
            print(f"error: cannot read scenario file: {e}", file=sys.stderr)
            return 2
    try:
        rep = run(args.command, text, seed=args.seed, trials=args.trials,
                  tolerance=args.tolerance, grid=args.grid, jobs=args.jobs)
    except (ScenarioFileError, UsageError, ValueError, NotImplementedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    out = Path(args.out) if args.out else Path(os.environ.get(OUT_DIR_ENV, ".")) / f"{args.command}.csv"
    try:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(to_csv(rep))
    except OSError as e:
        print(f"error: cannot write {out}: {e}", file=sys.stderr)
        return 2
    if not args.quiet:
        print(summary(rep))
        print(f"csv: {out}")
    return 0 if rep.passed else 1


if __name__ == "__main__":
    sys.exit(main())
