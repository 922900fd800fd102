"""Command-line front end.

Seven subcommands tie the library together:

  sat       decide a formula file within one catalog theory
  witness   print the (strong) witness formula for a formula file
  combine   two-theory satisfiability via strong witness + arrangements
  classify  the five property verdicts for one theory
  table     classify the whole catalog and diff against the expected flags
  fof       print F / fof / fof1 rows for an oracle seed
  mincard   least model cardinality of a formula within a theory

Exit status: 0 for definitive verdicts, 2 when an effort cap leaves the
question open, 1 for usage or parse errors.  `--json` switches every command
to a machine-readable report; identical invocations print identical bytes.
Parallelism comes from `--jobs` where offered, defaulting to the
POLITE_KIT_JOBS environment variable.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Optional, Sequence

from .combine import (
    SAT,
    UNKNOWN,
    UNSAT,
    CombinationProblem,
    polite_combine,
)
from .congruence import EffortExceeded
from .foracle import FIGURE_SEED, FofFunction, oracle_from_seed
from .logic import Formula, LogicError, formula_text
from .properties import classify_theory, reproduce_table
from .sexpr import SexprError, parse_problem
from .theories import Theory, TheoryError, get_theory

PROG = "polite-kit"


def _default_jobs() -> int:
    try:
        return max(1, int(os.environ.get("POLITE_KIT_JOBS", "1")))
    except ValueError:
        return 1


def _emit_json(payload: dict) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True))


def _load_formula(path: str, theory: Theory) -> Formula:
    text = Path(path).read_text(encoding="utf-8")
    return parse_problem(text, theory.signature).formula


def _unknown(as_json: bool, note: str) -> int:
    if as_json:
        _emit_json({"verdict": UNKNOWN, "note": note})
    else:
        print("UNKNOWN")
        print(f"  {note}")
    return 2


# ---------------------------------------------------------------------------
# commands


def cmd_sat(args: argparse.Namespace) -> int:
    theory = get_theory(args.theory)
    phi = _load_formula(args.formula, theory)
    try:
        result = theory.qf_sat(phi)
    except EffortExceeded as e:
        return _unknown(args.json, str(e))
    if args.json:
        payload = {"theory": theory.name, "formula": formula_text(phi)}
        payload.update(result.to_json())
        payload["verdict"] = SAT if result.sat else UNSAT
        _emit_json(payload)
    else:
        print("SAT" if result.sat else "UNSAT")
        if result.note:
            print(f"  {result.note}")
        if result.model is not None:
            print(json.dumps(result.model.to_json(), sort_keys=True))
    return 0


def cmd_witness(args: argparse.Namespace) -> int:
    theory = get_theory(args.theory)
    w = theory.strong_witness if args.strong else (theory.witness or theory.strong_witness)
    if w is None:
        kind = "strong witness" if args.strong else "witness"
        raise TheoryError(f"{theory.name} carries no {kind}")
    phi = _load_formula(args.formula, theory)
    psi = w(phi)
    if args.json:
        _emit_json(
            {
                "theory": theory.name,
                "witness": w.label,
                "kind": w.kind,
                "input": formula_text(phi),
                "formula": formula_text(psi),
            }
        )
    else:
        print(formula_text(psi))
    return 0


def cmd_combine(args: argparse.Namespace) -> int:
    t1 = get_theory(args.t1)
    t2 = get_theory(args.t2)
    phi1 = _load_formula(args.phi1, t1)
    phi2 = _load_formula(args.phi2, t2)
    problem = CombinationProblem(t1, t2, phi1, phi2)
    try:
        result = polite_combine(
            problem,
            prune=args.prune,
            jobs=args.jobs,
            effort_cap=args.cap,
            unsound_ok=args.unsound_ok,
        )
    except EffortExceeded as e:
        return _unknown(args.json, str(e))
    if args.json:
        payload = result.to_json()
        payload["t1"] = {"theory": t1.name, **payload.get("t1", {})}
        payload["t2"] = {"theory": t2.name, **payload.get("t2", {})}
        _emit_json(payload)
    else:
        print(result.verdict.upper())
        if result.arrangement is not None:
            print(f"  arrangement: {json.dumps([list(b) for b in result.arrangement.key()])}")
        print(f"  arrangements tried: {result.tried}, pruned: {result.pruned}")
        if result.note:
            print(f"  {result.note}")
    return 2 if result.verdict == UNKNOWN else 0


def cmd_classify(args: argparse.Namespace) -> int:
    theory = get_theory(args.theory)
    verdicts = classify_theory(theory, bound=args.bound)
    if args.json:
        _emit_json(
            {
                "theory": theory.name,
                "bound": args.bound,
                "rows": [{"theory": theory.name, **v.to_json()} for v in verdicts],
            }
        )
    else:
        print(theory.name)
        for v in verdicts:
            evidence = json.dumps(v.evidence, sort_keys=True, default=str)
            print(f"  {v.property:<3} {v.status:<18} bound={v.bound}  {evidence}")
    return 2 if any(v.status == "inconclusive" for v in verdicts) else 0


_CELL = {"confirmed-bounded": "T", "refuted": "F", "inconclusive": "?"}


def cmd_table(args: argparse.Namespace) -> int:
    report = reproduce_table(bound=args.bound, jobs=args.jobs)
    if args.json:
        _emit_json(report.to_json())
    else:
        names = list(dict.fromkeys(r.theory for r in report.rows))
        width = max(len(n) for n in names)
        cells = {(r.theory, r.property): r for r in report.rows}
        print(f"{'theory':<{width}}  SI SM FW SW CV")
        for name in names:
            marks = []
            for prop in ("SI", "SM", "FW", "SW", "CV"):
                row = cells[(name, prop)]
                marks.append(_CELL[row.verdict.status] + ("" if row.match else "!"))
            print(f"{name:<{width}}  {' '.join(f'{m:<2}' for m in marks)}")
        print(f"mismatches: {len(report.mismatches)}")
    return 2 if report.mismatches else 0


def cmd_fof(args: argparse.Namespace) -> int:
    oracle = oracle_from_seed(args.seed)
    f = FofFunction(oracle)
    ns = range(1, args.n + 1)
    rows = {
        "F": [oracle(i) for i in ns],
        "fof": [f.fof(i) for i in ns],
        "fof1": [f.f1(i) for i in ns],
    }
    if args.json:
        _emit_json({"seed": args.seed, "oracle": oracle.name, "n": args.n, **rows})
    else:
        widths = [
            max(len(str(i)), *(len(str(row[i - 1])) for row in rows.values()))
            for i in ns
        ]
        def line(label: str, values) -> str:
            cells = " ".join(f"{v:>{w}}" for v, w in zip(values, widths))
            return f"{label:<5}{cells}"
        print(line("n", list(ns)))
        for label, values in rows.items():
            print(line(label, values))
    return 0


def cmd_mincard(args: argparse.Namespace) -> int:
    theory = get_theory(args.theory)
    phi = _load_formula(args.formula, theory)
    try:
        mc = theory.mincard(phi)
    except EffortExceeded as e:
        return _unknown(args.json, str(e))
    if args.json:
        _emit_json({"theory": theory.name, "formula": formula_text(phi), "mincard": mc})
    else:
        print(mc)
    return 0


# ---------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; the exit-code contract reserves 2 for
    genuinely open verdicts, so usage errors are remapped to 1."""

    def error(self, message: str):  # noqa: ANN201 - argparse signature
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_json(p: argparse.ArgumentParser) -> None:
    p.add_argument("--json", action="store_true", help="emit a JSON report")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=PROG, description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("sat", help="decide a formula within one theory")
    p.add_argument("--theory", required=True, help="theory spec, e.g. T_leq:1")
    p.add_argument("--formula", required=True, help="formula file (s-expression syntax)")
    _add_json(p)
    p.set_defaults(run=cmd_sat)

    p = sub.add_parser("witness", help="print the witness formula")
    p.add_argument("theory", help="theory spec")
    p.add_argument("formula", help="formula file")
    p.add_argument("--strong", action="store_true", help="require the strong witness")
    _add_json(p)
    p.set_defaults(run=cmd_witness)

    p = sub.add_parser("combine", help="two-theory satisfiability")
    p.add_argument("--t1", required=True, help="first theory spec")
    p.add_argument("--t2", required=True, help="second theory spec (supplies the strong witness)")
    p.add_argument("--phi1", required=True, help="formula file for the first theory")
    p.add_argument("--phi2", required=True, help="formula file for the second theory")
    p.add_argument("--prune", action="store_true", help="veto arrangements that split forced-equal variables")
    p.add_argument("--jobs", type=int, default=_default_jobs(), help="worker threads for arrangement checks")
    p.add_argument("--cap", type=int, default=None, help="arrangement budget; exceeding it reports UNKNOWN")
    p.add_argument("--unsound-ok", action="store_true", help="allow a second theory not flagged stably infinite")
    _add_json(p)
    p.set_defaults(run=cmd_combine)

    p = sub.add_parser("classify", help="five property verdicts for one theory")
    p.add_argument("theory", help="theory spec")
    p.add_argument("--bound", type=int, default=4, help="finite search bound (default 4)")
    _add_json(p)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("table", help="classify the catalog and diff against expected flags")
    p.add_argument("--bound", type=int, default=4, help="finite search bound (default 4)")
    p.add_argument("--jobs", type=int, default=_default_jobs(), help="worker threads across theories")
    _add_json(p)
    p.set_defaults(run=cmd_table)

    p = sub.add_parser("fof", help="print F / fof / fof1 rows for an oracle")
    p.add_argument("--seed", required=True, help=f"integer, 'figure' (alias {FIGURE_SEED}), 'alt', or 'parity'")
    p.add_argument("--n", type=int, required=True, help="print rows for 1..N")
    _add_json(p)
    p.set_defaults(run=cmd_fof)

    p = sub.add_parser("mincard", help="least model cardinality within a theory")
    p.add_argument("--theory", required=True, help="theory spec")
    p.add_argument("--formula", required=True, help="formula file")
    _add_json(p)
    p.set_defaults(run=cmd_mincard)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.run(args)
    except SexprError as e:
        print(f"{PROG}: parse error: {e}", file=sys.stderr)
        return 1
    except (TheoryError, LogicError, ValueError) as e:
        print(f"{PROG}: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"{PROG}: cannot read {e.filename}: {e.strerror}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
