"""Command-line front end: ``bdpl {analyze,compose,verify,account}``.

Exit codes:
  0   success (finite leakage, certificate holds, no violations)
  1   ``verify`` found a violation, or ``compose`` saw oracle > bound
  2   ``analyze``/``compose``: the leakage is infinite
  64  input could not be parsed (bad JSON, missing fields)
  65  inputs parse but are inconsistent (domains, alphabets, wiring, ...)
  66  an input file does not exist
  69  the enumeration budget would be exceeded

Machine output (``--out``) never contains timestamps or paths, so identical
inputs and flags give byte-identical files.
"""

import argparse
import json
import math
import sys
from dataclasses import fields
from typing import Optional, Sequence

from bdpl import __version__
from bdpl import verify as verify_mod
from bdpl.accountant import BudgetLedger, certify
from bdpl.errors import BDPLError, BudgetExceeded, FormatError
from bdpl.leakage import DEFAULT_BUDGET, bdpl, format_leakage
from bdpl.mechanism import (CompositionPlan, Mechanism, compose,
                            mechanism_from_dict, mechanism_to_dict,
                            plan_from_dict)
from bdpl.model import CorrelationModel, model_from_dict

EX_OK = 0
EX_VIOLATION = 1
EX_INFINITE = 2
EX_DATAERR = 64
EX_INCONSISTENT = 65
EX_NOINPUT = 66
EX_BUDGET = 69

SCOPE_NOTE = "stage leakage measured on the full model, stage scope only"


class _Fail(Exception):

  def __init__(self, code: int, message: str):
    super().__init__(message)
    self.code = code


def _read_json(path):
  try:
    with open(path) as f:
      text = f.read()
  except FileNotFoundError:
    raise _Fail(EX_NOINPUT, f"{path}: no such file") from None
  try:
    return json.loads(text)
  except json.JSONDecodeError as e:
    raise _Fail(EX_DATAERR,
                f"{path}:{e.lineno}:{e.colno}: {e.msg}") from None


def _load_model(path, args) -> CorrelationModel:
  return _tagged(path, model_from_dict, _read_json(path),
                 renormalize=args.renormalize, exact=args.exact)


def _tagged(path, fn, *a, **kw):
  try:
    return fn(*a, **kw)
  except FormatError as e:
    raise _Fail(EX_DATAERR, f"{path}: {e}") from None
  except BudgetExceeded:
    raise
  except (BDPLError, ValueError) as e:
    raise _Fail(EX_INCONSISTENT, f"{path}: {e}") from None


def _load_mechanism_or_plan(path, model, args):
  data = _read_json(path)
  if isinstance(data, dict) and "stages" in data:
    return _tagged(path, plan_from_dict, data, model.domains, args.exact)
  return _tagged(path, mechanism_from_dict, data, model.domains, args.exact)


def _dump(obj) -> str:
  return json.dumps(obj, indent=2, default=verify_mod._json_default) + "\n"


def _write_out(args, payload) -> None:
  if args.out:
    with open(args.out, "w") as f:
      f.write(_dump(payload))


def _say(args, line="") -> None:
  print(line, file=args.stdout)


def _header(args, text) -> None:
  if not args.no_header:
    _say(args, f"# bdpl {__version__} {text}")


def _six(x: float) -> str:
  return "inf" if x == math.inf else f"{x:.6f}"


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_analyze(args) -> int:
  model = _load_model(args.model, args)
  mech = _load_mechanism_or_plan(args.mechanism, model, args)
  if isinstance(mech, CompositionPlan):
    mech = _tagged(args.mechanism, compose, mech)
  report = _tagged(args.mechanism, bdpl, mech, model, args.budget)
  _write_out(args, report.to_dict())
  mode = "exact" if report.exact else "float"
  _header(args, f"analyze ({mode}, {len(report.per_adversary)} adversaries, "
          f"{len(report.skipped)} skipped conditionings)")
  _say(args, report.table())
  _say(args, f"overall bdpl={format_leakage(report.overall)}")
  return EX_OK if report.finite else EX_INFINITE


def _stage_mechanism(stage) -> Mechanism:
  mech = stage.mechanism
  return compose(mech) if isinstance(mech, CompositionPlan) else mech


def cmd_compose(args) -> int:
  model = _load_model(args.model, args)
  plan = _load_mechanism_or_plan(args.plan, model, args)
  if not isinstance(plan, CompositionPlan):
    raise _Fail(EX_INCONSISTENT, f"{args.plan}: not a composition plan")
  composed = _tagged(args.plan, compose, plan)
  stage_reports = [_tagged(args.plan, bdpl, _stage_mechanism(s), model,
                           args.budget) for s in plan.stages]
  stage_eps = [r.overall for r in stage_reports]
  bound = certify(plan, stage_eps)
  report = _tagged(args.plan, bdpl, composed, model, args.budget)
  oracle = report.overall
  holds = oracle == bound or oracle <= bound + verify_mod.TOL
  _write_out(args, {
      "mode": plan.mode,
      "release": plan.release,
      "stage_eps": [format_leakage(e) for e in stage_eps],
      "stage_eps_scope": SCOPE_NOTE,
      "bound": format_leakage(bound),
      "oracle": format_leakage(oracle),
      "certificate_holds": holds,
      "composed": mechanism_to_dict(composed),
      "report": report.to_dict(),
  })
  _header(args, f"compose ({plan.mode}, {len(plan.stages)} stages, "
          f"release={plan.release})")
  for ell, eps in enumerate(stage_eps, start=1):
    _say(args, f"stage {ell} eps={format_leakage(eps)}")
  _say(args, f"bound={_six(bound)}, oracle={_six(oracle)}")
  if not holds:
    _say(args, f"oracle exceeds bound by {oracle - bound!r}")
    return EX_VIOLATION
  return EX_OK if report.finite else EX_INFINITE


def _load_config(path):
  """Base config plus the set of keys the file sets explicitly."""
  if path is None:
    return verify_mod.CaseConfig(), set()
  data = _read_json(path)
  known = {f.name for f in fields(verify_mod.CaseConfig)}
  if not isinstance(data, dict) or set(data) - known:
    extra = sorted(set(data) - known) if isinstance(data, dict) else data
    raise _Fail(EX_DATAERR, f"{path}: unknown config keys {extra!r}")
  try:
    return verify_mod.CaseConfig(**data), set(data)
  except (TypeError, ValueError) as e:
    raise _Fail(EX_INCONSISTENT, f"{path}: {e}") from None


def cmd_verify(args) -> int:
  base, explicit = _load_config(args.config)
  theorems = [1, 2, 3] if args.theorem == "all" else [int(args.theorem)]
  seeds = range(args.seed, args.seed + args.seeds)
  results = []
  for t in theorems:
    corpora = verify_mod.default_corpora(t, base)
    if t == 2 and "blocks" in explicit:
      corpora = [(base.blocks, base)]
    for corpus, config in corpora:
      results.append(verify_mod.sweep(t, seeds, config, corpus=corpus,
                                      jobs=args.jobs))
  if args.out:
    with open(args.out, "w") as f:
      f.write(verify_mod.report_json(results))
  _header(args, f"verify (seeds {seeds.start}..{seeds.stop - 1})")
  for r in results:
    w = r.witness
    _say(args, f"theorem {r.theorem} corpus={r.corpus} cases={len(r.cases)} "
         f"violations={r.violations} skipped={r.skipped} "
         f"equality witness: composed={w.composed_eps!r} bound={w.bound!r}")
    for ce in r.counterexamples:
      _say(args, f"  counterexample seed={ce['seed']} n={ce['model']['n']} "
           f"composed={ce['composed_eps']!r} bound={ce['bound']!r} "
           f"gap={ce['gap']!r}")
  total = sum(r.violations for r in results)
  _say(args, f"violations={total}")
  return EX_VIOLATION if total else EX_OK


def cmd_account(args) -> int:
  try:
    with open(args.ledger) as f:
      text = f.read()
  except FileNotFoundError:
    raise _Fail(EX_NOINPUT, f"{args.ledger}: no such file") from None
  ledger = _tagged(args.ledger, BudgetLedger.from_jsonl, text)
  _write_out(args, {"entries": [e.to_dict() for e in ledger.entries],
                    "total": format_leakage(ledger.total)})
  _header(args, f"account ({len(ledger)} entries)")
  _say(args, f"total {format_leakage(ledger.total)}")
  return EX_OK


# ---------------------------------------------------------------------------
# Argument parsing.


def _budget(text) -> int:
  value = int(text)
  if value <= 0:
    raise argparse.ArgumentTypeError("budget must be positive")
  return value


def _common(defaults: bool) -> argparse.ArgumentParser:
  """Global flags; accepted before or after the subcommand."""
  d = (lambda v: v) if defaults else (lambda v: argparse.SUPPRESS)
  p = argparse.ArgumentParser(add_help=False)
  p.add_argument("--exact", action="store_true", default=d(False),
                 help="exact rational arithmetic")
  p.add_argument("--budget", type=_budget, default=d(DEFAULT_BUDGET),
                 metavar="CELLS", help="enumeration budget in table cells")
  p.add_argument("--renormalize", action="store_true", default=d(False),
                 help="rescale a joint table that does not sum to 1")
  p.add_argument("--out", default=d(None), metavar="PATH",
                 help="write the machine-readable JSON report here")
  p.add_argument("--seed", type=int, default=d(0), metavar="N",
                 help="first seed of a verification sweep")
  p.add_argument("--no-header", action="store_true", default=d(False),
                 help="omit the header line of the human output")
  return p


def build_parser() -> argparse.ArgumentParser:
  parser = argparse.ArgumentParser(
      prog="bdpl", parents=[_common(True)],
      description="Bayesian differential privacy leakage of finite "
      "mechanisms on correlated data.")
  parser.add_argument("--version", action="version", version=__version__)
  sub = parser.add_subparsers(dest="command", required=True)
  common = [_common(False)]

  p = sub.add_parser("analyze", parents=common,
                     help="leakage of one mechanism for every adversary")
  p.add_argument("model")
  p.add_argument("mechanism")
  p.set_defaults(func=cmd_analyze)

  p = sub.add_parser("compose", parents=common,
                     help="compose a plan and compare oracle with bound")
  p.add_argument("model")
  p.add_argument("plan")
  p.set_defaults(func=cmd_compose)

  p = sub.add_parser("verify", parents=common,
                     help="seeded sweep of the composition rules")
  p.add_argument("--theorem", choices=["1", "2", "3", "all"], default="all")
  p.add_argument("--seeds", type=int, default=500, metavar="N")
  p.add_argument("--config", metavar="FILE")
  p.add_argument("--jobs", type=int, default=1)
  p.set_defaults(func=cmd_verify)

  p = sub.add_parser("account", parents=common,
                     help="replay a JSON-lines budget ledger")
  p.add_argument("ledger")
  p.set_defaults(func=cmd_account)
  return parser


def main(argv: Optional[Sequence[str]] = None, stdout=None,
         stderr=None) -> int:
  stdout = stdout or sys.stdout
  stderr = stderr or sys.stderr
  parser = build_parser()
  try:
    args = parser.parse_args(argv)
  except SystemExit as e:
    return EX_DATAERR if e.code not in (0, None) else EX_OK
  args.stdout = stdout
  try:
    return args.func(args)
  except _Fail as e:
    print(f"bdpl: {e}", file=stderr)
    return e.code
  except BudgetExceeded as e:
    print(f"bdpl: {e}", file=stderr)
    return EX_BUDGET
  except FormatError as e:
    print(f"bdpl: {e}", file=stderr)
    return EX_DATAERR
  except (BDPLError, ValueError) as e:
    print(f"bdpl: {e}", file=stderr)
    return EX_INCONSISTENT


def run() -> None:
  sys.exit(main())


if __name__ == "__main__":
  run()
