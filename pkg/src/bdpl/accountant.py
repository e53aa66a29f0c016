"""Symbolic privacy-budget ledger for composed mechanisms.

Pricing rules: sequential charges add up, a parallel group costs the largest
of its block charges, and post-processing is free. The ledger is
append-only; every ``charge_*`` call returns a new ledger and the total is
always recomputed from the entry list, so replaying the same entries gives
the same total bit for bit.
"""

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from bdpl.errors import FormatError, LedgerError, PlanError
from bdpl.mechanism import CompositionPlan

SEQUENTIAL = "sequential"
PARALLEL = "parallel"
POSTPROCESS = "postprocess"


@dataclass(frozen=True)
class LedgerEntry:
  label: str
  epsilon: float
  rule: str
  block: Optional[int] = None
  parent: Optional[str] = None

  def to_dict(self) -> dict:
    out = {"label": self.label, "epsilon": _eps_json(self.epsilon),
           "rule": self.rule}
    if self.block is not None:
      out["block"] = self.block
    if self.parent is not None:
      out["parent"] = self.parent
    return out

  @classmethod
  def from_dict(cls, data) -> "LedgerEntry":
    try:
      eps = data.get("epsilon", 0.0)
      eps = math.inf if eps == "inf" else float(eps)
      return cls(str(data["label"]), eps, data["rule"], data.get("block"),
                 data.get("parent"))
    except (KeyError, TypeError, ValueError, AttributeError) as e:
      raise FormatError(f"malformed ledger entry {data!r}: {e}") from None


def _eps_json(eps: float):
  return "inf" if eps == math.inf else eps


def _check_eps(eps) -> float:
  eps = float(eps)
  if math.isnan(eps) or eps < 0:
    raise LedgerError(f"epsilon must be nonnegative, got {eps!r}")
  return eps


class BudgetLedger:
  """Ordered, append-only list of privacy charges."""

  def __init__(self, entries: Sequence[LedgerEntry] = ()):
    self.entries = ()
    for e in entries:
      self.entries = self._appended(e).entries

  def _appended(self, entry: LedgerEntry) -> "BudgetLedger":
    _check_eps(entry.epsilon)
    labels = {e.label for e in self.entries}
    if entry.rule == SEQUENTIAL:
      if entry.label in labels:
        raise LedgerError(f"duplicate label {entry.label!r}")
    elif entry.rule == PARALLEL:
      if entry.block is None:
        raise LedgerError("parallel entry without a block number")
      group = [e for e in self.entries if e.label == entry.label]
      if any(e.rule != PARALLEL for e in group):
        raise LedgerError(f"duplicate label {entry.label!r}")
      if group and (group[-1] is not self.entries[-1]
                    or any(e.block == entry.block for e in group)):
        raise LedgerError(f"parallel group {entry.label!r} is closed or "
                          f"repeats block {entry.block}")
    elif entry.rule == POSTPROCESS:
      if entry.label in labels:
        raise LedgerError(f"duplicate label {entry.label!r}")
      if entry.parent not in labels:
        raise LedgerError(f"unknown parent {entry.parent!r}")
      if entry.epsilon != 0:
        raise LedgerError("post-processing entries carry epsilon 0")
    else:
      raise LedgerError(f"unknown rule {entry.rule!r}")
    ledger = BudgetLedger.__new__(BudgetLedger)
    ledger.entries = self.entries + (entry,)
    return ledger

  def charge_sequential(self, label: str, eps: float) -> "BudgetLedger":
    return self._appended(LedgerEntry(label, _check_eps(eps), SEQUENTIAL))

  def charge_parallel(self, label: str,
                      eps_blocks: Sequence[float]) -> "BudgetLedger":
    if not eps_blocks:
      raise LedgerError("a parallel charge needs at least one block")
    ledger = self
    for block, eps in enumerate(eps_blocks, start=1):
      ledger = ledger._appended(
          LedgerEntry(label, _check_eps(eps), PARALLEL, block=block))
    return ledger

  def charge_postprocess(self, label: str, parent: str) -> "BudgetLedger":
    return self._appended(LedgerEntry(label, 0.0, POSTPROCESS, parent=parent))

  @property
  def total(self) -> float:
    terms, groups = [], {}
    for e in self.entries:
      if e.rule == SEQUENTIAL:
        terms.append(e.epsilon)
      elif e.rule == PARALLEL:
        groups[e.label] = max(groups.get(e.label, 0.0), e.epsilon)
    terms.extend(groups.values())
    if math.inf in terms:
      return math.inf
    return math.fsum(terms)

  def to_jsonl(self) -> str:
    return "".join(json.dumps(e.to_dict()) + "\n" for e in self.entries)

  @classmethod
  def from_jsonl(cls, text: str) -> "BudgetLedger":
    entries = []
    for lineno, line in enumerate(text.splitlines(), start=1):
      if not line.strip():
        continue
      try:
        data = json.loads(line)
      except json.JSONDecodeError as e:
        raise FormatError(f"line {lineno} column {e.colno}: {e.msg}") from None
      entries.append(LedgerEntry.from_dict(data))
    return cls(entries)

  @classmethod
  def load(cls, path) -> "BudgetLedger":
    with open(path) as f:
      return cls.from_jsonl(f.read())

  def append_to(self, path, start: int = 0) -> None:
    """Appends entries ``start:`` to a JSON-lines file."""
    with open(path, "a") as f:
      for e in self.entries[start:]:
        f.write(json.dumps(e.to_dict()) + "\n")

  def __len__(self):
    return len(self.entries)

  def __repr__(self):
    return f"BudgetLedger({len(self.entries)} entries, total={self.total})"


def charge_sequential(ledger: BudgetLedger, label: str,
                      eps: float) -> BudgetLedger:
  return ledger.charge_sequential(label, eps)


def charge_parallel(ledger: BudgetLedger, label: str,
                    eps_blocks: Sequence[float]) -> BudgetLedger:
  return ledger.charge_parallel(label, eps_blocks)


def charge_postprocess(ledger: BudgetLedger, label: str,
                       parent: str) -> BudgetLedger:
  return ledger.charge_postprocess(label, parent)


def certify(plan: CompositionPlan, stage_eps: Sequence) -> float:
  """Upper bound on the composed mechanism's leakage from per-stage bounds.

  Sequential plans cost the sum of their stage bounds, parallel plans the
  maximum. A stage that is itself a plan takes a nested list of bounds and
  is priced recursively.
  """
  if len(stage_eps) != len(plan.stages):
    raise PlanError(f"{len(stage_eps)} stage bounds for "
                    f"{len(plan.stages)} stages")
  costs = []
  for stage, eps in zip(plan.stages, stage_eps):
    if isinstance(stage.mechanism, CompositionPlan):
      if isinstance(eps, (int, float)):
        costs.append(_check_eps(eps))
      else:
        costs.append(certify(stage.mechanism, eps))
    else:
      costs.append(_check_eps(eps))
  if plan.mode == "parallel":
    return max(costs)
  if math.inf in costs:
    return math.inf
  return math.fsum(costs)
