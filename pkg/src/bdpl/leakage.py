"""Exact Bayesian differential privacy leakage by exhaustive enumeration.

For an adversary A(i, K) the leakage of a mechanism Y is

    sup over x_i, x_i', x_K, y of  ln P(y | x_i, x_K) / P(y | x_i', x_K)

where P(y | x_i, x_K) averages the kernel over the unknown tuples under the
conditional prior. Only singleton outputs are enumerated: for nonnegative
a_k, b_k the ratio of sums never exceeds the largest termwise ratio, so no
event can beat its best member (`event_sup_check` confirms this on small
alphabets).

Conventions:

* (x_i, x_K) with zero prior mass is excluded and listed in ``skipped``.
* 0/0 output ratios are ignored; positive/0 gives +inf.
* Ties keep the first maximum in the order (aux, x_K, x_i, x_i', y).
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional, Sequence

import numpy as np

from bdpl.errors import BudgetExceeded, MechanismError, ZeroConditioning
from bdpl.mechanism import Mechanism
from bdpl.model import (AdversaryView, CorrelationModel, all_views,
                        enumerate_assignments)

DEFAULT_BUDGET = 10**7
REL_TOL = 1e-10
INF = math.inf


@dataclass(frozen=True)
class Witness:
  """Inputs attaining an adversary's leakage supremum."""

  x_i: Any
  x_i_prime: Any
  x_K: tuple
  y: Any
  aux: tuple = ()

  def to_dict(self) -> dict:
    out = {"x_i": _j(self.x_i), "x_i_prime": _j(self.x_i_prime),
           "x_K": _j(self.x_K), "y": _j(self.y)}
    if self.aux:
      out["aux"] = _j(self.aux)
    return out

  def __str__(self) -> str:
    aux = f", aux={self.aux!r}" if self.aux else ""
    return (f"(x_i={self.x_i!r}, x_i'={self.x_i_prime!r}, x_K={self.x_K!r}, "
            f"y={self.y!r}{aux})")


@dataclass(frozen=True)
class AdversaryLeakage:
  view: AdversaryView
  bdpl: float
  witness: Optional[Witness]
  ratio: Any = None  # Fraction in exact mode, float otherwise; inf allowed


@dataclass(frozen=True)
class Skipped:
  """A target value excluded from the sup because its evidence is impossible."""

  view: AdversaryView
  x_i: Any
  x_K: tuple


@dataclass
class LeakageReport:
  per_adversary: dict
  overall: float
  overall_ratio: Any
  skipped: list = field(default_factory=list)
  exact: bool = False

  @property
  def finite(self) -> bool:
    return math.isfinite(self.overall)

  def worst(self) -> AdversaryLeakage:
    """First adversary (in (i, K) order) attaining the overall value."""
    for entry in self.per_adversary.values():
      if _geq(entry.ratio, self.overall_ratio, self.exact):
        return entry
    raise AssertionError("no adversary attains the overall value")

  def to_dict(self) -> dict:
    per = []
    for view, e in self.per_adversary.items():
      row = {"i": view.target, "K": list(view.known),
             "bdpl": format_leakage(e.bdpl)}
      if self.exact:
        row["ratio"] = format_ratio(e.ratio)
      row["witness"] = e.witness.to_dict() if e.witness else None
      per.append(row)
    out = {"overall": format_leakage(self.overall)}
    if self.exact:
      out["overall_ratio"] = format_ratio(self.overall_ratio)
    out["exact"] = self.exact
    out["zero_mass_policy"] = "excluded"
    out["per_adversary"] = per
    out["skipped"] = [{"i": s.view.target, "K": list(s.view.known),
                       "x_i": _j(s.x_i), "x_K": _j(s.x_K)}
                      for s in self.skipped]
    return out

  def table(self) -> str:
    lines = []
    for view, e in self.per_adversary.items():
      wit = f" witness={e.witness}" if e.witness else ""
      lines.append(f"{view} bdpl={format_leakage(e.bdpl)}{wit}")
    return "\n".join(lines)


def format_leakage(value: float):
  return "inf" if value == INF else float(value)


def format_ratio(value):
  if value == INF:
    return "inf"
  return str(value) if isinstance(value, Fraction) else float(value)


def _j(v):
  if isinstance(v, tuple):
    return [_j(u) for u in v]
  return v


def _geq(a, b, exact: bool) -> bool:
  if exact or a == INF or b == INF:
    return a >= b
  return a >= b * (1 - REL_TOL)


def _log_ratio(num, den) -> float:
  """ln(num/den) for exact or float nonnegative values."""
  if den == 0:
    return INF if num > 0 else math.nan
  if num == 0:
    return -INF
  if isinstance(num, Fraction) or isinstance(den, Fraction):
    q = Fraction(num) / Fraction(den)
    return math.log(q.numerator) - math.log(q.denominator)
  return math.log(num / den)


def check_budget(m: Mechanism, model: CorrelationModel,
                 budget: int = DEFAULT_BUDGET) -> int:
  cells = math.prod(model.shape) * len(m.alphabet)
  cells *= math.prod(len(a) for a in m.aux_alphabets)
  if cells > budget:
    raise BudgetExceeded(cells, budget)
  return cells


def _kernel_arrays(m: Mechanism, model: CorrelationModel):
  """Yields (aux assignment, full-database kernel array) pairs."""
  full = m.on(model.domains)
  n = model.n
  for aux in m.aux_assignments():
    idx = ((slice(None),) * n
           + tuple(a.index(s) for a, s in zip(m.aux_alphabets, aux)))
    yield aux, full[idx]


def _conditionals(joint: np.ndarray, kernel: np.ndarray,
                  view: AdversaryView):
  """P(y | x_i, x_K) as an array of shape (|D_i|, |D_K|, |Y|).

  Also returns the (|D_i|, |D_K|) boolean mask of feasible conditionings.
  """
  n = joint.ndim
  i = view.target - 1
  known = [k - 1 for k in view.known]
  unknown = [u - 1 for u in view.unknown(n)]
  perm = [i] + known + unknown
  weighted = (joint[..., None] * kernel).transpose(perm + [n])
  mass = joint.transpose(perm)
  if unknown:
    axes = tuple(range(1 + len(known), n))
    weighted = weighted.sum(axis=axes)
    mass = mass.sum(axis=axes)
  d_i = joint.shape[i]
  mass = mass.reshape(d_i, -1)
  weighted = weighted.reshape(d_i, mass.shape[1], kernel.shape[-1])
  feasible = np.asarray(mass > 0, dtype=bool)
  if joint.dtype == object:
    safe = np.where(feasible, mass, Fraction(1))
  else:
    safe = np.where(feasible, mass, 1.0)
  cond = weighted / safe[..., None]
  return cond, feasible


def _view_sup(cond: np.ndarray, feasible: np.ndarray, exact: bool):
  """Best (ratio, log value, (k_K, a, b, y)) over one conditional array."""
  d_i, n_k, n_y = cond.shape
  if exact:
    best_ratio, best_idx = None, None
    for k in range(n_k):
      for a in range(d_i):
        if not feasible[a, k]:
          continue
        for b in range(d_i):
          if not feasible[b, k]:
            continue
          for y in range(n_y):
            num, den = cond[a, k, y], cond[b, k, y]
            if den == 0:
              if num == 0:
                continue
              r = INF
            else:
              r = num / den
            if best_ratio is None or r > best_ratio:
              best_ratio, best_idx = r, (k, a, b, y)
    if best_ratio is None:
      return None
    k, a, b, y = best_idx
    return best_ratio, _log_ratio(cond[a, k, y], cond[b, k, y]), best_idx
  num = cond.transpose(1, 0, 2)[:, :, None, :]  # (K, a, 1, y)
  den = cond.transpose(1, 0, 2)[:, None, :, :]  # (K, 1, b, y)
  ok = feasible.T[:, :, None, None] & feasible.T[:, None, :, None]
  with np.errstate(divide="ignore", invalid="ignore"):
    logs = np.log(num / den)
  logs = np.where(ok & ~np.isnan(logs), logs, -INF)
  flat = logs.reshape(-1)
  if flat.size == 0 or not np.any(ok):
    return None
  best = flat.max()
  if best == INF:
    pos = int(np.argmax(flat == INF))
  else:
    pos = int(np.argmax(flat >= best - REL_TOL * max(1.0, abs(best))))
  k, a, b, y = np.unravel_index(pos, logs.shape)
  value = float(flat[pos])
  return math.exp(value) if value != INF else INF, value, (k, a, b, y)


def _adversary(m: Mechanism, model: CorrelationModel, view: AdversaryView,
               arrays=None):
  view.check(model.n)
  exact = model.exact and m.exact
  joint = model.table
  if model.exact and not m.exact:
    joint = joint.astype(np.float64)
  known_values = enumerate_assignments(model, view.known)
  target_dom = model.domains[view.target - 1]
  best = None
  feasible = None
  for aux, kernel in (arrays or _kernel_arrays(m, model)):
    if m.exact and not model.exact:
      kernel = kernel.astype(np.float64)
    cond, feasible = _conditionals(joint, kernel, view)
    found = _view_sup(cond, feasible, exact)
    if found is None:
      continue
    ratio, value, (k, a, b, y) = found
    if best is None or (ratio > best[0] if exact else
                        value > best[1] + REL_TOL * max(1.0, abs(best[1]))):
      wit = Witness(target_dom.values[a], target_dom.values[b],
                    known_values[k], m.alphabet.symbols[y], tuple(aux))
      best = (ratio, value, wit)
  skipped = []
  if feasible is not None:
    for k, x_K in enumerate(known_values):
      for a, x_i in enumerate(target_dom.values):
        if not feasible[a, k]:
          skipped.append(Skipped(view, x_i, x_K))
  if best is None:
    return AdversaryLeakage(view, 0.0, None, Fraction(1) if exact else 1.0), \
        skipped
  ratio, value, wit = best
  return AdversaryLeakage(view, value, wit, ratio), skipped


def output_distribution(m: Mechanism, model: CorrelationModel,
                        view: AdversaryView, x_i, x_K,
                        aux: Sequence = ()) -> dict:
  """P(Y = y | X_i = x_i, X_K = x_K) for every output symbol.

  Raises:
    ZeroConditioning: the evidence (x_i, x_K) has zero prior mass.
  """
  view.check(model.n)
  m_fixed = m.fix_aux(aux) if m.aux_arity else m
  kernel = m_fixed.on(model.domains)
  joint = model.table
  if model.exact != m.exact:
    joint = joint.astype(np.float64)
    kernel = kernel.astype(np.float64)
  cond, feasible = _conditionals(joint, kernel, view)
  x_K = tuple(x_K.get(k) for k in view.known) if isinstance(x_K, dict) \
      else tuple(x_K)
  known_values = enumerate_assignments(model, view.known)
  try:
    k = known_values.index(x_K)
  except ValueError:
    raise MechanismError(f"x_K={x_K!r} is not an assignment of "
                         f"K={view.known}") from None
  a = model.domains[view.target - 1].index(x_i)
  if not feasible[a, k]:
    raise ZeroConditioning(f"Pr[X_{view.target}={x_i!r}, X_K={x_K!r}] = 0")
  return dict(zip(m.alphabet.symbols, cond[a, k]))


def bdpl_adversary(m: Mechanism, model: CorrelationModel,
                   view: AdversaryView) -> tuple:
  """Leakage of ``m`` against one adversary: ``(value, witness)``.

  The value is +inf when some output has positive probability under x_i and
  zero under x_i'. Auxiliary inputs, if any, are part of the supremum.
  """
  entry, _ = _adversary(m, model, view)
  return entry.bdpl, entry.witness


def bdpl(m: Mechanism, model: CorrelationModel,
         budget: int = DEFAULT_BUDGET) -> LeakageReport:
  """Leakage against every adversary A(i, K) of the model.

  Raises:
    BudgetExceeded: the model and alphabet are too large to enumerate.
  """
  check_budget(m, model, budget)
  exact = model.exact and m.exact
  arrays = list(_kernel_arrays(m, model))
  per, skipped = {}, []
  for view in all_views(model.n):
    entry, skip = _adversary(m, model, view, arrays)
    per[view] = entry
    skipped.extend(skip)
  best = None
  for e in per.values():
    if best is None or (e.ratio > best.ratio if exact
                        else e.bdpl > best.bdpl):
      best = e
  return LeakageReport(per, best.bdpl, best.ratio, skipped, exact)


def evaluate_witness(m: Mechanism, model: CorrelationModel,
                     view: AdversaryView, witness: Witness) -> float:
  """Recomputes the log-ratio a witness claims, from scratch."""
  p = output_distribution(m, model, view, witness.x_i, witness.x_K,
                          witness.aux)
  q = output_distribution(m, model, view, witness.x_i_prime, witness.x_K,
                          witness.aux)
  return _log_ratio(p[witness.y], q[witness.y])


def event_sup_check(m: Mechanism, model: CorrelationModel,
                    view: AdversaryView, max_alphabet: int = 12) -> bool:
  """Checks that no output event beats the best singleton for ``view``.

  Enumerates all ``2**|alphabet| - 1`` nonempty events; 0/0 events are
  ignored. Comparisons use a relative tolerance of 1e-10.

  Raises:
    MechanismError: the alphabet is larger than ``max_alphabet``.
  """
  n_y = len(m.alphabet)
  if n_y > max_alphabet:
    raise MechanismError(f"alphabet of {n_y} symbols exceeds "
                         f"max_alphabet={max_alphabet}")
  events = np.array([[(mask >> y) & 1 for y in range(n_y)]
                     for mask in range(1, 2**n_y)], dtype=float)
  joint = model.table.astype(np.float64)
  for _, kernel in _kernel_arrays(m, model):
    cond, feasible = _conditionals(joint, kernel.astype(np.float64), view)
    mass = cond @ events.T  # (d_i, K, events)
    for k in range(cond.shape[1]):
      for a, b in itertools.product(range(cond.shape[0]), repeat=2):
        if not (feasible[a, k] and feasible[b, k]):
          continue
        single = _max_log_ratio(cond[a, k], cond[b, k])
        multi = _max_log_ratio(mass[a, k], mass[b, k])
        if single == multi:
          continue
        if single == INF or multi == INF:
          return False
        if abs(multi - single) > REL_TOL * max(1.0, abs(single)):
          return False
  return True


def _max_log_ratio(p: np.ndarray, q: np.ndarray) -> float:
  best = -INF
  for num, den in zip(p, q):
    if num == 0 and den == 0:
      continue
    best = max(best, _log_ratio(num, den))
  return best
