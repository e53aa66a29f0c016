"""Finite correlated-tuple databases stored as explicit joint distributions.

A database has ``n`` tuples indexed ``1..n``; tuple ``j`` takes values in a
finite `TupleDomain`. The prior over databases is a dense table with one
cell per full assignment. Probabilities are either float64 or exact
`fractions.Fraction` values (stored in an object array); every query keeps
the arithmetic of the model it was asked about.
"""

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Hashable, Iterable, Mapping, Sequence

import numpy as np

from bdpl.errors import FormatError, ModelError, ZeroConditioning

Value = Hashable
Assignment = tuple
PartialAssignment = Mapping[int, Value]

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True)
class TupleDomain:
  """Ordered finite set of values one tuple can take."""

  values: tuple

  def __post_init__(self):
    values = tuple(self.values)
    object.__setattr__(self, "values", values)
    if not values:
      raise ModelError("a tuple domain needs at least one value")
    if len(set(values)) != len(values):
      raise ModelError(f"duplicate values in domain {values!r}")

  def __len__(self) -> int:
    return len(self.values)

  def __iter__(self):
    return iter(self.values)

  def index(self, value: Value) -> int:
    try:
      return self.values.index(value)
    except ValueError:
      raise ModelError(f"{value!r} is not in domain {self.values!r}") from None


@dataclass(frozen=True, order=True)
class AdversaryView:
  """The adversary A(i, K): attacks tuple ``target``, knows tuples ``known``.

  Indices are 1-based. ``known`` is normalised to a sorted tuple so that
  views order lexicographically by ``(target, known)``.
  """

  target: int
  known: tuple = ()

  def __post_init__(self):
    known = tuple(sorted(set(self.known)))
    object.__setattr__(self, "known", known)
    if self.target in known:
      raise ModelError(f"target {self.target} cannot be a known tuple")

  def unknown(self, n: int) -> tuple:
    """Indices of tuples that are neither the target nor known."""
    return tuple(j for j in range(1, n + 1)
                 if j != self.target and j not in self.known)

  def check(self, n: int) -> None:
    for j in (self.target, *self.known):
      if not 1 <= j <= n:
        raise ModelError(f"tuple index {j} out of range 1..{n}")

  def __str__(self) -> str:
    known = ",".join(str(k) for k in self.known)
    return f"i={self.target} K={{{known}}}"


def all_views(n: int) -> list:
  """Every adversary A(i, K), sorted by (i, K)."""
  views = []
  for i in range(1, n + 1):
    others = [j for j in range(1, n + 1) if j != i]
    for r in range(len(others) + 1):
      for known in itertools.combinations(others, r):
        views.append(AdversaryView(i, known))
  return sorted(views)


class CorrelationModel:
  """Explicit joint distribution Pr[X] over ``n`` discrete tuples.

  Args:
    domains: one `TupleDomain` per tuple, in index order.
    table: array of shape ``(|D_1|, ..., |D_n|)`` holding the probability of
      each full assignment. An object array of `Fraction` values selects
      exact arithmetic.
    renormalize: divide by the total mass instead of rejecting a table that
      does not sum to one.
  """

  def __init__(self, domains: Sequence[TupleDomain], table: Any,
               renormalize: bool = False):
    self.domains = tuple(
        d if isinstance(d, TupleDomain) else TupleDomain(tuple(d))
        for d in domains)
    if not self.domains:
      raise ModelError("a model needs at least one tuple")
    table = np.asarray(table)
    exact = table.dtype == object
    if exact:
      table = np.vectorize(Fraction, otypes=[object])(table)
    else:
      table = table.astype(np.float64)
    shape = tuple(len(d) for d in self.domains)
    if table.shape != shape:
      raise ModelError(f"table shape {table.shape} does not match domains "
                       f"{shape}")
    if exact:
      if any(p < 0 for p in table.flat):
        raise ModelError("negative probability in joint table")
    elif not np.all(np.isfinite(table)) or np.any(table < 0):
      raise ModelError("joint table must hold finite nonnegative values")
    total = table.sum()
    if total <= 0:
      raise ModelError("joint table has no mass")
    if renormalize:
      table = table / total
    elif exact and total != 1:
      raise ModelError(f"joint table sums to {total}, not 1")
    elif not exact and abs(total - 1.0) > NORMALIZATION_TOL:
      raise ModelError(f"joint table sums to {total!r}, not 1 "
                       f"(tolerance {NORMALIZATION_TOL})")
    table.flags.writeable = False
    self.table = table

  @classmethod
  def from_cells(cls, domains: Sequence[Any],
                 cells: Mapping[Assignment, Any] | Iterable[tuple],
                 renormalize: bool = False, exact: bool = False):
    """Builds a model from ``{assignment: probability}``; omitted cells are 0."""
    domains = tuple(
        d if isinstance(d, TupleDomain) else TupleDomain(tuple(d))
        for d in domains)
    shape = tuple(len(d) for d in domains)
    if exact:
      table = np.full(shape, Fraction(0), dtype=object)
    else:
      table = np.zeros(shape)
    items = cells.items() if isinstance(cells, Mapping) else cells
    seen = set()
    for x, p in items:
      x = tuple(x)
      if len(x) != len(domains):
        raise ModelError(f"assignment {x!r} has {len(x)} coordinates, "
                         f"expected {len(domains)}")
      idx = tuple(d.index(v) for d, v in zip(domains, x))
      if idx in seen:
        raise ModelError(f"duplicate cell {x!r}")
      seen.add(idx)
      table[idx] = Fraction(p) if exact else float(p)
    return cls(domains, table, renormalize=renormalize)

  @classmethod
  def independent(cls, marginals: Sequence[Mapping[Value, Any]]):
    """Product model from one ``{value: probability}`` map per tuple."""
    domains = [TupleDomain(tuple(m)) for m in marginals]
    exact = any(isinstance(p, Fraction) for m in marginals
                for p in m.values())
    factors = [np.array(list(m.values()), dtype=object if exact else float)
               for m in marginals]
    table = factors[0]
    for f in factors[1:]:
      table = np.multiply.outer(table, f)
    return cls(domains, table)

  @property
  def n(self) -> int:
    return len(self.domains)

  @property
  def shape(self) -> tuple:
    return self.table.shape

  @property
  def exact(self) -> bool:
    return self.table.dtype == object

  @property
  def joint(self) -> dict:
    """``{full assignment: probability}`` over every cell, zeros included."""
    out = {}
    for idx in np.ndindex(*self.shape):
      out[self._values(idx)] = self.table[idx]
    return out

  def prob(self, x: Sequence[Value]) -> Any:
    return self.table[self._index(x)]

  def to_float(self) -> "CorrelationModel":
    if not self.exact:
      return self
    return CorrelationModel(self.domains, self.table.astype(np.float64))

  def to_exact(self) -> "CorrelationModel":
    """Exact copy; float cells are read through their shortest decimal repr."""
    if self.exact:
      return self
    table = np.vectorize(lambda p: Fraction(repr(float(p))),
                         otypes=[object])(self.table)
    return CorrelationModel(self.domains, table, renormalize=True)

  def independent_tuples(self, tol: float = 1e-12) -> bool:
    """True if the joint factorises into its one-tuple marginals."""
    table = self.table
    product = None
    for j in range(self.n):
      axes = tuple(a for a in range(self.n) if a != j)
      m = table.sum(axis=axes) if axes else table
      product = m if product is None else np.multiply.outer(product, m)
    if self.exact:
      return bool(np.all(product == table))
    return bool(np.allclose(product, table, rtol=0, atol=tol))

  def _index(self, x: Sequence[Value]) -> tuple:
    if len(x) != self.n:
      raise ModelError(f"expected {self.n} coordinates, got {len(x)}")
    return tuple(d.index(v) for d, v in zip(self.domains, x))

  def _values(self, idx: Sequence[int]) -> Assignment:
    return tuple(d.values[k] for d, k in zip(self.domains, idx))

  def __eq__(self, other):
    return (isinstance(other, CorrelationModel)
            and self.domains == other.domains
            and self.table.dtype == other.table.dtype
            and np.array_equal(self.table, other.table))

  def __hash__(self):
    return hash((self.domains, self.table.tobytes()
                 if not self.exact else tuple(self.table.flat)))

  def __repr__(self):
    kind = "exact" if self.exact else "float"
    return f"CorrelationModel(n={self.n}, shape={self.shape}, {kind})"


def _check_indices(model: CorrelationModel, indices: Iterable[int]) -> tuple:
  indices = tuple(sorted(set(indices)))
  for j in indices:
    if not 1 <= j <= model.n:
      raise ModelError(f"tuple index {j} out of range 1..{model.n}")
  return indices


def enumerate_assignments(model: CorrelationModel,
                          indices: Iterable[int]) -> list:
  """All joint values of the tuples at ``indices``, lexicographically.

  Indices are sorted first; the empty index set yields ``[()]``.
  """
  indices = _check_indices(model, indices)
  return list(itertools.product(*(model.domains[j - 1].values
                                  for j in indices)))


def _as_partial(model: CorrelationModel, assignment) -> dict:
  partial = dict(assignment)
  _check_indices(model, partial)
  for j, v in partial.items():
    model.domains[j - 1].index(v)
  return partial


def marginal(model: CorrelationModel, assignment: PartialAssignment) -> Any:
  """Pr[X_S = x_S] for a partial assignment ``{index: value}``."""
  partial = _as_partial(model, assignment)
  idx = tuple(
      model.domains[j].index(partial[j + 1]) if j + 1 in partial
      else slice(None)
      for j in range(model.n))
  return np.sum(model.table[idx])


def conditional_prior(model: CorrelationModel, view: AdversaryView,
                      x_i: Value, x_K) -> dict:
  """Pr[X_Kbar = . | X_i = x_i, X_K = x_K] for the view's unknown tuples.

  Args:
    model: the database prior.
    view: adversary A(i, K).
    x_i: value of the target tuple.
    x_K: values of the known tuples, either a mapping ``{index: value}`` or
      a sequence aligned with ``view.known``.

  Returns:
    ``{x_Kbar: weight}`` keyed by assignments of ``view.unknown(n)`` in
    lexicographic order. Cells of zero mass are included with weight 0.

  Raises:
    ZeroConditioning: Pr[X_i = x_i, X_K = x_K] is zero.
  """
  view.check(model.n)
  evidence = _evidence(view, x_i, x_K)
  mass = marginal(model, evidence)
  if mass == 0:
    raise ZeroConditioning(
        f"Pr[X_{view.target}={x_i!r}, X_K={dict(sorted(evidence.items()))}]"
        " is zero")
  unknown = view.unknown(model.n)
  out = {}
  for x_u in enumerate_assignments(model, unknown):
    cell = dict(evidence)
    cell.update(zip(unknown, x_u))
    out[x_u] = model.prob([cell[j] for j in range(1, model.n + 1)]) / mass
  return out


def _evidence(view: AdversaryView, x_i: Value, x_K) -> dict:
  if isinstance(x_K, Mapping):
    known = dict(x_K)
    if set(known) != set(view.known):
      raise ModelError(f"x_K keys {sorted(known)} do not match K="
                       f"{list(view.known)}")
  else:
    x_K = tuple(x_K)
    if len(x_K) != len(view.known):
      raise ModelError(f"x_K has {len(x_K)} values, K has "
                       f"{len(view.known)} indices")
    known = dict(zip(view.known, x_K))
  known[view.target] = x_i
  return known


# ---------------------------------------------------------------------------
# JSON file format:
#   {"n": int, "domains": [[values...], ...],
#    "joint": [{"x": [v1, ..., vn], "p": float | "num/den"}, ...]}
# Omitted cells have probability zero.


def _parse_prob(p, exact: bool):
  if isinstance(p, bool):
    raise ModelError(f"bad probability {p!r}")
  if isinstance(p, str):
    try:
      value = Fraction(p)
    except ValueError:
      raise ModelError(f"bad probability {p!r}") from None
    return value if exact else float(value)
  if isinstance(p, (int, float, Fraction)):
    if exact:
      return p if isinstance(p, Fraction) else Fraction(repr(p))
    return float(p)
  raise ModelError(f"bad probability {p!r}")


def model_from_dict(data: Mapping, renormalize: bool = False,
                    exact: bool = False) -> CorrelationModel:
  try:
    domains = [TupleDomain(tuple(_hashable(v) for v in d))
               for d in data["domains"]]
    n = data.get("n", len(domains))
    if n != len(domains):
      raise ModelError(f"n={n} but {len(domains)} domains given")
    cells = [(tuple(_hashable(v) for v in c["x"]), _parse_prob(c["p"], exact))
             for c in data["joint"]]
  except (KeyError, TypeError) as e:
    raise FormatError(f"malformed model: {e!r}") from None
  return CorrelationModel.from_cells(domains, cells, renormalize=renormalize,
                                     exact=exact)


def model_to_dict(model: CorrelationModel, include_zero: bool = False) -> dict:
  joint = []
  for x, p in model.joint.items():
    if p == 0 and not include_zero:
      continue
    joint.append({"x": list(x), "p": format_prob(p)})
  return {
      "n": model.n,
      "domains": [list(d.values) for d in model.domains],
      "joint": joint,
  }


def format_prob(p):
  """JSON-ready probability: exact values as ``"num/den"`` strings."""
  if isinstance(p, Fraction):
    return str(p)
  return float(p)


def load_model(path, renormalize: bool = False,
               exact: bool = False) -> CorrelationModel:
  with open(path) as f:
    data = json.load(f)
  return model_from_dict(data, renormalize=renormalize, exact=exact)


def _hashable(v):
  if isinstance(v, list):
    return tuple(_hashable(u) for u in v)
  if isinstance(v, float) and math.isfinite(v) and v.is_integer():
    return int(v)
  return v
