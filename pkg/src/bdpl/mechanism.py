"""Randomized mechanisms as finite stochastic kernels, and their compositions.

A `Mechanism` is a total table: for every assignment of the tuples it reads
(its *scope*) and every combination of auxiliary inputs it gets a
distribution over a finite `OutputAlphabet`. The table axes are
``(*scope, *aux, output)``.

Three combinators build derived kernels:

* `chain` runs stages one after another; each stage may consume earlier
  outputs as auxiliary inputs. Either only the last output or the whole
  transcript is released.
* `parallel` runs one stage per block of a partition of the tuples and
  releases the concatenation of the outputs.
* `post_process` pushes the output through a database-independent map.
"""

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Hashable, Mapping, Sequence, Union

import numpy as np

from bdpl.errors import (AlphabetMismatch, FormatError, MechanismError,
                         PlanError)
from bdpl.model import TupleDomain, _hashable, _parse_prob, format_prob

ROW_TOL = 1e-10


@dataclass(frozen=True)
class OutputAlphabet:
  """Ordered finite set of output symbols."""

  symbols: tuple

  def __post_init__(self):
    symbols = tuple(self.symbols)
    object.__setattr__(self, "symbols", symbols)
    if not symbols:
      raise MechanismError("an output alphabet needs at least one symbol")
    if len(set(symbols)) != len(symbols):
      raise MechanismError(f"duplicate symbols in alphabet {symbols!r}")

  def __len__(self) -> int:
    return len(self.symbols)

  def __iter__(self):
    return iter(self.symbols)

  def index(self, symbol) -> int:
    try:
      return self.symbols.index(symbol)
    except ValueError:
      raise AlphabetMismatch(
          f"{symbol!r} is not in alphabet {self.symbols!r}") from None

  @classmethod
  def product(cls, alphabets: Sequence["OutputAlphabet"]) -> "OutputAlphabet":
    return cls(tuple(itertools.product(*(a.symbols for a in alphabets))))


def _as_alphabet(a) -> OutputAlphabet:
  return a if isinstance(a, OutputAlphabet) else OutputAlphabet(tuple(a))


def _as_domain(d) -> TupleDomain:
  return d if isinstance(d, TupleDomain) else TupleDomain(tuple(d))


def _check_rows(table: np.ndarray, what: str) -> None:
  if table.dtype == object:
    if any(p < 0 for p in table.flat):
      raise MechanismError(f"{what}: negative probability")
    bad = [s for s in np.asarray(table.sum(axis=-1)).flat if s != 1]
    if bad:
      raise MechanismError(f"{what}: a row sums to {bad[0]}, not 1")
    return
  if not np.all(np.isfinite(table)) or np.any(table < 0):
    raise MechanismError(f"{what}: rows must be finite and nonnegative")
  err = np.max(np.abs(table.sum(axis=-1) - 1.0)) if table.size else 0.0
  if err > ROW_TOL:
    raise MechanismError(f"{what}: a row is off by {err:.3g} from 1")


def _normalise_table(table) -> np.ndarray:
  table = np.asarray(table)
  if table.dtype == object:
    return np.vectorize(Fraction, otypes=[object])(table)
  return table.astype(np.float64)


class Mechanism:
  """A stochastic kernel from (scope assignment, aux inputs) to outputs.

  Args:
    scope: 1-based indices of the tuples the kernel reads.
    domains: the `TupleDomain` of each scope tuple, aligned with ``scope``.
    alphabet: output symbols.
    table: array of shape ``(*scope dims, *aux dims, |alphabet|)``.
    aux_alphabets: one alphabet per auxiliary input.
    name: free-form label used in reports.
  """

  def __init__(self, scope: Sequence[int], domains: Sequence[Any],
               alphabet: Any, table: Any, aux_alphabets: Sequence[Any] = (),
               name: str = ""):
    scope = tuple(int(j) for j in scope)
    domains = tuple(_as_domain(d) for d in domains)
    if len(scope) != len(domains):
      raise MechanismError("scope and domains differ in length")
    if len(set(scope)) != len(scope) or any(j < 1 for j in scope):
      raise MechanismError(f"bad scope {scope!r}")
    table = _normalise_table(table)
    aux_alphabets = tuple(_as_alphabet(a) for a in aux_alphabets)
    alphabet = _as_alphabet(alphabet)
    shape = (tuple(len(d) for d in domains)
             + tuple(len(a) for a in aux_alphabets) + (len(alphabet),))
    if table.shape != shape:
      raise MechanismError(f"table shape {table.shape}, expected {shape}")
    order = sorted(range(len(scope)), key=lambda k: scope[k])
    if order != list(range(len(scope))):
      k = len(scope)
      perm = order + list(range(k, table.ndim))
      table = table.transpose(perm)
      scope = tuple(scope[o] for o in order)
      domains = tuple(domains[o] for o in order)
    table = np.ascontiguousarray(table)
    _check_rows(table, name or "mechanism")
    table.flags.writeable = False
    self.scope = scope
    self.domains = domains
    self.alphabet = alphabet
    self.aux_alphabets = aux_alphabets
    self.table = table
    self.name = name

  @classmethod
  def from_rows(cls, scope, domains, alphabet, rows: Mapping,
                aux_alphabets=(), name: str = "") -> "Mechanism":
    """Builds a kernel from ``{x_scope or (x_scope, aux): distribution}``.

    A distribution is a sequence aligned with ``alphabet`` or a
    ``{symbol: probability}`` mapping. Every row must be present.
    """
    domains = [_as_domain(d) for d in domains]
    alphabet = _as_alphabet(alphabet)
    aux_alphabets = [_as_alphabet(a) for a in aux_alphabets]
    exact = any(isinstance(p, Fraction)
                for d in rows.values()
                for p in (d.values() if isinstance(d, Mapping) else d))
    shape = ([len(d) for d in domains] + [len(a) for a in aux_alphabets]
             + [len(alphabet)])
    table = np.empty(shape, dtype=object if exact else float)
    filled = np.zeros(shape[:-1], dtype=bool)
    for key, dist in rows.items():
      if aux_alphabets:
        x, aux = key
      else:
        x, aux = (key, ()) if isinstance(key, tuple) else ((key,), ())
      x, aux = tuple(x), tuple(aux)
      if len(x) != len(domains) or len(aux) != len(aux_alphabets):
        raise MechanismError(f"bad row key {key!r}")
      idx = (tuple(d.index(v) for d, v in zip(domains, x))
             + tuple(a.index(s) for a, s in zip(aux_alphabets, aux)))
      if isinstance(dist, Mapping):
        vec = [dist.get(s, 0) for s in alphabet]
        unknown = set(dist) - set(alphabet.symbols)
        if unknown:
          raise AlphabetMismatch(f"symbols {unknown!r} not in alphabet")
      else:
        vec = list(dist)
        if len(vec) != len(alphabet):
          raise MechanismError(f"row {key!r} has {len(vec)} entries, "
                               f"alphabet has {len(alphabet)}")
      table[idx] = [Fraction(p) if exact else float(p) for p in vec]
      filled[idx] = True
    if not filled.all():
      missing = np.argwhere(~filled)[0]
      raise MechanismError(f"missing kernel row at index {tuple(missing)}")
    return cls(scope, domains, alphabet, table, aux_alphabets, name)

  @property
  def aux_arity(self) -> int:
    return len(self.aux_alphabets)

  @property
  def exact(self) -> bool:
    return self.table.dtype == object

  def row(self, x_scope: Sequence = (), aux: Sequence = ()) -> dict:
    """Output distribution ``{symbol: probability}`` for one input."""
    x_scope, aux = tuple(x_scope), tuple(aux)
    if len(x_scope) != len(self.scope) or len(aux) != self.aux_arity:
      raise MechanismError("row key does not match scope/aux arity")
    idx = (tuple(d.index(v) for d, v in zip(self.domains, x_scope))
           + tuple(a.index(s) for a, s in zip(self.aux_alphabets, aux)))
    return dict(zip(self.alphabet.symbols, self.table[idx]))

  def fix_aux(self, aux: Sequence) -> "Mechanism":
    """The aux-free kernel obtained by pinning every auxiliary input."""
    aux = tuple(aux)
    if len(aux) != self.aux_arity:
      raise MechanismError(f"expected {self.aux_arity} aux values")
    idx = ((slice(None),) * len(self.scope)
           + tuple(a.index(s) for a, s in zip(self.aux_alphabets, aux)))
    return Mechanism(self.scope, self.domains, self.alphabet, self.table[idx],
                     name=self.name)

  def aux_assignments(self) -> list:
    return list(itertools.product(*(a.symbols for a in self.aux_alphabets)))

  def on(self, domains: Sequence[TupleDomain]) -> np.ndarray:
    """The kernel as an array over full databases of the given domains.

    Returns an array of shape ``(|D_1|, ..., |D_n|, *aux dims, |alphabet|)``
    that is constant along tuples outside the scope.
    """
    domains = tuple(domains)
    n = len(domains)
    for j, d in zip(self.scope, self.domains):
      if j > n:
        raise MechanismError(f"scope index {j} outside a {n}-tuple database")
      if domains[j - 1] != d:
        raise AlphabetMismatch(f"tuple {j}: mechanism domain {d.values!r} "
                               f"!= model domain {domains[j - 1].values!r}")
    tail = self.table.shape[len(self.scope):]
    shape = tuple(len(domains[j - 1]) if j in self.scope else 1
                  for j in range(1, n + 1)) + tail
    full = self.table.reshape(shape)
    return np.broadcast_to(full, tuple(len(d) for d in domains) + tail)

  def widen(self, scope: Sequence[int],
            domains: Sequence[TupleDomain]) -> "Mechanism":
    """Same kernel re-expressed over a larger scope (constant on new tuples)."""
    scope = tuple(scope)
    domains = tuple(_as_domain(d) for d in domains)
    order = sorted(range(len(scope)), key=lambda k: scope[k])
    scope = tuple(scope[o] for o in order)
    domains = tuple(domains[o] for o in order)
    if not set(self.scope) <= set(scope):
      raise MechanismError("widen() cannot drop scope tuples")
    tail = self.table.shape[len(self.scope):]
    shape = tuple(len(d) if j in self.scope else 1
                  for j, d in zip(scope, domains)) + tail
    table = np.broadcast_to(self.table.reshape(shape),
                            tuple(len(d) for d in domains) + tail)
    return Mechanism(scope, domains, self.alphabet, np.array(table),
                     self.aux_alphabets, self.name)

  def to_float(self) -> "Mechanism":
    if not self.exact:
      return self
    return Mechanism(self.scope, self.domains, self.alphabet,
                     self.table.astype(np.float64), self.aux_alphabets,
                     self.name)

  def __eq__(self, other):
    return (isinstance(other, Mechanism) and self.scope == other.scope
            and self.domains == other.domains
            and self.alphabet == other.alphabet
            and self.aux_alphabets == other.aux_alphabets
            and self.table.shape == other.table.shape
            and bool(np.all(self.table == other.table)))

  __hash__ = None

  def __repr__(self):
    return (f"Mechanism({self.name or 'table'}, scope={self.scope}, "
            f"|alphabet|={len(self.alphabet)}, aux={self.aux_arity})")


# ---------------------------------------------------------------------------
# Built-in mechanisms.

BINARY = TupleDomain((0, 1))


def _open_unit(p, what):
  if not 0 < p < 1:
    raise MechanismError(f"{what} must lie in (0, 1), got {p!r}")


def randomized_response(p, tuple_index: int,
                        domain: TupleDomain = BINARY) -> Mechanism:
  """Reports the bit at ``tuple_index``, flipped with probability ``p``."""
  _open_unit(p, "flip probability")
  domain = _as_domain(domain)
  if len(domain) != 2:
    raise MechanismError(f"randomized response needs a binary domain, got "
                         f"{domain.values!r}")
  keep = 1 - p
  table = np.array([[keep, p], [p, keep]],
                   dtype=object if isinstance(p, Fraction) else float)
  return Mechanism((tuple_index,), (domain,), domain.values, table,
                   name=f"RR({p})@{tuple_index}")


def identity(tuple_index: int, domain: TupleDomain = BINARY) -> Mechanism:
  """Deterministically releases the value of one tuple."""
  domain = _as_domain(domain)
  return Mechanism((tuple_index,), (domain,), domain.values,
                   np.eye(len(domain)), name=f"identity@{tuple_index}")


def constant(alphabet, dist=None) -> Mechanism:
  """A mechanism that reads nothing; ``dist`` defaults to a point mass."""
  alphabet = _as_alphabet(alphabet)
  if dist is None:
    dist = [1.0] + [0.0] * (len(alphabet) - 1)
  exact = any(isinstance(p, Fraction) for p in dist)
  return Mechanism((), (), alphabet,
                   np.array(list(dist), dtype=object if exact else float),
                   name="constant")


def geometric_row(center: int, alpha, lo: int, hi: int) -> list:
  """Two-sided geometric mass at ``lo..hi``, tails folded onto the ends.

  Interior points get ``(1-alpha)/(1+alpha) * alpha**|k-center|``; the
  endpoints absorb the whole tail beyond them, which sums to
  ``alpha**|end-center| / (1+alpha)``.
  """
  if lo == hi:
    return [alpha ** 0]
  row = []
  for k in range(lo, hi + 1):
    if k in (lo, hi):
      row.append(alpha ** abs(k - center) / (1 + alpha))
    else:
      row.append((1 - alpha) / (1 + alpha) * alpha ** abs(k - center))
  return row


def truncated_geometric(query: Union[Mapping, Callable], alpha,
                        bounds: Sequence[int], scope: Sequence[int],
                        domains: Sequence[Any]) -> Mechanism:
  """Geometric noise on an integer query, clamped to ``bounds``.

  Args:
    query: ``{scope assignment: int}`` table or a callable on the scope
      assignment tuple.
    alpha: decay ratio in (0, 1); smaller means less noise.
    bounds: inclusive ``(lo, hi)`` output range.
    scope: tuples the query reads.
    domains: their domains.
  """
  _open_unit(alpha, "alpha")
  lo, hi = (int(b) for b in bounds)
  if lo > hi:
    raise MechanismError(f"empty bounds {bounds!r}")
  domains = [_as_domain(d) for d in domains]
  rows = {}
  for x in itertools.product(*(d.values for d in domains)):
    c = query(x) if callable(query) else query[x]
    if c != int(c) or not lo <= c <= hi:
      raise MechanismError(f"query value {c!r} at {x!r} outside {lo}..{hi}")
    rows[x] = geometric_row(int(c), alpha, lo, hi)
  return Mechanism.from_rows(scope, domains, list(range(lo, hi + 1)), rows,
                             name=f"TGeom({alpha})")


# ---------------------------------------------------------------------------
# Composition plans.


@dataclass(frozen=True)
class FromStage:
  """Auxiliary input wired from the output of an earlier stage (1-based)."""

  stage: int


@dataclass(frozen=True)
class Const:
  """Auxiliary input fixed to a symbol at plan-construction time."""

  symbol: Hashable


@dataclass(frozen=True)
class Stage:
  mechanism: Any  # Mechanism or nested CompositionPlan
  wiring: tuple = ()

  def __post_init__(self):
    object.__setattr__(self, "wiring", tuple(self.wiring))


@dataclass(frozen=True)
class CompositionPlan:
  """Ordered stages plus how to combine them.

  ``mode`` is ``"sequential"`` or ``"parallel"``. Sequential plans release
  either the last stage output (``release="final"``) or the whole transcript
  (``release="transcript"``). Parallel plans carry a ``partition`` of the
  tuple indices with one block per stage, and always release the transcript.
  ``domains`` (one per tuple of the database) is optional; parallel plans use
  it to give the composed kernel the full scope ``1..n``.
  """

  stages: tuple
  mode: str = "sequential"
  release: str = "transcript"
  partition: Any = None
  domains: Any = None

  def __post_init__(self):
    stages = tuple(s if isinstance(s, Stage) else Stage(s)
                   for s in self.stages)
    object.__setattr__(self, "stages", stages)
    if self.partition is not None:
      object.__setattr__(self, "partition",
                         tuple(tuple(sorted(b)) for b in self.partition))
    if self.domains is not None:
      object.__setattr__(self, "domains",
                         tuple(_as_domain(d) for d in self.domains))
    self.validate()

  def validate(self) -> None:
    if not self.stages:
      raise PlanError("a plan needs at least one stage")
    if self.mode not in ("sequential", "parallel"):
      raise PlanError(f"unknown mode {self.mode!r}")
    if self.release not in ("final", "transcript"):
      raise PlanError(f"unknown release {self.release!r}")
    mechs = [materialize(s.mechanism) for s in self.stages]
    for ell, (stage, m) in enumerate(zip(self.stages, mechs), start=1):
      if len(stage.wiring) != m.aux_arity:
        raise PlanError(f"stage {ell} takes {m.aux_arity} aux inputs, "
                        f"wiring gives {len(stage.wiring)}")
      for a, src in enumerate(stage.wiring):
        if isinstance(src, FromStage):
          if not 1 <= src.stage < ell:
            raise PlanError(f"stage {ell} is wired from stage {src.stage}: "
                            "wiring cycle or forward reference")
          if mechs[src.stage - 1].alphabet != m.aux_alphabets[a]:
            raise AlphabetMismatch(
                f"stage {ell} aux {a + 1} expects "
                f"{m.aux_alphabets[a].symbols!r}, stage {src.stage} emits "
                f"{mechs[src.stage - 1].alphabet.symbols!r}")
        elif isinstance(src, Const):
          m.aux_alphabets[a].index(src.symbol)
        else:
          raise PlanError(f"bad wiring entry {src!r}")
    _merged_domains(mechs, self.domains)
    if self.mode == "parallel":
      self._check_partition(mechs)

  def _check_partition(self, mechs) -> None:
    blocks = self.partition
    if blocks is None:
      raise PlanError("parallel plan without a partition")
    if len(blocks) != len(self.stages):
      raise PlanError(f"{len(blocks)} blocks for {len(self.stages)} stages")
    flat = [j for b in blocks for j in b]
    if any(not b for b in blocks):
      raise PlanError("empty partition block")
    if len(set(flat)) != len(flat):
      raise PlanError("partition blocks overlap")
    n = len(self.domains) if self.domains is not None else max(flat)
    if set(flat) != set(range(1, n + 1)):
      raise PlanError(f"partition does not cover 1..{n}")
    for ell, (block, m) in enumerate(zip(blocks, mechs), start=1):
      if not set(m.scope) <= set(block):
        raise PlanError(f"stage {ell} reads {m.scope}, outside block "
                        f"{block}")


def materialize(obj) -> Mechanism:
  if isinstance(obj, Mechanism):
    return obj
  if isinstance(obj, CompositionPlan):
    return compose(obj)
  raise PlanError(f"not a mechanism or plan: {obj!r}")


def _merged_domains(mechs, domains=None) -> dict:
  merged = {}
  if domains is not None:
    merged = {j: d for j, d in enumerate(domains, start=1)}
  for m in mechs:
    for j, d in zip(m.scope, m.domains):
      if j in merged and merged[j] != d:
        raise AlphabetMismatch(f"tuple {j} has domains {merged[j].values!r} "
                               f"and {d.values!r}")
      merged[j] = d
  return merged


def _stage_product(stages, mechs, final_only: bool,
                   domains=None) -> Mechanism:
  """Joint kernel of conditionally independent stages.

  Each stage contributes one factor ``k_l(x_scope_l, wired aux)(z_l)``; the
  product is summed over every intermediate output when ``final_only``.
  """
  merged = _merged_domains(mechs, domains)
  scope = sorted(j for m in mechs for j in m.scope)
  scope = sorted(set(scope))
  pos = {j: k for k, j in enumerate(scope)}
  base = len(scope)
  operands = []
  for ell, (stage, m) in enumerate(zip(stages, mechs)):
    idx = [slice(None)] * len(m.scope)
    subs = [pos[j] for j in m.scope]
    for a, src in enumerate(stage.wiring):
      if isinstance(src, Const):
        idx.append(m.aux_alphabets[a].index(src.symbol))
      else:
        idx.append(slice(None))
        subs.append(base + src.stage - 1)
    operands += [m.table[tuple(idx)], subs + [base + ell]]
  last = base + len(mechs) - 1
  out = list(range(base)) + ([last] if final_only
                              else list(range(base, last + 1)))
  table = np.einsum(*operands, out)
  if final_only:
    alphabet = mechs[-1].alphabet
  else:
    alphabet = OutputAlphabet.product([m.alphabet for m in mechs])
    table = table.reshape(table.shape[:base] + (len(alphabet),))
  return Mechanism(scope, [merged[j] for j in scope], alphabet,
                   np.array(table))


def chain(plan: CompositionPlan) -> Mechanism:
  """Sequential composition.

  With ``release="final"`` the kernel is the distribution of the last output
  after summing out every intermediate one; with ``"transcript"`` the output
  is the tuple of all stage outputs.
  """
  if plan.mode != "sequential":
    raise PlanError("chain() needs a sequential plan")
  mechs = [materialize(s.mechanism) for s in plan.stages]
  m = _stage_product(plan.stages, mechs, plan.release == "final",
                     plan.domains)
  m.name = f"chain[{plan.release}]({', '.join(x.name for x in mechs)})"
  return m


def parallel(plan: CompositionPlan) -> Mechanism:
  """Parallel composition: concatenated outputs of per-block stages."""
  if plan.mode != "parallel":
    raise PlanError("parallel() needs a parallel plan")
  mechs = [materialize(s.mechanism) for s in plan.stages]
  m = _stage_product(plan.stages, mechs, False, plan.domains)
  merged = _merged_domains(mechs, plan.domains)
  full = [j for b in plan.partition for j in b]
  if all(j in merged for j in full):
    full = sorted(full)
    m = m.widen(full, [merged[j] for j in full])
  m.name = f"parallel({', '.join(x.name for x in mechs)})"
  return m


def compose(plan: CompositionPlan) -> Mechanism:
  return chain(plan) if plan.mode == "sequential" else parallel(plan)


class PostProcessMap:
  """A database-independent randomized map between output alphabets.

  Args:
    input_alphabet: symbols the map accepts.
    alphabet: symbols it emits.
    matrix: ``|input| x |output|`` row-stochastic array.
  """

  def __init__(self, input_alphabet, alphabet, matrix, name: str = ""):
    self.input_alphabet = _as_alphabet(input_alphabet)
    self.alphabet = _as_alphabet(alphabet)
    matrix = _normalise_table(matrix)
    if matrix.shape != (len(self.input_alphabet), len(self.alphabet)):
      raise MechanismError(f"post-processing matrix shape {matrix.shape}")
    _check_rows(matrix, name or "post-processing map")
    matrix.flags.writeable = False
    self.matrix = matrix
    self.name = name

  @classmethod
  def identity(cls, alphabet) -> "PostProcessMap":
    alphabet = _as_alphabet(alphabet)
    return cls(alphabet, alphabet, np.eye(len(alphabet)), "identity")

  @classmethod
  def constant(cls, input_alphabet, symbol="*") -> "PostProcessMap":
    input_alphabet = _as_alphabet(input_alphabet)
    return cls(input_alphabet, (symbol,), np.ones((len(input_alphabet), 1)),
               "constant")

  @classmethod
  def deterministic(cls, input_alphabet, fn: Callable,
                    alphabet=None) -> "PostProcessMap":
    input_alphabet = _as_alphabet(input_alphabet)
    images = [fn(s) for s in input_alphabet]
    if alphabet is None:
      alphabet = list(dict.fromkeys(images))
    alphabet = _as_alphabet(alphabet)
    matrix = np.zeros((len(input_alphabet), len(alphabet)))
    for k, w in enumerate(images):
      matrix[k, alphabet.index(w)] = 1.0
    return cls(input_alphabet, alphabet, matrix,
               getattr(fn, "__name__", "deterministic"))

  @classmethod
  def projection(cls, alphabet, coordinate: int) -> "PostProcessMap":
    """Keeps coordinate ``coordinate`` (1-based) of a product alphabet."""
    alphabet = _as_alphabet(alphabet)
    target = alphabet.symbols[0]
    width = len(target)
    if not 1 <= coordinate <= width:
      raise MechanismError(f"coordinate {coordinate} outside 1..{width}")
    parts = list(dict.fromkeys(s[coordinate - 1] for s in alphabet))
    return cls.deterministic(alphabet, lambda s: s[coordinate - 1], parts)

  def then(self, other: "PostProcessMap") -> "PostProcessMap":
    """Apply ``self`` first and ``other`` second (matrix product)."""
    if self.alphabet != other.input_alphabet:
      raise AlphabetMismatch("post-processing maps do not chain")
    return PostProcessMap(self.input_alphabet, other.alphabet,
                          self.matrix.dot(other.matrix),
                          f"{other.name}.{self.name}")

  def to_float(self) -> "PostProcessMap":
    if self.matrix.dtype != object:
      return self
    return PostProcessMap(self.input_alphabet, self.alphabet,
                          self.matrix.astype(np.float64), self.name)

  def __repr__(self):
    return (f"PostProcessMap({self.name}, {len(self.input_alphabet)}->"
            f"{len(self.alphabet)})")


def post_process(m: Mechanism, z: PostProcessMap) -> Mechanism:
  """The kernel of ``z(m(x))``: ``sum_y m(x)(y) * z(y)(w)``."""
  if z.input_alphabet != m.alphabet:
    raise AlphabetMismatch(
        f"post-processing input {z.input_alphabet.symbols!r} != mechanism "
        f"output {m.alphabet.symbols!r}")
  matrix = z.matrix
  if m.table.dtype == object and matrix.dtype != object:
    matrix = np.vectorize(Fraction, otypes=[object])(matrix)
  elif m.table.dtype != object and matrix.dtype == object:
    matrix = matrix.astype(np.float64)
  table = np.tensordot(m.table, matrix, axes=([-1], [0]))
  return Mechanism(m.scope, m.domains, z.alphabet, table, m.aux_alphabets,
                   name=f"{z.name or 'post'}({m.name})")


# ---------------------------------------------------------------------------
# JSON formats.
#
# Mechanism: {"builtin": "randomized_response", "p": 0.25, "tuple": 1}
#            {"builtin": "truncated_geometric", "alpha": .5, "scope": [1, 2],
#             "bounds": [0, 2], "query": "sum" | [{"x": [...], "value": k}]}
#            {"builtin": "identity", "tuple": 1}
#            {"builtin": "constant", "alphabet": [...], "dist": [...]}
#            {"table": {"scope": [...], "alphabet": [...],
#                       "aux_alphabets": [[...], ...],
#                       "rows": [{"x": [...], "aux": [...], "dist": [...]}]}}
# Plan:      {"mode": "sequential" | "parallel",
#             "release": "final" | "transcript",
#             "stages": [mechanism | plan, ...],
#             "wiring": [[{"stage": 1} | {"const": symbol}, ...], ...],
#             "partition": [[...], ...]}


def _symbols(values) -> tuple:
  return tuple(_hashable(v) for v in values)


def _jsonable(v):
  if isinstance(v, tuple):
    return [_jsonable(u) for u in v]
  return v


def mechanism_from_dict(data: Mapping, domains: Sequence[TupleDomain],
                        exact: bool = False) -> Mechanism:
  """Loads a mechanism spec against the model's tuple domains."""
  domains = tuple(domains)

  def domain_of(j):
    j = int(j)
    if not 1 <= j <= len(domains):
      raise MechanismError(f"tuple index {j} out of range 1..{len(domains)}")
    return domains[j - 1]

  def prob(p):
    try:
      return _parse_prob(p, exact)
    except ValueError as e:
      raise MechanismError(str(e)) from None

  try:
    if "builtin" in data:
      kind = data["builtin"]
      if kind == "randomized_response":
        j = int(data["tuple"])
        return randomized_response(prob(data["p"]), j, domain_of(j))
      if kind == "identity":
        j = int(data["tuple"])
        return identity(j, domain_of(j))
      if kind == "constant":
        alphabet = _symbols(data["alphabet"])
        dist = data.get("dist")
        return constant(alphabet,
                        None if dist is None else [prob(p) for p in dist])
      if kind == "truncated_geometric":
        scope = [int(j) for j in data["scope"]]
        doms = [domain_of(j) for j in scope]
        query = data.get("query", "sum")
        if query == "sum":
          table = {x: sum(x) for x in itertools.product(*(d.values
                                                          for d in doms))}
        else:
          table = {_symbols(r["x"]): int(r["value"]) for r in query}
        return truncated_geometric(table, prob(data["alpha"]),
                                   data["bounds"], scope, doms)
      raise MechanismError(f"unknown builtin {kind!r}")
    spec = data["table"]
    scope = [int(j) for j in spec["scope"]]
    doms = [domain_of(j) for j in scope]
    alphabet = _symbols(spec["alphabet"])
    aux_alphabets = [_symbols(a) for a in spec.get("aux_alphabets", [])]
    rows = {}
    for r in spec["rows"]:
      x = _symbols(r["x"])
      dist = [prob(p) for p in r["dist"]]
      key = (x, _symbols(r.get("aux", []))) if aux_alphabets else x
      if key in rows:
        raise MechanismError(f"duplicate row {key!r}")
      rows[key] = dist
    return Mechanism.from_rows(scope, doms, alphabet, rows, aux_alphabets,
                               name=spec.get("name", "table"))
  except (KeyError, TypeError) as e:
    raise FormatError(f"malformed mechanism: {e!r}") from None


def mechanism_to_dict(m: Mechanism) -> dict:
  rows = []
  for x in itertools.product(*(d.values for d in m.domains)):
    for aux in m.aux_assignments():
      idx = (tuple(d.index(v) for d, v in zip(m.domains, x))
             + tuple(a.index(s) for a, s in zip(m.aux_alphabets, aux)))
      row = {"x": _jsonable(x)}
      if m.aux_arity:
        row["aux"] = _jsonable(aux)
      row["dist"] = [format_prob(p) for p in m.table[idx]]
      rows.append(row)
  spec = {"scope": list(m.scope), "alphabet": _jsonable(m.alphabet.symbols)}
  if m.aux_arity:
    spec["aux_alphabets"] = [_jsonable(a.symbols) for a in m.aux_alphabets]
  spec["rows"] = rows
  if m.name:
    spec["name"] = m.name
  return {"table": spec}


def _wire_from_dict(w) -> Any:
  if "stage" in w:
    return FromStage(int(w["stage"]))
  if "const" in w:
    return Const(_hashable(w["const"]))
  raise PlanError(f"bad wiring entry {w!r}")


def plan_from_dict(data: Mapping, domains: Sequence[TupleDomain],
                   exact: bool = False) -> CompositionPlan:
  try:
    specs = data["stages"]
    wiring = data.get("wiring") or [[] for _ in specs]
    if len(wiring) != len(specs):
      raise PlanError(f"{len(wiring)} wiring lists for {len(specs)} stages")
    stages = []
    for spec, wires in zip(specs, wiring):
      if "stages" in spec:
        mech = plan_from_dict(spec, domains, exact)
      else:
        mech = mechanism_from_dict(spec, domains, exact)
      stages.append(Stage(mech, tuple(_wire_from_dict(w) for w in wires)))
    release = data.get("release", "transcript")
    return CompositionPlan(tuple(stages), data.get("mode", "sequential"),
                           release, data.get("partition"), tuple(domains))
  except (KeyError, TypeError) as e:
    raise FormatError(f"malformed plan: {e!r}") from None


def plan_to_dict(plan: CompositionPlan) -> dict:
  stages, wiring = [], []
  for s in plan.stages:
    if isinstance(s.mechanism, CompositionPlan):
      stages.append(plan_to_dict(s.mechanism))
    else:
      stages.append(mechanism_to_dict(s.mechanism))
    wiring.append([{"stage": w.stage} if isinstance(w, FromStage)
                   else {"const": _jsonable(w.symbol)} for w in s.wiring])
  out = {"mode": plan.mode, "release": plan.release, "stages": stages,
         "wiring": wiring}
  if plan.partition is not None:
    out["partition"] = [list(b) for b in plan.partition]
  return out


def post_map_to_dict(z: PostProcessMap) -> dict:
  return {
      "input_alphabet": _jsonable(z.input_alphabet.symbols),
      "alphabet": _jsonable(z.alphabet.symbols),
      "matrix": [[format_prob(p) for p in row] for row in z.matrix],
  }


def post_map_from_dict(data: Mapping, exact: bool = False) -> PostProcessMap:
  try:
    matrix = [[_parse_prob(p, exact) for p in row] for row in data["matrix"]]
    symbols = _symbols(data["input_alphabet"]), _symbols(data["alphabet"])
  except (KeyError, TypeError) as e:
    raise FormatError(f"malformed post-processing map: {e!r}") from None
  return PostProcessMap(*symbols,
                        np.array(matrix, dtype=object if exact else float))


def load_json(path) -> Any:
  with open(path) as f:
    return json.load(f)
