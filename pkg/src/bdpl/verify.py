"""Seeded verification of the composition rules against the exact oracle.

Each case is drawn from a seed: a small correlated model with rational
probabilities, random stochastic kernels and a random plan. The oracle
leakage of the composed mechanism is compared with the symbolic bound:

* sequential plans: composed <= sum of stage leakages (both release modes);
* parallel plans: composed <= max of stage leakages;
* post-processing: leakage of z(Y) <= leakage of Y.

The fast path runs in float64. A verdict within 1e-6 of the boundary is
re-decided with exact rational arithmetic, comparing likelihood ratios
directly, so rounding can neither create nor hide a violation. Violating
cases are shrunk greedily (dropping stages, tuples, domain values and output
symbols while the violation persists) before they are reported.
"""

import itertools
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from typing import Any, Iterable, Optional

import numpy as np

from bdpl.accountant import certify
from bdpl.leakage import LeakageReport, bdpl, format_leakage
from bdpl.mechanism import (CompositionPlan, FromStage, Mechanism,
                            PostProcessMap, Stage, chain, compose, parallel,
                            plan_to_dict, post_map_to_dict, post_process,
                            randomized_response)
from bdpl.model import CorrelationModel, TupleDomain, model_to_dict

TOL = 1e-9
NEAR = 1e-6


@dataclass(frozen=True)
class CaseConfig:
  """Size limits and knobs for random case generation.

  ``mode`` picks the theorem under test: ``"sequential"`` (1),
  ``"parallel"`` (2) or ``"postprocess"`` (3). ``blocks`` controls whether
  parallel cases have ``"independent"`` or ``"correlated"`` blocks.
  """

  mode: str = "sequential"
  n_min: int = 1
  n_max: int = 3
  domain_max: int = 2
  alphabet_max: int = 3
  stages_max: int = 2
  zero_fraction: float = 0.2
  blocks: str = "correlated"
  aux_prob: float = 0.5
  kernel_zero_prob: float = 0.0
  weight_max: int = 9

  def __post_init__(self):
    if self.mode not in ("sequential", "parallel", "postprocess"):
      raise ValueError(f"unknown mode {self.mode!r}")
    if self.blocks not in ("independent", "correlated"):
      raise ValueError(f"unknown blocks setting {self.blocks!r}")
    if not 1 <= self.n_min <= self.n_max <= 4:
      raise ValueError("need 1 <= n_min <= n_max <= 4")
    if not 1 <= self.domain_max <= 3:
      raise ValueError("domain_max must be in 1..3")
    if not 1 <= self.alphabet_max <= 4:
      raise ValueError("alphabet_max must be in 1..4")
    if not 1 <= self.stages_max <= 3:
      raise ValueError("stages_max must be in 1..3")
    if not 0 <= self.zero_fraction < 1:
      raise ValueError("zero_fraction must be in [0, 1)")

  @property
  def theorem(self) -> int:
    return {"sequential": 1, "parallel": 2, "postprocess": 3}[self.mode]


@dataclass(frozen=True)
class Verdict:
  status: str  # "pass" | "violation" | "skipped"
  gap: float = 0.0  # composed - bound
  reason: str = ""
  exact_checked: bool = False

  @property
  def ok(self) -> bool:
    return self.status != "violation"


@dataclass
class VerificationCase:
  seed: Optional[int]
  config: CaseConfig
  model: CorrelationModel
  plan: CompositionPlan
  post: Optional[PostProcessMap]
  stage_eps: list
  composed_eps: float
  bound: float
  verdict: Verdict
  releases: dict = field(default_factory=dict)
  witness: Optional[dict] = None
  label: str = ""

  @property
  def theorem(self) -> int:
    return self.config.theorem

  def to_dict(self) -> dict:
    out = {
        "label": self.label,
        "seed": self.seed,
        "theorem": self.theorem,
        "config": asdict(self.config),
        "stage_eps": [format_leakage(e) for e in self.stage_eps],
        "composed_eps": format_leakage(self.composed_eps),
        "bound": format_leakage(self.bound),
        "verdict": self.verdict.status,
        "gap": format_leakage(self.verdict.gap),
        "exact_checked": self.verdict.exact_checked,
    }
    if self.verdict.reason:
      out["reason"] = self.verdict.reason
    if self.releases:
      out["releases"] = {k: format_leakage(v) for k, v in self.releases.items()}
    if self.witness is not None:
      out["witness"] = self.witness
    return out

  def inputs_dict(self) -> dict:
    """Model, plan and post-processing map in their file formats."""
    out = {"model": model_to_dict(self.model),
           "plan": plan_to_dict(self.plan)}
    if self.post is not None:
      out["post"] = post_map_to_dict(self.post)
    return out


# ---------------------------------------------------------------------------
# Random generation. Everything is rational so that cases can be re-decided
# exactly.


def _weights(rng, shape, zero_prob, hi, keep_rows=False):
  w = rng.integers(1, hi + 1, size=shape)
  if zero_prob > 0:
    w = np.where(rng.random(shape) < zero_prob, 0, w)
  if keep_rows:
    dead = w.sum(axis=-1) == 0
    if np.any(dead):
      w[dead, 0] = 1
  elif w.sum() == 0:
    w.flat[rng.integers(w.size)] = 1
  return w


def _normalise(w, axis=None) -> np.ndarray:
  total = w.sum(axis=axis, keepdims=axis is not None)
  out = np.empty(w.shape, dtype=object)
  for idx in np.ndindex(*w.shape):
    t = total if axis is None else total[idx[:-1] + (0,)]
    out[idx] = Fraction(int(w[idx]), int(t))
  return out


def _random_model(rng, n, config, blocks=None) -> CorrelationModel:
  top = max(2, config.domain_max)
  sizes = [int(rng.integers(2, top + 1)) if config.domain_max > 1 else 1
           for _ in range(n)]
  domains = [TupleDomain(tuple(range(s))) for s in sizes]
  if blocks is None:
    w = _weights(rng, sizes, config.zero_fraction, config.weight_max)
    return CorrelationModel(domains, _normalise(w))
  table = None
  order = []
  for block in blocks:
    w = _weights(rng, [sizes[j - 1] for j in block], config.zero_fraction,
                 config.weight_max)
    part = _normalise(w)
    table = part if table is None else np.multiply.outer(table, part)
    order.extend(block)
  inverse = [order.index(j) for j in range(1, n + 1)]
  return CorrelationModel(domains, table.transpose(inverse))


def _random_kernel(rng, scope, domains, aux_alphabets, n_out, config,
                   name) -> Mechanism:
  shape = ([len(d) for d in domains] + [len(a) for a in aux_alphabets]
           + [n_out])
  w = _weights(rng, shape, config.kernel_zero_prob, config.weight_max,
               keep_rows=True)
  return Mechanism(scope, domains, tuple(range(n_out)), _normalise(w, -1),
                   aux_alphabets, name)


def _subset(rng, pool, full_prob=0.5):
  pool = list(pool)
  if rng.random() < full_prob:
    return pool
  k = int(rng.integers(1, len(pool) + 1))
  picked = rng.choice(len(pool), size=k, replace=False)
  return sorted(pool[p] for p in picked)


def _random_stages(rng, model, config, blocks=None):
  n = model.n
  m = len(blocks) if blocks else int(rng.integers(1, config.stages_max + 1))
  stages = []
  mechs = []
  for ell in range(m):
    pool = blocks[ell] if blocks else range(1, n + 1)
    scope = _subset(rng, pool)
    doms = [model.domains[j - 1] for j in scope]
    wiring, aux = [], []
    for src in range(ell):
      if rng.random() < config.aux_prob:
        wiring.append(FromStage(src + 1))
        aux.append(mechs[src].alphabet)
    n_out = int(rng.integers(min(2, config.alphabet_max),
                             config.alphabet_max + 1))
    mech = _random_kernel(rng, scope, doms, aux, n_out, config,
                          f"K{ell + 1}")
    mechs.append(mech)
    stages.append(Stage(mech, tuple(wiring)))
  return tuple(stages)


def _random_partition(rng, n, m):
  order = list(rng.permutation(np.arange(1, n + 1)))
  cuts = sorted(rng.choice(np.arange(1, n), size=m - 1, replace=False)) \
      if m > 1 else []
  blocks, start = [], 0
  for c in list(cuts) + [n]:
    blocks.append(sorted(int(j) for j in order[start:c]))
    start = c
  return sorted(blocks)


def _random_post(rng, alphabet, config) -> PostProcessMap:
  kind = rng.random()
  if kind < 0.1:
    return PostProcessMap.identity(alphabet)
  if kind < 0.2:
    return PostProcessMap.constant(alphabet)
  n_out = int(rng.integers(1, config.alphabet_max + 1))
  if kind < 0.4:
    images = rng.integers(0, n_out, size=len(alphabet))
    matrix = np.full((len(alphabet), n_out), Fraction(0), dtype=object)
    for k, w in enumerate(images):
      matrix[k, w] = Fraction(1)
    return PostProcessMap(alphabet, tuple(range(n_out)), matrix, "merge")
  w = _weights(rng, (len(alphabet), n_out), config.kernel_zero_prob,
               config.weight_max, keep_rows=True)
  return PostProcessMap(alphabet, tuple(range(n_out)), _normalise(w, -1),
                        "random")


def draw_inputs(seed: int, config: CaseConfig):
  """(model, plan, post) for a seed; pure function of (seed, config)."""
  rng = np.random.default_rng(seed)
  n = int(rng.integers(config.n_min, config.n_max + 1))
  post = None
  if config.mode == "parallel":
    m = int(rng.integers(1, min(config.stages_max, n) + 1))
    blocks = _random_partition(rng, n, m)
    model = _random_model(rng, n, config,
                          blocks if config.blocks == "independent" else None)
    stages = _random_stages(rng, model, config, blocks)
    plan = CompositionPlan(stages, "parallel", "transcript", blocks,
                           model.domains)
  else:
    model = _random_model(rng, n, config)
    stages = _random_stages(rng, model, config)
    release = "final" if rng.random() < 0.5 else "transcript"
    plan = CompositionPlan(stages, "sequential", release, None,
                           model.domains)
    if config.mode == "postprocess":
      post = _random_post(rng, compose(plan).alphabet, config)
  return model, plan, post


# ---------------------------------------------------------------------------
# Theorem checks.


def _float_plan(plan: CompositionPlan) -> CompositionPlan:
  stages = []
  for s in plan.stages:
    mech = s.mechanism
    mech = _float_plan(mech) if isinstance(mech, CompositionPlan) \
        else mech.to_float()
    stages.append(Stage(mech, s.wiring))
  return replace(plan, stages=tuple(stages))


def _with_release(plan: CompositionPlan, release: str) -> CompositionPlan:
  return replace(plan, release=release)


def _ratio_le(a, b) -> bool:
  return a <= b


def _witness_dict(report: LeakageReport) -> dict:
  worst = report.worst()
  return {"i": worst.view.target, "K": list(worst.view.known),
          "bdpl": format_leakage(worst.bdpl),
          "witness": worst.witness.to_dict() if worst.witness else None}


@dataclass
class _Evaluation:
  stage_eps: list
  composed: dict
  bound: float
  verdict: Verdict
  witness: Optional[dict]


def _decide(composed: dict, bound: float, exact_fn) -> tuple:
  """Verdict for the worst release; exact recheck near the boundary."""
  worst = max(composed, key=lambda k: composed[k])
  value = composed[worst]
  if value == math.inf and bound == math.inf:
    return Verdict("pass", 0.0), worst
  gap = value - bound
  if abs(gap) <= NEAR or (math.isnan(gap)):
    holds = exact_fn()
    status = "pass" if holds else "violation"
    return Verdict(status, gap, exact_checked=True), worst
  return Verdict("pass" if gap <= TOL else "violation", gap), worst


def _stage_reports(plan, model):
  return [bdpl(s.mechanism if isinstance(s.mechanism, Mechanism)
               else compose(s.mechanism), model) for s in plan.stages]


def _evaluate_sequential(model, plan, releases=("final", "transcript")):
  fmodel, fplan = model.to_float(), _float_plan(plan)
  stage_reports = _stage_reports(fplan, fmodel)
  stage_eps = [r.overall for r in stage_reports]
  bound = certify(fplan, stage_eps)
  reports = {rel: bdpl(chain(_with_release(fplan, rel)), fmodel)
             for rel in releases}
  composed = {rel: r.overall for rel, r in reports.items()}

  def exact():
    ratios = [r.overall_ratio for r in _stage_reports(plan, model)]
    limit = math.prod(ratios, start=Fraction(1)) \
        if math.inf not in ratios else math.inf
    return all(_ratio_le(bdpl(chain(_with_release(plan, rel)),
                              model).overall_ratio, limit)
               for rel in releases)

  verdict, worst = _decide(composed, bound, exact)
  return _Evaluation(stage_eps, composed, bound, verdict,
                     _witness_dict(reports[worst]))


def _evaluate_parallel(model, plan):
  fmodel, fplan = model.to_float(), _float_plan(plan)
  stage_eps = [r.overall for r in _stage_reports(fplan, fmodel)]
  bound = certify(fplan, stage_eps)
  report = bdpl(parallel(fplan), fmodel)
  composed = {"transcript": report.overall}

  def exact():
    ratios = [r.overall_ratio for r in _stage_reports(plan, model)]
    return _ratio_le(bdpl(parallel(plan), model).overall_ratio, max(ratios))

  verdict, _ = _decide(composed, bound, exact)
  return _Evaluation(stage_eps, composed, bound, verdict,
                     _witness_dict(report))


def _evaluate_post(model, plan, post):
  fmodel, fplan = model.to_float(), _float_plan(plan)
  y = compose(fplan)
  base = bdpl(y, fmodel)
  report = bdpl(post_process(y, post.to_float()), fmodel)
  composed = {"post": report.overall}

  def exact():
    y_exact = compose(plan)
    return _ratio_le(bdpl(post_process(y_exact, post), model).overall_ratio,
                     bdpl(y_exact, model).overall_ratio)

  verdict, _ = _decide(composed, base.overall, exact)
  return _Evaluation([base.overall], composed, base.overall, verdict,
                     _witness_dict(report))


def _evaluate(config, model, plan, post) -> _Evaluation:
  if config.mode == "sequential":
    return _evaluate_sequential(model, plan)
  if config.mode == "parallel":
    return _evaluate_parallel(model, plan)
  return _evaluate_post(model, plan, post)


def _assemble(seed, config, model, plan, post, label="") -> VerificationCase:
  ev = _evaluate(config, model, plan, post)
  return VerificationCase(seed, config, model, plan, post, ev.stage_eps,
                          max(ev.composed.values()), ev.bound, ev.verdict,
                          ev.composed, ev.witness, label)


def gen_case(seed: int, config: Optional[CaseConfig] = None) -> VerificationCase:
  """Draws and evaluates the case for ``seed``."""
  config = config or CaseConfig()
  model, plan, post = draw_inputs(seed, config)
  return _assemble(seed, config, model, plan, post)


def check_theorem1(case: VerificationCase) -> Verdict:
  """Sequential rule, checked for both the final-output and transcript release."""
  if case.plan.mode != "sequential":
    return Verdict("skipped", reason="not a sequential plan")
  return _evaluate_sequential(case.model, case.plan).verdict


def check_theorem2(case: VerificationCase) -> Verdict:
  if case.plan.mode != "parallel":
    return Verdict("skipped", reason="not a parallel plan")
  return _evaluate_parallel(case.model, case.plan).verdict


def check_theorem3(case: VerificationCase,
                   z: Optional[PostProcessMap] = None) -> Verdict:
  z = z if z is not None else case.post
  if z is None:
    return Verdict("skipped", reason="no post-processing map")
  if z.input_alphabet != compose(case.plan).alphabet:
    return Verdict("skipped", reason="alphabet mismatch")
  return _evaluate_post(case.model, case.plan, z).verdict


CHECKS = {1: check_theorem1, 2: check_theorem2, 3: check_theorem3}


# ---------------------------------------------------------------------------
# Bound-attaining reference cases.


def witness_cases() -> dict:
  """One case per rule where the composed leakage meets the bound."""
  q = Fraction(1, 4)
  bit = CorrelationModel.independent([{0: Fraction(1, 2), 1: Fraction(1, 2)}])
  two_bits = CorrelationModel.independent(
      [{0: Fraction(1, 2), 1: Fraction(1, 2)}] * 2)
  rr = randomized_response(q, 1)
  seq = CompositionPlan((Stage(rr), Stage(rr)), "sequential", "transcript",
                        None, bit.domains)
  par = CompositionPlan((Stage(rr), Stage(randomized_response(Fraction(1, 10),
                                                              2))),
                        "parallel", "transcript", ((1,), (2,)),
                        two_bits.domains)
  single = CompositionPlan((Stage(rr),), "sequential", "final", None,
                           bit.domains)
  return {
      1: _assemble(None, CaseConfig("sequential"), bit, seq, None,
                   "two RR(1/4) stages, transcript"),
      2: _assemble(None, CaseConfig("parallel", blocks="independent"),
                   two_bits, par, None, "RR(1/4) || RR(1/10)"),
      3: _assemble(None, CaseConfig("postprocess"), bit, single,
                   PostProcessMap.identity(rr.alphabet),
                   "identity after RR(1/4)"),
  }


# ---------------------------------------------------------------------------
# Shrinking.


def _restrict_model(model, j, keep):
  """Condition tuple j (1-based) to the value indices in ``keep``."""
  sl = [slice(None)] * model.n
  sl[j - 1] = list(keep)
  table = model.table[tuple(sl)]
  if table.sum() == 0:
    return None
  domains = list(model.domains)
  domains[j - 1] = TupleDomain(tuple(domains[j - 1].values[k] for k in keep))
  return CorrelationModel(domains, table, renormalize=True)


def _drop_tuple_model(model, j):
  table = model.table.sum(axis=j - 1)
  domains = [d for k, d in enumerate(model.domains, start=1) if k != j]
  return CorrelationModel(domains, table, renormalize=True)


def _restrict_mech(m: Mechanism, j, keep, domain) -> Mechanism:
  if j not in m.scope:
    return m
  axis = m.scope.index(j)
  table = np.take(m.table, list(keep), axis=axis)
  domains = list(m.domains)
  domains[axis] = domain
  return Mechanism(m.scope, domains, m.alphabet, table, m.aux_alphabets,
                   m.name)


def _drop_tuple_mech(m: Mechanism, j) -> Mechanism:
  """Removes tuple j; if the kernel reads it, its domain must be a singleton."""
  table, domains, scope = m.table, list(m.domains), list(m.scope)
  if j in scope:
    axis = scope.index(j)
    table = np.take(table, 0, axis=axis)
    del domains[axis], scope[axis]
  scope = [k - 1 if k > j else k for k in scope]
  return Mechanism(scope, domains, m.alphabet, table, m.aux_alphabets,
                   m.name)


def _map_plan(plan, fn, partition=None, domains=None):
  stages = tuple(Stage(fn(s.mechanism), s.wiring) for s in plan.stages)
  return CompositionPlan(stages, plan.mode, plan.release,
                         partition if partition is not None
                         else plan.partition,
                         domains if domains is not None else plan.domains)


def _candidates(model, plan, post):
  """Smaller variants of a case, most aggressive first."""
  stages = plan.stages
  # Drop a stage nobody is wired from.
  for ell in range(len(stages)):
    if len(stages) == 1:
      break
    if any(isinstance(w, FromStage) and w.stage == ell + 1
           for s in stages for w in s.wiring):
      continue
    new_stages = []
    for k, s in enumerate(stages):
      if k == ell:
        continue
      wiring = tuple(FromStage(w.stage - 1)
                     if isinstance(w, FromStage) and w.stage > ell + 1 else w
                     for w in s.wiring)
      new_stages.append(Stage(s.mechanism, wiring))
    partition = None
    if plan.mode == "parallel":
      blocks = [list(b) for b in plan.partition]
      dropped = blocks.pop(ell)
      blocks[max(0, ell - 1)] = sorted(blocks[max(0, ell - 1)] + dropped)
      partition = tuple(tuple(b) for b in blocks)
    if post is not None:
      continue
    yield model, replace(plan, stages=tuple(new_stages),
                         partition=partition), post
  # Marginalise away a tuple no stage reads, or one with a single value.
  read = {j for s in stages for j in s.mechanism.scope}
  for j in range(1, model.n + 1):
    if model.n == 1 or (j in read and len(model.domains[j - 1]) > 1):
      continue
    partition = None
    if plan.mode == "parallel":
      blocks = [[k - 1 if k > j else k for k in b if k != j]
                for b in plan.partition]
      if any(not b for b in blocks):
        continue
      partition = tuple(tuple(b) for b in blocks)
    new_model = _drop_tuple_model(model, j)
    yield new_model, _map_plan(plan, lambda m: _drop_tuple_mech(m, j),
                               partition, new_model.domains), post
  # Remove one domain value of one tuple.
  for j in range(1, model.n + 1):
    size = len(model.domains[j - 1])
    if size == 1:
      continue
    for v in range(size):
      keep = [k for k in range(size) if k != v]
      new_model = _restrict_model(model, j, keep)
      if new_model is None:
        continue
      dom = new_model.domains[j - 1]
      yield new_model, _map_plan(
          plan, lambda m: _restrict_mech(m, j, keep, dom), None,
          new_model.domains), post
  # Merge two output symbols of a stage that feeds no other stage.
  if post is None:
    for ell, s in enumerate(stages):
      if any(isinstance(w, FromStage) and w.stage == ell + 1
             for t in stages for w in t.wiring):
        continue
      m = s.mechanism
      for a, b in itertools.combinations(range(len(m.alphabet)), 2):
        table = np.delete(m.table, b, axis=-1)
        table[..., a] = table[..., a] + m.table[..., b]
        symbols = tuple(x for k, x in enumerate(m.alphabet.symbols) if k != b)
        merged = Mechanism(m.scope, m.domains, symbols, table,
                           m.aux_alphabets, m.name)
        new_stages = list(stages)
        new_stages[ell] = Stage(merged, s.wiring)
        yield model, replace(plan, stages=tuple(new_stages)), post


def _size(model, plan, post) -> tuple:
  cells = sum(s.mechanism.table.size for s in plan.stages)
  return (len(plan.stages), model.n, model.table.size, cells)


def shrink(case: VerificationCase, max_rounds: int = 100) -> VerificationCase:
  """Greedily minimises a violating case while it keeps violating."""
  if case.verdict.status != "violation":
    return case
  config = case.config
  model, plan, post = case.model, case.plan, case.post
  current = case
  for _ in range(max_rounds):
    improved = False
    for cand in _candidates(model, plan, post):
      if _size(*cand) >= _size(model, plan, post):
        continue
      try:
        trial = _assemble(case.seed, config, *cand, label="shrunk")
      except Exception:  # an invalid reduction is simply not taken
        continue
      if trial.verdict.status == "violation":
        model, plan, post = cand
        current = trial
        improved = True
        break
    if not improved:
      break
  return current


def counterexample(case: VerificationCase) -> dict:
  out = case.to_dict()
  out.update(case.inputs_dict())
  return out


# ---------------------------------------------------------------------------
# Sweeps.


@dataclass
class SweepResult:
  theorem: int
  corpus: str
  config: CaseConfig
  cases: list
  witness: VerificationCase
  counterexamples: list

  @property
  def violations(self) -> int:
    return sum(c.verdict.status == "violation" for c in self.cases)

  @property
  def skipped(self) -> int:
    return sum(c.verdict.status == "skipped" for c in self.cases)

  def to_dict(self) -> dict:
    return {
        "theorem": self.theorem,
        "corpus": self.corpus,
        "config": asdict(self.config),
        "cases": len(self.cases),
        "violations": self.violations,
        "skipped": self.skipped,
        "witness": self.witness.to_dict(),
        "verdicts": [c.to_dict() for c in self.cases],
        "counterexamples": self.counterexamples,
    }


def _run_seed(args):
  seed, config = args
  return gen_case(seed, config)


def sweep(theorem: int, seeds: Iterable[int],
          config: Optional[CaseConfig] = None, corpus: str = "",
          jobs: int = 1, minimize: bool = True) -> SweepResult:
  """Runs one theorem over many seeds; results are ordered by seed."""
  mode = {1: "sequential", 2: "parallel", 3: "postprocess"}[theorem]
  config = replace(config or CaseConfig(), mode=mode)
  work = [(int(s), config) for s in seeds]
  if jobs > 1:
    with ProcessPoolExecutor(jobs) as pool:
      cases = list(pool.map(_run_seed, work, chunksize=8))
  else:
    cases = [_run_seed(w) for w in work]
  counterexamples = []
  for case in cases:
    if case.verdict.status == "violation":
      small = shrink(case) if minimize else case
      counterexamples.append(counterexample(small))
  return SweepResult(theorem, corpus or config.blocks
                     if theorem == 2 else corpus or "default",
                     config, cases, witness_cases()[theorem],
                     counterexamples)


def default_corpora(theorem: int, base: Optional[CaseConfig] = None) -> list:
  """(corpus name, config) pairs swept for a theorem by default."""
  base = base or CaseConfig()
  if theorem == 2:
    return [("independent", replace(base, blocks="independent")),
            ("correlated", replace(base, blocks="correlated"))]
  return [("default", base)]


def report_json(results: list) -> str:
  payload = {
      "violations": sum(r.violations for r in results),
      "sweeps": [r.to_dict() for r in results],
  }
  return json.dumps(payload, indent=2, default=_json_default) + "\n"


def _json_default(o: Any):
  if isinstance(o, Fraction):
    return str(o)
  if isinstance(o, (np.integer,)):
    return int(o)
  if isinstance(o, np.floating):
    return float(o)
  if isinstance(o, tuple):
    return list(o)
  raise TypeError(f"not JSON serialisable: {o!r}")
