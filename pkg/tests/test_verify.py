import json
import math
from dataclasses import replace
from fractions import Fraction as F

import pytest

from bdpl import verify
from bdpl.leakage import bdpl
from bdpl.mechanism import (CompositionPlan, PostProcessMap, Stage, compose,
                            constant, plan_from_dict, randomized_response)
from bdpl.model import CorrelationModel, model_from_dict

LN3 = math.log(3)
BIT = {0: F(1, 2), 1: F(1, 2)}


def case_for(model, plan, mode="sequential", post=None, **kw):
  return verify._assemble(None, verify.CaseConfig(mode, **kw), model, plan,
                          post)


def test_config_limits():
  with pytest.raises(ValueError):
    verify.CaseConfig(n_max=5)
  with pytest.raises(ValueError):
    verify.CaseConfig(alphabet_max=5)
  with pytest.raises(ValueError):
    verify.CaseConfig(mode="serial")


def test_seed_zero_is_byte_identical():
  a = verify.gen_case(0)
  b = verify.gen_case(0)
  dump = lambda c: json.dumps(verify.counterexample(c),
                              default=verify._json_default)
  assert dump(a) == dump(b)
  assert a.verdict == b.verdict


def test_full_support_config_has_no_skips():
  config = verify.CaseConfig(zero_fraction=0.0)
  for seed in range(20):
    case = verify.gen_case(seed, config)
    assert not bdpl(compose(case.plan), case.model).skipped


def test_single_stage_single_tuple():
  config = verify.CaseConfig(n_max=1, stages_max=1)
  for seed in range(10):
    case = verify.gen_case(seed, config)
    assert len(case.plan.stages) == 1
    assert case.stage_eps[0] == case.composed_eps == case.bound


def test_theorem1_two_rr_transcript_attains_bound():
  case = verify.witness_cases()[1]
  assert case.composed_eps == pytest.approx(2 * LN3, abs=1e-9)
  assert case.bound == pytest.approx(2 * LN3, abs=1e-9)
  assert case.verdict.status == "pass" and case.verdict.exact_checked
  assert verify.check_theorem1(case).status == "pass"


def test_theorem1_constant_second_stage():
  bit = CorrelationModel.independent([BIT])
  plan = CompositionPlan((randomized_response(F(1, 4), 1),
                          constant(("a", "b"), [F(1, 3), F(2, 3)])))
  case = case_for(bit, plan)
  assert case.composed_eps == pytest.approx(case.stage_eps[0])
  assert case.composed_eps <= case.bound
  assert case.verdict.status == "pass"


def test_theorem2_cases():
  case = verify.witness_cases()[2]
  assert case.composed_eps == pytest.approx(math.log(9), abs=1e-9)
  assert verify.check_theorem2(case).status == "pass"
  bits = CorrelationModel.independent([BIT] * 2)
  single = CompositionPlan((randomized_response(F(1, 4), 2),), "parallel",
                           partition=[[1, 2]], domains=bits.domains)
  one = case_for(bits, single, "parallel")
  assert one.composed_eps == one.stage_eps[0]
  assert verify.check_theorem1(one).status == "skipped"


def test_theorem2_fails_on_copied_bit():
  # X_1 = X_2 always; each block runs RR(1/4) on its own bit. Both stages
  # leak ln 3 but the pair leaks 2 ln 3 about either bit.
  model = CorrelationModel.from_cells([(0, 1), (0, 1)],
                                      {(0, 0): F(1, 2), (1, 1): F(1, 2)},
                                      exact=True)
  plan = CompositionPlan((randomized_response(F(1, 4), 1),
                          randomized_response(F(1, 4), 2)), "parallel",
                         partition=[[1], [2]], domains=model.domains)
  case = case_for(model, plan, "parallel")
  assert case.stage_eps == pytest.approx([LN3, LN3])
  assert case.composed_eps == pytest.approx(2 * LN3)
  assert case.verdict.status == "violation"
  assert case.verdict.gap == pytest.approx(LN3)


def test_theorem3_identity_and_constant():
  case = verify.witness_cases()[3]
  assert case.composed_eps == case.bound
  assert verify.check_theorem3(case).status == "pass"
  flat = PostProcessMap.constant(compose(case.plan).alphabet)
  assert verify.check_theorem3(case, flat).status == "pass"
  bad = PostProcessMap.identity(("a", "b", "c"))
  assert verify.check_theorem3(case, bad).status == "skipped"


def test_near_boundary_verdicts_are_rechecked_exactly():
  for case in verify.witness_cases().values():
    assert case.verdict.exact_checked
    assert case.verdict.status == "pass"


def test_shrink_keeps_violation_and_reduces():
  config = verify.CaseConfig("parallel", blocks="correlated", n_max=4,
                             domain_max=3, alphabet_max=4, stages_max=3)
  bad = next(c for c in (verify.gen_case(s, config) for s in range(50))
             if c.verdict.status == "violation"
             and c.model.table.size > 4)
  small = verify.shrink(bad)
  assert small.verdict.status == "violation"
  assert verify._size(small.model, small.plan, small.post) < verify._size(
      bad.model, bad.plan, bad.post)


def test_counterexample_reloads_and_still_violates():
  config = verify.CaseConfig("parallel", blocks="correlated")
  result = verify.sweep(2, range(30), config)
  assert result.violations and result.counterexamples
  ce = json.loads(json.dumps(result.counterexamples[0],
                             default=verify._json_default))
  model = model_from_dict(ce["model"], exact=True)
  plan = plan_from_dict(ce["plan"], model.domains, exact=True)
  again = case_for(model, plan, "parallel")
  assert again.verdict.status == "violation"
  assert again.composed_eps == pytest.approx(float(ce["composed_eps"]))


def test_sweep_is_independent_of_jobs():
  config = verify.CaseConfig("sequential")
  one = verify.report_json([verify.sweep(1, range(12), config, jobs=1)])
  two = verify.report_json([verify.sweep(1, range(12), config, jobs=2)])
  assert one == two


def test_independent_blocks_corpus_is_clean():
  config = verify.CaseConfig("parallel", blocks="independent")
  result = verify.sweep(2, range(60), config)
  assert result.violations == 0
  for case in result.cases:
    assert factorises(case.model, case.plan.partition)


def factorises(model, blocks):
  """Joint equals the product of its block marginals."""
  n = model.n
  product = 1
  for block in blocks:
    axes = tuple(j for j in range(n) if j + 1 not in block)
    marg = model.table.sum(axis=axes, keepdims=True) if axes else model.table
    product = product * marg
  return bool((product == model.table).all())


def test_nested_plan_is_priced_recursively():
  bits = CorrelationModel.independent([BIT] * 2)
  rr1, rr2 = randomized_response(F(1, 4), 1), randomized_response(F(1, 4), 2)
  inner = CompositionPlan((rr1, rr1))
  outer = CompositionPlan((Stage(inner), rr2), "parallel",
                          partition=[[1], [2]], domains=bits.domains)
  case = case_for(bits, outer, "parallel", blocks="independent")
  assert case.stage_eps == pytest.approx([2 * LN3, LN3])
  assert case.verdict.status == "pass"
  assert case.composed_eps == pytest.approx(2 * LN3)


def test_config_replace_keeps_mode():
  base = verify.CaseConfig()
  assert replace(base, mode="postprocess").theorem == 3
