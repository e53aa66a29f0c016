import math
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bdpl.accountant import BudgetLedger, certify
from bdpl.errors import FormatError, LedgerError, PlanError
from bdpl.leakage import bdpl
from bdpl.mechanism import (CompositionPlan, Stage, chain, parallel,
                            randomized_response)
from bdpl.model import CorrelationModel

LN3, LN9 = math.log(3), math.log(9)


def test_sequential_charges_add():
  ledger = BudgetLedger().charge_sequential("a", LN3)
  assert ledger.total == LN3
  ledger = ledger.charge_sequential("b", LN9)
  assert ledger.total == pytest.approx(math.log(27), abs=1e-15)
  assert ledger.charge_sequential("c", 0).total == ledger.total


def test_sum_matches_oracle_of_transcript():
  # ln 3 + ln 9 is attained by RR(1/4) followed by RR(1/10) on one bit.
  bit = CorrelationModel.independent([{0: F(1, 2), 1: F(1, 2)}])
  plan = CompositionPlan((randomized_response(F(1, 4), 1),
                          randomized_response(F(1, 10), 1)))
  assert bdpl(chain(plan), bit).overall_ratio == 27
  ledger = BudgetLedger().charge_sequential("a", LN3).charge_sequential(
      "b", LN9)
  assert ledger.total == pytest.approx(math.log(27), abs=1e-12)


def test_parallel_group_costs_its_max():
  ledger = BudgetLedger().charge_parallel("p", [LN3, LN9])
  assert ledger.total == LN9
  assert BudgetLedger().charge_parallel("q", [0.5]).total == 0.5
  assert BudgetLedger().charge_parallel("z", [0, 0, 0]).total == 0
  with pytest.raises(LedgerError):
    BudgetLedger().charge_parallel("e", [])


def test_parallel_max_matches_oracle():
  bits = CorrelationModel.independent([{0: F(1, 2), 1: F(1, 2)}] * 2)
  plan = CompositionPlan((randomized_response(F(1, 4), 1),
                          randomized_response(F(1, 10), 2)), "parallel",
                         partition=[[1], [2]], domains=bits.domains)
  assert bdpl(parallel(plan), bits).overall_ratio == 9


def test_postprocess_is_free_and_needs_parent():
  ledger = BudgetLedger().charge_sequential("a", LN3)
  ledger = ledger.charge_postprocess("z", "a").charge_postprocess("zz", "z")
  assert ledger.total == LN3
  with pytest.raises(LedgerError):
    ledger.charge_postprocess("w", "missing")


def test_invalid_charges():
  with pytest.raises(LedgerError):
    BudgetLedger().charge_sequential("a", -0.1)
  with pytest.raises(LedgerError):
    BudgetLedger().charge_sequential("a", float("nan"))
  with pytest.raises(LedgerError):
    BudgetLedger().charge_sequential("a", 1).charge_sequential("a", 1)


def test_infinite_charge():
  ledger = BudgetLedger().charge_sequential("a", math.inf)
  assert ledger.total == math.inf
  assert BudgetLedger.from_jsonl(ledger.to_jsonl()).total == math.inf


def test_immutability():
  base = BudgetLedger().charge_sequential("a", 1.0)
  base.charge_sequential("b", 2.0)
  assert len(base) == 1


def test_jsonl_replay_and_errors(tmp_path):
  ledger = (BudgetLedger().charge_sequential("a", LN3)
            .charge_parallel("p", [0.1, 0.7]).charge_postprocess("z", "a"))
  path = tmp_path / "ledger.jsonl"
  ledger.append_to(path)
  again = BudgetLedger.load(path)
  assert again.total == ledger.total
  assert again.to_jsonl() == ledger.to_jsonl()
  with pytest.raises(FormatError, match="line 1 column"):
    BudgetLedger.from_jsonl("{bad\n")
  with pytest.raises(FormatError):
    BudgetLedger.from_jsonl('{"epsilon": 1}\n')
  assert BudgetLedger.from_jsonl("").total == 0


def test_certify_rules():
  rr = randomized_response(0.25, 1)
  seq = CompositionPlan((rr, rr))
  assert certify(seq, [LN3, LN3]) == pytest.approx(2 * LN3)
  par = CompositionPlan((rr, randomized_response(0.1, 2)), "parallel",
                        partition=[[1], [2]])
  assert certify(par, [LN3, LN9]) == LN9
  assert certify(CompositionPlan((rr,)), [0.3]) == 0.3
  with pytest.raises(PlanError):
    certify(seq, [LN3])


def test_certify_nested():
  rr1, rr2 = randomized_response(0.25, 1), randomized_response(0.25, 2)
  inner = CompositionPlan((rr1, rr1))
  outer = CompositionPlan((Stage(inner), rr2), "parallel",
                          partition=[[1], [2]])
  assert certify(outer, [[LN3, LN3], LN3]) == pytest.approx(2 * LN3)
  assert certify(outer, [0.5, LN3]) == LN3


eps_lists = st.lists(st.floats(0, 10, allow_nan=False), min_size=1,
                     max_size=8)


@settings(max_examples=100, deadline=None)
@given(eps_lists, st.randoms(use_true_random=False))
def test_total_is_permutation_invariant(eps, rnd):
  shuffled = list(eps)
  rnd.shuffle(shuffled)
  a, b = BudgetLedger(), BudgetLedger()
  for k, (x, y) in enumerate(zip(eps, shuffled)):
    a = a.charge_sequential(f"s{k}", x)
    b = b.charge_sequential(f"s{k}", y)
  assert a.total == b.total


@settings(max_examples=100, deadline=None)
@given(eps_lists, eps_lists)
def test_replay_is_bit_identical(seq, par):
  ledger = BudgetLedger()
  for k, x in enumerate(seq):
    ledger = ledger.charge_sequential(f"s{k}", x)
  ledger = ledger.charge_parallel("p", par)
  replayed = BudgetLedger.from_jsonl(ledger.to_jsonl())
  assert replayed.total.hex() == ledger.total.hex()
  assert BudgetLedger(ledger.entries).total.hex() == ledger.total.hex()
