"""Acceptance criteria, one test each; the terminal summary prints a
PASS/FAIL line per criterion with the measured numbers."""

import io
import math
import os
import time
from fractions import Fraction as F

import numpy as np

import oracles
from conftest import build
from bdpl import verify
from bdpl.cli import main
from bdpl.leakage import bdpl, bdpl_adversary, event_sup_check
from bdpl.mechanism import compose, post_process, randomized_response
from bdpl.model import AdversaryView, CorrelationModel, all_views

TOL = 1e-9
SEEDS = range(500)
SAMPLES = os.path.join(os.path.dirname(__file__), os.pardir, "samples")


def test_criterion_1_classic_dp_reduction(accept):
  start = time.perf_counter()
  worst, count = 0.0, 0
  for seed in range(200):
    inst = oracles.random_instance(seed, n_max=3, domain_max=2,
                                   alphabet_max=3, independent=True)
    domains, _, scope, rows, alphabet = inst
    want = oracles.log(oracles.classic_dp(
        domains, oracles.kernel_of(scope, rows, alphabet)))
    model, mech = build(inst, exact=False)
    got = bdpl(mech, model).overall
    err = 0.0 if got == want else abs(got - want)
    worst = max(worst, err)
    count += 1
  elapsed = time.perf_counter() - start
  ok = worst <= 1e-10 and elapsed <= 60 and count >= 200
  accept(1, ok, f"{count} independent instances, max |bdpl - classic DP| = "
         f"{worst:.3g} (tol 1e-10), {elapsed:.1f}s (limit 60s)")
  assert ok


def test_criterion_2_sequential_composition(accept):
  start = time.perf_counter()
  config = verify.CaseConfig("sequential", stages_max=3)
  result = verify.sweep(1, SEEDS, config)
  elapsed = time.perf_counter() - start
  witness = result.witness
  equal = (abs(witness.composed_eps - witness.bound) <= TOL
           and abs(witness.bound - 2 * math.log(3)) <= TOL)
  both = all(set(c.releases) == {"final", "transcript"} for c in result.cases)
  ok = (result.violations == 0 and equal and both and elapsed <= 300
        and len(result.cases) >= 500)
  accept(2, ok, f"{len(result.cases)} cases x 2 releases, "
         f"{result.violations} violations; witness {witness.composed_eps!r} "
         f"vs bound {witness.bound!r} (2 ln 3); {elapsed:.1f}s (limit 300s)")
  assert ok


def test_criterion_3_post_processing(accept):
  result = verify.sweep(3, SEEDS, verify.CaseConfig("postprocess"))
  witness = result.witness
  equal = abs(witness.composed_eps - witness.bound) <= TOL
  ok = result.violations == 0 and equal and len(result.cases) >= 500
  accept(3, ok, f"{len(result.cases)} cases, {result.violations} violations; "
         f"identity map: {witness.composed_eps!r} = {witness.bound!r}")
  assert ok


def test_criterion_4_parallel_composition_audit(accept, tmp_path):
  indep = verify.sweep(2, SEEDS, verify.CaseConfig(blocks="independent"),
                       corpus="independent")
  corr = verify.sweep(2, SEEDS, verify.CaseConfig(blocks="correlated"),
                      corpus="correlated")
  witness = indep.witness
  equal = (abs(witness.composed_eps - math.log(9)) <= TOL
           and abs(witness.bound - math.log(9)) <= TOL)
  # Every violation must come with a minimised, serialised counterexample
  # whose reported gap is real.
  minimised = (len(corr.counterexamples) == corr.violations and all(
      ce["verdict"] == "violation" and ce["gap"] > TOL and "model" in ce
      and "plan" in ce for ce in corr.counterexamples))
  out = tmp_path / "report.json"
  code = main(["--out", str(out), "verify", "--theorem", "2", "--seeds",
               "50"], stdout=io.StringIO(), stderr=io.StringIO())
  exit_ok = code != 0 if corr.violations else code == 0
  ok = indep.violations == 0 and equal and minimised and exit_ok
  accept(4, ok, f"audit: independent blocks {indep.violations}/"
         f"{len(indep.cases)} violations, ln 9 witness "
         f"{witness.composed_eps!r}; correlated blocks {corr.violations}/"
         f"{len(corr.cases)} violate the max rule, all minimised and "
         f"serialised, verify exit code {code}")
  assert ok


def test_criterion_5_singleton_outputs(accept):
  instances = checks = 0
  failures = []
  for mode in ("sequential", "parallel", "postprocess"):
    config = verify.CaseConfig(mode)
    for seed in range(60):
      model, plan, post = verify.draw_inputs(seed, config)
      mech = compose(plan)
      if post is not None:
        mech = post_process(mech, post)
      if len(mech.alphabet) > 12:
        continue
      fmodel, fmech = model.to_float(), mech.to_float()
      instances += 1
      for view in all_views(model.n):
        checks += 1
        if not event_sup_check(fmech, fmodel, view):
          failures.append((mode, seed, str(view)))
  ok = instances >= 100 and not failures
  accept(5, ok, f"{instances} corpus instances, {checks} adversaries, "
         f"{len(failures)} failures of the singleton reduction")
  assert ok


def test_criterion_6_correlation_sanity(accept):
  half = F(1, 2)
  correlated = CorrelationModel.from_cells(
      [(0, 1), (0, 1)], {(0, 0): half, (1, 1): half}, exact=True)
  independent = CorrelationModel.independent([{0: half, 1: half}] * 2)
  rr = randomized_response(0.25, 2)
  view = AdversaryView(1, ())
  corr = bdpl_adversary(rr, correlated.to_float(), view)[0]
  ind = bdpl_adversary(rr, independent.to_float(), view)[0]
  ok = abs(corr - math.log(3)) <= 1e-10 and abs(ind) <= 1e-10
  accept(6, ok, f"A(1, {{}}) on copied bits {corr!r} (ln 3 = "
         f"{math.log(3)!r}); on independent bits {ind!r}")
  assert ok


def _twice(argv, tmp_path, name):
  outputs = []
  for k in range(2):
    path = tmp_path / f"{name}{k}.json"
    stdout = io.StringIO()
    code = main(["--no-header", "--seed", "7", "--out", str(path), *argv],
                stdout=stdout, stderr=io.StringIO())
    outputs.append((code, path.read_bytes(), stdout.getvalue()))
  return outputs[0] == outputs[1]


def test_criterion_7_reproducible_outputs(accept, tmp_path):
  s = lambda f: os.path.join(SAMPLES, f)
  same = {
      "analyze": _twice(["analyze", s("model_correlated.json"),
                         s("rr_tuple2.json")], tmp_path, "a"),
      "compose": _twice(["compose", s("model_independent.json"),
                         s("plan_parallel.json")], tmp_path, "c"),
      "verify": _twice(["verify", "--theorem", "all", "--seeds", "25"],
                       tmp_path, "v"),
  }
  ok = all(same.values())
  accept(7, ok, ", ".join(f"{k} {'identical' if v else 'DIFFERENT'}"
                          for k, v in same.items()) + " across two runs")
  assert ok


def test_float_path_matches_exact_on_corpus():
  # Not a numbered criterion: the fast path used by the sweeps agrees with
  # exact arithmetic on corpus instances.
  for seed in range(30):
    model, plan, _ = verify.draw_inputs(seed, verify.CaseConfig())
    mech = compose(plan)
    exact = bdpl(mech, model)
    fast = bdpl(mech.to_float(), model.to_float())
    want = math.log(exact.overall_ratio) if exact.overall_ratio != math.inf \
        else math.inf
    assert fast.overall == want or np.isclose(fast.overall, want, rtol=0,
                                              atol=1e-10)
