import io
import json
import math
import os

import pytest

from bdpl.cli import main

SAMPLES = os.path.join(os.path.dirname(__file__), os.pardir, "samples")


def sample(name):
  return os.path.join(SAMPLES, name)


def run(*argv):
  out, err = io.StringIO(), io.StringIO()
  code = main(list(argv), stdout=out, stderr=err)
  return code, out.getvalue(), err.getvalue()


def test_analyze_rr_golden():
  code, out, _ = run("--no-header", "analyze", sample("model_bit.json"),
                     sample("rr_tuple1.json"))
  assert code == 0
  assert out.splitlines()[0].startswith("i=1 K={} bdpl=1.098612")


def test_analyze_header_toggle():
  _, out, _ = run("analyze", sample("model_bit.json"),
                  sample("rr_tuple1.json"))
  assert out.startswith("# bdpl ")
  _, quiet, _ = run("analyze", "--no-header", sample("model_bit.json"),
                    sample("rr_tuple1.json"))
  assert not quiet.startswith("#")


def test_analyze_correlated_writes_report(tmp_path):
  out_file = tmp_path / "report.json"
  code, out, _ = run("--exact", "--out", str(out_file), "analyze",
                     sample("model_correlated.json"),
                     sample("rr_tuple2.json"))
  assert code == 0
  report = json.loads(out_file.read_text())
  assert report["overall_ratio"] == "3"
  first = report["per_adversary"][0]
  assert (first["i"], first["K"]) == (1, [])
  assert first["bdpl"] == pytest.approx(math.log(3))
  assert report["skipped"]


def test_analyze_identity_is_infinite():
  code, out, _ = run("--no-header", "analyze", sample("model_bit.json"),
                     sample("identity.json"))
  assert code == 2
  assert "bdpl=inf" in out


def test_malformed_json_reports_position(tmp_path):
  bad = tmp_path / "bad.json"
  bad.write_text('{"n": 1,\n "domains": [[0, 1]\n')
  code, _, err = run("analyze", str(bad), sample("rr_tuple1.json"))
  assert code == 64
  assert f"{bad}:3:1:" in err


def test_missing_fields_and_bad_flags_are_parse_errors(tmp_path):
  bad = tmp_path / "m.json"
  bad.write_text('{"n": 1}')
  assert run("analyze", str(bad), sample("rr_tuple1.json"))[0] == 64
  assert run("--budget", "0", "analyze", "a", "b")[0] == 64
  assert run("frobnicate")[0] == 64


def test_inconsistent_inputs(tmp_path):
  mech = tmp_path / "rr3.json"
  mech.write_text('{"builtin": "randomized_response", "p": 0.25, "tuple": 3}')
  assert run("analyze", sample("model_bit.json"), str(mech))[0] == 65
  code, _, err = run("compose", sample("model_correlated.json"),
                     sample("plan_cycle.json"))
  assert code == 65 and "cycle" in err


def test_missing_file():
  assert run("analyze", sample("model_bit.json"), "nope.json")[0] == 66


def test_budget_exceeded():
  code, _, err = run("--budget", "2", "analyze", sample("model_bit.json"),
                     sample("rr_tuple1.json"))
  assert code == 69 and "budget" in err


def test_compose_sequential_certificate(tmp_path):
  out_file = tmp_path / "c.json"
  code, out, _ = run("--no-header", "--out", str(out_file), "compose",
                     sample("model_bit.json"), sample("plan_sequential.json"))
  assert code == 0
  assert "bound=2.197225, oracle=2.197225" in out.splitlines()
  data = json.loads(out_file.read_text())
  assert data["certificate_holds"] is True
  assert len(data["composed"]["table"]["alphabet"]) == 4


def test_compose_parallel_certificate():
  code, out, _ = run("--no-header", "compose",
                     sample("model_independent.json"),
                     sample("plan_parallel.json"))
  assert code == 0
  assert "bound=2.197225, oracle=2.197225" in out


def test_compose_violation_exits_one():
  code, out, _ = run("--no-header", "compose",
                     sample("model_correlated.json"),
                     sample("plan_parallel.json"))
  assert code == 1
  assert "oracle exceeds bound" in out


def test_account_total():
  code, out, _ = run("--no-header", "account", sample("ledger.jsonl"))
  assert code == 0
  assert out.strip().startswith("total 3.295836")


def test_account_empty(tmp_path):
  empty = tmp_path / "empty.jsonl"
  empty.write_text("")
  code, out, _ = run("--no-header", "account", str(empty))
  assert code == 0 and out.strip() in ("total 0", "total 0.0")


def test_account_malformed_and_invalid(tmp_path):
  bad = tmp_path / "bad.jsonl"
  bad.write_text('{"label": "a", "epsilon": 1, "rule": "sequential"}\n{oops\n')
  code, _, err = run("account", str(bad))
  assert code == 64 and "line 2" in err
  neg = tmp_path / "neg.jsonl"
  neg.write_text('{"label": "a", "epsilon": -1, "rule": "sequential"}\n')
  assert run("account", str(neg))[0] == 65


def test_verify_clean_theorems_exit_zero(tmp_path):
  out_file = tmp_path / "r.json"
  code, out, _ = run("--no-header", "--out", str(out_file), "verify",
                     "--theorem", "1", "--seeds", "20")
  assert code == 0
  assert out.strip().endswith("violations=0")
  assert json.loads(out_file.read_text())["violations"] == 0
  assert run("verify", "--theorem", "3", "--seeds", "20")[0] == 0


def test_verify_violation_exits_nonzero(tmp_path):
  out_file = tmp_path / "r.json"
  code, out, _ = run("--out", str(out_file), "verify", "--theorem", "2",
                     "--seeds", "20")
  assert code == 1
  report = json.loads(out_file.read_text())
  sweeps = {s["corpus"]: s for s in report["sweeps"]}
  assert sweeps["independent"]["violations"] == 0
  assert sweeps["correlated"]["violations"] > 0
  assert sweeps["correlated"]["counterexamples"][0]["model"]["n"] >= 1


def test_verify_config_file(tmp_path):
  cfg = tmp_path / "cfg.json"
  cfg.write_text('{"blocks": "independent", "n_max": 2}')
  code, out, _ = run("--no-header", "verify", "--theorem", "2", "--seeds",
                     "10", "--config", str(cfg))
  assert code == 0 and "corpus=independent" in out
  assert "corpus=correlated" not in out
  cfg.write_text('{"colour": 1}')
  assert run("verify", "--config", str(cfg))[0] == 64
  cfg.write_text('{"n_max": 9}')
  assert run("verify", "--config", str(cfg))[0] == 65
