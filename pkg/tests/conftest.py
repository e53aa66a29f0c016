import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from bdpl.mechanism import Mechanism  # noqa: E402
from bdpl.model import CorrelationModel  # noqa: E402

# Acceptance results, filled by tests/test_acceptance.py through `record`.
ACCEPTANCE = {}


def record(criterion: int, ok: bool, detail: str) -> None:
  ACCEPTANCE[criterion] = (ok, detail)


@pytest.fixture
def accept():
  return record


def build(instance, exact=True):
  """Package objects (model, mechanism) for a raw oracle instance."""
  domains, joint, scope, rows, alphabet = instance
  model = CorrelationModel.from_cells(domains, joint, exact=True)
  mech = Mechanism.from_rows(scope, [domains[j - 1] for j in scope],
                             alphabet, rows)
  if not exact:
    return model.to_float(), mech.to_float()
  return model, mech


def pytest_terminal_summary(terminalreporter):
  if not ACCEPTANCE:
    return
  terminalreporter.section("acceptance criteria")
  for criterion in sorted(ACCEPTANCE):
    ok, detail = ACCEPTANCE[criterion]
    terminalreporter.write_line(
        f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}")
