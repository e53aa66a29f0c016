"""Exception types shared across the package."""


class BDPLError(Exception):
  """Base class for all errors raised by this package."""


class ZeroConditioning(BDPLError):
  """Conditioning on evidence that has zero prior probability."""


class FormatError(BDPLError, ValueError):
  """An input document does not have the expected structure."""


class ModelError(BDPLError, ValueError):
  """A correlation model violates its invariants."""


class MechanismError(BDPLError, ValueError):
  """A mechanism or post-processing map violates its invariants."""


class AlphabetMismatch(MechanismError):
  """Two wired alphabets or domains do not agree."""


class PlanError(BDPLError, ValueError):
  """A composition plan is malformed (bad wiring, bad partition, ...)."""


class LedgerError(BDPLError, ValueError):
  """An invalid budget ledger operation."""


class BudgetExceeded(BDPLError):
  """The enumeration would touch more cells than the configured budget."""

  def __init__(self, cells: int, budget: int):
    super().__init__(f"enumeration needs {cells} cells, budget is {budget}")
    self.cells = cells
    self.budget = budget
