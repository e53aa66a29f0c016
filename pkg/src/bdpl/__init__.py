"""Exact Bayesian differential privacy leakage for correlated tuples."""

from bdpl.accountant import BudgetLedger, certify
from bdpl.errors import (AlphabetMismatch, BDPLError, BudgetExceeded,
                         FormatError, LedgerError, MechanismError, ModelError,
                         PlanError, ZeroConditioning)
from bdpl.leakage import LeakageReport, bdpl, bdpl_adversary, event_sup_check
from bdpl.mechanism import (CompositionPlan, Const, FromStage, Mechanism,
                            OutputAlphabet, PostProcessMap, Stage, chain,
                            compose, parallel, post_process,
                            randomized_response)
from bdpl.model import AdversaryView, CorrelationModel, TupleDomain

__version__ = "0.1.0"

__all__ = [
    "AdversaryView", "AlphabetMismatch", "BDPLError", "BudgetExceeded",
    "BudgetLedger", "CompositionPlan", "Const", "CorrelationModel",
    "FormatError", "FromStage", "LeakageReport", "LedgerError", "Mechanism",
    "MechanismError", "ModelError", "OutputAlphabet", "PlanError",
    "PostProcessMap", "Stage", "TupleDomain", "ZeroConditioning", "bdpl",
    "bdpl_adversary", "certify", "chain", "compose", "event_sup_check",
    "parallel", "post_process", "randomized_response",
]
