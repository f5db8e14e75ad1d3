"""Deterministic two-ledger simulator for collateralized cross-chain loans."""

from .adversary import EnumerationResult, Violation, enumerate_adversarial
from .agents import SecretAccessError, Strategy
from .chain_sim import (
    After,
    All,
    Any,
    Before,
    Clock,
    ContractChain,
    MultiSig2of2,
    PreimageOf,
    SignedBy,
    Transaction,
    TxIn,
    TxOut,
    TxRejected,
    UtxoChain,
    Witness,
    advance_clock,
    eval_condition,
    scan_revealed,
    submit_tx,
)
from .collateral import (
    CollateralParams,
    PeriodTimeline,
    build_refundable_script,
    build_seizable_script,
    lock_collateral,
    spend_collateral,
)
from .loan_contract import Bid, HtlcContract, LoanContract, LoanState, LoanTerms
from .primitives import KeyPair, Secret, SecretHash, Signature, commit, generate_secret, sign, verify
from .report import RunReport, report_from_trace, validate_events
from .scenarios import Outcome, PartyConfig, Scenario, ScenarioError, builtin_scenarios, run_scenario
from .trace import TraceEvent, read_trace, write_trace

__version__ = "0.1.0"
