"""Protocol engine and simulator for on-chain endpoint-binding certificates."""

from .analysis import SecurityParams, TimingParams, latency_basic, latency_p3, latency_p4, p_exact
from .channels import PRESETS, ChannelProfile, EndpointAddress
from .committee import Committee, is_member, select
from .config import ScenarioConfig, load_scenario, parse_scenario
from .crypto import KeyPair, digest, generate_keypair, index_from_digest, sign, verify
from .ledger import Block, Ledger, Transaction, TxKind
from .registry import ProtocolParams, Registry, verify_p3, verify_p4
from .runner import run_analysis, run_scenario

__version__ = "0.1.0"

__all__ = [
    "SecurityParams",
    "TimingParams",
    "latency_basic",
    "latency_p3",
    "latency_p4",
    "p_exact",
    "PRESETS",
    "ChannelProfile",
    "EndpointAddress",
    "Committee",
    "is_member",
    "select",
    "ScenarioConfig",
    "load_scenario",
    "parse_scenario",
    "KeyPair",
    "digest",
    "generate_keypair",
    "index_from_digest",
    "sign",
    "verify",
    "Block",
    "Ledger",
    "Transaction",
    "TxKind",
    "ProtocolParams",
    "Registry",
    "verify_p3",
    "verify_p4",
    "run_analysis",
    "run_scenario",
]
