"""Sybil adversary controlling ``m`` certified subjects.

Corruption is fixed before any request is made (no adaptive corruption).
Corrupted subjects coordinate instantly and for free over a side channel.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

from . import crypto
from .channels import ChannelMessage, EndpointAddress
from .ledger import as_time
from .messages import (
    MalformedPayload,
    PartialChallenge,
    challenge_p3,
    decode_challenge_message,
    p3_message,
)
from .protocols import RequestRun, Role, Simulation
from .registry import Registry

STRATEGIES = ("none", "miscertify_accept", "miscertify_disclose", "dos_silence", "spoof", "eavesdrop")
COMPATIBLE = {
    "p3": {"none", "miscertify_accept", "dos_silence", "spoof"},
    "p4": {"none", "miscertify_disclose", "dos_silence", "eavesdrop"},
}
# strategies in which the adversary files its own request for someone else's endpoint
MISCERTIFY = {"miscertify_accept", "miscertify_disclose", "spoof", "eavesdrop"}

Selection = Union[str, Sequence[int]]


class AdversaryConfigError(ValueError):
    pass


@dataclass
class AdversaryConfig:
    corrupted_count: int = 0
    cost_per_subject: Fraction = Fraction(1)
    strategy: str = "none"
    target_request: int | None = None
    selection: Selection = "random"

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise AdversaryConfigError(f"unknown strategy {self.strategy!r}")
        if self.corrupted_count < 0:
            raise AdversaryConfigError("corrupted_count must be non-negative")
        self.cost_per_subject = as_time(self.cost_per_subject)

    def check_protocol(self, protocol: str) -> None:
        if protocol in COMPATIBLE and self.strategy not in COMPATIBLE[protocol]:
            raise AdversaryConfigError(f"strategy {self.strategy!r} does not apply to protocol {protocol}")


def corrupt(registry: Registry, which: Selection, m: int, seed: int = 0) -> Registry:
    """Flag exactly ``m`` subjects as adversary-controlled."""
    n = registry.size
    if m > n:
        raise AdversaryConfigError(f"cannot corrupt {m} of {n} subjects")
    if isinstance(which, str):
        if which == "first":
            ids = range(m)
        elif which == "random":
            ids = random.Random(seed).sample(range(n), m)
        else:
            raise AdversaryConfigError(f"unknown selection rule {which!r}")
    else:
        ids = list(which)
        if len(set(ids)) != m or any(not 0 <= i < n for i in ids):
            raise AdversaryConfigError(f"explicit selection must list {m} distinct ids below {n}")
    for s in registry.subjects:
        s.corrupted = False
    for i in ids:
        registry.subjects[i].corrupted = True
    return registry


def attack_cost(config: AdversaryConfig, periods=1) -> Fraction:
    return config.cost_per_subject * config.corrupted_count * as_time(periods)


@dataclass
class Adversary:
    config: AdversaryConfig
    keys: crypto.KeyPair
    target: EndpointAddress
    run: RequestRun | None = None
    collected: dict[int, PartialChallenge] = field(default_factory=dict)
    spoof_refused: int = 0
    eavesdrop_refused: bool = False

    # -- behaviour of corrupted members ---------------------------------------

    def role(self, member_id: int, run: RequestRun) -> Role:
        if run is self.run:
            return Role.ACCOMPLICE
        if self.config.strategy == "dos_silence":
            return Role.SILENT
        return Role.HONEST

    # -- hooks called by the simulation ----------------------------------------

    def on_request_observed(self, sim: Simulation, run: RequestRun) -> None:
        if run is not self.run or run.protocol != "p3":
            return
        q = challenge_p3(sim.ledger.get(run.tx_id).payload, run.block.hash)
        proof = self.keys.sign(q)
        run.proof = proof
        # accomplices accept whatever arrives over the side channel
        for member in sorted(run.committee.distinct_members & sim.registry.corrupted):
            sim.accept(run, member, proof)
        if self.config.strategy == "spoof":
            payload = p3_message(run.tx_id, proof)
            for member in run.committee.members:
                msg = sim.channel.attempt_spoof(self, self.target, sim.member_endpoint(member), payload, sim.now)
                if msg is None:
                    self.spoof_refused += 1
                else:
                    sim.deliver_later(msg)

    def on_block_observed(self, sim: Simulation, block) -> None:
        pass

    def leak(self, sim: Simulation, run: RequestRun, challenges: list[PartialChallenge]) -> None:
        self._collect(sim, run, challenges)

    def on_eavesdrop(self, sim: Simulation, msg: ChannelMessage) -> None:
        try:
            c = decode_challenge_message(msg.payload)
        except MalformedPayload:
            return
        if self.run is not None and c.request_id == self.run.tx_id:
            self._collect(sim, self.run, [c])

    def _collect(self, sim: Simulation, run: RequestRun, challenges: list[PartialChallenge]) -> None:
        if run is not self.run:
            return
        for c in challenges:
            if run.committee.members[c.slot - 1] == c.member_id:
                self.collected.setdefault(c.slot, c)
        if run.proof_tx is None and len({c.member_id for c in self.collected.values()}) >= sim.params.k_bar:
            sim.publish_proof(run, list(self.collected.values()))


@dataclass(frozen=True)
class AttackOutcome:
    strategy: str
    success: bool
    run: RequestRun
    adversary: Adversary


def execute_strategy(sim: Simulation, config: AdversaryConfig, *, target: RequestRun | EndpointAddress | None = None,
                     submit_time=None, protocol: str | None = None) -> AttackOutcome:
    """Install the adversary in ``sim``, run the simulation, and score the attack.

    For miscertification strategies the adversary requests <p_A, E> for a
    victim endpoint E it does not control; for ``dos_silence`` the target is
    an honest request already launched in ``sim``.
    """
    if config.strategy == "none":
        raise AdversaryConfigError("strategy 'none' has nothing to execute")
    honest_runs = [r for r in sim._launched if r.honest]
    if protocol is None:
        protocol = honest_runs[0].protocol if honest_runs and not isinstance(target, EndpointAddress) else None
    if config.strategy == "dos_silence":
        run = target if isinstance(target, RequestRun) else (honest_runs[0] if honest_runs else None)
        if run is None:
            raise AdversaryConfigError("dos_silence needs an honest target request in the simulation")
        config.check_protocol(run.protocol)
        adv = Adversary(config, sim.new_keys(b"adversary"), run.endpoint)
        sim.adversary = adv
        sim.run()
        return AttackOutcome(config.strategy, not run.certified, run, adv)

    if protocol is None:
        protocol = "p3" if config.strategy in COMPATIBLE["p3"] else "p4"
    config.check_protocol(protocol)
    keys = sim.new_keys(b"adversary")
    victim = target if isinstance(target, EndpointAddress) else EndpointAddress(
        sim.channel.profile.kind, f"victim-{sim.rng.randbytes(8).hex()}"
    )
    adv = Adversary(config, keys, victim)
    sim.adversary = adv
    if config.strategy == "eavesdrop":
        adv.eavesdrop_refused = not sim.channel.attempt_eavesdrop(adv, victim)
    adv.run = sim.launch(keys, victim, protocol, submit_time, controls_endpoint=False, honest=False)
    sim.run()
    return AttackOutcome(config.strategy, adv.run.certified, adv.run, adv)
