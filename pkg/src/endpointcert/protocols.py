"""Protocol state machines and the deterministic simulation driver.

Two decentralized protocols are simulated end to end on top of the ledger,
registry and channel models:

* ``p3`` - the subject sends a signed challenge ``[Q]_S`` from its endpoint to
  every committee member, who publish acceptances on chain;
* ``p4`` - committee members send fresh partial challenges to the endpoint,
  the subject publishes a signed proof over them, and members disclose their
  challenges once the proof is committed.

The two interactive baselines (verifier sends a code to the endpoint, or the
subject sends it back from the endpoint) are evaluated directly on a channel.

Events run in (time, sequence) order. All times are exact fractions, so the
measured latencies can be compared with closed forms without tolerance.
"""
from __future__ import annotations

import enum
import heapq
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import TYPE_CHECKING, Callable

from . import crypto
from .channels import Channel, ChannelMessage, ChannelProfile, EndpointAddress
from .committee import Committee
from .crypto import KeyPair, u64
from .ledger import Block, Ledger, Time, Transaction, TxKind, as_time
from .messages import (
    GENESIS,
    CertificationRequest,
    MalformedPayload,
    PartialChallenge,
    Summary,
    acceptance_payload,
    challenge_message,
    challenge_p3,
    decode_challenge_message,
    decode_disclosure,
    decode_p3,
    disclosure_payload,
    p3_message,
    proof_body,
    proof_payload,
)
from .registry import CONSENSUS_KEYS, P3Verdict, P4Verdict, ProtocolParams, Registry

if TYPE_CHECKING:
    from .config import ScenarioConfig

__all__ = [
    "CertificationRequest",
    "PartialChallenge",
    "ChallengeP3",
    "ProofRecord",
    "Population",
    "population",
    "Role",
    "RequestRun",
    "Simulation",
    "TrialResult",
    "BasicSubject",
    "BasicOutcome",
    "run_basic_p1",
    "run_basic_p2",
    "run_trial",
    "run_p3",
    "run_p4",
]

CHALLENGE_BYTES = 32


class Role(str, enum.Enum):
    HONEST = "honest"
    OFFLINE = "offline"
    SILENT = "silent"
    ACCOMPLICE = "accomplice"
    EARLY_DISCLOSER = "early_discloser"


@dataclass(frozen=True)
class ChallengeP3:
    value: bytes
    request: int
    block_hash: bytes


@dataclass(frozen=True)
class ProofRecord:
    protocol: str
    proof_payload: bytes
    acceptances_or_disclosures: tuple[int, ...]


# -- population -----------------------------------------------------------------

@dataclass(frozen=True)
class Population:
    """The N subjects certified at genesis, with their keys and endpoints."""

    size: int
    seed: int
    kind: str
    keys: tuple[KeyPair, ...]
    endpoints: tuple[EndpointAddress, ...]
    genesis: Block

    @cached_property
    def endpoint_ids(self) -> dict[EndpointAddress, int]:
        return {e: i for i, e in enumerate(self.endpoints)}

    def subject_keys(self, subject_id: int) -> KeyPair:
        return self.keys[subject_id]

    def registry(self, params: ProtocolParams) -> Registry:
        """Fresh registry holding the genesis subjects (replayed once, then copied)."""
        key = (self.size, self.seed, self.kind)
        base = _GENESIS_REGISTRY.get(key)
        if base is None:
            base = Registry(params)
            base.apply_block(self.genesis)
            _GENESIS_REGISTRY[key] = base
        return base.copy(params)


_GENESIS_REGISTRY: dict[tuple, Registry] = {}


@lru_cache(maxsize=32)
def population(size: int, seed: int = 0, kind: str = "email") -> Population:
    if size < 1:
        raise ValueError("population must contain at least one subject")
    keys, endpoints, txs = [], [], []
    for i in range(size):
        kp = crypto.generate_keypair(crypto.pack([b"subject", u64(seed), u64(i)]))
        endpoint = EndpointAddress(kind, f"subject-{i}")
        request = CertificationRequest(kp.public, endpoint, GENESIS).encode()
        txs.append(Transaction.create(TxKind.SUMMARIZATION, Summary(i, request, GENESIS).encode(), CONSENSUS_KEYS))
        keys.append(kp)
        endpoints.append(endpoint)
    genesis = Ledger(1, 0, genesis=txs).blocks[0]
    return Population(size, seed, kind, tuple(keys), tuple(endpoints), genesis)


# -- runs -------------------------------------------------------------------------

@dataclass
class RequestRun:
    """Book-keeping for one certification request flowing through the protocol."""

    request: CertificationRequest
    keys: KeyPair
    controls_endpoint: bool
    submit_time: Time
    honest: bool = True
    tx_id: int = -1
    block: Block | None = None
    committee: Committee | None = None
    deadline: Time | None = None
    proof: bytes | None = None
    received: dict[int, PartialChallenge] = field(default_factory=dict)
    generated: dict[int, list[PartialChallenge]] = field(default_factory=dict)
    seen_disclosed: set[tuple[int, bytes]] = field(default_factory=set)
    accepted: set[int] = field(default_factory=set)
    disclosed: set[int] = field(default_factory=set)
    proof_tx: int | None = None
    verdict: P3Verdict | P4Verdict | None = None
    certified_block: Block | None = None
    certified_time: Time | None = None
    summarized_id: int | None = None
    summarized_time: Time | None = None
    propagation_delay: Time = Fraction(0)

    @property
    def protocol(self) -> str:
        return self.request.protocol

    @property
    def endpoint(self) -> EndpointAddress:
        return self.request.endpoint

    @property
    def request_wait(self) -> Time | None:
        """b-bar: time between the request reaching block producers and its commit."""
        if self.block is None:
            return None
        return self.block.commit_time - self.submit_time - self.propagation_delay

    @property
    def certified(self) -> bool:
        return self.certified_block is not None and (
            self.deadline is None or self.certified_block.commit_time <= self.deadline
        )

    @property
    def latency(self) -> Time | None:
        return self.certified_time - self.submit_time if self.certified else None


class Simulation:
    """Single-threaded discrete-event driver owning ledger, registry and channel."""

    def __init__(
        self,
        pop: Population,
        params: ProtocolParams,
        profile: ChannelProfile,
        *,
        block_interval=15,
        propagation_delay=1,
        seed: int = 0,
        deadline_blocks: int = 10,
    ):
        self.population = pop
        self.params = params
        self.ledger = Ledger(block_interval, propagation_delay, genesis=pop.genesis)
        self.registry = pop.registry(params)
        self.channel = Channel(profile)
        self.rng = random.Random(seed)
        self.deadline_blocks = deadline_blocks
        self.now: Time = Fraction(0)
        self.offline: set[int] = set()
        self.early_disclosers: set[int] = set()
        self.adversary = None
        self.runs: dict[int, RequestRun] = {}
        self._launched: list[RequestRun] = []
        self._keys: dict[int, KeyPair] = dict(enumerate(pop.keys))
        # genesis members are resolved through pop.endpoint_ids; later owners are registered here
        self._owners: dict[EndpointAddress, Callable[[ChannelMessage], None]] = {}
        self._queue: list = []
        self._seq = 0
        self._ticking = False
        self._horizon: Time | None = None

    @property
    def b(self) -> Time:
        return self.ledger.block_interval

    @property
    def p(self) -> Time:
        return self.ledger.propagation_delay

    # -- event queue ----------------------------------------------------------

    def schedule(self, at, fn: Callable, *args) -> None:
        at = as_time(at)
        if at < self.now:
            raise ValueError(f"cannot schedule at {at}, clock is at {self.now}")
        heapq.heappush(self._queue, (at, self._seq, fn, args))
        self._seq += 1

    def _ensure_ticking(self) -> None:
        if not self._ticking:
            self._ticking = True
            self.schedule(max(self.ledger.next_commit_time, self.now), self._tick)

    def run(self, until=None) -> None:
        until = None if until is None else as_time(until)
        self._ensure_ticking()
        while self._queue:
            at = self._queue[0][0]
            if until is not None and at > until:
                break
            if not self._ticking and self.ledger.next_commit_time < at:
                # ticks were paused past the horizon; produce the missed blocks in order first
                self._ensure_ticking()
                continue
            at, _, fn, args = heapq.heappop(self._queue)
            self.now = at
            fn(*args)

    def _busy(self) -> bool:
        return bool(self.ledger.pending) or any(ev[2] != self._tick for ev in self._queue)

    def _tick(self) -> None:
        for block in self.ledger.advance_to(self.now):
            self._on_block(block)
        self._ticking = False
        horizon_ok = self._horizon is None or self.ledger.next_commit_time <= self._horizon + self.b
        if self._busy() and horizon_ok:
            self._ensure_ticking()

    def _on_block(self, block: Block) -> None:
        for subject in self.registry.apply_block(block):
            for run in self._launched:
                if run.request.public_key == subject.public_key and run.endpoint == subject.endpoint:
                    run.summarized_id = subject.id
                    run.summarized_time = block.commit_time
                    self._keys[subject.id] = run.keys
                    if run.controls_endpoint:
                        self._owners[subject.endpoint] = self._member_handler(subject.id)
        for tx in block.transactions:
            run = self.runs.get(tx.id)
            if run is not None and tx.kind is TxKind.REQUEST:
                run.block = block
                run.deadline = block.commit_time + self.deadline_blocks * self.b
                self._horizon = max(self._horizon or run.deadline, run.deadline)
        if self._horizon is None or block.commit_time <= self._horizon:
            for rid, verdict in self.registry.consensus_step(self.ledger, block):
                run = self.runs.get(rid)
                if run is not None:
                    run.verdict = verdict
                    run.certified_block = block
                    run.certified_time = block.commit_time + self.p
        self.schedule(block.commit_time + self.p, self._observe, block)

    # -- requests -------------------------------------------------------------

    def new_keys(self, label: bytes) -> KeyPair:
        return crypto.generate_keypair(crypto.pack([label, self.rng.randbytes(16)]))

    def launch(
        self,
        keys: KeyPair,
        endpoint: EndpointAddress,
        protocol: str,
        at=None,
        *,
        controls_endpoint: bool = True,
        honest: bool = True,
    ) -> RequestRun:
        """Schedule submission of ``[R]_S`` for R = <keys.public, endpoint>."""
        if at is None:
            at = Fraction(self.rng.random()) * self.b
        run = RequestRun(CertificationRequest(keys.public, endpoint, protocol), keys,
                         controls_endpoint, as_time(at), honest)
        run.propagation_delay = self.p
        self._launched.append(run)
        if controls_endpoint:
            self._owners[endpoint] = lambda msg, run=run: self._subject_received(run, msg)
        self.schedule(run.submit_time, self._submit_request, run)
        return run

    def _submit_request(self, run: RequestRun) -> None:
        tx = Transaction.create(TxKind.REQUEST, run.request.encode(), run.keys)
        tx = self.ledger.submit(tx, self.now)
        run.tx_id = tx.id
        self.runs[tx.id] = run
        self._ensure_ticking()

    def submit(self, kind: TxKind, payload: bytes, keys: KeyPair) -> Transaction:
        tx = self.ledger.submit(Transaction.create(kind, payload, keys), self.now)
        self._ensure_ticking()
        return tx

    def member_keys(self, member_id: int) -> KeyPair:
        return self._keys[member_id]

    def member_endpoint(self, member_id: int) -> EndpointAddress:
        return self.registry.subjects[member_id].endpoint

    def role(self, member_id: int, run: RequestRun) -> Role:
        if member_id in self.offline:
            return Role.OFFLINE
        if self.adversary is not None and self.registry.subjects[member_id].corrupted:
            return self.adversary.role(member_id, run)
        if member_id in self.early_disclosers:
            return Role.EARLY_DISCLOSER
        return Role.HONEST

    # -- channel --------------------------------------------------------------

    def transmit(self, sender: EndpointAddress, to: EndpointAddress, payload: bytes) -> ChannelMessage:
        msg = self.channel.send(sender, to, payload, self.now)
        self.deliver_later(msg)
        return msg

    def deliver_later(self, msg: ChannelMessage) -> None:
        self.schedule(msg.delivered_at, self._deliver, msg)
        for tap in self.channel.eavesdroppers(msg.to):
            self.schedule(msg.delivered_at, tap.on_eavesdrop, self, msg)

    def _deliver(self, msg: ChannelMessage) -> None:
        handler = self._owners.get(msg.to)
        if handler is not None:
            handler(msg)
        elif msg.to in self.population.endpoint_ids:
            self._member_received(self.population.endpoint_ids[msg.to], msg)

    # -- block observation ----------------------------------------------------

    def _observe(self, block: Block) -> None:
        for tx in block.transactions:
            if tx.kind is TxKind.REQUEST and tx.id in self.runs:
                self._request_observed(self.runs[tx.id])
            elif tx.kind is TxKind.PROOF and tx.ref in self.runs:
                self._proof_observed(self.runs[tx.ref], tx)
            elif tx.kind is TxKind.DISCLOSURE and tx.ref in self.runs:
                run = self.runs[tx.ref]
                try:
                    _, _, challenges = decode_disclosure(tx.payload)
                except MalformedPayload:
                    continue
                run.seen_disclosed.update((c.slot, c.value) for c in challenges)
        if self.adversary is not None:
            self.adversary.on_block_observed(self, block)

    def _request_observed(self, run: RequestRun) -> None:
        run.committee = self.registry.committee_for(self.ledger, run.tx_id)
        if run.protocol == "p3":
            if run.controls_endpoint:
                q = challenge_p3(self.ledger.get(run.tx_id).payload, run.block.hash)
                run.proof = run.keys.sign(q)
                payload = p3_message(run.tx_id, run.proof)
                for member in run.committee.members:
                    self.transmit(run.endpoint, self.member_endpoint(member), payload)
        else:
            for member in sorted(run.committee.distinct_members):
                role = self.role(member, run)
                if role in (Role.OFFLINE, Role.SILENT):
                    continue
                challenges = [
                    PartialChallenge(slot, member, self.rng.randbytes(CHALLENGE_BYTES), run.tx_id)
                    for slot in run.committee.slots_of(member)
                ]
                run.generated[member] = challenges
                if role is Role.ACCOMPLICE:
                    self.adversary.leak(self, run, challenges)
                    continue
                for c in challenges:
                    self.transmit(self.member_endpoint(member), run.endpoint, challenge_message(c))
                if role is Role.EARLY_DISCLOSER:
                    self.disclose(run, member)
        if self.adversary is not None:
            self.adversary.on_request_observed(self, run)

    def _proof_observed(self, run: RequestRun, tx: Transaction) -> None:
        for member in sorted(run.generated):
            if self.role(member, run) in (Role.HONEST, Role.ACCOMPLICE):
                self.disclose(run, member)

    # -- member behaviour -----------------------------------------------------

    def _member_handler(self, member_id: int) -> Callable[[ChannelMessage], None]:
        return lambda msg: self._member_received(member_id, msg)

    def _member_received(self, member_id: int, msg: ChannelMessage) -> None:
        try:
            rid, proof = decode_p3(msg.payload)
        except MalformedPayload:
            return
        run = self.runs.get(rid)
        if run is None or run.protocol != "p3" or run.committee is None:
            return
        if member_id not in run.committee.distinct_members:
            return
        if self.role(member_id, run) not in (Role.HONEST, Role.EARLY_DISCLOSER):
            return
        # operational meaning of "sent from E": the channel-level sender is E
        if msg.sender != run.endpoint:
            return
        q = challenge_p3(self.ledger.get(rid).payload, run.block.hash)
        if crypto.verify(run.request.public_key, q, proof):
            self.accept(run, member_id, proof)

    def accept(self, run: RequestRun, member_id: int, proof: bytes) -> None:
        if member_id in run.accepted:
            return
        run.accepted.add(member_id)
        self.submit(TxKind.ACCEPTANCE, acceptance_payload(run.tx_id, proof), self.member_keys(member_id))

    def disclose(self, run: RequestRun, member_id: int) -> None:
        if member_id in run.disclosed or member_id not in run.generated:
            return
        run.disclosed.add(member_id)
        payload = disclosure_payload(run.tx_id, member_id, run.generated[member_id])
        self.submit(TxKind.DISCLOSURE, payload, self.member_keys(member_id))

    # -- subject behaviour (P4) -----------------------------------------------

    def _subject_received(self, run: RequestRun, msg: ChannelMessage) -> None:
        try:
            c = decode_challenge_message(msg.payload)
        except MalformedPayload:
            return
        target = self.runs.get(c.request_id)
        if target is None or target.endpoint != msg.to or target.protocol != "p4":
            return
        self.collect(target, c)

    def collect(self, run: RequestRun, c: PartialChallenge) -> None:
        committee = run.committee
        if committee is None or not 1 <= c.slot <= len(committee.members):
            return
        if committee.members[c.slot - 1] != c.member_id:
            return
        run.received.setdefault(c.slot, c)
        if run.proof_tx is None:
            usable = [x for x in run.received.values() if (x.slot, x.value) not in run.seen_disclosed]
            if len({x.member_id for x in usable}) >= self.params.k_bar:
                self.publish_proof(run, usable)

    def publish_proof(self, run: RequestRun, entries: list[PartialChallenge]) -> Transaction:
        request = self.ledger.get(run.tx_id).payload
        body = proof_body(request, entries)
        run.proof = run.keys.sign(body)
        tx = self.submit(TxKind.PROOF, proof_payload(run.tx_id, body, run.proof), run.keys)
        run.proof_tx = tx.id
        return tx


# -- trials -------------------------------------------------------------------

@dataclass(frozen=True)
class TrialResult:
    trial: int
    seed: int
    protocol: str
    strategy: str
    corrupted: int
    certified: bool
    reason: str
    latency: Fraction | None
    request_wait: Fraction | None
    endpoint_messages: int
    endpoint_cost: Fraction
    acceptances: int
    disclosures: int
    committee_corrupted: int
    duplicates: int
    attack_success: bool | None
    subject_id: int | None = None

    def row(self) -> dict:
        def num(x):
            return None if x is None else float(x)

        return {
            "trial": self.trial,
            "seed": self.seed,
            "protocol": self.protocol,
            "strategy": self.strategy,
            "corrupted": self.corrupted,
            "certified": self.certified,
            "reason": self.reason,
            "latency": num(self.latency),
            "request_wait": num(self.request_wait),
            "endpoint_messages": self.endpoint_messages,
            "endpoint_cost": float(self.endpoint_cost),
            "acceptances": self.acceptances,
            "disclosures": self.disclosures,
            "committee_corrupted": self.committee_corrupted,
            "duplicates": self.duplicates,
            "attack_success": self.attack_success,
            "subject_id": self.subject_id,
        }


def failure_reason(sim: Simulation, run: RequestRun) -> str:
    if run.certified:
        return "certified"
    if run.block is None:
        return "request not committed"
    if run.protocol == "p3":
        return "insufficient acceptances"
    if run.proof_tx is None:
        return "insufficient challenges"
    from .registry import verify_p4

    return verify_p4(sim.ledger, sim.registry, run.tx_id).failing_step or "deadline"


def trial_seed(seed: int, trial: int) -> int:
    return int.from_bytes(crypto.digest([b"trial", u64(seed), u64(trial)])[:8], "big")


def build_simulation(config: "ScenarioConfig", trial: int = 0) -> Simulation:
    params = ProtocolParams(config.committee, config.k_bar, config.sortition == "distinct")
    profile = config.channel_profile()
    pop = population(config.population, config.population_seed, profile.kind)
    return Simulation(
        pop, params, profile,
        block_interval=config.timing.block_interval,
        propagation_delay=config.timing.propagation_delay,
        seed=trial_seed(config.seed, trial),
        deadline_blocks=config.deadline_blocks,
    )


def summarize_trial(sim: Simulation, run: RequestRun, trial: int, seed: int, strategy: str,
                    attack_success: bool | None, corrupted: int) -> TrialResult:
    committee = run.committee
    corrupted_ids = sim.registry.corrupted
    return TrialResult(
        trial=trial,
        seed=seed,
        protocol=run.protocol,
        strategy=strategy,
        corrupted=corrupted,
        certified=run.certified,
        reason=failure_reason(sim, run),
        latency=run.latency,
        request_wait=run.request_wait,
        endpoint_messages=sim.channel.message_count(run.endpoint),
        endpoint_cost=sim.channel.cost(run.endpoint),
        acceptances=sum(1 for t in sim.ledger.referencing(run.tx_id) if t.kind is TxKind.ACCEPTANCE),
        disclosures=sum(1 for t in sim.ledger.referencing(run.tx_id) if t.kind is TxKind.DISCLOSURE),
        committee_corrupted=0 if committee is None else len(committee.distinct_members & corrupted_ids),
        duplicates=0 if committee is None else committee.duplicates,
        attack_success=attack_success,
        subject_id=run.summarized_id,
    )


def run_trial(config: "ScenarioConfig", trial: int = 0) -> TrialResult:
    """Run one seeded trial of a decentralized-protocol scenario."""
    sim = build_simulation(config, trial)
    seed = trial_seed(config.seed, trial)
    strategy = config.adversary.strategy
    if config.offline_members:
        sim.offline.update(sim.rng.sample(range(sim.registry.size), config.offline_members))
    if strategy in ("none", "dos_silence"):
        keys = sim.new_keys(b"subject")
        endpoint = EndpointAddress(sim.channel.profile.kind, f"requester-{keys.public.hex()[:16]}")
        run = sim.launch(keys, endpoint, config.protocol, config.submit_time)
    if strategy == "none":
        sim.run()
        return summarize_trial(sim, run, trial, seed, strategy, None, 0)

    from .adversary import corrupt, execute_strategy

    corrupt(sim.registry, config.adversary.selection, config.adversary.corrupted_count, seed=seed)
    outcome = execute_strategy(sim, config.adversary, submit_time=config.submit_time)
    return summarize_trial(sim, outcome.run, trial, seed, strategy, outcome.success,
                           config.adversary.corrupted_count)


def run_p3(config: "ScenarioConfig", trial: int = 0) -> TrialResult:
    if config.protocol != "p3":
        raise ValueError("run_p3 needs a p3 scenario")
    return run_trial(config, trial)


def run_p4(config: "ScenarioConfig", trial: int = 0) -> TrialResult:
    if config.protocol != "p4":
        raise ValueError("run_p4 needs a p4 scenario")
    return run_trial(config, trial)


# -- basic interactive protocols -----------------------------------------------

@dataclass(frozen=True)
class BasicSubject:
    keys: KeyPair
    controls_endpoint: bool = True
    online: bool = True


@dataclass(frozen=True)
class BasicOutcome:
    success: bool
    verified: int
    reason: str
    latency: Fraction | None
    endpoint_messages: int
    endpoint_cost: Fraction


def _verifier(i: int) -> EndpointAddress:
    return EndpointAddress("email", f"verifier-{i}")


def _basic_outcome(verified: int, total: int, times: list, channel: Channel, endpoint) -> BasicOutcome:
    ok = verified == total
    return BasicOutcome(
        ok, verified, "verified" if ok else "timeout",
        max(times) if ok and times else None,
        channel.message_count(endpoint), channel.cost(endpoint),
    )


def run_basic_p1(verifiers: int, subject: BasicSubject, endpoint: EndpointAddress,
                 channel: Channel, *, now=0, seed: int = 0) -> BasicOutcome:
    """Each verifier sends a code to E; the subject returns ``[c]_s`` over M.

    The alternative mean M is modelled with zero latency.
    """
    rng = random.Random(seed)
    now = as_time(now)
    verified, times = 0, []
    for i in range(verifiers):
        code = rng.randbytes(16)
        msg = channel.send(_verifier(i), endpoint, code, now)
        if not (subject.controls_endpoint and subject.online):
            continue
        response = subject.keys.sign(msg.payload)
        if crypto.verify(subject.keys.public, code, response):
            verified += 1
            times.append(msg.delivered_at - now)
    return _basic_outcome(verified, verifiers, times, channel, endpoint)


def run_basic_p2(verifiers: int, subject: BasicSubject, endpoint: EndpointAddress,
                 channel: Channel, *, now=0, seed: int = 0, spoof: bool = False) -> BasicOutcome:
    """Each verifier sends a code over M; ``[c]_s`` comes back from E.

    With ``spoof`` the subject does not control E and injects the response as
    if sent from E, which succeeds only on spoofable channels.
    """
    rng = random.Random(seed)
    now = as_time(now)
    verified, times = 0, []
    for i in range(verifiers):
        code = rng.randbytes(16)
        body = crypto.pack([code, subject.keys.sign(code)])
        if subject.controls_endpoint and subject.online:
            msg = channel.send(endpoint, _verifier(i), body, now)
        elif spoof:
            msg = channel.attempt_spoof(subject, endpoint, _verifier(i), body, now)
        else:
            msg = None
        if msg is None or msg.sender != endpoint:
            continue
        echoed, sig = crypto.unpack(msg.payload)
        if echoed == code and crypto.verify(subject.keys.public, code, sig):
            verified += 1
            times.append(msg.delivered_at - now)
    return _basic_outcome(verified, verifiers, times, channel, endpoint)
