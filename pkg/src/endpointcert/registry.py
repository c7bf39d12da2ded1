"""Certified-subject registry, certificate verification and summarization.

The registry is derived state: it is rebuilt exactly by replaying the
Summarization transactions of a chain (``Registry.from_chain``). Verification
reads only public chain data plus the registry's id -> key table.
"""
from __future__ import annotations

import bisect
import csv
import io
from dataclasses import dataclass, field
from typing import Iterable

from . import crypto
from .channels import EndpointAddress
from .committee import Committee, select
from .ledger import Block, Ledger, Transaction, TxKind, UnknownTransaction
from .messages import (
    GENESIS,
    CertificationRequest,
    MalformedPayload,
    Summary,
    challenge_p3,
    decode_acceptance,
    decode_disclosure,
    decode_proof,
    decode_proof_body,
)

CONSENSUS_KEYS = crypto.generate_keypair(b"endpointcert/consensus-rule")


class RegistryError(Exception):
    pass


class RequestNotFound(RegistryError):
    """The request is not a committed, well-formed certification request."""


class InsufficientEvidence(RegistryError):
    pass


class DuplicateRequest(RegistryError):
    pass


@dataclass(frozen=True)
class ProtocolParams:
    k: int
    k_bar: int
    distinct: bool = True

    def __post_init__(self):
        if not 1 <= self.k_bar <= self.k:
            raise ValueError(f"need 1 <= k_bar <= k, got k={self.k}, k_bar={self.k_bar}")


@dataclass
class CertifiedSubject:
    id: int
    public_key: bytes
    endpoint: EndpointAddress
    certified_at: int
    corrupted: bool = False
    active: bool = True


@dataclass(frozen=True)
class Certificate:
    request: CertificationRequest
    request_id: int
    protocol: str
    proof_tx: int
    supporting_txs: tuple[int, ...]
    summarization_tx: int = -1


@dataclass(frozen=True)
class P3Verdict:
    certified: bool
    count: int
    members: tuple[int, ...] = ()
    supporting_txs: tuple[int, ...] = ()


@dataclass(frozen=True)
class P4Verdict:
    certified: bool
    failing_step: str | None = None
    proof_tx: int | None = None
    count: int = 0
    members: tuple[int, ...] = ()
    supporting_txs: tuple[int, ...] = ()


@dataclass
class Registry:
    params: ProtocolParams
    subjects: list[CertifiedSubject] = field(default_factory=list)
    certificates: dict[int, Certificate] = field(default_factory=dict)
    _by_key: dict[bytes, list[int]] = field(default_factory=dict)
    _pairs: set[tuple[bytes, EndpointAddress]] = field(default_factory=set)
    _heights: list[int] = field(default_factory=list)
    _pending: dict[int, tuple[bytes, EndpointAddress]] = field(default_factory=dict)

    @classmethod
    def from_chain(cls, ledger: Ledger, params: ProtocolParams) -> "Registry":
        reg = cls(params)
        for block in ledger.blocks:
            reg.apply_block(block)
        return reg

    def copy(self, params: ProtocolParams | None = None) -> "Registry":
        """Independent copy; subjects are duplicated so corruption flags do not leak."""
        return Registry(
            self.params if params is None else params,
            [CertifiedSubject(s.id, s.public_key, s.endpoint, s.certified_at, s.corrupted, s.active)
             for s in self.subjects],
            dict(self.certificates),
            {k: list(v) for k, v in self._by_key.items()},
            set(self._pairs),
            list(self._heights),
            dict(self._pending),
        )

    # -- state ----------------------------------------------------------------

    @property
    def size(self) -> int:
        return len(self.subjects)

    def population_at(self, height: int) -> int:
        """N as frozen at ``height``: subjects summarized in blocks up to it."""
        return bisect.bisect_right(self._heights, height)

    def ids_of(self, public_key: bytes) -> list[int]:
        return self._by_key.get(public_key, [])

    def is_certified(self, public_key: bytes, endpoint: EndpointAddress) -> bool:
        return (public_key, endpoint) in self._pairs

    @property
    def corrupted(self) -> set[int]:
        return {s.id for s in self.subjects if s.corrupted}

    def expire(self, ids: Iterable[int]) -> None:
        for i in ids:
            s = self.subjects[i]
            s.active = False
            self._pairs.discard((s.public_key, s.endpoint))

    def apply_block(self, block: Block) -> list[CertifiedSubject]:
        added = []
        for tx in block.transactions:
            if tx.kind is TxKind.SUMMARIZATION and tx.submitter == CONSENSUS_KEYS.public:
                added.append(self._apply_summary(tx, block.height))
        return added

    def _apply_summary(self, tx: Transaction, height: int) -> CertifiedSubject:
        summary = Summary.decode(tx.payload)
        if summary.subject_id != len(self.subjects):
            raise RegistryError(
                f"summarization assigns id {summary.subject_id}, expected {len(self.subjects)}"
            )
        req = CertificationRequest.decode(summary.request)
        subject = CertifiedSubject(summary.subject_id, req.public_key, req.endpoint, height)
        self.subjects.append(subject)
        self._heights.append(height)
        self._by_key.setdefault(req.public_key, []).append(subject.id)
        self._pairs.add((req.public_key, req.endpoint))
        self._pending.pop(summary.request_id, None)
        if summary.protocol != GENESIS:
            self.certificates[summary.request_id] = Certificate(
                req, summary.request_id, summary.protocol, summary.proof_tx,
                summary.supporting, tx.id,
            )
        return subject

    def export(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["id", "public_key", "endpoint", "certified_at"])
        for s in self.subjects:
            writer.writerow([s.id, s.public_key.hex(), str(s.endpoint), s.certified_at])
        return out.getvalue()

    # -- committee ------------------------------------------------------------

    def committee_for(self, ledger: Ledger, request_id: int) -> Committee:
        tx, _ = load_request(ledger, request_id)
        block = ledger.block_of(request_id)
        n = self.population_at(block.height)
        if n < 1:
            raise RegistryError("no certified subjects to draw a committee from")
        return select(
            tx.payload, block.hash, n, self.params.k,
            distinct=self.params.distinct, request_id=request_id,
        )

    def member_ids(self, public_key: bytes, committee: Committee) -> list[int]:
        members = committee.distinct_members
        return [i for i in self.ids_of(public_key) if i in members]

    # -- summarization --------------------------------------------------------

    def verify(self, ledger: Ledger, request_id: int) -> P3Verdict | P4Verdict:
        _, req = load_request(ledger, request_id)
        if req.protocol == "p4":
            return verify_p4(ledger, self, request_id)
        return verify_p3(ledger, self, request_id)

    def summarize(self, ledger: Ledger, request_id: int, now, verdict=None) -> tuple[Certificate, int]:
        """Submit the Summarization transaction for a request with sufficient evidence."""
        _, req = load_request(ledger, request_id)
        if request_id in self.certificates or request_id in self._pending:
            raise DuplicateRequest(f"request {request_id} is already summarized")
        pair = (req.public_key, req.endpoint)
        if pair in self._pairs or pair in self._pending.values():
            raise DuplicateRequest(f"<{req.public_key.hex()[:16]}, {req.endpoint}> is already certified")
        verdict = verdict or self.verify(ledger, request_id)
        if not verdict.certified:
            raise InsufficientEvidence(f"request {request_id}: {_reason(verdict)}")
        subject_id = len(self.subjects) + len(self._pending)
        proof_tx = getattr(verdict, "proof_tx", None)
        summary = Summary(
            subject_id, ledger.get(request_id).payload, req.protocol, request_id,
            request_id if proof_tx is None else proof_tx, verdict.supporting_txs,
        )
        tx = Transaction.create(TxKind.SUMMARIZATION, summary.encode(), CONSENSUS_KEYS)
        tx = ledger.submit(tx, now, delay=0)
        self._pending[request_id] = pair
        cert = Certificate(req, request_id, req.protocol, summary.proof_tx, summary.supporting, tx.id)
        return cert, subject_id

    def consensus_step(self, ledger: Ledger, block: Block) -> list[tuple[int, object]]:
        """Evaluate requests touched by ``block``; summarize newly certified ones.

        Summaries are submitted in proof-transaction order so they commit in
        the next block with ids assigned in that order.
        """
        touched = []
        for tx in block.transactions:
            ref = tx.ref
            if ref is not None and ref not in touched:
                touched.append(ref)
        ready = []
        for rid in touched:
            if rid in self.certificates or rid in self._pending:
                continue
            try:
                _, req = load_request(ledger, rid)
            except RequestNotFound:
                continue
            if (req.public_key, req.endpoint) in self._pairs:
                continue
            verdict = self.verify(ledger, rid)
            if verdict.certified:
                proof = getattr(verdict, "proof_tx", None)
                ready.append((rid if proof is None else proof, rid, verdict))
        done = []
        for _, rid, verdict in sorted(ready):
            try:
                self.summarize(ledger, rid, block.commit_time, verdict)
            except DuplicateRequest:
                continue
            done.append((rid, verdict))
        return done


def _reason(verdict) -> str:
    if isinstance(verdict, P4Verdict):
        return f"failing step {verdict.failing_step!r}"
    return f"{verdict.count} valid acceptances"


def load_request(ledger: Ledger, request_id: int) -> tuple[Transaction, CertificationRequest]:
    try:
        tx = ledger.get(request_id)
    except UnknownTransaction:
        raise RequestNotFound(f"transaction {request_id} is not on chain") from None
    if tx.kind is not TxKind.REQUEST:
        raise RequestNotFound(f"transaction {request_id} is a {tx.kind.value}, not a request")
    try:
        req = CertificationRequest.decode(tx.payload)
    except MalformedPayload as exc:
        raise RequestNotFound(f"transaction {request_id} is malformed: {exc}") from None
    if tx.submitter != req.public_key or not tx.signature_ok():
        raise RequestNotFound(f"request {request_id} is not signed by its own key")
    return tx, req


def verify_p3(ledger: Ledger, registry: Registry, request_id: int) -> P3Verdict:
    """Count distinct committee members with a valid acceptance of [Q]_S."""
    tx, req = load_request(ledger, request_id)
    if req.protocol != "p3":
        return P3Verdict(False, 0)
    committee = registry.committee_for(ledger, request_id)
    q = challenge_p3(tx.payload, ledger.block_of(request_id).hash)
    members: dict[int, int] = {}
    for acc in ledger.referencing(request_id):
        if acc.kind is not TxKind.ACCEPTANCE or not acc.signature_ok():
            continue
        try:
            _, proof = decode_acceptance(acc.payload)
        except MalformedPayload:
            continue
        if not crypto.verify(req.public_key, q, proof):
            continue
        for mid in registry.member_ids(acc.submitter, committee):
            members.setdefault(mid, acc.id)
    ids = tuple(sorted(members))
    return P3Verdict(
        len(ids) >= registry.params.k_bar, len(ids), ids, tuple(members[i] for i in ids),
    )


def verify_p4(ledger: Ledger, registry: Registry, request_id: int) -> P4Verdict:
    """Verification procedure for a receive-at-endpoint proof.

    Steps: request on chain; proof signed by the request key; for each
    challenge in the proof, a disclosure by its committee member committed
    after the proof; at least k_bar distinct members must pass.
    """
    try:
        tx, req = load_request(ledger, request_id)
    except RequestNotFound:
        return P4Verdict(False, "request")
    if req.protocol != "p4":
        return P4Verdict(False, "request")
    committee = registry.committee_for(ledger, request_id)
    related = ledger.referencing(request_id)
    proofs = [t for t in related if t.kind is TxKind.PROOF]
    if not proofs:
        return P4Verdict(False, "proof missing")

    disclosures: dict[tuple[int, int, bytes], list[Transaction]] = {}
    for d in related:
        if d.kind is not TxKind.DISCLOSURE or not d.signature_ok():
            continue
        try:
            _, member, challenges = decode_disclosure(d.payload)
        except MalformedPayload:
            continue
        if member >= len(registry.subjects) or registry.subjects[member].public_key != d.submitter:
            continue
        for c in challenges:
            disclosures.setdefault((c.slot, member, c.value), []).append(d)

    first_failure = None
    for proof_tx in proofs:
        verdict = _check_proof(ledger, registry, req, tx.payload, committee, proof_tx, disclosures)
        if verdict.certified:
            return verdict
        first_failure = first_failure or verdict
    return first_failure


def _check_proof(ledger, registry, req, request_bytes, committee, proof_tx, disclosures) -> P4Verdict:
    try:
        _, body, sig = decode_proof(proof_tx.payload)
        entries, covered = decode_proof_body(body)
    except (MalformedPayload, UnicodeDecodeError):
        return P4Verdict(False, "proof format", proof_tx.id)
    if covered != request_bytes:
        return P4Verdict(False, "proof request", proof_tx.id)
    if not crypto.verify(req.public_key, body, sig):
        return P4Verdict(False, "proof signature", proof_tx.id)

    failure = None
    members: dict[int, int] = {}
    for entry in entries:
        if not 1 <= entry.slot <= len(committee.members) or committee.members[entry.slot - 1] != entry.member_id:
            failure = failure or "committee membership"
            continue
        found = disclosures.get((entry.slot, entry.member_id, entry.value), [])
        after = [d for d in found if ledger.happens_after(d.id, proof_tx.id)]
        if after:
            members.setdefault(entry.member_id, after[0].id)
        elif found:
            failure = failure or "disclosure order"
        else:
            failure = failure or "disclosure missing"
    ids = tuple(sorted(members))
    if len(ids) >= registry.params.k_bar:
        return P4Verdict(True, None, proof_tx.id, len(ids), ids, tuple(members[i] for i in ids))
    return P4Verdict(False, failure or "threshold", proof_tx.id, len(ids), ids)


def replay_certified(ledger: Ledger, params: ProtocolParams) -> set[int]:
    """Requests whose evidence verifies, recomputed from the raw chain alone."""
    registry = Registry.from_chain(ledger, params)
    certified = set()
    for tx in ledger.transactions(TxKind.REQUEST):
        try:
            if registry.verify(ledger, tx.id).certified:
                certified.add(tx.id)
        except (RequestNotFound, RegistryError):
            continue
    return certified
