"""Idealised append-only chain with a fixed block schedule.

Blocks are produced at ``height * block_interval`` with unbounded capacity.
A transaction submitted at ``t`` reaches block producers at ``t + delay`` and
is committed in the first block not yet produced whose commit time is at or
after that arrival. There are no forks.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Iterable, Iterator

from . import crypto
from .crypto import Digest, KeyPair, Signature

Time = Fraction
ZERO_HASH = bytes(crypto.DIGEST_SIZE)


class TxKind(str, enum.Enum):
    REQUEST = "CertificationRequest"
    ACCEPTANCE = "Acceptance"
    PROOF = "ProofPublication"
    DISCLOSURE = "ChallengeDisclosure"
    SUMMARIZATION = "Summarization"


# kinds whose payload starts with the id of the request they refer to
REFERENCING_KINDS = frozenset({TxKind.ACCEPTANCE, TxKind.PROOF, TxKind.DISCLOSURE})


class LedgerError(Exception):
    pass


class InvalidTransaction(LedgerError):
    pass


class UnknownTransaction(LedgerError, KeyError):
    pass


def as_time(value) -> Time:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(value)
    return Fraction(str(value)) if isinstance(value, str) else Fraction(value)


def signing_bytes(kind: TxKind, payload: bytes) -> bytes:
    return crypto.pack([kind.value.encode(), payload])


@dataclass(frozen=True)
class Transaction:
    kind: TxKind
    payload: bytes
    submitter: bytes
    signature: Signature
    id: int = -1
    submit_time: Time = Fraction(0)

    @classmethod
    def create(cls, kind: TxKind, payload: bytes, keys: KeyPair) -> "Transaction":
        return cls(kind, payload, keys.public, keys.sign(signing_bytes(kind, payload)))

    def signature_ok(self) -> bool:
        return crypto.verify(self.submitter, signing_bytes(self.kind, self.payload), self.signature)

    @property
    def ref(self) -> int | None:
        if self.kind not in REFERENCING_KINDS:
            return None
        try:
            return crypto.read_u64(crypto.unpack(self.payload)[0])
        except (crypto.CryptoError, IndexError):
            return None

    def encode(self) -> bytes:
        return crypto.pack([
            crypto.u64(self.id),
            self.kind.value.encode(),
            self.payload,
            self.submitter,
            self.signature,
        ])


@dataclass(frozen=True)
class Block:
    height: int
    hash: Digest
    parent_hash: Digest
    commit_time: Time
    transactions: tuple[Transaction, ...]

    @staticmethod
    def compute_hash(parent_hash: Digest, height: int, txs: Iterable[Transaction]) -> Digest:
        return crypto.digest([parent_hash, crypto.u64(height), *(tx.encode() for tx in txs)])


@dataclass
class _Pending:
    arrival: Time
    tx: Transaction


class Ledger:
    def __init__(
        self,
        block_interval,
        propagation_delay=0,
        genesis: Block | Iterable[Transaction] = (),
    ):
        self.block_interval = as_time(block_interval)
        self.propagation_delay = as_time(propagation_delay)
        if self.block_interval <= 0:
            raise LedgerError("block_interval must be positive")
        if self.propagation_delay < 0:
            raise LedgerError("propagation_delay must be non-negative")
        self.pending = []
        self.time = Fraction(0)
        self._position: dict[int, tuple[int, int]] = {}
        self._txs: dict[int, Transaction] = {}
        self._refs: dict[int, list[int]] = {}
        self.blocks = []
        if isinstance(genesis, Block):
            if genesis.height != 0 or genesis.commit_time != 0:
                raise LedgerError("genesis block must have height 0 at time 0")
            self._append(genesis)
            self._next_id = max((tx.id for tx in genesis.transactions), default=-1) + 1
        else:
            txs = []
            for i, tx in enumerate(genesis):
                if not tx.signature_ok():
                    raise InvalidTransaction("genesis transaction has an invalid signature")
                txs.append(replace(tx, id=i, submit_time=Fraction(0)))
            self._next_id = len(txs)
            self._append(self._make_block(0, ZERO_HASH, Fraction(0), txs))

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def _make_block(height, parent_hash, commit_time, txs) -> Block:
        txs = tuple(txs)
        return Block(height, Block.compute_hash(parent_hash, height, txs), parent_hash, commit_time, txs)

    def _append(self, block: Block) -> None:
        self.blocks.append(block)
        for index, tx in enumerate(block.transactions):
            self._position[tx.id] = (block.height, index)
            self._txs[tx.id] = tx
            ref = tx.ref
            if ref is not None:
                self._refs.setdefault(ref, []).append(tx.id)

    # -- queries --------------------------------------------------------------

    @property
    def head(self) -> Block:
        return self.blocks[-1]

    @property
    def next_commit_time(self) -> Time:
        return (self.head.height + 1) * self.block_interval

    def get(self, tx_id: int) -> Transaction:
        try:
            return self._txs[tx_id]
        except KeyError:
            raise UnknownTransaction(tx_id) from None

    def is_committed(self, tx_id: int) -> bool:
        return tx_id in self._position

    def position(self, tx_id: int) -> tuple[int, int]:
        try:
            return self._position[tx_id]
        except KeyError:
            raise UnknownTransaction(tx_id) from None

    def block_of(self, tx_id: int) -> Block:
        return self.blocks[self.position(tx_id)[0]]

    def referencing(self, request_id: int) -> list[Transaction]:
        """Committed transactions whose payload refers to ``request_id``, in chain order."""
        return [self._txs[i] for i in self._refs.get(request_id, ())]

    def transactions(self, kind: TxKind | None = None) -> Iterator[Transaction]:
        for block in self.blocks:
            for tx in block.transactions:
                if kind is None or tx.kind is kind:
                    yield tx

    def happens_after(self, a: int, b: int) -> bool:
        return self.position(a) > self.position(b)

    # -- mutation -------------------------------------------------------------

    def submit(self, tx: Transaction, now, *, delay=None) -> Transaction:
        """Queue ``tx``; returns it with its ledger id and submit time filled in.

        ``delay`` overrides the gossip delay (consensus-rule transactions use 0).
        """
        now = as_time(now)
        if now < self.time:
            raise LedgerError(f"submission at {now} precedes ledger time {self.time}")
        if not tx.signature_ok():
            raise InvalidTransaction(f"signature of {tx.kind.value} transaction does not verify")
        tx = replace(tx, id=self._next_id, submit_time=now)
        self._next_id += 1
        arrival = now + (self.propagation_delay if delay is None else as_time(delay))
        self.pending.append(_Pending(arrival, tx))
        return tx

    def commit_time_for(self, arrival: Time) -> Time:
        """Commit time of the block that would take a transaction arriving at ``arrival``."""
        b = self.block_interval
        height = max(self.head.height + 1, -(-arrival // b))
        return height * b

    def advance_to(self, t) -> list[Block]:
        t = as_time(t)
        if t < self.time:
            raise LedgerError(f"cannot move ledger time back from {self.time} to {t}")
        new = []
        while self.next_commit_time <= t:
            commit = self.next_commit_time
            ready = sorted(
                (p for p in self.pending if p.arrival <= commit),
                key=lambda p: (p.arrival, p.tx.id),
            )
            if ready:
                taken = {p.tx.id for p in ready}
                self.pending = [p for p in self.pending if p.tx.id not in taken]
            block = self._make_block(self.head.height + 1, self.head.hash, commit, (p.tx for p in ready))
            self._append(block)
            new.append(block)
        self.time = t
        return new

    def dump(self) -> str:
        lines = ["height\tindex\tid\tkind\tsubmitter\tpayload"]
        for block in self.blocks:
            for index, tx in enumerate(block.transactions):
                lines.append(
                    f"{block.height}\t{index}\t{tx.id}\t{tx.kind.value}\t"
                    f"{tx.submitter.hex()}\t{tx.payload.hex()}"
                )
        return "\n".join(lines) + "\n"
