"""Byte encodings of requests, challenges and on-chain evidence.

Every encoding is a length-prefixed part list (see ``crypto.pack``); payloads
that refer to a request start with its 8-byte transaction id.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import crypto
from .channels import EndpointAddress
from .crypto import Digest, u64, read_u64

PROTOCOLS = ("p3", "p4")
GENESIS = "genesis"
NO_TX = 2**64 - 1


class MalformedPayload(ValueError):
    pass


def _parts(data: bytes, n: int | None = None, at_least: int | None = None) -> list[bytes]:
    try:
        parts = crypto.unpack(data)
    except crypto.CryptoError as exc:
        raise MalformedPayload(str(exc)) from None
    if n is not None and len(parts) != n:
        raise MalformedPayload(f"expected {n} parts, got {len(parts)}")
    if at_least is not None and len(parts) < at_least:
        raise MalformedPayload(f"expected at least {at_least} parts, got {len(parts)}")
    return parts


def _int(b: bytes) -> int:
    try:
        return read_u64(b)
    except crypto.CryptoError as exc:
        raise MalformedPayload(str(exc)) from None


@dataclass(frozen=True)
class CertificationRequest:
    """R = <p, E>, tagged with the protocol the committee should run."""

    public_key: bytes
    endpoint: EndpointAddress
    protocol: str = "p3"

    def encode(self) -> bytes:
        return crypto.pack([b"R", self.protocol.encode(), self.public_key, self.endpoint.encode()])

    @classmethod
    def decode(cls, data: bytes) -> "CertificationRequest":
        tag, protocol, key, endpoint = _parts(data, 4)
        if tag != b"R":
            raise MalformedPayload("not a certification request")
        try:
            return cls(key, EndpointAddress.parse(endpoint.decode()), protocol.decode())
        except (ValueError, UnicodeDecodeError) as exc:
            raise MalformedPayload(str(exc)) from None


def challenge_p3(request: bytes, block_hash: Digest) -> Digest:
    """Q = hash(R | B), with B the hash of the block committing R."""
    return crypto.digest([request, block_hash])


# -- P3 -----------------------------------------------------------------------

def p3_message(request_id: int, proof: bytes) -> bytes:
    return crypto.pack([u64(request_id), proof])


def acceptance_payload(request_id: int, proof: bytes) -> bytes:
    return crypto.pack([u64(request_id), proof])


def decode_p3(data: bytes) -> tuple[int, bytes]:
    rid, proof = _parts(data, 2)
    return _int(rid), proof


decode_acceptance = decode_p3


# -- P4 -----------------------------------------------------------------------

@dataclass(frozen=True, order=True)
class PartialChallenge:
    slot: int
    member_id: int
    value: bytes
    request_id: int = -1

    def encode(self) -> bytes:
        return crypto.pack([u64(self.slot), u64(self.member_id), self.value])

    @classmethod
    def decode(cls, data: bytes, request_id: int = -1) -> "PartialChallenge":
        slot, member, value = _parts(data, 3)
        return cls(_int(slot), _int(member), value, request_id)


def challenge_message(c: PartialChallenge) -> bytes:
    return crypto.pack([u64(c.request_id), c.encode()])


def decode_challenge_message(data: bytes) -> PartialChallenge:
    rid, body = _parts(data, 2)
    return PartialChallenge.decode(body, _int(rid))


def proof_body(request: bytes, entries: list[PartialChallenge]) -> bytes:
    """The signed message of a P4 proof: challenges ordered by slot, then R."""
    ordered = sorted(entries, key=lambda c: c.slot)
    return crypto.pack([*(c.encode() for c in ordered), request])


def decode_proof_body(body: bytes) -> tuple[list[PartialChallenge], bytes]:
    parts = _parts(body, at_least=1)
    return [PartialChallenge.decode(p) for p in parts[:-1]], parts[-1]


def proof_payload(request_id: int, body: bytes, signature: bytes) -> bytes:
    return crypto.pack([u64(request_id), body, signature])


def decode_proof(data: bytes) -> tuple[int, bytes, bytes]:
    rid, body, sig = _parts(data, 3)
    return _int(rid), body, sig


def disclosure_payload(request_id: int, member_id: int, challenges: list[PartialChallenge]) -> bytes:
    return crypto.pack([u64(request_id), u64(member_id), *(c.encode() for c in challenges)])


def decode_disclosure(data: bytes) -> tuple[int, int, list[PartialChallenge]]:
    parts = _parts(data, at_least=2)
    rid = _int(parts[0])
    return rid, _int(parts[1]), [PartialChallenge.decode(p, rid) for p in parts[2:]]


# -- summarization --------------------------------------------------------------

@dataclass(frozen=True)
class Summary:
    subject_id: int
    request: bytes
    protocol: str
    request_id: int = NO_TX
    proof_tx: int = NO_TX
    supporting: tuple[int, ...] = ()

    def encode(self) -> bytes:
        return crypto.pack([
            u64(self.subject_id), self.request, self.protocol.encode(),
            u64(self.request_id), u64(self.proof_tx), *(u64(t) for t in self.supporting),
        ])

    @classmethod
    def decode(cls, data: bytes) -> "Summary":
        parts = _parts(data, at_least=5)
        return cls(
            _int(parts[0]), parts[1], parts[2].decode(), _int(parts[3]), _int(parts[4]),
            tuple(_int(p) for p in parts[5:]),
        )
