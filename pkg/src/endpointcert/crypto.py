"""Keys, signatures and hashing used across the protocol engine.

Ed25519 (deterministic signatures) and SHA-256 are fixed project-wide so that
block hashes, challenges and committees are reproducible on any platform.
"""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

Digest = bytes
Signature = bytes

DIGEST_SIZE = 32
SIGNATURE_SIZE = 64
KEY_SIZE = 32

_LEN = struct.Struct(">Q")


class CryptoError(ValueError):
    pass


@dataclass(frozen=True)
class KeyPair:
    public: bytes
    secret: bytes

    def sign(self, message: bytes) -> Signature:
        return sign(self.secret, message)


@lru_cache(maxsize=8192)
def _private_key(secret: bytes) -> Ed25519PrivateKey:
    if len(secret) != KEY_SIZE:
        raise CryptoError(f"secret key must be {KEY_SIZE} bytes, got {len(secret)}")
    return Ed25519PrivateKey.from_private_bytes(secret)


def _raw_public(key: Ed25519PrivateKey) -> bytes:
    return key.public_key().public_bytes(
        serialization.Encoding.Raw, serialization.PublicFormat.Raw
    )


def generate_keypair(seed: bytes) -> KeyPair:
    """Derive a key pair deterministically from ``seed``."""
    if not seed:
        raise CryptoError("seed must be non-empty")
    secret = hashlib.sha256(b"endpointcert/keygen\x00" + seed).digest()
    return KeyPair(public=_raw_public(_private_key(secret)), secret=secret)


def public_from_secret(secret: bytes) -> bytes:
    return _raw_public(_private_key(secret))


def sign(secret: bytes, message: bytes) -> Signature:
    return _private_key(bytes(secret)).sign(message)


@lru_cache(maxsize=65536)
def _verify(public: bytes, message: bytes, sig: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(public).verify(sig, message)
    except (InvalidSignature, ValueError):
        return False
    return True


def verify(public: bytes, message: bytes, sig: Signature) -> bool:
    # pure, so memoising is safe; verifiers re-check the same evidence often
    if len(public) != KEY_SIZE or len(sig) != SIGNATURE_SIZE:
        return False
    return _verify(bytes(public), bytes(message), bytes(sig))


def pack(parts: Iterable[bytes]) -> bytes:
    """Length-prefixed concatenation; unambiguous for any split of the input."""
    out = bytearray()
    for part in parts:
        out += _LEN.pack(len(part))
        out += part
    return bytes(out)


def unpack(data: bytes) -> list[bytes]:
    parts = []
    pos = 0
    while pos < len(data):
        if pos + _LEN.size > len(data):
            raise CryptoError("truncated length prefix")
        (n,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        if pos + n > len(data):
            raise CryptoError("truncated part")
        parts.append(data[pos:pos + n])
        pos += n
    return parts


def u64(value: int) -> bytes:
    return _LEN.pack(value)


def read_u64(data: bytes) -> int:
    if len(data) != _LEN.size:
        raise CryptoError("expected an 8-byte integer")
    return _LEN.unpack(data)[0]


def digest(parts: Sequence[bytes]) -> Digest:
    if not parts:
        raise CryptoError("digest needs at least one part")
    return hashlib.sha256(pack(parts)).digest()


def index_from_digest(d: Digest, n: int) -> int:
    """Interpret ``d`` as a big-endian unsigned integer and reduce it mod ``n``."""
    if n < 1:
        raise CryptoError("n must be >= 1")
    return int.from_bytes(d, "big") % n
