"""Hash commitments, signatures and epoch time shared by both simulated chains."""

from __future__ import annotations

import functools
import hashlib
import random
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

SECRET_SIZE = 32
MAX_TIME = 2**62


@dataclass(frozen=True)
class Secret:
    """A 32-byte preimage. Revealing it on a chain makes it public."""

    data: bytes

    def __post_init__(self):
        if not isinstance(self.data, bytes) or len(self.data) != SECRET_SIZE:
            raise ValueError(f"secret must be exactly {SECRET_SIZE} bytes")

    def hex(self) -> str:
        return self.data.hex()

    def __repr__(self):
        return f"Secret({self.data[:4].hex()}..)"


@dataclass(frozen=True)
class SecretHash:
    digest: bytes

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("digest must be 32 bytes")

    def hex(self) -> str:
        return self.digest.hex()

    def __repr__(self):
        return f"SecretHash({self.digest[:4].hex()}..)"


def generate_secret(rng: random.Random) -> Secret:
    return Secret(rng.randbytes(SECRET_SIZE))


def commit(secret: Secret) -> SecretHash:
    return SecretHash(hashlib.sha256(secret.data).digest())


def verify_preimage(secret: Secret, h: SecretHash) -> bool:
    return hashlib.sha256(secret.data).digest() == h.digest


@dataclass(frozen=True)
class Signature:
    payload: bytes


@functools.lru_cache(maxsize=1 << 16)
def _ed25519_sign(secret: bytes, message: bytes) -> bytes:
    return Ed25519PrivateKey.from_private_bytes(secret).sign(message)


@functools.lru_cache(maxsize=1 << 16)
def _ed25519_verify(pubkey: bytes, message: bytes, payload: bytes) -> bool:
    try:
        Ed25519PublicKey.from_public_bytes(pubkey).verify(payload, message)
    except (InvalidSignature, ValueError):
        return False
    return True


class Ed25519Scheme:
    """Deterministic Ed25519 signatures (RFC 8032), so traces replay byte-identically.

    Both operations are pure, so results are memoized; the enumerator re-checks
    the same few signatures many thousands of times.
    """

    name = "ed25519"

    def public_key(self, secret: bytes) -> bytes:
        return Ed25519PrivateKey.from_private_bytes(secret).public_key().public_bytes_raw()

    def sign(self, secret: bytes, message: bytes) -> Signature:
        return Signature(_ed25519_sign(bytes(secret), bytes(message)))

    def verify(self, pubkey: bytes, message: bytes, sig: Signature) -> bool:
        if not isinstance(sig, Signature) or not isinstance(sig.payload, (bytes, bytearray)):
            return False
        return _ed25519_verify(bytes(pubkey), bytes(message), bytes(sig.payload))


class TransparentScheme:
    """Forgeable test scheme: payload = sha256(pubkey || sha256(message)).

    Only suitable because no adversary in the simulator forges signatures.
    """

    name = "transparent"

    def public_key(self, secret: bytes) -> bytes:
        return hashlib.sha256(b"pk" + secret).digest()

    def _payload(self, pubkey: bytes, message: bytes) -> bytes:
        return hashlib.sha256(pubkey + hashlib.sha256(message).digest()).digest()

    def sign(self, secret: bytes, message: bytes) -> Signature:
        return Signature(self._payload(self.public_key(secret), message))

    def verify(self, pubkey: bytes, message: bytes, sig: Signature) -> bool:
        return sig.payload == self._payload(pubkey, message)


SCHEMES = {s.name: s for s in (Ed25519Scheme(), TransparentScheme())}
DEFAULT_SCHEME = SCHEMES["ed25519"]


@dataclass(frozen=True)
class KeyPair:
    secret: bytes = field(repr=False)
    public: bytes
    scheme: object = field(default=DEFAULT_SCHEME, repr=False, compare=False)

    @classmethod
    def generate(cls, rng: random.Random, scheme=DEFAULT_SCHEME) -> "KeyPair":
        secret = rng.randbytes(32)
        return cls(secret, scheme.public_key(secret), scheme)

    def sign(self, message: bytes) -> Signature:
        return self.scheme.sign(self.secret, message)


def sign(key: KeyPair, message: bytes) -> Signature:
    return key.sign(message)


def verify(pubkey: bytes, message: bytes, signature: Signature, scheme=DEFAULT_SCHEME) -> bool:
    return scheme.verify(pubkey, message, signature)


@dataclass(frozen=True)
class PartyId:
    """A participant: a name plus the key that identifies it within one simulation."""

    name: str
    pubkey: bytes

    def __str__(self):
        return self.name


def check_timestamp(t: int) -> int:
    if not isinstance(t, int) or isinstance(t, bool) or t < 0 or t > MAX_TIME:
        raise ValueError(f"timestamp out of range: {t!r}")
    return t


def encode(*parts: bytes) -> bytes:
    """Length-prefixed concatenation; unambiguous for any byte strings."""
    out = bytearray()
    for p in parts:
        out += len(p).to_bytes(4, "big")
        out += p
    return bytes(out)


def encode_int(n: int) -> bytes:
    return n.to_bytes(8, "big")
