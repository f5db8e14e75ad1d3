import hashlib
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from atomic_loans.primitives import (
    MAX_TIME,
    SCHEMES,
    KeyPair,
    Secret,
    SecretHash,
    check_timestamp,
    commit,
    encode,
    generate_secret,
    sign,
    verify,
    verify_preimage,
)


def test_generate_secret_is_reproducible():
    a = generate_secret(random.Random(7))
    b = generate_secret(random.Random(7))
    assert a == b
    assert len(a.data) == 32


def test_consecutive_draws_differ():
    rng = random.Random(7)
    assert generate_secret(rng) != generate_secret(rng)


def test_thousand_draws_give_distinct_commitments():
    rng = random.Random(99)
    digests = {commit(generate_secret(rng)).digest for _ in range(1000)}
    assert len(digests) == 1000


def test_commit_zero_secret_matches_reference_sha256():
    zero = Secret(bytes(32))
    h = commit(zero)
    assert h.digest == hashlib.sha256(bytes(32)).digest()
    assert h.digest[:4] == bytes.fromhex("66687aad")


def test_commit_deterministic_and_bit_sensitive():
    s = Secret(bytes(range(32)))
    assert commit(s) == commit(s)
    flipped = bytearray(s.data)
    flipped[5] ^= 0x01
    t = Secret(bytes(flipped))
    assert commit(t) != commit(s)
    assert commit(t).digest == hashlib.sha256(bytes(flipped)).digest()


@given(st.binary(min_size=32, max_size=32))
def test_verify_preimage_holds_for_every_secret(data):
    s = Secret(data)
    assert verify_preimage(s, commit(s))


@pytest.mark.parametrize("n", [0, 31, 33])
def test_secret_must_be_32_bytes(n):
    with pytest.raises(ValueError):
        Secret(bytes(n))


def test_secret_hash_must_be_32_bytes():
    with pytest.raises(ValueError):
        SecretHash(b"short")


@pytest.mark.parametrize("scheme", sorted(SCHEMES))
def test_sign_verify_round_trip(scheme):
    rng = random.Random(3)
    alice = KeyPair.generate(rng, SCHEMES[scheme])
    bob = KeyPair.generate(rng, SCHEMES[scheme])
    m = b"settle collateral"
    sig = sign(alice, m)
    assert verify(alice.public, m, sig, SCHEMES[scheme])
    assert not verify(bob.public, m, sig, SCHEMES[scheme])


@pytest.mark.parametrize("scheme", sorted(SCHEMES))
def test_every_single_byte_flip_breaks_signature(scheme):
    key = KeyPair.generate(random.Random(5), SCHEMES[scheme])
    m = b"pay 15000 to charlie"
    sig = key.sign(m)
    for i in range(len(m)):
        altered = bytearray(m)
        altered[i] ^= 0xFF
        assert not verify(key.public, bytes(altered), sig, SCHEMES[scheme])


def test_ed25519_signatures_are_deterministic():
    key = KeyPair.generate(random.Random(11))
    assert key.sign(b"m") == key.sign(b"m")


def test_verify_never_raises_on_garbage():
    key = KeyPair.generate(random.Random(11))
    from atomic_loans.primitives import Signature
    assert not verify(key.public, b"m", Signature(b"\x00" * 3))
    assert not verify(b"\x01" * 5, b"m", key.sign(b"m"))


def test_timestamps_capped():
    assert check_timestamp(MAX_TIME) == MAX_TIME
    with pytest.raises(ValueError):
        check_timestamp(MAX_TIME + 1)
    with pytest.raises(ValueError):
        check_timestamp(-1)


def test_encoding_is_unambiguous():
    assert encode(b"ab", b"c") != encode(b"a", b"bc")
