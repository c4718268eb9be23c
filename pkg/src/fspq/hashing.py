"""Domain-separated hashing, PRF seed derivation and the WOTS+ chain function."""

from __future__ import annotations

import enum
import hashlib

N_BYTES = 32
SEED_BYTES = 16

TAG_MESSAGE = 0x00
TAG_NODE = 0x01
TAG_PRF = 0x02
TAG_CERT = 0x03
TAG_CHAIN = 0x04


class HashSuite(enum.Enum):
    SHA2_256 = "sha256"
    SHAKE_256 = "shake256"

    @property
    def n(self) -> int:
        return 8 * N_BYTES

    @property
    def code(self) -> int:
        return 0 if self is HashSuite.SHA2_256 else 1

    @classmethod
    def from_code(cls, code: int) -> "HashSuite":
        for suite in cls:
            if suite.code == code:
                return suite
        raise ValueError(f"unknown hash suite code {code}")


def hash_digest(suite: HashSuite, tag: int, data: bytes) -> bytes:
    """Hash ``tag || data`` to a 32-octet digest under ``suite``."""
    if suite is HashSuite.SHA2_256:
        h = hashlib.sha256()
        h.update(bytes((tag,)))
        h.update(data)
        return h.digest()
    h = hashlib.shake_256()
    h.update(bytes((tag,)))
    h.update(data)
    return h.digest(N_BYTES)


def prf_expand(seed: bytes, label: bytes, size: int = N_BYTES,
               suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    if size <= N_BYTES:
        return hash_digest(suite, TAG_PRF, seed + label)[:size]
    out = bytearray()
    block = 0
    while len(out) < size:
        out += hash_digest(suite, TAG_PRF, seed + label + block.to_bytes(4, "little"))
        block += 1
    return bytes(out[:size])


def prf_derive(seed: bytes, label: bytes, suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    """Derive a child seed of SEED_BYTES octets; distinct labels give independent children."""
    return hash_digest(suite, TAG_PRF, seed + label)[:SEED_BYTES]


def public_seed(suite: HashSuite) -> bytes:
    # Fixed per suite: the 32-octet root public key leaves no room to carry one.
    return hash_digest(suite, TAG_PRF, b"fspq/public-seed/" + suite.value.encode())


def keypair_address(context: bytes, index: int, suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    return hash_digest(suite, TAG_PRF, b"addr" + context + index.to_bytes(8, "little"))[:16]


def chain_address(kp_address: bytes, chain: int) -> bytes:
    return kp_address + chain.to_bytes(2, "big")


def _xor(a: bytes, b: bytes) -> bytes:
    return (int.from_bytes(a, "big") ^ int.from_bytes(b, "big")).to_bytes(len(a), "big")


def wots_chain(x: bytes, start: int, steps: int, pub_seed: bytes, address: bytes,
               w: int = 4, suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    """Apply ``steps`` mask-then-hash iterations to ``x`` from chain position ``start``."""
    if start < 0 or steps < 0 or start + steps > w - 1:
        raise ValueError(f"chain positions out of range: start={start} steps={steps} w={w}")
    for pos in range(start, start + steps):
        ctx = pub_seed + address + pos.to_bytes(1, "big")
        mask = hash_digest(suite, TAG_PRF, ctx)
        x = hash_digest(suite, TAG_CHAIN, address + pos.to_bytes(1, "big") + _xor(x, mask))
    return x
