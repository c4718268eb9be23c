"""WOTS+ one-time signatures and size-only mock lattice adapters."""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .hashing import (
    N_BYTES,
    TAG_NODE,
    HashSuite,
    hash_digest,
    chain_address,
    prf_expand,
    public_seed,
    wots_chain,
)
from .scheme import BaseScheme, CostCounters, SchemeDescriptor


def _num_digits(x: int, base: int) -> int:
    count = 0
    while x:
        x //= base
        count += 1
    return max(count, 1)


@dataclass(frozen=True)
class WotsParams:
    w: int = 4
    n: int = 256
    m: int = 256

    def __post_init__(self):
        if self.w < 2 or self.w & (self.w - 1):
            raise ValueError("w must be a power of two >= 2")

    @property
    def log_w(self) -> int:
        return self.w.bit_length() - 1

    @property
    def len1(self) -> int:
        return -(-self.m // self.log_w)

    @property
    def len2(self) -> int:
        # floor(log_w(len1 * (w - 1))) + 1, computed as a digit count.
        return _num_digits(self.len1 * (self.w - 1), self.w)

    @property
    def length(self) -> int:
        return self.len1 + self.len2

    @property
    def size(self) -> int:
        return self.length * self.n // 8


DEFAULT_PARAMS = WotsParams()


def wots_base_w_encode(digest: bytes, params: WotsParams = DEFAULT_PARAMS) -> list[int]:
    """Message symbols (top ``m`` bits of ``digest``) followed by big-endian checksum symbols."""
    total_bits = 8 * len(digest)
    if total_bits < params.m:
        raise ValueError(f"digest has {total_bits} bits, need {params.m}")
    value = int.from_bytes(digest, "big") >> (total_bits - params.m)
    value <<= params.len1 * params.log_w - params.m
    mask = params.w - 1
    msg = [(value >> (params.log_w * (params.len1 - 1 - i))) & mask for i in range(params.len1)]
    checksum = sum(params.w - 1 - s for s in msg)
    csum = [(checksum >> (params.log_w * (params.len2 - 1 - i))) & mask for i in range(params.len2)]
    return msg + csum


def _split(blob: bytes, params: WotsParams) -> list[bytes]:
    k = params.n // 8
    return [blob[i * k:(i + 1) * k] for i in range(params.length)]


def wots_keygen(seed: bytes, params: WotsParams = DEFAULT_PARAMS, pub_seed: bytes | None = None,
                address: bytes = b"", suite: HashSuite = HashSuite.SHA2_256) -> tuple[bytes, bytes]:
    if pub_seed is None:
        pub_seed = public_seed(suite)
    sk, pk = bytearray(), bytearray()
    for j in range(params.length):
        start = prf_expand(seed, b"wots-sk" + address + j.to_bytes(2, "big"), params.n // 8, suite)
        sk += start
        pk += wots_chain(start, 0, params.w - 1, pub_seed, chain_address(address, j), params.w, suite)
    return bytes(sk), bytes(pk)


def wots_sign(sk: bytes, digest: bytes, params: WotsParams = DEFAULT_PARAMS,
              pub_seed: bytes | None = None, address: bytes = b"",
              suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    if pub_seed is None:
        pub_seed = public_seed(suite)
    symbols = wots_base_w_encode(digest, params)
    out = bytearray()
    for j, (x, s) in enumerate(zip(_split(sk, params), symbols)):
        out += wots_chain(x, 0, s, pub_seed, chain_address(address, j), params.w, suite)
    return bytes(out)


def wots_pk_from_sig(sig: bytes, digest: bytes, params: WotsParams = DEFAULT_PARAMS,
                     pub_seed: bytes | None = None, address: bytes = b"",
                     suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    if pub_seed is None:
        pub_seed = public_seed(suite)
    symbols = wots_base_w_encode(digest, params)
    out = bytearray()
    for j, (x, s) in enumerate(zip(_split(sig, params), symbols)):
        out += wots_chain(x, s, params.w - 1 - s, pub_seed, chain_address(address, j), params.w, suite)
    return bytes(out)


def wots_verify(pk: bytes, digest: bytes, sig: bytes, params: WotsParams = DEFAULT_PARAMS,
                pub_seed: bytes | None = None, address: bytes = b"",
                suite: HashSuite = HashSuite.SHA2_256) -> bool:
    if len(sig) != params.size or len(pk) != params.size:
        return False
    candidate = wots_pk_from_sig(sig, digest, params, pub_seed, address, suite)
    return hmac.compare_digest(candidate, pk)


class WotsScheme(BaseScheme):
    """WOTS+ with uncompressed public keys (``len`` chain ends)."""

    def __init__(self, suite: HashSuite = HashSuite.SHA2_256, params: WotsParams = DEFAULT_PARAMS,
                 counters: CostCounters | None = None):
        super().__init__(counters)
        self.suite = suite
        self.params = params
        self.pub_seed = public_seed(suite)
        size = params.size
        tag = "sha256" if suite is HashSuite.SHA2_256 else "shake256"
        name = f"wots-{tag}" if params == DEFAULT_PARAMS else f"wots-{tag}-w{params.w}-m{params.m}"
        self.descriptor = SchemeDescriptor(name, size, size, size)

    def _keygen(self, seed, address):
        return wots_keygen(seed, self.params, self.pub_seed, address, self.suite)

    def _sign(self, sk, pk, digest, address):
        return wots_sign(sk, digest, self.params, self.pub_seed, address, self.suite)

    def _verify(self, pk, digest, signature, address):
        return wots_verify(pk, digest, signature, self.params, self.pub_seed, address, self.suite)


def compress_pk(pk: bytes, suite: HashSuite = HashSuite.SHA2_256) -> bytes:
    """Optional single-digest form of a WOTS+ public key; not used in size accounting."""
    return hash_digest(suite, TAG_NODE, pk)


def _expand(key: bytes, label: bytes, size: int) -> bytes:
    return hashlib.shake_256(label + key).digest(size)


class MockLatticeScheme(BaseScheme):
    """INSECURE placeholder with a lattice scheme's signature and key sizes.

    Anyone holding the public key can produce valid signatures. It exists only
    so size accounting can run on the advertised parameter sizes.
    """

    insecure = True

    def __init__(self, name: str, sig_size: int, pk_size: int, sk_size: int = N_BYTES,
                 counters: CostCounters | None = None):
        super().__init__(counters)
        self.suite = HashSuite.SHA2_256
        self.descriptor = SchemeDescriptor(name, sig_size, pk_size, sk_size)

    def _keygen(self, seed, address):
        sk = _expand(seed + address, b"mock-sk", self.descriptor.sk_size)
        pk = _expand(sk, b"mock-pk", self.descriptor.pk_size)
        return sk, pk

    def _sign(self, sk, pk, digest, address):
        return _expand(pk + address + digest, b"mock-sig", self.descriptor.sig_size)

    def _verify(self, pk, digest, signature, address):
        expected = _expand(pk + address + digest, b"mock-sig", self.descriptor.sig_size)
        return hmac.compare_digest(expected, signature)


MOCK_SIZES = {
    "mock-dilithium": (2701, 1472),
    "mock-bliss2": (625, 875),
}

BASE_SCHEME_NAMES = ("wots-sha256", "wots-shake256", *MOCK_SIZES)


def make_base_scheme(name: str, counters: CostCounters | None = None, *,
                     allow_mock: bool = False, params: WotsParams = DEFAULT_PARAMS) -> BaseScheme:
    if name == "wots-sha256":
        return WotsScheme(HashSuite.SHA2_256, params, counters)
    if name == "wots-shake256":
        return WotsScheme(HashSuite.SHAKE_256, params, counters)
    if name in MOCK_SIZES:
        if not allow_mock:
            raise ValueError(f"{name} is an insecure size model; pass allow_mock=True")
        sig, pk = MOCK_SIZES[name]
        return MockLatticeScheme(name, sig, pk, counters=counters)
    raise ValueError(f"unknown base scheme {name!r}")
