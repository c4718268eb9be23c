"""Pluggable one-time base signature API and shared bookkeeping types."""

from __future__ import annotations

from dataclasses import dataclass

from .hashing import TAG_MESSAGE, HashSuite, hash_digest


class SchemeError(Exception):
    pass


class OneTimeKeyReuse(SchemeError):
    pass


class Exhausted(SchemeError):
    pass


class PeriodPassed(SchemeError):
    pass


@dataclass
class CostCounters:
    """Exact tallies of base-scheme operations and composition-level hashes.

    ``tree_keygen`` counts key generations run only to learn a public digest
    (e.g. the upper tree's unused leaves at setup); ``keygen`` counts key pairs
    materialised for signing.
    """

    keygen: int = 0
    sign: int = 0
    verify: int = 0
    hashes: int = 0
    tree_keygen: int = 0

    def snapshot(self) -> "CostCounters":
        return CostCounters(self.keygen, self.sign, self.verify, self.hashes, self.tree_keygen)

    def __sub__(self, other: "CostCounters") -> "CostCounters":
        return CostCounters(
            self.keygen - other.keygen,
            self.sign - other.sign,
            self.verify - other.verify,
            self.hashes - other.hashes,
            self.tree_keygen - other.tree_keygen,
        )

    def reset(self) -> None:
        self.keygen = self.sign = self.verify = self.hashes = self.tree_keygen = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "keygen": self.keygen,
            "sign": self.sign,
            "verify": self.verify,
            "hashes": self.hashes,
            "tree_keygen": self.tree_keygen,
        }


@dataclass(frozen=True)
class SchemeDescriptor:
    name: str
    sig_size: int
    pk_size: int
    sk_size: int
    capacity: int = 1

    def __post_init__(self):
        if min(self.sig_size, self.pk_size, self.sk_size) < 1 or self.capacity < 1:
            raise ValueError(f"invalid descriptor {self!r}")


@dataclass
class BaseKeyPair:
    sk: bytearray
    pk: bytes
    address: bytes = b""
    used: bool = False

    def wipe(self) -> None:
        for i in range(len(self.sk)):
            self.sk[i] = 0
        self.used = True


class BaseScheme:
    """Deterministic one-time signature scheme: keygen / sign / verify.

    Messages of any length are digested (message tag) before signing.
    Subclasses implement ``_keygen``, ``_sign`` and ``_verify`` on digests.
    """

    descriptor: SchemeDescriptor
    suite: HashSuite
    insecure = False

    def __init__(self, counters: CostCounters | None = None):
        self.counters = counters if counters is not None else CostCounters()

    @property
    def name(self) -> str:
        return self.descriptor.name

    def digest(self, message: bytes) -> bytes:
        self.counters.hashes += 1
        return hash_digest(self.suite, TAG_MESSAGE, message)

    def keygen(self, seed: bytes, address: bytes = b"", *, structural: bool = False) -> BaseKeyPair:
        if structural:
            self.counters.tree_keygen += 1
        else:
            self.counters.keygen += 1
        sk, pk = self._keygen(seed, address)
        return BaseKeyPair(bytearray(sk), pk, address)

    def sign(self, keypair: BaseKeyPair, message: bytes) -> bytes:
        if keypair.used:
            raise OneTimeKeyReuse("one-time key already used")
        self.counters.sign += 1
        sig = self._sign(bytes(keypair.sk), keypair.pk, self.digest(message), keypair.address)
        keypair.used = True
        return sig

    def verify(self, pk: bytes, message: bytes, signature: bytes, address: bytes = b"") -> bool:
        self.counters.verify += 1
        d = self.digest(message)
        if len(pk) != self.descriptor.pk_size or len(signature) != self.descriptor.sig_size:
            return False
        return self._verify(pk, d, signature, address)

    def _keygen(self, seed: bytes, address: bytes) -> tuple[bytes, bytes]:
        raise NotImplementedError

    def _sign(self, sk: bytes, pk: bytes, digest: bytes, address: bytes) -> bytes:
        raise NotImplementedError

    def _verify(self, pk: bytes, digest: bytes, signature: bytes, address: bytes) -> bool:
        raise NotImplementedError

