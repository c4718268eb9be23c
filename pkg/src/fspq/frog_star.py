"""FROG*: a two-period sum, then ``k`` rounds of self-product (capacity ``2**(2**k)``)."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from .compositions import (
    Blueprint,
    CompositeSignature,
    ProductBlueprint,
    TreeBlueprint,
    _seek,
    composite_verify,
    declared_size,
)
from .hashing import N_BYTES
from .scheme import BaseScheme, Exhausted, SchemeDescriptor

MAX_DEPTH = 6  # 2**(2**6) = 2**64 periods


@lru_cache(maxsize=None)
def star_blueprint(k: int) -> Blueprint:
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return TreeBlueprint(1)
    inner = star_blueprint(k - 1)
    return ProductBlueprint(inner, inner)


def depth_for_capacity(capacity: int) -> int:
    """Smallest k with 2**(2**k) >= capacity."""
    k = 0
    while (1 << (1 << k)) < capacity:
        k += 1
    return k


def scheme_id_for(base: BaseScheme) -> str:
    return f"frogstar-{base.name}"


class StarSigner:
    kind = "frogstar"

    def __init__(self, base: BaseScheme, depth: int, inner):
        self.base = base
        self.depth = depth
        self.inner = inner
        self.scheme_id = scheme_id_for(base)

    @classmethod
    def keygen(cls, base: BaseScheme, seed: bytes, depth: int) -> "StarSigner":
        """Instantiate the leftmost spine: one lower instance per product layer, no certificates yet."""
        if not 0 <= depth <= MAX_DEPTH:
            raise ValueError(f"depth must be in [0, {MAX_DEPTH}]")
        bp = star_blueprint(depth)
        inner = bp.create(base, seed, scheme_id_for(base).encode(), eager=True)
        return cls(base, depth, inner)

    @property
    def blueprint(self) -> Blueprint:
        return star_blueprint(self.depth)

    @property
    def public_key(self) -> bytes:
        return self.inner.public_key

    @property
    def capacity(self) -> int:
        return self.blueprint.capacity

    @property
    def period(self) -> int:
        return self.inner.period

    @property
    def exhausted(self) -> bool:
        return self.inner.exhausted

    def sign(self, message: bytes, period: int | None = None) -> CompositeSignature:
        _seek(self, None, period)
        if self.exhausted:
            raise Exhausted(f"all {self.capacity} periods used")
        t = self.inner.period
        records = self.inner.sign(self.base, message)
        return CompositeSignature(self.scheme_id, t, records)

    def update(self, base=None) -> None:
        self.inner.update(self.base)

    def verify(self, message: bytes, signature: CompositeSignature) -> bool:
        return star_verify(self.base, self.public_key, message, signature)

    def declared_signature_size(self, period: int = 0) -> int:
        return declared_size(self.scheme_id, self.blueprint.record_sizes(self.base.descriptor))

    def to_obj(self) -> dict:
        return {"kind": self.kind, "base": self.base.name, "depth": self.depth, "inner": self.inner.to_obj()}

    @classmethod
    def from_obj(cls, obj, base: BaseScheme) -> "StarSigner":
        if obj["base"] != base.name:
            raise ValueError(f"state is for {obj['base']}, not {base.name}")
        depth = obj["depth"]
        return cls(base, depth, star_blueprint(depth).load(obj["inner"]))


def star_verify(base: BaseScheme, public_key: bytes, message: bytes,
                signature: CompositeSignature | bytes) -> bool:
    if isinstance(signature, (bytes, bytearray)):
        try:
            signature = CompositeSignature.from_bytes(bytes(signature))
        except ValueError:
            return False
    count = len(signature.records)
    if signature.scheme_id != scheme_id_for(base) or count == 0 or count & (count - 1):
        return False
    depth = count.bit_length() - 1
    if depth > MAX_DEPTH:
        return False
    return composite_verify(base, star_blueprint(depth), public_key, message, signature,
                            signature.scheme_id.encode())


@dataclass
class StarSizeReport:
    scheme: str
    depth: int
    formula_signature: int
    formula_public_key: int
    formula_private_key: int
    declared_signature: int


def star_serialized_sizes(desc: SchemeDescriptor, depth: int = MAX_DEPTH, kappa: int = 128) -> StarSizeReport:
    """Analytical FROG* sizes with kappa read as kappa/8 octets, next to the declared wire size."""
    kb = kappa // 8
    log_k = int(math.log2(kappa))
    log_t = 1 << depth
    sig = 2 * desc.sig_size + 4 * desc.pk_size + kb
    sk = depth * (2 * desc.sk_size + 6 * desc.pk_size + 4 * kb) + kb * log_t ** 2 + desc.sk_size * log_k
    sid = f"frogstar-{desc.name}"
    declared = declared_size(sid, star_blueprint(depth).record_sizes(desc))
    return StarSizeReport(sid, depth, sig, N_BYTES, sk, declared)

