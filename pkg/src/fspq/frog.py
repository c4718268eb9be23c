"""FROG: an upper certification tree whose leaf ``i`` certifies a lower tree of height ``i``.

Lower tree ``i`` has ``2**i`` leaves, so ``L`` upper leaves give ``2**L - 1``
periods.  While tree ``i`` is in use, every sign also generates two leaves of
tree ``i + 1`` (the pending buffer), so switching trees never needs a bulk
key generation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .compositions import (
    Blueprint,
    CompositeSignature,
    ProductBlueprint,
    TreeBlueprint,
    TreeBuilder,
    TreeSigner,
    _seek,
    cert_payload,
    composite_verify,
    declared_size,
)
from .hashing import N_BYTES, prf_derive
from .scheme import BaseScheme, Exhausted, SchemeDescriptor

MAX_PERIODS = 1 << 64


def upper_leaves_for(capacity: int) -> int:
    """Smallest L with 2**L - 1 >= capacity."""
    if capacity < 1:
        raise ValueError("capacity must be >= 1")
    return capacity.bit_length()


def upper_height(leaves: int) -> int:
    return (leaves - 1).bit_length()


def split_period(t: int) -> tuple[int, int]:
    """Global period -> (lower tree index, leaf index inside that tree)."""
    i = (t + 1).bit_length() - 1
    return i, t - ((1 << i) - 1)


def _lower_context(context: bytes, i: int) -> bytes:
    return ProductBlueprint.lower_context(context, i)


@dataclass(frozen=True)
class FrogBlueprint(Blueprint):
    upper_height: int

    @property
    def capacity(self) -> int:
        return (1 << (1 << self.upper_height)) - 1

    def reconstruct(self, base, message, period, records, context):
        if period < 0 or period >= MAX_PERIODS * 2:
            return None
        i, j = split_period(period)
        if i >= (1 << self.upper_height):
            return None
        lower_root = TreeBlueprint(i).reconstruct(base, message, j, records, _lower_context(context, i))
        if lower_root is None:
            return None
        payload = cert_payload(base, lower_root, 1 << i, i)
        return TreeBlueprint(self.upper_height).reconstruct(base, payload, i, records, context + b"U")

    def record_sizes_at(self, desc: SchemeDescriptor, period: int) -> list[int]:
        i, _ = split_period(period)
        return TreeBlueprint(i).record_sizes(desc) + TreeBlueprint(self.upper_height).record_sizes(desc)


def scheme_id_for(base: BaseScheme) -> str:
    return f"frog-{base.name}"


class FrogSigner:
    kind = "frog"

    def __init__(self, base: BaseScheme, leaves: int, *, amortize: bool = True):
        self.base = base
        self.leaves = leaves
        self.height = upper_height(leaves)
        self.amortize = amortize
        self.scheme_id = scheme_id_for(base)
        self.context = self.scheme_id.encode()
        self.upper: TreeSigner | None = None
        self.lower: TreeSigner | None = None
        self.pending: TreeBuilder | None = None
        self.chain = b""
        self.tree_index = 0
        self.cert: list[bytes] | None = None
        self.period = 0
        self.public_key = b""

    # -- lifecycle ---------------------------------------------------------

    @classmethod
    def keygen(cls, base: BaseScheme, seed: bytes, *, leaves: int | None = None,
               capacity: int | None = None, amortize: bool = True) -> "FrogSigner":
        if leaves is None:
            if capacity is None:
                raise ValueError("give leaves or capacity")
            if capacity > MAX_PERIODS:
                raise ValueError("capacity above 2**64")
            leaves = upper_leaves_for(capacity)
        if leaves < 1:
            raise ValueError("need at least one upper leaf")
        s = cls(base, leaves, amortize=amortize)
        upper = TreeBuilder(s.height, prf_derive(seed, b"frog-upper"), s.context + b"U", real_leaves=leaves)
        s.upper = upper.run(base).finish()
        s.public_key = s.upper.public_key
        s.chain = prf_derive(seed, b"frog-chain")
        s.lower = s._new_builder(0).run(base, structural=False).finish()
        if amortize and leaves > 1:
            s.pending = s._new_builder(1)
        return s

    def _new_builder(self, i: int) -> TreeBuilder:
        tree_seed = prf_derive(self.chain, b"tree")
        self.chain = prf_derive(self.chain, b"next")
        return TreeBuilder(i, tree_seed, _lower_context(self.context, i))

    @property
    def capacity(self) -> int:
        return (1 << self.leaves) - 1

    @property
    def exhausted(self) -> bool:
        return self.period >= self.capacity

    @property
    def blueprint(self) -> FrogBlueprint:
        return FrogBlueprint(self.height)

    def _turnover(self) -> None:
        """Activate the next lower tree once the current one is used up."""
        if not self.lower.exhausted:
            return
        i = self.tree_index + 1
        if self.pending is None:
            builder = self._new_builder(i).run(self.base, structural=False)
        else:
            builder = self.pending
            while not builder.complete:  # only reachable after skipping via update()
                builder.step(self.base, structural=False)
        self.lower = builder.finish()
        self.tree_index = i
        self.cert = None
        self.pending = None
        if self.amortize and i + 1 < self.leaves:
            self.pending = self._new_builder(i + 1)

    def _advance_pending(self) -> None:
        if self.pending is not None:
            for _ in range(2):
                self.pending.step(self.base, structural=False)

    def sign(self, message: bytes, period: int | None = None) -> CompositeSignature:
        _seek(self, None, period)
        if self.exhausted:
            raise Exhausted(f"all {self.capacity} periods used")
        self._turnover()
        i = self.tree_index
        if self.cert is None:
            while self.upper.period < i:
                self.upper.update()
            payload = cert_payload(self.base, self.lower.public_key, self.lower.capacity, i)
            self.cert = self.upper.sign(self.base, payload)
        records = self.lower.sign(self.base, message)
        self._advance_pending()
        t = self.period
        self.period += 1
        return CompositeSignature(self.scheme_id, t, records + self.cert)

    def update(self, base=None) -> None:
        """Skip the current period without signing."""
        if self.exhausted:
            raise Exhausted(f"all {self.capacity} periods used")
        self._turnover()
        self.lower.update()
        self._advance_pending()
        self.period += 1

    def verify(self, message: bytes, signature: CompositeSignature) -> bool:
        return frog_verify(self.base, self.public_key, message, signature)

    # -- sizes -------------------------------------------------------------

    def declared_signature_size(self, period: int) -> int:
        return declared_size(self.scheme_id, self.blueprint.record_sizes_at(self.base.descriptor, period))

    # -- persistence -------------------------------------------------------

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "base": self.base.name,
            "leaves": self.leaves,
            "amortize": self.amortize,
            "pk": self.public_key,
            "upper": self.upper.to_obj(),
            "lower": self.lower.to_obj(),
            "pending": None if self.pending is None else self.pending.to_obj(),
            "chain": self.chain,
            "tree_index": self.tree_index,
            "cert": self.cert,
            "period": self.period,
        }

    @classmethod
    def from_obj(cls, obj, base: BaseScheme) -> "FrogSigner":
        if obj["base"] != base.name:
            raise ValueError(f"state is for {obj['base']}, not {base.name}")
        s = cls(base, obj["leaves"], amortize=obj["amortize"])
        s.public_key = bytes(obj["pk"])
        s.upper = TreeSigner.from_obj(obj["upper"])
        s.lower = TreeSigner.from_obj(obj["lower"])
        s.pending = None if obj["pending"] is None else TreeBuilder.from_obj(obj["pending"])
        s.chain = bytes(obj["chain"])
        s.tree_index = obj["tree_index"]
        s.cert = None if obj["cert"] is None else [bytes(c) for c in obj["cert"]]
        s.period = obj["period"]
        return s


def frog_verify(base: BaseScheme, public_key: bytes, message: bytes,
                signature: CompositeSignature | bytes) -> bool:
    if isinstance(signature, (bytes, bytearray)):
        try:
            signature = CompositeSignature.from_bytes(bytes(signature))
        except ValueError:
            return False
    if signature.scheme_id != scheme_id_for(base) or len(signature.records) != 2:
        return False
    desc = base.descriptor
    extra = len(signature.records[1]) - desc.sig_size - desc.pk_size
    if extra < 0 or extra % N_BYTES:
        return False
    bp = FrogBlueprint(extra // N_BYTES)
    return composite_verify(base, bp, public_key, message, signature, signature.scheme_id.encode())


@dataclass
class FrogSizeReport:
    scheme: str
    leaves: int
    upper_height: int
    formula_signature: int
    formula_public_key: int
    formula_private_key: int
    declared_signature_max: int

    @property
    def declared_public_key(self) -> int:
        return N_BYTES


def frog_serialized_sizes(desc: SchemeDescriptor, capacity: int = MAX_PERIODS,
                          kappa: int = 128) -> FrogSizeReport:
    """Closed-form analytical sizes next to this implementation's worst-case signature size.

    The analytical private-key term ``kappa * (log t)**2`` is read with kappa
    in octets (``kappa / 8``), the same reading that makes the FROG* signature
    row agree with the published numbers.
    """
    log_k = int(math.log2(kappa))
    log_t = max(1, math.ceil(math.log2(capacity)))
    h = N_BYTES
    sig = 2 * desc.sig_size + 4 * desc.pk_size + (log_k + log_t + 1) * h
    sk = ((2 + log_k) * desc.sk_size + 6 * desc.pk_size + 4 * log_k * h
          + 3 * log_t * h + (kappa // 8) * log_t ** 2)
    leaves = upper_leaves_for(capacity)
    height = upper_height(leaves)
    sid = f"frog-{desc.name}"
    worst = declared_size(sid, [desc.sig_size + desc.pk_size + h * (leaves - 1),
                                desc.sig_size + desc.pk_size + h * height])
    return FrogSizeReport(sid, leaves, height, sig, h, sk, worst)
