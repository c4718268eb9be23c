"""Sum, iterated-sum and product compositions of one-time signatures.

Every composite is described by a *blueprint* (capacity, verification,
declared sizes) and instantiated as a stateful *signer*.  Signing emits a
list of records; verification rebuilds the root digest from those records
and compares it against the public key, so it depends only on
``(pk, message, signature)``.

Record order is the order ``reconstruct`` consumes them: for a product the
lower instance's records come first, then the upper instance's
certification records.
"""

from __future__ import annotations

import hmac
import struct
from dataclasses import dataclass
from typing import Iterator

from .hashing import N_BYTES, TAG_CERT, TAG_NODE, hash_digest, keypair_address, prf_derive
from .scheme import BaseKeyPair, BaseScheme, Exhausted, PeriodPassed, SchemeDescriptor

WIRE_VERSION = 1
EMPTY_LEAF = b"\x00" * N_BYTES  # placeholder for padded leaves; H(pk) never hits it in practice


def node_hash(base: BaseScheme, left: bytes, right: bytes) -> bytes:
    base.counters.hashes += 1
    return hash_digest(base.suite, TAG_NODE, left + right)


def leaf_digest(base: BaseScheme, pk: bytes) -> bytes:
    base.counters.hashes += 1
    return hash_digest(base.suite, TAG_NODE, pk)


def cert_payload(base: BaseScheme, lower_root: bytes, lower_capacity: int, upper_period: int) -> bytes:
    base.counters.hashes += 1
    data = lower_root + lower_capacity.to_bytes(8, "little") + upper_period.to_bytes(8, "little")
    return hash_digest(base.suite, TAG_CERT, data)


def _seed_child(seed: bytes, bit: int) -> bytes:
    return prf_derive(seed, b"seedtree" + bytes((bit,)))


def _seek(signer, base, period: int | None) -> None:
    if period is None:
        return
    if period < signer.period:
        raise PeriodPassed(f"period {period} already passed (now {signer.period})")
    while period > signer.period:
        signer.update(base)


# --------------------------------------------------------------------------
# seed frontier


class SeedFrontier:
    """Forward-secure walk over the leaf seeds of a binary seed tree.

    Holds seeds only for subtrees not yet visited; popping leaf ``j`` removes
    every seed from which leaves ``<= j`` can be derived.
    """

    def __init__(self, entries: list[tuple[int, int, bytes]]):
        self.entries = entries  # (height, index, seed); last element is next

    @classmethod
    def from_root(cls, root_seed: bytes, height: int) -> "SeedFrontier":
        return cls([(height, 0, bytes(root_seed))])

    def next_leaf(self) -> tuple[int, bytes]:
        if not self.entries:
            raise Exhausted("seed tree exhausted")
        h, idx, seed = self.entries.pop()
        while h > 0:
            self.entries.append((h - 1, 2 * idx + 1, _seed_child(seed, 1)))
            h, idx, seed = h - 1, 2 * idx, _seed_child(seed, 0)
        return idx, seed

    def to_obj(self) -> list:
        return [[h, i, s] for h, i, s in self.entries]

    @classmethod
    def from_obj(cls, obj) -> "SeedFrontier":
        return cls([(h, i, bytes(s)) for h, i, s in obj])


def _kp_obj(kp: BaseKeyPair | None):
    return None if kp is None else [bytes(kp.sk), kp.pk, kp.address]


def _kp_load(obj) -> BaseKeyPair | None:
    return None if obj is None else BaseKeyPair(bytearray(obj[0]), bytes(obj[1]), bytes(obj[2]))


# --------------------------------------------------------------------------
# records


@dataclass
class LeafRecord:
    signature: bytes
    pk: bytes
    path: list[bytes]

    def to_bytes(self) -> bytes:
        return self.signature + self.pk + b"".join(self.path)

    @classmethod
    def parse(cls, blob: bytes, desc: SchemeDescriptor) -> "LeafRecord | None":
        head = desc.sig_size + desc.pk_size
        rest = len(blob) - head
        if rest < 0 or rest % N_BYTES:
            return None
        path = [blob[head + k:head + k + N_BYTES] for k in range(0, rest, N_BYTES)]
        return cls(blob[:desc.sig_size], blob[desc.sig_size:head], path)


def root_from_path(base: BaseScheme, digest: bytes, index: int, path: list[bytes]) -> bytes:
    for sibling in path:
        if index & 1:
            digest = node_hash(base, sibling, digest)
        else:
            digest = node_hash(base, digest, sibling)
        index >>= 1
    return digest


# --------------------------------------------------------------------------
# iterated sum (Merkle certification tree)


class TreeBuilder:
    """Incremental construction of a height-``h`` tree, one leaf per ``step``.

    Keeps the first leaf's key pair for immediate use and every authentication
    node the signer will later need, so signing performs no leaf recomputation.
    """

    def __init__(self, height: int, root_seed: bytes, context: bytes, real_leaves: int | None = None):
        self.height = height
        self.root_seed = bytes(root_seed)
        self.context = context
        self.real_leaves = (1 << height) if real_leaves is None else real_leaves
        self.frontier = SeedFrontier.from_root(root_seed, height)
        self.next_index = 0
        self.stack: list[tuple[int, int, bytes]] = []
        self.auth: dict[tuple[int, int], bytes] = {}
        self.first: BaseKeyPair | None = None
        self.root: bytes | None = None

    @property
    def leaves(self) -> int:
        return 1 << self.height

    @property
    def complete(self) -> bool:
        return self.root is not None

    def step(self, base: BaseScheme, *, structural: bool = True) -> None:
        if self.complete:
            return
        j = self.next_index
        if j < self.real_leaves:
            _, seed = self.frontier.next_leaf()
            addr = keypair_address(self.context, j, base.suite)
            kp = base.keygen(seed, addr, structural=structural and j > 0)
            digest = leaf_digest(base, kp.pk)
            if j == 0:
                self.first = kp
            else:
                kp.wipe()
        else:
            digest = EMPTY_LEAF
        self.next_index += 1
        self._push(base, 0, j, digest)
        if self.next_index == self.leaves:
            self.root = self.stack.pop()[2]
            self.frontier = SeedFrontier([])

    def _push(self, base, level, index, digest):
        if level < self.height:
            self.auth[(level, index)] = digest
        while self.stack and self.stack[-1][0] == level:
            _, left_index, left = self.stack.pop()
            digest = node_hash(base, left, digest)
            level, index = level + 1, left_index // 2
            if level < self.height:
                self.auth[(level, index)] = digest
        self.stack.append((level, index, digest))

    def run(self, base: BaseScheme, *, structural: bool = True) -> "TreeBuilder":
        while not self.complete:
            self.step(base, structural=structural)
        return self

    def finish(self) -> "TreeSigner":
        if not self.complete:
            raise RuntimeError("tree not fully built")
        signer = TreeSigner(self.height, self.context, SeedFrontier.from_root(self.root_seed, self.height),
                            self.root, self.auth, self.first, self.real_leaves)
        self.root_seed = b""
        return signer

    def to_obj(self) -> dict:
        return {
            "height": self.height,
            "root_seed": self.root_seed,
            "context": self.context,
            "real": self.real_leaves,
            "frontier": self.frontier.to_obj(),
            "next": self.next_index,
            "stack": [[lv, i, d] for lv, i, d in self.stack],
            "auth": [[lv, i, d] for (lv, i), d in sorted(self.auth.items())],
            "first": _kp_obj(self.first),
            "root": self.root,
        }

    @classmethod
    def from_obj(cls, obj) -> "TreeBuilder":
        b = cls.__new__(cls)
        b.height = obj["height"]
        b.root_seed = bytes(obj["root_seed"])
        b.context = bytes(obj["context"])
        b.real_leaves = obj["real"]
        b.frontier = SeedFrontier.from_obj(obj["frontier"])
        b.next_index = obj["next"]
        b.stack = [(lv, i, bytes(d)) for lv, i, d in obj["stack"]]
        b.auth = {(lv, i): bytes(d) for lv, i, d in obj["auth"]}
        b.first = _kp_load(obj["first"])
        b.root = None if obj["root"] is None else bytes(obj["root"])
        return b


class TreeSigner:
    """Signing state of an iterated sum: capacity ``real_leaves`` one-time keys."""

    kind = "tree"

    def __init__(self, height, context, frontier, root, auth, first, real_leaves):
        self.height = height
        self.context = context
        self.frontier = frontier
        self.public_key = root
        self.auth = dict(auth)
        self.current = first
        self.real_leaves = real_leaves
        self.period = 0

    @property
    def capacity(self) -> int:
        return self.real_leaves

    @property
    def exhausted(self) -> bool:
        return self.period >= self.capacity

    def _path(self, j: int) -> list[bytes]:
        return [self.auth[(h, (j >> h) ^ 1)] for h in range(self.height)]

    def _advance(self, j: int) -> None:
        # nodes whose sibling block ends at leaf j are never needed again
        for h in range(self.height):
            if ((j + 1) >> h) != (j >> h):
                self.auth.pop((h, (j >> h) ^ 1), None)
        self.period = j + 1

    def sign(self, base: BaseScheme, message: bytes, period: int | None = None) -> list[bytes]:
        _seek(self, base, period)
        if self.exhausted:
            raise Exhausted(f"tree of {self.capacity} leaves exhausted")
        j = self.period
        index, seed = self.frontier.next_leaf()
        assert index == j
        kp = self.current
        if kp is None:
            kp = base.keygen(seed, keypair_address(self.context, j, base.suite))
        self.current = None
        sig = base.sign(kp, message)
        record = LeafRecord(sig, kp.pk, self._path(j))
        kp.wipe()
        self._advance(j)
        return [record.to_bytes()]

    def update(self, base: BaseScheme | None = None) -> None:
        if self.exhausted:
            raise Exhausted(f"tree of {self.capacity} leaves exhausted")
        j = self.period
        self.frontier.next_leaf()
        if self.current is not None:
            self.current.wipe()
            self.current = None
        self._advance(j)

    def to_obj(self) -> dict:
        return {
            "kind": self.kind,
            "height": self.height,
            "context": self.context,
            "frontier": self.frontier.to_obj(),
            "root": self.public_key,
            "auth": [[lv, i, d] for (lv, i), d in sorted(self.auth.items())],
            "current": _kp_obj(self.current),
            "real": self.real_leaves,
            "period": self.period,
        }

    @classmethod
    def from_obj(cls, obj, blueprint=None) -> "TreeSigner":
        s = cls(obj["height"], bytes(obj["context"]), SeedFrontier.from_obj(obj["frontier"]),
                bytes(obj["root"]), {(lv, i): bytes(d) for lv, i, d in obj["auth"]},
                _kp_load(obj["current"]), obj["real"])
        s.period = obj["period"]
        return s


# --------------------------------------------------------------------------
# blueprints


class Blueprint:
    """Shape of a composite: capacity, instantiation, verification, sizes."""

    capacity: int

    def create(self, base: BaseScheme, seed: bytes, context: bytes, eager: bool = False):
        raise NotImplementedError

    def reconstruct(self, base: BaseScheme, message: bytes, period: int,
                    records: Iterator[bytes], context: bytes) -> bytes | None:
        raise NotImplementedError

    def record_sizes(self, desc: SchemeDescriptor) -> list[int]:
        raise NotImplementedError

    def load(self, obj):
        raise NotImplementedError


@dataclass(frozen=True)
class TreeBlueprint(Blueprint):
    height: int

    @property
    def capacity(self) -> int:
        return 1 << self.height

    def create(self, base, seed, context, eager=False):
        return TreeBuilder(self.height, seed, context).run(base).finish()

    def reconstruct(self, base, message, period, records, context):
        blob = next(records, None)
        if blob is None or not 0 <= period < self.capacity:
            return None
        rec = LeafRecord.parse(blob, base.descriptor)
        if rec is None or len(rec.path) != self.height:
            return None
        if not base.verify(rec.pk, message, rec.signature, keypair_address(context, period, base.suite)):
            return None
        return root_from_path(base, leaf_digest(base, rec.pk), period, rec.path)

    def record_sizes(self, desc):
        return [desc.sig_size + desc.pk_size + N_BYTES * self.height]

    def load(self, obj):
        return TreeSigner.from_obj(obj)


class SumSigner:
    """Two child schemes; the left one is used up (and erased) before the right."""

    kind = "sum"

    def __init__(self, blueprint: "SumBlueprint", context: bytes, left, right, left_pk, right_pk, public_key):
        self.blueprint = blueprint
        self.context = context
        self.left = left
        self.right = right
        self.left_pk = left_pk
        self.right_pk = right_pk
        self.public_key = public_key
        self.period = 0

    @property
    def capacity(self) -> int:
        return self.blueprint.capacity

    @property
    def exhausted(self) -> bool:
        return self.period >= self.capacity

    def _active(self):
        if self.left is not None and self.left.exhausted:
            self.left = None
        return (self.left, self.right_pk) if self.left is not None else (self.right, self.left_pk)

    def sign(self, base, message, period: int | None = None) -> list[bytes]:
        _seek(self, base, period)
        if self.exhausted:
            raise Exhausted("sum composition exhausted")
        child, sibling = self._active()
        records = child.sign(base, message)
        self.period += 1
        self._active()
        return records + [sibling]

    def update(self, base=None) -> None:
        if self.exhausted:
            raise Exhausted("sum composition exhausted")
        child, _ = self._active()
        child.update(base)
        self.period += 1
        self._active()

    def to_obj(self):
        return {
            "kind": self.kind,
            "context": self.context,
            "left": None if self.left is None else self.left.to_obj(),
            "right": self.right.to_obj(),
            "left_pk": self.left_pk,
            "right_pk": self.right_pk,
            "pk": self.public_key,
            "period": self.period,
        }


@dataclass(frozen=True)
class SumBlueprint(Blueprint):
    left: Blueprint
    right: Blueprint

    @property
    def capacity(self) -> int:
        return self.left.capacity + self.right.capacity

    def create(self, base, seed, context, eager=False):
        left = self.left.create(base, prf_derive(seed, b"sum-left"), context + b"0", eager)
        right = self.right.create(base, prf_derive(seed, b"sum-right"), context + b"1", False)
        pk = node_hash(base, left.public_key, right.public_key)
        return SumSigner(self, context, left, right, left.public_key, right.public_key, pk)

    def reconstruct(self, base, message, period, records, context):
        if not 0 <= period < self.capacity:
            return None
        if period < self.left.capacity:
            root = self.left.reconstruct(base, message, period, records, context + b"0")
            sibling = next(records, None)
            if root is None or sibling is None or len(sibling) != N_BYTES:
                return None
            return node_hash(base, root, sibling)
        root = self.right.reconstruct(base, message, period - self.left.capacity, records, context + b"1")
        sibling = next(records, None)
        if root is None or sibling is None or len(sibling) != N_BYTES:
            return None
        return node_hash(base, sibling, root)

    def record_sizes(self, desc):
        # left and right may differ in shape; report the left branch
        return self.left.record_sizes(desc) + [N_BYTES]

    def load(self, obj):
        s = SumSigner(self, bytes(obj["context"]),
                      None if obj["left"] is None else self.left.load(obj["left"]),
                      self.right.load(obj["right"]), bytes(obj["left_pk"]), bytes(obj["right_pk"]),
                      bytes(obj["pk"]))
        s.period = obj["period"]
        return s


class ProductSigner:
    """Upper scheme certifies a sequence of fresh lower instances."""

    kind = "product"

    def __init__(self, blueprint: "ProductBlueprint", context: bytes, upper, chain: bytes):
        self.blueprint = blueprint
        self.context = context
        self.upper = upper
        self.chain = chain
        self.lower = None
        self.cert: list[bytes] | None = None
        self.ordinal = 0
        self.period = 0

    @property
    def public_key(self) -> bytes:
        return self.upper.public_key

    @property
    def capacity(self) -> int:
        return self.blueprint.capacity

    @property
    def exhausted(self) -> bool:
        return self.period >= self.capacity

    def _spawn(self, base, eager: bool) -> None:
        if self.ordinal >= self.blueprint.upper.capacity:
            raise Exhausted("product composition exhausted")
        seed = prf_derive(self.chain, b"instance")
        self.chain = prf_derive(self.chain, b"next")
        ctx = self.blueprint.lower_context(self.context, self.ordinal)
        self.lower = self.blueprint.lower.create(base, seed, ctx, eager)
        self.cert = None
        self.ordinal += 1

    def _ensure_lower(self, base) -> None:
        if self.lower is None or self.lower.exhausted:
            self._spawn(base, eager=False)

    def sign(self, base, message, period: int | None = None) -> list[bytes]:
        _seek(self, base, period)
        if self.exhausted:
            raise Exhausted("product composition exhausted")
        self._ensure_lower(base)
        if self.cert is None:
            up = self.ordinal - 1
            while self.upper.period < up:
                self.upper.update(base)
            payload = cert_payload(base, self.lower.public_key, self.lower.capacity, up)
            self.cert = self.upper.sign(base, payload)
        records = self.lower.sign(base, message)
        self.period += 1
        return records + self.cert

    def update(self, base=None) -> None:
        if self.exhausted:
            raise Exhausted("product composition exhausted")
        self._ensure_lower(base)
        self.lower.update(base)
        self.period += 1

    def to_obj(self):
        return {
            "kind": self.kind,
            "context": self.context,
            "upper": self.upper.to_obj(),
            "lower": None if self.lower is None else self.lower.to_obj(),
            "chain": self.chain,
            "cert": self.cert,
            "ordinal": self.ordinal,
            "period": self.period,
        }


@dataclass(frozen=True)
class ProductBlueprint(Blueprint):
    upper: Blueprint
    lower: Blueprint

    @property
    def capacity(self) -> int:
        return self.upper.capacity * self.lower.capacity

    @staticmethod
    def lower_context(context: bytes, ordinal: int) -> bytes:
        return context + b"L" + ordinal.to_bytes(8, "little")

    def create(self, base, seed, context, eager=False):
        upper = self.upper.create(base, prf_derive(seed, b"upper"), context + b"U", False)
        signer = ProductSigner(self, context, upper, prf_derive(seed, b"lower-chain"))
        if eager:
            signer._spawn(base, eager=True)
        return signer

    def reconstruct(self, base, message, period, records, context):
        if not 0 <= period < self.capacity:
            return None
        up, lo = divmod(period, self.lower.capacity)
        lower_root = self.lower.reconstruct(base, message, lo, records, self.lower_context(context, up))
        if lower_root is None:
            return None
        payload = cert_payload(base, lower_root, self.lower.capacity, up)
        return self.upper.reconstruct(base, payload, up, records, context + b"U")

    def record_sizes(self, desc):
        return self.lower.record_sizes(desc) + self.upper.record_sizes(desc)

    def load(self, obj):
        s = ProductSigner(self, bytes(obj["context"]), self.upper.load(obj["upper"]), bytes(obj["chain"]))
        s.lower = None if obj["lower"] is None else self.lower.load(obj["lower"])
        s.cert = None if obj["cert"] is None else [bytes(c) for c in obj["cert"]]
        s.ordinal = obj["ordinal"]
        s.period = obj["period"]
        return s


# --------------------------------------------------------------------------
# keygen helpers


def iterated_sum_keygen(base: BaseScheme, seed: bytes, height: int, context: bytes = b"") -> TreeSigner:
    """Build a ``2**height``-period certification tree; only leaf 0 is a signing keygen."""
    if height < 0:
        raise ValueError("height must be >= 0")
    return TreeBlueprint(height).create(base, seed, context)


def sum_keygen(base: BaseScheme, seed: bytes, left: Blueprint, right: Blueprint,
               context: bytes = b"") -> SumSigner:
    return SumBlueprint(left, right).create(base, seed, context)


def product_keygen(base: BaseScheme, seed: bytes, upper: Blueprint, lower: Blueprint,
                   context: bytes = b"", eager: bool = True) -> ProductSigner:
    return ProductBlueprint(upper, lower).create(base, seed, context, eager)


# --------------------------------------------------------------------------
# wire format


@dataclass
class CompositeSignature:
    """``version | id_len | scheme_id | period u64le | count | (u32le len | record)*``"""

    scheme_id: str
    period: int
    records: list[bytes]

    def to_bytes(self) -> bytes:
        sid = self.scheme_id.encode("ascii")
        out = bytearray(struct.pack("<BB", WIRE_VERSION, len(sid)))
        out += sid
        out += struct.pack("<QB", self.period, len(self.records))
        for rec in self.records:
            out += struct.pack("<I", len(rec)) + rec
        return bytes(out)

    @classmethod
    def from_bytes(cls, blob: bytes) -> "CompositeSignature":
        try:
            version, id_len = struct.unpack_from("<BB", blob, 0)
            if version != WIRE_VERSION:
                raise ValueError(f"unsupported signature version {version}")
            pos = 2
            sid = blob[pos:pos + id_len].decode("ascii")
            pos += id_len
            period, count = struct.unpack_from("<QB", blob, pos)
            pos += 9
            records = []
            for _ in range(count):
                (n,) = struct.unpack_from("<I", blob, pos)
                pos += 4
                if pos + n > len(blob):
                    raise ValueError("truncated record")
                records.append(blob[pos:pos + n])
                pos += n
        except (struct.error, UnicodeDecodeError) as exc:
            raise ValueError(f"malformed signature: {exc}") from None
        if pos != len(blob):
            raise ValueError("trailing bytes after signature")
        return cls(sid, period, records)


def header_size(scheme_id: str) -> int:
    return 1 + 1 + len(scheme_id) + 8 + 1


def declared_size(scheme_id: str, record_sizes: list[int]) -> int:
    return header_size(scheme_id) + sum(4 + r for r in record_sizes)


def composite_verify(base: BaseScheme, blueprint: Blueprint, public_key: bytes, message: bytes,
                     signature: CompositeSignature, context: bytes = b"") -> bool:
    """Rebuild the root from the signature and compare with ``public_key``."""
    it = iter(signature.records)
    try:
        root = blueprint.reconstruct(base, message, signature.period, it, context)
    except (ValueError, KeyError):
        return False
    if root is None or next(it, None) is not None:
        return False
    return hmac.compare_digest(root, public_key)
