import copy

import cbor2
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from conftest import TOY
from fs_audit import Recorder, assert_forward_secure
from fspq.compositions import (
    CompositeSignature,
    LeafRecord,
    ProductBlueprint,
    SeedFrontier,
    SumBlueprint,
    TreeBlueprint,
    composite_verify,
    declared_size,
    iterated_sum_keygen,
    product_keygen,
    sum_keygen,
)
from fspq.scheme import CostCounters, Exhausted, PeriodPassed

SEED = bytes(range(16))
CTX = b"test"


def walk(base, blueprint, signer, context=CTX):
    """Sign every period, returning (period, message, CompositeSignature) triples."""
    out = []
    while not signer.exhausted:
        t = signer.period
        msg = b"msg-%d" % t
        sig = CompositeSignature("t", t, signer.sign(base, msg))
        assert composite_verify(base, blueprint, signer.public_key, msg, sig, context)
        out.append((t, msg, sig))
    return out


def reload(blueprint, signer):
    return blueprint.load(cbor2.loads(cbor2.dumps(signer.to_obj())))


# -- seed frontier -----------------------------------------------------------

@pytest.mark.parametrize("h", [0, 1, 3, 5])
def test_frontier_leaf_order_matches_oracle(h):
    f = SeedFrontier.from_root(SEED, h)
    for j in range(1 << h):
        idx, seed = f.next_leaf()
        assert idx == j
        assert seed == oracles.leaf_seed(SEED, h, j)
    with pytest.raises(Exhausted):
        f.next_leaf()


def test_frontier_drops_ancestors_of_used_leaves():
    h = 4
    f = SeedFrontier.from_root(SEED, h)
    for j in range(1 << h):
        f.next_leaf()
        held = {s for _, _, s in f.entries}
        for k in range(j + 1):
            # no held seed is the used leaf itself or any of its ancestors
            for depth in range(h + 1):
                prefix = k >> (h - depth)
                node = SEED
                for level in range(depth):
                    bit = (prefix >> (depth - 1 - level)) & 1
                    node = oracles.prf16(node, b"seedtree" + bytes([bit]))
                assert node not in held
        f2 = SeedFrontier.from_obj(cbor2.loads(cbor2.dumps(f.to_obj())))
        assert f2.entries == f.entries


# -- iterated sum ------------------------------------------------------------

@pytest.mark.parametrize("h", [0, 1, 2, 3])
def test_tree_walk(toy, counters, h):
    bp = TreeBlueprint(h)
    counters.reset()
    signer = bp.create(toy, SEED, CTX)
    assert counters.keygen == 1 and counters.tree_keygen == (1 << h) - 1
    assert len(signer.public_key) == 32 and signer.capacity == 1 << h
    before = counters.snapshot()
    sigs = walk(toy, bp, signer)
    assert len(sigs) == 1 << h
    d = counters - before
    assert d.sign == 1 << h and d.keygen == (1 << h) - 1
    with pytest.raises(Exhausted):
        signer.sign(toy, b"over")
    for t, msg, sig in sigs:
        assert not composite_verify(toy, bp, signer.public_key, msg, sig, CTX + b"x")
        if h:
            moved = CompositeSignature("t", t ^ 1, sig.records)
            assert not composite_verify(toy, bp, signer.public_key, msg, moved, CTX)


def test_tree_rejects_tampering_full_params(wots):
    bp = TreeBlueprint(2)
    signer = bp.create(wots, SEED, CTX)
    for t, msg, sig in walk(wots, bp, signer):
        assert not composite_verify(wots, bp, signer.public_key, msg + b"!", sig, CTX)
        rec = bytearray(sig.records[0])
        rec[-1] ^= 1
        assert not composite_verify(wots, bp, signer.public_key, msg, CompositeSignature("t", t, [bytes(rec)]), CTX)


def test_tree_auth_nodes_shrink(toy):
    bp = TreeBlueprint(3)
    signer = bp.create(toy, SEED, CTX)
    sizes = [len(signer.auth)]
    while not signer.exhausted:
        signer.sign(toy, b"m")
        sizes.append(len(signer.auth))
    assert sizes[0] == 2 ** 4 - 2 and sizes[-1] == 0
    assert sizes == sorted(sizes, reverse=True)


def test_iterated_sum_keygen(toy):
    s = iterated_sum_keygen(toy, SEED, 2, CTX)
    assert s.capacity == 4
    with pytest.raises(ValueError):
        iterated_sum_keygen(toy, SEED, -1)


def test_leaf_record_parse(toy):
    desc = toy.descriptor
    rec = LeafRecord(b"s" * desc.sig_size, b"p" * desc.pk_size, [b"a" * 32, b"b" * 32])
    back = LeafRecord.parse(rec.to_bytes(), desc)
    assert back == rec
    assert LeafRecord.parse(rec.to_bytes()[:-1], desc) is None
    assert LeafRecord.parse(b"short", desc) is None


# -- sum ---------------------------------------------------------------------

@pytest.mark.parametrize("hl,hr", [(0, 0), (1, 0), (0, 2), (2, 1)])
def test_sum_walk(toy, hl, hr):
    bp = SumBlueprint(TreeBlueprint(hl), TreeBlueprint(hr))
    signer = sum_keygen(toy, SEED, bp.left, bp.right, CTX)
    assert signer.capacity == (1 << hl) + (1 << hr)
    sigs = walk(toy, bp, signer)
    assert [t for t, _, _ in sigs] == list(range(signer.capacity))
    assert signer.left is None
    with pytest.raises(Exhausted):
        signer.update(toy)


def test_sum_reload_midway(toy):
    bp = SumBlueprint(TreeBlueprint(1), TreeBlueprint(1))
    signer = bp.create(toy, SEED, CTX)
    signer.sign(toy, b"a")
    signer = reload(bp, signer)
    walk(toy, bp, signer)


# -- product -----------------------------------------------------------------

@pytest.mark.parametrize("hu,hl", [(0, 0), (1, 1), (1, 2), (2, 1)])
def test_product_walk(toy, counters, hu, hl):
    bp = ProductBlueprint(TreeBlueprint(hu), TreeBlueprint(hl))
    signer = product_keygen(toy, SEED, bp.upper, bp.lower, CTX)
    assert signer.capacity == (1 << hu) * (1 << hl)
    before = counters.snapshot()
    sigs = walk(toy, bp, signer)
    # one certification per lower instance plus one leaf signature per period
    assert (counters - before).sign == signer.capacity + (1 << hu)
    for t, msg, sig in sigs:
        assert len(sig.records) == 2
        swapped = CompositeSignature("t", t, sig.records[::-1])
        assert not composite_verify(toy, bp, signer.public_key, msg, swapped, CTX)
        extra = CompositeSignature("t", t, sig.records + [b"x"])
        assert not composite_verify(toy, bp, signer.public_key, msg, extra, CTX)


def test_product_lower_cannot_move_between_slots(wots):
    bp = ProductBlueprint(TreeBlueprint(1), TreeBlueprint(1))
    signer = bp.create(wots, SEED, CTX, eager=True)
    sigs = walk(wots, bp, signer)
    # lower record from slot 0 with the certificate of slot 1
    (_, m0, s0), (_, _, s2) = sigs[0], sigs[2]
    franken = CompositeSignature("t", 2, [s0.records[0], s2.records[1]])
    assert not composite_verify(wots, bp, signer.public_key, m0, franken, CTX)


def test_product_reload_every_period(toy):
    bp = ProductBlueprint(TreeBlueprint(1), TreeBlueprint(1))
    signer = bp.create(toy, SEED, CTX, eager=True)
    pk = signer.public_key
    while not signer.exhausted:
        signer = reload(bp, signer)
        t = signer.period
        sig = CompositeSignature("t", t, signer.sign(toy, b"m"))
        assert composite_verify(toy, bp, pk, b"m", sig, CTX)


def test_nested_product_of_sums(toy):
    inner = SumBlueprint(TreeBlueprint(0), TreeBlueprint(1))
    bp = ProductBlueprint(inner, inner)
    signer = bp.create(toy, SEED, CTX, eager=True)
    assert signer.capacity == 9
    walk(toy, bp, signer)


def test_deterministic_keygen(toy):
    bp = ProductBlueprint(TreeBlueprint(1), TreeBlueprint(1))
    a = bp.create(toy, SEED, CTX, eager=True)
    b = bp.create(toy, SEED, CTX, eager=True)
    c = bp.create(toy, bytes(16), CTX, eager=True)
    assert a.public_key == b.public_key != c.public_key


# -- key evolution -----------------------------------------------------------

@pytest.mark.parametrize("bp", [
    TreeBlueprint(3),
    SumBlueprint(TreeBlueprint(1), TreeBlueprint(2)),
    ProductBlueprint(TreeBlueprint(1), TreeBlueprint(2)),
], ids=["tree8", "sum6", "product8"])
def test_no_signature_for_past_periods(toy, bp):
    signer = bp.create(toy, SEED, CTX, eager=True) if isinstance(bp, ProductBlueprint) else bp.create(toy, SEED, CTX)
    for i in range(bp.capacity + 1):
        for p in range(i):
            probe = reload(bp, signer)
            with pytest.raises(PeriodPassed):
                probe.sign(toy, b"old", period=p)
        if i < bp.capacity:
            signer.update(toy)


def test_sign_with_explicit_future_period(toy):
    bp = TreeBlueprint(3)
    signer = bp.create(toy, SEED, CTX)
    sig = CompositeSignature("t", 5, signer.sign(toy, b"m", period=5))
    assert composite_verify(toy, bp, signer.public_key, b"m", sig, CTX)
    assert signer.period == 6


@pytest.mark.parametrize("bp", [
    TreeBlueprint(3),
    ProductBlueprint(TreeBlueprint(1), TreeBlueprint(2)),
    ProductBlueprint(ProductBlueprint(TreeBlueprint(1), TreeBlueprint(1)),
                     ProductBlueprint(TreeBlueprint(1), TreeBlueprint(1))),
], ids=["tree8", "product8", "product16"])
def test_forward_security_rederivation(bp):
    rec = Recorder(params=TOY, counters=CostCounters())
    signer = bp.create(rec, SEED, CTX, eager=True) if isinstance(bp, ProductBlueprint) else bp.create(rec, SEED, CTX)
    while not signer.exhausted:
        signer.sign(rec, b"m")
        assert_forward_secure(rec, signer, depth=3)


# -- wire format ---------------------------------------------------------------

def test_wire_roundtrip_and_size():
    sig = CompositeSignature("frog-x", 2 ** 63 + 5, [b"a" * 10, b"", b"b" * 300])
    blob = sig.to_bytes()
    assert CompositeSignature.from_bytes(blob) == sig
    assert len(blob) == declared_size("frog-x", [10, 0, 300])
    assert blob[0] == 1 and blob[1] == 6 and blob[2:8] == b"frog-x"


@pytest.mark.parametrize("blob", [b"", b"\x02\x00", b"\x01\x05ab", b"\x01\x00" + bytes(9) + b"x",
                                  b"\x01\x00" + bytes(8) + b"\x01\xff\x00\x00\x00"])
def test_wire_malformed(blob):
    with pytest.raises(ValueError):
        CompositeSignature.from_bytes(blob)


@settings(max_examples=300, deadline=None)
@given(st.binary(max_size=64))
def test_wire_parse_total(blob):
    try:
        sig = CompositeSignature.from_bytes(blob)
    except ValueError:
        return
    assert sig.to_bytes() == blob


@settings(max_examples=100, deadline=None)
@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz-0123456789", max_size=40),
       st.integers(0, 2 ** 64 - 1), st.lists(st.binary(max_size=50), max_size=5))
def test_wire_roundtrip_property(sid, period, records):
    sig = CompositeSignature(sid, period, records)
    assert CompositeSignature.from_bytes(sig.to_bytes()) == sig


def test_state_copy_is_independent(toy):
    bp = TreeBlueprint(2)
    signer = bp.create(toy, SEED, CTX)
    snap = copy.deepcopy(signer.to_obj())
    signer.sign(toy, b"m")
    assert snap != signer.to_obj()
