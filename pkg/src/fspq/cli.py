"""``fspq`` command-line tool.

Exit codes: 0 ok / accepted, 1 signature rejected, 2 bad arguments,
3 I/O error or corrupt state, 4 key exhausted, 5 rollback hazard or state locked.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
from pathlib import Path

from . import bench, store
from .compositions import CompositeSignature
from .frog import FrogSigner, frog_verify
from .frog_star import MAX_DEPTH, StarSigner, star_verify
from .hashing import N_BYTES, SEED_BYTES
from .scheme import Exhausted
from .wots import BASE_SCHEME_NAMES, make_base_scheme

EXIT_OK, EXIT_REJECT, EXIT_ARGS, EXIT_IO, EXIT_EXHAUSTED, EXIT_ROLLBACK = range(6)

SCHEME_IDS = tuple(f"{kind}-{base}" for kind in ("frog", "frogstar") for base in BASE_SCHEME_NAMES)


class UsageError(Exception):
    pass


def parse_exponent(text: str) -> int:
    """Accept ``2^L``, ``2**L`` or plain ``L``."""
    m = re.fullmatch(r"\s*(?:2\s*(?:\^|\*\*)\s*)?(\d+)\s*", text)
    if not m:
        raise UsageError(f"capacity must look like 2^L, got {text!r}")
    return int(m.group(1))


def _seed(args) -> bytes:
    if args.seed_hex:
        raw = args.seed_hex
    elif os.environ.get("FSPQ_SEED"):
        if not args.test_mode:
            raise UsageError("FSPQ_SEED is only honoured together with --test-mode")
        raw = os.environ["FSPQ_SEED"]
    else:
        return os.urandom(SEED_BYTES)
    try:
        seed = bytes.fromhex(raw)
    except ValueError:
        raise UsageError("seed must be hex") from None
    if len(seed) != SEED_BYTES:
        raise UsageError(f"seed must be {SEED_BYTES} bytes ({2 * SEED_BYTES} hex digits)")
    return seed


def _make_base(scheme_id: str, allow_mock: bool):
    try:
        kind, base_name = store.split_scheme_id(scheme_id)
        return kind, make_base_scheme(base_name, allow_mock=allow_mock)
    except (store.UnknownScheme, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _write(path: str, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())


def cmd_keygen(args) -> int:
    kind, base = _make_base(args.scheme, args.allow_mock)
    exponent = parse_exponent(args.capacity)
    seed = _seed(args)
    if kind == "frog":
        if not 1 <= exponent <= 64:
            raise UsageError("FROG capacity exponent L must be in [1, 64]")
        signer = FrogSigner.keygen(base, seed, leaves=exponent)
    else:
        if exponent < 1 or exponent & (exponent - 1) or exponent > 1 << MAX_DEPTH:
            raise UsageError("FROG* capacity must be 2^E with E a power of two up to 64")
        signer = StarSigner.keygen(base, seed, exponent.bit_length() - 1)
    store.save_state(signer, args.out)
    _write(args.pk, signer.public_key)
    desc = base.descriptor
    print(f"scheme      {signer.scheme_id}")
    print(f"capacity    {signer.capacity}")
    print(f"public key  {len(signer.public_key)} bytes -> {args.pk}")
    print(f"base sizes  sig {desc.sig_size}  pk {desc.pk_size}  sk {desc.sk_size}")
    print(f"signature   {signer.declared_signature_size(0)} bytes at period 0")
    if base.insecure:
        print("WARNING: mock base scheme, signatures are forgeable", file=sys.stderr)
    return EXIT_OK


def cmd_sign(args) -> int:
    message = Path(args.input).read_bytes()
    signature = store.sign_with_store(args.state, message, allow_mock=args.allow_mock)
    _write(args.sig_out, signature.to_bytes())
    print(f"period {signature.period}")
    return EXIT_OK


def cmd_verify(args) -> int:
    pk = Path(args.pk).read_bytes()
    message = Path(args.input).read_bytes()
    blob = Path(args.sig).read_bytes()
    if len(pk) != N_BYTES:
        print("reject: public key must be 32 bytes")
        return EXIT_REJECT
    try:
        sig = CompositeSignature.from_bytes(blob)
        kind, base = _make_base(sig.scheme_id, args.allow_mock)
    except (ValueError, UsageError) as exc:
        print(f"reject: {exc}")
        return EXIT_REJECT
    ok = (frog_verify if kind == "frog" else star_verify)(base, pk, message, sig)
    print("accept" if ok else "reject")
    return EXIT_OK if ok else EXIT_REJECT


def cmd_info(args) -> int:
    path = Path(args.state)
    blob = path.read_bytes()
    header = store.read_header(blob)
    signer = store.decode_state(blob, allow_mock=True)
    print(f"scheme      {header['scheme_id']}")
    print(f"period      {signer.period}")
    print(f"capacity    {signer.capacity}")
    print(f"remaining   {signer.capacity - signer.period}")
    print(f"state size  {len(blob)} bytes")
    hwm = store.read_hwm(path)
    if hwm is not None and hwm > signer.period:
        print(f"WARNING: high-water mark {hwm} is ahead of this state (rollback)")
    return EXIT_OK


def cmd_bench(args) -> int:
    _make_base(args.scheme, args.allow_mock)
    fmt = args.format
    if args.what == "cost":
        audit = bench.run_cost_audit(args.scheme, args.capacity, allow_mock=args.allow_mock,
                                     amortize=not args.no_amortize)
        print(bench.render_cost(audit, fmt, trace=args.trace), end="")
        return EXIT_OK if audit.ok else EXIT_REJECT
    if args.what == "size":
        print(bench.render_sizes(bench.run_size_audit(args.scheme, allow_mock=args.allow_mock), fmt), end="")
    elif args.what == "timing":
        report = bench.run_timing(args.scheme, args.capacity, args.repetitions, allow_mock=args.allow_mock)
        print(bench.render_timing(report, fmt), end="")
    else:
        print(bench.render_reference(fmt), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fspq", description="Forward-secure FROG / FROG* signatures.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--allow-mock", action="store_true", help="permit insecure mock lattice base schemes")

    k = sub.add_parser("keygen", help="create a signer state and public key")
    k.add_argument("--scheme", required=True, choices=SCHEME_IDS, metavar="SCHEME",
                   help="one of: " + ", ".join(SCHEME_IDS))
    k.add_argument("--capacity", required=True,
                   help="2^L; FROG signs 2^L - 1 messages, FROG* needs L in {1,2,4,...,64}")
    k.add_argument("--out", required=True, help="state file to write")
    k.add_argument("--pk", required=True, help="public key file to write")
    k.add_argument("--seed-hex", help="16-byte master seed in hex (default: os.urandom)")
    k.add_argument("--test-mode", action="store_true", help=argparse.SUPPRESS)
    common(k)
    k.set_defaults(func=cmd_keygen)

    s = sub.add_parser("sign", help="sign a message and advance the state")
    s.add_argument("--state", required=True)
    s.add_argument("--in", dest="input", required=True)
    s.add_argument("--sig-out", required=True)
    common(s)
    s.set_defaults(func=cmd_sign)

    v = sub.add_parser("verify", help="verify a signature (never touches a state file)")
    v.add_argument("--pk", required=True)
    v.add_argument("--in", dest="input", required=True)
    v.add_argument("--sig", required=True)
    common(v)
    v.set_defaults(func=cmd_verify)

    i = sub.add_parser("info", help="show period and remaining capacity of a state file")
    i.add_argument("--state", required=True)
    i.set_defaults(func=cmd_info)

    b = sub.add_parser("bench", help="operation-count, size and timing reports")
    b.add_argument("what", choices=("cost", "size", "timing", "reference"))
    b.add_argument("--scheme", default="frog-wots-sha256", choices=SCHEME_IDS, metavar="SCHEME")
    b.add_argument("--capacity", type=int, default=15, help="periods to walk (cost, timing)")
    b.add_argument("--repetitions", type=int, default=5)
    b.add_argument("--format", choices=("table", "csv"), default="table")
    b.add_argument("--trace", action="store_true", help="print per-period counter deltas")
    b.add_argument("--no-amortize", action="store_true", help="disable the FROG pending buffer")
    common(b)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"fspq: error: {exc}", file=sys.stderr)
        return EXIT_ARGS
    except Exhausted as exc:
        print(f"fspq: exhausted: {exc}", file=sys.stderr)
        return EXIT_EXHAUSTED
    except (store.RollbackDetected, store.StateLocked) as exc:
        print(f"fspq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ROLLBACK
    except (store.StateError, OSError) as exc:
        print(f"fspq: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
