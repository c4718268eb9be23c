"""Durable signer state files.

Layout (all integers little-endian)::

    magic "FSPQ" | version u8 | id_len u8 | scheme_id | suite u8 | kappa u16
    | capacity u64 (saturating) | period u64 | payload_len u32 | payload (CBOR)
    | sha256 over everything before it

Saves go through a temp file and an atomic rename; the replaced file is
overwritten with zeros before it is unlinked.  That overwrite is best
effort only: journaling and copy-on-write filesystems may keep old blocks.

A sidecar ``<state>.hwm`` records the highest period ever saved.  Loading a
state whose period is below it means an older copy was restored, which would
reuse one-time keys.
"""

from __future__ import annotations

import fcntl
import hashlib
import os
import struct
from contextlib import contextmanager
from pathlib import Path
from typing import Callable

import cbor2

from .frog import FrogSigner
from .frog_star import StarSigner
from .hashing import HashSuite
from .wots import make_base_scheme

MAGIC = b"FSPQ"
FORMAT_VERSION = 1
KAPPA = 128
_U64_MAX = (1 << 64) - 1


class StateError(Exception):
    pass


class CorruptState(StateError):
    pass


class VersionMismatch(StateError):
    pass


class UnknownScheme(StateError):
    pass


class StateLocked(StateError):
    pass


class RollbackDetected(StateError):
    pass


class SimulatedCrash(BaseException):
    """Raised by fault-injection hooks; not an Exception so nothing swallows it."""


def split_scheme_id(scheme_id: str) -> tuple[str, str]:
    kind, _, base = scheme_id.partition("-")
    if kind not in ("frog", "frogstar") or not base:
        raise UnknownScheme(f"unknown scheme id {scheme_id!r}")
    return kind, base


def make_signer_base(scheme_id: str, *, allow_mock: bool = False):
    kind, base_name = split_scheme_id(scheme_id)
    try:
        base = make_base_scheme(base_name, allow_mock=allow_mock)
    except ValueError as exc:
        raise UnknownScheme(str(exc)) from None
    return kind, base


def encode_state(signer) -> bytes:
    payload = cbor2.dumps(signer.to_obj(), canonical=True)
    sid = signer.scheme_id.encode("ascii")
    head = bytearray(MAGIC)
    head += struct.pack("<BB", FORMAT_VERSION, len(sid)) + sid
    head += struct.pack("<BHQQI", signer.base.suite.code, KAPPA, min(signer.capacity, _U64_MAX),
                        signer.period, len(payload))
    body = bytes(head) + payload
    return body + hashlib.sha256(body).digest()


def read_header(blob: bytes) -> dict:
    if len(blob) < 4 or blob[:4] != MAGIC:
        raise CorruptState("bad magic: not an FSPQ state file")
    if len(blob) < 38:
        raise CorruptState("state file truncated")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise CorruptState("integrity digest mismatch")
    version, id_len = struct.unpack_from("<BB", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionMismatch(f"state format {version}, expected {FORMAT_VERSION}")
    pos = 6
    sid = blob[pos:pos + id_len].decode("ascii", "replace")
    pos += id_len
    suite, kappa, capacity, period, n = struct.unpack_from("<BHQQI", blob, pos)
    pos += struct.calcsize("<BHQQI")
    if pos + n != len(body):
        raise CorruptState("payload length mismatch")
    return {
        "scheme_id": sid,
        "suite": HashSuite.from_code(suite),
        "kappa": kappa,
        "capacity": capacity,
        "period": period,
        "payload": blob[pos:pos + n],
    }


def decode_state(blob: bytes, *, allow_mock: bool = False):
    header = read_header(blob)
    kind, base = make_signer_base(header["scheme_id"], allow_mock=allow_mock)
    try:
        obj = cbor2.loads(header["payload"])
        signer = (FrogSigner if kind == "frog" else StarSigner).from_obj(obj, base)
    except (cbor2.CBORDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptState(f"undecodable payload: {exc}") from None
    if signer.period != header["period"]:
        raise CorruptState("header period disagrees with payload")
    return signer


# --------------------------------------------------------------------------
# files


def _fsync_dir(path: Path) -> None:
    fd = os.open(path.parent, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def _write_durable(path: Path, data: bytes) -> None:
    with open(path, "wb") as fh:
        fh.write(data)
        fh.flush()
        os.fsync(fh.fileno())


def _zero_and_unlink(path: Path, keep: Path | None = None) -> None:
    if not path.exists():
        return
    if keep is None or not keep.exists() or not os.path.samefile(path, keep):
        size = path.stat().st_size
        with open(path, "r+b") as fh:
            fh.write(b"\x00" * size)
            fh.flush()
            os.fsync(fh.fileno())
    path.unlink()


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.name + suffix)


def hwm_path(path: Path) -> Path:
    return _sidecar(Path(path), ".hwm")


def read_hwm(path: Path) -> int | None:
    p = hwm_path(path)
    try:
        data = p.read_bytes()
    except FileNotFoundError:
        return None
    if len(data) != 8:
        return None
    return struct.unpack("<Q", data)[0]


Fault = Callable[[str], None]


def save_state(signer, path, *, fault: Fault | None = None) -> None:
    """Atomically replace ``path`` with the serialized ``signer``.

    ``fault`` is called with a stage name after each durable step; tests use
    it to simulate a crash at that point.
    """
    path = Path(path)
    fault = fault or (lambda stage: None)
    tmp, old = _sidecar(path, ".tmp"), _sidecar(path, ".old")
    _write_durable(tmp, encode_state(signer))
    fault("temp-written")
    if old.exists():
        _zero_and_unlink(old, keep=path)
    if path.exists():
        os.link(path, old)
    fault("old-linked")
    os.replace(tmp, path)
    _fsync_dir(path)
    fault("renamed")
    _zero_and_unlink(old, keep=path)
    fault("old-wiped")
    hwm = max(read_hwm(path) or 0, signer.period)
    hwm_tmp = _sidecar(path, ".hwm.tmp")
    _write_durable(hwm_tmp, struct.pack("<Q", hwm))
    os.replace(hwm_tmp, hwm_path(path))
    _fsync_dir(path)
    fault("hwm-written")


def load_state(path, *, allow_mock: bool = False, check_rollback: bool = False):
    path = Path(path)
    blob = path.read_bytes()
    signer = decode_state(blob, allow_mock=allow_mock)
    for leftover in (_sidecar(path, ".old"), _sidecar(path, ".tmp")):  # from an interrupted save
        if leftover.exists():
            _zero_and_unlink(leftover, keep=path)
    if check_rollback:
        hwm = read_hwm(path)
        if hwm is not None and hwm > signer.period:
            raise RollbackDetected(f"state period {signer.period} is below high-water mark {hwm}")
    return signer


@contextmanager
def locked(path):
    """Exclusive advisory lock on ``<state>.lock`` for the duration of the block."""
    lock = _sidecar(Path(path), ".lock")
    fd = os.open(lock, os.O_RDWR | os.O_CREAT, 0o600)
    try:
        try:
            fcntl.flock(fd, fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise StateLocked(f"{path} is in use by another process") from None
        yield
    finally:
        os.close(fd)


def sign_with_store(path, message: bytes, *, allow_mock: bool = False, fault: Fault | None = None):
    """Sign the next period; the signature is returned only after the advanced state is durable."""
    with locked(path):
        signer = load_state(path, allow_mock=allow_mock, check_rollback=True)
        signature = signer.sign(message)
        save_state(signer, path, fault=fault)
    return signature
