import os
import subprocess
import sys
from pathlib import Path

import pytest

from fspq import cli
from fspq.compositions import CompositeSignature
from fspq.frog import frog_serialized_sizes
from fspq.frog_star import StarSigner
from fspq.wots import make_base_scheme

SEED_HEX = "00112233445566778899aabbccddeeff"


@pytest.fixture
def work(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("FSPQ_SEED", raising=False)
    Path("msg").write_bytes(b"hello")
    return tmp_path


def run(*args):
    return cli.main(list(args))


def keygen(scheme="frog-wots-sha256", cap="2^4", out="state", pk="pk", *extra):
    return run("keygen", "--scheme", scheme, "--capacity", cap, "--out", out, "--pk", pk, "--seed-hex", SEED_HEX, *extra)


def test_keygen_writes_32_byte_pk(work, capsys):
    assert keygen() == 0
    assert len(Path("pk").read_bytes()) == 32
    out = capsys.readouterr().out
    assert "capacity    15" in out and "4256" in out


def test_keygen_reproducible(work):
    keygen(out="a", pk="pka")
    keygen(out="b", pk="pkb")
    assert Path("pka").read_bytes() == Path("pkb").read_bytes()
    assert Path("a").read_bytes() == Path("b").read_bytes()


def test_keygen_random_without_seed(work):
    run("keygen", "--scheme", "frog-wots-sha256", "--capacity", "2", "--out", "a", "--pk", "pka")
    run("keygen", "--scheme", "frog-wots-sha256", "--capacity", "2", "--out", "b", "--pk", "pkb")
    assert Path("pka").read_bytes() != Path("pkb").read_bytes()


@pytest.mark.parametrize("argv", [
    ["keygen", "--scheme", "nope", "--capacity", "2^4", "--out", "s", "--pk", "p"],
    ["keygen", "--scheme", "frog-wots-sha256", "--capacity", "lots", "--out", "s", "--pk", "p"],
    ["keygen", "--scheme", "frog-wots-sha256", "--capacity", "2^65", "--out", "s", "--pk", "p"],
    ["keygen", "--scheme", "frogstar-wots-sha256", "--capacity", "2^3", "--out", "s", "--pk", "p"],
    ["keygen", "--scheme", "frog-mock-bliss2", "--capacity", "2^3", "--out", "s", "--pk", "p"],
    ["keygen", "--scheme", "frog-wots-sha256", "--capacity", "2^3", "--out", "s", "--pk", "p", "--seed-hex", "zz"],
    ["keygen", "--scheme", "frog-wots-sha256", "--capacity", "2^3", "--out", "s", "--pk", "p", "--seed-hex", "00"],
    ["frobnicate"],
])
def test_bad_arguments_exit_2(work, capsys, argv):
    try:
        code = run(*argv)
    except SystemExit as exc:
        code = exc.code
    assert code == 2
    assert "usage" in capsys.readouterr().err


def test_env_seed_requires_test_flag(work, monkeypatch):
    monkeypatch.setenv("FSPQ_SEED", SEED_HEX)
    base = ["keygen", "--scheme", "frog-wots-sha256", "--capacity", "2^2", "--out", "s", "--pk", "p"]
    assert run(*base) == 2
    assert run(*base, "--test-mode") == 0
    first = Path("p").read_bytes()
    assert run(*base, "--test-mode") == 0
    assert Path("p").read_bytes() == first


def test_capacity_walk_and_exhaustion(work):
    keygen()
    periods = []
    for i in range(15):
        assert run("sign", "--state", "state", "--in", "msg", "--sig-out", f"sig{i}") == 0
        sig = CompositeSignature.from_bytes(Path(f"sig{i}").read_bytes())
        periods.append(sig.period)
    assert periods == list(range(15))
    assert run("sign", "--state", "state", "--in", "msg", "--sig-out", "extra") == 4
    assert not Path("extra").exists()


def test_signature_length_matches_declared(work):
    keygen(cap="2^64")
    run("sign", "--state", "state", "--in", "msg", "--sig-out", "sig")
    desc = make_base_scheme("wots-sha256").descriptor
    # 2^64 means 64 upper leaves (height 6); at period 0 the lower tree has height 0
    header = 1 + 1 + 16 + 8 + 1
    expect = header + (4 + desc.sig_size + desc.pk_size) + (4 + desc.sig_size + desc.pk_size + 6 * 32)
    assert len(Path("sig").read_bytes()) == expect
    assert frog_serialized_sizes(desc, 2 ** 64 - 1).upper_height == 6


def test_verify_accept_reject(work):
    keygen(cap="2^3")
    run("sign", "--state", "state", "--in", "msg", "--sig-out", "sig")
    assert run("verify", "--pk", "pk", "--in", "msg", "--sig", "sig") == 0
    Path("msg2").write_bytes(b"hellp")
    assert run("verify", "--pk", "pk", "--in", "msg2", "--sig", "sig") == 1
    Path("junk").write_bytes(b"\x01\x02garbage")
    assert run("verify", "--pk", "pk", "--in", "msg", "--sig", "junk") == 1
    Path("shortpk").write_bytes(b"\x00" * 31)
    assert run("verify", "--pk", "shortpk", "--in", "msg", "--sig", "sig") == 1
    assert run("verify", "--pk", "missing", "--in", "msg", "--sig", "sig") == 3


def test_verify_cross_instance_rejected(work):
    keygen(cap="2^3", out="a", pk="pka")
    run("keygen", "--scheme", "frog-wots-sha256", "--capacity", "2^3", "--out", "b", "--pk", "pkb",
        "--seed-hex", "ff" * 16)
    for i in range(3):
        run("sign", "--state", "a", "--in", "msg", "--sig-out", f"sa{i}")
        assert run("verify", "--pk", "pkb", "--in", "msg", "--sig", f"sa{i}") == 1
        assert run("verify", "--pk", "pka", "--in", "msg", "--sig", f"sa{i}") == 0


def test_verify_never_opens_state(work, monkeypatch):
    keygen(cap="2^2")
    run("sign", "--state", "state", "--in", "msg", "--sig-out", "sig")
    real_open = open
    opened = []

    def spy(path, *a, **kw):
        opened.append(str(path))
        return real_open(path, *a, **kw)

    monkeypatch.setattr("builtins.open", spy)
    monkeypatch.setattr(Path, "read_bytes", lambda self: (opened.append(str(self)), real_open(self, "rb").read())[1])
    assert run("verify", "--pk", "pk", "--in", "msg", "--sig", "sig") == 0
    assert not any("state" in p for p in opened)


def test_info(work, capsys):
    keygen()
    capsys.readouterr()
    assert run("info", "--state", "state") == 0
    out = capsys.readouterr().out
    assert "remaining   15" in out and "period      0" in out
    for _ in range(3):
        run("sign", "--state", "state", "--in", "msg", "--sig-out", "sig")
    capsys.readouterr()
    run("info", "--state", "state")
    out = capsys.readouterr().out
    assert "period      3" in out and "remaining   12" in out and "state size" in out


def test_info_corrupt(work, capsys):
    keygen()
    blob = bytearray(Path("state").read_bytes())
    blob[40] ^= 1
    Path("state").write_bytes(blob)
    assert run("info", "--state", "state") == 3
    assert "CorruptState" in capsys.readouterr().err
    assert run("info", "--state", "nothing-here") == 3


def test_sign_rollback_exit_5(work):
    keygen()
    backup = Path("state").read_bytes()
    run("sign", "--state", "state", "--in", "msg", "--sig-out", "s1")
    Path("state").write_bytes(backup)
    assert run("sign", "--state", "state", "--in", "msg", "--sig-out", "s2") == 5
    assert not Path("s2").exists()


def test_frogstar_and_mock(work):
    assert run("keygen", "--scheme", "frogstar-wots-sha256", "--capacity", "2^2", "--out", "st", "--pk", "pk",
               "--seed-hex", SEED_HEX) == 0
    for i in range(4):
        assert run("sign", "--state", "st", "--in", "msg", "--sig-out", f"s{i}") == 0
        assert run("verify", "--pk", "pk", "--in", "msg", "--sig", f"s{i}") == 0
    assert run("sign", "--state", "st", "--in", "msg", "--sig-out", "s9") == 4
    assert run("keygen", "--scheme", "frogstar-mock-bliss2", "--capacity", "2^2", "--out", "mb", "--pk", "mpk",
               "--allow-mock", "--seed-hex", SEED_HEX) == 0
    assert run("sign", "--state", "mb", "--in", "msg", "--sig-out", "ms") == 3
    assert run("sign", "--state", "mb", "--in", "msg", "--sig-out", "ms", "--allow-mock") == 0
    assert run("verify", "--pk", "mpk", "--in", "msg", "--sig", "ms") == 1
    assert run("verify", "--pk", "mpk", "--in", "msg", "--sig", "ms", "--allow-mock") == 0


def test_frogstar_capacity_maps_to_depth(work):
    run("keygen", "--scheme", "frogstar-wots-sha256", "--capacity", "2^4", "--out", "st", "--pk", "pk",
        "--seed-hex", SEED_HEX)
    from fspq.store import load_state
    s = load_state("st")
    assert isinstance(s, StarSigner) and s.depth == 2 and s.capacity == 16


@pytest.mark.parametrize("what", ["cost", "size", "timing", "reference"])
def test_bench_subcommand(work, capsys, what):
    assert run("bench", what, "--scheme", "frog-wots-sha256", "--capacity", "7", "--repetitions", "1") == 0
    assert capsys.readouterr().out.strip()


def test_bench_csv(work, capsys):
    run("bench", "size", "--scheme", "frogstar-mock-bliss2", "--allow-mock", "--format", "csv")
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "quantity,formula,measured,reference,formula-reference"
    assert lines[1].startswith("signature,4766,")


def test_parse_exponent():
    assert cli.parse_exponent("2^4") == 4
    assert cli.parse_exponent("2**10") == 10
    assert cli.parse_exponent("7") == 7
    with pytest.raises(cli.UsageError):
        cli.parse_exponent("3^4")


def test_console_script_exit_codes(work):
    env = dict(os.environ)
    env.pop("FSPQ_SEED", None)
    exe = [sys.executable, "-m", "fspq.cli"]
    r = subprocess.run(exe + ["keygen", "--scheme", "frog-wots-sha256", "--capacity", "2^1", "--out", "s", "--pk", "p",
                              "--seed-hex", SEED_HEX], env=env, capture_output=True)
    assert r.returncode == 0
    r = subprocess.run(exe + ["sign", "--state", "s", "--in", "msg", "--sig-out", "g"], env=env, capture_output=True)
    assert r.returncode == 0
    r = subprocess.run(exe + ["verify", "--pk", "p", "--in", "msg", "--sig", "g"], env=env, capture_output=True)
    assert r.returncode == 0 and r.stdout.strip() == b"accept"
    r = subprocess.run(exe + ["sign", "--state", "s", "--in", "msg", "--sig-out", "g2"], env=env, capture_output=True)
    assert r.returncode == 4
    r = subprocess.run(exe + ["info"], env=env, capture_output=True)
    assert r.returncode == 2
