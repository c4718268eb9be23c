import pytest

from fspq.bench import (
    MAX_AUDIT_CAPACITY,
    REFERENCE_ROWS,
    make_signer,
    reference_row,
    render_cost,
    render_reference,
    render_sizes,
    render_timing,
    run_cost_audit,
    run_size_audit,
    run_timing,
)
from conftest import TOY


def test_reference_rows_complete():
    assert len(REFERENCE_ROWS) == 16
    xmss = next(r for r in REFERENCE_ROWS if r.scheme == "XMSS-MT-SHA2_60/12_256")
    assert (xmss.signature, xmss.public_key, xmss.private_key) == (27_688, 64, 38_095)
    assert reference_row("frogstar-wots-sha256").signature == 25_552
    assert reference_row("frog-mock-bliss2").signature == 7_054
    assert all(r.public_key == 32 for r in REFERENCE_ROWS if r.scheme.startswith("FROG"))


def test_make_signer_smallest_instance():
    assert make_signer("frog-wots-sha256", 15, params=TOY).capacity == 15
    assert make_signer("frog-wots-sha256", 16, params=TOY).capacity == 31
    assert make_signer("frogstar-wots-sha256", 5, params=TOY).capacity == 16


def test_cost_audit_deterministic():
    a = run_cost_audit("frog-wots-sha256", 7, params=TOY)
    b = run_cost_audit("frog-wots-sha256", 7, params=TOY)
    assert a.trace_rows() == b.trace_rows() and a.keygen == b.keygen
    assert a.ok and len(a.sign_trace) == 7


def test_cost_audit_flags_unamortized_spike():
    audit = run_cost_audit("frog-wots-sha256", 31, params=TOY, amortize=False)
    assert audit.max_sign("keygen") > 3
    failed = [c.name for c in audit.checks if not c.ok]
    assert "sign worst case <= 3 keygens" in failed
    assert "all signatures verify" not in failed


def test_cost_audit_star():
    audit = run_cost_audit("frogstar-wots-sha256", 16, params=TOY)
    assert audit.ok and audit.max_verify("verify") == 4


def test_cost_audit_capacity_limit():
    with pytest.raises(ValueError):
        run_cost_audit("frog-wots-sha256", MAX_AUDIT_CAPACITY + 1)
    with pytest.raises(ValueError):
        run_cost_audit("frog-wots-sha256", 0)


def test_size_report_deltas():
    rep = run_size_audit("frog-wots-sha256")
    sig = rep.line("signature")
    assert (sig.formula, sig.reference, sig.delta_vs_reference) == (27_840, 27_872, -32)
    assert rep.line("public_key").measured == 32
    star = run_size_audit("frogstar-mock-bliss2")
    assert star.line("signature").delta_vs_reference == 0


def test_renderers():
    audit = run_cost_audit("frog-wots-sha256", 3, params=TOY)
    text = render_cost(audit, trace=True)
    assert "PASS" in text and "sign_keygen" in text
    csv_text = render_cost(audit, fmt="csv")
    assert csv_text.splitlines()[0] == "phase,base_keygen,base_sign|verify,structural_keygen"
    assert "XMSS-MT-SHA2_20/2_256" in render_reference()
    assert render_reference("csv").count("\n") == 17
    assert "formula-reference" in render_sizes(run_size_audit("frog-wots-sha256"))


def test_timing_report_shape():
    rep = run_timing("frog-wots-sha256", capacity=3, repetitions=1)
    assert set(rep.medians) == {"keygen", "sign", "verify"}
    assert all(v >= 0 for v in rep.medians.values())
    table = render_timing(rep)
    assert "not comparable" in table
    rows = render_timing(rep, "csv").splitlines()
    assert rows[0] == "phase,median_ms,reference_cycles" and len(rows) == 4
