"""Operation-count, size and timing reports.

Counts are exact tallies from ``CostCounters``.  Timings are wall-clock
medians and are informational only; the reference cycle counts below come
from different hardware and native code and are not comparable.
"""

from __future__ import annotations

import csv
import io
import math
import statistics
import time
from dataclasses import dataclass, field

from .frog import FrogSigner, frog_serialized_sizes, upper_leaves_for
from .frog_star import StarSigner, depth_for_capacity, star_serialized_sizes
from .scheme import CostCounters
from .store import split_scheme_id
from .wots import DEFAULT_PARAMS, WotsParams, make_base_scheme

MAX_AUDIT_CAPACITY = 1 << 12
KAPPA = 128


@dataclass(frozen=True)
class ReferenceRow:
    scheme: str
    keygen_cycles: int
    sign_cycles: int
    verify_cycles: int
    signature: int
    public_key: int
    private_key: int


# Reference data, version 1: published cycle counts (i7 Kaby Lake, 2.9 GHz) and byte sizes.
REFERENCE_ROWS: tuple[ReferenceRow, ...] = (
    ReferenceRow("XMSS-MT-SHA2_20/2_256", 9_236_557_672, 24_554_349, 5_186_460, 4_963, 64, 5_998),
    ReferenceRow("XMSS-MT-SHA2_20/4_256", 729_631_517, 14_364_265, 10_188_082, 9_251, 64, 10_938),
    ReferenceRow("XMSS-MT-SHA2_40/2_256", 9_404_925_498_412, 26_628_986, 5_377_454, 5_605, 64, 9_600),
    ReferenceRow("XMSS-MT-SHA2_60/3_256", 14_234_635_667_761, 29_584_259, 7_619_770, 8_392, 64, 16_629),
    ReferenceRow("XMSS-MT-SHA2_60/6_256", 31_682_214_982, 31_391_553, 16_521_985, 14_824, 64, 24_507),
    ReferenceRow("XMSS-MT-SHA2_60/12_256", 1_946_231_536, 15_474_825, 33_375_298, 27_688, 64, 38_095),
    ReferenceRow("FROG-BLISS", 2_102_770, 12_517_153, 999_972, 7_054, 32, 80_076),
    ReferenceRow("FROG-Dilithium", 815_322, 5_544_419, 994_438, 13_624, 32, 634_176),
    ReferenceRow("FROG-Dilithium-AVX2", 261_832, 1_369_462, 432_882, 13_624, 32, 634_176),
    ReferenceRow("FROG-WOTS+(SHA256)", 810_768, 2_031_100, 959_158, 27_872, 32, 715_840),
    ReferenceRow("FROG-WOTS+(SHAKE256)", 2_223_760, 5_559_400, 2_223_760, 27_872, 32, 715_840),
    ReferenceRow("FROG*-BLISS", 62_828_244, 12_782_583, 5_113_672, 4_766, 32, 10_640),
    ReferenceRow("FROG*-Dilithium", 28_642_638, 5_830_749, 5_080_468, 11_305, 32, 85_362),
    ReferenceRow("FROG*-Dilithium-AVX2", 10_306_122, 1_655_792, 1_711_132, 11_305, 32, 85_362),
    ReferenceRow("FROG*-WOTS+(SHA256)", 17_804_064, 2_296_530, 4_868_788, 25_552, 32, 107_040),
    ReferenceRow("FROG*-WOTS+(SHAKE256)", 40_027_680, 5_829_010, 13_346_740, 25_552, 32, 107_040),
)

_REFERENCE_LABEL = {
    ("frog", "wots-sha256"): "FROG-WOTS+(SHA256)",
    ("frog", "wots-shake256"): "FROG-WOTS+(SHAKE256)",
    ("frog", "mock-dilithium"): "FROG-Dilithium",
    ("frog", "mock-bliss2"): "FROG-BLISS",
    ("frogstar", "wots-sha256"): "FROG*-WOTS+(SHA256)",
    ("frogstar", "wots-shake256"): "FROG*-WOTS+(SHAKE256)",
    ("frogstar", "mock-dilithium"): "FROG*-Dilithium",
    ("frogstar", "mock-bliss2"): "FROG*-BLISS",
}


def reference_row(scheme_id: str) -> ReferenceRow | None:
    label = _REFERENCE_LABEL.get(split_scheme_id(scheme_id))
    return next((r for r in REFERENCE_ROWS if r.scheme == label), None)


# --------------------------------------------------------------------------
# helpers


def make_signer(scheme_id: str, capacity: int, *, seed: bytes = bytes(16), counters=None,
                allow_mock: bool = False, params: WotsParams = DEFAULT_PARAMS, amortize: bool = True):
    """Smallest instance of ``scheme_id`` holding at least ``capacity`` periods."""
    kind, base_name = split_scheme_id(scheme_id)
    base = make_base_scheme(base_name, counters, allow_mock=allow_mock, params=params)
    if kind == "frog":
        return FrogSigner.keygen(base, seed, leaves=upper_leaves_for(capacity), amortize=amortize)
    return StarSigner.keygen(base, seed, depth_for_capacity(capacity))


@dataclass
class Check:
    name: str
    ok: bool
    detail: str


@dataclass
class CostAudit:
    scheme_id: str
    capacity: int
    keygen: dict
    sign_trace: list[dict] = field(default_factory=list)
    verify_trace: list[dict] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def _stat(self, trace, key, fn):
        return fn(row[key] for row in trace) if trace else 0

    def max_sign(self, key: str) -> int:
        return self._stat(self.sign_trace, key, max)

    def mean_sign(self, key: str) -> float:
        return self._stat(self.sign_trace, key, lambda xs: statistics.fmean(list(xs)))

    def max_verify(self, key: str) -> int:
        return self._stat(self.verify_trace, key, max)

    def trace_rows(self) -> list[dict]:
        rows = []
        for s, v in zip(self.sign_trace, self.verify_trace):
            rows.append({"period": s["period"],
                         **{f"sign_{k}": s[k] for k in ("keygen", "sign", "hashes")},
                         **{f"verify_{k}": v[k] for k in ("verify", "hashes")}})
        return rows


def _check(audit: CostAudit, name: str, ok: bool, detail: str) -> None:
    audit.checks.append(Check(name, bool(ok), detail))


def run_cost_audit(scheme_id: str, capacity: int, *, seed: bytes = bytes(16), amortize: bool = True,
                   allow_mock: bool = False, params: WotsParams = DEFAULT_PARAMS,
                   check: bool = True) -> CostAudit:
    """Keygen, sign every period, verify every signature; record per-call counter deltas."""
    if not 1 <= capacity <= MAX_AUDIT_CAPACITY:
        raise ValueError(f"audit capacity must be in [1, {MAX_AUDIT_CAPACITY}]")
    counters = CostCounters()
    signer = make_signer(scheme_id, capacity, seed=seed, counters=counters, allow_mock=allow_mock,
                         params=params, amortize=amortize)
    audit = CostAudit(scheme_id, signer.capacity, counters.as_dict())
    for t in range(signer.capacity):
        message = t.to_bytes(8, "little")
        before = counters.snapshot()
        sig = signer.sign(message)
        audit.sign_trace.append({"period": sig.period, **(counters - before).as_dict()})
        before = counters.snapshot()
        accepted = signer.verify(message, sig)
        audit.verify_trace.append({"period": sig.period, "accepted": accepted, **(counters - before).as_dict()})
    if check:
        _apply_ceilings(audit, signer)
    return audit


def _apply_ceilings(audit: CostAudit, signer) -> None:
    kg = audit.keygen
    _check(audit, "all signatures verify", all(v["accepted"] for v in audit.verify_trace),
           f"{sum(v['accepted'] for v in audit.verify_trace)}/{len(audit.verify_trace)}")
    if isinstance(signer, FrogSigner):
        lg = math.ceil(math.log2(signer.leaves)) if signer.leaves > 1 else 0
        _check(audit, "keygen base keygens == 2", kg["keygen"] == 2,
               f"{kg['keygen']}")
        _check(audit, "verify base verifies == 2 at every period",
               all(v["verify"] == 2 for v in audit.verify_trace), f"max {audit.max_verify('verify')}")
        _check(audit, "sign worst case <= 3 keygens", audit.max_sign("keygen") <= 3, f"{audit.max_sign('keygen')}")
        _check(audit, "sign worst case <= 2 signs", audit.max_sign("sign") <= 2, f"{audit.max_sign('sign')}")
        _check(audit, "sign mean <= 3 keygens", audit.mean_sign("keygen") <= 3, f"{audit.mean_sign('keygen'):.3f}")
        _check(audit, "sign mean <= 2 signs", audit.mean_sign("sign") <= 2, f"{audit.mean_sign('sign'):.3f}")
        bound_ok = True
        for s, v in zip(audit.sign_trace, audit.verify_trace):
            i = (s["period"] + 1).bit_length() - 1
            bound_ok &= s["hashes"] <= lg + i + 5 and v["hashes"] <= lg + i + 5
        _check(audit, "hashes <= ceil(log2 L) + i + 5", bound_ok,
               f"max sign {audit.max_sign('hashes')}, max verify {audit.max_verify('hashes')}")
    else:
        k = signer.depth
        _check(audit, "keygen base keygens <= 5k + 2", kg["keygen"] <= 5 * k + 2, f"{kg['keygen']}")
        _check(audit, "keygen base signs <= k", kg["sign"] <= k, f"{kg['sign']}")
        _check(audit, "verify base verifies <= 2(k + 1)", audit.max_verify("verify") <= 2 * (k + 1),
               f"max {audit.max_verify('verify')}")
        _check(audit, "sign mean <= 3 keygens", audit.mean_sign("keygen") <= 3, f"{audit.mean_sign('keygen'):.3f}")
        _check(audit, "sign mean <= 2 signs", audit.mean_sign("sign") <= 2, f"{audit.mean_sign('sign'):.3f}")
        _check(audit, "sign hashes <= 2 kappa", audit.max_sign("hashes") <= 2 * KAPPA,
               f"max {audit.max_sign('hashes')}")


# --------------------------------------------------------------------------
# sizes


@dataclass
class SizeLine:
    quantity: str
    formula: int | None
    measured: int | None
    reference: int | None

    @property
    def delta_vs_reference(self) -> int | None:
        value = self.formula if self.formula is not None else self.measured
        if value is None or self.reference is None:
            return None
        return value - self.reference


@dataclass
class SizeReport:
    scheme_id: str
    lines: list[SizeLine]

    def line(self, quantity: str) -> SizeLine:
        return next(l for l in self.lines if l.quantity == quantity)


def run_size_audit(scheme_id: str, *, kappa: int = KAPPA, capacity: int = 1 << 64,
                   measure_capacity: int = 15, allow_mock: bool = True) -> SizeReport:
    """Formula, measured and reference sizes side by side.

    Formulas are evaluated at ``capacity``.  The measured column comes from a
    real signature of a small instance (``measure_capacity`` periods) for the
    public key, plus this implementation's declared worst-case signature size
    at ``capacity``.
    """
    kind, base_name = split_scheme_id(scheme_id)
    base = make_base_scheme(base_name, allow_mock=allow_mock)
    desc = base.descriptor
    ref = reference_row(scheme_id)
    signer = make_signer(scheme_id, measure_capacity, allow_mock=allow_mock)
    pk_measured = len(signer.public_key)
    sig_bytes = signer.sign(b"size audit").to_bytes()
    if kind == "frog":
        rep = frog_serialized_sizes(desc, capacity, kappa)
        declared = rep.declared_signature_max
        own = signer.declared_signature_size(0)
    else:
        rep = star_serialized_sizes(desc, depth_for_capacity(capacity), kappa)
        declared = rep.declared_signature
        own = signer.declared_signature_size(0)
    if own != len(sig_bytes):
        raise AssertionError(f"measured signature {len(sig_bytes)} != declared {own}")
    lines = [
        SizeLine("signature", rep.formula_signature, declared, ref.signature if ref else None),
        SizeLine("public_key", rep.formula_public_key, pk_measured, ref.public_key if ref else None),
        SizeLine("private_key", rep.formula_private_key, None, ref.private_key if ref else None),
        SizeLine(f"signature_small_instance({signer.capacity})", None, len(sig_bytes), None),
    ]
    return SizeReport(scheme_id, lines)


# --------------------------------------------------------------------------
# timing


@dataclass
class TimingReport:
    scheme_id: str
    capacity: int
    repetitions: int
    medians: dict[str, float]
    reference: ReferenceRow | None


def run_timing(scheme_id: str, capacity: int = 15, repetitions: int = 5, *,
               allow_mock: bool = False) -> TimingReport:
    keygen, sign, verify = [], [], []
    for r in range(max(1, repetitions)):
        seed = r.to_bytes(16, "little")
        t0 = time.perf_counter()
        signer = make_signer(scheme_id, capacity, seed=seed, allow_mock=allow_mock)
        t1 = time.perf_counter()
        sig = signer.sign(b"timing")
        t2 = time.perf_counter()
        signer.verify(b"timing", sig)
        t3 = time.perf_counter()
        keygen.append(t1 - t0)
        sign.append(t2 - t1)
        verify.append(t3 - t2)
    medians = {"keygen": statistics.median(keygen), "sign": statistics.median(sign),
               "verify": statistics.median(verify)}
    return TimingReport(scheme_id, signer.capacity, repetitions, medians, reference_row(scheme_id))


# --------------------------------------------------------------------------
# rendering


def _table(header: list[str], rows: list[list], fmt: str) -> str:
    if fmt == "csv":
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return out.getvalue()
    cells = [[("" if c is None else f"{c:,}" if isinstance(c, int) and not isinstance(c, bool) else str(c))
              for c in row] for row in [header, *rows]]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) if j else c.ljust(w) for j, (c, w) in enumerate(zip(r, widths))) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def render_cost(audit: CostAudit, fmt: str = "table", trace: bool = False) -> str:
    head = [["keygen", audit.keygen["keygen"], audit.keygen["sign"], audit.keygen["tree_keygen"]],
            ["sign (max)", audit.max_sign("keygen"), audit.max_sign("sign"), audit.max_sign("tree_keygen")],
            ["sign (mean)", f"{audit.mean_sign('keygen'):.3f}", f"{audit.mean_sign('sign'):.3f}",
             f"{audit.mean_sign('tree_keygen'):.3f}"],
            ["verify (max)", audit.max_verify("verify"), "", ""]]
    text = _table(["phase", "base_keygen", "base_sign|verify", "structural_keygen"], head, fmt)
    text += _table(["check", "result", "value"],
                   [[c.name, "PASS" if c.ok else "FAIL", c.detail] for c in audit.checks], fmt)
    if trace:
        rows = audit.trace_rows()
        if rows:
            text += _table(list(rows[0]), [list(r.values()) for r in rows], fmt)
    return text


def render_sizes(report: SizeReport, fmt: str = "table") -> str:
    rows = [[l.quantity, l.formula, l.measured, l.reference, l.delta_vs_reference] for l in report.lines]
    return _table(["quantity", "formula", "measured", "reference", "formula-reference"], rows, fmt)


def render_timing(report: TimingReport, fmt: str = "table") -> str:
    ref = report.reference
    rows = []
    for phase in ("keygen", "sign", "verify"):
        cycles = getattr(ref, f"{phase}_cycles") if ref else None
        rows.append([phase, f"{report.medians[phase] * 1e3:.3f}", cycles])
    text = _table(["phase", "median_ms", "reference_cycles"], rows, fmt)
    if fmt != "csv":
        text += ("informational only: reference cycles were measured on other hardware with native code "
                 "and are not comparable to these Python timings\n")
    return text


def render_reference(fmt: str = "table") -> str:
    rows = [[r.scheme, r.keygen_cycles, r.sign_cycles, r.verify_cycles, r.signature, r.public_key, r.private_key]
            for r in REFERENCE_ROWS]
    return _table(["scheme", "keygen_cycles", "sign_cycles", "verify_cycles", "sig_B", "pk_B", "sk_B"], rows, fmt)

