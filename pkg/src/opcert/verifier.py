"""Certificate composition: re-establishing the inequality chain.

Everything here is pure interval arithmetic on a handful of named input
enclosures produced by the sweeps (grid norms, the multiplier minimum, the
Gershgorin bounds, the operator-norm defects).  Each record stores the
freshly certified enclosure next to the published constant it is checked
against, so drift between the two is reported, never silently reconciled.
No bare float ever enters a comparison: inputs are intervals end to end.

Composition is monotone by construction: widening any input enclosure can
only turn PASS into FAIL.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from typing import Optional

from .interval import Interval, _mk
from .operators import LAMBDA_6_APROX, LAMBDA_STAR


@dataclass(frozen=True)
class CertificateInputs:
    """Named enclosures feeding the certificate; all intervals."""

    min_itilde: Interval
    e_norm: Interval
    e_dot_bump: Interval
    theta_a_norm: Interval
    e6_norm: Interval
    gersh3: Interval
    gersh6: Interval
    defect3: Interval
    defect6: Interval
    bump_norm_sq: Interval
    lambda_star: Interval = LAMBDA_STAR
    lambda6_aprox: Interval = LAMBDA_6_APROX

    def widened(self, name: str, fraction: float = 0.10) -> "CertificateInputs":
        """Copy with one input enclosure widened symmetrically."""
        iv = getattr(self, name)
        pad = 0.5 * fraction * (iv.hi - iv.lo)
        return dataclasses.replace(self, **{name: _mk(iv.lo - pad, iv.hi + pad)})


@dataclass
class Record:
    name: str
    certified: Optional[Interval]
    paper_bound: float
    direction: str  # '<', '>' : the side the certified value must clear
    passed: bool
    inputs: dict = field(default_factory=dict)
    note: str = ""


@dataclass
class CertificateReport:
    records: list
    global_pass: bool
    provenance: dict = field(default_factory=dict)

    def record(self, name: str) -> Record:
        for r in self.records:
            if r.name == name:
                return r
        raise KeyError(name)


def _upper(name, value: Interval, bound: float, inputs, note="",
           strict=True) -> Record:
    ok = value is not None and (value.hi < bound if strict
                                else value.hi <= bound)
    return Record(name, value, bound, "<" if strict else "<=", ok, inputs, note)


def _lower(name, value: Interval, bound: float, inputs, note="",
           strict=True) -> Record:
    ok = value is not None and (value.lo > bound if strict
                                else value.lo >= bound)
    return Record(name, value, bound, ">" if strict else ">=", ok, inputs, note)


def vertex_lemma(a: Interval, b: Interval, c: Interval) -> Optional[Interval]:
    """Certified root bound for h(x) = a - x + b/(c - x).

    If c > a + 2 sqrt(b) holds rigorously, returns an enclosure of
    (c + a)/2 - sqrt(((c - a)/2)^2 - b), which bounds from above the first
    root of h below c; otherwise returns None.
    """
    if a.lo <= 0 or b.lo < 0 or c.lo <= 0:
        return None
    if not c.lo > (a + b.sqrt() * 2).hi:
        return None
    disc = ((c - a) * 0.5).pow_int(2) - b
    if disc.lo < 0:
        return None  # outward rounding ate the gap; refuse conservatively
    return (c + a) * 0.5 - disc.sqrt()


def certify_ABC(inp: CertificateInputs):
    """Records for the two quadratic-bound constants.

    A = lambda* + |<e, bump>| / ||bump||^2 and sqrt(B) <= ||e|| + ||T_A bump||
    (triangle bound; the product form is never smaller than needed).
    """
    a_val = inp.lambda_star + inp.e_dot_bump / inp.bump_norm_sq
    sqrt_b = (inp.e_norm + inp.theta_a_norm) / inp.bump_norm_sq.sqrt()
    rec_a = _upper("A_bound", a_val, 0.3583,
                   {"lambda_star": inp.lambda_star,
                    "e_dot_bump": inp.e_dot_bump,
                    "bump_norm_sq": inp.bump_norm_sq})
    rec_b = _upper("sqrtB_bound", sqrt_b, 0.1534,
                   {"e_norm": inp.e_norm, "theta_a_norm": inp.theta_a_norm,
                    "bump_norm_sq": inp.bump_norm_sq})
    return rec_a, rec_b, a_val, sqrt_b


def certify_cstar(m: int, inp: CertificateInputs):
    """Coercivity constant: min multiplier + Gershgorin - defect."""
    if m == 3:
        gersh, defect, bound, strict = inp.gersh3, inp.defect3, 0.8526, False
    else:
        gersh, defect, bound, strict = inp.gersh6, inp.defect6, 0.8355, True
    cstar = inp.min_itilde + gersh - defect
    rec = _lower(f"cstar_m{m}", cstar, bound,
                 {"min_itilde": inp.min_itilde, f"gersh{m}": gersh,
                  f"defect{m}": defect},
                 note="lower bound is certified; true constant is >= it",
                 strict=strict)
    return rec, cstar


def certify_lambda6(inp: CertificateInputs, cstar6: Interval):
    """Spectral infimum for the m=6 operator: needs the gap hypothesis."""
    gate = cstar6.lo > inp.lambda6_aprox.hi
    bound = inp.lambda6_aprox - inp.e6_norm
    rec = _lower("lambda6_s", bound if gate else None, 0.4837,
                 {"lambda6_aprox": inp.lambda6_aprox, "e6_norm": inp.e6_norm,
                  "cstar_m6": cstar6},
                 note=("gap hypothesis cstar6 > lambda6_aprox "
                       + ("holds" if gate else "FAILS")))
    if not gate:
        rec.passed = False
    return rec


def certify_transversality_chain(inp: CertificateInputs, a_val: Interval,
                                 sqrt_b: Interval, cstar: Interval,
                                 lambda0: Optional[Interval]):
    """The positivity chain behind the adjoint-pairing argument.

    Recomputes, in intervals, the gap c* - lambda0 and the three negative
    correction terms, and certifies that their sum is positive along with
    the discriminant gate (c* - A)/2 > sqrt(B).  The published intermediate
    constants are compared and reported in the note; the third one
    (-0.013) is not attainable from the certified inputs (the faithful
    recomputation gives about -0.063), which does not affect positivity.
    """
    if lambda0 is None or cstar is None:
        return Record("transversality_chain", None, 0.0, ">", False,
                      note="missing lambda0 or cstar"), None
    bn2 = inp.bump_norm_sq
    gap = cstar - lambda0
    q = sqrt_b / (gap * bn2)
    term1 = q.pow_int(2) * (inp.lambda_star - lambda0) * bn2
    term2 = -(q.pow_int(2) * inp.e_dot_bump)
    term3 = -(q * inp.e_norm * 2)
    total = gap + term1 + term2 + term3
    gate = (cstar - a_val).lo * 0.5 > sqrt_b.hi
    published = ((0.4409, gap.lo >= 0.4409), (-0.01, term1.lo >= -0.01),
                 (-0.002, term2.lo >= -0.002), (-0.013, term3.lo >= -0.013))
    note = ("terms " + ", ".join(
        f"{v:+g}:{'ok' if ok else 'MISSED'}" for v, ok in published)
        + f"; discriminant gate {'holds' if gate else 'FAILS'}")
    rec = Record("transversality_chain", total, 0.0, ">",
                 total.lo > 0.0 and gate,
                 {"gap": gap, "term1": term1, "term2": term2, "term3": term3},
                 note=note)
    return rec, total


def compose_certificate(inp: CertificateInputs,
                        provenance: dict = None) -> CertificateReport:
    """Pure-arithmetic composition of every certified inequality."""
    t0 = time.time()
    records = [
        _lower("min_itilde", inp.min_itilde, 1.2655,
               {"min_itilde": inp.min_itilde}),
        _upper("e_norm", inp.e_norm, 0.0905, {"e_norm": inp.e_norm}),
        _upper("e_dot_bump", inp.e_dot_bump, 0.0101,
               {"e_dot_bump": inp.e_dot_bump}),
        _upper("theta_a3_norm", inp.theta_a_norm, 0.0629,
               {"theta_a_norm": inp.theta_a_norm}),
        _upper("e6_norm", inp.e6_norm, 0.0893, {"e6_norm": inp.e6_norm}),
        _lower("gershgorin_m3", inp.gersh3, -0.3125, {"gersh3": inp.gersh3}),
        _lower("gershgorin_m6", inp.gersh6, -0.3121, {"gersh6": inp.gersh6}),
        _upper("defect_m3", inp.defect3, 0.1004, {"defect3": inp.defect3},
               strict=False),
        _upper("defect_m6", inp.defect6, 0.1179, {"defect6": inp.defect6},
               strict=False),
    ]
    rec_a, rec_b, a_val, sqrt_b = certify_ABC(inp)
    rec_c3, cstar3 = certify_cstar(3, inp)
    rec_c6, cstar6 = certify_cstar(6, inp)
    records += [rec_a, rec_b, rec_c3, rec_c6]

    b_val = sqrt_b.pow_int(2)
    lambda0 = vertex_lemma(a_val, b_val, cstar3)
    rec_l0 = _upper("lambda0", lambda0, 0.4117,
                    {"A": a_val, "B": b_val, "cstar_m3": cstar3},
                    note="absent means the vertex hypothesis failed")
    if lambda0 is None:
        rec_l0.passed = False
    records.append(rec_l0)

    records.append(certify_lambda6(inp, cstar6))

    if lambda0 is not None:
        gap_i = inp.min_itilde - lambda0
        cleared = [b for b in (0.8526, 0.8538) if gap_i.lo > b]
        rec_gap = _lower("itilde_minus_lambda0", gap_i, 0.8526,
                         {"min_itilde": inp.min_itilde, "lambda0": lambda0},
                         note=f"clears published constants: {cleared}")
    else:
        rec_gap = Record("itilde_minus_lambda0", None, 0.8526, ">", False,
                         note="lambda0 unavailable")
    records.append(rec_gap)

    rec_tr, _ = certify_transversality_chain(inp, a_val, sqrt_b, cstar3,
                                             lambda0)
    records.append(rec_tr)

    global_pass = all(r.passed for r in records)
    prov = dict(provenance or {})
    prov["compose_seconds"] = time.time() - t0
    return CertificateReport(records, global_pass, prov)


# ---------------------------------------------------------------------------
# Report serialization
# ---------------------------------------------------------------------------


def _fmt_iv(iv: Optional[Interval]) -> str:
    if iv is None:
        return "[absent]"
    return f"[{iv.lo!r}, {iv.hi!r}]"


def format_certificate(report: CertificateReport) -> str:
    lines = ["# certificate report"]
    for key, val in sorted(report.provenance.items()):
        lines.append(f"# {key} = {val}")
    for r in report.records:
        lines.append(
            f"{r.name} certified={_fmt_iv(r.certified)} "
            f"paper{r.direction}{r.paper_bound!r} "
            f"{'PASS' if r.passed else 'FAIL'}")
        for k, v in r.inputs.items():
            lines.append(f"    input {k} = {_fmt_iv(v)}")
        if r.note:
            lines.append(f"    note: {r.note}")
    lines.append("# summary")
    n_pass = sum(r.passed for r in report.records)
    lines.append(f"passed {n_pass} of {len(report.records)} records")
    lines.append(f"GLOBAL {'PASS' if report.global_pass else 'FAIL'}")
    return "\n".join(lines) + "\n"


def write_certificate(path, report: CertificateReport):
    with open(path, "w") as f:
        f.write(format_certificate(report))


def parse_certificate_summary(text: str) -> bool:
    for line in text.splitlines():
        if line.startswith("GLOBAL"):
            return line.split()[1] == "PASS"
    raise ValueError("no GLOBAL line in certificate")
