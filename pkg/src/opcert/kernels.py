"""Rigorous enclosures of the elliptic-integral kernels for m = 1, 3, 6.

Each raw kernel

    M_m(r) = integral over [-pi, pi] of cos(m x) / sqrt(1 + r^2 - 2 r cos x)

splits, with u = (1 - r)/(1 + r), into

    M_m = ho_ns + (4/(1+r)) asinh(1/|u|) + E_ns + E_s asinh(1/|u|),

where ho_ns is an explicit smooth expression, |E_ns| <= e_ns_radius and
|E_s| <= e_s_coeff with both radii O(u^2).  The closed forms are transcribed
without algebraic simplification and evaluated in interval arithmetic; the
singular factor asinh(1/|u|) is never evaluated here when u may contain 0 --
cells touching the diagonal are routed to the closed-form singular
integrator (``arcsinh_weight_integral``).

All formulas depend on u only through u^2, so they serve both kernel
orientations (r and 1/r) unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

from .interval import Interval, IntervalDomainError, TWO_PI, _mk

ONE = Interval(1.0)
TWO = Interval(2.0)
SQRT2 = TWO.sqrt()
LOG2 = TWO.log()
ASINH1 = Interval(1.0).asinh()

# "u small" guard: the positivity arguments behind the error-term derivations
# need |u| small; u^2 < 1/66 is sufficient for all three kernels.
U2_GUARD = (ONE / 66).lo


class KernelGuardError(IntervalDomainError):
    """Kernel evaluated outside its validity guard (flags the computation)."""


def u_of(r):
    """u = (1 - r)/(1 + r); requires r > 0."""
    return (1 - r) / (r + 1)


def _check_r(r):
    lo = r.lo if isinstance(r, Interval) else r.lo.min()
    if lo <= 0.0:
        raise IntervalDomainError("kernel requires r > 0")


def _check_guard(u2):
    hi = u2.hi if isinstance(u2, Interval) else u2.hi.max()
    if hi >= U2_GUARD:
        raise KernelGuardError(f"u^2 = {hi} outside guard < 1/66")


# -- m = 1 -------------------------------------------------------------------


def hons_1(r, u2):
    v = u2 + 1
    sv = v.sqrt()
    u4 = u2.pow_int(2)
    inner = (((sv + 1) * 0.5).log() / SQRT2
             + ((sv - 1) * ASINH1 + LOG2 - 2) / sv
             + u2 * (SQRT2 * -2 + ASINH1 * 2.5)
             - u4 * ((SQRT2 - ASINH1 * 3) * (Interval(3) / 16)))
    return inner * (4 / (r + 1))


def ens_1(r, u2):
    v = u2 + 1
    sv = v.sqrt()
    u4 = u2.pow_int(2)
    inner = (u4 * (Interval(9) / 4)
             + u2 * (Interval(5) / 8) * (SQRT2 - 2 / sv - ASINH1 * 2).abs())
    return inner * (4 / (r + 1))


# -- m = 3 -------------------------------------------------------------------


def hons_3(r, u2):
    v = u2 + 1
    sv = v.sqrt()
    v52 = v.pow_int(2) * sv
    u4 = u2.pow_int(2)
    u6 = u2.pow_int(3)
    inner = (Interval(-46) / 15 / v52
             - u6 * (SQRT2 * 13 - ASINH1 * 15) / 48
             + ASINH1
             - ASINH1 / v52
             + u4 * (Interval(-15) / 4 / SQRT2 - 2 / v52 + ASINH1 * (Interval(45) / 8))
             + u2 * (SQRT2 * -45 + 8 / v52 + ASINH1 * 45) / 6
             + LOG2 / v52
             + ((sv + 1) * 0.5).log() / (SQRT2 * 4))
    return inner * (4 / (r + 1))


def ens_3(r, u2):
    v = u2 + 1
    sv = v.sqrt()
    v32 = v * sv
    v52 = v.pow_int(2) * sv
    g0ns = (Interval(73) / 30 / SQRT2 - 2 / sv - (Interval(2) / 3) / v32
            - (Interval(2) / 5) / v52 - ASINH1 * 2)
    inner = (u2 * 5
             + u2 / 240 * (SQRT2 * -7 - 24 / v52 + 40 / v32).abs()
             + u2 * (Interval(3) / 16) * (8 / v52 - SQRT2).abs()
             + u2 * (Interval(37) / 8) * g0ns.abs())
    return inner * (4 / (r + 1))


# -- m = 6 -------------------------------------------------------------------


def hons_6(r, u2):
    v = u2 + 1
    sv = v.sqrt()
    v112 = v.pow_int(5) * sv
    u4 = u2.pow_int(2)
    u6 = u2.pow_int(3)
    u8 = u2.pow_int(4)
    u10 = u2.pow_int(5)
    u12 = u2.pow_int(6)
    poly = u2 * (u4 * (u2 * 945 - 2268) + u2 * 3366 - 604) * 11 + 1627
    inner = (ASINH1
             + u2 * 33 * (ASINH1 - SQRT2)
             - u4 * (Interval(495) / 8) * (SQRT2 - ASINH1 * 3)
             - u6 * (Interval(77) / 4) * (SQRT2 * 13 - ASINH1 * 15)
             - u8 * (Interval(165) / 128) * (SQRT2 * 43 - ASINH1 * 105)
             - u10 * (Interval(33) / 640) * (SQRT2 * 257 - ASINH1 * 315)
             - u12 * (Interval(7) / 15360) * (SQRT2 * 221 - ASINH1 * 495)
             - poly * (Interval(8) / 3465) / v112
             + (LOG2 - ASINH1) / v112
             + ((sv + 1) * 0.5).log() / (SQRT2 * 32))
    return inner * (4 / (r + 1))


def ens_6(r, u2):
    v = u2 + 1
    sv = v.sqrt()
    v32 = v * sv
    v52 = v.pow_int(2) * sv
    v72 = v.pow_int(3) * sv
    v92 = v.pow_int(4) * sv
    v112 = v.pow_int(5) * sv
    u4 = u2.pow_int(2)
    u6 = u2.pow_int(3)
    u8 = u2.pow_int(4)
    h0ns = (Interval(137969) / 55440 / SQRT2
            - (Interval(2) / 11) / v112 - (Interval(2) / 9) / v92
            - (Interval(2) / 7) / v72 - (Interval(2) / 5) / v52
            - (Interval(2) / 3) / v32 - 2 / sv - ASINH1 * 2)
    inner = (u2 * (Interval(77) / 2)
             + (u2 / 443520) * ((u8 * 73920 + u6 * 118272 + u4 * 101376
                                 + u2 * 45056 + 8192) / v112 - SQRT2 * 5419).abs()
             + (u2 / 2240) * ((u6 * 14784 + u4 * 12672 + u2 * 5632 + 1024) / v112
                              - SQRT2 * 533).abs()
             + u2 * (Interval(5) / 896) * ((u4 * 6336 + u2 * 2816 + 512) / v112
                                           - SQRT2 * 151).abs()
             + u2 * (Interval(7) / 96) * (SQRT2 * -13 - 576 / v112 + 704 / v92).abs()
             + u2 * (Interval(45) / 128) * (64 / v112 - SQRT2).abs()
             + u2 * (Interval(143) / 8) * h0ns.abs())
    return inner * (4 / (r + 1))


_HONS = {1: hons_1, 3: hons_3, 6: hons_6}
_ENS = {1: ens_1, 3: ens_3, 6: ens_6}
# coefficient of u^2 * (4/(1+r)) in the singular error term
_ES_C = {1: Interval(5) / 4, 3: Interval(37) / 4, 6: Interval(143) / 4}


def hons(m, r, u2):
    return _HONS[m](r, u2)


def ens_radius(m, r, u2):
    return _ENS[m](r, u2)


def hos_coeff(r):
    """Coefficient of asinh(1/|u|) in the higher-order singular part."""
    return 4 / (r + 1)


def es_coeff(m, r, u2):
    """Radius of the singular error coefficient (multiplies asinh(1/|u|))."""
    return (4 / (r + 1)) * _ES_C[m] * u2


# -- assembled kernel enclosures ----------------------------------------------


@dataclass(frozen=True)
class KernelEnclosure:
    """Four-part kernel value.

    The true integral lies in

        ho_ns + ho_s_coeff * asinh(1/|u|)
              + [-e_ns_radius, e_ns_radius]
              + [-e_s_coeff, e_s_coeff] * asinh(1/|u|).
    """

    ho_ns: Interval
    ho_s_coeff: Interval
    e_ns_radius: Interval
    e_s_coeff: Interval

    def scale(self, factor: Interval) -> "KernelEnclosure":
        fabs = factor.abs()
        return KernelEnclosure(self.ho_ns * factor, self.ho_s_coeff * factor,
                               self.e_ns_radius * fabs, self.e_s_coeff * fabs)

    def reconstruct(self, r: Interval) -> Interval:
        """Pointwise enclosure of the kernel; requires 1 not in r."""
        u = u_of(r)
        if u.lo <= 0.0 <= u.hi:
            raise IntervalDomainError(
                "u contains 0: singular cell, use the singular integrator")
        s = (1 / u.abs()).asinh()
        ens = self.e_ns_radius.hi
        es = (self.e_s_coeff * s).hi
        return (self.ho_ns + self.ho_s_coeff * s
                + _mk(-ens, ens) + _mk(-es, es))


def _kernel(m, r: Interval) -> KernelEnclosure:
    _check_r(r)
    u2 = u_of(r).pow_int(2)
    _check_guard(u2)
    return KernelEnclosure(hons(m, r, u2), hos_coeff(r),
                           ens_radius(m, r, u2), es_coeff(m, r, u2))


def kernel_I(r: Interval) -> KernelEnclosure:
    return _kernel(1, r)


def kernel_J(r: Interval) -> KernelEnclosure:
    return _kernel(3, r)


def kernel_L(r: Interval) -> KernelEnclosure:
    return _kernel(6, r)


def K_m(r: Interval, m: int) -> KernelEnclosure:
    """Normalized kernel: the raw integral scaled by 1/(2 pi r)."""
    return _kernel(m, r).scale(1 / (TWO_PI * r))


# -- closed-form integral of the singular weight -------------------------------


def _xlogabs(x: Interval) -> Interval:
    """Enclosure of t log|t| over x, with the value 0 at t = 0.

    The function has extrema -1/e at t = 1/e and +1/e at t = -1/e; the range
    over an interval is the hull of the endpoint values and any enclosed
    extremum.
    """

    def at_point(t: float) -> Interval:
        if t == 0.0:
            return Interval(0.0)
        p = _mk(t, t)
        return p * p.abs().log()

    out = at_point(x.lo).hull(at_point(x.hi))
    inv_e = (-ONE).exp()  # enclosure of 1/e
    if x.lo < inv_e.hi and x.hi > inv_e.lo:
        out = out.hull(-inv_e)
    if x.lo < -inv_e.lo and x.hi > -inv_e.hi:
        out = out.hull(inv_e)
    return out


def arcsinh_weight_integral(c: float, d: float, rho_t: Interval,
                            a: Interval) -> Interval:
    """Exact integral of the singular weight over [c, d]:

        integral_c^d asinh(|rho_t + y - 2 + 4/a| / |rho_t - y|) dy,

    via the closed-form antiderivative, using the log-based display that
    stays finite when c or d touches rho_t (the (c - rho_t) log|c - rho_t|
    terms extend by 0 at coincidence).  Inputs must satisfy
    -1 <= c <= d <= 1.
    """
    if not (-1.0 <= c <= d <= 1.0):
        raise IntervalDomainError(f"need -1 <= c <= d <= 1, got [{c}, {d}]")
    if c == d:
        return Interval(0.0)
    rho = rho_t
    four_over_a = 4 / a

    def lin(x: Interval) -> Interval:
        return four_over_a + (x + rho - 2)

    def big(x: Interval) -> Interval:
        return (a * (x + rho - 2) * 4 + 8
                + a.pow_int(2) * ((x - 2) * x + (rho - 2) * rho + 2))

    def endpoint(x_f: float, sign: float) -> Interval:
        x = _mk(x_f, x_f)
        l = lin(x)
        arg = l + ((x - rho).pow_int(2) + l.pow_int(2)).sqrt()
        if arg.lo <= 0.0:
            raise IntervalDomainError("log argument not positive")
        return (x * arg.log() - _xlogabs(x - rho)) * sign

    c_iv = _mk(c, c)
    d_iv = _mk(d, d)
    big_c = big(c_iv)
    big_d = big(d_iv)
    if big_c.lo <= 0.0 or big_d.lo <= 0.0:
        raise IntervalDomainError("square-root argument not positive")
    sq_c = big_c.sqrt()
    sq_d = big_d.sqrt()

    num1 = a * (c_iv - 1) + 2 + sq_c
    den1 = a * (d_iv - 1) + 2 + sq_d
    num2 = a * (c_iv + rho - 2) + 4 + SQRT2 * sq_c
    den2 = a * (d_iv + rho - 2) + 4 + SQRT2 * sq_d
    for q in (num1, den1, num2, den2):
        if q.lo <= 0.0:
            raise IntervalDomainError("log argument not positive")

    total = (endpoint(c, -1.0) + endpoint(d, 1.0)
             + (SQRT2 / a) * (a - a * rho - 2) * (num1 / den1).log()
             + rho * (num2 / den2).log())
    # the integrand is >= asinh((4/a - 4)/2) > 0, so the integral over a
    # nonempty range is nonnegative
    return _mk(max(total.lo, 0.0), max(total.hi, 0.0))
