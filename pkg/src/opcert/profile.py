"""The explicit profile derivative on the reference interval [-1, 1].

The derivative of the patch profile enters every integral only through the
scaled combination g = (a/2) f_rho, expressed in the normalized coordinate
rho_t = (2/a)(rho - 1) + 1.  On [-1, 1] it is piecewise: a degree-9
polynomial ramp on [-1, -1+beta], the constant -1/2 on [-1+beta, 1-beta],
and a mirrored ramp on [1-beta, 1].  The ramps are monotone, which licenses
range evaluation by endpoint hull; monotonicity is checked by sign-testing a
factored closed form of the ramp slope.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .interval import (
    Interval,
    IntervalDomainError,
    IntervalVec,
    Jet4,
    _mk,
    _vmk,
)


class RegionTag(enum.IntEnum):
    LEFT_RAMP = 0
    MIDDLE = 1
    RIGHT_RAMP = 2


NEG_HALF = Interval(-0.5)


class Profile:
    """Scaled profile derivative and coordinate maps for parameters (a, beta).

    ``beta`` must be a representable point value (default 2**-8) so that the
    region joints -1+beta and 1-beta are exact doubles.
    """

    def __init__(self, a: Interval, beta: Interval):
        if beta.lo != beta.hi:
            raise IntervalDomainError("beta must be a point interval")
        self.a = a
        self.beta = beta
        self.beta_f = beta.lo
        self.left_join = -1.0 + self.beta_f
        self.right_join = 1.0 - self.beta_f
        b = beta
        self.c_left = (Interval(126) * b.pow_int(4), Interval(-420) * b.pow_int(3),
                       Interval(540) * b.pow_int(2), Interval(-315) * b, Interval(70))
        self.c_right = (Interval(126) * b.pow_int(4), Interval(420) * b.pow_int(3),
                        Interval(540) * b.pow_int(2), Interval(315) * b, Interval(70))
        self.inv_two_beta9 = 1 / (b.pow_int(9) * 2)

    # -- coordinate maps -----------------------------------------------------

    def to_rho(self, rho_t):
        """rho = 1 + (a/2)(rho_t - 1)."""
        return (self.a * 0.5) * (rho_t - 1) + 1

    def to_rho_t(self, rho):
        """rho_t = (2/a)(rho - 1) + 1."""
        return (rho - 1) * (2 / self.a) + 1

    # -- region handling -------------------------------------------------------

    def region_bounds(self, region: RegionTag):
        if region == RegionTag.LEFT_RAMP:
            return -1.0, self.left_join
        if region == RegionTag.MIDDLE:
            return self.left_join, self.right_join
        return self.right_join, 1.0

    def classify(self, rho_t: Interval) -> set:
        """Every region the interval intersects; error outside [-1, 1]."""
        if rho_t.lo < -1.0 or rho_t.hi > 1.0:
            raise IntervalDomainError(f"rho_t outside [-1, 1]: {rho_t}")
        out = set()
        for region in RegionTag:
            lo, hi = self.region_bounds(region)
            if rho_t.hi >= lo and rho_t.lo <= hi:
                out.add(region)
        return out

    # -- the scaled derivative (a/2) f_rho -------------------------------------

    def _ramp_point(self, y, region: RegionTag):
        """Ramp value at a point/jet payload y (no monotonicity shortcut)."""
        if region == RegionTag.LEFT_RAMP:
            t = y + 1
            c = self.c_left
            sign = -1.0
        else:
            t = y - 1
            c = self.c_right
            sign = 1.0
        p = ((((c[4] * t + c[3]) * t + c[2]) * t + c[1]) * t) + c[0]
        return p * t.pow_int(5) * (self.inv_two_beta9 * sign)

    def f_rho_scaled(self, rho_t, region: RegionTag):
        """Enclosure of (a/2) f_rho over ``rho_t`` inside ``region``.

        Interval ranges use the endpoint-hull shortcut (the branches are
        monotone); jets evaluate the polynomial directly.
        """
        if region == RegionTag.MIDDLE:
            return NEG_HALF
        if isinstance(rho_t, Interval):
            lo, hi = self.region_bounds(region)
            if rho_t.lo < lo or rho_t.hi > hi:
                raise IntervalDomainError(
                    f"rho_t {rho_t} not inside region {region.name}")
            a = self._ramp_point(_mk(rho_t.lo, rho_t.lo), region)
            b = self._ramp_point(_mk(rho_t.hi, rho_t.hi), region)
            return a.hull(b)
        if isinstance(rho_t, IntervalVec):
            a = self._ramp_point(_vmk(rho_t.lo, rho_t.lo.copy()), region)
            b = self._ramp_point(_vmk(rho_t.hi, rho_t.hi.copy()), region)
            return a.hull(b)
        if isinstance(rho_t, Jet4):
            return self._ramp_point(rho_t, region)
        raise TypeError(f"unsupported payload {type(rho_t)!r}")

    def f_rho_scaled_auto(self, rho_t: Interval) -> Interval:
        """Range enclosure over an interval that may span several regions.

        Valid because the branches agree at the joints, so the range over a
        union of pieces is the hull of the per-piece ranges.
        """
        out = None
        for region in self.classify(rho_t):
            lo, hi = self.region_bounds(region)
            piece = _mk(max(rho_t.lo, lo), min(rho_t.hi, hi))
            val = self.f_rho_scaled(piece, region)
            out = val if out is None else out.hull(val)
        return out

    def ramp_slope(self, t: Interval, region: RegionTag) -> Interval:
        """d/d rho_t of the ramp, in the factored form 630 t^4 (beta -+ t)^4.

        ``t`` is the local coordinate (1 + rho_t on the left ramp, rho_t - 1
        on the right).  The factorization is an exact polynomial identity
        (asserted in the test suite), and makes the sign evident.
        """
        if region == RegionTag.LEFT_RAMP:
            inner = (self.beta - t).pow_int(4)
            sign = -1.0
        elif region == RegionTag.RIGHT_RAMP:
            inner = (self.beta + t).pow_int(4)
            sign = 1.0
        else:
            return Interval(0.0)
        return t.pow_int(4) * inner * (self.inv_two_beta9 * (630.0 * sign))

    def verify_ramp_monotonicity(self) -> bool:
        """Sign-check the slope enclosures once, licensing the endpoint hull."""
        left = self.ramp_slope(_mk(0.0, self.beta_f), RegionTag.LEFT_RAMP)
        right = self.ramp_slope(_mk(-self.beta_f, 0.0), RegionTag.RIGHT_RAMP)
        return left.hi <= 0.0 and right.hi <= 0.0

    def bsj(self) -> "BsjProfile":
        return BsjProfile(self)


@dataclass(frozen=True)
class BsjProfile:
    """The normalized indicator-style bump supported on the middle region.

    Height 1/sqrt(a - a*beta) over [-1+beta, 1-beta] in normalized
    coordinates; unit L2 norm in the physical variable.
    """

    profile: Profile

    @property
    def height(self) -> Interval:
        a, b = self.profile.a, self.profile.beta
        return 1 / (a - a * b).sqrt()

    @property
    def support(self):
        return self.profile.left_join, self.profile.right_join

    def value_over(self, cell: Interval) -> Interval:
        """Range of the bump over a cell (a.e. value; jumps hull with 0)."""
        lo, hi = self.support
        h = self.height
        if cell.lo >= lo and cell.hi <= hi:
            return h
        if cell.hi <= lo or cell.lo >= hi:
            return Interval(0.0)
        return h.hull(Interval(0.0))

    def is_cell_aligned(self, n: int) -> bool:
        """True if the support endpoints sit exactly on the n-cell grid."""
        from .quadrature import uniform_grid

        xs = uniform_grid(n)
        return self.support[0] in xs and self.support[1] in xs


def default_profile() -> Profile:
    """Parameters fixed by the main statement: a = 0.05, beta = 2/512."""
    return Profile(Interval.parse("0.05"), Interval(2.0 ** -8))
