"""Directed-rounding interval arithmetic.

Three value carriers share one arithmetic protocol so that a formula written
once runs in all three modes:

* ``Interval``     -- a scalar interval [lo, hi] of doubles,
* ``IntervalVec``  -- a batch of intervals backed by numpy arrays,
* ``Jet4``         -- a degree-4 Taylor jet whose coefficients are intervals
  (scalar or vectorized); ``24 * c[4]`` encloses the 4th derivative over the
  base interval.

Every operation returns an enclosure of the exact result set: endpoints are
rounded outward after each primitive operation, so containment survives
double precision.  Transcendental functions are evaluated at endpoints using
monotonicity and padded outward.  Tightness is not part of the contract,
containment is.
"""

from __future__ import annotations

import math

import numpy as np

_INF = math.inf

# Factor covering >= 1 ulp for normal doubles; used for fast outward padding
# of numpy arrays (scalars use math.nextafter, which is exactly 1 ulp).
_EPS_UP = 2.0 ** -52
_TINY = 5e-324
# Extra padding (in ulps) for libm transcendentals, which are faithful but
# not correctly rounded.
_LIBM_ULPS = 2


class IntervalError(ValueError):
    """Malformed interval (NaN endpoint or lo > hi)."""


class IntervalDomainError(IntervalError):
    """Operand outside the domain of the requested operation."""


def _mk(lo, hi):
    """Internal constructor bypassing validation (endpoints known good)."""
    iv = Interval.__new__(Interval)
    iv.lo = lo
    iv.hi = hi
    return iv


def _down(x):
    return math.nextafter(x, -_INF)


def _up(x):
    return math.nextafter(x, _INF)


def _down_k(x, k):
    for _ in range(k):
        x = math.nextafter(x, -_INF)
    return x


def _up_k(x, k):
    for _ in range(k):
        x = math.nextafter(x, _INF)
    return x


class Interval:
    """Closed real interval with outward-rounded endpoints.

    Construction with NaN endpoints or lo > hi raises ``IntervalError``.
    ``Interval(x)`` gives the point interval [x, x].
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        if hi is None:
            hi = lo
        lo = float(lo)
        hi = float(hi)
        if math.isnan(lo) or math.isnan(hi):
            raise IntervalError("NaN endpoint")
        if lo > hi:
            raise IntervalError(f"lo > hi: [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def parse(text: str) -> "Interval":
        """Tight enclosure of a decimal literal (exact if representable)."""
        from decimal import Decimal

        v = float(text)
        d = Decimal(text)
        dv = Decimal(v)
        if dv == d:
            return _mk(v, v)
        if dv < d:
            return _mk(v, _up(v))
        return _mk(_down(v), v)

    # -- basic queries ----------------------------------------------------

    @property
    def width(self) -> float:
        return _up(self.hi - self.lo)

    @property
    def mid(self) -> float:
        m = 0.5 * (self.lo + self.hi)
        if not math.isfinite(m):
            m = 0.5 * self.lo + 0.5 * self.hi
        return min(max(m, self.lo), self.hi)

    @property
    def mag(self) -> float:
        """max |x| over the interval."""
        return max(abs(self.lo), abs(self.hi))

    @property
    def mig(self) -> float:
        """min |x| over the interval."""
        if self.lo > 0.0:
            return self.lo
        if self.hi < 0.0:
            return -self.hi
        return 0.0

    def contains(self, x) -> bool:
        return self.lo <= x <= self.hi

    def contains_interval(self, other: "Interval") -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def is_subset_of(self, other: "Interval") -> bool:
        return other.lo <= self.lo and self.hi <= other.hi

    def hull(self, other: "Interval") -> "Interval":
        return _mk(min(self.lo, other.lo), max(self.hi, other.hi))

    def split(self):
        """Bisect at the (rounded) midpoint; pieces cover self exactly."""
        m = self.mid
        return _mk(self.lo, m), _mk(m, self.hi)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        if isinstance(other, (int, float)):
            other = _mk(float(other), float(other))
        elif not isinstance(other, Interval):
            return NotImplemented
        return _mk(_down(self.lo + other.lo), _up(self.hi + other.hi))

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, (int, float)):
            other = _mk(float(other), float(other))
        elif not isinstance(other, Interval):
            return NotImplemented
        return _mk(_down(self.lo - other.hi), _up(self.hi - other.lo))

    def __rsub__(self, other):
        if isinstance(other, (int, float)):
            o = float(other)
            return _mk(_down(o - self.hi), _up(o - self.lo))
        return NotImplemented

    def __neg__(self):
        return _mk(-self.hi, -self.lo)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            other = _mk(float(other), float(other))
        elif not isinstance(other, Interval):
            return NotImplemented
        p1 = self.lo * other.lo
        p2 = self.lo * other.hi
        p3 = self.hi * other.lo
        p4 = self.hi * other.hi
        return _mk(_down(min(p1, p2, p3, p4)), _up(max(p1, p2, p3, p4)))

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, float)):
            other = _mk(float(other), float(other))
        elif not isinstance(other, Interval):
            return NotImplemented
        if other.lo <= 0.0 <= other.hi:
            raise IntervalDomainError("division by interval containing 0")
        q1 = self.lo / other.lo
        q2 = self.lo / other.hi
        q3 = self.hi / other.lo
        q4 = self.hi / other.hi
        return _mk(_down(min(q1, q2, q3, q4)), _up(max(q1, q2, q3, q4)))

    def __rtruediv__(self, other):
        if isinstance(other, (int, float)):
            return _mk(float(other), float(other)) / self
        return NotImplemented

    # -- elementary functions ----------------------------------------------

    def sqrt(self) -> "Interval":
        if self.lo < 0.0:
            raise IntervalDomainError(f"sqrt of interval with lo < 0: {self}")
        return _mk(max(0.0, _down(math.sqrt(self.lo))), _up(math.sqrt(self.hi)))

    def log(self) -> "Interval":
        if self.lo <= 0.0:
            raise IntervalDomainError(f"log of interval with lo <= 0: {self}")
        return _mk(_down_k(math.log(self.lo), _LIBM_ULPS),
                   _up_k(math.log(self.hi), _LIBM_ULPS))

    def exp(self) -> "Interval":
        return _mk(max(0.0, _down_k(math.exp(self.lo), _LIBM_ULPS)),
                   _up_k(math.exp(self.hi), _LIBM_ULPS))

    def asinh(self) -> "Interval":
        # realized through the log form asinh(x) = log(x + sqrt(x^2 + 1));
        # containment is inherited from the primitives.
        x2 = self.pow_int(2)
        return (self + (x2 + 1).sqrt()).log()

    def pow_int(self, n: int) -> "Interval":
        if n < 0:
            raise IntervalDomainError("pow_int requires n >= 0")
        if n == 0:
            return _mk(1.0, 1.0)
        if n % 2 == 1:
            lo, hi = self.lo, self.hi
            return _mk(_down_k(lo ** n, 2), _up_k(hi ** n, 2))
        lo, hi = self.mig, self.mag
        return _mk(max(0.0, _down_k(lo ** n, 2)), _up_k(hi ** n, 2))

    def abs(self) -> "Interval":
        return _mk(self.mig, self.mag)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


# -- module-level helpers (spec-level operation names) ----------------------


def hull(x: Interval, y: Interval) -> Interval:
    return x.hull(y)


def width(x: Interval) -> float:
    return x.width


def midpoint_split(x: Interval):
    return x.split()


def sqrt(x):
    return x.sqrt()


def log(x):
    return x.log()


def exp(x):
    return x.exp()


def asinh(x):
    return x.asinh()


ZERO = _mk(0.0, 0.0)
ONE = _mk(1.0, 1.0)
# math.pi rounds pi down, so [pi_f, nextafter(pi_f)] contains pi.
PI = _mk(math.pi, _up(math.pi))
TWO_PI = PI * 2


# ---------------------------------------------------------------------------
# Vectorized intervals
# ---------------------------------------------------------------------------


def _vdown(x):
    # >= 1 ulp outward for normals, fast path for big arrays
    return x - (np.abs(x) * _EPS_UP + _TINY)


def _vup(x):
    return x + (np.abs(x) * _EPS_UP + _TINY)


def _vdownk(x, k):
    return x - (np.abs(x) * (k * _EPS_UP) + k * _TINY)


def _vupk(x, k):
    return x + (np.abs(x) * (k * _EPS_UP) + k * _TINY)


def _vmk(lo, hi):
    v = IntervalVec.__new__(IntervalVec)
    v.lo = lo
    v.hi = hi
    return v


def _coerce_vec(other):
    """Endpoint pair for the second operand of a vectorized op."""
    if isinstance(other, IntervalVec):
        return other.lo, other.hi
    if isinstance(other, Interval):
        return other.lo, other.hi
    if isinstance(other, (int, float)):
        o = float(other)
        return o, o
    return None


class IntervalVec:
    """A batch of intervals: parallel numpy arrays of lower/upper endpoints.

    Supports the same operations as ``Interval``, elementwise, with outward
    rounding realized by padding of at least one ulp after each operation.
    Scalars and scalar ``Interval`` values broadcast.
    """

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = np.asarray(lo, dtype=np.float64)
        hi = lo if hi is None else np.asarray(hi, dtype=np.float64)
        if np.isnan(lo).any() or np.isnan(hi).any():
            raise IntervalError("NaN endpoint in IntervalVec")
        if (lo > hi).any():
            raise IntervalError("lo > hi in IntervalVec")
        self.lo = lo
        self.hi = hi

    @staticmethod
    def from_interval(iv: Interval, n: int) -> "IntervalVec":
        return _vmk(np.full(n, iv.lo), np.full(n, iv.hi))

    # -- structure ---------------------------------------------------------

    def __len__(self):
        return len(self.lo)

    @property
    def size(self):
        return self.lo.size

    @property
    def width(self):
        return _vup(self.hi - self.lo)

    def item(self, i) -> Interval:
        return _mk(float(self.lo[i]), float(self.hi[i]))

    def __getitem__(self, idx):
        return _vmk(self.lo[idx], self.hi[idx])

    def repeat(self, k) -> "IntervalVec":
        return _vmk(np.repeat(self.lo, k), np.repeat(self.hi, k))

    @staticmethod
    def concatenate(parts) -> "IntervalVec":
        return _vmk(np.concatenate([p.lo for p in parts]),
                    np.concatenate([p.hi for p in parts]))

    def hull(self, other) -> "IntervalVec":
        olo, ohi = _coerce_vec(other)
        return _vmk(np.minimum(self.lo, olo), np.maximum(self.hi, ohi))

    def check(self) -> "IntervalVec":
        """Validate endpoints; raises on NaN or inversion."""
        if np.isnan(self.lo).any() or np.isnan(self.hi).any():
            raise IntervalError("NaN endpoint in IntervalVec")
        if (self.lo > self.hi).any():
            raise IntervalError("lo > hi in IntervalVec")
        return self

    # -- arithmetic ----------------------------------------------------------

    def __add__(self, other):
        co = _coerce_vec(other)
        if co is None:
            return NotImplemented
        olo, ohi = co
        return _vmk(_vdown(self.lo + olo), _vup(self.hi + ohi))

    __radd__ = __add__

    def __sub__(self, other):
        co = _coerce_vec(other)
        if co is None:
            return NotImplemented
        olo, ohi = co
        return _vmk(_vdown(self.lo - ohi), _vup(self.hi - olo))

    def __rsub__(self, other):
        co = _coerce_vec(other)
        if co is None:
            return NotImplemented
        olo, ohi = co
        return _vmk(_vdown(olo - self.hi), _vup(ohi - self.lo))

    def __neg__(self):
        return _vmk(-self.hi, -self.lo)

    def __mul__(self, other):
        co = _coerce_vec(other)
        if co is None:
            return NotImplemented
        olo, ohi = co
        p1 = self.lo * olo
        p2 = self.lo * ohi
        p3 = self.hi * olo
        p4 = self.hi * ohi
        lo = np.minimum(np.minimum(p1, p2), np.minimum(p3, p4))
        hi = np.maximum(np.maximum(p1, p2), np.maximum(p3, p4))
        return _vmk(_vdown(lo), _vup(hi))

    __rmul__ = __mul__

    def __truediv__(self, other):
        co = _coerce_vec(other)
        if co is None:
            return NotImplemented
        olo, ohi = co
        olo = np.asarray(olo, dtype=np.float64)
        ohi = np.asarray(ohi, dtype=np.float64)
        if ((olo <= 0.0) & (ohi >= 0.0)).any():
            raise IntervalDomainError("division by interval containing 0")
        q1 = self.lo / olo
        q2 = self.lo / ohi
        q3 = self.hi / olo
        q4 = self.hi / ohi
        lo = np.minimum(np.minimum(q1, q2), np.minimum(q3, q4))
        hi = np.maximum(np.maximum(q1, q2), np.maximum(q3, q4))
        return _vmk(_vdown(lo), _vup(hi))

    def __rtruediv__(self, other):
        co = _coerce_vec(other)
        if co is None:
            return NotImplemented
        olo, ohi = co
        n = self.lo.shape
        return _vmk(np.broadcast_to(np.asarray(olo, dtype=np.float64), n).copy(),
                    np.broadcast_to(np.asarray(ohi, dtype=np.float64), n).copy()) / self

    # -- elementary functions -------------------------------------------------

    def sqrt(self):
        if (self.lo < 0.0).any():
            raise IntervalDomainError("sqrt of IntervalVec with lo < 0")
        return _vmk(np.maximum(0.0, _vdown(np.sqrt(self.lo))), _vup(np.sqrt(self.hi)))

    def log(self):
        if (self.lo <= 0.0).any():
            raise IntervalDomainError("log of IntervalVec with lo <= 0")
        return _vmk(_vdownk(np.log(self.lo), _LIBM_ULPS + 1),
                    _vupk(np.log(self.hi), _LIBM_ULPS + 1))

    def exp(self):
        return _vmk(np.maximum(0.0, _vdownk(np.exp(self.lo), _LIBM_ULPS + 1)),
                    _vupk(np.exp(self.hi), _LIBM_ULPS + 1))

    def asinh(self):
        x2 = self.pow_int(2)
        return (self + (x2 + 1).sqrt()).log()

    def pow_int(self, n: int):
        if n < 0:
            raise IntervalDomainError("pow_int requires n >= 0")
        if n == 0:
            return _vmk(np.ones_like(self.lo), np.ones_like(self.hi))
        if n % 2 == 1:
            return _vmk(_vdownk(self.lo ** n, 2), _vupk(self.hi ** n, 2))
        lo = np.where(self.lo > 0.0, self.lo, np.where(self.hi < 0.0, -self.hi, 0.0))
        hi = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return _vmk(np.maximum(0.0, _vdownk(lo ** n, 2)), _vupk(hi ** n, 2))

    def abs(self):
        lo = np.where(self.lo > 0.0, self.lo, np.where(self.hi < 0.0, -self.hi, 0.0))
        hi = np.maximum(np.abs(self.lo), np.abs(self.hi))
        return _vmk(lo, hi)

    def __repr__(self):
        return f"IntervalVec(n={self.lo.size})"


def sum_intervals(v: IntervalVec) -> Interval:
    """Rigorous interval sum of a batch.

    Endpoint sums are computed in floats; the accumulated rounding is covered
    by the classical bound (n-1) u sum|x| for recursive summation in any
    order, inflated by a safety factor.
    """
    n = v.lo.size
    if n == 0:
        return ZERO
    lo_s = float(np.sum(v.lo))
    hi_s = float(np.sum(v.hi))
    abs_s = float(np.sum(np.maximum(np.abs(v.lo), np.abs(v.hi))))
    err = 2.0 ** -53 * 2.0 * (n + 1) * abs_s + _TINY * n
    return _mk(_down(lo_s - err), _up(hi_s + err))


def group_sum_intervals(groups, v: IntervalVec, n_groups: int):
    """Per-group rigorous interval sums (vectorized ``sum_intervals``).

    Returns (lo, hi) arrays of length ``n_groups``; groups with no member sum
    to [0, 0].
    """
    lo_s = np.bincount(groups, weights=v.lo, minlength=n_groups)
    hi_s = np.bincount(groups, weights=v.hi, minlength=n_groups)
    abs_s = np.bincount(groups, weights=np.maximum(np.abs(v.lo), np.abs(v.hi)),
                        minlength=n_groups)
    cnt = np.bincount(groups, minlength=n_groups)
    err = 2.0 ** -53 * 2.0 * (cnt + 1) * abs_s + _TINY * cnt
    return _vdown(lo_s - err), _vup(hi_s + err)


# ---------------------------------------------------------------------------
# Degree-4 Taylor jets
# ---------------------------------------------------------------------------


class Jet4:
    """Degree-4 Taylor jet with interval coefficients.

    ``c[k]`` encloses f^(k)(x0)/k! for every x0 in the base interval, so
    ``c[4] * 24`` encloses the 4th derivative over the base.  Payloads may be
    ``Interval`` or ``IntervalVec``; scalar coefficients broadcast against
    vectorized ones.
    """

    __slots__ = ("c",)

    def __init__(self, coeffs):
        self.c = tuple(coeffs)
        if len(self.c) != 5:
            raise IntervalError("Jet4 needs exactly 5 coefficients")

    @staticmethod
    def variable(x) -> "Jet4":
        """The identity function over base interval x."""
        return Jet4((x, ONE, ZERO, ZERO, ZERO))

    @staticmethod
    def constant(x) -> "Jet4":
        return Jet4((x, ZERO, ZERO, ZERO, ZERO))

    def fourth_derivative(self):
        """Enclosure of f'''' over the base interval."""
        return self.c[4] * 24

    @staticmethod
    def _promote(other):
        if isinstance(other, Jet4):
            return other
        if isinstance(other, (int, float)):
            return Jet4.constant(_mk(float(other), float(other)))
        if isinstance(other, (Interval, IntervalVec)):
            return Jet4.constant(other)
        return None

    def __add__(self, other):
        o = Jet4._promote(other)
        if o is None:
            return NotImplemented
        return Jet4(tuple(a + b for a, b in zip(self.c, o.c)))

    __radd__ = __add__

    def __sub__(self, other):
        o = Jet4._promote(other)
        if o is None:
            return NotImplemented
        return Jet4(tuple(a - b for a, b in zip(self.c, o.c)))

    def __rsub__(self, other):
        o = Jet4._promote(other)
        if o is None:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Jet4(tuple(-a for a in self.c))

    def __mul__(self, other):
        o = Jet4._promote(other)
        if o is None:
            return NotImplemented
        a, b = self.c, o.c
        return Jet4((
            a[0] * b[0],
            a[0] * b[1] + a[1] * b[0],
            a[0] * b[2] + a[1] * b[1] + a[2] * b[0],
            a[0] * b[3] + a[1] * b[2] + a[2] * b[1] + a[3] * b[0],
            a[0] * b[4] + a[1] * b[3] + a[2] * b[2] + a[3] * b[1] + a[4] * b[0],
        ))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = Jet4._promote(other)
        if o is None:
            return NotImplemented
        a, b = self.c, o.c
        q0 = a[0] / b[0]
        q1 = (a[1] - q0 * b[1]) / b[0]
        q2 = (a[2] - q0 * b[2] - q1 * b[1]) / b[0]
        q3 = (a[3] - q0 * b[3] - q1 * b[2] - q2 * b[1]) / b[0]
        q4 = (a[4] - q0 * b[4] - q1 * b[3] - q2 * b[2] - q3 * b[1]) / b[0]
        return Jet4((q0, q1, q2, q3, q4))

    def __rtruediv__(self, other):
        o = Jet4._promote(other)
        if o is None:
            return NotImplemented
        return o / self

    def sqrt(self) -> "Jet4":
        a = self.c
        s0 = a[0].sqrt()
        d = s0 * 2
        s1 = a[1] / d
        s2 = (a[2] - s1 * s1) / d
        s3 = (a[3] - s1 * s2 * 2) / d
        s4 = (a[4] - s1 * s3 * 2 - s2 * s2) / d
        return Jet4((s0, s1, s2, s3, s4))

    def _antiderivative_of(self, q, f0):
        """Jet with value f0 and derivative jet q (q degree 3; q.c[4] unused)."""
        qc = q.c
        half = _mk(0.5, 0.5)
        third = ONE / 3
        quarter = _mk(0.25, 0.25)
        return Jet4((f0, qc[0], qc[1] * half, qc[2] * third, qc[3] * quarter))

    def derivative_jet(self) -> "Jet4":
        """Jet of f' (degree 3; top coefficient padded with 0)."""
        a = self.c
        return Jet4((a[1], a[2] * 2, a[3] * 3, a[4] * 4, ZERO))

    def log(self) -> "Jet4":
        q = self.derivative_jet() / self
        return self._antiderivative_of(q, self.c[0].log())

    def asinh(self) -> "Jet4":
        w = (self * self + 1).sqrt()
        q = self.derivative_jet() / w
        return self._antiderivative_of(q, self.c[0].asinh())

    def pow_int(self, n: int) -> "Jet4":
        if n < 0:
            raise IntervalDomainError("pow_int requires n >= 0")
        if n == 0:
            return Jet4.constant(ONE)
        out = self
        for _ in range(n - 1):
            out = out * self
        return out
