"""Grid enclosures of the integral-operator quantities.

Everything is computed on a uniform grid of N cells tiling [-1, 1] in the
normalized coordinate.  For each outer cell X = I_j the inner integral over
y decomposes by kernel part:

* the smooth part and the nonsingular error radius integrate adaptively over
  the whole inner domain (region by region, since the profile derivative is
  piecewise);
* the parts carrying the singular factor asinh(1/|u|) integrate adaptively
  over the staircase region (cells at distance >= 2 from I_j) and in closed
  form over the singular cells (|j - k| <= 1), where the smooth cofactor is
  hulled over the cell and multiplied by the exact weight integral.

The outer variable is always a whole cell, so each per-cell value encloses
the target function's full range over that cell and the Riemann-style grid
sums below are rigorous.
"""

from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np

from .interval import (
    Interval,
    IntervalDomainError,
    IntervalError,
    IntervalVec,
    TWO_PI,
    _mk,
    _vmk,
    sum_intervals,
)
from .kernels import (
    KernelGuardError,
    U2_GUARD,
    ens_radius,
    es_coeff,
    hons,
    hos_coeff,
)
from .profile import Profile, RegionTag, default_profile
from .quadrature import (
    DEFAULT_ABS_TOL,
    DEFAULT_MAX_EVALS,
    DEFAULT_REL_TOL,
    ParameterSet,
    adapt_integrate_batch,
    integrate_singular,
    staircase_partition,
    uniform_grid,
)

LAMBDA_STAR = Interval.parse("0.3482")
LAMBDA_6_APROX = Interval.parse("0.573")


class Quantity(enum.Enum):
    ITILDE_MIN = "min_i"
    E3 = "e3"
    THETA_A3 = "theta_a3"
    E6 = "e6"


@dataclass(frozen=True)
class OperatorQuantity:
    which: Quantity
    lambda_ref: Interval = None

    @staticmethod
    def of(which: Quantity) -> "OperatorQuantity":
        ref = {Quantity.E3: LAMBDA_STAR, Quantity.E6: LAMBDA_6_APROX}.get(which)
        return OperatorQuantity(which, ref)


@dataclass
class GridEnclosures:
    """Per-cell interval enclosures of one quantity over the N-cell grid."""

    n: int
    lo: np.ndarray
    hi: np.ndarray
    flags: np.ndarray
    label: str
    evaluations: int = 0
    residual_segments: int = 0
    runtime: float = 0.0

    def value(self, j: int) -> Interval:
        return _mk(float(self.lo[j]), float(self.hi[j]))

    @property
    def ok(self) -> bool:
        return not self.flags.any()

    def as_vec(self) -> IntervalVec:
        return _vmk(self.lo, self.hi)

    def min_lower_bound(self) -> float:
        return float(self.lo.min())


@dataclass
class SweepParams:
    """Knobs shared by all sweeps (tolerances mirror the integration engine).

    The two subsplit knobs subdivide the outer cell before evaluation and
    hull the sub-results, which tightens the slack contributed by the outer
    enclosure near the diagonal at a proportional cost in those parts only.
    """

    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    max_evals: int = DEFAULT_MAX_EVALS
    rule: str = "gl2"
    singular_subsplit: int = 8
    outer_subsplit: int = 4
    profile: Profile = field(default_factory=default_profile)

    def parameter_set(self, **kw) -> ParameterSet:
        return ParameterSet(abs_tol=self.abs_tol, rel_tol=self.rel_tol,
                            a=self.profile.a, beta=self.profile.beta,
                            max_evals=self.max_evals, **kw)


# ---------------------------------------------------------------------------
# The generic kernel-part integrand
# ---------------------------------------------------------------------------

PART_HO_NS = "ho_ns"
PART_E_NS = "e_ns"
PART_HO_S = "ho_s"
PART_E_S = "e_s"
RADIUS_PARTS = (PART_E_NS, PART_E_S)


def _payload_max(x) -> float:
    if isinstance(x, Interval):
        return x.hi
    if isinstance(x, IntervalVec):
        return float(x.hi.max()) if x.hi.size else 0.0
    return _payload_max(x.c[0])  # Jet4: value coefficient covers the segment


class KernelPartIntegrand:
    """One kernel part of the operator kernel, as a function of y.

    ``orientation`` 'A' takes the kernel at r = rho(X)/rho(y) with weight
    (a/2) f_rho(y); 'B' takes r = rho(y)/rho(X) with weight (a/2) f_rho(X)
    (supplied per segment in ``meta['phiX']``).  ``geometry`` is '1' for the
    multiplier quantity and 'T' for the operator kernel, which carries
    rho(inner-arg)/(2 pi rho(outer-arg)^2).  RADIUS parts evaluate magnitude
    cofactors (the profile weight enters as -phi >= 0).  ``side`` fixes the
    sign of y - X on staircase segments so the singular factor is smooth.
    """

    def __init__(self, m, part, orientation, region, geometry, profile,
                 coeff: Interval, side: int = 0,
                 with_singular_factor: bool = False):
        self.m = m
        self.part = part
        self.orientation = orientation
        self.region = region
        self.geometry = geometry
        self.profile = profile
        self.coeff = coeff
        self.side = side
        self.with_singular_factor = with_singular_factor

    def __call__(self, y, meta):
        prof = self.profile
        X = meta["X"]
        rho_x = prof.to_rho(X)
        rho_y = prof.to_rho(y)
        shift = 4 / prof.a - 2
        denom = y + X + shift
        u = (y - X) / denom
        u2 = u * u
        if _payload_max(u2) >= U2_GUARD:
            raise KernelGuardError("u^2 guard violated in sweep integrand")
        if self.orientation == "A":
            r = rho_x / rho_y
            w = prof.f_rho_scaled(y, self.region)
        else:
            r = rho_y / rho_x
            w = meta["phiX"]
        if self.part in RADIUS_PARTS:
            w = -w
        if self.geometry == "T":
            if self.orientation == "A":
                geom = rho_y / (TWO_PI * rho_x * rho_x)
            else:
                geom = rho_x / (TWO_PI * rho_y * rho_y)
        else:
            geom = None
        if self.part == PART_HO_NS:
            val = hons(self.m, r, u2)
        elif self.part == PART_E_NS:
            val = ens_radius(self.m, r, u2)
        elif self.part == PART_HO_S:
            val = hos_coeff(r)
        else:
            val = es_coeff(self.m, r, u2)
        out = w * val
        if geom is not None:
            out = out * geom
        if self.with_singular_factor:
            # side fixes the sign of y - X on the segment, so the divisor is
            # a smooth positive expression equal to |y - X|
            arg = (y + X + shift) / ((y - X) * self.side)
            out = out * arg.asinh()
        return out * self.coeff


# ---------------------------------------------------------------------------
# Sweep driver
# ---------------------------------------------------------------------------


def _clip_piece(lo, hi, bounds):
    lo2, hi2 = max(lo, bounds[0]), min(hi, bounds[1])
    return (lo2, hi2) if lo2 < hi2 else None


def _region_pieces(profile, domain):
    out = []
    for region in RegionTag:
        piece = _clip_piece(*profile.region_bounds(region), domain)
        if piece:
            out.append((region, piece))
    return out


class _Sweep:
    """Shared machinery: cells, budgets, group scheduling for one quantity.

    Staircase parts evaluate on an outer subgrid (``outer_subsplit``
    sub-intervals per cell) and the per-subinterval sums are hulled into the
    per-cell enclosure, which cuts the slack the outer enclosure injects
    into the singular factor.
    """

    def __init__(self, n, params: SweepParams, domain, geometry, m,
                 orientations, orientations_radius=None, xs=None):
        self.n = n
        self.params = params
        self.profile = params.profile
        self.domain = domain
        self.geometry = geometry
        self.m = m
        # lists of (tag, coeff Interval); radius parts may combine with
        # different coefficients (magnitudes add regardless of sign)
        self.orientations = orientations
        self.orientations_radius = orientations_radius or orientations
        self.xs = uniform_grid(n) if xs is None else np.asarray(xs, dtype=float)
        self.X = _vmk(self.xs[:-1].copy(), self.xs[1:].copy())
        self.phiX = IntervalVec.concatenate(
            [IntervalVec.from_interval(
                self.profile.f_rho_scaled_auto(self.X.item(j)), 1)
             for j in range(n)])
        self.msub = max(1, params.outer_subsplit)
        sub_lo, sub_hi = [], []
        for j in range(n):
            sub = np.linspace(self.xs[j], self.xs[j + 1], self.msub + 1)
            sub_lo.extend(sub[:-1])
            sub_hi.extend(sub[1:])
        self.Xsub = _vmk(np.array(sub_lo), np.array(sub_hi))
        self.phiXsub = IntervalVec.concatenate(
            [IntervalVec.from_interval(
                self.profile.f_rho_scaled_auto(self.Xsub.item(k)), 1)
             for k in range(n * self.msub)])
        self.acc = {}  # slot -> (lo, hi) arrays
        self.flags = np.zeros(n, dtype=np.int8)
        self.residuals = 0
        self.runtime = 0.0

    def _orients(self, part):
        return self.orientations_radius if part in RADIUS_PARTS \
            else self.orientations

    def _add(self, slot, lo, hi):
        if slot in self.acc:
            alo, ahi = self.acc[slot]
            base = _vmk(alo, ahi) + _vmk(lo, hi)
            self.acc[slot] = (base.lo, base.hi)
        else:
            self.acc[slot] = (lo, hi)

    def _run_group(self, integrand, seg_lo, seg_hi, keys, n_keys, x_iv,
                   phix_iv, splits_left, slot):
        meta = {"X": x_iv[keys]}
        if integrand.orientation == "B":
            meta["phiX"] = phix_iv[keys]
        ctx = self.params.parameter_set()
        # radius parts are interval error budgets (they carry absolute
        # values), so they only admit the order-0 rule
        rule = "order0" if integrand.part in RADIUS_PARTS else self.params.rule
        try:
            lo, hi, rescnt = adapt_integrate_batch(
                integrand, seg_lo, seg_hi, keys, meta, n_keys, ctx,
                rule, splits_left)
        except (IntervalError, KernelGuardError, ZeroDivisionError,
                OverflowError):
            self.flags[:] = 1
            return
        self._add(slot, lo, hi)
        self.residuals += int(rescnt.sum())

    def _full_domain_groups(self, part):
        """Segments covering the whole inner domain, region by region."""
        for orient, coeff in self._orients(part):
            for region, (plo, phi) in _region_pieces(self.profile, self.domain):
                integrand = KernelPartIntegrand(
                    self.m, part, orient, region, self.geometry,
                    self.profile, coeff)
                yield integrand, (np.full(self.n, plo), np.full(self.n, phi),
                                  np.arange(self.n))

    def _staircase_pieces(self, j, side, bounds):
        """Geometric partition of the staircase range on one side of cell j.

        Piece widths double away from the singular zone, so no segment is
        much wider than its distance to the diagonal; this keeps the
        derivative enclosures of the asinh factor from blowing up before
        adaptive refinement can act.
        """
        xs = self.xs
        step = xs[min(j + 1, self.n)] - xs[j]
        out = []
        if side > 0:
            t = xs[min(j + 2, self.n)]
            g = step
            while t < bounds[1]:
                piece = _clip_piece(t, min(t + g, bounds[1]), bounds)
                if piece:
                    out.append(piece)
                t += g
                g *= 2
        else:
            t = xs[max(j - 1, 0)]
            g = step
            while t > bounds[0]:
                piece = _clip_piece(max(t - g, bounds[0]), t, bounds)
                if piece:
                    out.append(piece)
                t -= g
                g *= 2
        return out

    def _staircase_groups(self, part):
        """Staircase pieces (outside the singular zone), split by region and
        by the side of the outer cell; keys run over outer sub-intervals."""
        msub = self.msub
        for orient, coeff in self._orients(part):
            for region, rb in _region_pieces(self.profile, self.domain):
                for side in (-1, 1):
                    seg_lo, seg_hi, keys = [], [], []
                    for j in range(self.n):
                        pieces = self._staircase_pieces(j, side, rb)
                        for piece in pieces:
                            for s in range(msub):
                                seg_lo.append(piece[0])
                                seg_hi.append(piece[1])
                                keys.append(j * msub + s)
                    if not keys:
                        continue
                    integrand = KernelPartIntegrand(
                        self.m, part, orient, region, self.geometry,
                        self.profile, coeff, side=side,
                        with_singular_factor=True)
                    yield integrand, (np.array(seg_lo), np.array(seg_hi),
                                      np.array(keys, dtype=np.intp))

    def _singular_cells(self, part):
        """Closed-form contributions of the cells hugging the diagonal.

        The whole singular zone of a cell integrates in as few closed-form
        calls as the region boundaries allow (fewer antiderivative
        evaluations mean fewer interval dependencies), and the outer cell is
        subdivided with the results hulled, which shrinks the slack induced
        by the outer enclosure.
        """
        prof = self.profile
        xs = self.xs
        a = prof.a
        nsub = self.params.singular_subsplit
        lo_out = np.zeros(self.n)
        hi_out = np.zeros(self.n)
        for j in range(self.n):
            zone = _clip_piece(xs[max(j - 1, 0)], xs[min(j + 2, self.n)],
                               self.domain)
            if zone is None:
                continue
            pieces = _region_pieces(prof, zone)
            sub = np.linspace(xs[j], xs[j + 1], nsub + 1)
            total = None
            for s in range(nsub):
                Xs = _mk(float(sub[s]), float(sub[s + 1]))
                phi_xs = prof.f_rho_scaled_auto(Xs)
                part_sum = Interval(0.0)
                for region, rb in pieces:
                    piece = _mk(rb[0], rb[1])
                    for orient, coeff in self._orients(part):
                        integrand = KernelPartIntegrand(
                            self.m, part, orient, region, self.geometry,
                            prof, coeff)
                        meta = {"X": Xs, "phiX": phi_xs}
                        try:
                            cof = integrand(piece, meta)
                            part_sum = part_sum + integrate_singular(
                                cof, piece, Xs, a)
                        except (IntervalError, KernelGuardError,
                                ZeroDivisionError, OverflowError):
                            self.flags[j] = 1
                total = part_sum if total is None else total.hull(part_sum)
            lo_out[j] = total.lo
            hi_out[j] = total.hi
        self._add(part + "_sing", lo_out, hi_out)

    def run(self):
        # each region/orientation/side piece is its own simple integral and
        # gets its own split budget
        t0 = time.time()
        for part in (PART_HO_NS, PART_E_NS):
            for integrand, (slo, shi, cid) in self._full_domain_groups(part):
                splits_left = np.full(self.n, self.params.max_evals,
                                      dtype=np.int64)
                self._run_group(integrand, slo, shi, cid, self.n,
                                self.X, self.phiX, splits_left, part)
        nk = self.n * self.msub
        for part in (PART_HO_S, PART_E_S):
            for integrand, (slo, shi, keys) in self._staircase_groups(part):
                splits_left = np.full(nk, self.params.max_evals,
                                      dtype=np.int64)
                self._run_group(integrand, slo, shi, keys, nk,
                                self.Xsub, self.phiXsub, splits_left,
                                part + "_stair")
            self._singular_cells(part)
        self.runtime = time.time() - t0

    def _slot_per_cell(self, slot):
        """(lo, hi) per cell; staircase slots hull over outer sub-intervals."""
        if slot not in self.acc:
            z = np.zeros(self.n)
            return z, z.copy()
        lo, hi = self.acc[slot]
        if slot.endswith("_stair") and lo.size == self.n * self.msub:
            return (lo.reshape(self.n, self.msub).min(axis=1),
                    hi.reshape(self.n, self.msub).max(axis=1))
        return lo, hi

    def combined(self) -> IntervalVec:
        """hons + hos + symmetric boxes of the radius parts."""
        smooth = (_vmk(*self._slot_per_cell(PART_HO_NS))
                  + _vmk(*self._slot_per_cell(PART_HO_S + "_stair"))
                  + _vmk(*self._slot_per_cell(PART_HO_S + "_sing")))
        rad = (_vmk(*self._slot_per_cell(PART_E_NS))
               + _vmk(*self._slot_per_cell(PART_E_S + "_stair"))
               + _vmk(*self._slot_per_cell(PART_E_S + "_sing")))
        r = np.maximum(np.abs(rad.lo), np.abs(rad.hi))
        return smooth + _vmk(-r, r)


def sweep_itilde(n: int, params: SweepParams) -> GridEnclosures:
    """Per-cell enclosures of the multiplier function on the N-cell grid."""
    sweep = _Sweep(n, params, (-1.0, 1.0), "1", 1,
                   [("A", Interval(1.0))])
    sweep.run()
    inner = sweep.combined()
    out_lo = np.empty(n)
    out_hi = np.empty(n)
    for j in range(n):
        scale = -1 / (TWO_PI * params.profile.to_rho(sweep.X.item(j)))
        v = inner.item(j) * scale
        out_lo[j] = v.lo
        out_hi[j] = v.hi
    return GridEnclosures(n, out_lo, out_hi, sweep.flags, "itilde",
                          runtime=sweep.runtime,
                          residual_segments=sweep.residuals)


def sweep_T_apply_bump(m: int, combination: str, n: int,
                       params: SweepParams) -> GridEnclosures:
    """Per-cell enclosures of (T_S or T_A applied to the unit bump).

    ``combination`` is 's' for the symmetric part and 'a' for the
    antisymmetric part.  The error radii of the two kernel orientations add
    as magnitudes either way, so the radius parts always combine with +1/2.
    The bump's constant height multiplies the kernel integral over its
    support.
    """
    prof = params.profile
    support = prof.bsj().support
    half = Interval(0.5)
    sign_b = half if combination == "s" else -half
    sweep = _Sweep(n, params, support, "T", m,
                   orientations=[("A", half), ("B", sign_b)],
                   orientations_radius=[("A", half), ("B", half)])
    sweep.run()
    height = prof.bsj().height
    scaled = sweep.combined() * height
    return GridEnclosures(n, scaled.lo, scaled.hi, sweep.flags,
                          f"T{m}_{combination}", runtime=sweep.runtime,
                          residual_segments=sweep.residuals)


def eval_I_tilde(rho_t_cell: Interval, params: SweepParams) -> Interval:
    """Enclosure of the multiplier over one cell.

    Embeds the cell in a small custom grid with one buffer cell on each
    side, so the staircase/singular split around it matches the full sweep.
    """
    w = max(rho_t_cell.width, 1e-6)
    pts = sorted({-1.0, max(-1.0, rho_t_cell.lo - w), rho_t_cell.lo,
                  rho_t_cell.hi, min(1.0, rho_t_cell.hi + w), 1.0})
    xs = np.array(pts)
    j = int(np.searchsorted(xs, rho_t_cell.lo))
    sweep = _Sweep(len(xs) - 1, params, (-1.0, 1.0), "1", 1,
                   [("A", Interval(1.0))], xs=xs)
    sweep.run()
    inner = sweep.combined().item(j)
    if sweep.flags.any():
        raise IntervalDomainError("flagged cell in eval_I_tilde")
    return inner * (-1 / (TWO_PI * params.profile.to_rho(rho_t_cell)))


def eval_error_vector(q: OperatorQuantity, n: int, params: SweepParams,
                      itilde: GridEnclosures = None) -> GridEnclosures:
    """Per-cell enclosures of the named quantity on the N-cell grid."""
    which = q.which
    if which == Quantity.ITILDE_MIN:
        return sweep_itilde(n, params)
    if which == Quantity.THETA_A3:
        return sweep_T_apply_bump(3, "a", n, params)
    m = 3 if which == Quantity.E3 else 6
    lam = q.lambda_ref
    if itilde is None:
        itilde = sweep_itilde(n, params)
    if itilde.n != n:
        raise ValueError("itilde grid size mismatch")
    tsb = sweep_T_apply_bump(m, "s", n, params)
    prof = params.profile
    bump = prof.bsj()
    xs = uniform_grid(n)
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        b = bump.value_over(_mk(xs[j], xs[j + 1]))
        v = itilde.value(j) * b + tsb.value(j) - lam * b
        lo[j] = v.lo
        hi[j] = v.hi
    flags = itilde.flags | tsb.flags
    return GridEnclosures(n, lo, hi, flags, which.value,
                          runtime=itilde.runtime + tsb.runtime,
                          residual_segments=(itilde.residual_segments
                                             + tsb.residual_segments))


# ---------------------------------------------------------------------------
# Grid norms and inner products
# ---------------------------------------------------------------------------


def grid_l2_norm(g: GridEnclosures, params: SweepParams) -> Interval:
    """Enclosure of the L2 norm from per-cell range enclosures:
    ((a/N) * sum of squares)^(1/2)."""
    if not g.ok:
        raise IntervalDomainError(f"flagged cells in {g.label}")
    sq = g.as_vec().pow_int(2)
    total = sum_intervals(sq) * (params.profile.a / g.n)
    return _mk(max(total.lo, 0.0), max(total.hi, 0.0)).sqrt()


def grid_inner_bump(g: GridEnclosures, params: SweepParams) -> Interval:
    """Enclosure of |<g, bump>| via the cell-aligned piecewise-constant sum,
    including the normalization height."""
    if not g.ok:
        raise IntervalDomainError(f"flagged cells in {g.label}")
    prof = params.profile
    bump = prof.bsj()
    if not bump.is_cell_aligned(g.n):
        raise IntervalDomainError(
            f"bump support not aligned with an {g.n}-cell grid")
    xs = uniform_grid(g.n)
    lo_s, hi_s = bump.support
    inside = (xs[:-1] >= lo_s) & (xs[1:] <= hi_s)
    vec = g.as_vec()
    picked = _vmk(vec.lo[inside], vec.hi[inside])
    total = sum_intervals(picked) * (params.profile.a / g.n) * bump.height
    return total.abs()


def bump_norm_sq(params: SweepParams, n: int) -> Interval:
    """Enclosure of the bump's squared L2 norm on the aligned grid."""
    prof = params.profile
    bump = prof.bsj()
    if not bump.is_cell_aligned(n):
        raise IntervalDomainError("bump support not aligned")
    xs = uniform_grid(n)
    lo_s, hi_s = bump.support
    count = int(((xs[:-1] >= lo_s) & (xs[1:] <= hi_s)).sum())
    h2 = bump.height.pow_int(2)
    return h2 * (params.profile.a / n) * count


# ---------------------------------------------------------------------------
# Report files: one line per cell, "j lo hi flag"
# ---------------------------------------------------------------------------


def write_grid_report(path, g: GridEnclosures):
    with open(path, "w") as f:
        f.write(f"# {g.label} n={g.n} runtime={g.runtime:.2f}s "
                f"residual_segments={g.residual_segments}\n")
        for j in range(g.n):
            f.write(f"{j} {g.lo[j]!r} {g.hi[j]!r} {int(g.flags[j])}\n")


def read_grid_report(path) -> GridEnclosures:
    rows = []
    label = "unknown"
    with open(path) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                parts = line[1:].split()
                if parts:
                    label = parts[0]
                continue
            j, lo, hi, flag = line.split()
            rows.append((int(j), float(lo), float(hi), int(flag)))
    rows.sort()
    n = len(rows)
    lo = np.array([r[1] for r in rows])
    hi = np.array([r[2] for r in rows])
    flags = np.array([r[3] for r in rows], dtype=np.int8)
    if (lo > hi).any():
        raise IntervalError(f"corrupt grid report {path}")
    return GridEnclosures(n, lo, hi, flags, label)
