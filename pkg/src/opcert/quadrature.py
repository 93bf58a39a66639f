"""Adaptive rigorous integration.

Two enclosure rules:

* order 0 -- width times the integrand's hull over the whole segment;
* Gauss-Legendre order 2 -- two-node rule plus the remainder
  (b-a)^5 / 4320 * f''''([a, b]), with the 4th derivative enclosed by a
  degree-4 Taylor jet over the segment.

The adaptive driver keeps segments in a priority queue ordered by the
absolute width of their enclosure (FIFO on ties), accepts a segment when the
width passes both the absolute and the relative test, splits at the midpoint
otherwise, and gives up splitting after a fixed budget, summing whatever is
left.  Budget exhaustion is not an error: the hull-sum of the remaining
segments is still a rigorous enclosure, only wider.

A vectorized driver (`adapt_integrate_batch`) runs the same refinement
level-synchronously for a whole family of integrals at once (one per grid
cell), which is how the production sweeps are computed.  Results are merged
by cell index, so output does not depend on chunking.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .interval import (
    Interval,
    IntervalError,
    IntervalVec,
    Jet4,
    _mk,
    _vmk,
    group_sum_intervals,
    sum_intervals,
)
from .profile import RegionTag

DEFAULT_ABS_TOL = 1e-5
DEFAULT_REL_TOL = 1e-5
DEFAULT_MAX_EVALS = 100_000

_GL_NODE = Interval(3).sqrt() / 3  # sqrt(3)/3
_GL_REM = 1 / Interval(4320)


@dataclass
class ParameterSet:
    """Integration context (tolerances, parameters, region bookkeeping)."""

    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    a: Interval = None
    beta: Interval = None
    left: Interval = None
    right: Interval = None
    region_rho: Optional[RegionTag] = None
    region_rhop: Optional[RegionTag] = None
    rho_normalized: Interval = None
    max_evals: int = DEFAULT_MAX_EVALS

    def __post_init__(self):
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")
        if (self.left is not None and self.right is not None
                and self.left.lo > self.right.hi):
            raise ValueError("left must not exceed right")


FLAG_OK = 0
FLAG_FAILED = 1


@dataclass
class IntegrationResult:
    """Enclosure of one integral plus context and a failure flag.

    ``flag == FLAG_FAILED`` marks results that must not be consumed by
    certificates.  ``error_by_coordinate`` records the widths contributed by
    accepted segments and by residual (budget-exhausted) segments.
    """

    params: ParameterSet
    result: Interval
    error_by_coordinate: list = field(default_factory=list)
    flag: int = FLAG_OK
    evaluations: int = 0
    residual_segments: int = 0

    @property
    def ok(self) -> bool:
        return self.flag == FLAG_OK


def gl2_enclosure(f, seg: Interval) -> Interval:
    """Gauss-Legendre order-2 enclosure of the integral of f over seg.

    ``f`` must be a single generic callable evaluable both on ``Interval``
    (point evaluations at the nodes) and on ``Jet4`` (4th-derivative
    enclosure over the segment).
    """
    a = _mk(seg.lo, seg.lo)
    b = _mk(seg.hi, seg.hi)
    half = (b - a) * 0.5
    mid = (a + b) * 0.5
    off = half * _GL_NODE
    nodes = f(mid + off) + f(mid - off)
    f4 = f(Jet4.variable(seg)).fourth_derivative()
    return half * nodes + (b - a).pow_int(5) * _GL_REM * f4


def order0_enclosure(f, seg: Interval) -> Interval:
    """Width times the hull of f over the whole segment."""
    return (_mk(seg.hi, seg.hi) - _mk(seg.lo, seg.lo)) * f(seg)


def _accept(width: float, seg_len: float, ctx: ParameterSet) -> bool:
    return width <= ctx.abs_tol and width <= ctx.rel_tol * seg_len


def adapt_integrate(f, domain: Interval, ctx: ParameterSet,
                    rule: str = "gl2") -> IntegrationResult:
    """Adaptive enclosure of the integral of f over ``domain``.

    Pops the widest segment; accepts when its enclosure width is at most
    ``abs_tol`` and at most ``rel_tol`` times the segment length; splits at
    the midpoint otherwise.  After ``ctx.max_evals`` splits the remaining
    segments are summed as they are.
    """
    enclosure = gl2_enclosure if rule == "gl2" else order0_enclosure

    def safe_eval(seg):
        return enclosure(f, seg)

    seq = 0
    accepted: list[Interval] = []
    heap = []
    try:
        first = safe_eval(domain)
    except (IntervalError, ZeroDivisionError, OverflowError):
        return IntegrationResult(ctx, Interval(0.0), flag=FLAG_FAILED,
                                 evaluations=1)
    heapq.heappush(heap, (-first.width, seq, domain, first))
    evals = 1
    pops = 0
    while heap and pops < ctx.max_evals:
        negw, _, seg, enc = heapq.heappop(heap)
        if _accept(-negw, seg.width, ctx):
            accepted.append(enc)
            continue
        pops += 1
        left, right = seg.split()
        for piece in (left, right):
            if piece.lo == piece.hi:
                continue  # unsplittable sliver; keep parent enclosure? width 0
            try:
                enc_piece = safe_eval(piece)
            except (IntervalError, ZeroDivisionError, OverflowError):
                return IntegrationResult(ctx, Interval(0.0), flag=FLAG_FAILED,
                                         evaluations=evals)
            evals += 1
            heapq.heappush(heap, (-enc_piece.width, seq := seq + 1, piece,
                                  enc_piece))
    residual = [enc for _, _, _, enc in heap]
    total = sum_intervals(IntervalVec(
        np.array([e.lo for e in accepted + residual]),
        np.array([e.hi for e in accepted + residual]))) if (accepted or residual) \
        else Interval(0.0)
    acc_sum = (sum_intervals(IntervalVec(np.array([e.lo for e in accepted]),
                                         np.array([e.hi for e in accepted])))
               if accepted else Interval(0.0))
    res_sum = (sum_intervals(IntervalVec(np.array([e.lo for e in residual]),
                                         np.array([e.hi for e in residual])))
               if residual else Interval(0.0))
    return IntegrationResult(ctx, total,
                             error_by_coordinate=[acc_sum, res_sum],
                             flag=FLAG_OK, evaluations=evals,
                             residual_segments=len(residual))


# ---------------------------------------------------------------------------
# Vectorized level-synchronous driver
# ---------------------------------------------------------------------------

_CHUNK = 200_000


def _eval_batch(f, lo, hi, meta, rule):
    """Evaluate the rule on all segments (chunked); returns IntervalVec."""
    n = lo.size
    outs_lo = np.empty(n)
    outs_hi = np.empty(n)
    for s in range(0, n, _CHUNK):
        e = slice(s, min(s + _CHUNK, n))
        mslice = {k: v[e] for k, v in meta.items()}
        seg = _vmk(lo[e], hi[e])
        a = _vmk(lo[e], lo[e].copy())
        b = _vmk(hi[e], hi[e].copy())
        w = b - a
        if rule == "gl2":
            half = w * 0.5
            mid = (a + b) * 0.5
            off = half * _GL_NODE
            nodes = f(mid + off, mslice) + f(mid - off, mslice)
            f4 = f(Jet4.variable(seg), mslice).fourth_derivative()
            enc = half * nodes + w.pow_int(5) * _GL_REM * f4
        else:
            enc = w * f(seg, mslice)
        enc.check()
        outs_lo[e] = enc.lo
        outs_hi[e] = enc.hi
    return _vmk(outs_lo, outs_hi)


def adapt_integrate_batch(f, seg_lo, seg_hi, cell_ids, meta, n_cells,
                          ctx: ParameterSet, rule: str,
                          splits_left: np.ndarray):
    """Run the adaptive scheme for many independent integrals at once.

    ``f(x, meta_slice)`` is the generic integrand; ``meta`` holds
    per-segment arrays (e.g. the outer cell enclosure) that are duplicated
    on splits.  ``splits_left`` is the per-cell remaining split budget and is
    decremented in place, so several integrand groups can share one budget.

    Returns per-cell (lo, hi) enclosure arrays plus per-cell residual
    segment counts.
    """
    lo = np.asarray(seg_lo, dtype=np.float64)
    hi = np.asarray(seg_hi, dtype=np.float64)
    cells = np.asarray(cell_ids, dtype=np.intp)
    acc_lo = np.zeros(n_cells)
    acc_hi = np.zeros(n_cells)
    residual_count = np.zeros(n_cells, dtype=np.int64)

    def accumulate(cells_part, enc_part):
        glo, ghi = group_sum_intervals(cells_part, enc_part, n_cells)
        np.copyto(acc_lo, acc_lo + glo)
        np.copyto(acc_hi, acc_hi + ghi)

    enc = _eval_batch(f, lo, hi, meta, rule)
    while lo.size:
        width = enc.width
        seg_len = hi - lo
        ok = (width <= ctx.abs_tol) & (width <= ctx.rel_tol * seg_len)
        splittable = ~ok & (lo < np.nextafter(hi, -np.inf))
        if ok.any():
            accumulate(cells[ok], enc[ok])
        # budget: within each cell, split the widest segments first
        cand = np.flatnonzero(splittable)
        if cand.size == 0:
            rest = ~ok
            if rest.any():
                accumulate(cells[rest], enc[rest])
                np.add.at(residual_count, cells[rest], 1)
            break
        order = np.lexsort((-width[cand], cells[cand]))
        cand = cand[order]
        ccells = cells[cand]
        first = np.searchsorted(ccells, np.arange(n_cells), side="left")
        rank = np.arange(cand.size) - first[ccells]
        allowed = rank < splits_left[ccells]
        split_idx = cand[allowed]
        np.subtract.at(splits_left, ccells[allowed],
                       np.ones(int(allowed.sum()), dtype=splits_left.dtype))
        keep_res = np.ones(lo.size, dtype=bool)
        keep_res[np.flatnonzero(ok)] = False
        keep_res[split_idx] = False
        if keep_res.any():
            accumulate(cells[keep_res], enc[keep_res])
            np.add.at(residual_count, cells[keep_res], 1)
        if split_idx.size == 0:
            break
        plo = lo[split_idx]
        phi = hi[split_idx]
        mid = np.clip(0.5 * (plo + phi), plo, phi)
        lo = np.column_stack([plo, mid]).ravel()
        hi = np.column_stack([mid, phi]).ravel()
        cells = np.repeat(cells[split_idx], 2)
        meta = {k: _meta_repeat(v, split_idx) for k, v in meta.items()}
        enc = _eval_batch(f, lo, hi, meta, rule)
    return acc_lo, acc_hi, residual_count


def _meta_repeat(v, idx):
    if isinstance(v, IntervalVec):
        return _vmk(np.repeat(v.lo[idx], 2), np.repeat(v.hi[idx], 2))
    return np.repeat(v[idx], 2)


# ---------------------------------------------------------------------------
# Singular-region helpers
# ---------------------------------------------------------------------------


def staircase_partition(j: int, n: int):
    """Cells within one index of j are singular; the rest are regular."""
    if not 0 <= j < n:
        raise ValueError(f"cell index {j} outside [0, {n})")
    singular = {k for k in (j - 1, j, j + 1) if 0 <= k < n}
    regular = set(range(n)) - singular
    return singular, regular


def integrate_singular(bounds_of_cofactor: Interval, cell: Interval,
                       rho_t: Interval, a: Interval) -> Interval:
    """Enclosure of the singular-cell integral of cofactor * asinh weight.

    ``bounds_of_cofactor`` must be a rigorous hull of the smooth cofactor
    over the cell; the weight integral is evaluated in closed form and the
    product interval is the enclosure (min/max of endpoint products).
    """
    from .kernels import arcsinh_weight_integral

    s = arcsinh_weight_integral(cell.lo, cell.hi, rho_t, a)
    return bounds_of_cofactor * s


def uniform_grid(n: int) -> np.ndarray:
    """n+1 grid points tiling [-1, 1]; consecutive cells share endpoints."""
    xs = -1.0 + np.arange(n + 1) * (2.0 / n)
    xs[0] = -1.0
    xs[-1] = 1.0
    return xs
