"""Finite-rank projection machinery.

The 24x24 projection matrices shipped under ``data/`` give the Galerkin
coefficients of the symmetric operator part in an orthonormal basis of 24
functions: three Legendre blocks (left ramp, middle, right ramp), eight
degrees each, normalized in the physical L2 inner product.  This module
loads the matrices into tight decimal enclosures, bounds the spectrum of the
deflated matrix through Gershgorin disks, bounds the operator-norm defect
between the true kernel and its finite-rank surrogate through a generalized
Young / L1 estimate, and can regenerate the matrices with nonrigorous
quadrature to validate the shipped data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

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
from .kernels import arcsinh_weight_integral, ens_radius, es_coeff, hons, hos_coeff
from .operators import GridEnclosures, SweepParams
from .profile import Profile, RegionTag
from .quadrature import uniform_grid

BASIS_SIZE = 24
_SYMMETRY_TOL = 1e-10
DEFAULT_DEFECT_MESH = (512, 510 * 16, 512)

_DATA_FILES = {3: "projection_matrix_m3.txt", 6: "projection_matrix_m6.txt"}


class MatrixFormatError(ValueError):
    """Shipped or supplied matrix file failed validation."""


@dataclass(frozen=True)
class ProjectionMatrix:
    m: int
    entries: tuple  # BASIS_SIZE x BASIS_SIZE of Interval
    values: np.ndarray  # float midpoints, for nonrigorous cross-checks

    def entry(self, i: int, j: int) -> Interval:
        return self.entries[i][j]


def matrix_path(m: int):
    return resources.files("opcert").joinpath("data", _DATA_FILES[m])


def load_projection_matrix(m: int, path=None) -> ProjectionMatrix:
    """Parse a whitespace-separated 24x24 decimal matrix into enclosures.

    Entries become tight intervals around the printed decimals (one ulp
    outward when the decimal is not representable), so everything derived
    from them stays rigorous.  Rejects wrong shapes and asymmetry beyond
    1e-10.
    """
    if path is None:
        text = matrix_path(m).read_text()
    else:
        with open(path) as f:
            text = f.read()
    rows = [line.split() for line in text.splitlines() if line.strip()]
    if len(rows) != BASIS_SIZE or any(len(r) != BASIS_SIZE for r in rows):
        raise MatrixFormatError(
            f"expected {BASIS_SIZE}x{BASIS_SIZE} matrix, got "
            f"{len(rows)} rows of lengths {sorted({len(r) for r in rows})}")
    try:
        entries = tuple(tuple(Interval.parse(tok) for tok in row)
                        for row in rows)
    except ValueError as exc:
        raise MatrixFormatError(f"bad entry in matrix file: {exc}") from exc
    values = np.array([[float(tok) for tok in row] for row in rows])
    if np.max(np.abs(values - values.T)) > _SYMMETRY_TOL:
        raise MatrixFormatError("matrix not symmetric to input precision")
    return ProjectionMatrix(m, entries, values)


def gershgorin_min(mat: ProjectionMatrix, drop: int = 1):
    """Rigorous lower bound for the eigenvalues of the deflated matrix.

    Removes row/column ``drop`` (the bump's slot) and returns
    (enclosure of min_i (M_ii - sum_j |M_ij|), original index attaining it).
    """
    if not 0 <= drop < BASIS_SIZE:
        raise IndexError(f"drop index {drop} outside basis")
    lows = []
    for i in range(BASIS_SIZE):
        if i == drop:
            continue
        radius = Interval(0.0)
        for j in range(BASIS_SIZE):
            if j != i and j != drop:
                radius = radius + mat.entry(i, j).abs()
        lows.append((i, mat.entry(i, i) - radius))
    lo = min(v.lo for _, v in lows)
    hi = min(v.hi for _, v in lows)
    idx = min(lows, key=lambda t: t[1].lo)[0]
    return _mk(lo, hi), idx


# ---------------------------------------------------------------------------
# Orthonormal Legendre-block basis
# ---------------------------------------------------------------------------


def legendre(n: int, x):
    """Legendre polynomial of order n via the three-term recurrence."""
    return legendre_all(n, x)[n]


def legendre_all(nmax: int, x):
    """[Leg(0,x), ..., Leg(nmax,x)] sharing the recurrence."""
    out = [Interval(1.0) if isinstance(x, Interval) else x * 0 + 1]
    if nmax == 0:
        return out
    out.append(x)
    for k in range(1, nmax):
        nxt = (x * out[k] * (2 * k + 1) - out[k - 1] * k) / (k + 1)
        out.append(nxt)
    return out


_BLOCK_REGION = {0: RegionTag.LEFT_RAMP, 1: RegionTag.MIDDLE,
                 2: RegionTag.RIGHT_RAMP}


def basis_block(i: int) -> RegionTag:
    return _BLOCK_REGION[i % 3]


def basis_degree(i: int) -> int:
    return i // 3


def _block_argument(block: RegionTag, x, beta: Interval):
    if block == RegionTag.LEFT_RAMP:
        return (x + 1) * (2 / beta) - 1
    if block == RegionTag.RIGHT_RAMP:
        return (x - 1) * (2 / beta) + 1
    return x / (1 - beta)


def _block_norm(block: RegionTag, degree: int, profile: Profile) -> Interval:
    a, beta = profile.a, profile.beta
    if block == RegionTag.MIDDLE:
        return (Interval(2 * degree + 1) / (a - a * beta)).sqrt()
    return (Interval(2 * (2 * degree + 1)) / (a * beta)).sqrt()


def basis_eval(i: int, rho_t: Interval, profile: Profile) -> Interval:
    """Enclosure of the i-th orthonormal basis function over ``rho_t``.

    Zero outside the block's support; straddling intervals hull with zero.
    """
    if not 0 <= i < BASIS_SIZE:
        raise IndexError(f"basis index {i} outside [0, {BASIS_SIZE})")
    block = basis_block(i)
    lo, hi = profile.region_bounds(block)
    if rho_t.hi <= lo or rho_t.lo >= hi:
        return Interval(0.0)
    clipped = _mk(max(rho_t.lo, lo), min(rho_t.hi, hi))
    t = _block_argument(block, clipped, profile.beta)
    val = legendre(basis_degree(i), t) * _block_norm(block, basis_degree(i),
                                                     profile)
    if rho_t.lo < lo or rho_t.hi > hi:
        val = val.hull(Interval(0.0))
    return val


def _basis_eval_vec(i: int, x: IntervalVec, profile: Profile) -> IntervalVec:
    """Vectorized basis evaluation; caller guarantees x inside the block."""
    block = basis_block(i)
    t = _block_argument(block, x, profile.beta)
    return legendre(basis_degree(i), t) * _block_norm(
        block, basis_degree(i), profile)


def _block_indices(region: RegionTag):
    offset = {RegionTag.LEFT_RAMP: 0, RegionTag.MIDDLE: 1,
              RegionTag.RIGHT_RAMP: 2}[region]
    return [offset + 3 * d for d in range(BASIS_SIZE // 3)]


# ---------------------------------------------------------------------------
# Operator-norm defect via the L1 / generalized Young route
# ---------------------------------------------------------------------------


def _mesh_cells(profile: Profile, mesh):
    """Region-pure fine cells: (region, lo array, hi array) per region."""
    n1, n2, n3 = mesh
    out = []
    for region, n in ((RegionTag.LEFT_RAMP, n1), (RegionTag.MIDDLE, n2),
                      (RegionTag.RIGHT_RAMP, n3)):
        lo, hi = profile.region_bounds(region)
        xs = lo + (hi - lo) * np.arange(n + 1) / n
        xs[0] = lo
        xs[-1] = hi
        out.append((region, xs[:-1].copy(), xs[1:].copy()))
    return out


class _KernelPieces:
    """Interval evaluation of the symmetric operator kernel over boxes.

    Returns the smooth nonsingular value, the singular cofactor (of the
    asinh weight), and the two error radii; generic over scalar/vectorized
    interval payloads.
    """

    def __init__(self, m: int, profile: Profile):
        self.m = m
        self.profile = profile

    def __call__(self, X, phiX, y, region):
        prof = self.profile
        rho_x = prof.to_rho(X)
        rho_y = prof.to_rho(y)
        shift = 4 / prof.a - 2
        u = (y - X) / (y + X + shift)
        u2 = u * u
        phi_y = prof.f_rho_scaled(y, region)
        geom_a = rho_y / (TWO_PI * rho_x * rho_x)
        geom_b = rho_x / (TWO_PI * rho_y * rho_y)
        r_a = rho_x / rho_y
        r_b = rho_y / rho_x
        half = 0.5
        smooth = (phi_y * hons(self.m, r_a, u2) * geom_a
                  + phiX * hons(self.m, r_b, u2) * geom_b) * half
        sing_cof = (phi_y * hos_coeff(r_a) * geom_a
                    + phiX * hos_coeff(r_b) * geom_b) * half
        rad_ns = ((-phi_y) * ens_radius(self.m, r_a, u2) * geom_a
                  + (-phiX) * ens_radius(self.m, r_b, u2) * geom_b) * half
        rad_s = ((-phi_y) * es_coeff(self.m, r_a, u2) * geom_a
                 + (-phiX) * es_coeff(self.m, r_b, u2) * geom_b) * half
        return smooth, sing_cof, rad_ns, rad_s


def op_norm_defect(m: int, mesh=DEFAULT_DEFECT_MESH, n_staircase: int = 512,
                   params: SweepParams = None,
                   matrix: ProjectionMatrix = None):
    """Upper bound on the L2 operator norm of (symmetric part - finite rank).

    Both variables run over the same region-wise uniform mesh (the outer
    one needs the ramp regions resolved just as finely as the inner one).
    Each inner fine cell contributes width times the hull of the absolute
    difference (order-0 quadrature), except cells intersecting the singular
    zone of the staircase grid (``n_staircase`` uniform cells, neighbors of
    the outer cell's uniform cell), where the singular cofactor is bounded
    and the asinh weight integrates in closed form.  The max of the
    per-outer-cell L1 sums bounds the operator norm (generalized Young for
    symmetric kernels).

    Returns (bound interval, per-outer-cell GridEnclosures).
    """
    import time as _time

    t0 = _time.time()
    params = params or SweepParams()
    prof = params.profile
    if matrix is None:
        matrix = load_projection_matrix(m)
    xs_u = uniform_grid(n_staircase)
    pieces = _KernelPieces(m, prof)
    a_half = prof.a * 0.5

    regions = _mesh_cells(prof, mesh)
    # basis values on the fine mesh, reused across all outer cells
    basis_on_mesh = {}
    for region, flo, fhi in regions:
        cells = _vmk(flo.copy(), fhi.copy())
        basis_on_mesh[region] = [
            _basis_eval_vec(q, cells, prof) for q in _block_indices(region)]

    n_total = sum(flo.size for _, flo, _ in regions)
    total_lo = np.empty(n_total)
    total_hi = np.empty(n_total)
    flags = np.zeros(n_total, dtype=np.int8)
    pos = 0
    for region_x, xlo_arr, xhi_arr in regions:
        ux_block = _block_indices(region_x)
        for i in range(xlo_arr.size):
            Xi = _mk(float(xlo_arr[i]), float(xhi_arr[i]))
            phiX = prof.f_rho_scaled(Xi, region_x)
            ux = {p: basis_eval(p, Xi, prof) for p in ux_block}
            ju = int(np.searchsorted(xs_u, Xi.mid, side="right") - 1)
            ju = min(max(ju, 0), n_staircase - 1)
            z_lo = xs_u[max(ju - 1, 0)]
            z_hi = xs_u[min(ju + 2, n_staircase)]
            cell_total = Interval(0.0)
            for region, flo, fhi in regions:
                # coefficients of the finite-rank kernel as a function of y
                coeffs = []
                for q in _block_indices(region):
                    c = Interval(0.0)
                    for p, up in ux.items():
                        c = c + mat_entry(matrix, p, q) * up
                    coeffs.append(c * a_half)
                singular = (fhi > z_lo) & (flo < z_hi)
                reg_idx = np.flatnonzero(~singular)
                if reg_idx.size:
                    y = _vmk(flo[reg_idx].copy(), fhi[reg_idx].copy())
                    Xv = IntervalVec.from_interval(Xi, reg_idx.size)
                    phiXv = IntervalVec.from_interval(phiX, reg_idx.size)
                    smooth, cof, rad_ns, rad_s = pieces(Xv, phiXv, y, region)
                    w_arg = ((y + Xv + (4 / prof.a - 2))
                             / (y - Xv).abs()).asinh()
                    kfin = None
                    for c, uvec in zip(coeffs, basis_on_mesh[region]):
                        term = uvec[reg_idx] * c
                        kfin = term if kfin is None else kfin + term
                    diff = smooth + cof * w_arg - kfin
                    dens = diff.abs() + rad_ns + rad_s * w_arg
                    widths = (_vmk(fhi[reg_idx], fhi[reg_idx].copy())
                              - _vmk(flo[reg_idx], flo[reg_idx].copy()))
                    cell_total = cell_total + sum_intervals(dens * widths)
                sing_idx = np.flatnonzero(singular)
                if sing_idx.size:
                    # nonsingular density per fine cell; the asinh weight is
                    # bounded over the whole zone piece and integrated in a
                    # single closed-form call, which keeps the interval
                    # dependencies of the antiderivative to one evaluation
                    y = _vmk(flo[sing_idx].copy(), fhi[sing_idx].copy())
                    Xv = IntervalVec.from_interval(Xi, sing_idx.size)
                    phiXv = IntervalVec.from_interval(phiX, sing_idx.size)
                    smooth, _, rad_ns, _ = pieces(Xv, phiXv, y, region)
                    kfin = None
                    for c, uvec in zip(coeffs, basis_on_mesh[region]):
                        term = uvec[sing_idx] * c
                        kfin = term if kfin is None else kfin + term
                    dens_ns = (smooth - kfin).abs() + rad_ns
                    widths = (_vmk(fhi[sing_idx], fhi[sing_idx].copy())
                              - _vmk(flo[sing_idx], flo[sing_idx].copy()))
                    cell_total = cell_total + sum_intervals(dens_ns * widths)
                    piece_lo = float(flo[sing_idx[0]])
                    piece_hi = float(fhi[sing_idx[-1]])
                    yz = _mk(piece_lo, piece_hi)
                    _, cof_z, _, rad_s_z = pieces(Xi, phiX, yz, region)
                    sweight = arcsinh_weight_integral(piece_lo, piece_hi,
                                                      Xi, prof.a)
                    cell_total = (cell_total
                                  + (cof_z.abs() + rad_s_z) * sweight)
            total_lo[pos] = max(cell_total.lo, 0.0)
            total_hi[pos] = cell_total.hi
            pos += 1
    grid = GridEnclosures(n_total, total_lo, total_hi, flags,
                          f"defect_m{m}", runtime=_time.time() - t0)
    bound = _mk(float(total_lo.max()), float(total_hi.max()))
    return bound, grid


def mat_entry(matrix: ProjectionMatrix, i: int, j: int) -> Interval:
    return matrix.entries[i][j]


# ---------------------------------------------------------------------------
# Nonrigorous regeneration of the projection matrices
# ---------------------------------------------------------------------------


def _f_rho_scaled_float(y: float, beta: float) -> float:
    if y <= -1 + beta:
        t = 1 + y
        return -(126 * beta ** 4 - 420 * beta ** 3 * t + 540 * beta ** 2 * t * t
                 - 315 * beta * t ** 3 + 70 * t ** 4) * t ** 5 / (2 * beta ** 9)
    if y >= 1 - beta:
        t = y - 1
        return (126 * beta ** 4 + 420 * beta ** 3 * t + 540 * beta ** 2 * t * t
                + 315 * beta * t ** 3 + 70 * t ** 4) * t ** 5 / (2 * beta ** 9)
    return -0.5


_S2 = math.sqrt(2.0)
_AS1 = math.asinh(1.0)
_LOG2 = math.log(2.0)


def _hons_float(m: int, r: float, u2: float) -> float:
    v = 1 + u2
    sv = math.sqrt(v)
    if m == 1:
        inner = (math.log((1 + sv) / 2) / _S2
                 + (-2 + (-1 + sv) * _AS1 + _LOG2) / sv
                 + u2 * (-2 * _S2 + 2.5 * _AS1)
                 - 3 / 16 * u2 * u2 * (_S2 - 3 * _AS1))
    elif m == 3:
        v52 = v * v * sv
        inner = (-46 / (15 * v52) - u2 ** 3 / 48 * (13 * _S2 - 15 * _AS1)
                 + _AS1 - _AS1 / v52
                 + u2 * u2 * (-15 / (4 * _S2) - 2 / v52 + 45 / 8 * _AS1)
                 + u2 / 6 * (-45 * _S2 + 8 / v52 + 45 * _AS1)
                 + _LOG2 / v52 + math.log((1 + sv) / 2) / (4 * _S2))
    else:
        v112 = v ** 5 * sv
        inner = (_AS1 + 33 * u2 * (_AS1 - _S2)
                 - 495 / 8 * u2 ** 2 * (_S2 - 3 * _AS1)
                 - 77 / 4 * u2 ** 3 * (13 * _S2 - 15 * _AS1)
                 - 165 / 128 * u2 ** 4 * (43 * _S2 - 105 * _AS1)
                 - 33 / 640 * u2 ** 5 * (257 * _S2 - 315 * _AS1)
                 - 7 / 15360 * u2 ** 6 * (221 * _S2 - 495 * _AS1)
                 - 8 / (3465 * v112) * (1627 + 11 * u2 * (-604 + 3366 * u2
                                                          - 2268 * u2 ** 2
                                                          + 945 * u2 ** 3))
                 + (_LOG2 - _AS1) / v112 + math.log((1 + sv) / 2) / (32 * _S2))
    return 4 / (1 + r) * inner


def _k_s_float(m: int, x: float, y: float, a: float, beta: float) -> float:
    """Nonrigorous symmetric kernel value (error terms dropped)."""
    if x == y:
        raise ZeroDivisionError("kernel singular on the diagonal")
    rho_x = 1 + a / 2 * (x - 1)
    rho_y = 1 + a / 2 * (y - 1)
    shift = 4 / a - 2
    u = (y - x) / (y + x + shift)
    u2 = u * u
    w = math.asinh(abs(y + x + shift) / abs(y - x))
    phi_y = _f_rho_scaled_float(y, beta)
    phi_x = _f_rho_scaled_float(x, beta)
    ka = (phi_y * (_hons_float(m, rho_x / rho_y, u2)
                   + 4 / (1 + rho_x / rho_y) * w)
          * rho_y / (2 * math.pi * rho_x * rho_x))
    kb = (phi_x * (_hons_float(m, rho_y / rho_x, u2)
                   + 4 / (1 + rho_y / rho_x) * w)
          * rho_x / (2 * math.pi * rho_y * rho_y))
    return 0.5 * (ka + kb)


def _basis_float(i: int, x: float, a: float, beta: float) -> float:
    block = i % 3
    d = i // 3
    if block == 0:
        lo, hi = -1.0, -1.0 + beta
        t = (x + 1) * 2 / beta - 1
        norm = math.sqrt(2 * (2 * d + 1) / (a * beta))
    elif block == 1:
        lo, hi = -1.0 + beta, 1.0 - beta
        t = x / (1 - beta)
        norm = math.sqrt((2 * d + 1) / (a - a * beta))
    else:
        lo, hi = 1.0 - beta, 1.0
        t = (x - 1) * 2 / beta + 1
        norm = math.sqrt(2 * (2 * d + 1) / (a * beta))
    if not lo <= x <= hi:
        return 0.0
    p0, p1 = 1.0, t
    if d == 0:
        return norm
    for k in range(1, d):
        p0, p1 = p1, ((2 * k + 1) * t * p1 - k * p0) / (k + 1)
    return norm * p1


def regen_projection(m: int, quadrature_points: int = 64,
                     profile: Profile = None) -> np.ndarray:
    """Recompute the Galerkin matrix with nonrigorous quadrature.

    Used only to validate the shipped data files, never inside certificates.
    The outer integral uses Gauss-Legendre nodes per block; the inner one is
    adaptive with the kernel's diagonal flagged as a special point.
    """
    from scipy.integrate import quad

    profile = profile or SweepParams().profile
    a = 0.5 * (profile.a.lo + profile.a.hi)
    beta = profile.beta_f
    blocks = {0: (-1.0, -1.0 + beta), 1: (-1.0 + beta, 1.0 - beta),
              2: (1.0 - beta, 1.0)}
    nodes, weights = np.polynomial.legendre.leggauss(quadrature_points)
    out = np.zeros((BASIS_SIZE, BASIS_SIZE))
    for i in range(BASIS_SIZE):
        bi = blocks[i % 3]
        xi = 0.5 * (bi[1] - bi[0]) * nodes + 0.5 * (bi[0] + bi[1])
        wi = 0.5 * (bi[1] - bi[0]) * weights
        for j in range(i, BASIS_SIZE):
            bj = blocks[j % 3]

            def outer(x):
                def inner(y):
                    return _k_s_float(m, x, y, a, beta) * _basis_float(
                        j, y, a, beta)

                pts = [x] if bj[0] < x < bj[1] else None
                val, _ = quad(inner, bj[0], bj[1], points=pts,
                              limit=200, epsabs=1e-10, epsrel=1e-10)
                return val

            total = sum(w * _basis_float(i, x, a, beta) * outer(x)
                        for x, w in zip(xi, wi))
            out[i, j] = out[j, i] = a / 2 * total
    return out


def regen_projection_entry(m: int, i: int, j: int,
                           quadrature_points: int = 64,
                           profile: Profile = None) -> float:
    """Single regenerated Galerkin coefficient (for spot checks)."""
    from scipy.integrate import quad

    profile = profile or SweepParams().profile
    a = 0.5 * (profile.a.lo + profile.a.hi)
    beta = profile.beta_f
    blocks = {0: (-1.0, -1.0 + beta), 1: (-1.0 + beta, 1.0 - beta),
              2: (1.0 - beta, 1.0)}
    bi = blocks[i % 3]
    bj = blocks[j % 3]
    nodes, weights = np.polynomial.legendre.leggauss(quadrature_points)
    xi = 0.5 * (bi[1] - bi[0]) * nodes + 0.5 * (bi[0] + bi[1])
    wi = 0.5 * (bi[1] - bi[0]) * weights
    total = 0.0
    for x, w in zip(xi, wi):
        def inner(y):
            return _k_s_float(m, x, y, a, beta) * _basis_float(j, y, a, beta)

        pts = [x] if bj[0] < x < bj[1] else None
        val, _ = quad(inner, bj[0], bj[1], points=pts, limit=200,
                      epsabs=1e-10, epsrel=1e-10)
        total += w * _basis_float(i, x, a, beta) * val
    return a / 2 * total
