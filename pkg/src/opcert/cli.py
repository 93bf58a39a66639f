"""Command-line entry point.

Subcommands map one-to-one to the certified computations:

    min-i          multiplier sweep (per-cell enclosures + minimum)
    e3             residual of the approximate m=3 eigen-equation
    theta-a3       antisymmetric part applied to the bump
    e6             residual of the approximate m=6 eigen-equation
    gershgorin     deflated-matrix eigenvalue lower bounds (m=3 and m=6)
    defect         operator-norm defect ||T_S - T_fin|| (per m)
    certify-all    run (or load) everything and compose the certificate
    regen-matrices nonrigorous regeneration of the projection matrices

Configuration comes from an optional key=value file plus flags (flags win).
Output files: one per-cell report per sweep plus ``certificate.txt``; the
process exits 0 only when the certificate passes globally.
"""

from __future__ import annotations

import argparse
import os
import sys
import time
from dataclasses import dataclass, fields

import numpy as np

from .interval import Interval, _mk
from .operators import (
    GridEnclosures,
    OperatorQuantity,
    Quantity,
    SweepParams,
    bump_norm_sq,
    eval_error_vector,
    grid_inner_bump,
    grid_l2_norm,
    read_grid_report,
    sweep_itilde,
    write_grid_report,
)
from .quadrature import DEFAULT_ABS_TOL, DEFAULT_MAX_EVALS, DEFAULT_REL_TOL
from .spectral import (
    DEFAULT_DEFECT_MESH,
    gershgorin_min,
    load_projection_matrix,
    op_norm_defect,
    regen_projection,
)
from .verifier import (
    CertificateInputs,
    compose_certificate,
    format_certificate,
    write_certificate,
)

COMMANDS = ("min-i", "e3", "theta-a3", "e6", "gershgorin", "defect",
            "certify-all", "regen-matrices")


@dataclass
class RunConfig:
    command: str = "certify-all"
    n: int = 512
    abs_tol: float = DEFAULT_ABS_TOL
    rel_tol: float = DEFAULT_REL_TOL
    budget: int = DEFAULT_MAX_EVALS
    threads: int = 1
    out_dir: str = "out"
    matrix_dir: str = ""
    fast: bool = False
    m: int = 3
    mesh_n1: int = DEFAULT_DEFECT_MESH[0]
    mesh_n2: int = DEFAULT_DEFECT_MESH[1]
    mesh_n3: int = DEFAULT_DEFECT_MESH[2]
    use_cached: bool = False

    def sweep_params(self) -> SweepParams:
        rule = "order0" if self.fast else "gl2"
        return SweepParams(abs_tol=self.abs_tol, rel_tol=self.rel_tol,
                           max_evals=self.budget, rule=rule)

    def mesh(self):
        if self.fast:
            return (max(self.mesh_n1 // 8, 8), max(self.mesh_n2 // 8, 64),
                    max(self.mesh_n3 // 8, 8))
        return (self.mesh_n1, self.mesh_n2, self.mesh_n3)


_CONFIG_TYPES = {f.name: f.type for f in fields(RunConfig)}


def load_config(path) -> RunConfig:
    """key=value file; unknown keys are an error naming the valid ones."""
    cfg = RunConfig()
    with open(path) as f:
        for line_no, line in enumerate(f, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip().replace("-", "_")
            value = value.strip()
            if key not in _CONFIG_TYPES:
                raise ValueError(
                    f"{path}:{line_no}: unknown key {key!r}; valid keys: "
                    + ", ".join(sorted(_CONFIG_TYPES)))
            current = getattr(cfg, key)
            if isinstance(current, bool):
                setattr(cfg, key, value.lower() in ("1", "true", "yes"))
            elif isinstance(current, int):
                setattr(cfg, key, int(value))
            elif isinstance(current, float):
                setattr(cfg, key, float(value))
            else:
                setattr(cfg, key, value)
    return cfg


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opcert",
                                description=__doc__.splitlines()[0])
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key=value configuration file")
    p.add_argument("--n", type=int, help="grid cells (default 512)")
    p.add_argument("--abs-tol", type=float, dest="abs_tol")
    p.add_argument("--rel-tol", type=float, dest="rel_tol")
    p.add_argument("--budget", type=int,
                   help="max splits per integral (default 100000)")
    p.add_argument("--threads", type=int)
    p.add_argument("--out-dir", dest="out_dir")
    p.add_argument("--matrix-dir", dest="matrix_dir",
                   help="directory with projection_matrix_m{3,6}.txt")
    p.add_argument("--m", type=int, choices=(3, 6),
                   help="which operator for the defect command")
    p.add_argument("--mesh-n1", type=int, dest="mesh_n1")
    p.add_argument("--mesh-n2", type=int, dest="mesh_n2")
    p.add_argument("--mesh-n3", type=int, dest="mesh_n3")
    p.add_argument("--fast", action="store_true", default=None,
                   help="order-0 rule and shrunk meshes (quick, wide)")
    p.add_argument("--use-cached", action="store_true", default=None,
                   dest="use_cached",
                   help="reuse sweep output files already in out-dir")
    return p


def parse_args(argv) -> RunConfig:
    ns = _parser().parse_args(argv)
    cfg = load_config(ns.config) if ns.config else RunConfig()
    cfg.command = ns.command
    for key in _CONFIG_TYPES:
        if key == "command":
            continue
        val = getattr(ns, key, None)
        if val is not None:
            setattr(cfg, key, val)
    return cfg


def _matrix(cfg: RunConfig, m: int):
    if cfg.matrix_dir:
        return load_projection_matrix(
            m, os.path.join(cfg.matrix_dir, f"projection_matrix_m{m}.txt"))
    return load_projection_matrix(m)


def _grid_path(cfg, name):
    return os.path.join(cfg.out_dir, f"{name}_{cfg.n}.out")


def _sweep_or_load(cfg, name, compute):
    path = _grid_path(cfg, name)
    if cfg.use_cached and os.path.exists(path):
        print(f"[opcert] loading cached {path}")
        return read_grid_report(path)
    t0 = time.time()
    grid = compute()
    print(f"[opcert] {name}: {time.time() - t0:.1f}s "
          f"(residual segments: {grid.residual_segments})")
    write_grid_report(path, grid)
    return grid


def _interval_from_grid_min(grid: GridEnclosures) -> Interval:
    return _mk(float(grid.lo.min()), float(grid.hi.min()))


def run(cfg: RunConfig) -> int:
    """Execute one command; returns the process exit status."""
    os.makedirs(cfg.out_dir, exist_ok=True)
    params = cfg.sweep_params()
    started = time.time()

    if cfg.command == "min-i":
        grid = _sweep_or_load(cfg, "min_i",
                              lambda: sweep_itilde(cfg.n, params))
        m = _interval_from_grid_min(grid)
        print(f"min multiplier enclosure: [{m.lo!r}, {m.hi!r}] "
              f"attained at cell {int(grid.lo.argmin())} of {cfg.n}")
        return 0 if grid.ok else 1

    if cfg.command in ("e3", "theta-a3", "e6"):
        which = {"e3": Quantity.E3, "theta-a3": Quantity.THETA_A3,
                 "e6": Quantity.E6}[cfg.command]
        itilde = None
        if which in (Quantity.E3, Quantity.E6):
            itilde = _sweep_or_load(cfg, "min_i",
                                    lambda: sweep_itilde(cfg.n, params))
        grid = _sweep_or_load(
            cfg, which.value,
            lambda: eval_error_vector(OperatorQuantity.of(which), cfg.n,
                                      params, itilde=itilde))
        norm = grid_l2_norm(grid, params)
        print(f"L2 norm enclosure: [{norm.lo!r}, {norm.hi!r}]")
        if which == Quantity.E3:
            dot = grid_inner_bump(grid, params)
            print(f"|<e, bump>| enclosure: [{dot.lo!r}, {dot.hi!r}]")
        return 0 if grid.ok else 1

    if cfg.command == "gershgorin":
        for m in (3, 6):
            bound, idx = gershgorin_min(_matrix(cfg, m), drop=1)
            print(f"m={m}: eigenvalues of deflated matrix >= {bound.lo!r} "
                  f"(leftmost disk at original index {idx})")
        return 0

    if cfg.command == "defect":
        bound, grid = op_norm_defect(cfg.m, cfg.mesh(), cfg.n, params,
                                     _matrix(cfg, cfg.m))
        write_grid_report(_grid_path(cfg, f"defect_m{cfg.m}"), grid)
        print(f"||T_S - T_fin|| (m={cfg.m}) <= {bound.hi!r} "
              f"({time.time() - started:.1f}s)")
        return 0 if grid.ok else 1

    if cfg.command == "regen-matrices":
        for m in (3, 6):
            t0 = time.time()
            regen = regen_projection(m)
            ref = _matrix(cfg, m).values
            diff = float(np.max(np.abs(regen - ref)))
            path = os.path.join(cfg.out_dir, f"regen_matrix_m{m}.txt")
            np.savetxt(path, regen, fmt="%.11f")
            print(f"m={m}: regenerated in {time.time() - t0:.1f}s, "
                  f"max |regen - shipped| = {diff:.3e}")
        return 0

    if cfg.command == "certify-all":
        report = certify_all(cfg)
        text = format_certificate(report)
        sys.stdout.write(text)
        write_certificate(os.path.join(cfg.out_dir, "certificate.txt"),
                          report)
        return 0 if report.global_pass else 1

    raise AssertionError(f"unhandled command {cfg.command}")


def certify_all(cfg: RunConfig):
    """Run (or load) all sweeps, then compose the certificate."""
    params = cfg.sweep_params()
    t_start = time.time()
    os.makedirs(cfg.out_dir, exist_ok=True)

    itilde = _sweep_or_load(cfg, "min_i",
                            lambda: sweep_itilde(cfg.n, params))
    e3 = _sweep_or_load(
        cfg, "e3", lambda: eval_error_vector(
            OperatorQuantity.of(Quantity.E3), cfg.n, params, itilde=itilde))
    ta = _sweep_or_load(
        cfg, "theta_a3", lambda: eval_error_vector(
            OperatorQuantity.of(Quantity.THETA_A3), cfg.n, params))
    e6 = _sweep_or_load(
        cfg, "e6", lambda: eval_error_vector(
            OperatorQuantity.of(Quantity.E6), cfg.n, params, itilde=itilde))

    def defect(m):
        name = f"defect_m{m}"
        path = _grid_path(cfg, name)
        if cfg.use_cached and os.path.exists(path):
            print(f"[opcert] loading cached {path}")
            grid = read_grid_report(path)
        else:
            t0 = time.time()
            _, grid = op_norm_defect(m, cfg.mesh(), cfg.n, params,
                                     _matrix(cfg, m))
            print(f"[opcert] {name}: {time.time() - t0:.1f}s")
            write_grid_report(path, grid)
        return _mk(float(grid.lo.max()), float(grid.hi.max()))

    defect3 = defect(3)
    defect6 = defect(6)
    gersh3, _ = gershgorin_min(_matrix(cfg, 3), drop=1)
    gersh6, _ = gershgorin_min(_matrix(cfg, 6), drop=1)

    flagged = [g.label for g in (itilde, e3, ta, e6) if not g.ok]
    if flagged:
        from .verifier import CertificateReport, Record

        return CertificateReport(
            [Record(f"flagged_sweep_{name}", None, 0.0, ">", False,
                    note="integration failure flag set; result unusable")
             for name in flagged],
            False,
            {"n": cfg.n, "flagged_sweeps": ",".join(flagged)})
    inputs = CertificateInputs(
        min_itilde=_interval_from_grid_min(itilde),
        e_norm=grid_l2_norm(e3, params),
        e_dot_bump=grid_inner_bump(e3, params),
        theta_a_norm=grid_l2_norm(ta, params),
        e6_norm=grid_l2_norm(e6, params),
        gersh3=gersh3, gersh6=gersh6,
        defect3=defect3, defect6=defect6,
        bump_norm_sq=bump_norm_sq(params, cfg.n),
    )
    provenance = {
        "n": cfg.n, "abs_tol": cfg.abs_tol, "rel_tol": cfg.rel_tol,
        "budget": cfg.budget, "rule": params.rule,
        "mesh": "x".join(str(v) for v in cfg.mesh()),
        "total_seconds": round(time.time() - t_start, 1),
        "flagged_sweeps": ",".join(flagged) or "none",
    }
    report = compose_certificate(inputs, provenance)
    if flagged:
        report.global_pass = False
    return report


def main(argv=None) -> int:
    cfg = parse_args(sys.argv[1:] if argv is None else argv)
    try:
        return run(cfg)
    except (ValueError, OSError) as exc:
        print(f"[opcert] error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
