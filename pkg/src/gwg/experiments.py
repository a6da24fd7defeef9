"""Manufactured solutions, convergence sweeps, and table output.

Five benchmark solutions are registered: two smooth trigonometric fields on
the unit square, one with a mild corner singularity (H^{2.6-eps}), and one
homogeneous singular field (H^{2.5-eps}) suited to the L-shaped domain.
``run_sweep`` drives mesh -> assemble -> constrain -> solve -> error report
across refinement levels; ``emit`` writes the resulting table as CSV or
Markdown with the same fixed formatting.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import (GwgConfig, apply_boundary_conditions, assemble_load,
                       assemble_stiffness, make_mesh)
from .errnorms import ErrorReport, error_report, rate
from .errors import ConfigError, NonConvergenceError
from .linsolve import solve_cg, solve_dense
from .mesh import L_SHAPED, UNIT_SQUARE


@dataclass(frozen=True)
class ManufacturedCase:
    """A closed-form solution with everything the scheme and metrics need.

    ``grad`` returns (ux, uy); ``hess`` returns (uxx, uxy, uyy); ``g2`` is
    the outward normal derivative as g2(x, y, nx, ny).  All callables are
    vectorized over coordinate arrays.
    """

    name: str
    u: callable
    grad: callable
    hess: callable
    f: callable
    domain: str = UNIT_SQUARE
    note: str = ""

    def g1(self, x, y):
        return self.u(x, y)

    def g2(self, x, y, nx, ny):
        ux, uy = self.grad(x, y)
        return ux * nx + uy * ny


def _case_cos_shift():
    def u(x, y):
        return np.cos(x + 1.0) * np.sin(2.0 * y - 1.0)

    def grad(x, y):
        return (-np.sin(x + 1.0) * np.sin(2.0 * y - 1.0),
                2.0 * np.cos(x + 1.0) * np.cos(2.0 * y - 1.0))

    def hess(x, y):
        return (-np.cos(x + 1.0) * np.sin(2.0 * y - 1.0),
                -2.0 * np.sin(x + 1.0) * np.cos(2.0 * y - 1.0),
                -4.0 * np.cos(x + 1.0) * np.sin(2.0 * y - 1.0))

    def f(x, y):
        return 25.0 * np.cos(x + 1.0) * np.sin(2.0 * y - 1.0)

    return ManufacturedCase("cossin_shift", u, grad, hess, f,
                            note="smooth; biharmonic load 25u")


def _case_sinxsiny():
    def u(x, y):
        return np.sin(x) * np.sin(y)

    def grad(x, y):
        return np.cos(x) * np.sin(y), np.sin(x) * np.cos(y)

    def hess(x, y):
        return (-np.sin(x) * np.sin(y), np.cos(x) * np.cos(y),
                -np.sin(x) * np.sin(y))

    def f(x, y):
        return 4.0 * np.sin(x) * np.sin(y)

    return ManufacturedCase("sinxsiny", u, grad, hess, f,
                            note="smooth; biharmonic load 4u")


def _case_cosxsiny():
    def u(x, y):
        return np.cos(x) * np.sin(y)

    def grad(x, y):
        return -np.sin(x) * np.sin(y), np.cos(x) * np.cos(y)

    def hess(x, y):
        return (-np.cos(x) * np.sin(y), -np.sin(x) * np.cos(y),
                -np.cos(x) * np.sin(y))

    def f(x, y):
        return 4.0 * np.cos(x) * np.sin(y)

    return ManufacturedCase("cosxsiny", u, grad, hess, f,
                            note="smooth; biharmonic load 4u")


def _case_corner08():
    # u = (x^2 + y^2)^0.8, in H^{2.6-eps}; the load r^{-2.4} blows up at the
    # origin corner but quadrature nodes never land there.
    def u(x, y):
        return (x * x + y * y) ** 0.8

    def grad(x, y):
        s = x * x + y * y
        with np.errstate(divide="ignore", invalid="ignore"):
            gx = 1.6 * x * s ** -0.2
            gy = 1.6 * y * s ** -0.2
        zero = s == 0.0
        return np.where(zero, 0.0, gx), np.where(zero, 0.0, gy)

    def hess(x, y):
        s = x * x + y * y
        with np.errstate(divide="ignore", invalid="ignore"):
            base = 1.6 * s ** -0.2
            hxx = base - 0.64 * x * x * s ** -1.2
            hxy = -0.64 * x * y * s ** -1.2
            hyy = base - 0.64 * y * y * s ** -1.2
        zero = s == 0.0
        return (np.where(zero, 0.0, hxx), np.where(zero, 0.0, hxy),
                np.where(zero, 0.0, hyy))

    def f(x, y):
        s = x * x + y * y
        with np.errstate(divide="ignore"):
            return 0.4096 * s ** -1.2

    return ManufacturedCase("corner08", u, grad, hess, f,
                            note="low regularity H^{2.6-eps}; singular load")


def _polar(x, y):
    r = np.hypot(x, y)
    t = np.arctan2(y, x)
    t = np.where(t < 0.0, t + 2.0 * np.pi, t)
    return r, t


def _case_rsingular():
    # u = r^{3/2} sin(theta/2) with theta in [0, 3*pi/2] on the L-shape,
    # measured from the positive x axis; biharmonic, so f = 0.  The branch
    # keeps u single valued and sin(theta/2) >= 0 across the whole domain.
    def u(x, y):
        r, t = _polar(x, y)
        return r**1.5 * np.sin(0.5 * t)

    def grad(x, y):
        r, t = _polar(x, y)
        sq = np.sqrt(r)
        return (sq * (0.5 * np.sin(1.5 * t) - np.sin(0.5 * t)),
                sq * (np.cos(0.5 * t) - 0.5 * np.cos(1.5 * t)))

    def hess(x, y):
        r, t = _polar(x, y)
        g = 0.5 * np.sin(1.5 * t) - np.sin(0.5 * t)
        gp = 0.75 * np.cos(1.5 * t) - 0.5 * np.cos(0.5 * t)
        h = np.cos(0.5 * t) - 0.5 * np.cos(1.5 * t)
        hp = -0.5 * np.sin(0.5 * t) + 0.75 * np.sin(1.5 * t)
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = 1.0 / np.sqrt(r)
            hxx = inv * (0.5 * g * np.cos(t) - gp * np.sin(t))
            hxy = inv * (0.5 * g * np.sin(t) + gp * np.cos(t))
            hyy = inv * (0.5 * h * np.sin(t) + hp * np.cos(t))
        zero = r == 0.0
        return (np.where(zero, 0.0, hxx), np.where(zero, 0.0, hxy),
                np.where(zero, 0.0, hyy))

    def f(x, y):
        return np.zeros_like(np.asarray(x, dtype=float))

    return ManufacturedCase("rsingular", u, grad, hess, f, domain=L_SHAPED,
                            note="low regularity H^{2.5-eps}; f = 0")


def registry() -> dict:
    """The five benchmark cases, keyed by identifier."""
    cases = [_case_cos_shift(), _case_sinxsiny(), _case_cosxsiny(),
             _case_corner08(), _case_rsingular()]
    return {c.name: c for c in cases}


def get_case(name: str) -> ManufacturedCase:
    cases = registry()
    if name not in cases:
        raise ConfigError(
            f"unknown case {name!r}; known: {sorted(cases)}")
    return cases[name]


@dataclass
class ConvergenceTable:
    """Per-level errors and log2 rates for one sweep."""

    case: str
    config: dict
    levels: list = field(default_factory=list)
    reports: list = field(default_factory=list)
    runtimes: list = field(default_factory=list)

    def errors(self, key: str) -> np.ndarray:
        return np.array([getattr(r, key) for r in self.reports])

    def rates(self, key: str) -> np.ndarray:
        """Rates aligned with rows; the first row has no rate (NaN)."""
        vals = rate(self.errors(key))
        return np.concatenate([[np.nan], vals])


def solve_reduced(reduced, config: GwgConfig):
    """Dispatch to the configured solver; returns the free-DOF solution."""
    if config.solver == "dense":
        return solve_dense(reduced.matrix, reduced.rhs, cap=config.dense_cap)
    x, _ = solve_cg(reduced.matrix, reduced.rhs, rel_tol=config.tol,
                    max_iters=config.max_iters)
    return x


def run_single(config: GwgConfig, case: ManufacturedCase, inv_h: int):
    """One level of a sweep; returns (system, solution, ErrorReport)."""
    mesh = make_mesh(config, inv_h)
    system = assemble_stiffness(mesh, config)
    load = assemble_load(system, case.f)
    reduced = apply_boundary_conditions(system, load, case.g1, case.g2,
                                        case.grad)
    try:
        x = solve_reduced(reduced, config)
    except NonConvergenceError as exc:
        raise NonConvergenceError(
            f"level 1/h={inv_h}: {exc}", exc.best_x, exc.residual,
            exc.iterations) from exc
    solution = reduced.expand(x)
    report = error_report(system, solution, case.u, case.grad, case.hess,
                          inv_h=inv_h)
    return system, solution, report


def run_sweep(config: GwgConfig, case: ManufacturedCase | str,
              levels) -> ConvergenceTable:
    """Run the full refinement sweep and collect the convergence table."""
    if isinstance(case, str):
        case = get_case(case)
    levels = [int(v) for v in levels]
    if any(b <= a for a, b in zip(levels, levels[1:])):
        raise ConfigError(f"levels must be ascending, got {levels}")
    table = ConvergenceTable(case=case.name, config=config.to_dict())
    for inv_h in levels:
        t0 = time.perf_counter()
        _, _, report = run_single(config, case, inv_h)
        table.levels.append(inv_h)
        table.reports.append(report)
        table.runtimes.append(time.perf_counter() - t0)
    return table


#: Output columns, in order: resolution, then (error, rate) pairs.
COLUMNS = ("inv_h", "tri_norm", "tri_rate", "l2_e0", "l2_rate", "eb",
           "eb_rate", "eg", "eg_rate", "h2c", "h2c_rate", "h1c", "h1c_rate")

_METRICS = ("triple_bar", "l2_e0", "eb_edge", "eg_edge",
            "h2_center", "h1_center")


def _fmt_err(v: float) -> str:
    return f"{v:.2e}"


def _fmt_rate(v: float) -> str:
    return "" if not np.isfinite(v) else f"{v:.2f}"


def table_rows(table: ConvergenceTable):
    """Formatted cell strings per row, matching ``COLUMNS``."""
    rates = {k: table.rates(k) for k in _METRICS}
    rows = []
    for i, inv_h in enumerate(table.levels):
        row = [str(int(inv_h))]
        r = table.reports[i]
        for key in _METRICS:
            row.append(_fmt_err(getattr(r, key)))
            row.append(_fmt_rate(rates[key][i]))
        rows.append(row)
    return rows


def emit(table: ConvergenceTable, path, fmt: str = "csv"):
    """Write the table to ``path`` as csv or markdown; returns the path."""
    if fmt not in ("csv", "markdown"):
        raise ConfigError(f"unknown format {fmt!r}")
    rows = table_rows(table)
    lines = []
    if fmt == "csv":
        lines.append(",".join(COLUMNS))
        lines.extend(",".join(row) for row in rows)
    else:
        lines.append("| " + " | ".join(COLUMNS) + " |")
        lines.append("|" + "---|" * len(COLUMNS))
        lines.extend("| " + " | ".join(row) + " |" for row in rows)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def _preset(case, mesh_kind, domain, levels, **cfg):
    config = GwgConfig(domain=domain, mesh_kind=mesh_kind, **cfg)
    return case, config, levels


#: Paper-table presets: table number -> list of (block name, case, config,
#: default levels).  Levels stay at desk scale; pass explicit levels to the
#: CLI for the full runs.
def table_presets() -> dict:
    presets = {
        1: [("p1", *_preset("cossin_shift", "rectangular", UNIT_SQUARE,
                            [8, 16, 32], k=2, m=0, l=0, n=1))],
        2: [(f"m{m}", *_preset("sinxsiny", "triangular", UNIT_SQUARE,
                               [8, 16, 32, 64], k=2, m=m, l=0, n=0))
            for m in (0, 1, 2)],
        3: [("p3", *_preset("cossin_shift", "triangular", UNIT_SQUARE,
                            [4, 8, 16, 32], k=3, m=0, l=1, n=1))],
        4: [(f"rho{int(r1)}_{int(r2)}",
             *_preset("cosxsiny", "triangular", UNIT_SQUARE,
                      [8, 16, 32, 64], k=2, m=0, l=0, n=0,
                      rho1=r1, rho2=r2))
            for (r1, r2) in ((1.0, 1.0), (10.0, 10.0), (100.0, 1.0))],
        5: [(f"n{n}", *_preset("corner08", "square", UNIT_SQUARE,
                               [8, 16, 32, 64], k=2, m=0, l=0, n=n))
            for n in (0, 1)],
        6: [("omega1_square", *_preset("rsingular", "square", UNIT_SQUARE,
                                       [8, 16, 32, 64], k=2, m=0, l=0, n=0)),
            ("omega1_triangular",
             *_preset("rsingular", "triangular", UNIT_SQUARE,
                      [8, 16, 32, 64], k=2, m=0, l=0, n=0)),
            ("omega2_triangular",
             *_preset("rsingular", "triangular", L_SHAPED,
                      [4, 8, 16, 32], k=2, m=0, l=0, n=0))],
    }
    return presets


def reproduce_table(number: int, outdir, levels=None, fmt: str = "csv"):
    """Run the presets for one paper table; writes one file per block.

    The rectangular family's nominal 1/h differs from the level index, and
    absolute values there are informational; rate columns are the primary
    comparison everywhere.
    """
    presets = table_presets()
    if number not in presets:
        raise ConfigError(f"table must be in 1..6, got {number}")
    import os
    os.makedirs(outdir, exist_ok=True)
    ext = "csv" if fmt == "csv" else "md"
    paths = []
    for block, case, config, default_levels in presets[number]:
        table = run_sweep(config, case, levels or default_levels)
        path = os.path.join(outdir, f"table{number}_{block}.{ext}")
        emit(table, path, fmt)
        paths.append(path)
    return paths
