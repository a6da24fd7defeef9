"""Generalized discrete weak second-order partial derivatives.

For a weak function v = {v0, vb, vg} on an element T the weak derivative
with index pair (i, j) is the sum of the classical second partial of the
interior polynomial, a member of P_{k-2}(T), and an edge-mismatch correction
q in P_n(T) determined by

    (q, phi)_T = <(Q_b v0 - vb) n_i, d_j phi>_dT
                 - <Q_g(d_i v0) - vg_i, phi n_j>_dT    for all phi in P_n(T).

The correction depends on (i, j) through n_i, d_j, and n_j, so one matrix is
stored per index pair.  Both operators are exact linear maps on the local
DOF vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import polybasis as pb
from .projection import ElementWorkspace


@dataclass(frozen=True)
class LocalDofLayout:
    """Offsets of the local DOF blocks: v0 first, then per-edge vb blocks,
    then per-edge vg blocks (component 0 before component 1)."""

    k: int
    m: int
    l: int
    n_edges: int

    @property
    def dim_k(self) -> int:
        return pb.dim_poly(self.k)

    @property
    def dim(self) -> int:
        e = self.n_edges
        return self.dim_k + e * (self.m + 1) + 2 * e * (self.l + 1)

    def v0_slice(self):
        return slice(0, self.dim_k)

    def vb_slice(self, e):
        start = self.dim_k + e * (self.m + 1)
        return slice(start, start + self.m + 1)

    def vg_comp_slice(self, e, comp):
        start = (self.dim_k + self.n_edges * (self.m + 1)
                 + e * 2 * (self.l + 1) + comp * (self.l + 1))
        return slice(start, start + self.l + 1)


@dataclass(frozen=True)
class LocalWeakHessian:
    """Per-element weak second derivative operators.

    ``h0[(i, j)]`` maps v0 coefficients to the P_{k-2} coefficients of the
    classical second partial; ``delta[(i, j)]`` maps the full local DOF
    vector to the P_n coefficients of the edge-mismatch correction.
    """

    layout: LocalDofLayout
    h0: dict
    delta: dict


def second_derivative_maps(k: int, scale: float) -> dict:
    """Exact differentiation matrices P_k -> P_{k-2} for the scaled monomial
    basis; keys are index pairs (i, j) with i, j in {0, 1}."""
    exps_k = pb.poly_exponents(k)
    exps_k2 = pb.poly_exponents(max(k - 2, 0))
    index = {(int(a), int(b)): i for i, (a, b) in enumerate(exps_k2)}
    dim_k2 = len(exps_k2)
    h = {key: np.zeros((dim_k2, len(exps_k)))
         for key in [(0, 0), (0, 1), (1, 0), (1, 1)]}
    s2 = scale * scale
    for c, (a, b) in enumerate(exps_k):
        a = int(a)
        b = int(b)
        if a >= 2:
            h[(0, 0)][index[(a - 2, b)], c] = a * (a - 1) / s2
        if a >= 1 and b >= 1:
            val = a * b / s2
            h[(0, 1)][index[(a - 1, b - 1)], c] = val
            h[(1, 0)][index[(a - 1, b - 1)], c] = val
        if b >= 2:
            h[(1, 1)][index[(a, b - 2)], c] = b * (b - 1) / s2
    return h


def mismatch_operators(ws: ElementWorkspace, layout: LocalDofLayout):
    """Linear maps from local DOFs to the edge mismatches.

    Returns (sb, sg): per edge, ``sb[e]`` maps DOFs to the Legendre
    coefficients of Q_b v0 - vb, and ``sg[e][c]`` to those of
    Q_g(d_c v0) - vg_c.
    """
    nd = layout.dim
    sb = []
    sg = []
    for e, blk in enumerate(ws.edges):
        b = np.zeros((ws.m + 1, nd))
        b[:, layout.v0_slice()] = blk.proj_b
        b[:, layout.vb_slice(e)] -= np.eye(ws.m + 1)
        sb.append(b)
        comps = []
        for c in range(2):
            g = np.zeros((ws.l + 1, nd))
            g[:, layout.v0_slice()] = blk.proj_g[c]
            g[:, layout.vg_comp_slice(e, c)] -= np.eye(ws.l + 1)
            comps.append(g)
        sg.append(comps)
    return sb, sg


def build_delta_g(ws: ElementWorkspace, i: int, j: int,
                  layout: LocalDofLayout | None = None,
                  _mismatch=None) -> np.ndarray:
    """Matrix of the edge-mismatch correction for index pair (i, j).

    Maps the local DOF vector to coefficients in P_n(T).  Indices are
    0-based (0 = x, 1 = y).
    """
    if layout is None:
        layout = LocalDofLayout(ws.k, ws.m, ws.l, ws.n_edges)
    sb, sg = _mismatch if _mismatch is not None else mismatch_operators(ws, layout)
    rhs = np.zeros((ws.dim_n, layout.dim))
    for e, blk in enumerate(ws.edges):
        # <(Q_b v0 - vb) n_i, d_j phi>_e with phi from the P_n basis.
        k1 = (blk.leg_m * blk.wq) @ blk.gn[j].T        # (m+1, dim_n)
        rhs += blk.normal[i] * (k1.T @ sb[e])
        # -<Q_g(d_i v0) - vg_i, phi n_j>_e
        k2 = (blk.leg_l * blk.wq) @ blk.vn.T           # (l+1, dim_n)
        rhs -= blk.normal[j] * (k2.T @ sg[e][i])
    return sla.cho_solve(ws.cho_n, rhs)


def build_local_weak_hessian(ws: ElementWorkspace) -> LocalWeakHessian:
    """All four (i, j) operator pairs for one element shape."""
    layout = LocalDofLayout(ws.k, ws.m, ws.l, ws.n_edges)
    h0 = second_derivative_maps(ws.k, ws.diameter)
    mismatch = mismatch_operators(ws, layout)
    delta = {(i, j): build_delta_g(ws, i, j, layout, _mismatch=mismatch)
             for i in range(2) for j in range(2)}
    return LocalWeakHessian(layout=layout, h0=h0, delta=delta)


def apply_weak_hessian(lwh: LocalWeakHessian, i: int, j: int, dofs):
    """Apply the (i, j) weak second derivative to a local DOF vector.

    Returns (p, q): coefficients of the P_{k-2} part (second partial of v0)
    and of the P_n correction; the weak derivative is their sum.
    """
    dofs = np.asarray(dofs, dtype=float)
    p = lwh.h0[(i, j)] @ dofs[lwh.layout.v0_slice()]
    q = lwh.delta[(i, j)] @ dofs
    return p, q
