"""The six error metrics reported for each run.

For the error weak function e = (interpolant of u) - u_h these are the
energy seminorm induced by the assembled bilinear form, the interior L2
error, the two h_T-weighted edge norms (interior edges counted once per
incident element), and the two center-point seminorms comparing the interior
polynomial directly against the exact solution at element centroids.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import GwgSystem
from .projection import project_weak


@dataclass
class ErrorReport:
    triple_bar: float
    l2_e0: float
    eb_edge: float
    eg_edge: float
    h2_center: float
    h1_center: float
    inv_h: int = 0
    h: float = 0.0
    dofs: int = 0

    def as_tuple(self):
        return (self.triple_bar, self.l2_e0, self.eb_edge, self.eg_edge,
                self.h2_center, self.h1_center)


#: Column keys of the six metrics, in report order.
METRIC_KEYS = ("triple_bar", "l2_e0", "eb_edge", "eg_edge",
               "h2_center", "h1_center")


def triple_bar(system: GwgSystem, e: np.ndarray) -> float:
    """Energy seminorm sqrt(e^T A e) with the unconstrained stiffness."""
    val = float(e @ (system.matrix @ e))
    return float(np.sqrt(max(val, 0.0)))


def l2_e0(system: GwgSystem, e: np.ndarray) -> float:
    """L2 norm of the interior polynomial part of ``e``."""
    disc = system.disc
    total = 0.0
    for cid, members in enumerate(disc.pw.class_members):
        ws = disc.pw.workspaces[cid]
        coeffs = np.stack([e[disc.dofmap.v0_slice(int(t))] for t in members])
        total += float(np.einsum("ci,ij,cj->", coeffs, ws.mass_k, coeffs))
    return float(np.sqrt(max(total, 0.0)))


def _edge_weights(system: GwgSystem) -> np.ndarray:
    """Sum of incident-element diameters per edge (h_T weights)."""
    disc = system.disc
    w = np.zeros(system.mesh.n_edges)
    diam = disc.pw.diameters
    for e in range(system.mesh.n_edges):
        t0, t1 = system.mesh.edge_elements[e]
        w[e] = diam[t0] + (diam[t1] if t1 >= 0 else 0.0)
    return w

def eb_edge(system: GwgSystem, e: np.ndarray) -> float:
    """Edge-trace norm (sum_T h_T ||e_b||^2_dT)^(1/2)."""
    disc = system.disc
    dofmap = disc.dofmap
    w = _edge_weights(system)
    lengths = disc.pw.edge_lengths
    q = np.arange(dofmap.m + 1)
    total = 0.0
    for eid in range(system.mesh.n_edges):
        c = e[dofmap.vb_slice(eid)]
        norm2 = float(((c**2) * (lengths[eid] / (2 * q + 1))).sum())
        total += w[eid] * norm2
    return float(np.sqrt(total))


def eg_edge(system: GwgSystem, e: np.ndarray) -> float:
    """Edge-gradient norm (sum_T h_T ||e_g||^2_dT)^(1/2), both components."""
    disc = system.disc
    dofmap = disc.dofmap
    w = _edge_weights(system)
    lengths = disc.pw.edge_lengths
    q = np.arange(dofmap.l + 1)
    total = 0.0
    for eid in range(system.mesh.n_edges):
        gram = lengths[eid] / (2 * q + 1)
        for comp in range(2):
            c = e[dofmap.vg_comp_slice(eid, comp)]
            total += w[eid] * float(((c**2) * gram).sum())
    return float(np.sqrt(total))


def center_seminorms(system: GwgSystem, solution: np.ndarray,
                     grad_u, hess_u):
    """Center-point seminorms of u0 - u.

    Returns (|.|_2, |.|_1): per element, the squared mismatch of all four
    second partials (resp. the gradient) at the centroid, weighted by the
    element area, summed and square-rooted.
    """
    disc = system.disc
    dofmap = disc.dofmap
    total2 = 0.0
    total1 = 0.0
    for cid, members in enumerate(disc.pw.class_members):
        ws = disc.pw.workspaces[cid]
        coeffs = np.stack([solution[dofmap.v0_slice(int(t))]
                           for t in members])
        centers = disc.pw.centroids[members]
        num_h = coeffs @ ws.centroid_hess.T   # (nc, 3): xx, xy, yy
        num_g = coeffs @ ws.centroid_grad.T   # (nc, 2)
        uxx, uxy, uyy = hess_u(centers[:, 0], centers[:, 1])
        ux, uy = grad_u(centers[:, 0], centers[:, 1])
        areas = disc.pw.areas[members]
        d2 = ((num_h[:, 0] - uxx)**2 + 2.0 * (num_h[:, 1] - uxy)**2
              + (num_h[:, 2] - uyy)**2)
        d1 = (num_g[:, 0] - ux)**2 + (num_g[:, 1] - uy)**2
        total2 += float((d2 * areas).sum())
        total1 += float((d1 * areas).sum())
    return float(np.sqrt(total2)), float(np.sqrt(total1))


def error_report(system: GwgSystem, solution: np.ndarray, u, grad_u,
                 hess_u, inv_h: int = 0) -> ErrorReport:
    """All six metrics for a solved system."""
    q = project_weak(system.disc.pw, system.dofmap, u, grad_u)
    e = q - solution
    h2c, h1c = center_seminorms(system, solution, grad_u, hess_u)
    return ErrorReport(
        triple_bar=triple_bar(system, e),
        l2_e0=l2_e0(system, e),
        eb_edge=eb_edge(system, e),
        eg_edge=eg_edge(system, e),
        h2_center=h2c,
        h1_center=h1c,
        inv_h=inv_h,
        h=float(system.disc.pw.diameters.max()),
        dofs=int(system.dofmap.total),
    )


def rate(errors) -> np.ndarray:
    """log2 ratios between successive errors; NaN where undefined."""
    errors = np.asarray(errors, dtype=float)
    out = np.full(max(len(errors) - 1, 0), np.nan)
    for i in range(len(errors) - 1):
        if errors[i] > 0.0 and errors[i + 1] > 0.0:
            out[i] = np.log2(errors[i] / errors[i + 1])
    return out
