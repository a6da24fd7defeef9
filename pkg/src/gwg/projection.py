"""L2 projections onto element spaces P_k(T), P_n(T), P_s(T) and edge spaces
P_m(e), P_l(e), plus the per-shape workspaces that cache quadrature, basis
traces, mass Cholesky factors, and edge projection operators.

Congruent elements share one :class:`ElementWorkspace` (local coordinates are
centroid-relative, and the scaled monomial basis is translation invariant),
so uniform meshes carry only a handful of distinct workspaces.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from . import polybasis as pb
from .errors import MeshError
from .mesh import Mesh, element_geometry


@dataclass(frozen=True)
class QuadDegrees:
    """Quadrature exactness degrees used by a configuration.

    ``elem``/``edge`` are exact for every bilinear-form integrand;
    ``elem_err``/``edge_err`` add headroom for non-polynomial data
    (loads, manufactured solutions, error integrands).
    """

    elem: int
    elem_err: int
    edge: int
    edge_err: int

    @staticmethod
    def for_degrees(k, m, l, n):
        elem = max(2 * k + 2, 2 * n + 2)
        edge = 2 * max(k, m, l, n) + 2
        return QuadDegrees(elem=elem, elem_err=max(2 * k + 4, elem),
                           edge=edge, edge_err=edge + 2)


@dataclass
class EdgeBlock:
    """Assembly-side data for one edge of an element, in centroid-relative
    coordinates and in the edge's canonical parameterization."""

    p0: np.ndarray
    p1: np.ndarray
    length: float
    normal: np.ndarray
    tangent: np.ndarray
    tq: np.ndarray        # Gauss params in [-1, 1]
    wq: np.ndarray        # weights carrying the arclength measure
    pts: np.ndarray       # (nq, 2) centroid-relative node coordinates
    leg_m: np.ndarray     # (m+1, nq) Legendre trace values
    leg_l: np.ndarray     # (l+1, nq)
    gram_m: np.ndarray    # (m+1,) diagonal edge Gram entries
    gram_l: np.ndarray
    vk: np.ndarray        # (dim_k, nq) traces of the P_k basis
    gk: np.ndarray        # (2, dim_k, nq) traces of its gradient
    vn: np.ndarray        # (dim_n, nq) traces of the P_n basis
    gn: np.ndarray        # (2, dim_n, nq)
    proj_b: np.ndarray    # (m+1, dim_k): Q_b applied to P_k traces
    proj_g: np.ndarray    # (2, l+1, dim_k): Q_g applied to gradient traces


class ElementWorkspace:
    """Quadrature rules, bases, mass factorizations, and edge operators for
    one element shape.

    ``rel_vertices`` are the element vertices minus the centroid; ``signs``
    mark, per traversal edge, whether the CCW loop follows the canonical
    edge direction.  All cached data is translation invariant, so one
    workspace serves every congruent element.
    """

    def __init__(self, rel_vertices, signs, k, m, l, n, quad: QuadDegrees):
        rel = np.asarray(rel_vertices, dtype=float)
        self.rel_vertices = rel
        self.signs = np.asarray(signs, dtype=np.int64)
        self.k, self.m, self.l, self.n = k, m, l, n
        self.quad = quad
        self.n_edges = rel.shape[0]

        x, y = rel[:, 0], rel[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cross = x * yn - xn * y
        self.area = 0.5 * cross.sum()
        if self.area <= 0.0:
            raise MeshError("element loop is not counter-clockwise")
        diff = rel[:, None, :] - rel[None, :, :]
        self.diameter = float(np.sqrt((diff**2).sum(-1)).max())

        origin = np.zeros(2)
        self.basis_k = pb.ElementBasis(k, origin, self.diameter)
        self.basis_n = pb.ElementBasis(n, origin, self.diameter)
        self.basis_k2 = pb.ElementBasis(max(k - 2, 0), origin, self.diameter)
        self.dim_k = self.basis_k.dim
        self.dim_n = self.basis_n.dim
        self.dim_k2 = self.basis_k2.dim

        # Element rules (centroid fan of the local polygon).
        rule = pb.polygon_rule(rel, quad.elem)
        self.qp, self.qw = rule.points, rule.weights
        rule_err = pb.polygon_rule(rel, quad.elem_err)
        self.qp_err, self.qw_err = rule_err.points, rule_err.weights

        # One mass matrix for the largest degree; lower-degree masses are
        # leading sub-blocks because the graded-lex basis is nested.
        deg_max = max(k, n)
        self.basis_max = pb.ElementBasis(deg_max, origin, self.diameter)
        vmax = self.basis_max.eval(self.qp)
        self.mass_full = vmax.T @ (self.qw[:, None] * vmax)
        self.mass_k = self.mass_full[:self.dim_k, :self.dim_k]
        self.mass_n = self.mass_full[:self.dim_n, :self.dim_n]
        self.mass_k2 = self.mass_full[:self.dim_k2, :self.dim_k2]
        self.cross_k2_n = self.mass_full[:self.dim_k2, :self.dim_n]
        self.cho_k = sla.cho_factor(self.mass_k)
        self.cho_n = sla.cho_factor(self.mass_n)

        self.vk_err = self.basis_k.eval(self.qp_err)

        # Basis values at the centroid, for the center-point error metrics.
        z = np.zeros((1, 2))
        self.centroid_val = self.basis_k.eval(z)[0]
        gx, gy = self.basis_k.eval_grad(z)
        self.centroid_grad = np.vstack([gx[0], gy[0]])
        hxx, hxy, hyy = self.basis_k.eval_hess(z)
        self.centroid_hess = np.vstack([hxx[0], hxy[0], hyy[0]])

        self.edges = self._build_edges()

    def _build_edges(self):
        rel = self.rel_vertices
        tq, tw = pb.gauss1d(self.quad.edge)
        blocks = []
        for i in range(self.n_edges):
            a = rel[i]
            b = rel[(i + 1) % self.n_edges]
            d = b - a
            length = float(np.hypot(*d))
            normal = np.array([d[1], -d[0]]) / length
            if self.signs[i] > 0:
                p0, p1 = a, b
            else:
                p0, p1 = b, a
            tangent = (p1 - p0) / length
            mid = 0.5 * (p0 + p1)
            pts = mid + 0.5 * tq[:, None] * (p1 - p0)
            wq = 0.5 * length * tw

            leg_max = np.polynomial.legendre.legvander(
                tq, max(self.m, self.l)).T
            leg_m = leg_max[:self.m + 1]
            leg_l = leg_max[:self.l + 1]
            gram_m = length / (2.0 * np.arange(self.m + 1) + 1.0)
            gram_l = length / (2.0 * np.arange(self.l + 1) + 1.0)

            vk = self.basis_k.eval(pts).T
            gkx, gky = self.basis_k.eval_grad(pts)
            gk = np.stack([gkx.T, gky.T])
            vn = self.basis_n.eval(pts).T
            gnx, gny = self.basis_n.eval_grad(pts)
            gn = np.stack([gnx.T, gny.T])

            proj_b = (leg_m * wq) @ vk.T / gram_m[:, None]
            proj_g = np.stack([(leg_l * wq) @ gk[0].T / gram_l[:, None],
                               (leg_l * wq) @ gk[1].T / gram_l[:, None]])

            blocks.append(EdgeBlock(
                p0=p0, p1=p1, length=length, normal=normal, tangent=tangent,
                tq=tq, wq=wq, pts=pts, leg_m=leg_m, leg_l=leg_l,
                gram_m=gram_m, gram_l=gram_l, vk=vk, gk=gk, vn=vn, gn=gn,
                proj_b=proj_b, proj_g=proj_g))
        return blocks

    def mass_s(self, s):
        """Mass matrix of P_s(T); a leading sub-block of the cached mass."""
        dim_s = pb.dim_poly(s)
        if dim_s > self.mass_full.shape[0]:
            basis = pb.ElementBasis(s, np.zeros(2), self.diameter)
            v = basis.eval(self.qp)
            return v.T @ (self.qw[:, None] * v)
        return self.mass_full[:dim_s, :dim_s]

    def q0_from_values(self, values_err):
        """Project function values at the error-rule points onto P_k(T).

        ``values_err`` has shape (..., nq_err); returns (..., dim_k).
        """
        rhs = np.asarray(values_err) @ (self.qw_err[:, None] * self.vk_err)
        return sla.cho_solve(self.cho_k, rhs.T).T


def element_workspace(mesh: Mesh, t: int, k, m, l, n,
                      quad: QuadDegrees | None = None):
    """Build a one-off workspace for element ``t``; returns (ws, centroid)."""
    if quad is None:
        quad = QuadDegrees.for_degrees(k, m, l, n)
    geo = element_geometry(mesh, t)
    rel = mesh.vertices[mesh.elements[t]] - geo.centroid
    ws = ElementWorkspace(rel, mesh.element_edge_signs[t], k, m, l, n, quad)
    return ws, geo.centroid


class ProjectionWorkspace:
    """Mesh-level projection context.

    Groups congruent elements into shape classes sharing one
    :class:`ElementWorkspace`, and edges into direction/length classes
    sharing Gauss nodes and Legendre tables.
    """

    def __init__(self, mesh: Mesh, k, m, l, n, quad: QuadDegrees | None = None):
        self.mesh = mesh
        self.k, self.m, self.l, self.n = k, m, l, n
        self.quad = quad or QuadDegrees.for_degrees(k, m, l, n)

        nel = mesh.n_elements
        self.centroids = np.empty((nel, 2))
        self.areas = np.empty(nel)
        self.diameters = np.empty(nel)
        self.class_of_element = np.empty(nel, dtype=np.int64)
        self.class_members = []
        self.workspaces = []
        keys = {}
        for t in range(nel):
            geo = element_geometry(mesh, t)
            self.centroids[t] = geo.centroid
            self.areas[t] = geo.area
            self.diameters[t] = geo.diameter
            rel = mesh.vertices[mesh.elements[t]] - geo.centroid
            key = (np.round(rel, 12).tobytes(),
                   mesh.element_edge_signs[t].tobytes())
            cid = keys.get(key)
            if cid is None:
                cid = len(self.workspaces)
                keys[key] = cid
                self.workspaces.append(ElementWorkspace(
                    rel, mesh.element_edge_signs[t],
                    k, m, l, n, self.quad))
                self.class_members.append([])
            self.class_of_element[t] = cid
            self.class_members[cid].append(t)
        self.class_members = [np.array(mm, dtype=np.int64)
                              for mm in self.class_members]

        # Edge classes keyed by the canonical direction vector.
        pts = mesh.vertices
        self.edge_p0 = pts[mesh.edges[:, 0]]
        self.edge_delta = pts[mesh.edges[:, 1]] - self.edge_p0
        self.edge_lengths = np.hypot(self.edge_delta[:, 0],
                                     self.edge_delta[:, 1])
        ekeys = {}
        self.edge_class = np.empty(mesh.n_edges, dtype=np.int64)
        self.edge_class_members = []
        for e in range(mesh.n_edges):
            key = np.round(self.edge_delta[e], 12).tobytes()
            cid = ekeys.get(key)
            if cid is None:
                cid = len(self.edge_class_members)
                ekeys[key] = cid
                self.edge_class_members.append([])
            self.edge_class[e] = cid
            self.edge_class_members[cid].append(e)
        self.edge_class_members = [np.array(mm, dtype=np.int64)
                                   for mm in self.edge_class_members]
        self._edge_tq, self._edge_tw = pb.gauss1d(self.quad.edge_err)

    def workspace_of(self, t: int) -> ElementWorkspace:
        return self.workspaces[self.class_of_element[t]]

    def q0(self, f) -> np.ndarray:
        """Q_0 f per element; returns (n_elements, dim_k) coefficients."""
        nel = self.mesh.n_elements
        out = np.empty((nel, pb.dim_poly(self.k)))
        for cid, members in enumerate(self.class_members):
            ws = self.workspaces[cid]
            pts = (ws.qp_err[None, :, :]
                   + self.centroids[members][:, None, :])
            vals = np.asarray(
                f(pts[..., 0].ravel(), pts[..., 1].ravel()), dtype=float)
            vals = vals.reshape(len(members), -1)
            out[members] = ws.q0_from_values(vals)
        return out

    def project_on_edges(self, f, degree, edges=None) -> np.ndarray:
        """Legendre coefficients of the L2 projection of ``f`` onto P_degree
        on each requested edge (default: all edges)."""
        if edges is None:
            edges = np.arange(self.mesh.n_edges)
        edges = np.asarray(edges, dtype=np.int64)
        out = np.empty((len(edges), degree + 1))
        tq, tw = self._edge_tq, self._edge_tw
        leg = np.polynomial.legendre.legvander(tq, degree)  # (nq, deg+1)
        inv_norm = (2.0 * np.arange(degree + 1) + 1.0) / 2.0
        pos = {int(e): i for i, e in enumerate(edges)}
        for cid, members in enumerate(self.edge_class_members):
            sel = members[np.isin(members, edges)]
            if len(sel) == 0:
                continue
            mid = self.edge_p0[sel] + 0.5 * self.edge_delta[sel]
            pts = (mid[:, None, :]
                   + 0.5 * tq[None, :, None] * self.edge_delta[sel][:, None, :])
            vals = np.asarray(
                f(pts[..., 0].ravel(), pts[..., 1].ravel()), dtype=float)
            vals = vals.reshape(len(sel), -1)
            # Reference-interval projection; the arclength factor cancels.
            coeffs = (vals * tw) @ leg * inv_norm
            rows = np.array([pos[int(e)] for e in sel])
            out[rows] = coeffs
        return out

    def qb(self, f) -> np.ndarray:
        """Q_b f on every edge; (n_edges, m+1) Legendre coefficients."""
        return self.project_on_edges(f, self.m)

    def qg(self, grad) -> np.ndarray:
        """Componentwise Q_g of a gradient field on every edge.

        ``grad`` maps (x, y) -> (ux, uy); returns (n_edges, 2, l+1).
        """
        cx = self.project_on_edges(lambda x, y: grad(x, y)[0], self.l)
        cy = self.project_on_edges(lambda x, y: grad(x, y)[1], self.l)
        return np.stack([cx, cy], axis=1)


def project_weak(pw: ProjectionWorkspace, dofmap, u, grad_u) -> np.ndarray:
    """Coefficient vector of {Q_0 u, Q_b u, Q_g(grad u)} over all DOFs.

    Boundary edges are included; the result is the natural interpolant
    against which the numerical solution is compared.
    """
    vec = np.zeros(dofmap.total)
    q0 = pw.q0(u)
    for t in range(pw.mesh.n_elements):
        vec[dofmap.v0_slice(t)] = q0[t]
    qb = pw.qb(u)
    qg = pw.qg(grad_u)
    for e in range(pw.mesh.n_edges):
        vec[dofmap.vb_slice(e)] = qb[e]
        vec[dofmap.vg_comp_slice(e, 0)] = qg[e, 0]
        vec[dofmap.vg_comp_slice(e, 1)] = qg[e, 1]
    return vec


def project_element(mesh: Mesh, t: int, f, degree: int,
                    exactness: int | None = None) -> np.ndarray:
    """L2 projection of ``f`` onto P_degree(T) for a single element.

    Returns coefficients in the scaled monomial basis centered at the
    element centroid with its diameter as scale.
    """
    geo = element_geometry(mesh, t)
    basis = pb.ElementBasis(degree, geo.centroid, geo.diameter)
    if exactness is None:
        exactness = 2 * degree + 4
    rule = pb.polygon_rule(mesh.vertices[mesh.elements[t]], exactness)
    v = basis.eval(rule.points)
    mass = v.T @ (rule.weights[:, None] * v)
    fv = np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float)
    return sla.cho_solve(sla.cho_factor(mass), v.T @ (rule.weights * fv))


def project_edge(p0, p1, f, degree: int,
                 exactness: int | None = None) -> np.ndarray:
    """L2 projection of ``f`` onto P_degree on the segment p0 -> p1.

    Returns Legendre coefficients in the segment's own parameterization.
    """
    if exactness is None:
        exactness = 2 * degree + 6
    basis = pb.EdgeBasis(degree, np.asarray(p0, float), np.asarray(p1, float))
    rule = pb.edge_rule(p0, p1, exactness)
    fv = np.asarray(f(rule.points[:, 0], rule.points[:, 1]), dtype=float)
    leg = basis.eval(rule.points)
    return (leg.T @ (rule.weights * fv)) / basis.gram_diag()
