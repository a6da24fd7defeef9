"""Global DOF management and assembly of the weak-Hessian bilinear form

    a(w, v) = sum_T sum_ij (d2_ij w, d2_ij v)_T + s(w, v),

with the edge least-squares stabilizer

    s(w, v) = sum_T rho1 h_T^g1 <Q_b w0 - wb, Q_b v0 - vb>_dT
            + sum_T rho2 h_T^g2 <Q_g(grad w0) - wg, Q_g(grad v0) - vg>_dT,

together with the load (f, v0) and elimination of the clamped boundary data.
Both off-diagonal index pairs (0,1) and (1,0) are assembled separately: the
edge correction is index dependent, so symmetrizing them would change the
scheme.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import polybasis as pb
from .errors import AssemblyError, ConfigError
from .mesh import (L_SHAPED, UNIT_SQUARE, Mesh, generate_uniform_rectangular,
                   generate_uniform_square, generate_uniform_triangular)
from .projection import ProjectionWorkspace, QuadDegrees
from .weak_hessian import (LocalDofLayout, build_local_weak_hessian,
                           mismatch_operators)

MESH_KINDS = ("triangular", "square", "rectangular")
SOLVERS = ("cg", "dense")


@dataclass(frozen=True)
class GwgConfig:
    """Scheme configuration: polynomial degrees, stabilizer weights and
    exponents, and mesh/solver settings."""

    k: int = 2
    m: int = 0
    l: int = 0
    n: int = 0
    rho1: float = 1.0
    rho2: float = 1.0
    gamma1: float = -3.0
    gamma2: float = -1.0
    domain: str = UNIT_SQUARE
    mesh_kind: str = "triangular"
    solver: str = "cg"
    tol: float = 1e-12
    max_iters: int | None = None
    dense_cap: int = 5000

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        for name in ("m", "l", "n"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be >= 0")
        if self.rho1 <= 0 or self.rho2 <= 0:
            raise ConfigError("stabilizer weights rho1, rho2 must be positive")
        if self.domain not in (UNIT_SQUARE, L_SHAPED):
            raise ConfigError(f"unknown domain {self.domain!r}")
        if self.mesh_kind not in MESH_KINDS:
            raise ConfigError(f"unknown mesh_kind {self.mesh_kind!r}")
        if self.solver not in SOLVERS:
            raise ConfigError(f"unknown solver {self.solver!r}")
        if self.mesh_kind == "rectangular" and self.domain != UNIT_SQUARE:
            raise ConfigError("rectangular meshes cover the unit square only")

    @property
    def s(self) -> int:
        return min(self.k, self.m, self.l, self.n)

    @property
    def quad(self) -> QuadDegrees:
        return QuadDegrees.for_degrees(self.k, self.m, self.l, self.n)

    @staticmethod
    def from_dict(d: dict) -> "GwgConfig":
        known = {f for f in GwgConfig.__dataclass_fields__}
        bad = set(d) - known
        if bad:
            raise ConfigError(f"unknown config keys: {sorted(bad)}")
        try:
            return GwgConfig(**d)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    def to_dict(self) -> dict:
        return {f: getattr(self, f) for f in self.__dataclass_fields__}

    def with_(self, **kw) -> "GwgConfig":
        return replace(self, **kw)


def make_mesh(config: GwgConfig, inv_h: int) -> Mesh:
    """Mesh for a nominal resolution 1/h.

    Triangular/square kinds use ``inv_h`` cells per unit length; the
    rectangular family starts from a 3x2 grid, so ``inv_h`` must equal
    2 * 2^level and selects that refinement level.
    """
    if config.mesh_kind == "triangular":
        return generate_uniform_triangular(config.domain, inv_h)
    if config.mesh_kind == "square":
        return generate_uniform_square(config.domain, inv_h)
    level = int(np.log2(inv_h / 2.0) + 0.5) if inv_h >= 2 else -1
    if level < 0 or 2 * 2**level != inv_h:
        raise ConfigError(
            f"rectangular meshes require 1/h = 2*2^level, got {inv_h}")
    return generate_uniform_rectangular(level)


class DofMap:
    """Global indices: all element v0 blocks, then all edge vb blocks, then
    all edge vg blocks.  Interior-edge DOFs are shared by both incident
    elements; the boundary mask covers exactly the vb/vg DOFs on boundary
    edges."""

    def __init__(self, mesh: Mesh, k: int, m: int, l: int):
        self.mesh = mesh
        self.k, self.m, self.l = k, m, l
        self.dim_k = pb.dim_poly(k)
        self.vb_base = mesh.n_elements * self.dim_k
        self.vg_base = self.vb_base + mesh.n_edges * (m + 1)
        self.total = self.vg_base + mesh.n_edges * 2 * (l + 1)

    def v0_slice(self, t: int) -> slice:
        return slice(t * self.dim_k, (t + 1) * self.dim_k)

    def vb_slice(self, e: int) -> slice:
        start = self.vb_base + e * (self.m + 1)
        return slice(start, start + self.m + 1)

    def vg_slice(self, e: int) -> slice:
        start = self.vg_base + e * 2 * (self.l + 1)
        return slice(start, start + 2 * (self.l + 1))

    def vg_comp_slice(self, e: int, comp: int) -> slice:
        start = self.vg_base + e * 2 * (self.l + 1) + comp * (self.l + 1)
        return slice(start, start + self.l + 1)

    def element_dofs(self, t: int) -> np.ndarray:
        """Global indices of element t's local DOFs, in local layout order."""
        parts = [np.arange(self.v0_slice(t).start, self.v0_slice(t).stop)]
        for e in self.mesh.element_edges[t]:
            s = self.vb_slice(int(e))
            parts.append(np.arange(s.start, s.stop))
        for e in self.mesh.element_edges[t]:
            s = self.vg_slice(int(e))
            parts.append(np.arange(s.start, s.stop))
        return np.concatenate(parts)

    def boundary_dofs(self) -> np.ndarray:
        idx = []
        for e in self.mesh.boundary_edges():
            s = self.vb_slice(int(e))
            idx.append(np.arange(s.start, s.stop))
            s = self.vg_slice(int(e))
            idx.append(np.arange(s.start, s.stop))
        if not idx:
            return np.empty(0, dtype=np.int64)
        return np.sort(np.concatenate(idx))

    def free_mask(self) -> np.ndarray:
        mask = np.ones(self.total, dtype=bool)
        mask[self.boundary_dofs()] = False
        return mask


@dataclass
class WeakFunction:
    """A global coefficient vector with its DOF layout."""

    values: np.ndarray
    dofmap: DofMap

    def v0(self, t: int) -> np.ndarray:
        return self.values[self.dofmap.v0_slice(t)]

    def vb(self, e: int) -> np.ndarray:
        return self.values[self.dofmap.vb_slice(e)]

    def vg(self, e: int) -> np.ndarray:
        v = self.values[self.dofmap.vg_slice(e)]
        return v.reshape(2, self.dofmap.l + 1)


class Discretization:
    """Everything the scheme needs on one mesh: shape-class workspaces,
    per-class weak Hessian operators and local stiffness blocks, the DOF
    map, and boundary-edge frames."""

    def __init__(self, mesh: Mesh, config: GwgConfig):
        self.mesh = mesh
        self.config = config
        self.pw = ProjectionWorkspace(mesh, config.k, config.m, config.l,
                                      config.n, config.quad)
        self.dofmap = DofMap(mesh, config.k, config.m, config.l)
        self.layouts = []
        self.local_hessians = []
        self.local_stiffness = []
        for ws in self.pw.workspaces:
            lwh = build_local_weak_hessian(ws)
            self.layouts.append(lwh.layout)
            self.local_hessians.append(lwh)
            self.local_stiffness.append(self._local_matrix(ws, lwh))

        # Outward frame of each boundary edge, taken from its owner element.
        self.boundary_normal = {}
        for e in mesh.boundary_edges():
            t = int(mesh.edge_elements[e, 0])
            local = int(np.flatnonzero(mesh.element_edges[t] == e)[0])
            ws = self.pw.workspace_of(t)
            self.boundary_normal[int(e)] = ws.edges[local].normal

    def _local_matrix(self, ws, lwh) -> np.ndarray:
        layout = lwh.layout
        nd = layout.dim
        a = np.zeros((nd, nd))
        mass_big = np.block([[ws.mass_k2, ws.cross_k2_n],
                             [ws.cross_k2_n.T, ws.mass_n]])
        for ij, h0 in lwh.h0.items():
            hx = np.zeros((ws.dim_k2, nd))
            hx[:, layout.v0_slice()] = h0
            b = np.vstack([hx, lwh.delta[ij]])
            a += b.T @ (mass_big @ b)
        cfg = self.config
        sb, sg = mismatch_operators(ws, layout)
        w1 = cfg.rho1 * ws.diameter**cfg.gamma1
        w2 = cfg.rho2 * ws.diameter**cfg.gamma2
        for e, blk in enumerate(ws.edges):
            a += w1 * (sb[e].T @ (blk.gram_m[:, None] * sb[e]))
            for c in range(2):
                a += w2 * (sg[e][c].T @ (blk.gram_l[:, None] * sg[e][c]))
        return 0.5 * (a + a.T)

    def assemble_stiffness_matrix(self) -> sp.csr_matrix:
        rows = []
        cols = []
        vals = []
        for cid, members in enumerate(self.pw.class_members):
            a = self.local_stiffness[cid]
            nd = a.shape[0]
            flat = a.ravel()
            rep = np.repeat(np.arange(nd), nd)
            til = np.tile(np.arange(nd), nd)
            for t in members:
                g = self.dofmap.element_dofs(int(t))
                rows.append(g[rep])
                cols.append(g[til])
                vals.append(flat)
        n = self.dofmap.total
        mat = sp.coo_matrix(
            (np.concatenate(vals),
             (np.concatenate(rows), np.concatenate(cols))),
            shape=(n, n)).tocsr()
        # Exact symmetry: local blocks are symmetric, but duplicate summation
        # order in the sparse conversion is not.
        return 0.5 * (mat + mat.T)

    def assemble_load_vector(self, f) -> np.ndarray:
        b = np.zeros(self.dofmap.total)
        for cid, members in enumerate(self.pw.class_members):
            ws = self.pw.workspaces[cid]
            pts = (ws.qp_err[None, :, :]
                   + self.pw.centroids[members][:, None, :])
            x = pts[..., 0].ravel()
            y = pts[..., 1].ravel()
            vals = np.asarray(f(x, y), dtype=float)
            if not np.all(np.isfinite(vals)):
                bad = int(np.flatnonzero(~np.isfinite(vals))[0])
                raise AssemblyError(
                    f"load is not finite at quadrature point "
                    f"({x[bad]}, {y[bad]})")
            vals = vals.reshape(len(members), -1)
            local = vals @ (ws.qw_err[:, None] * ws.vk_err)
            for row, t in enumerate(members):
                b[self.dofmap.v0_slice(int(t))] = local[row]
        return b


class GwgSystem:
    """Unconstrained assembled system: full stiffness plus discretization."""

    def __init__(self, mesh: Mesh, config: GwgConfig):
        self.mesh = mesh
        self.config = config
        self.disc = Discretization(mesh, config)
        self.matrix = self.disc.assemble_stiffness_matrix()

    @property
    def dofmap(self) -> DofMap:
        return self.disc.dofmap


def assemble_stiffness(mesh: Mesh, config: GwgConfig) -> GwgSystem:
    """Assemble the full (unconstrained) stiffness matrix."""
    return GwgSystem(mesh, config)


def assemble_load(system: GwgSystem, f) -> np.ndarray:
    """Load vector (f, v0); entries appear only in v0 blocks."""
    return system.disc.assemble_load_vector(f)


@dataclass
class AssembledSystem:
    """Reduced SPD system after eliminating the boundary DOFs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    boundary_values: np.ndarray
    free: np.ndarray
    constrained: np.ndarray
    config: GwgConfig
    dofmap: DofMap = field(repr=False)

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        """Full-length coefficient vector from the free-DOF solution."""
        out = self.boundary_values.copy()
        out[self.free] = x_free
        return out


def apply_boundary_conditions(system: GwgSystem, load: np.ndarray,
                              g1, g2=None, grad_g1=None) -> AssembledSystem:
    """Impose the clamped boundary data by projection and elimination.

    ``g1`` is the boundary value; ``g2``, if given, is the outward normal
    derivative as ``g2(x, y, nx, ny)``, otherwise it is derived from
    ``grad_g1``.  Edge gradient DOFs are recombined from the projected
    normal and tangential components, which are constant frames on the
    straight edges used here.
    """
    if grad_g1 is None:
        raise ConfigError("boundary data needs grad_g1 for the tangential "
                          "edge gradient component")
    disc = system.disc
    dofmap = disc.dofmap
    cfg = system.config
    g = np.zeros(dofmap.total)

    bedges = disc.mesh.boundary_edges()
    if len(bedges):
        pwork = disc.pw
        vb = pwork.project_on_edges(g1, cfg.m, bedges)
        grads = np.stack(
            [pwork.project_on_edges(lambda x, y: grad_g1(x, y)[0],
                                    cfg.l, bedges),
             pwork.project_on_edges(lambda x, y: grad_g1(x, y)[1],
                                    cfg.l, bedges)], axis=1)
        for row, e in enumerate(bedges):
            e = int(e)
            nrm = disc.boundary_normal[e]
            delta = pwork.edge_delta[e]
            tau = delta / np.hypot(*delta)
            if g2 is not None:
                cn = _edge_proj(pwork, e, lambda x, y:
                                g2(x, y, nrm[0], nrm[1]), cfg.l)
            else:
                cn = nrm[0] * grads[row, 0] + nrm[1] * grads[row, 1]
            ct = tau[0] * grads[row, 0] + tau[1] * grads[row, 1]
            g[dofmap.vb_slice(e)] = vb[row]
            g[dofmap.vg_comp_slice(e, 0)] = nrm[0] * cn + tau[0] * ct
            g[dofmap.vg_comp_slice(e, 1)] = nrm[1] * cn + tau[1] * ct

    free = np.flatnonzero(dofmap.free_mask())
    constrained = np.setdiff1d(np.arange(dofmap.total), free)
    a = system.matrix
    a_ff = a[free][:, free].tocsr()
    rhs = load[free] - a[free][:, constrained] @ g[constrained]
    return AssembledSystem(matrix=a_ff, rhs=rhs, boundary_values=g,
                           free=free, constrained=constrained,
                           config=cfg, dofmap=dofmap)


def _edge_proj(pwork, e, f, degree):
    return pwork.project_on_edges(f, degree, np.array([e]))[0]


def dump_coo(matrix, path):
    """Write a sparse matrix as 'row col value' lines (debugging aid)."""
    coo = sp.coo_matrix(matrix)
    with open(path, "w") as fh:
        for r, c, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{r} {c} {v:.17g}\n")
