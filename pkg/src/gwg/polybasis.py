"""Scaled polynomial bases on elements and edges, plus quadrature rules.

Element bases are centroid-shifted monomials ((x-xc)/h)^a ((y-yc)/h)^b in
graded-lex order, so coefficients stay O(1) and mass matrices stay well
conditioned at the degrees the scheme uses.  Edge bases are Legendre
polynomials in the arclength parameter t in [-1, 1], which makes edge Gram
matrices diagonal.

Element quadrature fans a polygon into centroid triangles and applies a
collapsed tensor Gauss rule exact to the requested degree on each triangle;
edge quadrature is 1D Gauss.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import legendre as npleg

from .errors import ConfigError

#: Largest supported quadrature exactness degree.
MAX_EXACTNESS = 40


def dim_poly(r: int) -> int:
    """Dimension of total-degree-r polynomials in two variables."""
    return (r + 1) * (r + 2) // 2


@lru_cache(maxsize=None)
def poly_exponents(r: int) -> np.ndarray:
    """Exponent pairs (a, b) of the degree-r basis in graded-lex order."""
    out = [(a, d - a) for d in range(r + 1) for a in range(d, -1, -1)]
    arr = np.array(out, dtype=np.int64)
    arr.flags.writeable = False
    return arr


def _pow_table(u, emax):
    """u**e for e = 0..emax as a (npts, emax+1) array."""
    out = np.ones((u.shape[0], emax + 1))
    for e in range(1, emax + 1):
        out[:, e] = out[:, e - 1] * u
    return out


@dataclass(frozen=True)
class ElementBasis:
    """Monomial basis of degree ``degree`` scaled to an element.

    Basis member alpha with exponents (a, b) is ((x-cx)/h)^a ((y-cy)/h)^b.
    """

    degree: int
    center: np.ndarray
    scale: float

    @property
    def dim(self) -> int:
        return dim_poly(self.degree)

    @property
    def exponents(self) -> np.ndarray:
        return poly_exponents(self.degree)

    def _local(self, pts):
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return (pts - self.center) / self.scale

    def eval(self, pts) -> np.ndarray:
        """Values at ``pts``; shape (npts, dim)."""
        loc = self._local(pts)
        e = self.exponents
        px = _pow_table(loc[:, 0], self.degree)
        py = _pow_table(loc[:, 1], self.degree)
        return px[:, e[:, 0]] * py[:, e[:, 1]]

    def eval_grad(self, pts):
        """First partials at ``pts``; two (npts, dim) arrays (d/dx, d/dy)."""
        loc = self._local(pts)
        e = self.exponents
        a = e[:, 0]
        b = e[:, 1]
        px = _pow_table(loc[:, 0], self.degree)
        py = _pow_table(loc[:, 1], self.degree)
        gx = a / self.scale * px[:, np.maximum(a - 1, 0)] * py[:, b]
        gy = b / self.scale * px[:, a] * py[:, np.maximum(b - 1, 0)]
        return gx, gy

    def eval_hess(self, pts):
        """Second partials at ``pts``; three (npts, dim) arrays (xx, xy, yy)."""
        loc = self._local(pts)
        e = self.exponents
        a = e[:, 0]
        b = e[:, 1]
        px = _pow_table(loc[:, 0], self.degree)
        py = _pow_table(loc[:, 1], self.degree)
        s2 = self.scale**2
        hxx = a * (a - 1) / s2 * px[:, np.maximum(a - 2, 0)] * py[:, b]
        hxy = a * b / s2 * px[:, np.maximum(a - 1, 0)] * py[:, np.maximum(b - 1, 0)]
        hyy = b * (b - 1) / s2 * px[:, a] * py[:, np.maximum(b - 2, 0)]
        return hxx, hxy, hyy


@dataclass(frozen=True)
class EdgeBasis:
    """Legendre basis on the segment p0 -> p1, parameterized on [-1, 1]."""

    degree: int
    p0: np.ndarray
    p1: np.ndarray

    @property
    def dim(self) -> int:
        return self.degree + 1

    @property
    def length(self) -> float:
        return float(np.hypot(*(self.p1 - self.p0)))

    def param(self, pts) -> np.ndarray:
        """Map points on the segment to the reference parameter t."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        d = self.p1 - self.p0
        mid = 0.5 * (self.p0 + self.p1)
        return 2.0 * (pts - mid) @ d / (d @ d)

    def point(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        mid = 0.5 * (self.p0 + self.p1)
        return mid + 0.5 * t[:, None] * (self.p1 - self.p0)

    def eval_param(self, t) -> np.ndarray:
        """Values at reference parameters ``t``; shape (npts, dim)."""
        return npleg.legvander(np.asarray(t, dtype=float), self.degree)

    def eval(self, pts) -> np.ndarray:
        return self.eval_param(self.param(pts))

    def gram_diag(self) -> np.ndarray:
        """Diagonal of the edge mass matrix: |e| / (2q + 1)."""
        return self.length / (2.0 * np.arange(self.degree + 1) + 1.0)


@dataclass(frozen=True)
class QuadratureRule:
    """Points, weights, and the polynomial degree integrated exactly."""

    points: np.ndarray
    weights: np.ndarray
    exactness: int

    def integrate(self, f) -> float:
        vals = np.asarray(f(self.points[:, 0], self.points[:, 1]), dtype=float)
        return float(self.weights @ vals)


def _check_exactness(degree):
    if degree > MAX_EXACTNESS:
        raise ConfigError(
            f"quadrature exactness {degree} exceeds the precomputed "
            f"maximum {MAX_EXACTNESS}")
    return max(int(degree), 0)


@lru_cache(maxsize=None)
def _gauss1d(npts):
    x, w = npleg.leggauss(npts)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def gauss1d(degree: int):
    """1D Gauss nodes/weights on [-1, 1] exact to ``degree``."""
    degree = _check_exactness(degree)
    return _gauss1d(degree // 2 + 1)


@lru_cache(maxsize=None)
def _collapsed_square(degree):
    """Nodes/weights on the reference triangle (0,0),(1,0),(0,1).

    A tensor Gauss rule on the unit square is collapsed through the map
    (u, v) -> (u, v(1-u)) with Jacobian (1-u); factor degrees are chosen so
    every bivariate polynomial of total degree <= ``degree`` is integrated
    exactly.  All weights are positive.
    """
    na = (degree + 1) // 2 + 1
    nb = degree // 2 + 1
    xa, wa = _gauss1d(na)
    xb, wb = _gauss1d(nb)
    ua = 0.5 * (xa + 1.0)
    vb = 0.5 * (xb + 1.0)
    U, V = np.meshgrid(ua, vb, indexing="ij")
    WA, WB = np.meshgrid(0.5 * wa, 0.5 * wb, indexing="ij")
    x = U.ravel()
    y = (V * (1.0 - U)).ravel()
    w = (WA * WB * (1.0 - U)).ravel()
    pts = np.column_stack([x, y])
    pts.flags.writeable = False
    w.flags.writeable = False
    return pts, w


def triangle_rule(v0, v1, v2, degree: int) -> QuadratureRule:
    """Quadrature on the triangle (v0, v1, v2) exact to ``degree``."""
    degree = _check_exactness(degree)
    ref_pts, ref_w = _collapsed_square(degree)
    v0 = np.asarray(v0, dtype=float)
    jac = np.column_stack([np.asarray(v1, dtype=float) - v0,
                           np.asarray(v2, dtype=float) - v0])
    det = abs(np.linalg.det(jac))
    pts = ref_pts @ jac.T + v0
    return QuadratureRule(pts, ref_w * det, degree)


def polygon_rule(vertices, degree: int) -> QuadratureRule:
    """Quadrature on a CCW polygon via its centroid fan."""
    vertices = np.asarray(vertices, dtype=float)
    x = vertices[:, 0]
    y = vertices[:, 1]
    xn = np.roll(x, -1)
    yn = np.roll(y, -1)
    cross = x * yn - xn * y
    area = 0.5 * cross.sum()
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    centroid = np.array([cx, cy])
    pts = []
    wts = []
    for i in range(len(vertices)):
        rule = triangle_rule(centroid, vertices[i],
                             vertices[(i + 1) % len(vertices)], degree)
        pts.append(rule.points)
        wts.append(rule.weights)
    return QuadratureRule(np.vstack(pts), np.concatenate(wts), degree)


def edge_rule(p0, p1, degree: int) -> QuadratureRule:
    """Gauss quadrature on the segment p0 -> p1 exact to ``degree``."""
    degree = _check_exactness(degree)
    t, w = gauss1d(degree)
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    mid = 0.5 * (p0 + p1)
    pts = mid + 0.5 * t[:, None] * (p1 - p0)
    length = np.hypot(*(p1 - p0))
    return QuadratureRule(pts, 0.5 * length * w, degree)


def integrate_element(mesh, t: int, f, degree: int) -> float:
    """Integrate ``f(x, y)`` over element ``t`` with exactness ``degree``."""
    verts = mesh.vertices[mesh.elements[t]]
    return polygon_rule(verts, degree).integrate(f)


def integrate_edge(mesh, e: int, f, degree: int) -> float:
    """Integrate ``f(x, y)`` over edge ``e`` with exactness ``degree``."""
    a, b = mesh.edges[e]
    return edge_rule(mesh.vertices[a], mesh.vertices[b], degree).integrate(f)
