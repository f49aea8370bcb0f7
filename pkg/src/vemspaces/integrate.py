"""Exact integration of polynomials over edges, polygons and polyhedra.

Moments of the scaled monomial basis are computed by reducing volume
integrals to the boundary (an antiderivative in the first coordinate turns
``m`` into a flux), recursing from polyhedra to faces to edges where a
Gauss rule of sufficient order is exact.  Every moment table is
cross-checked against an independent simplex-subdivision quadrature; a
disagreement signals a geometry bug and raises.

The module also builds, per element, the polynomial decompositions used by
the degree-of-freedom layouts: the gradient family G (gradients of one
degree higher), its L2-orthogonal complement Gperp inside the vector
polynomials, and the rotation family R / Rperp (2d: 90-degree rotated
gradients; 3d: curls).  Orthogonal complements depend on the element
geometry through the L2 inner product and are therefore never shared
between elements.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg

from . import poly
from .geom import Face, Mesh

RANK_RTOL = 1e-10
RANK_AMBIGUOUS = 1e-8
CROSS_CHECK_RTOL = 1e-12


class IntegrationError(RuntimeError):
    """Raised when two exact routes disagree or a rank decision is ambiguous."""


@dataclass
class MomentTable:
    """Integrals of every basis member over one geometric object."""

    ident: str
    basis: poly.MonomialBasis
    values: np.ndarray


@dataclass
class SubspaceBasis:
    """Columns spanning one of G, Gperp, R, Rperp inside (P_k)^d.

    ``cols`` expresses each member against the vector monomial basis
    (component-major).  For gradient/rotation families, ``src_indices``
    records which scalar monomial of degree k+1 produced each column, which
    downstream code uses for exact integration-by-parts identities.
    """

    kind: str
    degree: int
    cols: np.ndarray
    src_indices: tuple[int, ...] | None = None

    @property
    def n_cols(self) -> int:
        return self.cols.shape[1]


# -- quadrature rules --------------------------------------------------------

@lru_cache(maxsize=None)
def _gauss_1d(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    return x, w


def segment_rule(p0: np.ndarray, p1: np.ndarray, degree: int):
    """Points and weights exact for polynomials of the given degree along
    the straight segment p0 -> p1 (any ambient dimension)."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    n = max(degree, 0) // 2 + 1
    x, w = _gauss_1d(n)
    mid = 0.5 * (p0 + p1)
    half = 0.5 * (p1 - p0)
    pts = mid + np.outer(x, half)
    return pts, w * np.linalg.norm(half)


@lru_cache(maxsize=None)
def _triangle_rule_ref(degree: int):
    # collapsed tensor rule on {x >= 0, y >= 0, x + y <= 1}
    nu = (degree + 2) // 2 + 1
    nv = (degree + 1) // 2 + 1
    xu, wu = _gauss_1d(nu)
    xv, wv = _gauss_1d(nv)
    u = 0.5 * (xu + 1.0)
    v = 0.5 * (xv + 1.0)
    pu, pv = np.meshgrid(u, v, indexing="ij")
    ww = np.outer(wu, wv) * 0.25 * (1.0 - pu)
    pts = np.column_stack([pu.ravel(), (pv * (1.0 - pu)).ravel()])
    return pts, ww.ravel()


@lru_cache(maxsize=None)
def _tet_rule_ref(degree: int):
    nu = (degree + 3) // 2 + 1
    nv = (degree + 2) // 2 + 1
    nw = (degree + 1) // 2 + 1
    xu, wu = _gauss_1d(nu)
    xv, wv = _gauss_1d(nv)
    xw, ww = _gauss_1d(nw)
    u = 0.5 * (xu + 1.0)
    v = 0.5 * (xv + 1.0)
    w = 0.5 * (xw + 1.0)
    pu, pv, pw = np.meshgrid(u, v, w, indexing="ij")
    wt = (
        np.einsum("i,j,k->ijk", wu, wv, ww) * 0.125
        * (1.0 - pu) ** 2 * (1.0 - pv)
    )
    x = pu
    y = pv * (1.0 - pu)
    z = pw * (1.0 - pu) * (1.0 - pv)
    pts = np.column_stack([x.ravel(), y.ravel(), z.ravel()])
    return pts, wt.ravel()


def polygon_rule(face: Face, degree: int):
    """Signed fan-triangulation rule, exact for plane polynomials of the
    given degree on any simple polygon."""
    ref_pts, ref_w = _triangle_rule_ref(degree)
    c = face.centroid
    pts = []
    wts = []
    n = face.n_vertices
    for i in range(n):
        a = face.verts2d[i]
        b = face.verts2d[(i + 1) % n]
        jac = np.column_stack([a - c, b - c])
        det = jac[0, 0] * jac[1, 1] - jac[0, 1] * jac[1, 0]
        pts.append(c + ref_pts @ jac.T)
        wts.append(ref_w * det)
    return np.vstack(pts), np.concatenate(wts)


def cell_rule(mesh: Mesh, c: int, degree: int):
    """Signed tetrahedral subdivision rule for one polyhedral cell."""
    ref_pts, ref_w = _tet_rule_ref(degree)
    vids = mesh.cell_vertex_ids(c)
    apex = mesh.vertices[vids].mean(axis=0)
    pts = []
    wts = []
    for fid, sign in mesh.cells[c]:
        face = mesh.faces[fid]
        space = face.frame.to_space(face.verts2d)
        o = face.frame.origin
        n = len(space)
        for i in range(n):
            a, b = space[i], space[(i + 1) % n]
            tri = (o, a, b) if sign > 0 else (o, b, a)
            jac = np.column_stack([tri[0] - apex, tri[1] - apex, tri[2] - apex])
            det = np.linalg.det(jac)
            pts.append(apex + ref_pts @ jac.T)
            wts.append(ref_w * det)
    return np.vstack(pts), np.concatenate(wts)


# -- edge moments ------------------------------------------------------------

def edge_basis(length: float, k: int) -> poly.MonomialBasis:
    """1d scaled basis in the arc-length coordinate measured from the edge
    midpoint along the global edge direction."""
    return poly.MonomialBasis(1, k, (0.0,), length)


def edge_basis_moments(length: float, k: int) -> np.ndarray:
    """Closed-form integrals of the midpoint-centered edge basis members."""
    j = np.arange(max(k, -1) + 1)
    vals = length * (0.5 ** (j + 1) - (-0.5) ** (j + 1)) / (j + 1)
    return vals


def edge_mass(length: float, k: int) -> np.ndarray:
    mom = edge_basis_moments(length, 2 * k)
    i = np.arange(k + 1)
    return mom[i[:, None] + i[None, :]]


def edge_moments(p0, p1, k: int, center: float = 0.0, scale: float | None = None) -> MomentTable:
    """Integrals of a 1d monomial basis in the arc coordinate of a straight
    edge.  The coordinate runs from -L/2 at p0 to +L/2 at p1; the default
    basis is the midpoint-centered one with the edge length as scale."""
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    basis = poly.MonomialBasis(1, k, (center,), scale if scale is not None else length)
    x, w = _gauss_1d(k // 2 + 1)
    u = 0.5 * length * x
    vals = basis.eval(u[:, None])
    return MomentTable("edge", basis, (w * 0.5 * length) @ vals)


# -- per-element contexts ----------------------------------------------------

class PolygonContext:
    """Moment tables, Gram matrices and decomposition bases for a polygon
    (a 2d element, or a 3d face described in its own frame)."""

    def __init__(self, face: Face):
        self.face = face
        self._moments: dict[int, np.ndarray] = {}
        self._subspaces: dict[tuple[str, int], SubspaceBasis] = {}

    @property
    def dim(self) -> int:
        return 2

    @property
    def measure(self) -> float:
        return self.face.area

    @property
    def ident(self) -> str:
        return self.face.ident

    def basis(self, k: int) -> poly.MonomialBasis:
        return poly.MonomialBasis(
            2, k, (self.face.centroid[0], self.face.centroid[1]), self.face.diameter
        )

    def moments(self, k: int) -> np.ndarray:
        if k < 0:
            return np.zeros(0)
        if k not in self._moments:
            self._moments[k] = self._compute_moments(k)
        return self._moments[k]

    def moment_table(self, k: int) -> MomentTable:
        return MomentTable(self.ident, self.basis(k), self.moments(k))

    def _compute_moments(self, k: int) -> np.ndarray:
        face = self.face
        lifted = self.basis(k + 1)
        idx = {alpha: i for i, alpha in enumerate(lifted.exponents)}
        normals = face.outward_normals()
        n = face.n_vertices
        flux = np.zeros(len(lifted))
        for i in range(n):
            a = face.verts2d[i]
            b = face.verts2d[(i + 1) % n]
            pts, w = segment_rule(a, b, k + 1)
            flux += normals[i, 0] * (w @ lifted.eval(pts))
        h = lifted.scale
        vals = np.empty(poly.dim_poly(k, 2))
        for j, (a, b) in enumerate(poly.multi_indices(2, k)):
            vals[j] = h / (a + 1) * flux[idx[(a + 1, b)]]
        self._cross_check(k, vals)
        return vals

    def _cross_check(self, k: int, vals: np.ndarray):
        pts, w = polygon_rule(self.face, k)
        ref = w @ self.basis(k).eval(pts)
        err = np.max(np.abs(vals - ref))
        if err > CROSS_CHECK_RTOL * max(self.measure, np.max(np.abs(ref))):
            raise IntegrationError(
                f"{self.ident}: boundary reduction and subdivision quadrature "
                f"disagree by {err:.3e} at degree {k}"
            )

    # Gram machinery shared with the 3d context
    def scalar_gram(self, ka: int, kb: int) -> np.ndarray:
        return _gram_from_moments(self.moments(ka + kb), self.dim, ka, kb)

    def mass(self, k: int) -> np.ndarray:
        return self.scalar_gram(k, k)

    def vector_mass(self, k: int) -> np.ndarray:
        return np.kron(np.eye(self.dim), self.mass(k))

    def vector_pairing(self, p: poly.PolyCoeffs, cols: np.ndarray, k: int) -> np.ndarray:
        """Integrals of p (vector polynomial, any degree) against each
        column of a vector coefficient matrix of degree k."""
        return _vector_pairing(self, p, cols, k)

    def subspace(self, kind: str, k: int) -> SubspaceBasis:
        key = (kind, k)
        if key not in self._subspaces:
            self._subspaces[key] = _build_subspace(self, kind, k)
        return self._subspaces[key]


class CellContext:
    """The 3d counterpart of :class:`PolygonContext` for one cell."""

    def __init__(self, mesh: Mesh, c: int):
        self.mesh = mesh
        self.cell = c
        self._moments: dict[int, np.ndarray] = {}
        self._subspaces: dict[tuple[str, int], SubspaceBasis] = {}
        self._pullbacks: dict[tuple[int, int], np.ndarray] = {}

    @property
    def dim(self) -> int:
        return 3

    @property
    def measure(self) -> float:
        return float(self.mesh.cell_volumes[self.cell])

    @property
    def ident(self) -> str:
        return f"cell {self.cell}"

    def basis(self, k: int) -> poly.MonomialBasis:
        c = self.mesh.cell_centroids[self.cell]
        return poly.MonomialBasis(
            3, k, (c[0], c[1], c[2]), float(self.mesh.cell_diameters[self.cell])
        )

    def face_pullback(self, fid: int, degree: int) -> np.ndarray:
        """Restriction of the cell basis (given degree) to a face, as a
        matrix into the face frame basis of the same degree."""
        key = (fid, degree)
        if key not in self._pullbacks:
            face = self.mesh.faces[fid]
            fr = face.frame
            amat = np.column_stack([fr.e1, fr.e2])
            ctx = polygon_context(self.mesh, fid)
            self._pullbacks[key] = poly.affine_pullback(
                self.basis(degree), amat, fr.origin, ctx.basis(degree)
            )
        return self._pullbacks[key]

    def moments(self, k: int) -> np.ndarray:
        if k < 0:
            return np.zeros(0)
        if k not in self._moments:
            self._moments[k] = self._compute_moments(k)
        return self._moments[k]

    def moment_table(self, k: int) -> MomentTable:
        return MomentTable(self.ident, self.basis(k), self.moments(k))

    def _compute_moments(self, k: int) -> np.ndarray:
        lifted = self.basis(k + 1)
        idx = {alpha: i for i, alpha in enumerate(lifted.exponents)}
        # integrals of every lifted cell monomial over each face, then
        # the flux form of the volume integral
        flux = np.zeros(len(lifted))
        for fid, sign in self.mesh.cells[self.cell]:
            face = self.mesh.faces[fid]
            ctx = polygon_context(self.mesh, fid)
            face_ints = self.face_pullback(fid, k + 1).T @ ctx.moments(k + 1)
            flux += sign * face.frame.normal[0] * face_ints
        h = lifted.scale
        vals = np.empty(poly.dim_poly(k, 3))
        for j, (a, b, c) in enumerate(poly.multi_indices(3, k)):
            vals[j] = h / (a + 1) * flux[idx[(a + 1, b, c)]]
        self._cross_check(k, vals)
        return vals

    def _cross_check(self, k: int, vals: np.ndarray):
        pts, w = cell_rule(self.mesh, self.cell, k)
        ref = w @ self.basis(k).eval(pts)
        err = np.max(np.abs(vals - ref))
        if err > CROSS_CHECK_RTOL * max(self.measure, np.max(np.abs(ref))):
            raise IntegrationError(
                f"{self.ident}: boundary reduction and subdivision quadrature "
                f"disagree by {err:.3e} at degree {k}"
            )

    scalar_gram = PolygonContext.scalar_gram
    mass = PolygonContext.mass
    vector_mass = PolygonContext.vector_mass
    vector_pairing = PolygonContext.vector_pairing
    subspace = PolygonContext.subspace

    def rort(self, k: int) -> SubspaceBasis:
        """Basis of the part of R_k that is L2-orthogonal to R_{k-2}."""
        key = ("Rort", k)
        if key not in self._subspaces:
            rk = self.subspace("R", k)
            if k - 2 < 0:
                cols = rk.cols.copy()
            else:
                rlow = _embed_vector_cols(self.subspace("R", k - 2).cols, 3, k - 2, k)
                lmat = np.linalg.cholesky(self.vector_mass(k))
                ck = lmat.T @ rk.cols
                dk = np.linalg.norm(ck, axis=0)
                ck = ck / dk
                clow = lmat.T @ rlow
                clow = clow / np.linalg.norm(clow, axis=0)
                null = _null_space(clow.T @ ck, self.ident)
                cols = rk.cols @ (null / dk[:, None])
            expected = rk.n_cols - (self.subspace("R", k - 2).n_cols if k >= 2 else 0)
            if cols.shape[1] != expected:
                raise IntegrationError(
                    f"{self.ident}: moment-orthogonal rotation basis has "
                    f"{cols.shape[1]} columns, expected {expected}"
                )
            self._subspaces[key] = SubspaceBasis("Rort", k, cols)
        return self._subspaces[key]


def polygon_context(mesh: Mesh, fid: int) -> PolygonContext:
    key = ("polyctx", fid)
    if key not in mesh._cache:
        mesh._cache[key] = PolygonContext(mesh.faces[fid])
    return mesh._cache[key]


def cell_context(mesh: Mesh, c: int) -> CellContext:
    key = ("cellctx", c)
    if key not in mesh._cache:
        mesh._cache[key] = CellContext(mesh, c)
    return mesh._cache[key]


def element_context(mesh: Mesh, i: int):
    return cell_context(mesh, i) if mesh.dim == 3 else polygon_context(mesh, i)


# -- shared helpers ----------------------------------------------------------

@lru_cache(maxsize=None)
def _gram_index(d: int, ka: int, kb: int) -> np.ndarray:
    target = {alpha: i for i, alpha in enumerate(poly.multi_indices(d, ka + kb))}
    ea = poly.multi_indices(d, ka)
    eb = poly.multi_indices(d, kb)
    idx = np.empty((len(ea), len(eb)), dtype=int)
    for i, ai in enumerate(ea):
        for j, bj in enumerate(eb):
            idx[i, j] = target[tuple(p + q for p, q in zip(ai, bj))]
    return idx


def _gram_from_moments(mom: np.ndarray, d: int, ka: int, kb: int) -> np.ndarray:
    return mom[_gram_index(d, ka, kb)]


def _vector_pairing(ctx, p: poly.PolyCoeffs, cols: np.ndarray, k: int) -> np.ndarray:
    d = ctx.dim
    if p.ncomp != d:
        raise ValueError(f"expected a {d}-component field")
    nk = poly.dim_poly(k, d)
    gram = ctx.scalar_gram(p.basis.degree, k)
    out = np.zeros(cols.shape[1])
    for i in range(d):
        out += (p.component(i) @ gram) @ cols[i * nk : (i + 1) * nk, :]
    return out


def _rank_decision(s: np.ndarray, ident: str) -> int:
    if s.size == 0 or s[0] == 0.0:
        return 0
    rel = s / s[0]
    ambiguous = np.sum((rel > RANK_RTOL) & (rel < RANK_AMBIGUOUS))
    if ambiguous:
        raise IntegrationError(
            f"{ident}: ambiguous rank decision, {ambiguous} singular values "
            f"inside ({RANK_RTOL:g}, {RANK_AMBIGUOUS:g}) relative band"
        )
    return int(np.sum(rel >= RANK_AMBIGUOUS))


def _null_space(a: np.ndarray, ident: str) -> np.ndarray:
    """Orthonormal basis of the kernel of a (possibly empty) matrix."""
    n = a.shape[1]
    if a.shape[0] == 0 or n == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(a)
    rank = _rank_decision(s, ident)
    return vt[rank:].T


def _embed_vector_cols(cols: np.ndarray, d: int, k_src: int, k_dst: int) -> np.ndarray:
    """Re-express vector coefficients of degree k_src against the degree
    k_dst basis; the graded order makes this a block zero-pad."""
    n_src = poly.dim_poly(k_src, d)
    n_dst = poly.dim_poly(k_dst, d)
    out = np.zeros((d * n_dst, cols.shape[1]))
    for i in range(d):
        out[i * n_dst : i * n_dst + n_src] = cols[i * n_src : (i + 1) * n_src]
    return out


def _m_orthogonal_complement(ctx, k: int, base_cols: np.ndarray) -> np.ndarray:
    """Basis of {v in (P_k)^d : (v, b)_L2 = 0 for all base columns b}.

    The rank decision runs in mass-orthonormal coordinates with the base
    columns equilibrated, so it reflects the subspace geometry rather than
    monomial conditioning; the returned columns are L2-orthonormal.
    """
    m = ctx.vector_mass(k)
    n = m.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    lmat = np.linalg.cholesky(m)
    if base_cols.shape[1] == 0:
        w = np.eye(n)
    else:
        c = lmat.T @ base_cols
        c = c / np.linalg.norm(c, axis=0)
        w = _null_space(c.T, ctx.ident)
    return scipy.linalg.solve_triangular(lmat.T, w)


def _build_subspace(ctx, kind: str, k: int) -> SubspaceBasis:
    d = ctx.dim
    nvec = d * poly.dim_poly(k, d)
    if kind not in ("G", "Gperp", "R", "Rperp"):
        raise ValueError(f"unknown subspace kind {kind!r}")
    if k < 0:
        return SubspaceBasis(kind, k, np.zeros((max(nvec, 0), 0)))

    if kind == "G" or (kind == "R" and d == 2):
        op = poly.diff_matrix("grad" if kind == "G" else "brot", ctx.basis(k + 1))
        cols = op.matrix[:, 1:]
        sub = SubspaceBasis(kind, k, cols, tuple(range(1, op.matrix.shape[1])))
        expected = poly.dim_poly(k + 1, d) - 1
    elif kind == "R":
        op = poly.diff_matrix("curl", ctx.basis(k + 1))
        mat = op.matrix
        _, _, piv = scipy.linalg.qr(mat, mode="economic", pivoting=True)
        s = np.linalg.svd(mat, compute_uv=False)
        rank = _rank_decision(s, ctx.ident)
        pick = np.sort(piv[:rank])
        sub = SubspaceBasis(kind, k, mat[:, pick])
        expected = 3 * poly.dim_poly(k + 1, 3) - poly.dim_poly(k + 2, 3) + 1
    else:
        base = ctx.subspace(kind[0], k)
        cols = _m_orthogonal_complement(ctx, k, base.cols)
        sub = SubspaceBasis(kind, k, cols)
        if d == 2:
            expected = poly.dim_poly(k - 1, 2)
        elif kind == "Gperp":
            expected = 3 * poly.dim_poly(k, 3) - poly.dim_poly(k + 1, 3) + 1
        else:
            expected = poly.dim_poly(k - 1, 3)

    if sub.n_cols != expected:
        raise IntegrationError(
            f"{ctx.ident}: {kind} subspace of degree {k} has {sub.n_cols} "
            f"columns, expected {expected}"
        )
    return sub
