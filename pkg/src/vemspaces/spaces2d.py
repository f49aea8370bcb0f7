"""Local and global two-dimensional virtual spaces.

Four families are provided on every polygonal element:

* ``face``: H(div)-conforming fields, known through edge moments of the
  normal component plus interior moments against the gradient family
  G_{k-2} and its complement Gperp_k,
* ``edge``: the 90-degree rotated H(rot)-conforming analogue, with edge
  moments of the tangential component and interior moments against R_{k-2}
  and Rperp_k,
* ``vert``: continuous scalar fields with polynomial edge traces, known
  through vertex values plus edge and interior moments up to degree k-2,
* ``elem``: plain discontinuous polynomials of degree k, known through
  their interior moments.

A member of a space is represented exclusively by its vector of degree of
freedom values (there is nothing else to evaluate: interior shape functions
are never constructed).  Degrees of freedom are stored in a global
orientation convention: edge quantities refer to the global edge direction
(lower vertex index to higher) and its associated normal, so that a shared
edge carries one set of values and element-local operations apply a +-1
per traversal direction.  Edge moments are normalised by the edge length
and interior moments by the element measure.

The module computes, from DOF values alone: the exact divergence (face
family) and rotation (edge family), edge traces, all moments against the
full vector polynomial space of degree k, and from those the L2 projector
onto that space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import integrate, poly
from .geom import Face, Mesh
from .integrate import PolygonContext

FAMILIES = ("face", "edge", "vert", "elem")


@dataclass(frozen=True)
class DegreeProfile:
    """Boundary, divergence-side and rotation-side polynomial degrees."""

    kb: int
    kd: int
    kr: int

    def __post_init__(self):
        for name, v in (("kb", self.kb), ("kd", self.kd), ("kr", self.kr)):
            if v < -1:
                raise ValueError(f"profile degree {name} must be >= -1, got {v}")

    @classmethod
    def default(cls, k: int) -> "DegreeProfile":
        return cls(k, k - 1, k - 1)

    @classmethod
    def parse(cls, text: str) -> "DegreeProfile":
        parts = [int(p) for p in text.split(",")]
        if len(parts) != 3:
            raise ValueError("profile must be three comma-separated integers")
        return cls(*parts)


@dataclass(frozen=True)
class DofBlock:
    kind: str
    obj: int
    start: int
    size: int
    weight: float

    @property
    def stop(self) -> int:
        return self.start + self.size


class DofLayout2D:
    """Ordered degree-of-freedom functionals for one family on one polygon."""

    def __init__(self, face: Face, family: str, k: int, ctx: PolygonContext | None = None):
        if family not in FAMILIES:
            raise ValueError(f"unknown family {family!r}")
        if family == "elem":
            if k < 0:
                raise ValueError("elem family requires k >= 0")
        elif k < 1:
            raise ValueError(f"{family} family requires k >= 1")
        self.face = face
        self.family = family
        self.k = k
        self.ctx = ctx if ctx is not None else PolygonContext(face)
        self.blocks: list[DofBlock] = []
        self._cache: dict = {}
        self._build()

    def _add(self, kind: str, obj: int, size: int, weight: float):
        if size > 0:
            self.blocks.append(DofBlock(kind, obj, self.size, size, weight))

    @property
    def size(self) -> int:
        return self.blocks[-1].stop if self.blocks else 0

    def _build(self):
        face, k = self.face, self.k
        if self.family in ("face", "edge"):
            for i in range(face.n_edges):
                kind = "edge_normal" if self.family == "face" else "edge_tangent"
                self._add(kind, i, k + 1, 1.0 / face.edge_lengths[i])
            fam = "G" if self.family == "face" else "R"
            self.interior_low = self.ctx.subspace(fam, k - 2)
            self.interior_perp = self.ctx.subspace(fam + "perp", k)
            w = 1.0 / face.area
            self._add("interior_low", -1, self.interior_low.n_cols, w)
            self._add("interior_perp", -1, self.interior_perp.n_cols, w)
        elif self.family == "vert":
            for i in range(face.n_vertices):
                self._add("vertex", i, 1, 1.0)
            for i in range(face.n_edges):
                self._add("edge_moment", i, poly.dim_poly(k - 2, 1),
                          1.0 / face.edge_lengths[i])
            self._add("interior_moment", -1, poly.dim_poly(k - 2, 2), 1.0 / face.area)
        else:
            self._add("interior_moment", -1, poly.dim_poly(k, 2), 1.0 / face.area)

    # -- lookups -----------------------------------------------------------
    def block(self, kind: str, obj: int = -1) -> DofBlock:
        for b in self.blocks:
            if b.kind == kind and b.obj == obj:
                return b
        raise KeyError(f"no block {kind!r} for object {obj}")

    def blocks_of(self, kind: str) -> list[DofBlock]:
        return [b for b in self.blocks if b.kind == kind]

    def edge_basis(self, i: int, degree: int | None = None) -> poly.MonomialBasis:
        """1d basis in the arc coordinate of loop edge i, measured from the
        midpoint along the global edge direction."""
        return integrate.edge_basis(
            float(self.face.edge_lengths[i]), self.k if degree is None else degree
        )

    def global_normals(self) -> np.ndarray:
        """Per loop edge, the normal paired with the global tangent."""
        t = self.face.global_edge_tangents()
        return np.column_stack([t[:, 1], -t[:, 0]])

    def _edge_pullback(self, i: int, degree: int, src_degree: int) -> np.ndarray:
        """Restriction of the element basis to loop edge i, into the edge
        basis of the requested degree."""
        key = ("epb", i, degree, src_degree)
        if key not in self._cache:
            t = self.face.global_edge_tangents()[i]
            mid = self.face.edge_midpoints[i]
            self._cache[key] = poly.affine_pullback(
                self.ctx.basis(src_degree), t.reshape(2, 1), mid,
                self.edge_basis(i, degree),
            )
        return self._cache[key]


def layout_2d(mesh: Mesh, element: int, family: str, k: int) -> DofLayout2D:
    """Cached layout for one element of a 2d mesh (or one 3d face)."""
    key = ("layout2d", element, family, k)
    if key not in mesh._cache:
        mesh._cache[key] = DofLayout2D(
            mesh.faces[element], family, k, integrate.polygon_context(mesh, element)
        )
    return mesh._cache[key]


# -- dimensions --------------------------------------------------------------

def dim_local_2d(family: str, face: Face, k: int, profile: DegreeProfile | None = None) -> int:
    """Dimension of one local space, with optional degree-profile variant."""
    if family not in FAMILIES:
        raise ValueError(f"unknown family {family!r}")
    le, lv = face.n_edges, face.n_vertices
    if family == "elem":
        if k < 0:
            raise ValueError("elem family requires k >= 0")
        return poly.dim_poly(k, 2)
    if profile is None:
        profile = DegreeProfile.default(k)
        if family == "vert":
            profile = DegreeProfile(k, k, k)
    kb, kd, kr = profile.kb, profile.kd, profile.kr
    if family == "face":
        return le * poly.dim_poly(kb, 1) + max(poly.dim_poly(kd, 2) - 1, 0) \
            + poly.dim_poly(kr, 2)
    if family == "edge":
        return le * poly.dim_poly(kb, 1) + poly.dim_poly(kd, 2) \
            + max(poly.dim_poly(kr, 2) - 1, 0)
    # vert: kd acts as the interior Laplacian degree
    return lv + le * poly.dim_poly(kb - 2, 1) + poly.dim_poly(kd - 2, 2)


# -- DOF evaluation ----------------------------------------------------------

def dofs_of_polynomial(layout: DofLayout2D, p: poly.PolyCoeffs) -> np.ndarray:
    """Exact values of every DOF functional on a polynomial field."""
    want = 2 if layout.family in ("face", "edge") else 1
    if p.ncomp != want:
        raise ValueError(f"{layout.family} family expects {want} components")
    face, ctx, k = layout.face, layout.ctx, layout.k
    out = np.zeros(layout.size)
    tg = face.global_edge_tangents()
    ng = layout.global_normals()
    for b in layout.blocks:
        if b.kind in ("edge_normal", "edge_tangent", "edge_moment"):
            i = b.obj
            a = face.verts2d[i]
            c = face.verts2d[(i + 1) % face.n_vertices]
            pts, w = integrate.segment_rule(a, c, p.basis.degree + k)
            u = (pts - face.edge_midpoints[i]) @ tg[i]
            pv = p.eval(pts)
            if b.kind == "edge_normal":
                scal = pv @ ng[i]
            elif b.kind == "edge_tangent":
                scal = pv @ tg[i]
            else:
                scal = pv[:, 0]
            deg = k if b.kind != "edge_moment" else k - 2
            basis1 = layout.edge_basis(i, deg)
            out[b.start : b.stop] = b.weight * ((w * scal) @ basis1.eval(u[:, None]))
        elif b.kind == "interior_low":
            out[b.start : b.stop] = b.weight * ctx.vector_pairing(
                p, layout.interior_low.cols, k - 2
            )
        elif b.kind == "interior_perp":
            out[b.start : b.stop] = b.weight * ctx.vector_pairing(
                p, layout.interior_perp.cols, k
            )
        elif b.kind == "vertex":
            out[b.start] = p.eval(face.verts2d[b.obj][None, :])[0, 0]
        else:  # interior_moment
            deg = k if layout.family == "elem" else k - 2
            gram = ctx.scalar_gram(p.basis.degree, deg)
            out[b.start : b.stop] = b.weight * (p.component(0) @ gram)
    return out


def dof_matrix_on_polynomials(layout: DofLayout2D, degree: int) -> np.ndarray:
    """DOF evaluation matrix over the embedded polynomial space: column j
    holds the DOFs of the j-th (vector) monomial basis member."""
    key = ("dofmat", degree)
    if key not in layout._cache:
        ncomp = 2 if layout.family in ("face", "edge") else 1
        basis = layout.ctx.basis(degree)
        n = ncomp * len(basis)
        cols = np.empty((layout.size, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = 1.0
            cols[:, j] = dofs_of_polynomial(layout, poly.PolyCoeffs(basis, ncomp, e))
        layout._cache[key] = cols
    return layout._cache[key]


# -- recovery from DOFs ------------------------------------------------------

def trace_matrix(layout: DofLayout2D, i: int) -> np.ndarray:
    """Maps DOFs to coefficients of the edge trace polynomial on loop edge
    i: the normal component for the face family, tangential for edge."""
    key = ("trace", i)
    if key not in layout._cache:
        b = layout.block(
            "edge_normal" if layout.family == "face" else "edge_tangent", i
        )
        length = float(layout.face.edge_lengths[i])
        mat = np.zeros((layout.k + 1, layout.size))
        mat[:, b.start : b.stop] = length * np.linalg.inv(
            integrate.edge_mass(length, layout.k)
        )
        layout._cache[key] = mat
    return layout._cache[key]


def _edge_gram_1d(length: float, ka: int, kb: int) -> np.ndarray:
    mom = integrate.edge_basis_moments(length, ka + kb)
    return mom[np.arange(ka + 1)[:, None] + np.arange(kb + 1)[None, :]]


def div_matrix(layout: DofLayout2D) -> np.ndarray:
    """Maps face-family DOFs to the coefficients of the (exact) divergence
    in the degree k-1 basis, by integration by parts against test
    polynomials: boundary flux moments minus interior gradient moments."""
    if layout.family != "face":
        raise ValueError("divergence recovery needs the face family")
    return _derivative_matrix(layout, sign=1.0)


def rot_matrix(layout: DofLayout2D) -> np.ndarray:
    """Maps edge-family DOFs to the coefficients of the rotation in the
    degree k-1 basis (boundary circulation moments plus interior moments
    against rotated gradients)."""
    if layout.family != "edge":
        raise ValueError("rotation recovery needs the edge family")
    return _derivative_matrix(layout, sign=-1.0)


def _derivative_matrix(layout: DofLayout2D, sign: float) -> np.ndarray:
    key = "deriv"
    if key not in layout._cache:
        face, ctx, k = layout.face, layout.ctx, layout.k
        nlow = poly.dim_poly(k - 1, 2)
        rhs = np.zeros((nlow, layout.size))
        kind = "edge_normal" if layout.family == "face" else "edge_tangent"
        for b in layout.blocks_of(kind):
            i = b.obj
            pull = layout._edge_pullback(i, k, k - 1)  # test poly on the edge
            length = float(face.edge_lengths[i])
            d = int(face.edge_dir[i])
            # int_e trace * m = sum_j c_j * |e| * dof_j; traversal sign makes
            # the global-convention trace the outward one
            rhs[:, b.start : b.stop] += d * length * pull.T
        low = layout.interior_low
        bl = layout.block("interior_low") if low.n_cols else None
        if bl is not None:
            # interior moments against gradients (face) or rotated gradients
            # (edge) of the very test polynomials, in source order
            for col, src in enumerate(low.src_indices):
                rhs[src, bl.start + col] += -sign * face.area
        layout._cache[key] = np.linalg.solve(ctx.mass(k - 1), rhs)
    return layout._cache[key]


def moments_matrix(layout: DofLayout2D) -> np.ndarray:
    """Maps DOFs to the full moment vector against the vector monomial
    basis of degree k (face and edge families).

    Moments against the gradient (rotation) family follow from the edge
    traces and the recovered divergence (rotation); moments against the
    orthogonal complement are DOFs.  Solving with the stacked subspace
    basis converts both to plain monomial moments.
    """
    key = "moments"
    if key not in layout._cache:
        face, ctx, k = layout.face, layout.ctx, layout.k
        if layout.family == "face":
            fam, famp = "G", "Gperp"
            deriv = div_matrix(layout)
            bsign = 1.0
        elif layout.family == "edge":
            fam, famp = "R", "Rperp"
            deriv = rot_matrix(layout)
            bsign = -1.0
        else:
            raise ValueError("moment recovery applies to face and edge families")
        high = ctx.subspace(fam, k)          # gradients of degree k+1 members
        perp = layout.interior_perp
        nh = len(high.src_indices)
        rows_high = np.zeros((nh, layout.size))
        # boundary terms: int_e trace * m_src for every degree k+1 member
        kind = "edge_normal" if layout.family == "face" else "edge_tangent"
        for b in layout.blocks_of(kind):
            i = b.obj
            length = float(face.edge_lengths[i])
            d = int(face.edge_dir[i])
            pull = layout._edge_pullback(i, k + 1, k + 1)[:, 1:]  # skip constant
            g1 = _edge_gram_1d(length, k + 1, k)
            rows_high += bsign * d * (pull.T @ g1 @ trace_matrix(layout, i))
        # interior term: -int div(v) m  (face)  /  +int rot(v) m  (edge)
        gram = ctx.scalar_gram(k - 1, k + 1)[:, 1:]
        rows_high += -bsign * gram.T @ deriv
        rows_perp = np.zeros((perp.n_cols, layout.size))
        bp = layout.block("interior_perp") if perp.n_cols else None
        if bp is not None:
            rows_perp[:, bp.start : bp.stop] = face.area * np.eye(perp.n_cols)
        u = np.hstack([high.cols, perp.cols])
        stacked = np.vstack([rows_high, rows_perp])
        layout._cache[key] = np.linalg.solve(u.T, stacked)
    return layout._cache[key]


def l2_projector(layout: DofLayout2D) -> np.ndarray:
    """Matrix from DOFs to the coefficients of the L2 projection onto the
    vector polynomials of degree k."""
    key = "projector"
    if key not in layout._cache:
        layout._cache[key] = np.linalg.solve(
            layout.ctx.vector_mass(layout.k), moments_matrix(layout)
        )
    return layout._cache[key]


def div_from_dofs(layout: DofLayout2D, dofs: np.ndarray) -> poly.PolyCoeffs:
    return poly.PolyCoeffs(layout.ctx.basis(layout.k - 1), 1, div_matrix(layout) @ dofs)


def rot_from_dofs(layout: DofLayout2D, dofs: np.ndarray) -> poly.PolyCoeffs:
    return poly.PolyCoeffs(layout.ctx.basis(layout.k - 1), 1, rot_matrix(layout) @ dofs)


def full_vector_moments(layout: DofLayout2D, dofs: np.ndarray) -> np.ndarray:
    return moments_matrix(layout) @ dofs


def project_from_dofs(layout: DofLayout2D, dofs: np.ndarray) -> poly.PolyCoeffs:
    return poly.PolyCoeffs(layout.ctx.basis(layout.k), 2, l2_projector(layout) @ dofs)


def compatibility_residual(layout: DofLayout2D, dofs: np.ndarray,
                           f_d: poly.PolyCoeffs) -> float:
    """Mismatch between the declared divergence data and the boundary flux,
    |int_E f_d - oint v . n|; zero for consistent data."""
    if layout.family != "face":
        raise ValueError("compatibility applies to the face family")
    flux = 0.0
    for b in layout.blocks_of("edge_normal"):
        i = b.obj
        flux += int(layout.face.edge_dir[i]) * float(layout.face.edge_lengths[i]) \
            * dofs[b.start]
    if f_d.basis.degree >= 0:
        local = layout.ctx.basis(f_d.basis.degree)
        pull = poly.affine_pullback(f_d.basis, np.eye(2), np.zeros(2), local)
        vol = layout.ctx.moments(f_d.basis.degree) @ (pull @ f_d.component(0))
    else:
        vol = 0.0
    return abs(vol - flux)


# -- trace reconstruction for the scalar family ------------------------------

def vert_edge_poly_matrix(layout: DofLayout2D, i: int) -> np.ndarray:
    """Maps vert-family DOFs to the degree-k coefficients of the edge trace
    on loop edge i (in the global edge coordinate), reconstructed from the
    endpoint values and the edge moments."""
    if layout.family != "vert":
        raise ValueError("edge trace reconstruction needs the vert family")
    key = ("vtrace", i)
    if key not in layout._cache:
        face, k = layout.face, layout.k
        length = float(face.edge_lengths[i])
        basis1 = layout.edge_basis(i, k)
        d = int(face.edge_dir[i])
        # endpoints in the global coordinate: -L/2 is the lower vertex id
        iv0, iv1 = i, (i + 1) % face.n_vertices
        if d < 0:
            iv0, iv1 = iv1, iv0
        rows = [
            basis1.eval(np.array([[-0.5 * length]]))[0],
            basis1.eval(np.array([[0.5 * length]]))[0],
        ]
        nmom = poly.dim_poly(k - 2, 1)
        if nmom:
            rows.append(_edge_gram_1d(length, k - 2, k) / length)
        vmat = np.vstack(rows)
        rhs = np.zeros((vmat.shape[0], layout.size))
        rhs[0, layout.block("vertex", iv0).start] = 1.0
        rhs[1, layout.block("vertex", iv1).start] = 1.0
        if nmom:
            bm = layout.block("edge_moment", i)
            rhs[2:, bm.start : bm.stop] = np.eye(nmom)
        layout._cache[key] = np.linalg.solve(vmat, rhs)
    return layout._cache[key]


# -- global assembly ---------------------------------------------------------

@dataclass
class GlobalSpace2D:
    mesh: Mesh
    family: str
    k: int
    dim: int
    formula_dim: int
    element_maps: list[np.ndarray]
    layouts: list[DofLayout2D]

    def scatter(self, element: int, local_values: np.ndarray, out: np.ndarray):
        out[self.element_maps[element]] = local_values


def assemble_global_2d(mesh: Mesh, family: str, k: int) -> GlobalSpace2D:
    """Identify shared DOFs across elements and number the global space.

    Edge DOFs are stored once per global edge (in the global orientation
    convention, so no sign flips are needed in the maps); vertex DOFs once
    per vertex; interior DOFs per element.
    """
    if mesh.dim != 2:
        raise ValueError("2d assembly requires a 2d mesh")
    layouts = [layout_2d(mesh, e, family, k) for e in range(mesh.n_elements)]
    ne, nv = mesh.n_edges, mesh.n_vertices
    if family in ("face", "edge"):
        per_edge = k + 1
        offset = ne * per_edge
    elif family == "vert":
        per_edge = poly.dim_poly(k - 2, 1)
        offset = nv + ne * per_edge
    else:
        per_edge = 0
        offset = 0
    maps = []
    for e, lay in enumerate(layouts):
        gmap = np.empty(lay.size, dtype=int)
        for b in lay.blocks:
            if b.kind in ("edge_normal", "edge_tangent"):
                ge = lay.face.edge_ids[b.obj]
                gmap[b.start : b.stop] = ge * per_edge + np.arange(b.size)
            elif b.kind == "edge_moment":
                ge = lay.face.edge_ids[b.obj]
                gmap[b.start : b.stop] = nv + ge * per_edge + np.arange(b.size)
            elif b.kind == "vertex":
                gmap[b.start] = lay.face.vertex_ids[b.obj]
            else:
                gmap[b.start : b.stop] = offset + np.arange(b.size)
                offset += b.size
        maps.append(gmap)
    dim = offset
    if family in ("face", "edge"):
        formula = poly.dim_poly(k, 1) * ne \
            + (2 * poly.dim_poly(k - 1, 2) - 1) * mesh.n_elements
    elif family == "vert":
        formula = nv + poly.dim_poly(k - 2, 1) * ne \
            + poly.dim_poly(k - 2, 2) * mesh.n_elements
    else:
        formula = poly.dim_poly(k, 2) * mesh.n_elements
    return GlobalSpace2D(mesh, family, k, dim, formula, maps, layouts)
