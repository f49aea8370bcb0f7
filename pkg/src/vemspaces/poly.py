"""Scaled monomial polynomial algebra in one, two and three variables.

Conventions fixed here once and relied on by every other module:

* A polynomial space of degree k on a geometric object is represented by a
  :class:`MonomialBasis`: the scaled, centered monomials ((x - c)/h)^alpha
  for all multi-indices |alpha| <= k, where c is the object centroid and h
  its diameter.  Degree k = -1 is the empty basis (the space {0}), which
  removes special cases from the dimension formulas downstream.
* Multi-indices are ordered graded lexicographically: lower total degree
  first, and within one degree the first coordinate dominates.  For d = 2,
  k = 2 the order is 1, x, y, x^2, xy, y^2.  Degree-of-freedom layouts
  depend on this order.
* Vector-valued polynomials with c components store their coefficients
  component-major: all coefficients of component 0 first, then component 1,
  and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

DIFF_OPS = ("grad", "div", "rot", "brot", "curl", "laplacian")


def dim_poly(k: int, d: int) -> int:
    """Dimension of the polynomial space of degree <= k in d variables.

    Returns 0 for any negative k (empty space convention).
    """
    if d not in (1, 2, 3):
        raise ValueError(f"ambient dimension must be 1, 2 or 3, got {d}")
    if k < 0:
        return 0
    return math.comb(k + d, d)


@lru_cache(maxsize=None)
def multi_indices(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    """All multi-indices |alpha| <= k in d variables, graded lex order."""
    if d not in (1, 2, 3):
        raise ValueError(f"ambient dimension must be 1, 2 or 3, got {d}")
    out: list[tuple[int, ...]] = []
    for deg in range(max(k, -1) + 1):
        out.extend(_indices_of_degree(d, deg))
    return tuple(out)


def _indices_of_degree(d: int, deg: int) -> list[tuple[int, ...]]:
    if d == 1:
        return [(deg,)]
    out = []
    for a in range(deg, -1, -1):
        out.extend((a, *rest) for rest in _indices_of_degree(d - 1, deg - a))
    return out


@lru_cache(maxsize=None)
def _index_map(d: int, k: int) -> dict[tuple[int, ...], int]:
    return {alpha: i for i, alpha in enumerate(multi_indices(d, k))}


@dataclass(frozen=True)
class MonomialBasis:
    """Scaled monomial basis ((x - center)/scale)^alpha, |alpha| <= degree."""

    dim: int
    degree: int
    center: tuple[float, ...]
    scale: float

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"ambient dimension must be 1, 2 or 3, got {self.dim}")
        if len(self.center) != self.dim:
            raise ValueError("center length does not match ambient dimension")
        if not self.scale > 0:
            raise ValueError("scale must be positive")

    def __len__(self) -> int:
        return dim_poly(self.degree, self.dim)

    @property
    def exponents(self) -> tuple[tuple[int, ...], ...]:
        return multi_indices(self.dim, self.degree)

    def with_degree(self, k: int) -> "MonomialBasis":
        return MonomialBasis(self.dim, k, self.center, self.scale)

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Values of every basis member at the given points.

        points has shape (npts, dim) (a single point may be passed as a
        1-d array); the result has shape (npts, len(self)).
        """
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        scaled = (pts - np.asarray(self.center)) / self.scale
        n = len(self)
        out = np.empty((pts.shape[0], n))
        # per-coordinate power tables, reused across members
        powers = [
            np.vander(scaled[:, i], N=self.degree + 1, increasing=True)
            if self.degree >= 0
            else np.zeros((pts.shape[0], 0))
            for i in range(self.dim)
        ]
        for j, alpha in enumerate(self.exponents):
            v = powers[0][:, alpha[0]].copy()
            for i in range(1, self.dim):
                v *= powers[i][:, alpha[i]]
            out[:, j] = v
        return out


def unit_basis(d: int, k: int) -> MonomialBasis:
    """Basis centered at the origin with unit scale (plain monomials)."""
    return MonomialBasis(d, k, (0.0,) * d, 1.0)


@dataclass
class PolyCoeffs:
    """A (possibly vector-valued) polynomial as coefficients against a basis."""

    basis: MonomialBasis
    ncomp: int
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float).ravel()
        if self.coeffs.size != self.ncomp * len(self.basis):
            raise ValueError(
                f"coefficient vector has length {self.coeffs.size}, "
                f"expected {self.ncomp} * {len(self.basis)}"
            )

    def component(self, i: int) -> np.ndarray:
        n = len(self.basis)
        return self.coeffs[i * n : (i + 1) * n]

    def eval(self, points: np.ndarray) -> np.ndarray:
        """Values at points, shape (npts, ncomp)."""
        vals = self.basis.eval(points)
        out = np.empty((vals.shape[0], self.ncomp))
        for i in range(self.ncomp):
            out[:, i] = vals @ self.component(i)
        return out


def zero_poly(basis: MonomialBasis, ncomp: int = 1) -> PolyCoeffs:
    return PolyCoeffs(basis, ncomp, np.zeros(ncomp * len(basis)))


def partial_matrix(basis: MonomialBasis, axis: int) -> np.ndarray:
    """Matrix of d/dx_axis from degree k to degree k-1 in the same frame."""
    src = basis.exponents
    dst = _index_map(basis.dim, basis.degree - 1) if basis.degree >= 1 else {}
    mat = np.zeros((dim_poly(basis.degree - 1, basis.dim), len(basis)))
    for j, alpha in enumerate(src):
        a = alpha[axis]
        if a == 0:
            continue
        beta = list(alpha)
        beta[axis] = a - 1
        mat[dst[tuple(beta)], j] = a / basis.scale
    return mat


@dataclass(frozen=True)
class DiffOp:
    """A differential operator as a matrix between coefficient vectors."""

    name: str
    matrix: np.ndarray
    src_basis: MonomialBasis
    src_ncomp: int
    dst_basis: MonomialBasis
    dst_ncomp: int

    def apply(self, p: PolyCoeffs) -> PolyCoeffs:
        if p.basis != self.src_basis or p.ncomp != self.src_ncomp:
            raise ValueError("polynomial does not match operator domain")
        return PolyCoeffs(self.dst_basis, self.dst_ncomp, self.matrix @ p.coeffs)


def diff_matrix(op: str, basis: MonomialBasis) -> DiffOp:
    """Differential operator matrix on the given scaled basis.

    The source space is scalar for grad/brot/laplacian and has d components
    for div/rot/curl; rot and brot exist only for d = 2, curl only for d = 3.
    First-order operators drop the degree by one, the laplacian by two.
    """
    d = basis.dim
    k = basis.degree
    if op not in DIFF_OPS:
        raise ValueError(f"unknown operator {op!r}")
    if op in ("rot", "brot") and d != 2:
        raise ValueError(f"{op} is only defined in two dimensions")
    if op == "curl" and d != 3:
        raise ValueError("curl is only defined in three dimensions")

    parts = [partial_matrix(basis, i) for i in range(d)]
    lower = basis.with_degree(k - 1)
    if op == "grad":
        return DiffOp(op, np.vstack(parts), basis, 1, lower, d)
    if op == "div":
        return DiffOp(op, np.hstack(parts), basis, d, lower, 1)
    if op == "rot":
        return DiffOp(op, np.hstack([-parts[1], parts[0]]), basis, 2, lower, 1)
    if op == "brot":
        return DiffOp(op, np.vstack([parts[1], -parts[0]]), basis, 1, lower, 2)
    if op == "curl":
        n1 = dim_poly(k - 1, d)
        n0 = len(basis)
        z = np.zeros((n1, n0))
        mat = np.block(
            [
                [z, -parts[2], parts[1]],
                [parts[2], z, -parts[0]],
                [-parts[1], parts[0], z],
            ]
        )
        return DiffOp(op, mat, basis, 3, lower, 3)
    # laplacian
    second = [partial_matrix(lower, i) for i in range(d)]
    mat = sum(second[i] @ parts[i] for i in range(d))
    return DiffOp(op, mat, basis, 1, basis.with_degree(k - 2), 1)


def product_coeffs(ca: np.ndarray, ka: int, cb: np.ndarray, kb: int, d: int) -> np.ndarray:
    """Coefficients of the product of two scalar polynomials (same frame).

    Both inputs are coefficient vectors against the monomial bases of
    degrees ka and kb in the common frame; the result is against the basis
    of degree ka + kb.  The product of two scaled centered monomials is the
    scaled centered monomial of the summed exponent, so no geometry enters.
    """
    ea = multi_indices(d, ka)
    eb = multi_indices(d, kb)
    dst = _index_map(d, ka + kb)
    out = np.zeros(dim_poly(ka + kb, d))
    for i, ai in enumerate(ea):
        x = ca[i]
        if x == 0.0:
            continue
        for j, bj in enumerate(eb):
            y = cb[j]
            if y == 0.0:
                continue
            out[dst[tuple(p + q for p, q in zip(ai, bj))]] += x * y
    return out


def affine_pullback(src: MonomialBasis, amat: np.ndarray, b: np.ndarray,
                    dst: MonomialBasis) -> np.ndarray:
    """Matrix of the substitution x = A y + b between two monomial bases.

    Maps coefficients against ``src`` (in the x variables, dimension
    src.dim) to coefficients against ``dst`` (in the y variables).  Exact
    for dst.degree >= src.degree; used to restrict polynomials to faces
    (3d -> 2d), to edges (-> 1d), and to transform under rigid motions.
    """
    amat = np.asarray(amat, dtype=float).reshape(src.dim, dst.dim)
    b = np.asarray(b, dtype=float).ravel()
    if dst.degree < src.degree:
        raise ValueError("destination degree too small for exact substitution")
    # each source coordinate becomes an affine form in the scaled y variables
    cdst = np.asarray(dst.center)
    lin = []
    for i in range(src.dim):
        const = (amat[i] @ cdst + b[i] - src.center[i]) / src.scale
        grad = amat[i] * dst.scale / src.scale
        form = np.zeros(dim_poly(dst.degree, dst.dim))
        form[0] = const
        form[1 : 1 + dst.dim] = grad
        lin.append(form)
    kd = dst.degree
    one = np.zeros(dim_poly(kd, dst.dim))
    if one.size:
        one[0] = 1.0
    # power tables of each affine form, truncated multiplication at degree kd
    powers = []
    for i in range(src.dim):
        tab = [one]
        for p in range(1, src.degree + 1):
            tab.append(_truncated_product(tab[-1], lin[i], dst.dim, kd))
        powers.append(tab)
    cols = []
    for alpha in src.exponents:
        acc = one
        for i, a in enumerate(alpha):
            if a:
                acc = _truncated_product(acc, powers[i][a], dst.dim, kd)
        cols.append(acc)
    if not cols:
        return np.zeros((dim_poly(kd, dst.dim), 0))
    return np.column_stack(cols)


def _truncated_product(ca: np.ndarray, cb: np.ndarray, d: int, k: int) -> np.ndarray:
    dst = _index_map(d, k)
    ea = multi_indices(d, k)
    out = np.zeros(dim_poly(k, d))
    nza = np.nonzero(ca)[0]
    nzb = np.nonzero(cb)[0]
    for i in nza:
        ai = ea[i]
        for j in nzb:
            bj = ea[j]
            e = tuple(p + q for p, q in zip(ai, bj))
            if sum(e) <= k:
                out[dst[e]] += ca[i] * cb[j]
    return out


def numeric_rank(mat: np.ndarray, rtol: float = 1e-10) -> int:
    """Rank with a relative singular value cutoff."""
    if mat.size == 0:
        return 0
    s = np.linalg.svd(mat, compute_uv=False)
    if s[0] == 0.0:
        return 0
    return int(np.sum(s > rtol * s[0]))


@dataclass
class SequenceLink:
    """Rank data for one operator in a polynomial differential sequence."""

    op: str
    src_dim: int
    dst_dim: int
    rank: int
    kernel_dim: int


@dataclass
class SequenceRankReport:
    degree: int
    ambient_dim: int
    links: list[SequenceLink]
    exact: bool
    failures: list[str] = field(default_factory=list)


def sequence_ranks(r: int, d: int, rtol: float = 1e-10) -> SequenceRankReport:
    """Rank/kernel report for the grad/rot (d=2) or grad/curl/div (d=3)
    sequence starting from degree r, with exactness flags at every link.
    """
    if r < 1:
        raise ValueError("degree must be at least 1")
    if d == 2:
        chain = ["grad", "rot"]
    elif d == 3:
        chain = ["grad", "curl", "div"]
    else:
        raise ValueError(f"ambient dimension must be 2 or 3, got {d}")

    links = []
    deg = r
    for op in chain:
        basis = unit_basis(d, deg)
        dop = diff_matrix(op, basis)
        rank = numeric_rank(dop.matrix, rtol)
        src_dim = dop.src_ncomp * len(basis)
        dst_dim = dop.dst_ncomp * dim_poly(deg - 1, d)
        links.append(SequenceLink(op, src_dim, dst_dim, rank, src_dim - rank))
        deg -= 1

    failures = []
    if links[0].kernel_dim != 1:
        failures.append(
            f"kernel of {links[0].op} has dimension {links[0].kernel_dim}, expected 1"
        )
    for a, b in zip(links, links[1:]):
        if a.rank != b.kernel_dim:
            failures.append(
                f"image of {a.op} (dim {a.rank}) does not match kernel of "
                f"{b.op} (dim {b.kernel_dim})"
            )
    last = links[-1]
    if last.rank != last.dst_dim:
        failures.append(
            f"{last.op} is not surjective: rank {last.rank} of {last.dst_dim}"
        )
    return SequenceRankReport(r, d, links, not failures, failures)
