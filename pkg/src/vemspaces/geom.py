"""Polytopal mesh model for two and three dimensions.

The mesh document is a JSON object:

* 2d: ``{"dim": 2, "vertices": [[x, y], ...], "faces": [[v0, v1, ...], ...]}``
  where each face is a counterclockwise vertex loop and plays the role of a
  mesh element.
* 3d: ``{"dim": 3, "vertices": [[x, y, z], ...], "edges": [[v0, v1], ...],
  "faces": [[v0, v1, ...], ...], "cells": [[s0, s1, ...], ...]}`` where each
  face is a planar vertex loop whose orientation defines the stored unit
  normal (right-hand rule), and each cell lists signed 1-based face ids:
  ``+ (f+1)`` when the stored normal points out of the cell, ``-(f+1)``
  otherwise.  The ``edges`` array is optional and cross-checked when given.
* Both: optional ``"simply_connected": true/false`` (default true).

Global orientation conventions: an edge always points from its lower vertex
index to the higher one; a 3d face carries the frame (origin at the face
centroid, first axis towards the midpoint of its first loop edge, second
axis completing a right-handed triple with the normal).  All derived
quantities are deterministic functions of the document.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class GeomError(ValueError):
    """Raised for structural mesh defects; the message names the object."""


@dataclass(frozen=True)
class FaceFrame:
    """Right-handed orthonormal frame of a planar face embedded in 3d."""

    origin: np.ndarray
    e1: np.ndarray
    e2: np.ndarray
    normal: np.ndarray

    def to_plane(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(points) - self.origin
        return np.column_stack([pts @ self.e1, pts @ self.e2])

    def to_space(self, coords: np.ndarray) -> np.ndarray:
        c = np.atleast_2d(coords)
        return self.origin + np.outer(c[:, 0], self.e1) + np.outer(c[:, 1], self.e2)


def tangential_part(phi: np.ndarray, frame: FaceFrame) -> np.ndarray:
    """In-plane components (w.r.t. the frame axes) of phi - (phi.n) n."""
    phi = np.asarray(phi, dtype=float)
    return np.array([phi @ frame.e1, phi @ frame.e2])


def wedge_normal(phi: np.ndarray, frame: FaceFrame) -> np.ndarray:
    """In-plane components of phi x n; distinct from the tangential part."""
    w = np.cross(np.asarray(phi, dtype=float), frame.normal)
    return np.array([w @ frame.e1, w @ frame.e2])


class Face:
    """A polygon in plane coordinates: a 2d element or a framed 3d face.

    The vertex loop is counterclockwise in its plane.  Edge i joins loop
    vertices i and i+1; ``edge_dir[i]`` is +1 when that local traversal
    agrees with the global orientation of edge ``edge_ids[i]`` and -1
    otherwise.
    """

    def __init__(self, ident, verts2d, vertex_ids, edge_ids, edge_dir, frame=None):
        self.ident = ident
        self.verts2d = np.asarray(verts2d, dtype=float)
        self.vertex_ids = list(vertex_ids)
        self.edge_ids = list(edge_ids)
        self.edge_dir = np.asarray(edge_dir, dtype=int)
        self.frame = frame
        n = len(self.verts2d)
        if n < 3:
            raise GeomError(f"{ident}: fewer than three vertices")
        rolled = np.roll(self.verts2d, -1, axis=0)
        cross = self.verts2d[:, 0] * rolled[:, 1] - rolled[:, 0] * self.verts2d[:, 1]
        self.area = 0.5 * float(np.sum(cross))
        if self.area <= 0:
            raise GeomError(f"{ident}: vertex loop is not counterclockwise")
        self.centroid = (
            np.sum((self.verts2d + rolled) * cross[:, None], axis=0) / (6 * self.area)
        )
        diffs = self.verts2d[:, None, :] - self.verts2d[None, :, :]
        self.diameter = float(np.sqrt(np.max(np.sum(diffs**2, axis=2))))
        self.edge_vectors = rolled - self.verts2d
        self.edge_lengths = np.linalg.norm(self.edge_vectors, axis=1)
        if np.any(self.edge_lengths <= 0):
            raise GeomError(f"{ident}: degenerate edge")
        self.edge_midpoints = 0.5 * (self.verts2d + rolled)
        self.edge_tangents = self.edge_vectors / self.edge_lengths[:, None]

    @property
    def n_vertices(self) -> int:
        return len(self.verts2d)

    @property
    def n_edges(self) -> int:
        return len(self.verts2d)

    def outward_normals(self) -> np.ndarray:
        """Unit outward normals per loop edge (loop is counterclockwise)."""
        t = self.edge_tangents
        return np.column_stack([t[:, 1], -t[:, 0]])

    def global_edge_tangents(self) -> np.ndarray:
        """Per loop edge, the tangent in the global edge orientation."""
        return self.edge_tangents * self.edge_dir[:, None]


class Mesh:
    """Immutable polytopal mesh with derived measures and orientations."""

    def __init__(self, dim, vertices, edges, faces, cells, simply_connected, document):
        self.dim = dim
        self.vertices = vertices
        self.edges = edges
        self.faces = faces
        self.cells = cells
        self.simply_connected = simply_connected
        self._document = document
        self._cache: dict = {}

        ev = vertices[edges[:, 1]] - vertices[edges[:, 0]]
        self.edge_lengths = np.linalg.norm(ev, axis=1)
        self.edge_tangents = ev / self.edge_lengths[:, None]
        self.edge_midpoints = 0.5 * (vertices[edges[:, 0]] + vertices[edges[:, 1]])

        if dim == 3:
            self._compute_cell_geometry()

    # -- basic counts ------------------------------------------------------
    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_elements(self) -> int:
        return len(self.cells) if self.dim == 3 else len(self.faces)

    def element_ident(self, i: int) -> str:
        return f"cell {i}" if self.dim == 3 else f"element {i}"

    def cell_vertex_ids(self, c: int) -> list[int]:
        ids = set()
        for fid, _ in self.cells[c]:
            ids.update(self.faces[fid].vertex_ids)
        return sorted(ids)

    def cell_edge_ids(self, c: int) -> list[int]:
        ids = set()
        for fid, _ in self.cells[c]:
            ids.update(self.faces[fid].edge_ids)
        return sorted(ids)

    def to_document(self) -> dict:
        return json.loads(json.dumps(self._document))

    # -- geometry ----------------------------------------------------------
    def _compute_cell_geometry(self):
        nc = len(self.cells)
        self.cell_volumes = np.zeros(nc)
        self.cell_centroids = np.zeros((nc, 3))
        self.cell_diameters = np.zeros(nc)
        for c, flist in enumerate(self.cells):
            vids = self.cell_vertex_ids(c)
            pts = self.vertices[vids]
            diffs = pts[:, None, :] - pts[None, :, :]
            self.cell_diameters[c] = np.sqrt(np.max(np.sum(diffs**2, axis=2)))
            apex = pts.mean(axis=0)
            vol = 0.0
            mom = np.zeros(3)
            for fid, sign in flist:
                face = self.faces[fid]
                tris = _face_triangles(face)
                if sign < 0:
                    tris = [(a, c2, b) for a, b, c2 in tris]
                for a, b, c2 in tris:
                    v = np.dot(a - apex, np.cross(b - apex, c2 - apex)) / 6.0
                    vol += v
                    mom += v * (apex + a + b + c2) / 4.0
            if vol <= 0:
                raise GeomError(f"cell {c}: non-positive volume {vol}")
            self.cell_volumes[c] = vol
            self.cell_centroids[c] = mom / vol
            # closed boundary: area-weighted outward normals sum to zero
            resid = np.zeros(3)
            for fid, sign in flist:
                face = self.faces[fid]
                resid += sign * face.area * face.frame.normal
            if np.linalg.norm(resid) > 1e-12 * self.cell_diameters[c] ** 2:
                raise GeomError(
                    f"cell {c}: boundary is not closed "
                    f"(normal residual {np.linalg.norm(resid):.3e})"
                )


def _face_triangles(face: Face):
    """Fan triangles of a 3d face in space coordinates, loop orientation."""
    pts = face.frame.to_space(face.verts2d)
    o = face.frame.origin
    return [(o, pts[i], pts[(i + 1) % len(pts)]) for i in range(len(pts))]


# -- loading ---------------------------------------------------------------

def load_mesh(source) -> Mesh:
    """Build a mesh from a document dict, a JSON string, or a file path."""
    if isinstance(source, Mesh):
        return source
    if isinstance(source, (str, Path)):
        path = Path(source)
        if path.exists():
            with open(path, "r", encoding="utf-8") as fh:
                doc = json.load(fh)
        else:
            doc = json.loads(source)  # may raise for a missing file path
    else:
        doc = source
    if not isinstance(doc, dict):
        raise GeomError("mesh document must be a JSON object")
    dim = doc.get("dim")
    if dim == 2:
        return _load_2d(doc)
    if dim == 3:
        return _load_3d(doc)
    raise GeomError(f"unsupported mesh dimension {dim!r}")


def _vertex_array(doc, dim):
    try:
        verts = np.asarray(doc["vertices"], dtype=float)
    except (KeyError, ValueError) as exc:
        raise GeomError(f"invalid vertex array: {exc}") from exc
    if verts.ndim != 2 or verts.shape[1] != dim:
        raise GeomError(f"vertices must be an n x {dim} array")
    if not np.all(np.isfinite(verts)):
        raise GeomError("vertices contain non-finite coordinates")
    return verts


def _check_loop(loop, nv, ident):
    if len(loop) < 3:
        raise GeomError(f"{ident}: fewer than three vertices")
    if len(set(loop)) != len(loop):
        raise GeomError(f"{ident}: repeated vertex in loop")
    for v in loop:
        if not (isinstance(v, int) and 0 <= v < nv):
            raise GeomError(f"{ident}: vertex id {v} out of range")


def _load_2d(doc) -> Mesh:
    verts = _vertex_array(doc, 2)
    loops = doc.get("faces")
    if not loops:
        raise GeomError("2d mesh requires a non-empty 'faces' array")
    nv = len(verts)

    edge_index: dict[tuple[int, int], int] = {}
    directed: dict[tuple[int, int], list[int]] = {}
    for i, loop in enumerate(loops):
        _check_loop(loop, nv, f"element {i}")
        for a, b in zip(loop, loop[1:] + loop[:1]):
            key = (min(a, b), max(a, b))
            edge_index.setdefault(key, len(edge_index))
            directed.setdefault((a, b), []).append(i)

    for (a, b), users in directed.items():
        if len(users) > 1:
            raise GeomError(
                f"elements {users[0]} and {users[1]} traverse edge "
                f"({a},{b}) in the same direction (orientation conflict)"
            )
        opposite = directed.get((b, a), [])
        if len(opposite) > 1 or (len(opposite) + len(users)) > 2:
            raise GeomError(f"edge ({a},{b}) shared by more than two elements")

    edges = np.array(sorted(edge_index, key=edge_index.get), dtype=int)

    faces = []
    for i, loop in enumerate(loops):
        eids = []
        dirs = []
        for a, b in zip(loop, loop[1:] + loop[:1]):
            eids.append(edge_index[(min(a, b), max(a, b))])
            dirs.append(1 if a < b else -1)
        faces.append(Face(f"element {i}", verts[loop], loop, eids, dirs))

    simply = bool(doc.get("simply_connected", True))
    if simply and nv - len(edges) + len(loops) != 1:
        raise GeomError(
            "mesh declared simply connected but the Euler formula fails: "
            f"{nv} - {len(edges)} + {len(loops)} != 1"
        )
    return Mesh(2, verts, edges, faces, [], simply, doc)


def _newell_normal(pts: np.ndarray) -> np.ndarray:
    rolled = np.roll(pts, -1, axis=0)
    return 0.5 * np.sum(np.cross(pts, rolled), axis=0)


def _load_3d(doc) -> Mesh:
    verts = _vertex_array(doc, 3)
    loops = doc.get("faces")
    cells_in = doc.get("cells")
    if not loops:
        raise GeomError("3d mesh requires a non-empty 'faces' array")
    if not cells_in:
        raise GeomError("3d mesh requires a non-empty 'cells' array")
    nv = len(verts)

    edge_index: dict[tuple[int, int], int] = {}
    for i, loop in enumerate(loops):
        _check_loop(loop, nv, f"face {i}")
        for a, b in zip(loop, loop[1:] + loop[:1]):
            edge_index.setdefault((min(a, b), max(a, b)), len(edge_index))
    if "edges" in doc:
        declared = {tuple(sorted(e)) for e in doc["edges"]}
        derived = set(edge_index)
        if declared != derived:
            missing = sorted(derived - declared)
            extra = sorted(declared - derived)
            raise GeomError(
                f"edge list mismatch: missing {missing[:4]}, extra {extra[:4]}"
            )
    edges = np.array(sorted(edge_index, key=edge_index.get), dtype=int)

    faces = []
    for i, loop in enumerate(loops):
        pts = verts[loop]
        nvec = _newell_normal(pts)
        area2 = np.linalg.norm(nvec)
        if area2 <= 0:
            raise GeomError(f"face {i}: degenerate (zero area)")
        normal = nvec / area2
        c0 = pts.mean(axis=0)
        diam = np.sqrt(np.max(np.sum((pts[:, None] - pts[None, :]) ** 2, axis=2)))
        off = np.abs((pts - c0) @ normal)
        if np.max(off) > 1e-10 * diam:
            raise GeomError(
                f"face {i}: not planar (deviation {np.max(off):.3e} "
                f"exceeds tolerance {1e-10 * diam:.3e})"
            )
        # provisional frame to locate the area centroid
        p1 = pts[0] - c0
        p1 -= (p1 @ normal) * normal
        p1 /= np.linalg.norm(p1)
        p2 = np.cross(normal, p1)
        prov = FaceFrame(c0, p1, p2, normal)
        c2 = _plane_centroid(prov.to_plane(pts))
        origin = prov.to_space(c2)[0]
        # final frame: first axis towards the midpoint of the first loop edge
        mid = 0.5 * (pts[0] + pts[1])
        e1 = mid - origin
        e1 -= (e1 @ normal) * normal
        norm_e1 = np.linalg.norm(e1)
        if norm_e1 <= 1e-14 * diam:
            e1 = p1
        else:
            e1 = e1 / norm_e1
        e2 = np.cross(normal, e1)
        frame = FaceFrame(origin, e1, e2, normal)
        eids = []
        dirs = []
        for a, b in zip(loop, loop[1:] + loop[:1]):
            eids.append(edge_index[(min(a, b), max(a, b))])
            dirs.append(1 if a < b else -1)
        faces.append(Face(f"face {i}", frame.to_plane(pts), loop, eids, dirs, frame))

    cells = []
    usage: dict[int, list[tuple[int, int]]] = {}
    for c, signed in enumerate(cells_in):
        flist = []
        for s in signed:
            if not isinstance(s, int) or s == 0 or abs(s) > len(faces):
                raise GeomError(f"cell {c}: invalid signed face id {s!r}")
            flist.append((abs(s) - 1, 1 if s > 0 else -1))
        if len({f for f, _ in flist}) != len(flist):
            raise GeomError(f"cell {c}: repeated face")
        cells.append(flist)
        for fid, sign in flist:
            usage.setdefault(fid, []).append((c, sign))

    for fid, users in usage.items():
        if len(users) > 2:
            raise GeomError(f"face {fid} used by more than two cells")
        if len(users) == 2 and users[0][1] == users[1][1]:
            raise GeomError(
                f"face {fid}: cells {users[0][0]} and {users[1][0]} induce "
                "the same orientation (sign conflict)"
            )

    for c, flist in enumerate(cells):
        _check_cell_orientation(c, flist, faces)

    simply = bool(doc.get("simply_connected", True))
    return Mesh(3, verts, edges, faces, cells, simply, doc)


def _plane_centroid(pts2d: np.ndarray) -> np.ndarray:
    rolled = np.roll(pts2d, -1, axis=0)
    cross = pts2d[:, 0] * rolled[:, 1] - rolled[:, 0] * pts2d[:, 1]
    area = 0.5 * np.sum(cross)
    return np.sum((pts2d + rolled) * cross[:, None], axis=0) / (6 * area)


def _check_cell_orientation(c: int, flist, faces):
    """Each edge of a closed oriented cell boundary is traversed once in
    each direction by the outward-oriented face loops."""
    counts: dict[tuple[int, int], list[int]] = {}
    for fid, sign in flist:
        loop = faces[fid].vertex_ids
        pairs = list(zip(loop, loop[1:] + loop[:1]))
        if sign < 0:
            pairs = [(b, a) for a, b in pairs]
        for a, b in pairs:
            counts.setdefault((a, b), []).append(fid)
    bad_faces: dict[int, int] = {}
    for (a, b), users in counts.items():
        ok = len(users) == 1 and len(counts.get((b, a), [])) == 1
        if not ok:
            for fid in users:
                bad_faces[fid] = bad_faces.get(fid, 0) + 1
    if bad_faces:
        worst = max(bad_faces, key=bad_faces.get)
        raise GeomError(
            f"cell {c}: inconsistent face orientation, face {worst} "
            "does not match its neighbours"
        )


# -- shape regularity ------------------------------------------------------

@dataclass
class RegularityCheck:
    name: str
    value: float
    threshold: float
    passed: bool


@dataclass
class ElementRegularity:
    ident: str
    star_shaped: bool
    checks: list[RegularityCheck]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


@dataclass
class RegularityReport:
    kappa: float
    elements: list[ElementRegularity]

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.elements)


def check_shape_regularity(mesh: Mesh, kappa: float) -> RegularityReport:
    """Probe the mesh against the shape constants.

    The inscribed disk/ball radius is estimated by the largest disk (ball)
    centered at the element centroid, a sufficient star-shapedness probe:
    the minimum signed distance from the centroid to the boundary planes.
    This only reports; callers decide what a failed ratio means.
    """
    if not 0 <= kappa < 1:
        raise GeomError(f"kappa must lie in [0, 1), got {kappa}")
    out = []
    if mesh.dim == 2:
        for face in mesh.faces:
            dists = _centroid_edge_distances(face)
            star = bool(np.all(dists > 0))
            checks = [
                _ratio_check("disk_ratio", float(np.min(dists)) / face.diameter, kappa),
                _ratio_check(
                    "edge_ratio", float(np.min(face.edge_lengths)) / face.diameter, kappa
                ),
            ]
            out.append(ElementRegularity(face.ident, star, checks))
    else:
        for c in range(mesh.n_elements):
            h_cell = mesh.cell_diameters[c]
            cc = mesh.cell_centroids[c]
            plane_dists = []
            face_disk = []
            edge_face = []
            star = True
            for fid, sign in mesh.cells[c]:
                face = mesh.faces[fid]
                d = sign * (face.frame.origin - cc) @ face.frame.normal
                plane_dists.append(d)
                dists = _centroid_edge_distances(face)
                star = star and bool(np.all(dists > 0)) and d > 0
                face_disk.append(np.min(dists) / h_cell)
                edge_face.append(np.min(face.edge_lengths) / face.diameter)
            checks = [
                _ratio_check("ball_ratio", float(np.min(plane_dists)) / h_cell, kappa),
                _ratio_check("face_disk_ratio", float(np.min(face_disk)), kappa),
                _ratio_check("face_edge_ratio", float(np.min(edge_face)), kappa),
            ]
            out.append(ElementRegularity(f"cell {c}", star, checks))
    return RegularityReport(kappa, out)


def _ratio_check(name: str, value: float, kappa: float) -> RegularityCheck:
    return RegularityCheck(name, value, kappa, bool(value >= kappa))


def _centroid_edge_distances(face: Face) -> np.ndarray:
    """Signed distances from the face centroid to its edge lines
    (positive when the centroid lies on the interior side)."""
    rel = face.centroid - face.verts2d
    t = face.edge_tangents
    return rel[:, 0] * t[:, 1] * -1 + rel[:, 1] * t[:, 0]
