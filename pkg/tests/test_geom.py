import math

import numpy as np
import pytest

from vemspaces import geom, meshes


def test_unit_square_basics():
    mesh = meshes.bundled_mesh("square")
    assert mesh.n_vertices == 4
    assert mesh.n_edges == 4
    face = mesh.faces[0]
    assert face.area == pytest.approx(1.0)
    assert face.diameter == pytest.approx(math.sqrt(2.0))
    assert np.allclose(face.centroid, [0.5, 0.5])


def test_unit_cube_basics():
    mesh = meshes.bundled_mesh("cube")
    assert mesh.n_vertices == 8
    assert mesh.n_edges == 12
    assert mesh.n_faces == 6
    assert mesh.cell_volumes[0] == pytest.approx(1.0)
    assert np.allclose(mesh.cell_centroids[0], [0.5, 0.5, 0.5])
    assert mesh.cell_diameters[0] == pytest.approx(math.sqrt(3.0))
    # every face frame is right-handed and orthonormal
    for face in mesh.faces:
        f = face.frame
        assert abs(f.e1 @ f.e2) < 1e-14
        assert np.allclose(np.cross(f.e1, f.e2), f.normal, atol=1e-14)


def test_all_bundled_meshes_load():
    for name in meshes.bundled_names():
        mesh = meshes.bundled_mesh(name)
        assert mesh.n_elements >= 1


def test_reversed_face_is_an_orientation_error():
    doc = meshes.unit_cube()
    doc["faces"][3] = list(reversed(doc["faces"][3]))
    with pytest.raises(geom.GeomError, match="face 3"):
        geom.load_mesh(doc)


def test_same_direction_shared_edge_2d():
    # a duplicated element traverses every edge in the same direction twice
    doc = {
        "dim": 2,
        "vertices": [[0, 0], [1, 0], [1, 1], [0, 1]],
        "faces": [[0, 1, 2, 3], [0, 1, 2, 3]],
    }
    with pytest.raises(geom.GeomError, match="same direction"):
        geom.load_mesh(doc)


def test_euler_cross_check_of_declared_simple_connectivity():
    # eight unit squares forming a ring around a hole
    verts = [[float(i), float(j)] for j in range(4) for i in range(4)]
    faces = []
    for j in range(3):
        for i in range(3):
            if i == 1 and j == 1:
                continue
            a = j * 4 + i
            faces.append([a, a + 1, a + 5, a + 4])
    doc = {"dim": 2, "vertices": verts, "faces": faces}
    with pytest.raises(geom.GeomError, match="Euler"):
        geom.load_mesh(doc)
    doc["simply_connected"] = False
    mesh = geom.load_mesh(doc)
    assert not mesh.simply_connected


def test_counts_2x2():
    mesh = meshes.bundled_mesh("squares_2x2")
    assert mesh.n_vertices == 9
    assert mesh.n_edges == 12
    assert mesh.n_elements == 4


def test_prism_and_stacked_cubes():
    prism = meshes.bundled_mesh("prism")
    assert prism.n_vertices == 6
    assert prism.n_edges == 9
    assert prism.n_faces == 5
    assert prism.cell_volumes[0] == pytest.approx(0.5)

    stacked = meshes.bundled_mesh("cubes_stacked")
    assert stacked.n_faces == 11
    assert stacked.n_edges == 20
    assert np.allclose(stacked.cell_volumes, [1.0, 1.0])


def test_pentagon_area_closed_form():
    mesh = meshes.bundled_mesh("pentagon")
    assert mesh.faces[0].area == pytest.approx(2.5 * math.sin(2 * math.pi / 5))


def test_shape_regularity_square():
    mesh = meshes.bundled_mesh("square")
    rep = geom.check_shape_regularity(mesh, 0.3)
    assert rep.passed
    rep5 = geom.check_shape_regularity(mesh, 0.5)
    assert not rep5.passed
    failing = [c.name for c in rep5.elements[0].checks if not c.passed]
    assert failing == ["disk_ratio"]
    assert geom.check_shape_regularity(mesh, 0.0).passed


def test_shape_regularity_3d():
    mesh = meshes.bundled_mesh("cube")
    rep = geom.check_shape_regularity(mesh, 0.2)
    assert rep.passed
    assert rep.elements[0].star_shaped


def test_tangential_part_and_wedge():
    frame = geom.FaceFrame(
        origin=np.zeros(3),
        e1=np.array([1.0, 0.0, 0.0]),
        e2=np.array([0.0, 1.0, 0.0]),
        normal=np.array([0.0, 0.0, 1.0]),
    )
    phi = np.array([1.0, 2.0, 7.0])
    assert np.allclose(geom.tangential_part(phi, frame), [1.0, 2.0])
    assert np.allclose(geom.wedge_normal(phi, frame), [2.0, -1.0])
    assert np.allclose(geom.tangential_part(frame.normal, frame), [0.0, 0.0])
    # idempotent: applying to the in-plane reconstruction changes nothing
    tp = geom.tangential_part(phi, frame)
    back = tp[0] * frame.e1 + tp[1] * frame.e2
    assert np.allclose(geom.tangential_part(back, frame), tp)


def test_round_trip_determinism():
    for name in ("voronoi5", "cubes_stacked"):
        mesh = meshes.bundled_mesh(name)
        again = geom.load_mesh(mesh.to_document())
        assert np.array_equal(mesh.vertices, again.vertices)
        assert np.array_equal(mesh.edges, again.edges)
        for f1, f2 in zip(mesh.faces, again.faces):
            assert np.array_equal(f1.verts2d, f2.verts2d)
            assert f1.area == f2.area
            assert np.array_equal(f1.centroid, f2.centroid)
        if mesh.dim == 3:
            assert np.array_equal(mesh.cell_volumes, again.cell_volumes)
            assert np.array_equal(mesh.cell_centroids, again.cell_centroids)


def test_cell_closure_and_boundary_traversal():
    for name in ("cube", "cubes_stacked", "prism"):
        mesh = meshes.bundled_mesh(name)
        for c, flist in enumerate(mesh.cells):
            resid = np.zeros(3)
            for fid, sign in flist:
                face = mesh.faces[fid]
                resid += sign * face.area * face.frame.normal
            assert np.linalg.norm(resid) < 1e-12
    # 2d: edge tangents traverse the loop counterclockwise
    mesh = meshes.bundled_mesh("pentagon")
    face = mesh.faces[0]
    normals = face.outward_normals()
    for i in range(face.n_edges):
        assert (face.edge_midpoints[i] - face.centroid) @ normals[i] > 0


def test_edges_cross_check_3d():
    doc = meshes.unit_cube()
    doc["edges"] = [[0, 1]]  # incomplete on purpose
    with pytest.raises(geom.GeomError, match="edge list mismatch"):
        geom.load_mesh(doc)
    del doc["edges"]
    mesh = geom.load_mesh(doc)
    assert mesh.n_edges == 12
