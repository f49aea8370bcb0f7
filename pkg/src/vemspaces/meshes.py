"""Bundled sample meshes used by the self test, the docs, and the CLI.

Every builder returns a plain mesh document (see :mod:`vemspaces.geom` for
the schema); ``bundled()`` lists them all by name.
"""

from __future__ import annotations

import math

from . import geom


def unit_square() -> dict:
    return {
        "dim": 2,
        "vertices": [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
        "faces": [[0, 1, 2, 3]],
    }


def squares_2x2() -> dict:
    verts = [[float(i), float(j)] for j in range(3) for i in range(3)]
    faces = []
    for j in range(2):
        for i in range(2):
            a = j * 3 + i
            faces.append([a, a + 1, a + 4, a + 3])
    return {"dim": 2, "vertices": verts, "faces": faces}


def pentagon() -> dict:
    verts = []
    for i in range(5):
        ang = math.pi / 2 + 2 * math.pi * i / 5
        verts.append([math.cos(ang), math.sin(ang)])
    return {"dim": 2, "vertices": verts, "faces": [[0, 1, 2, 3, 4]]}


def voronoi5() -> dict:
    """Five polygonal cells tiling the unit square: a central quad
    surrounded by four pentagons, in the style of a centroidal Voronoi
    partition."""
    verts = [
        [0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0],      # corners
        [0.5, 0.0], [1.0, 0.5], [0.5, 1.0], [0.0, 0.5],      # edge midpoints
        [0.5, 0.2], [0.8, 0.5], [0.5, 0.8], [0.2, 0.5],      # inner quad
    ]
    faces = [
        [8, 9, 10, 11],
        [0, 4, 8, 11, 7],
        [4, 1, 5, 9, 8],
        [5, 2, 6, 10, 9],
        [6, 3, 7, 11, 10],
    ]
    return {"dim": 2, "vertices": verts, "faces": faces}


def unit_cube() -> dict:
    verts = [
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 1.0], [0.0, 1.0, 1.0],
    ]
    faces = [
        [0, 3, 2, 1],  # z = 0, outward -z
        [4, 5, 6, 7],  # z = 1, outward +z
        [0, 4, 7, 3],  # x = 0, outward -x
        [1, 2, 6, 5],  # x = 1, outward +x
        [0, 1, 5, 4],  # y = 0, outward -y
        [3, 7, 6, 2],  # y = 1, outward +y
    ]
    return {"dim": 3, "vertices": verts, "faces": faces, "cells": [[1, 2, 3, 4, 5, 6]]}


def cubes_stacked() -> dict:
    """Two unit cubes sharing the z = 1 face."""
    verts = []
    for z in (0.0, 1.0, 2.0):
        verts.extend([[0.0, 0.0, z], [1.0, 0.0, z], [1.0, 1.0, z], [0.0, 1.0, z]])
    faces = [
        [0, 3, 2, 1],      # 0: z = 0, -z
        [4, 5, 6, 7],      # 1: z = 1 interface, +z (outward for lower cube)
        [8, 9, 10, 11],    # 2: z = 2, +z
        [0, 4, 7, 3],      # 3: lower x = 0
        [1, 2, 6, 5],      # 4: lower x = 1
        [0, 1, 5, 4],      # 5: lower y = 0
        [3, 7, 6, 2],      # 6: lower y = 1
        [4, 8, 11, 7],     # 7: upper x = 0
        [5, 6, 10, 9],     # 8: upper x = 1
        [4, 5, 9, 8],      # 9: upper y = 0
        [7, 11, 10, 6],    # 10: upper y = 1
    ]
    cells = [
        [1, 2, 4, 5, 6, 7],
        [-2, 3, 8, 9, 10, 11],
    ]
    return {"dim": 3, "vertices": verts, "faces": faces, "cells": cells}


def prism() -> dict:
    """Right prism over the unit right triangle."""
    verts = [
        [0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0],
    ]
    faces = [
        [0, 2, 1],        # z = 0, -z
        [3, 4, 5],        # z = 1, +z
        [0, 1, 4, 3],     # y = 0, -y
        [1, 2, 5, 4],     # hypotenuse side
        [2, 0, 3, 5],     # x = 0, -x
    ]
    return {"dim": 3, "vertices": verts, "faces": faces, "cells": [[1, 2, 3, 4, 5]]}


_BUILDERS = {
    "square": unit_square,
    "squares_2x2": squares_2x2,
    "pentagon": pentagon,
    "voronoi5": voronoi5,
    "cube": unit_cube,
    "cubes_stacked": cubes_stacked,
    "prism": prism,
}


def bundled() -> dict[str, dict]:
    """All bundled mesh documents, keyed by name."""
    return {name: build() for name, build in _BUILDERS.items()}


def bundled_names() -> list[str]:
    return list(_BUILDERS)


def bundled_mesh(name: str) -> geom.Mesh:
    try:
        doc = _BUILDERS[name]()
    except KeyError:
        raise KeyError(
            f"unknown bundled mesh {name!r}; available: {', '.join(_BUILDERS)}"
        ) from None
    return geom.load_mesh(doc)
