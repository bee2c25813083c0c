import numpy as np
import pytest


def make_icosphere(radius: float, subdivisions: int) -> tuple[np.ndarray, np.ndarray]:
    """Icosahedron subdivided and projected to a sphere; test-only fixture."""
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array(
        [
            [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
            [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
            [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [tuple(v / np.linalg.norm(v)) for v in verts]
    index = {v: i for i, v in enumerate(verts)}

    def midpoint(a, b):
        m = (np.array(a) + np.array(b)) / 2.0
        m = tuple(m / np.linalg.norm(m))
        if m not in index:
            index[m] = len(verts)
            verts.append(m)
        return index[m]

    for _ in range(subdivisions):
        nxt = []
        for a, b, c in faces:
            ab = midpoint(verts[a], verts[b])
            bc = midpoint(verts[b], verts[c])
            ca = midpoint(verts[c], verts[a])
            nxt += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = nxt
    v = np.array(verts) * radius
    return v, np.array(faces, dtype=np.int64)


@pytest.fixture
def icosphere():
    return make_icosphere


def heron_area(verts: np.ndarray, tris: np.ndarray) -> float:
    """Mesh area by Heron's formula; independent of the package's cross-product path."""
    a = np.linalg.norm(verts[tris[:, 1]] - verts[tris[:, 0]], axis=1)
    b = np.linalg.norm(verts[tris[:, 2]] - verts[tris[:, 1]], axis=1)
    c = np.linalg.norm(verts[tris[:, 0]] - verts[tris[:, 2]], axis=1)
    s = (a + b + c) / 2.0
    return float(np.sum(np.sqrt(np.maximum(s * (s - a) * (s - b) * (s - c), 0.0))))
