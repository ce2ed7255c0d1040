"""Parametric mesh generators for built-in display shapes and tests."""

from __future__ import annotations

import numpy as np

from .core import TriMesh, weld


def box(size=(10.0, 10.0, 10.0), center=(0.0, 0.0, 0.0)) -> TriMesh:
    if np.isscalar(size):
        size = (size, size, size)
    sx, sy, sz = (float(s) / 2.0 for s in size)
    cx, cy, cz = center
    v = np.array(
        [
            [-sx, -sy, -sz], [sx, -sy, -sz], [sx, sy, -sz], [-sx, sy, -sz],
            [-sx, -sy, sz], [sx, -sy, sz], [sx, sy, sz], [-sx, sy, sz],
        ]
    ) + np.array([cx, cy, cz])
    f = np.array(
        [
            [0, 2, 1], [0, 3, 2],  # bottom
            [4, 5, 6], [4, 6, 7],  # top
            [0, 1, 5], [0, 5, 4],  # front
            [1, 2, 6], [1, 6, 5],  # right
            [2, 3, 7], [2, 7, 6],  # back
            [3, 0, 4], [3, 4, 7],  # left
        ],
        dtype=np.int64,
    )
    return TriMesh(v, f)


def icosphere(radius: float = 1.0, subdivisions: int = 3, center=(0.0, 0.0, 0.0)) -> TriMesh:
    t = (1.0 + np.sqrt(5.0)) / 2.0
    v = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    v /= np.linalg.norm(v, axis=1)[:, None]
    f = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    for _ in range(subdivisions):
        v, f = _subdivide(v, f)
        v /= np.linalg.norm(v, axis=1)[:, None]
    return TriMesh(v * float(radius) + np.asarray(center, dtype=np.float64), f)


def _subdivide(v: np.ndarray, f: np.ndarray):
    """One 1-to-4 loop split with shared midpoints."""
    edges = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]]])
    und = np.sort(edges, axis=1)
    uniq, inverse = np.unique(und, axis=0, return_inverse=True)
    mids = 0.5 * (v[uniq[:, 0]] + v[uniq[:, 1]])
    mid_idx = inverse.reshape(3, len(f)).T + len(v)
    a, b, c = f[:, 0], f[:, 1], f[:, 2]
    ab, bc, ca = mid_idx[:, 0], mid_idx[:, 1], mid_idx[:, 2]
    new_f = np.concatenate(
        [
            np.stack([a, ab, ca], axis=1),
            np.stack([b, bc, ab], axis=1),
            np.stack([c, ca, bc], axis=1),
            np.stack([ab, bc, ca], axis=1),
        ]
    )
    return np.vstack([v, mids]), new_f


def cylinder(radius: float, height: float, segments: int = 64, center=(0.0, 0.0, 0.0)) -> TriMesh:
    return cone(radius, radius, height, segments=segments, center=center)


def cone(
    radius_bottom: float,
    radius_top: float,
    height: float,
    segments: int = 64,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    """Closed frustum along +z; either radius may be 0 for a true apex."""
    cx, cy, cz = center
    ang = np.linspace(0.0, 2.0 * np.pi, segments, endpoint=False)
    cosa, sina = np.cos(ang), np.sin(ang)
    z0, z1 = cz - height / 2.0, cz + height / 2.0
    verts, faces = [], []

    def ring(r, z):
        start = sum(len(b) for b in verts)
        verts.append(np.stack([cx + r * cosa, cy + r * sina, np.full(segments, z)], axis=1))
        return start

    def apex(x, y, z):
        start = sum(len(b) for b in verts)
        verts.append(np.array([[x, y, z]]))
        return start

    bot = ring(radius_bottom, z0) if radius_bottom > 0 else apex(cx, cy, z0)
    top = ring(radius_top, z1) if radius_top > 0 else apex(cx, cy, z1)
    nxt = lambda i: (i + 1) % segments

    if radius_bottom > 0 and radius_top > 0:
        for i in range(segments):
            faces.append([bot + i, bot + nxt(i), top + nxt(i)])
            faces.append([bot + i, top + nxt(i), top + i])
    elif radius_bottom > 0:  # apex on top
        for i in range(segments):
            faces.append([bot + i, bot + nxt(i), top])
    elif radius_top > 0:  # apex on bottom
        for i in range(segments):
            faces.append([bot, top + nxt(i), top + i])
    else:
        raise ValueError("cone needs at least one positive radius")

    if radius_bottom > 0:
        c0 = apex(cx, cy, z0)
        for i in range(segments):
            faces.append([c0, bot + nxt(i), bot + i])
    if radius_top > 0:
        c1 = apex(cx, cy, z1)
        for i in range(segments):
            faces.append([c1, top + i, top + nxt(i)])

    return TriMesh(np.vstack(verts), np.array(faces, dtype=np.int64))


def torus(
    radius_major: float,
    radius_minor: float,
    segments_major: int = 48,
    segments_minor: int = 24,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    u = np.linspace(0, 2 * np.pi, segments_major, endpoint=False)
    w = np.linspace(0, 2 * np.pi, segments_minor, endpoint=False)
    uu, ww = np.meshgrid(u, w, indexing="ij")
    r = radius_major + radius_minor * np.cos(ww)
    v = np.stack(
        [r * np.cos(uu), r * np.sin(uu), radius_minor * np.sin(ww)], axis=-1
    ).reshape(-1, 3) + np.asarray(center, dtype=np.float64)
    faces = []
    for i in range(segments_major):
        for j in range(segments_minor):
            a = i * segments_minor + j
            b = ((i + 1) % segments_major) * segments_minor + j
            a1 = i * segments_minor + (j + 1) % segments_minor
            b1 = ((i + 1) % segments_major) * segments_minor + (j + 1) % segments_minor
            faces.append([a, b, b1])
            faces.append([a, b1, a1])
    return TriMesh(v, np.array(faces, dtype=np.int64))


def grid_sheet(width: float, depth: float, nx: int = 10, ny: int = 10, z: float = 0.0) -> TriMesh:
    """Open rectangular sheet in the z plane (not watertight by design)."""
    xs = np.linspace(-width / 2.0, width / 2.0, nx + 1)
    ys = np.linspace(-depth / 2.0, depth / 2.0, ny + 1)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    v = np.stack([xx, yy, np.full_like(xx, z)], axis=-1).reshape(-1, 3)
    faces = []
    for i in range(nx):
        for j in range(ny):
            a = i * (ny + 1) + j
            b = (i + 1) * (ny + 1) + j
            faces.append([a, b, b + 1])
            faces.append([a, b + 1, a + 1])
    return TriMesh(v, np.array(faces, dtype=np.int64))


def bumpy_sphere(
    radius: float = 25.0,
    amplitude: float = 0.15,
    subdivisions: int = 4,
    seed: int = 0,
    center=(0.0, 0.0, 0.0),
) -> TriMesh:
    """Organic genus-0 blob: an icosphere displaced by smooth low-order noise.

    Stands in for scanned figurines in tests; same vertex budget and curvature
    variety without shipping binary assets.
    """
    base = icosphere(1.0, subdivisions)
    rng = np.random.default_rng(seed)
    v = base.vertices
    r = np.ones(len(v))
    for _ in range(6):
        k = rng.normal(size=3)
        k /= np.linalg.norm(k)
        freq = rng.uniform(1.0, 3.0)
        phase = rng.uniform(0, 2 * np.pi)
        r += (amplitude / 6.0 * 6.0 / 2.0) * np.sin(freq * np.pi * (v @ k) + phase)
    r = np.clip(r, 1.0 - amplitude, 1.0 + amplitude)
    out = v * (r * radius)[:, None] + np.asarray(center, dtype=np.float64)
    return TriMesh(out, base.faces)


def cleaned(mesh: TriMesh) -> TriMesh:
    return weld(mesh.vertices, mesh.faces)
