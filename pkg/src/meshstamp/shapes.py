"""Procedural watertight primitives used by demos and tests."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh, weld_map


def _weld_exact(vertices: np.ndarray, faces: np.ndarray, eps: float = 1e-9) -> Mesh:
    vmap = weld_map(vertices, eps)
    uniq, inverse = np.unique(vmap, return_inverse=True)
    new_v = vertices[uniq]
    new_f = inverse[faces]
    keep = (new_f[:, 0] != new_f[:, 1]) & (new_f[:, 1] != new_f[:, 2]) & (new_f[:, 0] != new_f[:, 2])
    return Mesh(new_v, new_f[keep])


def make_box(lo, hi) -> Mesh:
    """Axis-aligned box between corners ``lo`` and ``hi``, outward-oriented."""
    x0, y0, z0 = np.asarray(lo, dtype=np.float64)
    x1, y1, z1 = np.asarray(hi, dtype=np.float64)
    v = np.array([
        [x0, y0, z0], [x1, y0, z0], [x1, y1, z0], [x0, y1, z0],
        [x0, y0, z1], [x1, y0, z1], [x1, y1, z1], [x0, y1, z1],
    ])
    f = np.array([
        [0, 2, 1], [0, 3, 2],  # bottom (z0), normal -z
        [4, 5, 6], [4, 6, 7],  # top (z1), normal +z
        [0, 1, 5], [0, 5, 4],  # y0 side
        [2, 3, 7], [2, 7, 6],  # y1 side
        [1, 2, 6], [1, 6, 5],  # x1 side
        [3, 0, 4], [3, 4, 7],  # x0 side
    ])
    return Mesh(v, f)


def make_cube(size: float = 1.0, center=(0.0, 0.0, 0.0)) -> Mesh:
    c = np.asarray(center, dtype=np.float64)
    h = size / 2.0
    return make_box(c - h, c + h)


def make_grid_plane(size: float = 30.0, n: int = 20, z: float = 0.0) -> Mesh:
    """Open square patch in the z-plane, subdivided n x n, normals +z."""
    s = size / 2.0
    xs = np.linspace(-s, s, n + 1)
    gx, gy = np.meshgrid(xs, xs, indexing="ij")
    v = np.column_stack([gx.ravel(), gy.ravel(), np.full(gx.size, z)])
    faces = []
    for i in range(n):
        for j in range(n):
            a = i * (n + 1) + j
            b = a + (n + 1)
            faces.append([a, b, b + 1])
            faces.append([a, b + 1, a + 1])
    return Mesh(v, np.asarray(faces))


def make_slab(size: float = 30.0, thickness: float = 2.0, n: int = 24) -> Mesh:
    """Watertight flat slab with subdivided faces, centered at the origin."""
    s, t = size / 2.0, thickness / 2.0
    parts_v, parts_f = [], []

    def add_grid(origin, du, dv, nu, nv):
        base = sum(p.shape[0] for p in parts_v)
        us = np.linspace(0.0, 1.0, nu + 1)
        vs = np.linspace(0.0, 1.0, nv + 1)
        gu, gv = np.meshgrid(us, vs, indexing="ij")
        pts = (np.asarray(origin)[None, :]
               + gu.ravel()[:, None] * np.asarray(du)[None, :]
               + gv.ravel()[:, None] * np.asarray(dv)[None, :])
        parts_v.append(pts)
        fl = []
        for i in range(nu):
            for j in range(nv):
                a = base + i * (nv + 1) + j
                b = a + (nv + 1)
                fl.append([a, b, b + 1])
                fl.append([a, b + 1, a + 1])
        parts_f.append(np.asarray(fl))

    nz = max(1, int(round(n * thickness / size)))
    # Each face parameterized so that du x dv points outward.
    add_grid((-s, -s, t), (2 * s, 0, 0), (0, 2 * s, 0), n, n)        # top +z
    add_grid((-s, -s, -t), (0, 2 * s, 0), (2 * s, 0, 0), n, n)      # bottom -z
    add_grid((-s, -s, -t), (2 * s, 0, 0), (0, 0, 2 * t), n, nz)     # -y
    add_grid((s, s, -t), (-2 * s, 0, 0), (0, 0, 2 * t), n, nz)      # +y
    add_grid((s, -s, -t), (0, 2 * s, 0), (0, 0, 2 * t), n, nz)      # +x
    add_grid((-s, s, -t), (0, -2 * s, 0), (0, 0, 2 * t), n, nz)     # -x
    return _weld_exact(np.concatenate(parts_v), np.concatenate(parts_f))


def make_uv_sphere(radius: float = 1.0, rings: int = 24, segments: int = 32) -> Mesh:
    """Watertight UV sphere centered at the origin.

    Vertex count is (rings - 1) * segments + 2.
    """
    verts = [np.array([0.0, 0.0, radius])]
    for i in range(1, rings):
        theta = np.pi * i / rings
        z = radius * np.cos(theta)
        r = radius * np.sin(theta)
        phi = 2.0 * np.pi * np.arange(segments) / segments
        ring = np.column_stack([r * np.cos(phi), r * np.sin(phi), np.full(segments, z)])
        verts.append(ring)
    verts.append(np.array([0.0, 0.0, -radius]))
    v = np.vstack([verts[0][None, :], *verts[1:-1], verts[-1][None, :]])

    faces = []
    top, bottom = 0, v.shape[0] - 1

    def ring_start(i):
        return 1 + (i - 1) * segments

    for j in range(segments):
        jn = (j + 1) % segments
        faces.append([top, ring_start(1) + j, ring_start(1) + jn])
    for i in range(1, rings - 1):
        a, b = ring_start(i), ring_start(i + 1)
        for j in range(segments):
            jn = (j + 1) % segments
            faces.append([a + j, b + j, b + jn])
            faces.append([a + j, b + jn, a + jn])
    last = ring_start(rings - 1)
    for j in range(segments):
        jn = (j + 1) % segments
        faces.append([bottom, last + jn, last + j])
    return Mesh(v, np.asarray(faces))


def make_torus(major_radius: float = 10.0, minor_radius: float = 4.0,
               n_major: int = 48, n_minor: int = 24) -> Mesh:
    """Watertight torus around the z axis, centered at the origin."""
    i = np.arange(n_major)
    j = np.arange(n_minor)
    u = 2.0 * np.pi * i / n_major
    w = 2.0 * np.pi * j / n_minor
    gu, gw = np.meshgrid(u, w, indexing="ij")
    r = major_radius + minor_radius * np.cos(gw)
    v = np.column_stack([
        (r * np.cos(gu)).ravel(),
        (r * np.sin(gu)).ravel(),
        (minor_radius * np.sin(gw)).ravel(),
    ])
    faces = []
    for a in range(n_major):
        an = (a + 1) % n_major
        for b in range(n_minor):
            bn = (b + 1) % n_minor
            p = a * n_minor + b
            q = an * n_minor + b
            pn = a * n_minor + bn
            qn = an * n_minor + bn
            faces.append([p, q, qn])
            faces.append([p, qn, pn])
    return Mesh(v, np.asarray(faces))
