"""Core indexed triangle mesh: derived geometry, sampling, topology."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


class MeshError(ValueError):
    """Raised for structurally invalid mesh data or degenerate inputs."""


class Mesh:
    """Immutable indexed triangle mesh with derived per-face/per-vertex data.

    Attributes:
        vertices: (V, 3) float64 positions in model units.
        faces: (F, 3) int64 vertex indices, 0-based.
        face_normals: (F, 3) unit normals; zero for degenerate faces.
        face_areas: (F,) nonnegative triangle areas.
        vertex_normals: (V, 3) area-weighted unit normals; zero where the
            incident face star has zero total area (see ``degenerate_vertices``).
    """

    __slots__ = (
        "vertices",
        "faces",
        "face_normals",
        "face_areas",
        "vertex_normals",
        "degenerate_vertices",
    )

    def __init__(self, vertices: np.ndarray, faces: np.ndarray):
        v = np.ascontiguousarray(np.asarray(vertices, dtype=np.float64).reshape(-1, 3))
        f = np.ascontiguousarray(np.asarray(faces, dtype=np.int64).reshape(-1, 3))
        if v.shape[0] == 0:
            raise MeshError("mesh has no vertices")
        if f.size and (f.min() < 0 or f.max() >= v.shape[0]):
            raise MeshError(
                f"face index out of range (vertex count {v.shape[0]}, "
                f"max index {int(f.max()) if f.size else -1})"
            )
        self.vertices = v
        self.faces = f
        tri = v[f] if f.size else np.zeros((0, 3, 3))
        cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
        norm = np.linalg.norm(cross, axis=1)
        self.face_areas = 0.5 * norm
        normals = np.zeros_like(cross)
        ok = norm > 0.0
        normals[ok] = cross[ok] / norm[ok, None]
        self.face_normals = normals

        # Area-weighted vertex normals; the unnormalized cross product already
        # carries the 2*area weight.
        vn = np.zeros_like(v)
        if f.size:
            for k in range(3):
                np.add.at(vn, f[:, k], cross)
        vn_len = np.linalg.norm(vn, axis=1)
        defined = vn_len > 1e-300
        vn[defined] = vn[defined] / vn_len[defined, None]
        vn[~defined] = 0.0
        self.vertex_normals = vn
        self.degenerate_vertices = ~defined

        for arr in (self.vertices, self.faces, self.face_normals,
                    self.face_areas, self.vertex_normals, self.degenerate_vertices):
            arr.setflags(write=False)

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_faces(self) -> int:
        return self.faces.shape[0]

    def aabb(self) -> tuple[np.ndarray, np.ndarray]:
        """Axis-aligned bounding box as (min, max) corners."""
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def centroid(self) -> np.ndarray:
        """Mean of the vertex positions."""
        return self.vertices.mean(axis=0)

    def total_area(self) -> float:
        return float(self.face_areas.sum())

    def signed_volume(self) -> float:
        """Signed enclosed volume via the divergence theorem.

        Positive for a closed, outward-oriented surface.
        """
        tri = self.vertices[self.faces]
        return float(np.einsum("ij,ij->i", tri[:, 0],
                               np.cross(tri[:, 1], tri[:, 2])).sum() / 6.0)

    def translated(self, offset: np.ndarray) -> "Mesh":
        return Mesh(self.vertices + np.asarray(offset, dtype=np.float64), self.faces)

    def transformed(self, rotation: np.ndarray | None = None,
                    translation: np.ndarray | None = None) -> "Mesh":
        """Apply ``v -> rotation @ v + translation`` to every vertex."""
        v = self.vertices
        if rotation is not None:
            v = v @ np.asarray(rotation, dtype=np.float64).T
        if translation is not None:
            v = v + np.asarray(translation, dtype=np.float64)
        return Mesh(v, self.faces)


@dataclass(frozen=True)
class SurfacePoint:
    """One sampled point on a mesh surface."""

    position: np.ndarray
    normal: np.ndarray
    face_index: int


class SurfaceSamples:
    """Batch of surface samples with array access and per-item views."""

    def __init__(self, position: np.ndarray, normal: np.ndarray, face_index: np.ndarray):
        self.position = position
        self.normal = normal
        self.face_index = face_index

    def __len__(self) -> int:
        return self.position.shape[0]

    def __getitem__(self, i: int) -> SurfacePoint:
        return SurfacePoint(self.position[i], self.normal[i], int(self.face_index[i]))


def surface_sample(mesh: Mesh, count: int, seed: int = 0) -> SurfaceSamples:
    """Sample points uniformly over the mesh surface (area-weighted faces).

    Args:
        mesh: Source mesh; must have positive total area.
        count: Number of samples, >= 0.
        seed: RNG seed; identical seeds give identical samples.

    Returns:
        SurfaceSamples with positions, face normals, and face indices.

    Raises:
        MeshError: If the mesh has zero total surface area.
    """
    if count < 0:
        raise ValueError("count must be >= 0")
    total = mesh.total_area()
    if total <= 0.0:
        raise MeshError("mesh has zero total surface area")
    rng = np.random.default_rng(seed)
    if count == 0:
        empty = np.zeros((0, 3))
        return SurfaceSamples(empty, empty.copy(), np.zeros(0, dtype=np.int64))
    prob = mesh.face_areas / total
    face_idx = rng.choice(mesh.n_faces, size=count, p=prob)
    u = rng.random(count)
    v = rng.random(count)
    flip = u + v > 1.0
    u[flip] = 1.0 - u[flip]
    v[flip] = 1.0 - v[flip]
    tri = mesh.vertices[mesh.faces[face_idx]]
    pos = tri[:, 0] + u[:, None] * (tri[:, 1] - tri[:, 0]) + v[:, None] * (tri[:, 2] - tri[:, 0])
    return SurfaceSamples(pos, mesh.face_normals[face_idx].copy(), face_idx)


def normalize_model(mesh: Mesh, target_size: float = 30.0) -> Mesh:
    """Center the mesh at the origin and scale its largest AABB extent.

    Args:
        mesh: Input mesh.
        target_size: Desired largest axis-aligned extent.

    Returns:
        New mesh with vertex centroid at (0, 0, 0) and max extent ``target_size``.

    Raises:
        MeshError: If the mesh has zero extent on every axis.
    """
    lo, hi = mesh.aabb()
    extent = float((hi - lo).max())
    if extent <= 0.0:
        raise MeshError("degenerate mesh: zero extent on every axis")
    scale = target_size / extent
    center = mesh.centroid()
    return Mesh((mesh.vertices - center) * scale, mesh.faces)


class UnionFind:
    """Array union-find with path halving."""

    def __init__(self, n: int):
        self.parent = np.arange(n, dtype=np.int64)

    def find(self, i: int) -> int:
        p = self.parent
        while p[i] != i:
            p[i] = p[p[i]]
            i = p[i]
        return int(i)

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def labels(self) -> np.ndarray:
        out = np.empty_like(self.parent)
        for i in range(len(self.parent)):
            out[i] = self.find(i)
        return out


def weld_map(vertices: np.ndarray, eps: float) -> np.ndarray:
    """Map each vertex index to a representative, merging points within eps.

    Merging is transitive (union-find over all pairs closer than eps).
    """
    n = vertices.shape[0]
    if n == 0 or eps < 0:
        return np.arange(n, dtype=np.int64)
    uf = UnionFind(n)
    if eps > 0:
        tree = cKDTree(vertices)
        for a, b in tree.query_pairs(eps, output_type="ndarray"):
            uf.union(int(a), int(b))
    return uf.labels()


def connected_components(mesh: Mesh, weld_eps: float = 1e-6) -> tuple[int, np.ndarray]:
    """Count face-connected components after welding nearby vertices.

    Vertices within ``weld_eps`` are merged; faces sharing any merged vertex
    are connected. Returns (component count, per-face labels in [0, count)).
    """
    if mesh.n_faces == 0:
        return 0, np.zeros(0, dtype=np.int64)
    vmap = weld_map(mesh.vertices, weld_eps)
    fuf = UnionFind(mesh.n_faces)
    welded = vmap[mesh.faces]  # (F, 3)
    flat_v = welded.ravel()
    flat_f = np.repeat(np.arange(mesh.n_faces, dtype=np.int64), 3)
    order = np.argsort(flat_v, kind="stable")
    sv, sf = flat_v[order], flat_f[order]
    same = sv[1:] == sv[:-1]
    for i in np.nonzero(same)[0]:
        fuf.union(int(sf[i]), int(sf[i + 1]))
    roots = fuf.labels()
    _, labels = np.unique(roots, return_inverse=True)
    return int(labels.max()) + 1, labels


def edge_counts(faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Undirected edges and their face-incidence counts."""
    if faces.size == 0:
        return np.zeros((0, 2), dtype=np.int64), np.zeros(0, dtype=np.int64)
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e = np.sort(e, axis=1)
    # Single-integer edge keys make np.unique much cheaper than axis=0.
    n = int(e.max()) + 1
    keys = e[:, 0] * n + e[:, 1]
    uniq_keys, counts = np.unique(keys, return_counts=True)
    uniq = np.column_stack([uniq_keys // n, uniq_keys % n])
    return uniq, counts


def boundary_edge_count(mesh: Mesh) -> int:
    """Number of edges incident to exactly one face."""
    _, counts = edge_counts(mesh.faces)
    return int((counts == 1).sum())


def is_watertight(mesh: Mesh) -> bool:
    """True when no edge is incident to an odd number of faces."""
    _, counts = edge_counts(mesh.faces)
    return bool(counts.size == 0 or np.all(counts % 2 == 0))
