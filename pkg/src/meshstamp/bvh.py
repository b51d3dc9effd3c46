"""Bounding volume hierarchy for closest-point and ray queries.

The tree is built in numpy (median split on the longest centroid axis,
leaves hold at most ``leaf_size`` faces); traversal kernels are numba-compiled
and operate on flat arrays. All queries are deterministic and safe to call
concurrently because the index is immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .mesh import Mesh

_STACK_CAP = 128  # supports tree depths far beyond any mesh we index


@njit(cache=True, fastmath=False)
def _tri_closest_point(a, b, c, p):
    """Closest point on triangle abc to p (Ericson's region walk)."""
    ab0, ab1, ab2 = b[0] - a[0], b[1] - a[1], b[2] - a[2]
    ac0, ac1, ac2 = c[0] - a[0], c[1] - a[1], c[2] - a[2]
    ap0, ap1, ap2 = p[0] - a[0], p[1] - a[1], p[2] - a[2]
    d1 = ab0 * ap0 + ab1 * ap1 + ab2 * ap2
    d2 = ac0 * ap0 + ac1 * ap1 + ac2 * ap2
    if d1 <= 0.0 and d2 <= 0.0:
        return a[0], a[1], a[2]
    bp0, bp1, bp2 = p[0] - b[0], p[1] - b[1], p[2] - b[2]
    d3 = ab0 * bp0 + ab1 * bp1 + ab2 * bp2
    d4 = ac0 * bp0 + ac1 * bp1 + ac2 * bp2
    if d3 >= 0.0 and d4 <= d3:
        return b[0], b[1], b[2]
    vc = d1 * d4 - d3 * d2
    if vc <= 0.0 and d1 >= 0.0 and d3 <= 0.0:
        w = d1 / (d1 - d3)
        return a[0] + w * ab0, a[1] + w * ab1, a[2] + w * ab2
    cp0, cp1, cp2 = p[0] - c[0], p[1] - c[1], p[2] - c[2]
    d5 = ab0 * cp0 + ab1 * cp1 + ab2 * cp2
    d6 = ac0 * cp0 + ac1 * cp1 + ac2 * cp2
    if d6 >= 0.0 and d5 <= d6:
        return c[0], c[1], c[2]
    vb = d5 * d2 - d1 * d6
    if vb <= 0.0 and d2 >= 0.0 and d6 <= 0.0:
        w = d2 / (d2 - d6)
        return a[0] + w * ac0, a[1] + w * ac1, a[2] + w * ac2
    va = d3 * d6 - d5 * d4
    if va <= 0.0 and (d4 - d3) >= 0.0 and (d5 - d6) >= 0.0:
        w = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        return (b[0] + w * (c[0] - b[0]), b[1] + w * (c[1] - b[1]),
                b[2] + w * (c[2] - b[2]))
    denom = 1.0 / (va + vb + vc)
    v = vb * denom
    w = vc * denom
    return (a[0] + ab0 * v + ac0 * w, a[1] + ab1 * v + ac1 * w,
            a[2] + ab2 * v + ac2 * w)


@njit(cache=True)
def _aabb_dist2(lo, hi, p):
    d2 = 0.0
    for k in range(3):
        if p[k] < lo[k]:
            d = lo[k] - p[k]
            d2 += d * d
        elif p[k] > hi[k]:
            d = p[k] - hi[k]
            d2 += d * d
    return d2


@njit(cache=True)
def _closest_batch(node_min, node_max, node_left, node_right, node_start,
                   node_count, prim_face, tv0, tv1, tv2, queries,
                   out_d2, out_pt, out_face):
    stack = np.empty(_STACK_CAP, dtype=np.int64)
    for qi in range(queries.shape[0]):
        q = queries[qi]
        best = np.inf
        bx = by = bz = 0.0
        bface = -1
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            ni = stack[sp]
            if _aabb_dist2(node_min[ni], node_max[ni], q) >= best:
                continue
            if node_left[ni] < 0:
                s = node_start[ni]
                for t in range(s, s + node_count[ni]):
                    cx, cy, cz = _tri_closest_point(tv0[t], tv1[t], tv2[t], q)
                    dx, dy, dz = q[0] - cx, q[1] - cy, q[2] - cz
                    d2 = dx * dx + dy * dy + dz * dz
                    if d2 < best:
                        best = d2
                        bx, by, bz = cx, cy, cz
                        bface = prim_face[t]
            else:
                li = node_left[ni]
                ri = node_right[ni]
                dl = _aabb_dist2(node_min[li], node_max[li], q)
                dr = _aabb_dist2(node_min[ri], node_max[ri], q)
                # Push the farther child first so the nearer is popped first.
                if dl <= dr:
                    if dr < best:
                        stack[sp] = ri
                        sp += 1
                    if dl < best:
                        stack[sp] = li
                        sp += 1
                else:
                    if dl < best:
                        stack[sp] = li
                        sp += 1
                    if dr < best:
                        stack[sp] = ri
                        sp += 1
        out_d2[qi] = best
        out_pt[qi, 0] = bx
        out_pt[qi, 1] = by
        out_pt[qi, 2] = bz
        out_face[qi] = bface


@njit(cache=True)
def _aabb_hits_ray(lo, hi, o, d, t_lo, t_hi):
    tmin = t_lo
    tmax = t_hi
    for k in range(3):
        dk = d[k]
        ok = o[k]
        if -1e-300 < dk < 1e-300:
            if ok < lo[k] or ok > hi[k]:
                return False
        else:
            inv = 1.0 / dk
            t1 = (lo[k] - ok) * inv
            t2 = (hi[k] - ok) * inv
            if t1 > t2:
                t1, t2 = t2, t1
            if t1 > tmin:
                tmin = t1
            if t2 < tmax:
                tmax = t2
            if tmin > tmax:
                return False
    return True


@njit(cache=True)
def _tri_ray(a, b, c, o, d, t_min):
    """Moller-Trumbore, two-sided. Returns hit t or -1.0."""
    e10 = b[0] - a[0]
    e11 = b[1] - a[1]
    e12 = b[2] - a[2]
    e20 = c[0] - a[0]
    e21 = c[1] - a[1]
    e22 = c[2] - a[2]
    p0 = d[1] * e22 - d[2] * e21
    p1 = d[2] * e20 - d[0] * e22
    p2 = d[0] * e21 - d[1] * e20
    det = e10 * p0 + e11 * p1 + e12 * p2
    if -1e-13 < det < 1e-13:
        return -1.0
    inv = 1.0 / det
    s0 = o[0] - a[0]
    s1 = o[1] - a[1]
    s2 = o[2] - a[2]
    u = (s0 * p0 + s1 * p1 + s2 * p2) * inv
    if u < -1e-10 or u > 1.0 + 1e-10:
        return -1.0
    q0 = s1 * e12 - s2 * e11
    q1 = s2 * e10 - s0 * e12
    q2 = s0 * e11 - s1 * e10
    v = (d[0] * q0 + d[1] * q1 + d[2] * q2) * inv
    if v < -1e-10 or u + v > 1.0 + 1e-10:
        return -1.0
    t = (e20 * q0 + e21 * q1 + e22 * q2) * inv
    if t <= t_min:
        return -1.0
    return t


@njit(cache=True)
def _ray_nearest_batch(node_min, node_max, node_left, node_right, node_start,
                       node_count, prim_face, tv0, tv1, tv2,
                       origins, dirs, t_min, out_t, out_face):
    stack = np.empty(_STACK_CAP, dtype=np.int64)
    for qi in range(origins.shape[0]):
        o = origins[qi]
        d = dirs[qi]
        best = np.inf
        bface = -1
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            ni = stack[sp]
            if not _aabb_hits_ray(node_min[ni], node_max[ni], o, d, t_min, best):
                continue
            if node_left[ni] < 0:
                s = node_start[ni]
                for t in range(s, s + node_count[ni]):
                    th = _tri_ray(tv0[t], tv1[t], tv2[t], o, d, t_min)
                    if th > 0.0 and th < best:
                        best = th
                        bface = prim_face[t]
            else:
                stack[sp] = node_left[ni]
                sp += 1
                stack[sp] = node_right[ni]
                sp += 1
        out_t[qi] = best
        out_face[qi] = bface


@njit(cache=True)
def _ray_count_batch(node_min, node_max, node_left, node_right, node_start,
                     node_count, prim_face, tv0, tv1, tv2,
                     origins, dirs, t_min, out_n):
    stack = np.empty(_STACK_CAP, dtype=np.int64)
    for qi in range(origins.shape[0]):
        o = origins[qi]
        d = dirs[qi]
        n = 0
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0:
            sp -= 1
            ni = stack[sp]
            if not _aabb_hits_ray(node_min[ni], node_max[ni], o, d, t_min, np.inf):
                continue
            if node_left[ni] < 0:
                s = node_start[ni]
                for t in range(s, s + node_count[ni]):
                    th = _tri_ray(tv0[t], tv1[t], tv2[t], o, d, t_min)
                    if th > 0.0:
                        n += 1
            else:
                stack[sp] = node_left[ni]
                sp += 1
                stack[sp] = node_right[ni]
                sp += 1
        out_n[qi] = n


@njit(cache=True)
def _box_overlap_collect(node_min, node_max, node_left, node_right, node_start,
                         node_count, prim_face, tv0, tv1, tv2,
                         lo, hi, out_idx):
    """Collect faces whose AABB overlaps [lo, hi]; returns the count."""
    stack = np.empty(_STACK_CAP, dtype=np.int64)
    sp = 0
    stack[sp] = 0
    sp += 1
    n = 0
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        hit = True
        for k in range(3):
            if node_min[ni, k] > hi[k] or node_max[ni, k] < lo[k]:
                hit = False
                break
        if not hit:
            continue
        if node_left[ni] < 0:
            s = node_start[ni]
            for t in range(s, s + node_count[ni]):
                ok = True
                for k in range(3):
                    flo = min(tv0[t, k], min(tv1[t, k], tv2[t, k]))
                    fhi = max(tv0[t, k], max(tv1[t, k], tv2[t, k]))
                    if flo > hi[k] or fhi < lo[k]:
                        ok = False
                        break
                if ok:
                    out_idx[n] = prim_face[t]
                    n += 1
        else:
            stack[sp] = node_left[ni]
            sp += 1
            stack[sp] = node_right[ni]
            sp += 1
    return n


@njit(cache=True)
def _box_any_overlap_batch(node_min, node_max, node_left, node_right,
                           node_start, node_count, prim_face, tv0, tv1, tv2,
                           los, his, out):
    stack = np.empty(_STACK_CAP, dtype=np.int64)
    for qi in range(los.shape[0]):
        lo = los[qi]
        hi = his[qi]
        found = False
        sp = 0
        stack[sp] = 0
        sp += 1
        while sp > 0 and not found:
            sp -= 1
            ni = stack[sp]
            hit = True
            for k in range(3):
                if node_min[ni, k] > hi[k] or node_max[ni, k] < lo[k]:
                    hit = False
                    break
            if not hit:
                continue
            if node_left[ni] < 0:
                s = node_start[ni]
                for t in range(s, s + node_count[ni]):
                    ok = True
                    for k in range(3):
                        flo = min(tv0[t, k], min(tv1[t, k], tv2[t, k]))
                        fhi = max(tv0[t, k], max(tv1[t, k], tv2[t, k]))
                        if flo > hi[k] or fhi < lo[k]:
                            ok = False
                            break
                    if ok:
                        found = True
                        break
            else:
                stack[sp] = node_left[ni]
                sp += 1
                stack[sp] = node_right[ni]
                sp += 1
        out[qi] = found


@dataclass(frozen=True)
class ClosestHit:
    """Result of a closest-point query against the indexed mesh."""

    distance: float
    point: np.ndarray
    face_index: int


@dataclass(frozen=True)
class RayHit:
    t: float
    face_index: int


class SpatialIndex:
    """BVH over a mesh's faces. Immutable; queries are thread-safe."""

    def __init__(self, mesh: Mesh, leaf_size: int = 4):
        if mesh.n_faces == 0:
            raise ValueError("cannot index a mesh with no faces")
        self.mesh = mesh
        self.leaf_size = leaf_size
        tri = mesh.vertices[mesh.faces]
        face_lo = tri.min(axis=1)
        face_hi = tri.max(axis=1)
        self.face_lo = face_lo
        self.face_hi = face_hi
        centroid = tri.mean(axis=1)

        order = np.arange(mesh.n_faces, dtype=np.int64)
        n_min: list[np.ndarray] = []
        n_max: list[np.ndarray] = []
        n_left: list[int] = []
        n_right: list[int] = []
        n_start: list[int] = []
        n_count: list[int] = []

        def new_node(s: int, c: int) -> int:
            sl = order[s:s + c]
            n_min.append(face_lo[sl].min(axis=0))
            n_max.append(face_hi[sl].max(axis=0))
            n_left.append(-1)
            n_right.append(-1)
            n_start.append(s)
            n_count.append(c)
            return len(n_left) - 1

        root = new_node(0, mesh.n_faces)
        stack = [root]
        while stack:
            ni = stack.pop()
            s, c = n_start[ni], n_count[ni]
            if c <= leaf_size:
                continue
            sl = order[s:s + c]
            cen = centroid[sl]
            ext = cen.max(axis=0) - cen.min(axis=0)
            axis = int(np.argmax(ext))
            if ext[axis] <= 0.0:
                continue  # coincident centroids; keep as an oversized leaf
            local = np.argsort(cen[:, axis], kind="stable")
            order[s:s + c] = sl[local]
            mid = c // 2
            li = new_node(s, mid)
            ri = new_node(s + mid, c - mid)
            n_left[ni] = li
            n_right[ni] = ri
            n_start[ni] = -1
            n_count[ni] = 0
            stack.append(li)
            stack.append(ri)

        self.node_min = np.ascontiguousarray(np.asarray(n_min))
        self.node_max = np.ascontiguousarray(np.asarray(n_max))
        self.node_left = np.asarray(n_left, dtype=np.int64)
        self.node_right = np.asarray(n_right, dtype=np.int64)
        self.node_start = np.asarray(n_start, dtype=np.int64)
        self.node_count = np.asarray(n_count, dtype=np.int64)
        self.prim_face = order
        self.tv0 = np.ascontiguousarray(tri[order, 0])
        self.tv1 = np.ascontiguousarray(tri[order, 1])
        self.tv2 = np.ascontiguousarray(tri[order, 2])

    def _args(self):
        return (self.node_min, self.node_max, self.node_left, self.node_right,
                self.node_start, self.node_count, self.prim_face,
                self.tv0, self.tv1, self.tv2)

    def closest_point_many(self, queries: np.ndarray):
        """Exact closest points for a batch of queries.

        Returns:
            (distances, points, face_indices) arrays.
        """
        q = np.ascontiguousarray(np.asarray(queries, dtype=np.float64).reshape(-1, 3))
        d2 = np.empty(q.shape[0])
        pts = np.empty_like(q)
        faces = np.empty(q.shape[0], dtype=np.int64)
        _closest_batch(*self._args(), q, d2, pts, faces)
        return np.sqrt(d2), pts, faces

    def closest_point(self, query: np.ndarray) -> ClosestHit:
        d, p, f = self.closest_point_many(np.asarray(query, dtype=np.float64)[None, :])
        return ClosestHit(float(d[0]), p[0], int(f[0]))

    def ray_intersect_many(self, origins: np.ndarray, dirs: np.ndarray,
                           t_min: float = 1e-7):
        """Nearest hits for a ray batch; t = inf / face = -1 for misses."""
        o = np.ascontiguousarray(np.asarray(origins, dtype=np.float64).reshape(-1, 3))
        d = np.ascontiguousarray(np.asarray(dirs, dtype=np.float64).reshape(-1, 3))
        t = np.empty(o.shape[0])
        faces = np.empty(o.shape[0], dtype=np.int64)
        _ray_nearest_batch(*self._args(), o, d, t_min, t, faces)
        return t, faces

    def ray_intersect(self, origin: np.ndarray, direction: np.ndarray,
                      t_min: float = 1e-7) -> RayHit | None:
        t, f = self.ray_intersect_many(np.asarray(origin)[None, :],
                                       np.asarray(direction)[None, :], t_min)
        if f[0] < 0:
            return None
        return RayHit(float(t[0]), int(f[0]))

    def ray_hit_counts(self, origins: np.ndarray, dirs: np.ndarray,
                       t_min: float = 1e-7) -> np.ndarray:
        """Number of triangle crossings along each ray (for parity tests)."""
        o = np.ascontiguousarray(np.asarray(origins, dtype=np.float64).reshape(-1, 3))
        d = np.ascontiguousarray(np.asarray(dirs, dtype=np.float64).reshape(-1, 3))
        out = np.empty(o.shape[0], dtype=np.int64)
        _ray_count_batch(*self._args(), o, d, t_min, out)
        return out

    def faces_in_box(self, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
        """Indices of faces whose AABB overlaps [lo, hi]."""
        lo = np.ascontiguousarray(np.asarray(lo, dtype=np.float64))
        hi = np.ascontiguousarray(np.asarray(hi, dtype=np.float64))
        out = np.empty(self.mesh.n_faces, dtype=np.int64)
        n = _box_overlap_collect(*self._args(), lo, hi, out)
        return out[:n]

    def any_overlap(self, los: np.ndarray, his: np.ndarray) -> np.ndarray:
        """For each query box, whether any face AABB overlaps it."""
        los = np.ascontiguousarray(np.asarray(los, dtype=np.float64).reshape(-1, 3))
        his = np.ascontiguousarray(np.asarray(his, dtype=np.float64).reshape(-1, 3))
        out = np.empty(los.shape[0], dtype=np.bool_)
        _box_any_overlap_batch(*self._args(), los, his, out)
        return out
