"""Boolean mesh operations and curve-matching watermark fusion.

The boolean kernel splits each solid's faces against the nearby faces of the
other solid (plane clipping gated by AABB overlap), classifies the resulting
fragments as inside/outside by ray-parity voting against the full other mesh,
and keeps/flips fragments per the set operation. Coincident (coplanar)
fragments are resolved by normal agreement so that exactly one copy survives.
A final weld plus T-junction repair restores a closed surface.

This is a floating-point CSG tuned for the desk scale of this library
(models normalized to size 30): plane-side epsilon 1e-7, weld 1e-6.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .bvh import SpatialIndex
from .glyphs import BoxGeom
from .mesh import Mesh, MeshError, UnionFind, edge_counts

PLANE_EPS = 1e-7
WELD_EPS = 1e-6
COPLANAR_EPS = 1e-6
_AREA_EPS = 1e-14

# Fixed, incommensurate parity-ray directions; majority of three votes.
_PARITY_DIRS = np.array([
    [0.8191052, 0.3516013, 0.4530021],
    [-0.2380741, 0.9183264, 0.3160942],
    [0.3986051, -0.3380013, 0.8525972],
])
_PARITY_DIRS /= np.linalg.norm(_PARITY_DIRS, axis=1, keepdims=True)


@dataclass
class CsgResult:
    """Outcome of a boolean operation.

    ``mesh`` is None when the result is empty (e.g. intersection of disjoint
    solids). ``labels`` carries per-face provenance strings; ``face_sources``
    is 0 for faces originating in the first operand, 1 for the second.
    """

    mesh: Mesh | None
    boundary_edge_count: int
    labels: np.ndarray
    face_sources: np.ndarray

    @property
    def is_empty(self) -> bool:
        return self.mesh is None


def _empty_result() -> CsgResult:
    return CsgResult(mesh=None, boundary_edge_count=0,
                     labels=np.asarray([], dtype=object),
                     face_sources=np.zeros(0, dtype=np.int64))


def _require_solid(mesh: Mesh, name: str) -> None:
    counts = edge_counts(mesh.faces)[1]
    odd = int((counts % 2 == 1).sum())
    if odd:
        raise MeshError(f"{name} operand is not watertight: {odd} boundary edges")
    if mesh.signed_volume() <= 0.0:
        raise MeshError(f"{name} operand is not consistently outward-oriented")


def _split_polygon(poly: np.ndarray, normal: np.ndarray, offset: float,
                   eps: float = PLANE_EPS):
    """Split a convex polygon by a plane.

    Returns (front, back); a side is None when empty. Non-spanning polygons
    (including coplanar ones) are returned whole on the front side.
    """
    dist = poly @ normal - offset
    front_any = bool(np.any(dist > eps))
    back_any = bool(np.any(dist < -eps))
    if not back_any:
        return poly, None
    if not front_any:
        return None, poly
    n = poly.shape[0]
    front: list[np.ndarray] = []
    back: list[np.ndarray] = []
    for i in range(n):
        j = (i + 1) % n
        pi, pj = poly[i], poly[j]
        di, dj = dist[i], dist[j]
        side_i = 0 if abs(di) <= eps else (1 if di > 0 else -1)
        side_j = 0 if abs(dj) <= eps else (1 if dj > 0 else -1)
        if side_i >= 0:
            front.append(pi)
        if side_i <= 0:
            back.append(pi)
        if side_i * side_j < 0:
            t = di / (di - dj)
            x = pi + t * (pj - pi)
            front.append(x)
            back.append(x)
    f = np.asarray(front) if len(front) >= 3 else None
    b = np.asarray(back) if len(back) >= 3 else None
    return f, b


def _poly_area_normal(poly: np.ndarray) -> tuple[float, np.ndarray]:
    acc = np.zeros(3)
    for k in range(1, poly.shape[0] - 1):
        acc += np.cross(poly[k] - poly[0], poly[k + 1] - poly[0])
    norm = float(np.linalg.norm(acc))
    if norm <= 0.0:
        return 0.0, np.zeros(3)
    return 0.5 * norm, acc / norm


def _fragment_faces(mesh: Mesh, face_ids: np.ndarray, other: Mesh,
                    other_index: SpatialIndex):
    """Clip the given faces by planes of nearby faces of ``other``.

    Returns a list of (polygon, source_face_id) fragments covering exactly
    the input faces. Splitting is gated by AABB overlap with each cutter so
    cuts stay local to where the surfaces can actually cross.
    """
    pad = 4.0 * WELD_EPS
    frags: list[tuple[np.ndarray, int]] = []
    other_tri = other.vertices[other.faces]
    for fid in face_ids:
        poly = mesh.vertices[mesh.faces[fid]]
        lo = poly.min(axis=0) - pad
        hi = poly.max(axis=0) + pad
        cutters = other_index.faces_in_box(lo, hi)
        work = [poly]
        for cid in cutters:
            n = other.face_normals[cid]
            if not np.any(n):
                continue
            off = float(n @ other_tri[cid, 0])
            c_lo = other_tri[cid].min(axis=0) - pad
            c_hi = other_tri[cid].max(axis=0) + pad
            nxt: list[np.ndarray] = []
            for piece in work:
                if (np.any(piece.min(axis=0) > c_hi)
                        or np.any(piece.max(axis=0) < c_lo)):
                    nxt.append(piece)
                    continue
                f, b = _split_polygon(piece, n, off)
                if f is not None and b is not None:
                    nxt.append(f)
                    nxt.append(b)
                else:
                    nxt.append(piece)
            work = nxt
        for piece in work:
            frags.append((piece, int(fid)))
    return frags


def _classify(points: np.ndarray, normals: np.ndarray, other: Mesh,
              other_index: SpatialIndex):
    """Classify fragment centroids against the other solid.

    Returns (inside, coplanar, same_direction) boolean arrays. ``inside`` is
    a majority vote over three fixed parity rays and is meaningful only where
    ``coplanar`` is False.
    """
    d, _, cf = other_index.closest_point_many(points)
    align = np.einsum("ij,ij->i", normals, other.face_normals[cf])
    # True coplanar overlap needs both near-zero distance and parallel
    # normals; near-wall slivers (perpendicular) must go through parity.
    coplanar = (d < COPLANAR_EPS) & (np.abs(align) > 0.9)
    votes = np.zeros(points.shape[0], dtype=np.int64)
    for k in range(3):
        dirs = np.broadcast_to(_PARITY_DIRS[k], points.shape)
        counts = other_index.ray_hit_counts(points, dirs, t_min=PLANE_EPS)
        votes += counts % 2
    inside = votes >= 2
    return inside, coplanar, align > 0.0


def _keep_mask(inside, coplanar, same, side: str, mode: str):
    """CSG keep rules. Coplanar overlaps survive once, on the first operand."""
    if side == "a":
        if mode == "union":
            return np.where(coplanar, same, ~inside)
        if mode == "intersection":
            return np.where(coplanar, same, inside)
        return np.where(coplanar, ~same, ~inside)  # difference
    if mode == "union":
        return np.where(coplanar, False, ~inside)
    return np.where(coplanar, False, inside)  # intersection / difference


def _repair_t_junctions(vertices: np.ndarray, faces: np.ndarray,
                        labels: np.ndarray, sources: np.ndarray,
                        eps: float = WELD_EPS, max_rounds: int = 32):
    """Split faces whose boundary edges pass through another boundary vertex.

    Plane clipping can subdivide an edge on one side of a seam but not the
    other; inserting the missing vertices re-closes the surface. If seams
    survive at the base tolerance, two escalated passes catch vertices that
    float-drift slightly off the shared line.
    """
    for rung in (eps, 8.0 * eps, 64.0 * eps):
        faces, labels, sources, clean = _repair_pass(vertices, faces, labels,
                                                     sources, rung, max_rounds)
        if clean:
            break
    return faces, labels, sources


def _repair_pass(vertices: np.ndarray, faces: np.ndarray, labels: np.ndarray,
                 sources: np.ndarray, eps: float, max_rounds: int):
    faces = faces.copy()
    labels = labels.copy()
    sources = sources.copy()
    clean = True
    for _ in range(max_rounds):
        e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
        face_of = np.tile(np.arange(faces.shape[0]), 3)
        e_sorted = np.sort(e, axis=1)
        nv = int(e_sorted.max()) + 1 if e_sorted.size else 0
        keys = e_sorted[:, 0] * nv + e_sorted[:, 1]
        uniq_keys, inv, counts = np.unique(keys, return_inverse=True,
                                           return_counts=True)
        odd = counts % 2 == 1
        clean = not odd.any()
        if clean:
            break
        odd_mask = odd[inv]
        b_verts = np.unique(faces)
        tree = cKDTree(vertices[b_verts])

        # Map each odd (undirected) edge to every incident face; all of them
        # must be split at the inserted vertex to keep counts balanced.
        incident: dict[tuple[int, int], list[int]] = {}
        for (u, v), fi in zip(e_sorted[odd_mask], face_of[odd_mask]):
            incident.setdefault((int(u), int(v)), []).append(int(fi))

        split_done = np.zeros(faces.shape[0], dtype=bool)
        new_faces: list[list[int]] = []
        new_labels: list[object] = []
        new_sources: list[int] = []
        progress = False
        for (u, v), incident_faces in sorted(incident.items()):
            if any(split_done[fi] for fi in incident_faces):
                continue
            pu, pv = vertices[u], vertices[v]
            seg = pv - pu
            seg_len2 = float(seg @ seg)
            if seg_len2 <= 0:
                continue
            mid = (pu + pv) / 2.0
            cand = tree.query_ball_point(mid, 0.5 * np.sqrt(seg_len2) + eps)
            best_t, best_w = None, -1
            for ci in cand:
                w = int(b_verts[ci])
                if w == u or w == v:
                    continue
                t = float((vertices[w] - pu) @ seg) / seg_len2
                if t <= 1e-9 or t >= 1.0 - 1e-9:
                    continue
                off = vertices[w] - (pu + t * seg)
                if off @ off > eps * eps:
                    continue
                if best_t is None or t < best_t:
                    best_t, best_w = t, w
            if best_t is None:
                continue
            for fi in incident_faces:
                f = faces[fi]
                for k in range(3):
                    a0, a1 = int(f[k]), int(f[(k + 1) % 3])
                    if {a0, a1} == {u, v}:
                        c = int(f[(k + 2) % 3])
                        if c == best_w:
                            # Zero-area flap (its apex is the split vertex):
                            # splitting degenerates to deleting the face.
                            split_done[fi] = True
                            progress = True
                            break
                        new_faces.append([a0, best_w, c])
                        new_faces.append([best_w, a1, c])
                        new_labels.extend([labels[fi], labels[fi]])
                        new_sources.extend([sources[fi], sources[fi]])
                        split_done[fi] = True
                        progress = True
                        break
        if not progress:
            break
        keep = ~split_done
        faces = np.vstack([faces[keep], np.asarray(new_faces, dtype=np.int64)])
        labels = np.concatenate([labels[keep], np.asarray(new_labels, dtype=object)])
        sources = np.concatenate([sources[keep],
                                  np.asarray(new_sources, dtype=np.int64)])
    return faces, labels, sources, clean


def boolean_op(a: Mesh, b: Mesh, mode: str,
               labels_a: np.ndarray | None = None,
               labels_b: np.ndarray | None = None,
               index_a: SpatialIndex | None = None,
               index_b: SpatialIndex | None = None) -> CsgResult:
    """Boolean union / intersection / difference of two watertight solids.

    Args:
        a, b: Watertight, outward-oriented, non-self-intersecting meshes.
            Touching-but-not-interpenetrating sub-solids (as produced by the
            glyph generator) are fine.
        mode: "union", "intersection", or "difference" (a minus b).
        labels_a, labels_b: Optional per-face provenance labels carried
            through splitting; default to "a" / "b".
        index_a, index_b: Optional prebuilt spatial indexes over a / b.

    Returns:
        CsgResult with the result mesh (None when empty), its boundary edge
        count after repair, and per-face labels/sources.

    Raises:
        MeshError: If an operand is not watertight or not outward oriented.
        ValueError: On an unknown mode or mismatched label arrays.
    """
    if mode not in ("union", "intersection", "difference"):
        raise ValueError(f"unknown boolean mode: {mode!r}")
    _require_solid(a, "first")
    _require_solid(b, "second")
    la = (np.asarray(labels_a, dtype=object) if labels_a is not None
          else np.asarray(["a"] * a.n_faces, dtype=object))
    lb = (np.asarray(labels_b, dtype=object) if labels_b is not None
          else np.asarray(["b"] * b.n_faces, dtype=object))
    if la.shape[0] != a.n_faces or lb.shape[0] != b.n_faces:
        raise ValueError("label arrays must match face counts")

    index_a = index_a or SpatialIndex(a)
    index_b = index_b or SpatialIndex(b)
    pad = 4.0 * WELD_EPS
    a_lo, a_hi = a.aabb()
    b_lo, b_hi = b.aabb()

    # Three per-face categories against the other solid:
    #   far    - AABB misses the other solid's AABB entirely: strictly
    #            outside it, classified wholesale;
    #   middle - inside the global AABB but touching no face box: uncut,
    #            inside/outside decided by parity at the centroid;
    #   near   - overlaps some face box: split and classify per fragment.
    def categorize(index_s, other_lo, other_hi, other_index):
        in_global = (np.all(index_s.face_lo <= other_hi + pad, axis=1)
                     & np.all(index_s.face_hi >= other_lo - pad, axis=1))
        near = np.zeros_like(in_global)
        ids = np.nonzero(in_global)[0]
        if ids.size:
            near[ids] = other_index.any_overlap(index_s.face_lo[ids] - pad,
                                                index_s.face_hi[ids] + pad)
        far = ~in_global
        middle = in_global & ~near
        return (np.nonzero(far)[0], np.nonzero(middle)[0], np.nonzero(near)[0])

    far_a, mid_a, near_a = categorize(index_a, b_lo, b_hi, index_b)
    far_b, mid_b, near_b = categorize(index_b, a_lo, a_hi, index_a)

    keep_far_a = mode in ("union", "difference")
    keep_far_b = mode == "union"

    off_b = a.n_vertices
    frag_offset = a.n_vertices + b.n_vertices
    frag_vs: list[np.ndarray] = []
    frag_count = 0
    tris: list[list[int]] = []
    t_labels: list[object] = []
    t_sources: list[int] = []

    def emit_whole(mesh_s, fid, offset, label, source, flip):
        f = mesh_s.faces[fid] + offset
        tris.append([f[2], f[1], f[0]] if flip else list(f))
        t_labels.append(label)
        t_sources.append(source)

    if keep_far_a:
        for fid in far_a:
            emit_whole(a, fid, 0, la[fid], 0, False)
    if keep_far_b:
        for fid in far_b:
            emit_whole(b, fid, off_b, lb[fid], 1, False)

    def emit_poly(poly: np.ndarray, label, source: int, flip: bool):
        nonlocal frag_count
        base = frag_offset + frag_count
        frag_vs.append(poly)
        frag_count += poly.shape[0]
        idx = list(range(poly.shape[0]))
        if flip:
            idx = idx[::-1]
        for k in range(1, poly.shape[0] - 1):
            tris.append([base + idx[0], base + idx[k], base + idx[k + 1]])
            t_labels.append(label)
            t_sources.append(source)

    for side, mesh_s, mid_ids, near_ids, other, other_idx, lab, src in (
        ("a", a, mid_a, near_a, b, index_b, la, 0),
        ("b", b, mid_b, near_b, a, index_a, lb, 1),
    ):
        flip = side == "b" and mode == "difference"
        if mid_ids.size:
            cents = mesh_s.vertices[mesh_s.faces[mid_ids]].mean(axis=1)
            normals = mesh_s.face_normals[mid_ids]
            inside, coplanar, same = _classify(cents, normals, other, other_idx)
            keep = _keep_mask(inside, coplanar, same, side, mode)
            offset = 0 if side == "a" else off_b
            for k, fid in enumerate(mid_ids):
                if keep[k]:
                    emit_whole(mesh_s, fid, offset, lab[fid], src, flip)
        if near_ids.size:
            frags = _fragment_faces(mesh_s, near_ids, other, other_idx)
            cents = np.array([f[0].mean(axis=0) for f in frags])
            area_normal = [_poly_area_normal(f[0]) for f in frags]
            normals = np.array([an[1] for an in area_normal])
            areas = np.array([an[0] for an in area_normal])
            inside, coplanar, same = _classify(cents, normals, other, other_idx)
            keep = _keep_mask(inside, coplanar, same, side, mode)
            for k, (poly, fid) in enumerate(frags):
                if keep[k] and areas[k] >= _AREA_EPS:
                    emit_poly(poly, lab[fid], src, flip)

    if not tris:
        return _empty_result()

    blocks = [a.vertices, b.vertices,
              np.vstack(frag_vs) if frag_vs else np.zeros((0, 3))]
    offsets = np.array([0, a.n_vertices, frag_offset])
    all_v = np.vstack(blocks)
    faces = np.asarray(tris, dtype=np.int64)
    labels = np.asarray(t_labels, dtype=object)
    sources = np.asarray(t_sources, dtype=np.int64)

    # Weld only "active" vertices: fragment vertices plus the corners of the
    # split source faces they may coincide with.
    active = np.zeros(all_v.shape[0], dtype=bool)
    active[frag_offset:] = True
    if near_a.size:
        active[np.unique(a.faces[near_a])] = True
    if near_b.size:
        active[offsets[1] + np.unique(b.faces[near_b])] = True
    vmap = np.arange(all_v.shape[0], dtype=np.int64)
    act_ids = np.nonzero(active)[0]
    if act_ids.size:
        tree = cKDTree(all_v[act_ids])
        uf = UnionFind(act_ids.size)
        for i, j in tree.query_pairs(WELD_EPS, output_type="ndarray"):
            uf.union(int(i), int(j))
        vmap[act_ids] = act_ids[uf.labels()]
    faces = vmap[faces]
    ok = ((faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2])
          & (faces[:, 0] != faces[:, 2]))
    faces, labels, sources = faces[ok], labels[ok], sources[ok]
    if faces.shape[0] == 0:
        return _empty_result()

    faces, labels, sources = _repair_t_junctions(all_v, faces, labels, sources)

    used, new_idx = np.unique(faces, return_inverse=True)
    out = Mesh(all_v[used], new_idx.reshape(-1, 3))
    counts = edge_counts(out.faces)[1]
    return CsgResult(mesh=out, boundary_edge_count=int((counts == 1).sum()),
                     labels=labels, face_sources=sources)


def extrude_along(mesh: Mesh, direction: np.ndarray, distance: float) -> Mesh:
    """Extrude an open surface patch into a closed prism-like solid.

    The top of the result is the input surface translated by
    ``distance * direction``; the bottom is the input with reversed
    orientation; side walls are stitched along the patch boundary loops.
    Face layout is [bottom | top | walls], which callers use to tag the
    curve-matched top surface.

    Raises:
        MeshError: If distance <= 0, the patch has zero area, or the input
            has no boundary (closed solids cannot be extruded this way).
    """
    if distance <= 0.0:
        raise MeshError("extrude distance must be > 0")
    if mesh.total_area() <= _AREA_EPS:
        raise MeshError("cannot extrude a zero-area patch")
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)

    e = np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]],
                        mesh.faces[:, [2, 0]]])
    keys = {(int(u), int(v)) for u, v in e}
    boundary = sorted((u, v) for (u, v) in keys if (v, u) not in keys)
    if not boundary:
        raise MeshError("input patch has no boundary; expected an open surface")

    nv = mesh.n_vertices
    verts = np.vstack([mesh.vertices, mesh.vertices + distance * d])
    bottom = mesh.faces[:, ::-1]
    top = mesh.faces + nv
    walls = []
    for u, v in boundary:
        walls.append([u, v, v + nv])
        walls.append([u, v + nv, u + nv])
    faces = np.vstack([bottom, top, np.asarray(walls, dtype=np.int64)])
    return Mesh(verts, faces)


def _submesh(mesh: Mesh, face_ids: np.ndarray) -> Mesh:
    faces = mesh.faces[face_ids]
    used, new_idx = np.unique(faces, return_inverse=True)
    return Mesh(mesh.vertices[used], new_idx.reshape(-1, 3))


def curve_matching_fuse(target: Mesh, watermarks: list[tuple[Mesh, BoxGeom]],
                        strength: float = 0.05, mode: str = "emboss",
                        curve_match: bool = True,
                        ) -> tuple[Mesh, np.ndarray, list[int]]:
    """Fuse posed watermark meshes into the target with curvature matching.

    Per watermark: intersect the target with the watermark solid, take the
    target-side faces of the intersection (the curved silhouette patch),
    extrude that patch along the normal of the target point closest to the
    watermark centroid into a prism spanning [-strength, +strength] around
    the surface, then union (emboss) or subtract (deboss) the prism. The
    bump top / pocket floor is therefore the local surface offset by
    ``strength`` along one direction, which is what keeps the local
    curvature error near zero.

    With ``curve_match=False`` the posed watermark solids are fused directly
    (flat tops) - the ablation baseline.

    Args:
        target: Watertight target mesh.
        watermarks: (posed watermark mesh, posed box) pairs.
        strength: Extrusion distance in model units.
        mode: "emboss" or "deboss".
        curve_match: Disable to fuse the flat watermark geometry.

    Returns:
        (fused mesh, per-face labels, skipped watermark indices). Labels are
        "target", "watermark_<i>_top", or "watermark_<i>_side".
    """
    if mode not in ("emboss", "deboss"):
        raise ValueError(f"unknown fuse mode: {mode!r}")
    if strength <= 0:
        raise ValueError("extrude strength must be > 0")
    labels = np.asarray(["target"] * target.n_faces, dtype=object)
    target_index = SpatialIndex(target)
    skipped: list[int] = []

    solids: list[tuple[int, Mesh, np.ndarray]] = []
    for i, (wm, geom) in enumerate(watermarks):
        top_label = f"watermark_{i}_top"
        side_label = f"watermark_{i}_side"
        if curve_match:
            inter = boolean_op(target, wm, "intersection", index_a=target_index)
            patch_ids = (np.nonzero(inter.face_sources == 0)[0]
                         if not inter.is_empty else np.zeros(0, dtype=np.int64))
            if patch_ids.size == 0:
                skipped.append(i)
                continue
            hit = target_index.closest_point(geom.center)
            n = target.face_normals[hit.face_index]
            patch = _submesh(inter.mesh, patch_ids)
            # Keep only surface facing the extrusion direction: when a box
            # overhangs a sharp edge the intersection wraps onto faces
            # parallel to n, which would sweep into zero-thickness flaps.
            aligned = np.nonzero(patch.face_normals @ n > 0.1)[0]
            if aligned.size == 0:
                skipped.append(i)
                continue
            if aligned.size < patch.n_faces:
                patch = _submesh(patch, aligned)
            base = Mesh(patch.vertices - strength * n, patch.faces)
            solid = extrude_along(base, n, 2.0 * strength)
            n_patch = patch.n_faces
            n_walls = solid.n_faces - 2 * n_patch
            if mode == "emboss":
                # Union keeps the raised top; the buried bottom is dropped.
                wm_labels = np.asarray([side_label] * n_patch
                                       + [top_label] * n_patch
                                       + [side_label] * n_walls, dtype=object)
            else:
                # Difference keeps the sunk bottom as the pocket floor.
                wm_labels = np.asarray([top_label] * n_patch
                                       + [side_label] * n_patch
                                       + [side_label] * n_walls, dtype=object)
        else:
            solid = wm
            front = wm.face_normals @ geom.front_normal > 0.999
            wm_labels = np.where(front, top_label, side_label).astype(object)
        solids.append((i, solid, wm_labels))

    if not solids:
        return target, labels, skipped

    # Fuse watermarks whose solids have pairwise-disjoint AABBs in one
    # boolean pass (the overlap filter makes this the common case); solids
    # that might touch fall back to later sequential passes.
    pad = 4.0 * WELD_EPS
    batches: list[list[tuple[int, Mesh, np.ndarray]]] = []
    batch_boxes: list[list[tuple[np.ndarray, np.ndarray]]] = []
    for item in solids:
        lo, hi = item[1].aabb()
        placed = False
        for bi, boxes in enumerate(batch_boxes):
            if all(np.any(lo > bhi + pad) or np.any(hi < blo - pad)
                   for blo, bhi in boxes):
                batches[bi].append(item)
                batch_boxes[bi].append((lo, hi))
                placed = True
                break
        if not placed:
            batches.append([item])
            batch_boxes.append([(lo, hi)])

    op = "union" if mode == "emboss" else "difference"
    current = target
    current_index = target_index
    for batch in batches:
        parts_v = []
        parts_f = []
        parts_l = []
        offset = 0
        for _, solid, wm_labels in batch:
            parts_v.append(solid.vertices)
            parts_f.append(solid.faces + offset)
            parts_l.append(wm_labels)
            offset += solid.n_vertices
        merged = Mesh(np.vstack(parts_v), np.vstack(parts_f))
        merged_labels = np.concatenate(parts_l)
        result = boolean_op(current, merged, op, labels_a=labels,
                            labels_b=merged_labels, index_a=current_index)
        if result.is_empty:
            skipped.extend(i for i, _, _ in batch)
            continue
        current = result.mesh
        labels = result.labels
        current_index = None  # rebuilt lazily if another batch follows

    present = {str(l) for l in labels}
    for i, _, _ in solids:
        if (f"watermark_{i}_top" not in present
                and f"watermark_{i}_side" not in present and i not in skipped):
            skipped.append(i)
    skipped.sort()
    return current, labels, skipped
