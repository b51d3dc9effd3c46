"""Watermark-quality and asset-utility metrics.

Implements the benchmark scores: placement (WPS), ray-cast visibility,
sampled geometric error (SMSE), isolated-parts error (IPE), local curvature
error (LCE), and saliency error (SE) with its Otsu-thresholded curvature
saliency proxy. All metrics are pure functions over immutable meshes and are
deterministic for fixed seeds.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .bvh import SpatialIndex
from .glyphs import BoxGeom
from .mesh import Mesh, connected_components, surface_sample

_COS_45 = np.cos(np.deg2rad(45.0))


@dataclass
class ViewSet:
    """Camera directions from spinning a reference view about X and Z."""

    directions: np.ndarray

    @classmethod
    def around_x_and_z(cls, increment_deg: float = 30.0) -> "ViewSet":
        """Rotate (0, 1, 0) about the X axis and about the Z axis in fixed
        increments; duplicate directions are removed."""
        if increment_deg <= 0 or 360.0 % increment_deg != 0:
            raise ValueError("angle increment must divide 360")
        n = int(round(360.0 / increment_deg))
        dirs: list[np.ndarray] = []
        seen: set[tuple[float, float, float]] = set()
        for k in range(n):
            t = np.deg2rad(k * increment_deg)
            for d in (np.array([0.0, np.cos(t), np.sin(t)]),
                      np.array([-np.sin(t), np.cos(t), 0.0])):
                key = tuple(np.round(d, 12))
                if key not in seen:
                    seen.add(key)
                    dirs.append(d)
        return cls(directions=np.asarray(dirs))

    def __len__(self) -> int:
        return self.directions.shape[0]


def wps(target: Mesh, boxes: list[BoxGeom]) -> float:
    """Watermark placement score: mean clamped ratio of the target area
    captured inside each box (projected onto the box front normal) to the
    box front-face area."""
    if not boxes:
        raise ValueError("wps requires at least one box")
    return float(np.mean([wps_single(target, b) for b in boxes]))


def wps_single(target: Mesh, box: BoxGeom) -> float:
    inside_v = box.contains(target.vertices)
    fully = inside_v[target.faces].all(axis=1)
    if not fully.any():
        return 0.0
    cos = np.abs(target.face_normals[fully] @ box.front_normal)
    projected = float((target.face_areas[fully] * cos).sum())
    return min(projected / box.front_face_area(), 1.0)


def visibility_matrix(watermarked: Mesh, boxes: list[BoxGeom],
                      views: ViewSet | None = None, n_rays: int = 16,
                      index: SpatialIndex | None = None) -> np.ndarray:
    """Per-(box, view) visibility: 1 when the box faces within 45 degrees of
    the view and every ray from its front face escapes; NaN when the box is
    not a candidate for that view."""
    views = views or ViewSet.around_x_and_z()
    index = index or SpatialIndex(watermarked)
    out = np.full((len(boxes), len(views)), np.nan)
    for bi, box in enumerate(boxes):
        grid = box.front_face_grid(n_rays)
        for vi, v in enumerate(views.directions):
            if float(box.front_normal @ v) < _COS_45:
                continue
            dirs = np.broadcast_to(v, grid.shape)
            _, hit_faces = index.ray_intersect_many(grid + 1e-4 * v, dirs)
            out[bi, vi] = 1.0 if np.all(hit_faces < 0) else 0.0
    return out


def ray_visibility(watermarked: Mesh, boxes: list[BoxGeom],
                   views: ViewSet | None = None, n_rays: int = 16,
                   index: SpatialIndex | None = None,
                   per_view: bool = False):
    """Fraction of views in which candidate watermarks are unobstructed.

    Per view, candidate watermarks are those whose front normal is within
    45 degrees of the view direction; each fires a grid of rays from its
    front face toward the camera and scores 1 only if every ray escapes.
    The per-view score averages candidate scores (0 with no candidates) and
    the final score averages over views.
    """
    views = views or ViewSet.around_x_and_z()
    index = index or SpatialIndex(watermarked)
    matrix = visibility_matrix(watermarked, boxes, views, n_rays, index)
    scores = []
    for vi in range(len(views)):
        col = matrix[:, vi] if len(boxes) else np.zeros(0)
        cand = col[~np.isnan(col)] if col.size else col
        scores.append(float(cand.mean()) if cand.size else 0.0)
    result = float(np.mean(scores)) if scores else 0.0
    return (result, scores) if per_view else result


def smse(original: Mesh, watermarked: Mesh, n_samples: int = 100_000,
         seed: int = 0, index: SpatialIndex | None = None) -> float:
    """Mean squared distance from watermarked-surface samples to the
    original surface (lower is better)."""
    samples = surface_sample(watermarked, n_samples, seed)
    index = index or SpatialIndex(original)
    d, _, _ = index.closest_point_many(samples.position)
    return float(np.mean(d * d))


def ipe(original: Mesh, watermarked: Mesh, weld_eps: float = 1e-6) -> int:
    """Absolute change in the number of connected components."""
    return abs(connected_components(watermarked, weld_eps)[0]
               - connected_components(original, weld_eps)[0])


def watermark_top_vertices(watermarked: Mesh, labels: np.ndarray) -> dict[str, np.ndarray]:
    """Vertex indices of each watermark's curve-matched top surface."""
    groups: dict[str, list[int]] = {}
    for fi, lab in enumerate(labels):
        s = str(lab)
        if s.startswith("watermark_") and s.endswith("_top"):
            groups.setdefault(s, []).append(fi)
    return {k: np.unique(watermarked.faces[np.asarray(v)]) for k, v in groups.items()}


def lce(original: Mesh, watermarked: Mesh, labels: np.ndarray,
        index: SpatialIndex | None = None) -> float:
    """Local curvature error: variance of distances from watermark top
    vertices to the original surface, pooled over all watermarks."""
    groups = watermark_top_vertices(watermarked, labels)
    if not groups:
        raise ValueError("no watermark top faces in provenance labels")
    index = index or SpatialIndex(original)
    verts = np.unique(np.concatenate(list(groups.values())))
    d, _, _ = index.closest_point_many(watermarked.vertices[verts])
    return float(np.var(d))


def _cot_laplacian_curvature(mesh: Mesh) -> np.ndarray:
    """Per-vertex mean-curvature magnitude from the cotangent Laplacian."""
    v = mesh.vertices
    f = mesh.faces
    n = mesh.n_vertices
    ij, ji, w_all = [], [], []
    vertex_area = np.zeros(n)
    for k in range(3):
        i = f[:, k]
        j = f[:, (k + 1) % 3]
        o = f[:, (k + 2) % 3]
        e1 = v[i] - v[o]
        e2 = v[j] - v[o]
        cross = np.linalg.norm(np.cross(e1, e2), axis=1)
        dot = np.einsum("ab,ab->a", e1, e2)
        cot = dot / np.maximum(cross, 1e-300)
        cot = np.clip(cot, -1e3, 1e3)  # degenerate-triangle guard
        ij.append(np.column_stack([i, j]))
        w_all.append(0.5 * cot)
        np.add.at(vertex_area, i, mesh.face_areas / 3.0)
    edges = np.vstack(ij)
    w = np.concatenate(w_all)
    lap = sp.coo_matrix((w, (edges[:, 0], edges[:, 1])), shape=(n, n))
    lap = lap + lap.T
    diag = np.asarray(lap.sum(axis=1)).ravel()
    delta = diag[:, None] * v - lap @ v
    area = np.maximum(vertex_area, 1e-300)
    # The mean-curvature normal is along the vertex normal; projecting out
    # the tangential residual keeps flat patches (and their open boundaries)
    # at exactly zero.
    normal_component = np.abs(np.einsum("ij,ij->i", delta, mesh.vertex_normals))
    return normal_component / (2.0 * area)


def saliency_map(mesh: Mesh) -> np.ndarray:
    """Curvature-based saliency proxy in [0, 1].

    Mean-curvature magnitude (one-ring cotangent Laplacian), Gaussian
    smoothed over the 2-ring neighborhood, then scaled by the maximum so a
    constant-curvature surface maps to a near-constant value. A flat mesh
    degenerates to all zeros.
    """
    curv = _cot_laplacian_curvature(mesh)
    n = mesh.n_vertices
    f = mesh.faces
    rows = np.concatenate([f[:, 0], f[:, 1], f[:, 2], f[:, 0], f[:, 1], f[:, 2]])
    cols = np.concatenate([f[:, 1], f[:, 2], f[:, 0], f[:, 2], f[:, 0], f[:, 1]])
    adj = sp.coo_matrix((np.ones(rows.size), (rows, cols)), shape=(n, n)).tocsr()
    adj = adj + sp.eye(n, format="csr")
    two_ring = (adj @ adj).tocoo()
    edge_len = np.linalg.norm(mesh.vertices[rows] - mesh.vertices[cols], axis=1)
    sigma = max(float(edge_len.mean()), 1e-12)
    d = np.linalg.norm(mesh.vertices[two_ring.row] - mesh.vertices[two_ring.col], axis=1)
    g = np.exp(-(d * d) / (2.0 * sigma * sigma))
    gmat = sp.coo_matrix((g, (two_ring.row, two_ring.col)), shape=(n, n)).tocsr()
    norm = np.asarray(gmat.sum(axis=1)).ravel()
    smoothed = (gmat @ curv) / np.maximum(norm, 1e-300)
    hi = smoothed.max()
    if hi < 1e-12:
        return np.zeros(n)
    return smoothed / hi


def otsu_threshold(values: np.ndarray) -> float:
    """Otsu's threshold over a 256-bin histogram on [0, 1].

    Returns the midpoint of the highest bin assigned to the low class at the
    cut maximizing between-class variance. Tied cuts resolve to the middle
    of the tie plateau (lower-middle on even plateaus), so a symmetric
    bimodal input thresholds at its midpoint.

    Raises:
        ValueError: If fewer than 2 distinct values are given.
    """
    vals = np.clip(np.asarray(values, dtype=np.float64).ravel(), 0.0, 1.0)
    if np.unique(vals).size < 2:
        raise ValueError("otsu_threshold needs at least 2 distinct values")
    hist, _ = np.histogram(vals, bins=256, range=(0.0, 1.0))
    p = hist / hist.sum()
    centers = (np.arange(256) + 0.5) / 256.0
    w0 = np.cumsum(p)
    mu = np.cumsum(p * centers)
    mu_total = mu[-1]
    w0k = w0[:-1]
    w1k = 1.0 - w0k
    valid = (w0k > 0) & (w1k > 0)
    var = np.zeros(255)
    mu0 = np.where(valid, mu[:-1] / np.where(w0k > 0, w0k, 1.0), 0.0)
    mu1 = np.where(valid, (mu_total - mu[:-1]) / np.where(w1k > 0, w1k, 1.0), 0.0)
    var[valid] = (w0k * w1k * (mu0 - mu1) ** 2)[valid]
    best = var.max()
    ties = np.nonzero(var == best)[0]
    cut = int(ties[(ties.size - 1) // 2]) + 1  # classes split at bin ``cut``
    return float((cut - 0.5) / 256.0)


def saliency_votes(mesh: Mesh, boxes: list[BoxGeom],
                   smap: np.ndarray | None = None) -> np.ndarray:
    """Binary per-box votes: 1 when a box sits on salient geometry.

    A box votes 1 when the mean Otsu-thresholded saliency of the mesh
    vertices it contains exceeds 0.5; boxes containing no vertices vote 0
    with a warning. A near-constant map (range < 0.2, e.g. a sphere) has no
    distinctly salient regions, so every box votes 0; Otsu would otherwise
    just split discretization noise.
    """
    smap = saliency_map(mesh) if smap is None else smap
    if smap.size == 0 or float(smap.max() - smap.min()) < 0.2:
        return np.zeros(len(boxes))
    try:
        tau = otsu_threshold(smap)
    except ValueError:
        return np.zeros(len(boxes))  # constant saliency: nothing salient
    binary = (smap > tau).astype(np.float64)
    votes = np.zeros(len(boxes))
    for i, box in enumerate(boxes):
        inside = box.contains(mesh.vertices)
        if not inside.any():
            warnings.warn(f"saliency vote: box {i} contains no mesh vertices")
            continue
        votes[i] = 1.0 if binary[inside].mean() > 0.5 else 0.0
    return votes


def saliency_error(original: Mesh, boxes: list[BoxGeom]) -> float:
    """Fraction of watermark boxes landing on salient regions (lower is
    better; saliency preservation is 1 - SE)."""
    if not boxes:
        raise ValueError("saliency_error requires at least one box")
    return float(saliency_votes(original, boxes).mean())


@dataclass
class MetricsReport:
    """Bundle of all benchmark scores plus per-watermark diagnostics."""

    wps: float | None
    ray: float | None
    smse: float | None
    ipe: int | None
    lce: float | None
    se: float | None
    h_f: int
    views: list = field(default_factory=list)
    per_watermark: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "wps": self.wps, "ray": self.ray, "smse": self.smse,
            "ipe": self.ipe, "lce": self.lce, "se": self.se,
            "h_f": self.h_f, "views": self.views,
            "per_watermark": self.per_watermark,
        }


def evaluate_all(original: Mesh, watermarked: Mesh,
                 boxes: list[BoxGeom] | None = None,
                 labels: np.ndarray | None = None,
                 angle_increment: float = 30.0, n_rays: int = 16,
                 n_smse_samples: int = 100_000, seed: int = 0) -> MetricsReport:
    """Compute every metric the provided inputs allow.

    Box-based scores (wps, ray, se) need ``boxes``; lce needs provenance
    ``labels``. Missing inputs yield None fields rather than errors.
    """
    views = ViewSet.around_x_and_z(angle_increment)
    orig_index = SpatialIndex(original)
    smse_v = smse(original, watermarked, n_smse_samples, seed, index=orig_index)
    ipe_v = ipe(original, watermarked)
    wps_v = ray_v = se_v = lce_v = None
    per_wm: list[dict] = []
    if boxes:
        wps_v = wps(original, boxes)
        wm_index = SpatialIndex(watermarked)
        matrix = visibility_matrix(watermarked, boxes, views, n_rays,
                                   index=wm_index)
        scores = []
        for vi in range(len(views)):
            col = matrix[:, vi]
            cand = col[~np.isnan(col)]
            scores.append(float(cand.mean()) if cand.size else 0.0)
        ray_v = float(np.mean(scores))
        votes = saliency_votes(original, boxes)
        se_v = float(votes.mean())
        top_groups = (watermark_top_vertices(watermarked, labels)
                      if labels is not None else {})
        for i, box in enumerate(boxes):
            row = matrix[i]
            entry = {
                "placement": wps_single(original, box),
                "saliency_vote": int(votes[i]),
                # 1/0 per view where this watermark is a candidate, else None.
                "visibility_per_view": [None if np.isnan(x) else int(x)
                                        for x in row],
                "center": [float(x) for x in box.center],
                "front_normal": [float(x) for x in box.front_normal],
            }
            tv = top_groups.get(f"watermark_{i}_top")
            if tv is not None:
                d, _, _ = orig_index.closest_point_many(watermarked.vertices[tv])
                entry["curvature_variance"] = float(np.var(d))
            per_wm.append(entry)
    if labels is not None:
        try:
            lce_v = lce(original, watermarked, labels, index=orig_index)
        except ValueError:
            lce_v = None
    return MetricsReport(
        wps=wps_v, ray=ray_v, smse=smse_v, ipe=ipe_v, lce=lce_v, se=se_v,
        h_f=len(boxes) if boxes else 0,
        views=[[float(x) for x in v] for v in views.directions],
        per_watermark=per_wm,
    )
