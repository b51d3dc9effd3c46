"""Candidate box generation and 6-DOF rigid pose optimization.

A candidate is a watermark-sized box seeded on the surface. Its pose is
parameterized by three Euler angles (about the box centroid) and a
translation; the alignment loss is the mean squared distance from probe
points on the box mid-plane perimeter to the target surface. Candidates are
optimized independently by plain gradient descent with an analytic gradient
(closest points held fixed per step).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .bvh import SpatialIndex
from .glyphs import BoxGeom
from .mesh import Mesh, SurfacePoint, surface_sample

_ANTIPODAL_EPS = 1e-6


@dataclass
class OptimizerOptions:
    """Gradient-descent settings for candidate pose refinement."""

    max_steps: int = 200
    stop_mean_loss: float = 0.005
    learning_rate: float = 0.05
    probe_count: int = 179

    def __post_init__(self):
        if self.max_steps <= 0 or self.stop_mean_loss <= 0:
            raise ValueError("max_steps and stop_mean_loss must be positive")
        if self.learning_rate <= 0 or self.probe_count < 4:
            raise ValueError("learning_rate must be > 0 and probe_count >= 4")


@dataclass
class CandidateBox:
    """One watermark placeholder box with its pose parameters.

    Attributes:
        geom: Current oriented box (consistent with applying ``params`` to
            ``base_vertices``).
        params: (alpha, beta, gamma, tx, ty, tz); angles in radians.
        base_vertices: The 8 box corners after seeding, before the
            parameterized transform.
        anchor: Surface sample the box was seeded from.
        loss: Last evaluated mean alignment loss, or None before evaluation.
        index: Stable candidate id used for deterministic tie-breaking.
    """

    geom: BoxGeom
    params: np.ndarray
    base_vertices: np.ndarray
    base_rotation: np.ndarray
    anchor: SurfacePoint
    loss: float | None = None
    index: int = 0


def rotation_to_normal(normal: np.ndarray) -> np.ndarray:
    """Rotation matrix aligning +Z with ``normal`` (Rodrigues).

    The antipodal case (normal within 1e-6 of -Z) rotates pi about X.
    """
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    z = np.array([0.0, 0.0, 1.0])
    c = float(np.dot(z, n))
    if c > 1.0 - _ANTIPODAL_EPS:
        return np.eye(3)
    if c < -1.0 + _ANTIPODAL_EPS:
        return np.diag([1.0, -1.0, -1.0])  # pi about X
    axis = np.cross(z, n)
    s = np.linalg.norm(axis)
    axis = axis / s
    kx, ky, kz = axis
    k = np.array([[0.0, -kz, ky], [kz, 0.0, -kx], [-ky, kx, 0.0]])
    return np.eye(3) + s * k + (1.0 - c) * (k @ k)


def euler_matrix(alpha: float, beta: float, gamma: float) -> np.ndarray:
    """Intrinsic X-then-Y-then-Z rotation: R = Rz(gamma) Ry(beta) Rx(alpha)."""
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    rz = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    return rz @ ry @ rx


def _euler_derivatives(alpha: float, beta: float, gamma: float) -> list[np.ndarray]:
    ca, sa = np.cos(alpha), np.sin(alpha)
    cb, sb = np.cos(beta), np.sin(beta)
    cg, sg = np.cos(gamma), np.sin(gamma)
    rx = np.array([[1, 0, 0], [0, ca, -sa], [0, sa, ca]])
    ry = np.array([[cb, 0, sb], [0, 1, 0], [-sb, 0, cb]])
    rz = np.array([[cg, -sg, 0], [sg, cg, 0], [0, 0, 1]])
    drx = np.array([[0, 0, 0], [0, -sa, -ca], [0, ca, -sa]])
    dry = np.array([[-sb, 0, cb], [0, 0, 0], [-cb, 0, -sb]])
    drz = np.array([[-sg, -cg, 0], [cg, -sg, 0], [0, 0, 0]])
    return [rz @ ry @ drx, rz @ dry @ rx, drz @ ry @ rx]


def init_candidates(mesh: Mesh, box_template: BoxGeom, h_s: int, h_r: float,
                    seed: int = 0) -> list[CandidateBox]:
    """Seed candidate boxes on approximately equidistant surface points.

    Samples ``h_s`` surface points, greedily rejects (in input order) any
    point within ``h_r`` of an accepted one, then places a copy of the
    template box at each survivor with +Z aligned to the anchor normal.

    Raises:
        ValueError: If no candidate survives the rejection radius.
    """
    if h_s <= 0:
        raise ValueError("h_s must be positive")
    if h_r <= 0:
        raise ValueError("h_r must be positive")
    samples = surface_sample(mesh, h_s, seed)
    accepted: list[int] = []
    pos = samples.position
    for i in range(len(samples)):
        p = pos[i]
        ok = True
        for j in accepted:
            d = p - pos[j]
            if d @ d < h_r * h_r:
                ok = False
                break
        if ok:
            accepted.append(i)
    if not accepted:
        raise ValueError("no candidates survive spacing rejection; reduce H_r")

    template_corners = box_template.corners()
    template_center = box_template.center
    out: list[CandidateBox] = []
    for k, i in enumerate(accepted):
        anchor = samples[i]
        r = rotation_to_normal(anchor.normal)
        base = (template_corners - template_center) @ r.T + anchor.position
        base_rotation = r @ box_template.rotation
        geom = BoxGeom(center=anchor.position, half_extents=box_template.half_extents,
                       rotation=base_rotation)
        out.append(CandidateBox(geom=geom, params=np.zeros(6), base_vertices=base,
                                base_rotation=base_rotation, anchor=anchor,
                                loss=None, index=k))
    return out


def transform_vertices(candidate: CandidateBox) -> np.ndarray:
    """Apply the candidate's 6 pose parameters to its base corners.

    Translation first, then rotation about the translated centroid.
    """
    alpha, beta, gamma, tx, ty, tz = candidate.params
    vbar = candidate.base_vertices + np.array([tx, ty, tz])
    c = vbar.mean(axis=0)
    r = euler_matrix(alpha, beta, gamma)
    return (vbar - c) @ r.T + c


def probe_weights(half_extents: np.ndarray, count: int) -> np.ndarray:
    """Affine corner weights for mid-plane perimeter probe points.

    The 4 front/back corner-pair midpoints come first; the remaining
    ``count - 4`` points are spread along the closed mid-plane quadrilateral,
    allocated per segment proportionally to segment length.
    """
    if count < 4:
        raise ValueError("probe count must be >= 4")
    mids = np.zeros((4, 8))
    for k in range(4):
        mids[k, k] = 0.5
        mids[k, k + 4] = 0.5
    hx, hy = float(half_extents[0]), float(half_extents[1])
    seg_len = np.array([2 * hx, 2 * hy, 2 * hx, 2 * hy])
    extra = count - 4
    exact = extra * seg_len / seg_len.sum()
    alloc = np.floor(exact).astype(int)
    remainder = exact - alloc
    short = extra - alloc.sum()
    if short > 0:
        for k in np.argsort(-remainder, kind="stable")[:short]:
            alloc[k] += 1
    rows = [mids]
    for k in range(4):
        nk = alloc[k]
        if nk == 0:
            continue
        t = (np.arange(nk) + 1.0) / (nk + 1.0)
        rows.append((1.0 - t)[:, None] * mids[k] + t[:, None] * mids[(k + 1) % 4])
    return np.vstack(rows)


def sample_probe_points(geom: BoxGeom, count: int) -> np.ndarray:
    """Probe points on the box mid-plane perimeter, including the midpoints."""
    return probe_weights(geom.half_extents, count) @ geom.corners()


def alignment_loss(points: np.ndarray, index: SpatialIndex) -> float:
    """Mean squared distance from probe points to the indexed surface."""
    d, _, _ = index.closest_point_many(points)
    return float(np.mean(d * d))


def _loss_and_gradient(params: np.ndarray, base: np.ndarray, weights: np.ndarray,
                       index: SpatialIndex) -> tuple[float, np.ndarray]:
    alpha, beta, gamma = params[:3]
    t = params[3:6]
    vbar = base + t
    c = vbar.mean(axis=0)
    r = euler_matrix(alpha, beta, gamma)
    q = weights @ vbar  # probe points before rotation
    probes = (q - c) @ r.T + c
    d, closest, _ = index.closest_point_many(probes)
    resid = probes - closest
    n = probes.shape[0]
    loss = float(np.mean(d * d))
    grad = np.zeros(6)
    # Closest points held fixed (envelope theorem); centroid held constant.
    grad[3:6] = (2.0 / n) * resid.sum(axis=0)
    qc = q - c
    for a, dr in enumerate(_euler_derivatives(alpha, beta, gamma)):
        grad[a] = (2.0 / n) * float(np.sum(resid * (qc @ dr.T)))
    return loss, grad


def loss_gradient(candidate: CandidateBox, index: SpatialIndex,
                  probe_count: int = 179) -> np.ndarray:
    """Analytic gradient of the alignment loss w.r.t. the 6 pose parameters."""
    weights = probe_weights(candidate.geom.half_extents, probe_count)
    _, grad = _loss_and_gradient(candidate.params, candidate.base_vertices,
                                 weights, index)
    return grad


def candidate_loss(candidate: CandidateBox, index: SpatialIndex,
                   probe_count: int = 179) -> float:
    weights = probe_weights(candidate.geom.half_extents, probe_count)
    loss, _ = _loss_and_gradient(candidate.params, candidate.base_vertices,
                                 weights, index)
    return loss


def _reposed(candidate: CandidateBox, params: np.ndarray, loss: float) -> CandidateBox:
    alpha, beta, gamma = params[:3]
    vbar = candidate.base_vertices + params[3:6]
    c = vbar.mean(axis=0)
    r = euler_matrix(alpha, beta, gamma)
    geom = BoxGeom(center=c, half_extents=candidate.geom.half_extents,
                   rotation=r @ candidate.base_rotation)
    return replace(candidate, geom=geom, params=params, loss=loss)


def optimize(candidates: list[CandidateBox], index: SpatialIndex,
             opts: OptimizerOptions | None = None) -> list[CandidateBox]:
    """Refine every candidate independently by gradient descent.

    Each candidate runs until its loss drops below ``stop_mean_loss`` or
    ``max_steps`` is reached; non-convergence is left for filtering. The
    result order matches the input and the run is deterministic.
    """
    opts = opts or OptimizerOptions()
    out: list[CandidateBox] = []
    weight_cache: dict[tuple[float, float], np.ndarray] = {}
    for cand in candidates:
        key = (float(cand.geom.half_extents[0]), float(cand.geom.half_extents[1]))
        weights = weight_cache.get(key)
        if weights is None:
            weights = probe_weights(cand.geom.half_extents, opts.probe_count)
            weight_cache[key] = weights
        params = cand.params.astype(np.float64).copy()
        loss, grad = _loss_and_gradient(params, cand.base_vertices, weights, index)
        steps = 0
        while loss >= opts.stop_mean_loss and steps < opts.max_steps:
            params = params - opts.learning_rate * grad
            loss, grad = _loss_and_gradient(params, cand.base_vertices, weights, index)
            steps += 1
        out.append(_reposed(cand, params, loss))
    return out


def posed_watermark_mesh(candidate: CandidateBox, glyph_mesh: Mesh,
                         template: BoxGeom) -> Mesh:
    """Place the canonical glyph mesh at the candidate's current pose."""
    v = (glyph_mesh.vertices - template.center) @ candidate.geom.rotation.T
    return Mesh(v + candidate.geom.center, glyph_mesh.faces)
