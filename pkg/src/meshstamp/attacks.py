"""Robustness attacks: plane cropping and unauthorized watermark removal."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .csg import boolean_op
from .mesh import Mesh, MeshError


@dataclass
class AttackSpec:
    """Parameters for one attack run.

    ``crop_plane`` is (point, unit normal): material on the normal side of
    the plane is removed. ``fraction`` is the alternative parameterization,
    the volume fraction to keep when cropping along ``axis``.
    """

    kind: str = "crop"
    crop_plane: tuple[np.ndarray, np.ndarray] | None = None
    fraction: float | None = None
    axis: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("crop", "removal"):
            raise ValueError(f"unknown attack kind: {self.kind!r}")
        if self.fraction is not None and not 0.0 < self.fraction <= 1.0:
            raise ValueError("crop fraction must be in (0, 1]")


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = normal / np.linalg.norm(normal)
    helper = np.array([1.0, 0.0, 0.0])
    if abs(n[0]) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    u = np.cross(n, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(n, u)


def crop_attack(mesh: Mesh, plane_point: np.ndarray, plane_normal: np.ndarray,
                labels: np.ndarray | None = None) -> tuple[Mesh, np.ndarray]:
    """Remove everything on the positive side of a plane.

    Realized as a boolean difference against a large box aligned with the
    plane. Newly exposed cut faces are labeled "target". When the plane does
    not reach the mesh the input is returned unchanged with a warning.

    Raises:
        MeshError: If the cut would remove the entire mesh.
    """
    p = np.asarray(plane_point, dtype=np.float64)
    n = np.asarray(plane_normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    side = (mesh.vertices - p) @ n
    if np.all(side <= 0):
        warnings.warn("crop plane does not intersect the mesh; returning input")
        lab = (labels.copy() if labels is not None
               else np.asarray(["target"] * mesh.n_faces, dtype=object))
        return mesh, lab
    if np.all(side >= 0):
        raise MeshError("crop plane removes the entire mesh")

    lo, hi = mesh.aabb()
    span = float(np.linalg.norm(hi - lo)) * 2.0 + 1.0
    u, v = _plane_basis(n)
    # Cutting volume: a large box sitting on the plane, extending along +n.
    cut_v = []
    for sn in (0.0, span):
        for (su, sv) in ((-span, -span), (span, -span), (span, span), (-span, span)):
            cut_v.append(p + u * su + v * sv + n * sn)
    cut_v = np.asarray(cut_v)
    cut_f = np.array([
        [0, 2, 1], [0, 3, 2],          # base (on the plane), normal -n
        [4, 5, 6], [4, 6, 7],          # far cap, normal +n
        [0, 1, 5], [0, 5, 4],
        [1, 2, 6], [1, 6, 5],
        [2, 3, 7], [2, 7, 6],
        [3, 0, 4], [3, 4, 7],
    ])
    cutter = Mesh(cut_v, cut_f)
    if cutter.signed_volume() < 0:
        cutter = Mesh(cut_v, cut_f[:, ::-1])
    lab = (labels if labels is not None
           else np.asarray(["target"] * mesh.n_faces, dtype=object))
    result = boolean_op(mesh, cutter, "difference", labels_a=lab,
                        labels_b=np.asarray(["target"] * 12, dtype=object))
    if result.is_empty:
        raise MeshError("crop removed the entire mesh")
    return result.mesh, result.labels


def clipped_volume(mesh: Mesh, plane_point: np.ndarray,
                   plane_normal: np.ndarray) -> float:
    """Volume of the mesh region on the non-positive side of the plane.

    Uses signed tetrahedra with the apex placed on the plane, which makes
    the (implicit) planar cap contribute exactly zero.
    """
    p = np.asarray(plane_point, dtype=np.float64)
    n = np.asarray(plane_normal, dtype=np.float64)
    n = n / np.linalg.norm(n)
    tri = mesh.vertices[mesh.faces] - p
    d = tri @ n  # (F, 3) signed vertex distances
    below = d <= 0
    n_below = below.sum(axis=1)

    full = n_below == 3
    vol = float(np.einsum("ij,ij->i", tri[full, 0],
                          np.cross(tri[full, 1], tri[full, 2])).sum()) / 6.0

    for fi in np.nonzero((n_below == 1) | (n_below == 2))[0]:
        poly = []
        for k in range(3):
            a, b = tri[fi, k], tri[fi, (k + 1) % 3]
            da, db = d[fi, k], d[fi, (k + 1) % 3]
            if da <= 0:
                poly.append(a)
            if (da < 0 < db) or (db < 0 < da):
                t = da / (da - db)
                poly.append(a + t * (b - a))
        for k in range(1, len(poly) - 1):
            vol += float(poly[0] @ np.cross(poly[k], poly[k + 1])) / 6.0
    return vol


def crop_plane_for_fraction(mesh: Mesh, fraction: float, axis: int = 0,
                            tolerance: float = 0.01
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Find a plane orthogonal to ``axis`` keeping ``fraction`` of the volume.

    Binary-searches the plane offset until the kept volume is within
    ``tolerance`` (relative) of the target. Material above the returned
    plane (toward +axis) is what a subsequent crop removes.
    """
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must be in (0, 1]")
    total = mesh.signed_volume()
    if total <= 0:
        raise MeshError("mesh must be watertight with positive volume")
    normal = np.zeros(3)
    normal[axis] = 1.0
    lo, hi = mesh.aabb()
    a, b = float(lo[axis]), float(hi[axis])
    target = fraction * total
    for _ in range(80):
        mid = (a + b) / 2.0
        point = np.zeros(3)
        point[axis] = mid
        kept = clipped_volume(mesh, point, normal)
        if abs(kept - target) <= tolerance * target:
            break
        if kept < target:
            a = mid
        else:
            b = mid
    point = np.zeros(3)
    point[axis] = (a + b) / 2.0
    return point, normal


def removal_attack(mesh: Mesh, labels: np.ndarray) -> tuple[Mesh, np.ndarray]:
    """Delete all watermark-labeled faces and their exclusive vertices.

    The holes left behind form the watermark silhouette. Target faces are
    never touched.

    Raises:
        ValueError: If no face carries a watermark label.
    """
    labels = np.asarray(labels, dtype=object)
    if labels.shape[0] != mesh.n_faces:
        raise ValueError("label array must match face count")
    wm = np.array([str(l).startswith("watermark_") for l in labels])
    if not wm.any():
        raise ValueError("no watermark-labeled faces to remove")
    keep_faces = mesh.faces[~wm]
    used, new_idx = np.unique(keep_faces, return_inverse=True)
    out = Mesh(mesh.vertices[used], new_idx.reshape(-1, 3))
    return out, labels[~wm]
