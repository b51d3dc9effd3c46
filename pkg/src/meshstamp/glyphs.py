"""3D text generation from an embedded 5x7 block font.

Each character is a set of filled cells on a 5x7 grid; every filled cell
becomes a closed rectangular prism. Cells of one character touch along faces
or corners (never interpenetrate), so each character welds into a single
connected, zero-boundary-edge solid while characters stay disjoint.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mesh import Mesh
from .shapes import make_box

_FONT_ROWS = 7
_FONT_COLS = 5

# 5x7 dot-matrix shapes, rows top to bottom, '#' = filled. Letters with an
# enclosed counter (A, B, O, P, R, 0) use full-width bars so the ring of
# cells around the counter is edge-connected: the surface patch inside the
# counter then becomes a true topological island under the removal attack.
_FONT: dict[str, tuple[str, ...]] = {
    "A": ("#####", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "B": ("#####", "#...#", "#...#", "#####", "#...#", "#...#", "#####"),
    "C": (".####", "#....", "#....", "#....", "#....", "#....", ".####"),
    "D": ("####.", "#...#", "#...#", "#...#", "#...#", "#...#", "####."),
    "E": ("#####", "#....", "#....", "####.", "#....", "#....", "#####"),
    "F": ("#####", "#....", "#....", "####.", "#....", "#....", "#...."),
    "G": (".####", "#....", "#....", "#.###", "#...#", "#...#", ".###."),
    "H": ("#...#", "#...#", "#...#", "#####", "#...#", "#...#", "#...#"),
    "I": (".###.", "..#..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "J": ("..###", "...#.", "...#.", "...#.", "...#.", "#..#.", ".##.."),
    "K": ("#...#", "#..#.", "#.#..", "##...", "#.#..", "#..#.", "#...#"),
    "L": ("#....", "#....", "#....", "#....", "#....", "#....", "#####"),
    "M": ("#...#", "##.##", "#.#.#", "#.#.#", "#...#", "#...#", "#...#"),
    "N": ("#...#", "##..#", "#.#.#", "#..##", "#...#", "#...#", "#...#"),
    "O": ("#####", "#...#", "#...#", "#...#", "#...#", "#...#", "#####"),
    "P": ("#####", "#...#", "#...#", "#####", "#....", "#....", "#...."),
    "Q": (".###.", "#...#", "#...#", "#...#", "#.#.#", "#..#.", ".##.#"),
    "R": ("#####", "#...#", "#...#", "#####", "#.#..", "#..#.", "#...#"),
    "S": (".####", "#....", "#....", ".###.", "....#", "....#", "####."),
    "T": ("#####", "..#..", "..#..", "..#..", "..#..", "..#..", "..#.."),
    "U": ("#...#", "#...#", "#...#", "#...#", "#...#", "#...#", ".###."),
    "V": ("#...#", "#...#", "#...#", "#...#", ".#.#.", ".#.#.", "..#.."),
    "W": ("#...#", "#...#", "#...#", "#.#.#", "#.#.#", "##.##", "#...#"),
    "X": ("#...#", "#...#", ".#.#.", "..#..", ".#.#.", "#...#", "#...#"),
    "Y": ("#...#", "#...#", ".#.#.", "..#..", "..#..", "..#..", "..#.."),
    "Z": ("#####", "....#", "...#.", "..#..", ".#...", "#....", "#####"),
    "0": ("#####", "#...#", "#..##", "#.#.#", "##..#", "#...#", "#####"),
    "1": ("..#..", ".##..", "..#..", "..#..", "..#..", "..#..", ".###."),
    "2": (".###.", "#...#", "....#", "...#.", "..#..", ".#...", "#####"),
    "3": ("#####", "...#.", "..#..", "...#.", "....#", "#...#", ".###."),
    "4": ("...#.", "..##.", ".#.#.", "#..#.", "#####", "...#.", "...#."),
    "5": ("#####", "#....", "####.", "....#", "....#", "#...#", ".###."),
    "6": ("..##.", ".#...", "#....", "####.", "#...#", "#...#", ".###."),
    "7": ("#####", "....#", "...#.", "..#..", ".#...", ".#...", ".#..."),
    "8": (".###.", "#...#", "#...#", ".###.", "#...#", "#...#", ".###."),
    "9": (".###.", "#...#", "#...#", ".####", "....#", "...#.", ".##.."),
    " ": (".....", ".....", ".....", ".....", ".....", ".....", "....."),
}

SUPPORTED_CHARACTERS = frozenset(_FONT)

# Horizontal gap between characters, as a fraction of the character width.
_CHAR_GAP = 0.15


@dataclass(frozen=True)
class WatermarkSpec:
    """Text watermark parameters.

    Attributes:
        text: Watermark string; letters are case-folded to uppercase.
        size: Glyph height in model units.
        thickness: Front-to-back extrusion depth.
    """

    text: str
    size: float = 4.0
    thickness: float = 0.5

    def __post_init__(self):
        object.__setattr__(self, "text", self.text.strip().upper())
        if not self.text:
            raise ValueError("watermark text is empty")
        if self.size <= 0:
            raise ValueError("watermark size must be > 0")
        if self.thickness <= 0:
            raise ValueError("watermark thickness must be > 0")
        bad = sorted(set(self.text) - SUPPORTED_CHARACTERS)
        if bad:
            raise ValueError(
                "unsupported watermark character(s): " + ", ".join(repr(c) for c in bad)
            )


@dataclass(frozen=True)
class BoxGeom:
    """Oriented box: center, half extents, and a rotation whose columns are
    the local axes. Local +Z is the watermark front normal."""

    center: np.ndarray
    half_extents: np.ndarray
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=np.float64))
        object.__setattr__(self, "half_extents",
                           np.asarray(self.half_extents, dtype=np.float64))
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64))

    @property
    def front_normal(self) -> np.ndarray:
        return self.rotation[:, 2]

    def corners(self) -> np.ndarray:
        """The 8 corners: front face (+z) CCW first, then matching back face.

        Order: (-x,-y,+z), (+x,-y,+z), (+x,+y,+z), (-x,+y,+z), then the same
        x/y sequence at -z.
        """
        hx, hy, hz = self.half_extents
        local = np.array([
            [-hx, -hy, hz], [hx, -hy, hz], [hx, hy, hz], [-hx, hy, hz],
            [-hx, -hy, -hz], [hx, -hy, -hz], [hx, hy, -hz], [-hx, hy, -hz],
        ])
        return local @ self.rotation.T + self.center

    def contains(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        """Boolean mask of points inside the box (with optional slack)."""
        local = (np.atleast_2d(points) - self.center) @ self.rotation
        return np.all(np.abs(local) <= self.half_extents + slack, axis=1)

    def front_face_area(self) -> float:
        return float(4.0 * self.half_extents[0] * self.half_extents[1])

    def front_face_grid(self, count: int) -> np.ndarray:
        """Roughly ``count`` points on a regular grid over the front face."""
        g = max(1, int(round(np.sqrt(count))))
        u = (np.arange(g) + 0.5) / g * 2.0 - 1.0
        gu, gv = np.meshgrid(u, u, indexing="ij")
        hx, hy, hz = self.half_extents
        local = np.column_stack([gu.ravel() * hx, gv.ravel() * hy,
                                 np.full(gu.size, hz)])
        return local @ self.rotation.T + self.center

    def volume(self) -> float:
        return float(8.0 * np.prod(self.half_extents))


def char_cells(ch: str) -> list[tuple[int, int]]:
    """Filled (row, col) cells for one supported character, row 0 at top."""
    rows = _FONT[ch]
    return [(r, c) for r in range(_FONT_ROWS) for c in range(_FONT_COLS)
            if rows[r][c] == "#"]


def text_to_3d(spec: WatermarkSpec) -> tuple[Mesh, np.ndarray]:
    """Generate the 3D text mesh for a watermark spec.

    The mesh is centered at the origin with the glyph front facing +Z; its
    Y extent equals ``spec.size`` and its Z extent equals ``spec.thickness``.
    Generation is deterministic.

    Returns:
        (mesh, char_index) where char_index labels each face with the index
        of the character it belongs to (spaces excluded).
    """
    cell = spec.size / _FONT_ROWS
    char_w = cell * _FONT_COLS
    advance = char_w * (1.0 + _CHAR_GAP)
    z0, z1 = -spec.thickness / 2.0, spec.thickness / 2.0

    parts: list[Mesh] = []
    char_ids: list[np.ndarray] = []
    x_cursor = 0.0
    glyph_idx = 0
    for ch in spec.text:
        cells = char_cells(ch)
        for r, c in cells:
            x0 = x_cursor + c * cell
            y0 = (_FONT_ROWS - 1 - r) * cell
            box = make_box((x0, y0, z0), (x0 + cell, y0 + cell, z1))
            parts.append(box)
            char_ids.append(np.full(box.n_faces, glyph_idx, dtype=np.int64))
        if cells:
            glyph_idx += 1
        x_cursor += advance
    if not parts:
        raise ValueError("watermark text contains no drawable characters")

    offset = 0
    all_v = []
    all_f = []
    for m in parts:
        all_v.append(m.vertices)
        all_f.append(m.faces + offset)
        offset += m.n_vertices
    v = np.vstack(all_v)
    f = np.vstack(all_f)
    lo = v.min(axis=0)
    hi = v.max(axis=0)
    v = v - (lo + hi) / 2.0
    return Mesh(v, f), np.concatenate(char_ids)


def oriented_bounding_box(mesh: Mesh) -> BoxGeom:
    """Bounding box of a canonical (origin-centered, +Z-facing) glyph mesh.

    Glyphs are generated axis-aligned, so the minimal box is the AABB,
    reported with identity rotation.
    """
    lo, hi = mesh.aabb()
    return BoxGeom(center=(lo + hi) / 2.0, half_extents=(hi - lo) / 2.0,
                   rotation=np.eye(3))
