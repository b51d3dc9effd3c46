import numpy as np
import pytest

import meshstamp as ms
from meshstamp.mesh import normalize_model
from meshstamp.shapes import (make_cube, make_grid_plane, make_slab,
                              make_torus, make_uv_sphere)


@pytest.fixture(scope="session")
def cube():
    return make_cube(1.0)


@pytest.fixture(scope="session")
def sphere30():
    """5000-face sphere normalized to the standard model scale."""
    return normalize_model(make_uv_sphere(1.0, 50, 50), 30.0)


@pytest.fixture(scope="session")
def sphere30_index(sphere30):
    return ms.SpatialIndex(sphere30)


@pytest.fixture(scope="session")
def slab30():
    return make_slab(30.0, 2.0, 24)


@pytest.fixture(scope="session")
def slab30_index(slab30):
    return ms.SpatialIndex(slab30)


@pytest.fixture(scope="session")
def torus30():
    return normalize_model(make_torus(10.0, 4.0, 64, 32), 30.0)


@pytest.fixture(scope="session")
def plane_patch():
    """Open flat plane patch at z=0."""
    return make_grid_plane(30.0, 20)


@pytest.fixture(scope="session")
def random_blob():
    """Small random-ish closed mesh (deformed sphere, ~200 faces)."""
    rng = np.random.default_rng(11)
    base = make_uv_sphere(1.0, 10, 10)
    bump = 1.0 + 0.25 * np.sin(3 * base.vertices[:, 0]) * np.cos(2 * base.vertices[:, 1])
    return ms.Mesh(base.vertices * bump[:, None], base.faces)


@pytest.fixture(scope="session")
def glyph_w():
    mesh, _ = ms.text_to_3d(ms.WatermarkSpec("W", 4.0, 0.5))
    return mesh


@pytest.fixture(scope="session")
def template_w(glyph_w):
    return ms.oriented_bounding_box(glyph_w)
