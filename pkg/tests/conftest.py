"""
Shared fixtures: a reduced-resolution scan profile and a perception bundle trained once per session
"""

import numpy as np
import pytest

from rotascan.imaging.cube_pipeline import build_correction_map, correct_distortion, reconstruct
from rotascan.imaging.scene_simulator import render_scan
from rotascan.imaging.signatures import background_signature, default_band_centers, default_signatures
from rotascan.models.geometry import GeometryContext, PrismConfig
from rotascan.models.perception import ClassifierSpec
from rotascan.perception.training import train_perception

TEST_BANDS = 16


@pytest.fixture(scope="session")
def geom():
    return GeometryContext(working_height=600.0, line_resolution_dx=2.5, rows_H=175, cols_W=96)


@pytest.fixture(scope="session")
def prism():
    return PrismConfig()


@pytest.fixture(scope="session")
def band_centers():
    return default_band_centers(TEST_BANDS)


@pytest.fixture(scope="session")
def signatures(band_centers):
    return default_signatures(band_centers)


@pytest.fixture(scope="session")
def background(band_centers):
    return background_signature(band_centers)


@pytest.fixture(scope="session")
def cmap(geom):
    return build_correction_map(geom)


@pytest.fixture(scope="session")
def scan_cube(prism, geom, cmap):
    """Render, reconstruct and correct a scene in one call"""

    def scan(scene):
        raw = reconstruct(render_scan(scene, prism, geom), geom, scene.band_centers)
        return correct_distortion(raw, cmap)

    return scan


@pytest.fixture(scope="session")
def perception_bundle(signatures, background, prism, geom):
    spec = ClassifierSpec(class_count=len(signatures), epochs=30, seed=0)
    return train_perception(signatures, background, prism, geom, spec=spec, noise_sigma=0.02, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
