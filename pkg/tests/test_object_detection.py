import numpy as np
import pytest

from rotascan.errors import DetectionError
from rotascan.imaging.scene_simulator import DISCRETE, generate_scene, ground_truth_label_map
from rotascan.imaging.signatures import default_band_centers, default_signatures
from rotascan.models.cube import HyperspectralCube
from rotascan.models.geometry import GeometryContext
from rotascan.models.perception import UNKNOWN_CLASS_ID, PixelLabelMap, SegmentationMask
from rotascan.perception.object_detection import (
    SpectralAngleSegmenter,
    aggregate_objects,
    majority_vote,
    segment_objects,
    suction_points,
)
from rotascan.perception.training import detect_objects

CLASS_NAMES = ["linen", "silk", "wool", "acetate"]


def _flat_cube(rng, shape=(20, 20), bands=8):
    spectrum = default_signatures(default_band_centers(bands))[1].reflectance
    data = spectrum + rng.normal(scale=0.01, size=shape + (bands,))
    return HyperspectralCube(data=data, geom=GeometryContext(line_resolution_dx=2.5),
                             band_centers=default_band_centers(bands), corrected=True, pitch=2.5)


def test_vote_survives_label_flips():
    rng = np.random.default_rng(42)
    cube = _flat_cube(rng)
    region = np.zeros(cube.spatial_shape, dtype=bool)
    region[4:16, 4:16] = True
    masks = [SegmentationMask(1, region)]
    agreed = 0
    trials = 1000
    for _ in range(trials):
        labels = np.zeros(cube.spatial_shape, dtype=np.int64)
        labels[region] = 2
        flips = region & (rng.random(cube.spatial_shape) < 0.1)
        labels[flips] = rng.choice([1, 3, 4], size=int(flips.sum()))
        confidence = rng.uniform(0.5, 1.0, size=cube.spatial_shape)
        label_map = PixelLabelMap(labels, confidence, CLASS_NAMES)
        detected = aggregate_objects(label_map, masks, cube, suction_count=0)
        agreed += detected[0].class_id == 2
    assert agreed / trials >= 0.999


def test_majority_vote_tie_breaks():
    labels = np.array([1, 1, 2, 2, 3])
    assert majority_vote(labels, np.array([0.5, 0.5, 0.9, 0.9, 1.0])) == (2, pytest.approx(0.4))
    assert majority_vote(labels, np.array([0.7, 0.7, 0.7, 0.7, 1.0]))[0] == 1
    assert majority_vote(np.array([4, 4, 4, 1]), np.ones(4)) == (4, 0.75)


def test_tiny_mask_is_unknown(rng):
    cube = _flat_cube(rng)
    region = np.zeros(cube.spatial_shape, dtype=bool)
    region[0, :3] = True
    labels = PixelLabelMap(np.where(region, 2, 0), np.ones(cube.spatial_shape), CLASS_NAMES)
    detected = aggregate_objects(labels, [SegmentationMask(7, region)], cube)
    assert detected[0].class_id == UNKNOWN_CLASS_ID
    assert detected[0].class_name == "unknown"
    assert not detected[0].is_known
    assert detected[0].instance_id == 7


def test_aggregate_checks_shapes(rng):
    cube = _flat_cube(rng)
    labels = PixelLabelMap(np.zeros((5, 5), dtype=np.int64), np.ones((5, 5)), CLASS_NAMES)
    with pytest.raises(DetectionError):
        aggregate_objects(labels, [], cube)


def test_suction_points_on_a_square():
    mask = np.zeros((41, 41), dtype=bool)
    mask[10:31, 10:31] = True
    points = suction_points(mask, pitch=2.5, count=3, cup_radius_mm=12.0)
    assert [p.rank for p in points] == [1, 2, 3]
    assert (points[0].row, points[0].col) == (20, 20)
    assert points[0].clearance_mm == pytest.approx(11 * 2.5)
    for a in points:
        assert mask[a.row, a.col]
        assert a.clearance_mm <= points[0].clearance_mm
        for b in points:
            if a is not b:
                assert np.hypot(a.row - b.row, a.col - b.col) >= 12.0 / 2.5


def test_suction_point_falls_back_to_nearest_pixel_on_a_ring():
    yy, xx = np.mgrid[:41, :41]
    radius = np.hypot(yy - 20, xx - 20)
    ring = (radius >= 8) & (radius <= 14)
    first = suction_points(ring, pitch=1.0)[0]
    assert ring[first.row, first.col]
    assert np.hypot(first.row - 20, first.col - 20) == pytest.approx(8.0)


def test_suction_point_errors():
    with pytest.raises(DetectionError):
        suction_points(np.zeros((5, 5), dtype=bool), pitch=1.0)
    with pytest.raises(DetectionError):
        suction_points(np.ones((5, 5), dtype=bool), pitch=1.0, count=0)


def test_segmentation_requires_corrected_cube(geom, background):
    raw = HyperspectralCube(data=np.zeros((geom.rows_H, geom.cols_W, background.n_bands)), geom=geom,
                            band_centers=background.band_centers)
    with pytest.raises(DetectionError, match="corrected"):
        segment_objects(raw, background)


def test_segmentation_drops_small_components(background, geom):
    data = np.tile(background.reflectance, (30, 30, 1))
    data[2:12, 2:12] = default_signatures(background.band_centers)[0].reflectance
    data[20:23, 20:23] = default_signatures(background.band_centers)[2].reflectance
    cube = HyperspectralCube(data=data, geom=geom, band_centers=background.band_centers,
                             corrected=True, pitch=geom.line_resolution_dx)
    masks = SpectralAngleSegmenter(background)(cube)
    assert len(masks) == 1
    assert masks[0].area == 100
    assert masks[0].bbox == (2, 2, 11, 11)
    assert masks[0].centroid == pytest.approx((6.5, 6.5))


def test_detect_objects_on_a_discrete_scene(perception_bundle, signatures, background, geom, scan_cube):
    scene = generate_scene(DISCRETE, signatures, 6, seed=31, background=background, noise_sigma=0.02)
    cube = scan_cube(scene)
    truth = ground_truth_label_map(scene, geom)
    objects = detect_objects(cube, perception_bundle)
    assert len(objects) == 6
    for obj in objects:
        row, col = obj.suction_points[0].row, obj.suction_points[0].col
        assert obj.class_id == truth[row, col]
        assert obj.class_name == perception_bundle.class_names[obj.class_id - 1]
        assert obj.purity >= 0.7
        assert len(obj.suction_points) == 3


def test_overlapping_same_class_squares_merge(background, geom):
    silk = default_signatures(background.band_centers)[1].reflectance
    data = np.tile(background.reflectance, (40, 40, 1))
    data[5:20, 5:20] = silk
    data[12:30, 14:32] = silk
    cube = HyperspectralCube(data=data, geom=geom, band_centers=background.band_centers,
                             corrected=True, pitch=geom.line_resolution_dx)
    masks = segment_objects(cube, background)
    assert len(masks) == 1
    expected = np.zeros((40, 40), dtype=bool)
    expected[5:20, 5:20] = True
    expected[12:30, 14:32] = True
    assert np.array_equal(masks[0].mask, expected)
    assert masks[0].bbox == (5, 5, 29, 31)


@pytest.mark.parametrize("radius, pitch", [(12, 1.0), (15, 2.5)])
def test_suction_point_on_a_disk_clears_the_radius(radius, pitch):
    yy, xx = np.mgrid[:61, :61]
    disk = np.hypot(yy - 30, xx - 30) <= radius
    point = suction_points(disk, pitch=pitch, count=1)[0]
    assert (point.row, point.col) == (30, 30)
    assert abs(point.clearance_mm - radius * pitch) <= pitch
