"""
Rotascan - Perception Training
Builds the band reduction and pixel classifier from a rendered training scene
and runs the trained bundle over corrected cubes
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np
from scipy import ndimage

from rotascan.imaging.cube_pipeline import build_correction_map, correct_distortion, reconstruct
from rotascan.imaging.scene_simulator import generate_scene, ground_truth_label_map, render_scan
from rotascan.models.config import DetectionSettings
from rotascan.models.cube import HyperspectralCube
from rotascan.models.geometry import GeometryContext, PrismConfig
from rotascan.models.perception import ClassifierSpec, DetectedObject, MnfModel
from rotascan.models.scene import SpectralSignature
from rotascan.perception.mnf import mnf_fit, mnf_transform
from rotascan.perception.object_detection import aggregate_objects, segment_objects
from rotascan.perception.pixel_classifier import PixelClassifier, predict_pixel_labels, train_pixel_classifier

logger = logging.getLogger(__name__)

DEFAULT_SAMPLES_PER_CLASS = 2000


@dataclass(eq=False)
class PerceptionBundle:
    """Everything classification needs at run time"""

    mnf: MnfModel
    classifier: PixelClassifier
    background: SpectralSignature
    class_names: List[str]

    @property
    def band_centers(self) -> np.ndarray:
        return self.background.band_centers


def labelled_training_pixels(labels: np.ndarray, valid: np.ndarray, class_count: int,
                             samples_per_class: int, rng: np.random.Generator):
    """(row, col, class id) of eroded object interiors, at most samples_per_class per class"""
    rows, cols, ids = [], [], []
    for class_id in range(1, class_count + 1):
        interior = ndimage.binary_erosion(labels == class_id) & valid
        r, c = np.nonzero(interior)
        if r.size > samples_per_class:
            keep = np.sort(rng.choice(r.size, samples_per_class, replace=False))
            r, c = r[keep], c[keep]
        rows.append(r)
        cols.append(c)
        ids.append(np.full(r.size, class_id))
    return np.concatenate(rows), np.concatenate(cols), np.concatenate(ids)


def train_perception(signatures: Sequence[SpectralSignature], background: SpectralSignature,
                     prism: PrismConfig, geom: GeometryContext,
                     spec: Optional[ClassifierSpec] = None,
                     keep_fraction: float = 0.7, retained_k: Optional[int] = None,
                     noise_sigma: float = 0.02, seed: int = 0,
                     samples_per_class: int = DEFAULT_SAMPLES_PER_CLASS,
                     objects_per_class: int = 2) -> PerceptionBundle:
    """Render a discrete training scene, fit MNF on it and train the pixel classifier on its interiors"""
    scene = generate_scene("discrete", signatures, objects_per_class * len(signatures), seed,
                           background=background, noise_sigma=noise_sigma)
    cmap = build_correction_map(geom)
    cube = correct_distortion(reconstruct(render_scan(scene, prism, geom), geom, scene.band_centers), cmap)
    truth = ground_truth_label_map(scene, geom)

    mnf = mnf_fit(cube, retained_k=retained_k, keep_fraction=keep_fraction)
    rng = np.random.default_rng(seed)
    rows, cols, labels = labelled_training_pixels(truth, cube.valid_mask, len(scene.class_names),
                                                  samples_per_class, rng)
    reduced = mnf_transform(cube.data[rows, cols], mnf)

    spec = spec or ClassifierSpec(class_count=len(scene.class_names), seed=seed)
    if spec.class_count != len(scene.class_names):
        spec = replace(spec, class_count=len(scene.class_names))
    classifier, accuracy = train_pixel_classifier(spec, reduced, labels, class_names=scene.class_names)
    logger.info(f"✅ Perception trained on {labels.size} pixels, {len(scene.class_names)} classes, "
                f"train accuracy {accuracy:.4f}")
    return PerceptionBundle(mnf=mnf, classifier=classifier, background=background,
                            class_names=list(scene.class_names))


def detect_objects(cube: HyperspectralCube, bundle: PerceptionBundle,
                   detection: Optional[DetectionSettings] = None) -> List[DetectedObject]:
    """Segment a corrected cube, classify the object pixels and aggregate them per object"""
    detection = detection or DetectionSettings()
    masks = segment_objects(cube, bundle.background, detection.angle_threshold, detection.min_area)
    if not masks:
        return []
    labels = predict_pixel_labels(cube, masks, bundle.classifier, bundle.mnf)
    return aggregate_objects(labels, masks, cube, bundle.mnf,
                             n_components=detection.pca_components,
                             outlier_percentile=detection.outlier_percentile,
                             suction_count=detection.suction_count,
                             cup_radius_mm=detection.cup_radius_mm)
