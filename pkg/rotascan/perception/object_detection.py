"""
Rotascan - Object Detection
Stage two of recognition: background segmentation, PCA-filtered majority vote
per object and ranked suction points
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Protocol, Sequence, Tuple

import numpy as np
from scipy import ndimage
from sklearn.decomposition import PCA

from rotascan.errors import DetectionError
from rotascan.models.cube import HyperspectralCube
from rotascan.models.perception import (
    UNKNOWN_CLASS_ID,
    UNKNOWN_CLASS_NAME,
    DetectedObject,
    MnfModel,
    PixelLabelMap,
    SegmentationMask,
    SuctionPoint,
)
from rotascan.models.scene import SpectralSignature
from rotascan.perception.mnf import mnf_transform
from rotascan.perception.spectral_angle import spectral_angle_map

logger = logging.getLogger(__name__)

DEFAULT_ANGLE_THRESHOLD = 0.08
DEFAULT_MIN_AREA = 25
DEFAULT_PCA_COMPONENTS = 3
DEFAULT_OUTLIER_PERCENTILE = 95.0
MIN_VOTES = 5
DEFAULT_CUP_RADIUS_MM = 12.0
DEFAULT_SUCTION_COUNT = 3


class Segmenter(Protocol):
    def __call__(self, cube: HyperspectralCube) -> List[SegmentationMask]:
        ...


@dataclass(frozen=True)
class SpectralAngleSegmenter:
    """Foreground = valid pixels further than angle_threshold from the background spectrum"""

    background: SpectralSignature
    angle_threshold: float = DEFAULT_ANGLE_THRESHOLD
    min_area: int = DEFAULT_MIN_AREA

    def __call__(self, cube: HyperspectralCube) -> List[SegmentationMask]:
        return segment_objects(cube, self.background, self.angle_threshold, self.min_area)


def segment_objects(cube: HyperspectralCube, background: SpectralSignature,
                    angle_threshold: float = DEFAULT_ANGLE_THRESHOLD,
                    min_area: int = DEFAULT_MIN_AREA) -> List[SegmentationMask]:
    """4-connected foreground components of at least min_area pixels; empty list means no objects"""
    if not cube.corrected:
        raise DetectionError("segmentation needs a distortion-corrected cube")
    if background.n_bands != cube.n_bands:
        raise DetectionError(f"background has {background.n_bands} bands, cube has {cube.n_bands}")
    angles = spectral_angle_map(cube.data, background.reflectance)
    foreground = (angles > angle_threshold) & cube.valid_mask
    components, count = ndimage.label(foreground)
    if count == 0:
        return []
    areas = np.bincount(components.ravel(), minlength=count + 1)
    masks = []
    for label in range(1, count + 1):
        if areas[label] < min_area:
            continue
        masks.append(SegmentationMask(instance_id=len(masks) + 1, mask=components == label))
    logger.debug(f"Segmented {len(masks)} objects ({count - len(masks)} small components dropped)")
    return masks


def _filter_outliers(features: np.ndarray, n_components: int, percentile: float) -> np.ndarray:
    """Keep pixels whose PCA reconstruction error is within the given percentile"""
    n_samples, n_features = features.shape
    p = min(n_components, n_samples - 1, n_features)
    if p < 1 or np.allclose(features.var(axis=0), 0.0):
        return np.ones(n_samples, dtype=bool)
    pca = PCA(n_components=p, svd_solver="full")
    projected = pca.fit_transform(features)
    errors = np.sum((features - pca.inverse_transform(projected)) ** 2, axis=1)
    return errors <= np.percentile(errors, percentile)


def majority_vote(labels: np.ndarray, confidence: np.ndarray) -> Tuple[int, float]:
    """
    Winning label and its share of the votes.
    Ties go to the higher summed confidence, then to the lower class id.
    """
    ids, counts = np.unique(labels, return_counts=True)
    conf_sums = np.array([confidence[labels == i].sum() for i in ids])
    order = np.lexsort((ids, -conf_sums, -counts))
    winner = order[0]
    return int(ids[winner]), float(counts[winner] / labels.size)


def suction_points(mask: np.ndarray, pitch: float, count: int = 1,
                   cup_radius_mm: float = DEFAULT_CUP_RADIUS_MM) -> List[SuctionPoint]:
    """
    Ranked contact points inside a mask.
    Rank 1 is the centroid when it falls inside, otherwise the mask pixel nearest to it.
    Further ranks take the highest-clearance pixels at least one cup radius from every earlier point.
    """
    if count < 1:
        raise DetectionError(f"suction point count must be >= 1, got {count}")
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise DetectionError("cannot place suction points on an empty mask")

    clearance = ndimage.distance_transform_edt(np.pad(mask, 1))[1:-1, 1:-1]
    rows, cols = np.nonzero(mask)
    center = (rows.mean(), cols.mean())
    r0, c0 = int(round(center[0])), int(round(center[1]))
    if 0 <= r0 < mask.shape[0] and 0 <= c0 < mask.shape[1] and mask[r0, c0]:
        first = (r0, c0)
    else:
        nearest = np.argmin((rows - center[0]) ** 2 + (cols - center[1]) ** 2)
        first = (int(rows[nearest]), int(cols[nearest]))

    chosen = [first]
    separation = cup_radius_mm / pitch
    if count > 1:
        ranking = np.argsort(-clearance[rows, cols], kind="stable")
        for index in ranking:
            if len(chosen) >= count:
                break
            candidate = (int(rows[index]), int(cols[index]))
            if all(np.hypot(candidate[0] - r, candidate[1] - c) >= separation for r, c in chosen):
                chosen.append(candidate)

    return [SuctionPoint(rank=i + 1, row=r, col=c, clearance_mm=float(clearance[r, c] * pitch))
            for i, (r, c) in enumerate(chosen)]


def aggregate_objects(labels: PixelLabelMap, masks: Sequence[SegmentationMask], cube: HyperspectralCube,
                      mnf: Optional[MnfModel] = None,
                      n_components: int = DEFAULT_PCA_COMPONENTS,
                      outlier_percentile: float = DEFAULT_OUTLIER_PERCENTILE,
                      suction_count: int = DEFAULT_SUCTION_COUNT,
                      cup_radius_mm: float = DEFAULT_CUP_RADIUS_MM) -> List[DetectedObject]:
    """
    Object labels from pixel labels.
    Per mask: PCA on the (MNF-reduced when given) spectra, drop reconstruction outliers,
    majority-vote the rest. Masks under MIN_VOTES pixels come back as unknown.
    """
    if labels.shape != cube.spatial_shape:
        raise DetectionError(f"label map {labels.shape} and cube {cube.spatial_shape} differ")
    pitch = cube.pitch if cube.pitch is not None else cube.geom.line_resolution_dx
    detected = []
    for segment in masks:
        region = np.asarray(segment.mask, dtype=bool)
        if region.shape != labels.shape:
            raise DetectionError(f"mask {segment.instance_id} shape {region.shape} != label map {labels.shape}")
        area = int(region.sum())
        if area == 0:
            continue
        if area < MIN_VOTES:
            class_id, purity = UNKNOWN_CLASS_ID, 0.0
        else:
            features = cube.data[region].astype(np.float64)
            if mnf is not None:
                features = mnf_transform(features, mnf)
            keep = _filter_outliers(features, n_components, outlier_percentile)
            class_id, purity = majority_vote(labels.labels[region][keep], labels.confidence[region][keep])
        name = UNKNOWN_CLASS_NAME if class_id == UNKNOWN_CLASS_ID else labels.class_name(class_id)
        points = suction_points(region, pitch, suction_count, cup_radius_mm) if suction_count else []
        detected.append(DetectedObject(instance_id=segment.instance_id, class_id=class_id, class_name=name,
                                       purity=purity, bbox=segment.bbox, centroid=segment.centroid,
                                       pixel_count=area, suction_points=points, mask=region))
    logger.info(f"📊 Aggregated {len(detected)} objects: "
                f"{', '.join(f'#{o.instance_id}={o.class_name}' for o in detected) or 'none'}")
    return detected
