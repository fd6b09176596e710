"""
Rotascan - Perception Models
Band reduction, classifier configuration, pixel/object level results and suction points
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from rotascan.errors import SpectralModelError
from rotascan.models.geometry import GeometryContext

# Object label assigned when a mask is too small to vote
UNKNOWN_CLASS_ID = -1
UNKNOWN_CLASS_NAME = "unknown"


@dataclass(eq=False)
class MnfModel:
    """
    MINIMUM NOISE FRACTION MODEL
    - components: N x N, row i is the i-th projection, ordered by decreasing SNR eigenvalue
    - components @ noise_covariance @ components.T == identity
    - mean is subtracted before projection
    """

    mean: np.ndarray
    noise_covariance: np.ndarray
    signal_covariance: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    retained_k: int

    def __post_init__(self):
        n = self.mean.size
        if self.components.shape != (n, n) or self.eigenvalues.shape != (n,):
            raise SpectralModelError(f"MNF model arrays inconsistent with {n} bands")
        if not 1 <= self.retained_k <= n:
            raise SpectralModelError(f"retained_k must be in [1, {n}], got {self.retained_k}")

    @property
    def n_bands(self) -> int:
        return int(self.mean.size)


@dataclass(frozen=True)
class ConvBlockSpec:
    kernel_size: int
    channels: int
    pool_stride: int


@dataclass(frozen=True)
class ClassifierSpec:
    """
    1-D CONVOLUTIONAL PIXEL CLASSIFIER
    - blocks of conv ('same' padding) -> max pool -> ReLU -> batch norm
    - flatten, optional hidden dense layers, dense layer to class logits
    - plain mini-batch SGD on cross-entropy
    """

    blocks: Tuple[ConvBlockSpec, ...] = (ConvBlockSpec(5, 16, 2), ConvBlockSpec(3, 32, 2))
    hidden_widths: Tuple[int, ...] = ()
    class_count: int = 4
    learning_rate: float = 0.01
    batch_size: int = 64
    epochs: int = 50
    seed: int = 0
    bn_epsilon: float = 1e-5
    bn_momentum: float = 0.9

    def __post_init__(self):
        for block in self.blocks:
            if block.pool_stride < 1:
                raise SpectralModelError(f"pool stride must be >= 1, got {block.pool_stride}")
            if block.kernel_size < 1 or block.kernel_size % 2 == 0:
                raise SpectralModelError(f"kernel size must be a positive odd number, got {block.kernel_size}")
            if block.channels < 1:
                raise SpectralModelError(f"channel count must be >= 1, got {block.channels}")
        if any(width < 1 for width in self.hidden_widths):
            raise SpectralModelError(f"hidden widths must be >= 1, got {self.hidden_widths}")
        if self.class_count < 1:
            raise SpectralModelError(f"class count must be >= 1, got {self.class_count}")
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise SpectralModelError("learning rate, batch size and epochs must be positive")

    def flattened_length(self, input_length: int) -> int:
        """Length of the flattened feature vector for inputs of input_length values"""
        length = input_length
        for block in self.blocks:
            length //= block.pool_stride
        channels = self.blocks[-1].channels if self.blocks else 1
        return length * channels

    def validate_input(self, input_length: int) -> None:
        if self.flattened_length(input_length) < 1:
            raise SpectralModelError(
                f"classifier pools an input of length {input_length} down to nothing; "
                f"reduce pool strides or retain more components"
            )

    def to_dict(self) -> Dict[str, Any]:
        return {
            "blocks": [[b.kernel_size, b.channels, b.pool_stride] for b in self.blocks],
            "hidden_widths": list(self.hidden_widths),
            "class_count": self.class_count,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "epochs": self.epochs,
            "seed": self.seed,
            "bn_epsilon": self.bn_epsilon,
            "bn_momentum": self.bn_momentum,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ClassifierSpec":
        values = dict(data)
        if "blocks" in values:
            values["blocks"] = tuple(ConvBlockSpec(*map(int, block)) for block in values["blocks"])
        if "hidden_widths" in values:
            values["hidden_widths"] = tuple(int(w) for w in values["hidden_widths"])
        return cls(**values)


@dataclass(eq=False)
class PixelLabelMap:
    """Per-pixel class id (0 = background) and softmax confidence"""

    labels: np.ndarray
    confidence: np.ndarray
    class_names: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.labels.shape != self.confidence.shape:
            raise SpectralModelError("label and confidence maps differ in shape")

    @property
    def shape(self) -> Tuple[int, int]:
        return int(self.labels.shape[0]), int(self.labels.shape[1])

    def class_name(self, class_id: int) -> str:
        if class_id == 0:
            return "background"
        if 1 <= class_id <= len(self.class_names):
            return self.class_names[class_id - 1]
        return UNKNOWN_CLASS_NAME


@dataclass(eq=False)
class SegmentationMask:
    """One 4-connected object instance on the corrected grid"""

    instance_id: int
    mask: np.ndarray

    @property
    def area(self) -> int:
        return int(np.count_nonzero(self.mask))

    @property
    def bbox(self) -> Tuple[int, int, int, int]:
        """(row_min, col_min, row_max, col_max), inclusive and tight"""
        rows = np.flatnonzero(self.mask.any(axis=1))
        cols = np.flatnonzero(self.mask.any(axis=0))
        return int(rows[0]), int(cols[0]), int(rows[-1]), int(cols[-1])

    @property
    def centroid(self) -> Tuple[float, float]:
        rows, cols = np.nonzero(self.mask)
        return float(rows.mean()), float(cols.mean())


@dataclass(frozen=True)
class SuctionPoint:
    rank: int
    row: int
    col: int
    clearance_mm: float

    def to_dict(self) -> Dict[str, Any]:
        return {"rank": self.rank, "row": self.row, "col": self.col, "clearance_mm": round(self.clearance_mm, 6)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SuctionPoint":
        return cls(int(data["rank"]), int(data["row"]), int(data["col"]), float(data["clearance_mm"]))


@dataclass(eq=False)
class DetectedObject:
    """
    OBJECT-LEVEL DETECTION
    - class_id from the filtered majority vote, UNKNOWN_CLASS_ID for tiny masks
    - purity is the share of surviving votes agreeing with the winner
    """

    instance_id: int
    class_id: int
    class_name: str
    purity: float
    bbox: Tuple[int, int, int, int]
    centroid: Tuple[float, float]
    pixel_count: int
    suction_points: List[SuctionPoint] = field(default_factory=list)
    mask: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def is_known(self) -> bool:
        return self.class_id != UNKNOWN_CLASS_ID

    def to_dict(self) -> Dict[str, Any]:
        return {
            "id": self.instance_id,
            "class": self.class_name,
            "class_id": self.class_id,
            "purity": round(float(self.purity), 6),
            "bbox": list(self.bbox),
            "centroid": [round(self.centroid[0], 6), round(self.centroid[1], 6)],
            "pixel_count": self.pixel_count,
            "suction_points": [p.to_dict() for p in self.suction_points],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DetectedObject":
        return cls(
            instance_id=int(data["id"]),
            class_id=int(data["class_id"]),
            class_name=str(data["class"]),
            purity=float(data["purity"]),
            bbox=tuple(int(v) for v in data["bbox"]),
            centroid=(float(data["centroid"][0]), float(data["centroid"][1])),
            pixel_count=int(data["pixel_count"]),
            suction_points=[SuctionPoint.from_dict(p) for p in data.get("suction_points", [])],
        )


@dataclass(eq=False)
class DetectionReport:
    """Objects found in one corrected cube, with the grid they were found on"""

    source: str
    geom: GeometryContext
    pitch: float
    class_names: List[str]
    objects: List[DetectedObject] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "source": self.source,
            "geometry": {
                "working_height": self.geom.working_height,
                "line_resolution_dx": self.geom.line_resolution_dx,
                "rows_H": self.geom.rows_H,
                "cols_W": self.geom.cols_W,
            },
            "pitch": self.pitch,
            "class_names": list(self.class_names),
            "objects": [obj.to_dict() for obj in self.objects],
        }


def band_retention(n_bands: int, keep_fraction: float = 0.7) -> int:
    """Components retained for a band count; 0.7 drops about thirty percent"""
    if not 0 < keep_fraction <= 1:
        raise SpectralModelError(f"keep fraction must be in (0, 1], got {keep_fraction}")
    return max(1, min(n_bands, int(round(keep_fraction * n_bands))))

