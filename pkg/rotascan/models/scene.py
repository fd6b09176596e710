"""
Rotascan - Scene Models
Spectral signatures, synthetic scene descriptions and the frame packets a scan emits
"""

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Any, Dict, Iterable, List, Sequence, Tuple

import numpy as np
from shapely.geometry import Polygon

from rotascan.errors import SceneGenerationError

Vertex = Tuple[float, float]


@dataclass(eq=False)
class SpectralSignature:
    """Reflectance curve of one material, sampled at band_centers (nm)"""

    class_name: str
    reflectance: np.ndarray
    band_centers: np.ndarray

    def __post_init__(self):
        self.reflectance = np.asarray(self.reflectance, dtype=float)
        self.band_centers = np.asarray(self.band_centers, dtype=float)
        if self.reflectance.ndim != 1 or self.reflectance.shape != self.band_centers.shape:
            raise SceneGenerationError(
                f"signature '{self.class_name}': reflectance and band centres must be equal-length vectors"
            )
        if self.reflectance.size < 2:
            raise SceneGenerationError(f"signature '{self.class_name}' needs at least 2 bands")
        if np.any(self.reflectance < 0) or np.any(self.reflectance > 1):
            raise SceneGenerationError(f"signature '{self.class_name}' has reflectance outside [0, 1]")
        if np.any(np.diff(self.band_centers) <= 0):
            raise SceneGenerationError(f"signature '{self.class_name}' band centres must increase strictly")

    @property
    def n_bands(self) -> int:
        return int(self.reflectance.size)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "class_name": self.class_name,
            "reflectance": [float(v) for v in self.reflectance],
            "band_centers": [float(v) for v in self.band_centers],
        }


@dataclass(frozen=True)
class SceneObject:
    """One textile-like patch: polygon in plane mm, material, stacking order"""

    vertices: Tuple[Vertex, ...]
    class_name: str
    z_order: int

    @cached_property
    def polygon(self) -> Polygon:
        return Polygon(self.vertices)


@dataclass
class SceneDescription:
    """
    SYNTHETIC SCENE
    - plane centred on the optical axis, plane_size = (width, height) mm
    - objects drawn in z-order: later objects occlude earlier ones
    - signatures maps class name -> SpectralSignature; class ids follow class_names order
    """

    plane_size: Tuple[float, float]
    background: SpectralSignature
    signatures: Dict[str, SpectralSignature]
    objects: List[SceneObject] = field(default_factory=list)
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        width, height = self.plane_size
        if width <= 0 or height <= 0:
            raise SceneGenerationError(f"plane size must be positive, got {self.plane_size}")
        if self.noise_sigma < 0:
            raise SceneGenerationError(f"noise sigma must be non-negative, got {self.noise_sigma}")
        n_bands = self.background.n_bands
        for signature in self.signatures.values():
            if signature.n_bands != n_bands:
                raise SceneGenerationError(
                    f"signature '{signature.class_name}' has {signature.n_bands} bands, background has {n_bands}"
                )
        plane = self.plane_polygon
        for obj in self.objects:
            if obj.class_name not in self.signatures:
                raise SceneGenerationError(f"object uses unknown signature '{obj.class_name}'")
            if not plane.buffer(1e-6).contains(obj.polygon):
                raise SceneGenerationError(f"object z={obj.z_order} extends beyond the plane")

    @property
    def plane_polygon(self) -> Polygon:
        width, height = self.plane_size
        return Polygon([(-width / 2, -height / 2), (width / 2, -height / 2),
                        (width / 2, height / 2), (-width / 2, height / 2)])

    @property
    def class_names(self) -> List[str]:
        return list(self.signatures.keys())

    @property
    def band_centers(self) -> np.ndarray:
        return self.background.band_centers

    def class_id(self, class_name: str) -> int:
        """Class ids start at 1; 0 is the background"""
        return self.class_names.index(class_name) + 1

    def ordered_objects(self) -> List[SceneObject]:
        return sorted(self.objects, key=lambda obj: obj.z_order)

    def without(self, removed: Iterable[SceneObject]) -> "SceneDescription":
        """Scene after the given objects were lifted off the plane"""
        gone = set(id(obj) for obj in removed)
        return replace(self, objects=[obj for obj in self.objects if id(obj) not in gone])

    def with_seed(self, seed: int) -> "SceneDescription":
        return replace(self, seed=seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "plane_size": [float(self.plane_size[0]), float(self.plane_size[1])],
            "background": self.background.to_dict(),
            "signatures": [sig.to_dict() for sig in self.signatures.values()],
            "objects": [
                {"class_name": obj.class_name, "z_order": obj.z_order,
                 "vertices": [[float(x), float(y)] for x, y in obj.vertices]}
                for obj in self.objects
            ],
            "noise_sigma": float(self.noise_sigma),
            "seed": int(self.seed),
        }


@dataclass(eq=False)
class FramePacket:
    """One scan line: W x N samples, the motor angle it was taken at and when"""

    theta: float
    timestamp: float
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float32)
        if self.samples.ndim != 2:
            raise SceneGenerationError(f"frame samples must be W x N, got shape {self.samples.shape}")

    @property
    def width(self) -> int:
        return int(self.samples.shape[0])

    @property
    def n_bands(self) -> int:
        return int(self.samples.shape[1])


def square_vertices(center: Sequence[float], side: float, angle_rad: float = 0.0) -> Tuple[Vertex, ...]:
    """Vertices of a square of the given side rotated about its centre"""
    half = side / 2.0
    corners = np.array([[-half, -half], [half, -half], [half, half], [-half, half]])
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    rotated = corners @ np.array([[c, s], [-s, c]])
    return tuple((float(center[0] + x), float(center[1] + y)) for x, y in rotated)


def rectangle_vertices(x0: float, y0: float, x1: float, y1: float) -> Tuple[Vertex, ...]:
    return ((float(x0), float(y0)), (float(x1), float(y0)), (float(x1), float(y1)), (float(x0), float(y1)))
