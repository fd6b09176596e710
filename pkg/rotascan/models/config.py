"""
Rotascan - Pipeline Configuration Models
One dataclass per config section; the YAML parser maps keys onto these fields strictly
"""

import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Tuple

from rotascan.errors import ConfigError
from rotascan.models.geometry import GeometryContext, PrismConfig
from rotascan.models.motion import LqtConfig, Workspace
from rotascan.models.perception import ClassifierSpec
from rotascan.models.sorting import SortingScenario

DEFAULT_OUTPUT_DIR = "output"
BIN_SPACING_MM = 200.0
BIN_MARGIN_MM = 50.0


@dataclass(frozen=True)
class MnfSettings:
    keep_fraction: float = 0.7
    retained_k: Optional[int] = None

    def __post_init__(self):
        if not 0 < self.keep_fraction <= 1:
            raise ConfigError(f"mnf.keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if self.retained_k is not None and self.retained_k < 1:
            raise ConfigError(f"mnf.retained_k must be >= 1, got {self.retained_k}")


@dataclass(frozen=True)
class DetectionSettings:
    angle_threshold: float = 0.08
    min_area: int = 25
    pca_components: int = 3
    outlier_percentile: float = 95.0
    cup_radius_mm: float = 12.0
    suction_count: int = 3

    def __post_init__(self):
        if self.angle_threshold <= 0:
            raise ConfigError(f"detection.angle_threshold must be positive, got {self.angle_threshold}")
        if self.min_area < 1 or self.pca_components < 1 or self.suction_count < 1:
            raise ConfigError("detection.min_area, pca_components and suction_count must be >= 1")
        if not 0 < self.outlier_percentile <= 100:
            raise ConfigError(f"detection.outlier_percentile must be in (0, 100], got {self.outlier_percentile}")
        if self.cup_radius_mm <= 0:
            raise ConfigError(f"detection.cup_radius_mm must be positive, got {self.cup_radius_mm}")


@dataclass(frozen=True)
class TrainingSettings:
    noise_sigma: float = 0.02
    samples_per_class: int = 2000
    objects_per_class: int = 2
    band_count: int = 96

    def __post_init__(self):
        if self.noise_sigma < 0 or self.samples_per_class < 1 or self.objects_per_class < 1:
            raise ConfigError("training settings must be positive")
        if self.band_count < 3:
            raise ConfigError(f"training.band_count must be >= 3, got {self.band_count}")


@dataclass(frozen=True)
class GeometrySettings:
    prism: PrismConfig = field(default_factory=PrismConfig)
    context: GeometryContext = field(default_factory=GeometryContext)


@dataclass(frozen=True)
class PipelineConfig:
    """
    PIPELINE CONFIGURATION
    - every section has working defaults, so an empty file is a valid config
    - seed drives scene generation and training when commands do not override it
    - signatures_file, when set, replaces the built-in textile signatures
    """

    geometry: GeometrySettings = field(default_factory=GeometrySettings)
    mnf: MnfSettings = field(default_factory=MnfSettings)
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    detection: DetectionSettings = field(default_factory=DetectionSettings)
    lqt: LqtConfig = field(default_factory=LqtConfig)
    workspace: Workspace = field(default_factory=Workspace)
    training: TrainingSettings = field(default_factory=TrainingSettings)
    scenarios: Tuple[SortingScenario, ...] = ()
    signatures_file: Optional[str] = None
    output_dir: str = DEFAULT_OUTPUT_DIR
    seed: int = 0

    @property
    def prism(self) -> PrismConfig:
        return self.geometry.prism

    @property
    def geom(self) -> GeometryContext:
        return self.geometry.context

    def scenario(self, name: str) -> SortingScenario:
        for scenario in self.scenarios:
            if scenario.name == name:
                return scenario
        raise ConfigError(f"no scenario named '{name}' (have: {', '.join(s.name for s in self.scenarios) or 'none'})")

    def output_path(self) -> Path:
        return Path(self.output_dir)


def env_seed(default: int = 0) -> int:
    value = os.getenv("ROTASCAN_SEED")
    if value is None or value == "":
        return default
    try:
        return int(value)
    except ValueError as e:
        raise ConfigError(f"ROTASCAN_SEED must be an integer, got '{value}'") from e


def default_bins(class_names: List[str], workspace: Optional[Workspace] = None) -> dict:
    """
    Bins in a row beside the plane, one per class.
    The row is centred in the workspace y range and tightens when 200 mm spacing would not fit.
    """
    workspace = workspace or Workspace()
    (x_lo, y_lo, z_lo), (x_hi, y_hi, _) = workspace.lower, workspace.upper
    usable = (y_hi - y_lo) - 2 * BIN_MARGIN_MM
    spacing = BIN_SPACING_MM if len(class_names) < 2 else min(BIN_SPACING_MM, usable / (len(class_names) - 1))
    if spacing <= 0:
        raise ConfigError(f"workspace y range {y_lo}..{y_hi} is too narrow for {len(class_names)} bins")
    start = (y_lo + y_hi) / 2 - spacing * (len(class_names) - 1) / 2
    x = max(x_lo, x_hi - 150.0)
    return {name: (x, start + i * spacing, z_lo + BIN_MARGIN_MM) for i, name in enumerate(class_names)}


def check_bins(scenario: SortingScenario, workspace: Workspace) -> None:
    """Every bin and the retreat above it must be reachable"""
    for name, position in scenario.bins.items():
        above = (position[0], position[1], position[2] + workspace.approach_height)
        if not (workspace.contains(position) and workspace.contains(above)):
            raise ConfigError(f"scenario '{scenario.name}': bin for '{name}' at {tuple(position)} is outside "
                              f"the workspace {workspace.lower} .. {workspace.upper}")


def default_scenarios(class_names: List[str], object_count: int = 52, trials: int = 5,
                      workspace: Optional[Workspace] = None) -> Tuple[SortingScenario, ...]:
    """Matched discrete and cluttered campaigns over the same classes and seeds"""
    seeds = tuple(range(trials))
    bins = default_bins(class_names, workspace)
    return tuple(
        SortingScenario(name=kind, kind=kind, class_names=tuple(class_names), object_count=object_count,
                        seeds=seeds, bins=bins)
        for kind in ("discrete", "cluttered")
    )
