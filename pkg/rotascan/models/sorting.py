"""
Rotascan - Sorting Models
Scenario definitions, per-trial reports and campaign statistics
"""

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

from rotascan.errors import ConfigError
from rotascan.models.motion import Vector3

# Share of textiles correctly sorted by hand in the reference study; reported, never computed
HUMAN_BASELINE_SUCCESS = 0.66

# Failure causes recorded by simulated picks and trials
BACKGROUND_MISS = "background_miss"
MISCLASSIFIED = "misclassified"
WRONG_ITEM_OCCLUDING = "wrong_item_occluding"
INSUFFICIENT_CLEARANCE = "insufficient_clearance"
UNCLASSIFIED = "unclassified"
LEFT_ON_PLANE = "left_on_plane"
SCAN_BOUND = "scan_bound_exceeded"


@dataclass(frozen=True)
class SortingScenario:
    """
    SORTING SCENARIO
    - kind is 'discrete' or 'cluttered'
    - one bin position (robot mm) per class
    - objects arrive on the plane in batches of batch_size
    - max_scans defaults to 4 x object count
    """

    name: str
    kind: str
    class_names: Tuple[str, ...]
    object_count: int
    seeds: Tuple[int, ...]
    bins: Dict[str, Vector3]
    batch_size: int = 8
    noise_sigma: float = 0.02
    min_clearance_mm: float = 0.0
    max_scans: Optional[int] = None

    def __post_init__(self):
        if self.kind not in ("discrete", "cluttered"):
            raise ConfigError(f"scenario '{self.name}': unknown kind '{self.kind}'")
        if not self.class_names:
            raise ConfigError(f"scenario '{self.name}': empty class set")
        if self.object_count < 0:
            raise ConfigError(f"scenario '{self.name}': object count must be >= 0")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError(f"scenario '{self.name}': trial seeds must be distinct")
        if set(self.bins) != set(self.class_names):
            raise ConfigError(f"scenario '{self.name}': need exactly one bin per class {list(self.class_names)}")
        if self.batch_size < 1:
            raise ConfigError(f"scenario '{self.name}': batch size must be >= 1")

    @property
    def scan_bound(self) -> int:
        if self.max_scans is not None:
            return self.max_scans
        return 4 * max(self.object_count, 1)


@dataclass(frozen=True)
class PickResult:
    success: bool
    cause: Optional[str] = None
    picked_index: Optional[int] = None


@dataclass(frozen=True)
class PickAttempt:
    scan: int
    detected_class: str
    success: bool
    cause: Optional[str]
    picked_class: Optional[str]


@dataclass(frozen=True)
class ObjectOutcome:
    object_index: int
    true_class: str
    picked: bool
    bin_class: Optional[str]
    correct: bool
    failure_cause: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "object": self.object_index,
            "class": self.true_class,
            "picked": self.picked,
            "bin": self.bin_class,
            "correct": self.correct,
            "failure_cause": self.failure_cause,
        }


@dataclass
class TrialReport:
    """
    One run of the scan-detect-pick loop.
    Stage timings are wall-clock and excluded from equality.
    """

    scenario: str
    seed: int
    outcomes: List[ObjectOutcome]
    attempts: List[PickAttempt]
    per_class_success: Dict[str, float]
    scan_count: int
    terminated_by_bound: bool
    stage_seconds: Dict[str, float] = field(default_factory=dict, compare=False)

    @property
    def picks(self) -> int:
        return sum(1 for outcome in self.outcomes if outcome.picked)

    @property
    def correct_picks(self) -> int:
        return sum(1 for outcome in self.outcomes if outcome.correct)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "scan_count": self.scan_count,
            "terminated_by_bound": self.terminated_by_bound,
            "per_class_success": {k: round(v, 6) for k, v in self.per_class_success.items()},
            "outcomes": [outcome.to_dict() for outcome in self.outcomes],
            "attempts": [
                {"scan": a.scan, "detected": a.detected_class, "success": a.success,
                 "cause": a.cause, "picked": a.picked_class}
                for a in self.attempts
            ],
            "stage_seconds": {k: round(v, 4) for k, v in self.stage_seconds.items()},
        }


@dataclass
class CampaignResult:
    """Per-class mean and standard deviation of success rates over seeded trials"""

    scenario: str
    kind: str
    trials: List[TrialReport]
    mean: Dict[str, float]
    std: Dict[str, float]

    @property
    def overall_mean(self) -> float:
        return sum(self.mean.values()) / len(self.mean) if self.mean else 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "kind": self.kind,
            "trials": len(self.trials),
            "mean": {k: round(v, 6) for k, v in self.mean.items()},
            "std": {k: round(v, 6) for k, v in self.std.items()},
            "human_baseline": HUMAN_BASELINE_SUCCESS,
        }
