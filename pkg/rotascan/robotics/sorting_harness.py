"""
Rotascan - Sorting Harness
Runs the scan -> detect -> pick loop against the simulator and a simulated
suction gripper, and scores success per class over seeded trials
"""

import asyncio
import logging
import time
from collections import defaultdict
from dataclasses import replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from rotascan.errors import ConfigError
from rotascan.imaging.cube_pipeline import build_correction_map, correct_distortion, reconstruct
from rotascan.imaging.scene_simulator import DEFAULT_PLANE_SIZE, generate_scene, object_index_raster, render_scan
from rotascan.models.config import DetectionSettings
from rotascan.models.geometry import GeometryContext, PrismConfig
from rotascan.models.motion import GripperAction, LqtConfig, Workspace
from rotascan.models.scene import SceneDescription, SceneObject, SpectralSignature
from rotascan.models.sorting import (
    BACKGROUND_MISS,
    INSUFFICIENT_CLEARANCE,
    LEFT_ON_PLANE,
    MISCLASSIFIED,
    SCAN_BOUND,
    UNCLASSIFIED,
    WRONG_ITEM_OCCLUDING,
    CampaignResult,
    ObjectOutcome,
    PickAttempt,
    PickResult,
    SortingScenario,
    TrialReport,
)
from rotascan.perception.training import PerceptionBundle, detect_objects
from rotascan.robotics.trajectory import build_sparse_path, lqt_refine, pixel_to_workspace, workspace_to_plane

logger = logging.getLogger(__name__)


def simulated_pick(scene: SceneDescription, point: Tuple[float, float], commanded_class: str,
                   clearance_mm: float = float("inf"), min_clearance_mm: float = 0.0) -> PickResult:
    """
    Suction pick at a plane point.
    The top-most object under the point is lifted. Success needs that object to be
    of the commanded class; lifting another class is scored as a failure.
    """
    x, y = point
    index = int(object_index_raster(scene, np.array([x]), np.array([y]))[0])
    if index < 0:
        return PickResult(success=False, cause=BACKGROUND_MISS)
    if clearance_mm < min_clearance_mm:
        return PickResult(success=False, cause=INSUFFICIENT_CLEARANCE)
    picked = scene.objects[index]
    if picked.class_name == commanded_class:
        return PickResult(success=True, picked_index=index)
    underneath = [obj for obj in scene.objects
                  if obj is not picked and obj.z_order < picked.z_order
                  and obj.class_name == commanded_class and obj.polygon.intersects(picked.polygon)]
    cause = WRONG_ITEM_OCCLUDING if underneath else MISCLASSIFIED
    return PickResult(success=False, cause=cause, picked_index=index)


class SortingHarness:
    """
    SORTING HARNESS
    - one trial is a sequential scan/detect/pick state machine
    - picked objects leave the plane before the next scan
    - new batches arrive only when the plane is clear
    - trials of a campaign run concurrently, one worker thread each
    """

    def __init__(self, perception: PerceptionBundle, signatures: Sequence[SpectralSignature],
                 prism: PrismConfig, geom: GeometryContext,
                 lqt: Optional[LqtConfig] = None, workspace: Optional[Workspace] = None,
                 detection: Optional[DetectionSettings] = None):
        self.perception = perception
        self.signatures = {sig.class_name: sig for sig in signatures}
        self.prism = prism
        self.geom = geom
        self.lqt = lqt or LqtConfig()
        self.workspace = workspace or Workspace()
        self.detection = detection or DetectionSettings()
        self.cmap = build_correction_map(geom)

    def _signatures(self, scenario: SortingScenario) -> List[SpectralSignature]:
        missing = [name for name in scenario.class_names
                   if name not in self.signatures or name not in self.perception.class_names]
        if missing:
            raise ConfigError(f"scenario '{scenario.name}' uses classes the harness cannot render or classify: {missing}")
        return [self.signatures[name] for name in scenario.class_names]

    def _batches(self, scenario: SortingScenario, signatures: List[SpectralSignature],
                 seed: int) -> List[List[SceneObject]]:
        """Object batches in arrival order; each batch is laid out as its own scene"""
        batches = []
        next_z = 0
        remaining = scenario.object_count
        while remaining > 0:
            count = min(scenario.batch_size, remaining)
            offset = scenario.object_count - remaining
            scene = generate_scene(scenario.kind, signatures, count, seed * 100 + len(batches),
                                   background=self.perception.background, noise_sigma=scenario.noise_sigma,
                                   first_class=offset % len(signatures))
            # later batches land on top of anything still on the plane
            batch = [replace(obj, z_order=next_z + obj.z_order) for obj in scene.objects]
            next_z = max((obj.z_order for obj in batch), default=next_z - 1) + 1
            batches.append(batch)
            remaining -= count
        return batches

    def _scan(self, scene: SceneDescription, timings: Dict[str, float]):
        started = time.perf_counter()
        raw = reconstruct(render_scan(scene, self.prism, self.geom), self.geom, scene.band_centers)
        cube = correct_distortion(raw, self.cmap)
        timings["scan"] += time.perf_counter() - started

        started = time.perf_counter()
        objects = detect_objects(cube, self.perception, self.detection)
        timings["detect"] += time.perf_counter() - started
        return objects

    def run_trial(self, scenario: SortingScenario, seed: int) -> TrialReport:
        """Scan until the plane stays empty with no batches left, or the scan bound is hit"""
        signatures = self._signatures(scenario)
        full = SceneDescription(plane_size=DEFAULT_PLANE_SIZE, background=self.perception.background,
                                signatures={s.class_name: s for s in signatures},
                                noise_sigma=scenario.noise_sigma, seed=seed)
        batches = self._batches(scenario, signatures, seed)
        all_objects: List[SceneObject] = [obj for batch in batches for obj in batch]
        on_plane: List[SceneObject] = []
        deposited: Dict[int, str] = {}
        attempts: List[PickAttempt] = []
        timings: Dict[str, float] = defaultdict(float)
        index_of = {id(obj): i for i, obj in enumerate(all_objects)}
        scans = 0
        bounded = False

        while True:
            if not on_plane and batches:
                on_plane = batches.pop(0)
            if scans >= scenario.scan_bound:
                bounded = bool(on_plane or batches)
                if bounded:
                    logger.warning(f"⚠️ Trial {scenario.name}/{seed} hit the scan bound ({scans} scans)")
                break
            scene = SceneDescription(plane_size=full.plane_size, background=full.background,
                                     signatures=full.signatures, objects=list(on_plane),
                                     noise_sigma=full.noise_sigma, seed=seed * 1000 + scans)
            scans += 1
            detected = self._scan(scene, timings)
            if not detected:
                if batches:
                    on_plane = on_plane + batches.pop(0)
                    continue
                break

            started = time.perf_counter()
            for obj in detected:
                if not obj.is_known:
                    attempts.append(PickAttempt(scans, obj.class_name, False, UNCLASSIFIED, None))
                    continue
                point = obj.suction_points[0]
                grasp = pixel_to_workspace(point.row, point.col, self.cmap, self.workspace)
                path = build_sparse_path(grasp, scenario.bins[obj.class_name], self.workspace)
                trajectory = lqt_refine(path, self.lqt)
                contact = workspace_to_plane(trajectory.position_at(GripperAction.SUCTION_ON), self.workspace)
                current = SceneDescription(plane_size=full.plane_size, background=full.background,
                                           signatures=full.signatures, objects=list(on_plane))
                result = simulated_pick(current, contact, obj.class_name, point.clearance_mm,
                                        scenario.min_clearance_mm)
                picked_class = None
                if result.picked_index is not None:
                    picked = current.objects[result.picked_index]
                    picked_class = picked.class_name
                    deposited[index_of[id(picked)]] = obj.class_name
                    on_plane = [o for o in on_plane if o is not picked]
                attempts.append(PickAttempt(scans, obj.class_name, result.success, result.cause, picked_class))
            timings["pick"] += time.perf_counter() - started

        report = self._report(scenario, seed, all_objects, deposited, attempts, scans, bounded, dict(timings))
        logger.info(f"📊 Trial {scenario.name}/{seed}: {report.correct_picks}/{len(all_objects)} sorted "
                    f"correctly in {scans} scans")
        return report

    @staticmethod
    def _report(scenario: SortingScenario, seed: int, all_objects: Sequence[SceneObject],
                deposited: Dict[int, str], attempts: List[PickAttempt], scans: int, bounded: bool,
                timings: Dict[str, float]) -> TrialReport:
        outcomes = []
        for index, obj in enumerate(all_objects):
            bin_class = deposited.get(index)
            correct = bin_class == obj.class_name
            if bin_class is None:
                cause = SCAN_BOUND if bounded else LEFT_ON_PLANE
            elif not correct:
                cause = MISCLASSIFIED
            else:
                cause = None
            outcomes.append(ObjectOutcome(index, obj.class_name, bin_class is not None, bin_class, correct, cause))

        per_class = {}
        for name in scenario.class_names:
            mine = [o for o in outcomes if o.true_class == name]
            if mine:
                per_class[name] = sum(o.correct for o in mine) / len(mine)
        return TrialReport(scenario=scenario.name, seed=seed, outcomes=outcomes, attempts=attempts,
                           per_class_success=per_class, scan_count=scans, terminated_by_bound=bounded,
                           stage_seconds=timings)

    async def run_campaign(self, scenario: SortingScenario, trial_count: Optional[int] = None) -> CampaignResult:
        """Seeded trials in parallel worker threads, reduced to per-class mean and std"""
        seeds = list(scenario.seeds if trial_count is None else scenario.seeds[:trial_count])
        if not seeds:
            raise ConfigError(f"scenario '{scenario.name}' has no trial seeds")
        logger.info(f"🔄 Campaign {scenario.name}: {len(seeds)} trials, {scenario.object_count} objects each")
        trials = await asyncio.gather(*(asyncio.to_thread(self.run_trial, scenario, seed) for seed in seeds))
        return summarize_campaign(scenario, list(trials))


def summarize_campaign(scenario: SortingScenario, trials: List[TrialReport]) -> CampaignResult:
    mean, std = {}, {}
    for name in scenario.class_names:
        rates = [t.per_class_success[name] for t in trials if name in t.per_class_success]
        if rates:
            mean[name] = float(np.mean(rates))
            std[name] = float(np.std(rates))
    return CampaignResult(scenario=scenario.name, kind=scenario.kind, trials=trials, mean=mean, std=std)


def condition_drop(results: Sequence[CampaignResult]) -> Dict[str, float]:
    """Per-class mean success of discrete campaigns minus cluttered ones"""
    by_kind: Dict[str, Dict[str, List[float]]] = defaultdict(lambda: defaultdict(list))
    for result in results:
        for name, value in result.mean.items():
            by_kind[result.kind][name].append(value)
    drop = {}
    for name, values in by_kind["discrete"].items():
        cluttered = by_kind["cluttered"].get(name)
        if cluttered:
            drop[name] = float(np.mean(values) - np.mean(cluttered))
    return drop
