"""
Rotascan - Report File Parser
YAML detection and trial reports, campaign summaries and the per-class campaign CSV
"""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, List, Sequence, Union

import yaml

from rotascan.errors import FileFormatError
from rotascan.models.geometry import GeometryContext
from rotascan.models.perception import DetectedObject, DetectionReport
from rotascan.models.sorting import HUMAN_BASELINE_SUCCESS, CampaignResult, TrialReport
from rotascan.robotics.sorting_harness import condition_drop

logger = logging.getLogger(__name__)

CAMPAIGN_COLUMNS = ("scenario", "condition", "class", "trials", "mean_success", "std_success", "human_baseline")

PathLike = Union[str, Path]


def _dump(path: PathLike, document: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, sort_keys=False, default_flow_style=None)
    return path


def _load(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"report not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise FileFormatError(f"{path.name} is not valid YAML: {e}") from e
    if not isinstance(document, dict):
        raise FileFormatError(f"{path.name} does not hold a report mapping")
    return document


def write_detection_report(path: PathLike, report: DetectionReport) -> Path:
    path = _dump(path, report.to_dict())
    logger.info(f"✅ Detection report written to {path}: {len(report.objects)} objects")
    return path


def read_detection_report(path: PathLike) -> DetectionReport:
    document = _load(path)
    try:
        geometry = document["geometry"]
        return DetectionReport(
            source=str(document.get("source", "")),
            geom=GeometryContext(**geometry),
            pitch=float(document["pitch"]),
            class_names=list(document.get("class_names", [])),
            objects=[DetectedObject.from_dict(item) for item in document.get("objects") or []],
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"{Path(path).name} is not a detection report: {e}") from e


def write_trial_report(path: PathLike, report: TrialReport) -> Path:
    path = _dump(path, report.to_dict())
    logger.info(f"✅ Trial report written to {path}")
    return path


def write_campaign_summary(path: PathLike, results: Sequence[CampaignResult]) -> Path:
    document = {
        "campaigns": [result.to_dict() for result in results],
        "discrete_minus_cluttered": {k: round(v, 6) for k, v in condition_drop(results).items()},
        "human_baseline": HUMAN_BASELINE_SUCCESS,
    }
    return _dump(path, document)


def campaign_rows(results: Sequence[CampaignResult]) -> List[Dict[str, Any]]:
    rows = []
    for result in results:
        for name, mean in result.mean.items():
            rows.append({
                "scenario": result.scenario,
                "condition": result.kind,
                "class": name,
                "trials": len(result.trials),
                "mean_success": round(mean, 6),
                "std_success": round(result.std[name], 6),
                "human_baseline": HUMAN_BASELINE_SUCCESS,
            })
    return rows


def write_campaign_csv(path: PathLike, results: Sequence[CampaignResult]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = campaign_rows(results)
    with path.open("w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=CAMPAIGN_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    logger.info(f"📊 Campaign table written to {path}: {len(rows)} rows")
    return path


def read_campaign_csv(path: PathLike) -> List[Dict[str, Any]]:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"campaign table not found: {path}")
    with path.open("r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != CAMPAIGN_COLUMNS:
            raise FileFormatError(f"{path.name} does not have the campaign columns {CAMPAIGN_COLUMNS}")
        return [
            {**row, "trials": int(row["trials"]), "mean_success": float(row["mean_success"]),
             "std_success": float(row["std_success"]), "human_baseline": float(row["human_baseline"])}
            for row in reader
        ]
