"""
Rotascan - Scene & Signature File Parser
YAML signature libraries, two-column signature tables and complete scene descriptions
"""

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
import yaml

from rotascan.errors import FileFormatError, RotascanError
from rotascan.models.scene import SceneDescription, SceneObject, SpectralSignature

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def _load(path: PathLike) -> Any:
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            return yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise FileFormatError(f"{path.name} is not valid YAML: {e}") from e


def _dump(path: PathLike, document: Any) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as f:
        yaml.safe_dump(document, f, sort_keys=False, default_flow_style=None)
    return path


def read_signature_table(path: PathLike, class_name: Optional[str] = None) -> SpectralSignature:
    """Two-column text signature: wavelength (nm) and reflectance per line, '#' comments"""
    path = Path(path)
    if not path.exists():
        raise FileFormatError(f"signature table not found: {path}")
    try:
        table = np.loadtxt(path, comments="#", ndmin=2)
    except ValueError as e:
        raise FileFormatError(f"{path.name} is not a numeric table: {e}") from e
    if table.shape[1] != 2:
        raise FileFormatError(f"{path.name} must have two columns (wavelength, reflectance), got {table.shape[1]}")
    try:
        return SpectralSignature(class_name or path.stem, table[:, 1], table[:, 0])
    except RotascanError as e:
        raise FileFormatError(f"{path.name}: {e}") from e


def write_signature_table(path: PathLike, signature: SpectralSignature) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    table = np.column_stack([signature.band_centers, signature.reflectance])
    np.savetxt(path, table, fmt="%.17g", header=f"{signature.class_name}\nwavelength_nm reflectance")
    return path


def signature_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> SpectralSignature:
    """Inline signature, or {'file': table path, 'class_name': optional} relative to base_dir"""
    try:
        if "file" in data:
            table = Path(data["file"])
            if not table.is_absolute() and base_dir is not None:
                table = base_dir / table
            return read_signature_table(table, data.get("class_name"))
        return SpectralSignature(str(data["class_name"]), data["reflectance"], data["band_centers"])
    except (KeyError, TypeError) as e:
        raise FileFormatError(f"malformed signature entry: {e}") from e


def write_signatures(path: PathLike, signatures: List[SpectralSignature]) -> Path:
    return _dump(path, {"signatures": [sig.to_dict() for sig in signatures]})


def read_signatures(path: PathLike) -> List[SpectralSignature]:
    document = _load(path)
    if not isinstance(document, dict) or not isinstance(document.get("signatures"), list):
        raise FileFormatError(f"{Path(path).name} must hold a 'signatures' list")
    signatures = [signature_from_dict(item, Path(path).parent) for item in document["signatures"]]
    names = [sig.class_name for sig in signatures]
    if len(set(names)) != len(names):
        raise FileFormatError(f"{Path(path).name} repeats a class name: {names}")
    logger.info(f"📊 Loaded {len(signatures)} signatures from {Path(path).name}")
    return signatures


def scene_from_dict(data: Dict[str, Any], base_dir: Optional[Path] = None) -> SceneDescription:
    try:
        signatures = [signature_from_dict(item, base_dir) for item in data["signatures"]]
        objects = [
            SceneObject(vertices=tuple((float(x), float(y)) for x, y in item["vertices"]),
                        class_name=str(item["class_name"]), z_order=int(item["z_order"]))
            for item in data.get("objects") or []
        ]
        return SceneDescription(
            plane_size=(float(data["plane_size"][0]), float(data["plane_size"][1])),
            background=signature_from_dict(data["background"], base_dir),
            signatures={sig.class_name: sig for sig in signatures},
            objects=objects,
            noise_sigma=float(data.get("noise_sigma", 0.0)),
            seed=int(data.get("seed", 0)),
        )
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"malformed scene description: {e}") from e


def write_scene(path: PathLike, scene: SceneDescription) -> Path:
    path = _dump(path, scene.to_dict())
    logger.info(f"✅ Scene with {len(scene.objects)} objects written to {path}")
    return path


def read_scene(path: PathLike) -> SceneDescription:
    document = _load(path)
    if not isinstance(document, dict):
        raise FileFormatError(f"{Path(path).name} does not hold a scene mapping")
    try:
        return scene_from_dict(document, Path(path).parent)
    except FileFormatError:
        raise
    except RotascanError as e:
        raise FileFormatError(f"{Path(path).name}: {e}") from e
