"""
Rotascan - Config Parser
Strict YAML loading of the pipeline configuration; unknown keys fail with their dotted path
"""

import logging
import os
from dataclasses import fields, is_dataclass
from pathlib import Path
from typing import Any, Dict, Optional, Union

import yaml

from rotascan.errors import ConfigError, RotascanError
from rotascan.models.config import (
    DEFAULT_OUTPUT_DIR,
    DetectionSettings,
    GeometrySettings,
    MnfSettings,
    PipelineConfig,
    TrainingSettings,
    check_bins,
    default_bins,
    env_seed,
)
from rotascan.models.geometry import GeometryContext, PrismConfig
from rotascan.models.motion import LqtConfig, Workspace
from rotascan.models.perception import ClassifierSpec, ConvBlockSpec
from rotascan.models.sorting import SortingScenario

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

SECTIONS = {
    "mnf": MnfSettings,
    "detection": DetectionSettings,
    "lqt": LqtConfig,
    "workspace": Workspace,
    "training": TrainingSettings,
}


def _tupled(value: Any) -> Any:
    if isinstance(value, list):
        return tuple(_tupled(v) for v in value)
    return value


def _check_keys(data: Any, allowed, where: str) -> Dict[str, Any]:
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"'{where}' must be a mapping, got {type(data).__name__}")
    for key in data:
        if key not in allowed:
            raise ConfigError(f"unknown config key '{where}.{key}'")
    return data


def _build(cls, data: Any, where: str):
    """Instantiate a dataclass section from a mapping, rejecting unknown keys"""
    names = [f.name for f in fields(cls) if f.init]
    values = _check_keys(data, names, where)
    try:
        return cls(**{k: _tupled(v) for k, v in values.items()})
    except ConfigError:
        raise
    except (RotascanError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid '{where}': {e}") from e


def _classifier(data: Any) -> ClassifierSpec:
    names = [f.name for f in fields(ClassifierSpec)]
    values = dict(_check_keys(data, names, "classifier"))
    if "blocks" in values:
        blocks = []
        for i, block in enumerate(values["blocks"] or []):
            where = f"classifier.blocks[{i}]"
            if isinstance(block, dict):
                blocks.append(_build(ConvBlockSpec, block, where))
            elif isinstance(block, (list, tuple)) and len(block) == 3:
                blocks.append(ConvBlockSpec(*(int(v) for v in block)))
            else:
                raise ConfigError(f"'{where}' must be a mapping or [kernel_size, channels, pool_stride]")
        values["blocks"] = tuple(blocks)
    try:
        return ClassifierSpec(**{k: v if k == "blocks" else _tupled(v) for k, v in values.items()})
    except (RotascanError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid 'classifier': {e}") from e


def _scenario(data: Any, index: int, workspace: Workspace) -> SortingScenario:
    where = f"scenarios[{index}]"
    names = [f.name for f in fields(SortingScenario)]
    values = dict(_check_keys(data, names, where))
    for required in ("name", "kind", "class_names", "object_count", "seeds"):
        if required not in values:
            raise ConfigError(f"'{where}' is missing '{required}'")
    class_names = tuple(str(name) for name in values["class_names"])
    bins = values.get("bins") or default_bins(list(class_names), workspace)
    values["bins"] = {str(name): tuple(float(v) for v in position) for name, position in bins.items()}
    values["class_names"] = class_names
    values["seeds"] = tuple(int(seed) for seed in values["seeds"])
    try:
        scenario = SortingScenario(**values)
    except ConfigError:
        raise
    except (RotascanError, TypeError, ValueError) as e:
        raise ConfigError(f"invalid '{where}': {e}") from e
    check_bins(scenario, workspace)
    return scenario


def config_from_dict(data: Optional[Dict[str, Any]], base_dir: Optional[Path] = None) -> PipelineConfig:
    """
    Map a parsed document onto PipelineConfig.
    Environment fallbacks apply to keys the document leaves out.
    """
    names = [f.name for f in fields(PipelineConfig)]
    data = _check_keys(data, names, "config") if data is not None else {}

    geometry_data = _check_keys(data.get("geometry"), ("prism", "context"), "geometry")
    geometry = GeometrySettings(
        prism=_build(PrismConfig, geometry_data.get("prism"), "geometry.prism"),
        context=_build(GeometryContext, geometry_data.get("context"), "geometry.context"),
    )
    sections = {name: _build(cls, data.get(name), name) for name, cls in SECTIONS.items()}

    scenarios = data.get("scenarios") or []
    if not isinstance(scenarios, list):
        raise ConfigError("'scenarios' must be a list")
    parsed = tuple(_scenario(item, i, sections["workspace"]) for i, item in enumerate(scenarios))
    if len({s.name for s in parsed}) != len(parsed):
        raise ConfigError("scenario names must be unique")

    signatures_file = data.get("signatures_file")
    if signatures_file is not None:
        resolved = Path(signatures_file)
        if not resolved.is_absolute() and base_dir is not None:
            resolved = base_dir / resolved
        if not resolved.exists():
            raise ConfigError(f"'signatures_file' references a missing file: {resolved}")
        signatures_file = str(resolved)

    try:
        seed = int(data["seed"]) if "seed" in data else env_seed()
    except (TypeError, ValueError) as e:
        raise ConfigError(f"'seed' must be an integer: {e}") from e
    output_dir = str(data.get("output_dir") or os.getenv("ROTASCAN_OUTPUT_DIR") or DEFAULT_OUTPUT_DIR)

    return PipelineConfig(geometry=geometry, classifier=_classifier(data.get("classifier")),
                          scenarios=parsed, signatures_file=signatures_file,
                          output_dir=output_dir, seed=seed, **sections)


def load_config(path: Optional[PathLike] = None) -> PipelineConfig:
    """Config from path, else ROTASCAN_CONFIG, else built-in defaults"""
    if path is None:
        path = os.getenv("ROTASCAN_CONFIG") or None
    if path is None:
        logger.info("🔄 No config file given, using built-in defaults")
        return config_from_dict(None)

    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with path.open("r", encoding="utf-8") as f:
            document = yaml.safe_load(f)
    except yaml.YAMLError as e:
        raise ConfigError(f"malformed config {path.name}: {e}") from e
    config = config_from_dict(document, base_dir=path.parent)
    logger.info(f"✅ Loaded config {path} ({len(config.scenarios)} scenarios)")
    return config


def config_to_dict(config: PipelineConfig) -> Dict[str, Any]:
    """Plain mapping of a config; config_from_dict reads it back"""

    def plain(value):
        if is_dataclass(value):
            return {f.name: plain(getattr(value, f.name)) for f in fields(value) if f.init}
        if isinstance(value, (tuple, list)):
            return [plain(v) for v in value]
        if isinstance(value, dict):
            return {k: plain(v) for k, v in value.items()}
        return value

    document = plain(config)
    if document["signatures_file"] is None:
        del document["signatures_file"]
    return document
