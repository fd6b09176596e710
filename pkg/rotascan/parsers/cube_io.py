"""
Rotascan - Cube File Parser
ENVI header + raw float32 payload through spectral, with the scan geometry and
correction state carried as auxiliary header keys
"""

import logging
from pathlib import Path
from typing import Dict, Union

import numpy as np
import spectral.io.envi as envi

from rotascan.errors import FileFormatError, VersionMismatchError
from rotascan.models.cube import SENTINEL_VALUE, HyperspectralCube
from rotascan.models.geometry import GeometryContext

logger = logging.getLogger(__name__)

CUBE_FORMAT_MAJOR = 1
INTERLEAVES = ("bsq", "bil")
IMAGE_EXT = ".img"

PathLike = Union[str, Path]


def header_path(path: PathLike) -> Path:
    path = Path(path)
    return path if path.suffix.lower() == ".hdr" else path.with_suffix(".hdr")


def _cube_metadata(cube: HyperspectralCube, interleave: str) -> Dict[str, object]:
    geom = cube.geom
    metadata = {
        "description": "rotascan hyperspectral cube",
        "interleave": interleave,
        "byte order": 0,
        "wavelength units": "nm",
        "wavelength": [repr(float(w)) for w in cube.band_centers],
        "rotascan format": CUBE_FORMAT_MAJOR,
        "rotascan corrected": int(cube.corrected),
        "rotascan working height": repr(float(geom.working_height)),
        "rotascan line resolution": repr(float(geom.line_resolution_dx)),
        "rotascan rows": geom.rows_H,
        "rotascan cols": geom.cols_W,
        "rotascan interpolated rows": [str(i) for i in np.flatnonzero(cube.interpolated_rows)] or ["none"],
    }
    if cube.corrected:
        metadata["rotascan pitch"] = repr(float(cube.pitch))
        metadata["data ignore value"] = repr(SENTINEL_VALUE)
    return metadata


def write_cube(path: PathLike, cube: HyperspectralCube, interleave: str = "bsq") -> Path:
    """Write header and payload; returns the header path"""
    if interleave not in INTERLEAVES:
        raise FileFormatError(f"unsupported interleave '{interleave}' (use one of {INTERLEAVES})")
    hdr = header_path(path)
    hdr.parent.mkdir(parents=True, exist_ok=True)
    envi.save_image(str(hdr), cube.data, dtype=np.float32, interleave=interleave, byteorder=0,
                    metadata=_cube_metadata(cube, interleave), ext=IMAGE_EXT, force=True)
    logger.info(f"✅ Cube {cube.shape} written to {hdr} ({interleave}, corrected={cube.corrected})")
    return hdr


def _meta(metadata: Dict[str, object], key: str, path: Path) -> object:
    try:
        return metadata[key]
    except KeyError:
        raise FileFormatError(f"cube header {path.name} is missing '{key}'")


def read_cube(path: PathLike) -> HyperspectralCube:
    hdr = header_path(path)
    if not hdr.exists():
        raise FileFormatError(f"cube header not found: {hdr}")
    try:
        image = envi.open(str(hdr))
    except (envi.EnviException, OSError) as e:
        raise FileFormatError(f"cannot open cube {hdr}: {e}") from e

    metadata = image.metadata
    if metadata.get("interleave", "").lower() not in INTERLEAVES:
        raise FileFormatError(f"cube {hdr.name} uses unsupported interleave '{metadata.get('interleave')}'")
    version = int(metadata.get("rotascan format", CUBE_FORMAT_MAJOR))
    if version > CUBE_FORMAT_MAJOR:
        raise VersionMismatchError(f"cube format {version} is newer than supported {CUBE_FORMAT_MAJOR}")

    data = np.array(image.open_memmap(interleave="bip"), dtype=np.float32)
    geom = GeometryContext(
        working_height=float(_meta(metadata, "rotascan working height", hdr)),
        line_resolution_dx=float(_meta(metadata, "rotascan line resolution", hdr)),
        rows_H=int(_meta(metadata, "rotascan rows", hdr)),
        cols_W=int(_meta(metadata, "rotascan cols", hdr)),
    )
    band_centers = np.array([float(w) for w in _meta(metadata, "wavelength", hdr)])
    corrected = int(metadata.get("rotascan corrected", 0)) == 1

    interpolated = np.zeros(data.shape[0], dtype=bool)
    flagged = metadata.get("rotascan interpolated rows", [])
    if isinstance(flagged, str):
        flagged = [flagged]
    for value in flagged:
        if value != "none":
            interpolated[int(value)] = True

    valid = None
    pitch = None
    if corrected:
        pitch = float(_meta(metadata, "rotascan pitch", hdr))
        valid = ~np.all(data == np.float32(SENTINEL_VALUE), axis=2)

    cube = HyperspectralCube(data=data, geom=geom, band_centers=band_centers, corrected=corrected,
                             interpolated_rows=interpolated, valid_mask=valid, pitch=pitch)
    logger.info(f"📊 Read cube {cube.shape} from {hdr.name} (corrected={corrected})")
    return cube
