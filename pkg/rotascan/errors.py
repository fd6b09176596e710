"""
Rotascan - Error Types
Every failure raised by the library carries a short machine code used by the CLI
"""

from typing import Optional


class RotascanError(Exception):
    """Base class for all rotascan failures"""

    code = "rotascan_error"

    def __init__(self, message: str, code: Optional[str] = None):
        super().__init__(message)
        if code:
            self.code = code

    def one_line(self) -> str:
        """Single-line machine-parsable rendering for the CLI"""
        message = str(self).replace('"', "'").replace("\n", " ")
        return f'error code={self.code} type={type(self).__name__} message="{message}"'


class GeometryError(RotascanError):
    code = "geometry"


class SceneGenerationError(RotascanError):
    code = "scene_generation"


class ReconstructionError(RotascanError):
    code = "reconstruction"


class CorrectionError(RotascanError):
    code = "correction"


class SpectralModelError(RotascanError):
    code = "spectral_model"


class DetectionError(RotascanError):
    code = "detection"


class TrajectoryError(RotascanError):
    code = "trajectory"


class ConfigError(RotascanError):
    code = "config"


class FileFormatError(RotascanError):
    code = "file_format"


class MagicMismatchError(FileFormatError):
    code = "magic_mismatch"


class VersionMismatchError(FileFormatError):
    code = "version_mismatch"


class ChecksumError(FileFormatError):
    code = "checksum"

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at byte offset {offset}")
        self.offset = offset


class TruncatedStreamError(ChecksumError):
    code = "truncated"


class UsageError(RotascanError):
    code = "usage"
