"""
Rotascan - Command Groups
Shared context and base class for the CLI command groups loaded by name
"""

import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional

import numpy as np

from rotascan.imaging.signatures import background_signature, default_band_centers, default_signatures
from rotascan.models.config import PipelineConfig
from rotascan.models.scene import SpectralSignature
from rotascan.parsers.scene_file import read_signatures

logger = logging.getLogger(__name__)


@dataclass
class CommandContext:
    """Resolved configuration every command handler receives"""

    config: PipelineConfig
    seed: int
    output_dir: Path

    def output(self, name: str) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir / name

    def signatures(self, n_bands: Optional[int] = None) -> List[SpectralSignature]:
        """Signature library from the config file, else the built-in textiles"""
        if self.config.signatures_file:
            return read_signatures(self.config.signatures_file)
        return default_signatures(default_band_centers(n_bands or self.config.training.band_count))

    def background(self, band_centers: np.ndarray) -> SpectralSignature:
        return background_signature(band_centers)

    def band_centers(self, n_bands: int) -> np.ndarray:
        """Wavelengths for frames of n_bands, matching the signature library when it fits"""
        library = self.signatures(n_bands)
        if library and library[0].n_bands == n_bands:
            return library[0].band_centers
        return default_band_centers(n_bands)


class CommandGroup:
    """
    COMMAND GROUP
    - register() adds subcommands, each bound to a handler with set_defaults
    - handlers take (args, context) and return an exit status
    """

    name = "group"

    def register(self, subparsers: argparse._SubParsersAction) -> None:
        raise NotImplementedError
