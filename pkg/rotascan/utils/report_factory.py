"""
Rotascan - Report Factory
Centralised rendering of detection overlays and campaign charts with consistent colours
"""

import logging
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from PIL import Image, ImageDraw  # noqa: E402

from rotascan.models.perception import DetectedObject  # noqa: E402
from rotascan.models.sorting import HUMAN_BASELINE_SUCCESS, CampaignResult  # noqa: E402

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


class ReportFactory:
    """
    Centralised report rendering
    - class colours cycle through CLASS_PALETTE in class-name order
    - status colours are shared by overlays and charts
    """

    COLORS = {
        'unknown': 0x95A5A6,        # Gray
        'suction_primary': 0x00FF00,
        'suction_backup': 0xFFD700,
        'discrete': 0x2980B9,       # Blue
        'cluttered': 0xC0392B,      # Red
        'baseline': 0x64748B,
        'text': 0xFFFFFF,
    }

    CLASS_PALETTE = [0x2ECC71, 0xF39C12, 0x8E44AD, 0x00D38A, 0xEF4444, 0x1E90FF, 0xFACC15, 0xC084FC]

    @staticmethod
    def rgb(color: int) -> Tuple[int, int, int]:
        return (color >> 16) & 0xFF, (color >> 8) & 0xFF, color & 0xFF

    @classmethod
    def hex(cls, color: int) -> str:
        return "#{:02x}{:02x}{:02x}".format(*cls.rgb(color))

    @classmethod
    def class_color(cls, class_name: str, class_names: Sequence[str]) -> int:
        if class_name not in class_names:
            return cls.COLORS['unknown']
        return cls.CLASS_PALETTE[list(class_names).index(class_name) % len(cls.CLASS_PALETTE)]

    @classmethod
    def detection_overlay(cls, rgb: np.ndarray, objects: Sequence[DetectedObject],
                          class_names: Sequence[str], scale: int = 3) -> Image.Image:
        """Pseudo-RGB image with a box, label and ranked suction points per object"""
        pixels = (np.clip(rgb, 0.0, 1.0) * 255).round().astype(np.uint8)
        image = Image.fromarray(pixels)
        image = image.resize((image.width * scale, image.height * scale), Image.Resampling.NEAREST)
        draw = ImageDraw.Draw(image)

        for obj in objects:
            color = cls.rgb(cls.class_color(obj.class_name, class_names))
            r0, c0, r1, c1 = obj.bbox
            box = (c0 * scale, r0 * scale, (c1 + 1) * scale - 1, (r1 + 1) * scale - 1)
            draw.rectangle(box, outline=color, width=2)
            draw.text((box[0] + 2, box[1] + 2), f"{obj.instance_id}:{obj.class_name}",
                      fill=cls.rgb(cls.COLORS['text']))
            for point in obj.suction_points:
                radius = 4 if point.rank == 1 else 2
                key = 'suction_primary' if point.rank == 1 else 'suction_backup'
                x = (point.col + 0.5) * scale
                y = (point.row + 0.5) * scale
                draw.ellipse((x - radius, y - radius, x + radius, y + radius), fill=cls.rgb(cls.COLORS[key]))
        return image

    @classmethod
    def save_overlay(cls, path: PathLike, rgb: np.ndarray, objects: Sequence[DetectedObject],
                     class_names: Sequence[str], scale: int = 3) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        cls.detection_overlay(rgb, objects, class_names, scale).save(path, format="PNG")
        logger.info(f"✅ Detection overlay saved to {path}")
        return path

    @classmethod
    def campaign_chart(cls, path: PathLike, results: Sequence[CampaignResult]) -> Path:
        """Grouped bars: one group per class, one bar per campaign, std as error bars"""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        class_names: List[str] = []
        for result in results:
            class_names += [name for name in result.mean if name not in class_names]

        positions = np.arange(len(class_names))
        width = 0.8 / max(len(results), 1)
        fig, ax = plt.subplots(figsize=(max(6.0, 1.5 * len(class_names)), 4.0))
        for i, result in enumerate(results):
            means = [result.mean.get(name, 0.0) for name in class_names]
            stds = [result.std.get(name, 0.0) for name in class_names]
            color = cls.COLORS.get(result.kind, cls.CLASS_PALETTE[i % len(cls.CLASS_PALETTE)])
            ax.bar(positions + (i - (len(results) - 1) / 2) * width, means, width, yerr=stds, capsize=3,
                   color=cls.hex(color), label=f"{result.scenario} ({result.kind})")
        ax.axhline(HUMAN_BASELINE_SUCCESS, color=cls.hex(cls.COLORS['baseline']), linestyle="--",
                   label="human baseline")
        ax.set_xticks(positions)
        ax.set_xticklabels(class_names)
        ax.set_ylim(0.0, 1.05)
        ax.set_ylabel("success rate")
        ax.legend(loc="lower right", fontsize="small")
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        logger.info(f"📊 Campaign chart saved to {path}")
        return path

