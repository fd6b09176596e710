"""
Rotascan - Perception Commands
train and classify
"""

import argparse
import logging
from pathlib import Path

from rotascan.commands import CommandContext, CommandGroup
from rotascan.errors import DetectionError
from rotascan.imaging.cube_pipeline import pseudo_rgb
from rotascan.models.perception import DetectionReport
from rotascan.parsers.cube_io import read_cube
from rotascan.parsers.model_file import read_model, write_model
from rotascan.parsers.report_file import write_detection_report
from rotascan.perception.training import PerceptionBundle, detect_objects, train_perception
from rotascan.utils.report_factory import ReportFactory

logger = logging.getLogger(__name__)


def train_from_config(ctx: CommandContext) -> PerceptionBundle:
    config = ctx.config
    signatures = ctx.signatures()
    background = ctx.background(signatures[0].band_centers)
    return train_perception(signatures, background, config.prism, config.geom,
                            spec=config.classifier, keep_fraction=config.mnf.keep_fraction,
                            retained_k=config.mnf.retained_k, noise_sigma=config.training.noise_sigma,
                            seed=ctx.seed, samples_per_class=config.training.samples_per_class,
                            objects_per_class=config.training.objects_per_class)


class PerceptionCommands(CommandGroup):
    """
    PERCEPTION
    - trains band reduction and pixel classifier into one model file
    - classifies corrected cubes into a detection report and overlay
    """

    name = "perception"

    def register(self, subparsers):
        train = subparsers.add_parser("train", help="train MNF and the pixel classifier on a rendered scene")
        train.add_argument("--out", help="model path (default: <output>/model.rsm)")
        train.set_defaults(handler=self.train)

        classify = subparsers.add_parser("classify", help="detect and classify objects in a corrected cube")
        classify.add_argument("--cube", required=True)
        classify.add_argument("--model", required=True)
        classify.add_argument("--out", help="report path (default: <output>/detections.yaml)")
        classify.set_defaults(handler=self.classify)

    def train(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        bundle = train_from_config(ctx)
        out = write_model(args.out or ctx.output("model.rsm"), bundle)
        print(f"trained {len(bundle.class_names)} classes, accuracy {bundle.classifier.train_accuracy:.4f} -> {out}")
        return 0

    def classify(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        cube = read_cube(args.cube)
        if not cube.corrected:
            raise DetectionError(f"{args.cube} is not distortion-corrected; run 'correct' first")
        bundle = read_model(args.model)
        objects = detect_objects(cube, bundle, ctx.config.detection)
        report = DetectionReport(source=str(args.cube), geom=cube.geom, pitch=float(cube.pitch),
                                 class_names=bundle.class_names, objects=objects)
        out = write_detection_report(args.out or ctx.output("detections.yaml"), report)
        overlay = ReportFactory.save_overlay(Path(out).with_suffix(".png"), pseudo_rgb(cube), objects,
                                             bundle.class_names)
        for obj in objects:
            print(f"object {obj.instance_id}: {obj.class_name} purity={obj.purity:.3f} pixels={obj.pixel_count}")
        print(f"{len(objects)} objects -> {out}, overlay {overlay}")
        return 0


def setup(groups: list):
    groups.append(PerceptionCommands())
