"""
Rotascan - Imaging Commands
simulate, reconstruct, correct, geomtest and resolution-chart
"""

import argparse
import logging
import math

import numpy as np

from rotascan.commands import CommandContext, CommandGroup
from rotascan.imaging.cube_pipeline import build_correction_map, correct_distortion, reconstruct
from rotascan.imaging.resolution import DEFAULT_HEIGHTS, resolution_sweep
from rotascan.imaging.scan_geometry import fov_degrees, gamma_of_theta, scaling_factor_k, scan_duration_seconds
from rotascan.imaging.scene_simulator import SCENE_KINDS, generate_scene, render_scan
from rotascan.models.geometry import THETA_MAX, THETA_MIN
from rotascan.parsers.cube_io import INTERLEAVES, read_cube, write_cube
from rotascan.parsers.frame_stream import load_frames, save_frames
from rotascan.parsers.scene_file import read_scene, write_scene

logger = logging.getLogger(__name__)


class ImagingCommands(CommandGroup):
    """
    IMAGING
    - scene simulation to a frame stream
    - cube reconstruction and distortion correction
    - geometry tables and the resolution chart
    """

    name = "imaging"

    def register(self, subparsers):
        simulate = subparsers.add_parser("simulate", help="render a scene scan to a frame stream")
        simulate.add_argument("--scene", help="scene YAML to render instead of generating one")
        simulate.add_argument("--kind", choices=SCENE_KINDS, default="discrete")
        simulate.add_argument("--count", type=int, default=4, help="objects in a generated scene")
        simulate.add_argument("--noise", type=float, help="per-pixel noise sigma (default: training noise)")
        simulate.add_argument("--out", help="frame stream path (default: <output>/frames.rsf)")
        simulate.set_defaults(handler=self.simulate)

        recon = subparsers.add_parser("reconstruct", help="assemble a raw cube from a frame stream")
        recon.add_argument("--frames", required=True)
        recon.add_argument("--out", help="cube header path (default: <output>/raw_cube.hdr)")
        recon.add_argument("--interleave", choices=INTERLEAVES, default="bsq")
        recon.set_defaults(handler=self.reconstruct)

        correct = subparsers.add_parser("correct", help="resample a raw cube onto the uniform metric grid")
        correct.add_argument("--cube", required=True)
        correct.add_argument("--pitch", type=float, help="target pitch mm (default: line resolution)")
        correct.add_argument("--out", help="cube header path (default: <output>/corrected_cube.hdr)")
        correct.add_argument("--interleave", choices=INTERLEAVES, default="bsq")
        correct.set_defaults(handler=self.correct)

        geomtest = subparsers.add_parser("geomtest", help="print field of view, k(theta) and scan duration")
        geomtest.add_argument("--n", type=int, default=None, help="prism facet count (default: config)")
        geomtest.add_argument("--samples", type=int, default=5, help="rows of the k(theta) table")
        geomtest.set_defaults(handler=self.geomtest)

        chart = subparsers.add_parser("resolution-chart", help="smallest resolved bar width per working height")
        chart.add_argument("--height", type=float, action="append",
                           help="working height mm, repeatable (default: 330 380 450 550 600)")
        chart.add_argument("--bars", type=int, default=15)
        chart.set_defaults(handler=self.resolution_chart)

    def simulate(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        config = ctx.config
        if args.scene:
            scene = read_scene(args.scene)
        else:
            signatures = ctx.signatures()
            noise = config.training.noise_sigma if args.noise is None else args.noise
            scene = generate_scene(args.kind, signatures, args.count, ctx.seed,
                                   background=ctx.background(signatures[0].band_centers), noise_sigma=noise)
            write_scene(ctx.output("scene.yaml"), scene)
        out = args.out or ctx.output("frames.rsf")
        count = save_frames(out, render_scan(scene, config.prism, config.geom))
        print(f"simulated {len(scene.objects)} objects -> {count} frames -> {out}")
        return 0

    def reconstruct(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        frames = load_frames(args.frames)
        n_bands = frames[0].n_bands if frames else 0
        cube = reconstruct(frames, ctx.config.geom, ctx.band_centers(n_bands) if n_bands else None)
        out = write_cube(args.out or ctx.output("raw_cube.hdr"), cube, args.interleave)
        flagged = int(np.count_nonzero(cube.interpolated_rows))
        print(f"reconstructed {cube.shape} from {len(frames)} frames ({flagged} interpolated rows) -> {out}")
        return 0

    def correct(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        cube = read_cube(args.cube)
        cmap = build_correction_map(cube.geom, args.pitch)
        corrected = correct_distortion(cube, cmap)
        out = write_cube(args.out or ctx.output("corrected_cube.hdr"), corrected, args.interleave)
        print(f"corrected {cube.shape} -> {corrected.shape} at {cmap.target_pitch:.3f} mm -> {out}")
        return 0

    def geomtest(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        prism = ctx.config.prism
        n_sides = args.n if args.n is not None else prism.n_sides
        print(f"FOV {fov_degrees(n_sides):.1f}")
        print(f"duration {scan_duration_seconds(prism):.3f} s at {prism.motor_speed:g} rpm")
        print("theta_deg gamma_deg k")
        for theta in np.linspace(THETA_MIN, THETA_MAX, max(args.samples, 2)):
            gamma = gamma_of_theta(theta)
            print(f"{math.degrees(theta):.3f} {math.degrees(gamma):.3f} {scaling_factor_k(theta):.6f}")
        return 0

    def resolution_chart(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        heights = args.height or list(DEFAULT_HEIGHTS)
        print("height_mm dx_mm smallest_mm lp_per_mm")
        for result in resolution_sweep(ctx.config.geom, heights, args.bars):
            if result.smallest_resolved_mm is None:
                print(f"{result.working_height:.1f} {result.line_resolution_dx:.4f} unresolved -")
            else:
                print(f"{result.working_height:.1f} {result.line_resolution_dx:.4f} "
                      f"{result.smallest_resolved_mm:.4f} {result.line_pairs_per_mm:.3f}")
        return 0


def setup(groups: list):
    groups.append(ImagingCommands())
