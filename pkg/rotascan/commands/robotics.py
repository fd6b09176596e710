"""
Rotascan - Robotics Commands
plan a pick trajectory from a detection report, run sorting trials and campaigns
"""

import argparse
import asyncio
import logging

from rotascan.commands import CommandContext, CommandGroup
from rotascan.commands.perception import train_from_config
from rotascan.errors import ConfigError, DetectionError
from rotascan.imaging.cube_pipeline import build_correction_map
from rotascan.models.config import default_bins, default_scenarios
from rotascan.models.motion import GripperAction
from rotascan.parsers.model_file import read_model
from rotascan.parsers.report_file import (
    read_detection_report,
    write_campaign_csv,
    write_campaign_summary,
    write_trial_report,
)
from rotascan.parsers.trajectory_file import write_trajectory
from rotascan.robotics.sorting_harness import SortingHarness, condition_drop
from rotascan.robotics.trajectory import build_sparse_path, lqt_refine, pixel_to_workspace
from rotascan.utils.report_factory import ReportFactory

logger = logging.getLogger(__name__)


class RoboticsCommands(CommandGroup):
    """
    ROBOTICS
    - pick-and-place trajectories for detected objects
    - sorting trials and discrete/cluttered campaigns with reports and charts
    """

    name = "robotics"

    def register(self, subparsers):
        plan = subparsers.add_parser("plan", help="plan a pick-and-place trajectory for a detected object")
        plan.add_argument("--detections", required=True)
        plan.add_argument("--object", type=int, help="instance id (default: first classified object)")
        plan.add_argument("--out", help="trajectory path (default: <output>/trajectory.txt)")
        plan.set_defaults(handler=self.plan)

        sort = subparsers.add_parser("sort", help="run a sorting trial or campaign")
        sort.add_argument("--scenario", action="append",
                          help="scenario name from the config, repeatable (default: all)")
        sort.add_argument("--model", help="trained model file (default: train from the config)")
        sort.add_argument("--trials", type=int, help="use only the first N seeds of each scenario")
        sort.add_argument("--trial-seed", type=int, help="run a single trial with this seed")
        sort.set_defaults(handler=self.sort)

    def plan(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        report = read_detection_report(args.detections)
        known = [obj for obj in report.objects if obj.is_known and obj.suction_points]
        if args.object is not None:
            known = [obj for obj in known if obj.instance_id == args.object]
        if not known:
            raise DetectionError(f"no classified object to pick in {args.detections}")
        target = known[0]

        workspace = ctx.config.workspace
        cmap = build_correction_map(report.geom, report.pitch)
        point = target.suction_points[0]
        grasp = pixel_to_workspace(point.row, point.col, cmap, workspace)
        bins = default_bins(report.class_names, workspace)
        path = build_sparse_path(grasp, bins[target.class_name], workspace)
        trajectory = lqt_refine(path, ctx.config.lqt)
        out = write_trajectory(args.out or ctx.output("trajectory.txt"), trajectory)
        grasp_index = trajectory.marker_index(GripperAction.SUCTION_ON)
        print(f"object {target.instance_id} ({target.class_name}): {trajectory.sample_count} samples, "
              f"{trajectory.duration:.2f} s, suction on at sample {grasp_index} -> {out}")
        return 0

    def sort(self, args: argparse.Namespace, ctx: CommandContext) -> int:
        config = ctx.config
        bundle = read_model(args.model) if args.model else train_from_config(ctx)
        signatures = ctx.signatures(bundle.mnf.n_bands)
        scenarios = config.scenarios or default_scenarios(bundle.class_names, workspace=config.workspace)
        if args.scenario:
            by_name = {s.name: s for s in scenarios}
            missing = [name for name in args.scenario if name not in by_name]
            if missing:
                raise ConfigError(f"unknown scenario(s) {missing} (have: {', '.join(by_name)})")
            scenarios = [by_name[name] for name in args.scenario]

        harness = SortingHarness(bundle, signatures, config.prism, config.geom,
                                 lqt=config.lqt, workspace=config.workspace, detection=config.detection)
        if args.trial_seed is not None:
            for scenario in scenarios:
                report = harness.run_trial(scenario, args.trial_seed)
                out = write_trial_report(ctx.output(f"trial_{scenario.name}_{args.trial_seed}.yaml"), report)
                print(f"{scenario.name} seed {args.trial_seed}: {report.correct_picks}/{len(report.outcomes)} "
                      f"correct in {report.scan_count} scans -> {out}")
            return 0

        results = []
        for scenario in scenarios:
            result = asyncio.run(harness.run_campaign(scenario, args.trials))
            for trial in result.trials:
                write_trial_report(ctx.output(f"trial_{scenario.name}_{trial.seed}.yaml"), trial)
            results.append(result)
            rates = " ".join(f"{name}={result.mean[name]:.3f}±{result.std[name]:.3f}" for name in result.mean)
            print(f"{scenario.name} ({scenario.kind}, {len(result.trials)} trials): {rates}")

        write_campaign_summary(ctx.output("campaign.yaml"), results)
        write_campaign_csv(ctx.output("campaign.csv"), results)
        ReportFactory.campaign_chart(ctx.output("campaign.png"), results)
        for name, drop in condition_drop(results).items():
            print(f"discrete - cluttered {name}: {drop:+.3f}")
        return 0


def setup(groups: list):
    groups.append(RoboticsCommands())
