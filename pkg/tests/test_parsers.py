import asyncio
import csv

import numpy as np
import pytest
import yaml

from rotascan.errors import (
    ChecksumError,
    ConfigError,
    FileFormatError,
    MagicMismatchError,
    TruncatedStreamError,
    VersionMismatchError,
)
from rotascan.imaging.scene_simulator import DISCRETE, generate_scene
from rotascan.models.cube import SENTINEL_VALUE, HyperspectralCube
from rotascan.models.motion import GripperAction, Waypoint
from rotascan.models.perception import DetectedObject, DetectionReport, SuctionPoint
from rotascan.models.scene import FramePacket
from rotascan.models.sorting import CampaignResult
from rotascan.parsers.config_parser import config_from_dict, config_to_dict, load_config
from rotascan.parsers.cube_io import read_cube, write_cube
from rotascan.parsers.frame_stream import (
    PREAMBLE,
    FrameStreamWriter,
    load_frames,
    pack_preamble,
    record_size,
    save_frames,
)
from rotascan.parsers.model_file import manifest_path, read_model, write_model
from rotascan.parsers.report_file import (
    CAMPAIGN_COLUMNS,
    read_campaign_csv,
    read_detection_report,
    write_campaign_csv,
    write_campaign_summary,
    write_detection_report,
)
from rotascan.parsers.scene_file import (
    read_scene,
    read_signature_table,
    read_signatures,
    write_scene,
    write_signature_table,
    write_signatures,
)
from rotascan.parsers.trajectory_file import read_trajectory, write_trajectory
from rotascan.robotics.trajectory import lqt_refine

WIDTH, BANDS, COUNT = 7, 5, 10


def _frames(rng, count=COUNT):
    return [FramePacket(theta=0.2 + 0.01 * i, timestamp=i / 300.0,
                        samples=rng.normal(size=(WIDTH, BANDS)).astype(np.float32))
            for i in range(count)]


@pytest.fixture
def stream(tmp_path, rng):
    frames = _frames(rng)
    path = tmp_path / "frames.rsf"
    assert save_frames(path, frames) == COUNT
    return path, frames


def test_frame_stream_is_bit_exact(stream):
    path, frames = stream
    loaded = load_frames(path)
    assert len(loaded) == COUNT
    for ours, theirs in zip(loaded, frames):
        assert ours.theta == theirs.theta
        assert ours.timestamp == theirs.timestamp
        assert ours.samples.tobytes() == theirs.samples.tobytes()
    assert path.stat().st_size == PREAMBLE.size + COUNT * record_size(WIDTH, BANDS) + 4


def test_corrupted_byte_fails_the_checksum(stream):
    path, _ = stream
    raw = bytearray(path.read_bytes())
    raw[PREAMBLE.size + 20] ^= 0xFF
    path.write_bytes(bytes(raw))
    with pytest.raises(ChecksumError) as caught:
        load_frames(path)
    assert not isinstance(caught.value, TruncatedStreamError)
    assert caught.value.offset == PREAMBLE.size + COUNT * record_size(WIDTH, BANDS)


def test_truncated_stream_reports_last_complete_record(stream):
    path, _ = stream
    path.write_bytes(path.read_bytes()[:-10])
    with pytest.raises(TruncatedStreamError) as caught:
        load_frames(path)
    assert caught.value.offset == PREAMBLE.size + (COUNT - 1) * record_size(WIDTH, BANDS)
    assert "offset" in str(caught.value)


def test_preamble_checks(stream):
    path, _ = stream
    raw = path.read_bytes()
    path.write_bytes(b"NOTFRAME" + raw[8:])
    with pytest.raises(MagicMismatchError):
        load_frames(path)
    path.write_bytes(pack_preamble(WIDTH, BANDS, major=2) + raw[PREAMBLE.size:])
    with pytest.raises(VersionMismatchError):
        load_frames(path)


def test_writer_rejects_empty_and_mismatched_frames(tmp_path, rng):
    with pytest.raises(FileFormatError):
        save_frames(tmp_path / "empty.rsf", [])
    frames = _frames(rng, 2)
    frames[1] = FramePacket(0.3, 0.1, np.zeros((WIDTH + 1, BANDS)))
    with pytest.raises(FileFormatError, match="does not match"):
        save_frames(tmp_path / "bad.rsf", frames)


def test_writer_batches_frames(tmp_path, rng):
    frames = _frames(rng, 5)

    async def write():
        writer = FrameStreamWriter(tmp_path / "batched.rsf", WIDTH, BANDS, batch_size=4)
        async with writer:
            for frame in frames[:3]:
                await writer.queue_frame(frame)
            before = writer.get_queue_stats()
            await writer.queue_frame(frames[3])
            after = writer.get_queue_stats()
            await writer.queue_frame(frames[4])
        return before, after, writer.get_queue_stats()

    before, after, closed = asyncio.run(write())
    assert before == {"queued_frames": 3, "frames_written": 0, "bytes_written": PREAMBLE.size}
    assert after["queued_frames"] == 0 and after["frames_written"] == 4
    assert closed["frames_written"] == 5
    assert closed["bytes_written"] == (tmp_path / "batched.rsf").stat().st_size
    assert len(load_frames(tmp_path / "batched.rsf")) == 5


@pytest.mark.parametrize("interleave", ["bsq", "bil"])
def test_raw_cube_round_trip(tmp_path, rng, geom, band_centers, interleave):
    data = rng.uniform(size=(geom.rows_H, geom.cols_W, band_centers.size)).astype(np.float32)
    interpolated = np.zeros(geom.rows_H, dtype=bool)
    interpolated[[3, 40]] = True
    cube = HyperspectralCube(data=data, geom=geom, band_centers=band_centers, interpolated_rows=interpolated)
    loaded = read_cube(write_cube(tmp_path / "raw.img", cube, interleave))
    assert loaded.data.tobytes() == cube.data.tobytes()
    assert not loaded.corrected
    assert loaded.geom == geom
    assert np.array_equal(loaded.band_centers, band_centers)
    assert np.array_equal(loaded.interpolated_rows, interpolated)


def test_corrected_cube_keeps_pitch_and_mask(tmp_path, rng, geom, band_centers):
    data = rng.uniform(size=(30, 20, band_centers.size)).astype(np.float32)
    valid = np.ones((30, 20), dtype=bool)
    valid[:4] = False
    valid[:, -2:] = False
    data[~valid] = SENTINEL_VALUE
    cube = HyperspectralCube(data=data, geom=geom, band_centers=band_centers, corrected=True,
                             valid_mask=valid, pitch=2.5)
    hdr = write_cube(tmp_path / "corrected", cube)
    assert hdr.name == "corrected.hdr"
    loaded = read_cube(hdr)
    assert loaded.corrected and loaded.pitch == 2.5
    assert np.array_equal(loaded.valid_mask, valid)
    assert loaded.data.tobytes() == data.tobytes()


def test_cube_io_errors(tmp_path, geom, band_centers):
    cube = HyperspectralCube(data=np.zeros((geom.rows_H, geom.cols_W, band_centers.size)), geom=geom,
                             band_centers=band_centers)
    with pytest.raises(FileFormatError, match="interleave"):
        write_cube(tmp_path / "x.hdr", cube, "bip")
    with pytest.raises(FileFormatError, match="not found"):
        read_cube(tmp_path / "missing.hdr")


def test_model_file_restores_predictions(tmp_path, perception_bundle):
    path = write_model(tmp_path / "model.rsm", perception_bundle)
    assert manifest_path(path).exists()
    assert "classes: " + ", ".join(perception_bundle.class_names) in manifest_path(path).read_text()
    loaded = read_model(path)
    x = np.random.default_rng(3).normal(size=(25, perception_bundle.classifier.input_length))
    assert np.array_equal(loaded.classifier.predict_proba(x), perception_bundle.classifier.predict_proba(x))
    assert np.array_equal(loaded.mnf.components, perception_bundle.mnf.components)
    assert loaded.mnf.retained_k == perception_bundle.mnf.retained_k
    assert loaded.class_names == perception_bundle.class_names
    assert loaded.classifier.train_accuracy == perception_bundle.classifier.train_accuracy

    path.write_bytes(b"XXXX" + path.read_bytes()[4:])
    with pytest.raises(MagicMismatchError):
        read_model(path)


def test_trajectory_file_round_trip(tmp_path):
    path = [Waypoint((300.0, 0.0, 100.0), GripperAction.SUCTION_ON, dwell=0.05),
            Waypoint((420.0, 60.0, 150.0), GripperAction.SUCTION_OFF)]
    trajectory = lqt_refine(path)
    loaded = read_trajectory(write_trajectory(tmp_path / "move.traj", trajectory))
    assert loaded.dt == trajectory.dt
    assert np.array_equal(loaded.positions, trajectory.positions)
    assert np.array_equal(loaded.velocities, trajectory.velocities)
    assert loaded.waypoint_indices == trajectory.waypoint_indices
    assert loaded.action_column() == trajectory.action_column()


def test_trajectory_file_rejects_bad_rows(tmp_path):
    path = tmp_path / "bad.traj"
    path.write_text("# dt 0.01\ntime x y z vx vy vz action\n0 1 2 3 0 0 0\n")
    with pytest.raises(FileFormatError, match="fields"):
        read_trajectory(path)


def test_detection_report_round_trip(tmp_path, geom):
    obj = DetectedObject(instance_id=2, class_id=3, class_name="wool", purity=0.875, bbox=(4, 5, 20, 30),
                         centroid=(12.25, 17.5), pixel_count=300,
                         suction_points=[SuctionPoint(1, 12, 17, 20.0), SuctionPoint(2, 8, 25, 12.5)])
    report = DetectionReport(source="cube.hdr", geom=geom, pitch=2.5, class_names=["linen", "silk", "wool"],
                             objects=[obj])
    loaded = read_detection_report(write_detection_report(tmp_path / "detections.yaml", report))
    assert loaded.to_dict() == report.to_dict()
    assert loaded.objects[0].suction_points[1] == SuctionPoint(2, 8, 25, 12.5)


def test_campaign_outputs(tmp_path):
    results = [CampaignResult("d", "discrete", [], {"linen": 0.9, "silk": 0.8}, {"linen": 0.05, "silk": 0.1}),
               CampaignResult("c", "cluttered", [], {"linen": 0.6}, {"linen": 0.2})]
    rows = read_campaign_csv(write_campaign_csv(tmp_path / "campaign.csv", results))
    assert [(r["scenario"], r["class"]) for r in rows] == [("d", "linen"), ("d", "silk"), ("c", "linen")]
    assert rows[0]["mean_success"] == 0.9 and rows[2]["std_success"] == 0.2
    with (tmp_path / "campaign.csv").open() as f:
        assert tuple(next(csv.reader(f))) == CAMPAIGN_COLUMNS

    summary = yaml.safe_load(write_campaign_summary(tmp_path / "summary.yaml", results).read_text())
    assert [c["kind"] for c in summary["campaigns"]] == ["discrete", "cluttered"]
    assert summary["discrete_minus_cluttered"] == {"linen": pytest.approx(0.3)}


def test_signatures_and_scene_round_trip(tmp_path, signatures, background):
    loaded = read_signatures(write_signatures(tmp_path / "signatures.yaml", signatures))
    assert [s.class_name for s in loaded] == [s.class_name for s in signatures]
    assert np.allclose(loaded[0].reflectance, signatures[0].reflectance)

    scene = generate_scene(DISCRETE, signatures, 3, seed=5, background=background, noise_sigma=0.01)
    again = read_scene(write_scene(tmp_path / "scene.yaml", scene))
    assert again.to_dict() == scene.to_dict()

    write_signatures(tmp_path / "twice.yaml", [signatures[0], signatures[0]])
    with pytest.raises(FileFormatError, match="repeats"):
        read_signatures(tmp_path / "twice.yaml")


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="mnf.bogus"):
        config_from_dict({"mnf": {"bogus": 1}})
    with pytest.raises(ConfigError, match="geometry.context.height"):
        config_from_dict({"geometry": {"context": {"height": 600}}})
    with pytest.raises(ConfigError, match="config.extra"):
        config_from_dict({"extra": True})
    with pytest.raises(ConfigError, match="keep_fraction"):
        config_from_dict({"mnf": {"keep_fraction": 0.0}})


def test_config_signatures_file(tmp_path, signatures):
    with pytest.raises(ConfigError, match="missing"):
        config_from_dict({"signatures_file": "nope.yaml"}, base_dir=tmp_path)
    write_signatures(tmp_path / "lib.yaml", signatures)
    config = config_from_dict({"signatures_file": "lib.yaml"}, base_dir=tmp_path)
    assert config.signatures_file == str(tmp_path / "lib.yaml")


def test_config_environment_fallbacks(monkeypatch, tmp_path):
    monkeypatch.setenv("ROTASCAN_SEED", "17")
    monkeypatch.setenv("ROTASCAN_OUTPUT_DIR", str(tmp_path / "runs"))
    config = config_from_dict({})
    assert config.seed == 17
    assert config.output_dir == str(tmp_path / "runs")
    assert config_from_dict({"seed": 3}).seed == 3
    monkeypatch.setenv("ROTASCAN_SEED", "abc")
    with pytest.raises(ConfigError, match="ROTASCAN_SEED"):
        config_from_dict({})


def test_config_file_round_trip(tmp_path, monkeypatch):
    monkeypatch.delenv("ROTASCAN_SEED", raising=False)
    document = {
        "geometry": {"context": {"working_height": 450.0, "rows_H": 175, "cols_W": 96}},
        "classifier": {"blocks": [[3, 8, 2]], "class_count": 4, "epochs": 5},
        "scenarios": [{"name": "small", "kind": "cluttered", "class_names": ["linen", "silk"],
                       "object_count": 6, "seeds": [1, 2]}],
        "seed": 9,
    }
    path = tmp_path / "config.yaml"
    path.write_text(yaml.safe_dump(document))
    config = load_config(path)
    assert config.geom.working_height == 450.0
    assert config.classifier.blocks[0].channels == 8
    assert config.scenario("small").bins["silk"] == (650.0, 100.0, 50.0)
    assert config_to_dict(config_from_dict(config_to_dict(config))) == config_to_dict(config)
    with pytest.raises(ConfigError, match="no scenario"):
        config.scenario("other")
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "absent.yaml")


def test_scenario_bins_must_fit_the_workspace(monkeypatch):
    monkeypatch.delenv("ROTASCAN_SEED", raising=False)
    names = ["linen", "silk", "wool", "acetate", "denim", "cotton"]
    scenario = {"name": "six", "kind": "discrete", "class_names": names, "object_count": 6, "seeds": [0]}
    config = config_from_dict({"scenarios": [scenario]})
    ys = [position[1] for position in config.scenario("six").bins.values()]
    assert min(ys) >= -450.0 and max(ys) <= 450.0

    narrow = {"lower": [0.0, -200.0, 0.0], "upper": [800.0, 200.0, 600.0]}
    config = config_from_dict({"workspace": narrow, "scenarios": [scenario]})
    assert all(-200.0 <= p[1] <= 200.0 for p in config.scenario("six").bins.values())

    outside = dict(scenario, bins={name: [650.0, 0.0, 50.0] for name in names})
    outside["bins"]["denim"] = [650.0, 700.0, 50.0]
    with pytest.raises(ConfigError, match="denim"):
        config_from_dict({"scenarios": [outside]})


def test_signature_tables_and_file_references(tmp_path, signatures, background):
    table = write_signature_table(tmp_path / "tables" / "wool.txt", signatures[2])
    loaded = read_signature_table(table)
    assert loaded.class_name == "wool"
    assert np.array_equal(loaded.reflectance, signatures[2].reflectance)
    assert np.array_equal(loaded.band_centers, signatures[2].band_centers)

    document = {"signatures": [{"file": "tables/wool.txt", "class_name": "merino"}, signatures[0].to_dict()]}
    (tmp_path / "library.yaml").write_text(yaml.safe_dump(document))
    library = read_signatures(tmp_path / "library.yaml")
    assert [s.class_name for s in library] == ["merino", signatures[0].class_name]

    scene = generate_scene(DISCRETE, signatures, 2, seed=1, background=background).to_dict()
    scene["background"] = {"file": "tables/wool.txt"}
    (tmp_path / "scene.yaml").write_text(yaml.safe_dump(scene))
    assert read_scene(tmp_path / "scene.yaml").background.class_name == "wool"

    (tmp_path / "three.txt").write_text("400 0.1 0.2\n500 0.3 0.4\n")
    with pytest.raises(FileFormatError, match="two columns"):
        read_signature_table(tmp_path / "three.txt")
