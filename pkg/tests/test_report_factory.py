import numpy as np
from PIL import Image

from rotascan.models.perception import DetectedObject, SuctionPoint
from rotascan.models.sorting import CampaignResult
from rotascan.utils.report_factory import ReportFactory

CLASS_NAMES = ["linen", "silk", "wool"]


def _object(class_name="silk"):
    return DetectedObject(instance_id=1, class_id=2, class_name=class_name, purity=1.0, bbox=(10, 10, 29, 29),
                          centroid=(19.5, 19.5), pixel_count=400,
                          suction_points=[SuctionPoint(1, 20, 20, 25.0), SuctionPoint(2, 12, 27, 5.0)])


def test_class_colours():
    assert ReportFactory.class_color("linen", CLASS_NAMES) == ReportFactory.CLASS_PALETTE[0]
    assert ReportFactory.class_color("denim", CLASS_NAMES) == ReportFactory.COLORS["unknown"]
    assert ReportFactory.hex(0x2980B9) == "#2980b9"
    assert ReportFactory.rgb(0x00FF00) == (0, 255, 0)


def test_overlay_draws_box_and_suction_points():
    image = ReportFactory.detection_overlay(np.zeros((40, 50, 3)), [_object()], CLASS_NAMES, scale=3)
    assert image.size == (150, 120)
    pixels = np.asarray(image)
    assert tuple(pixels[30, 45]) == ReportFactory.rgb(ReportFactory.CLASS_PALETTE[1])
    assert tuple(pixels[61, 61]) == ReportFactory.rgb(ReportFactory.COLORS["suction_primary"])
    assert tuple(pixels[37, 82]) == ReportFactory.rgb(ReportFactory.COLORS["suction_backup"])
    assert tuple(pixels[5, 5]) == (0, 0, 0)


def test_overlay_and_chart_files(tmp_path):
    overlay = ReportFactory.save_overlay(tmp_path / "sub" / "overlay.png", np.full((20, 20, 3), 0.5), [],
                                         CLASS_NAMES, scale=2)
    with Image.open(overlay) as image:
        assert image.size == (40, 40)

    results = [CampaignResult("d", "discrete", [], {"linen": 0.9, "silk": 0.7}, {"linen": 0.05, "silk": 0.1}),
               CampaignResult("c", "cluttered", [], {"linen": 0.6, "wool": 0.4}, {"linen": 0.1, "wool": 0.2})]
    chart = ReportFactory.campaign_chart(tmp_path / "campaign.png", results)
    with Image.open(chart) as image:
        assert image.format == "PNG"
        assert image.size[0] > image.size[1]
