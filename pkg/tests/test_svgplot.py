"""SVG chart rendering."""

import xml.etree.ElementTree as ET

import pytest

from nmdesc.svgplot import line_plot_svg, write_line_plot

NS = "{http://www.w3.org/2000/svg}"


def render(series, **kwargs):
    return ET.fromstring(line_plot_svg(series, **kwargs))


class TestStructure:
    def test_valid_xml_with_polyline_per_series(self):
        root = render({
            "a": ([0, 1, 2], [1.0, 2.0, 3.0]),
            "b": ([0, 1, 2], [3.0, 2.0, 1.0]),
        })
        assert root.tag == f"{NS}svg"
        polylines = root.findall(f"{NS}polyline")
        assert len(polylines) == 2
        colors = {p.get("stroke") for p in polylines}
        assert len(colors) == 2

    def test_title_labels_and_legend(self):
        root = render({"loss": ([0, 1], [1.0, 0.5])},
                      title="run", xlabel="k", ylabel="F")
        texts = [t.text for t in root.iter(f"{NS}text")]
        for expected in ("run", "k", "F", "loss"):
            assert expected in texts

    def test_escaping(self):
        svg = line_plot_svg({"a<b&c": ([0, 1], [1.0, 2.0])}, title="x<y")
        root = ET.fromstring(svg)  # parse proves escaping worked
        assert "a<b&c" in [t.text for t in root.iter(f"{NS}text")]

    def test_coordinates_inside_canvas(self):
        root = render({"a": ([0, 10], [0.0, 5.0])})
        for poly in root.findall(f"{NS}polyline"):
            for pair in poly.get("points").split():
                x, y = map(float, pair.split(","))
                assert 0.0 <= x <= 640.0
                assert 0.0 <= y <= 420.0


class TestLogScale:
    def test_nonpositive_points_dropped(self):
        # y=0 in the middle splits the line into two segments
        root = render({"a": ([0, 1, 2, 3], [1.0, 0.0, 10.0, 100.0])},
                      logy=True)
        polylines = root.findall(f"{NS}polyline")
        assert len(polylines) == 2
        counts = sorted(len(p.get("points").split()) for p in polylines)
        assert counts == [1, 2]

    def test_all_nonpositive_rejected(self):
        with pytest.raises(ValueError):
            line_plot_svg({"a": ([0, 1], [0.0, -1.0])}, logy=True)


class TestErrors:
    def test_empty_series_rejected(self):
        with pytest.raises(ValueError):
            line_plot_svg({})


def test_write_line_plot(tmp_path):
    path = tmp_path / "plot.svg"
    write_line_plot(str(path), {"a": ([0, 1], [1.0, 2.0])}, title="t")
    root = ET.parse(str(path)).getroot()
    assert root.tag == f"{NS}svg"
