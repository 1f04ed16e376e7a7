import xml.etree.ElementTree as ET

import numpy as np
import pytest

from aespectra import svg


def cells(n=5):
    return [svg.BoxCell(str(d), q25=0.2 * d, median=0.25 * d, q75=0.3 * d,
                        whisker_lo=0.1 * d, whisker_hi=0.4 * d,
                        outliers=(0.5 * d, 0.6 * d))
            for d in range(1, n + 1)]


def boxes_in(doc: str):
    root = ET.fromstring(doc)
    ns = "{http://www.w3.org/2000/svg}"
    return [r for r in root.iter(f"{ns}rect") if r.get("class") == "box"]


def circles_in(doc: str):
    root = ET.fromstring(doc)
    ns = "{http://www.w3.org/2000/svg}"
    return list(root.iter(f"{ns}circle"))


def test_document_is_valid_xml_with_one_box_per_cell():
    doc = svg.render_box_plot(cells(7), title="t", y_label="y")
    assert len(boxes_in(doc)) == 7


def test_outliers_drawn_only_on_request():
    plain = svg.render_box_plot(cells(3), title="t", y_label="y")
    full = svg.render_box_plot(cells(3), title="t", y_label="y", draw_outliers=True)
    assert len(circles_in(plain)) == 0
    assert len(circles_in(full)) == 6


def test_fixed_y_range_used_for_shared_scales():
    doc = svg.render_box_plot(cells(2), title="t", y_label="y", y_range=(0.0, np.pi))
    # top tick label equals the requested maximum
    assert f"{np.pi:.6g}" in doc


def test_title_escaped():
    doc = svg.render_box_plot(cells(1), title="a < b & c", y_label="y")
    assert "a &lt; b &amp; c" in doc
    ET.fromstring(doc)


def test_write_box_plot(tmp_path):
    path = tmp_path / "plot.svg"
    svg.write_box_plot(path, cells(4), title="t", y_label="y", x_label="d")
    text = path.read_text()
    assert text.startswith("<svg")
    assert len(boxes_in(text)) == 4


def test_empty_cells_rejected():
    with pytest.raises(ValueError):
        svg.render_box_plot([], title="t", y_label="y")
