import pytest

from propforge.capture import (
    Bounds,
    EmptyIdentity,
    MalformedBounds,
    MalformedDocument,
    OutOfRange,
    RasterImage,
    build_page_capture,
    crop_widget_image,
    encode_png,
    highlight_widget,
    load_png,
    parse_bounds,
    parse_view_hierarchy,
    save_png,
)

DUMP = """<?xml version='1.0' encoding='UTF-8'?>
<hierarchy rotation="0">
  <node class="android.widget.FrameLayout" bounds="[0,0][1080,1920]" text="" resource-id="" content-desc="" clickable="false">
    <node class="android.widget.TextView" bounds="[0,48][1080,140]" text="/storage" resource-id="app:id/path_bar" content-desc="" clickable="false"/>
    <node class="android.widget.LinearLayout" bounds="[0,140][1080,1800]" text="" resource-id="" content-desc="" clickable="false">
      <node class="android.widget.TextView" bounds="[0,140][1080,260]" text="Download" resource-id="app:id/file_item" content-desc="File row" clickable="true"/>
      <node class="android.widget.ImageButton" bounds="[900,1700][1060,1860]" text="" resource-id="app:id/search_button" content-desc="Search" clickable="true"/>
    </node>
  </node>
</hierarchy>
"""


def test_parse_bounds_roundtrip():
    b = parse_bounds("[10,20][110,220]")
    assert (b.left, b.top, b.right, b.bottom) == (10, 20, 110, 220)
    assert b.width == 100 and b.height == 200


@pytest.mark.parametrize("bad", ["", "[1,2][3", "[a,b][c,d]", "1,2 3,4", "[1,2][3,4] "])
def test_parse_bounds_malformed(bad):
    with pytest.raises(MalformedBounds):
        parse_bounds(bad)

def test_parse_bounds_inverted():
    with pytest.raises(MalformedBounds):
        parse_bounds("[100,20][10,220]")


def test_parse_view_hierarchy_filters_layout_nodes():
    widgets = parse_view_hierarchy(DUMP)
    # only the three nodes carrying text/id/desc survive
    assert [w.resource_id for w in widgets] == [
        "app:id/path_bar",
        "app:id/file_item",
        "app:id/search_button",
    ]
    assert [w.node_index for w in widgets] == [0, 1, 2]
    assert widgets[0].text == "/storage"
    assert widgets[0].content_description is None
    assert widgets[1].clickable is True
    assert widgets[2].content_description == "Search"
    assert widgets[2].text is None
    assert widgets[1].class_name == "android.widget.TextView"


def test_parse_view_hierarchy_keeps_bare_clickable():
    xml = (
        "<hierarchy><node class='android.widget.Button' bounds='[0,0][10,10]'"
        " clickable='true'/></hierarchy>"
    )
    widgets = parse_view_hierarchy(xml)
    assert len(widgets) == 1
    assert widgets[0].clickable


def test_parse_view_hierarchy_malformed_markup():
    with pytest.raises(MalformedDocument):
        parse_view_hierarchy("<hierarchy><node></hierarchy>")


def test_build_page_capture_identity_required():
    with pytest.raises(EmptyIdentity):
        build_page_capture("", "MainActivity", None, [])
    with pytest.raises(EmptyIdentity):
        build_page_capture("Filer", "   ", None, [])


def test_build_page_capture_id_is_content_hash():
    widgets = parse_view_hierarchy(DUMP)
    a = build_page_capture("Filer", "FileListActivity", None, widgets)
    b = build_page_capture("Filer", "FileListActivity", None, widgets)
    c = build_page_capture("Filer", "OtherActivity", None, widgets)
    assert a.capture_id == b.capture_id
    assert a.capture_id != c.capture_id
    assert len(a.capture_id) == 16


def _solid(w, h, rgba):
    return RasterImage(w, h, bytes(rgba) * (w * h))


def test_crop_widget_image_copies_rectangle():
    base = bytearray()
    for y in range(4):
        for x in range(6):
            base += bytes((x, y, 0, 255))
    img = RasterImage(6, 4, bytes(base))
    crop = crop_widget_image(img, Bounds(2, 1, 5, 3))
    assert (crop.width, crop.height) == (3, 2)
    assert crop.pixel(0, 0) == (2, 1, 0, 255)
    assert crop.pixel(2, 1) == (4, 2, 0, 255)


def test_crop_out_of_range():
    img = _solid(4, 4, (0, 0, 0, 255))
    with pytest.raises(OutOfRange):
        crop_widget_image(img, Bounds(0, 0, 5, 4))


def test_highlight_widget_strokes_inward():
    img = _solid(10, 10, (7, 7, 7, 255))
    out = highlight_widget(img, Bounds(2, 2, 8, 8), stroke_px=2)
    red = (255, 0, 0, 255)
    grey = (7, 7, 7, 255)
    assert out.pixel(2, 2) == red
    assert out.pixel(3, 3) == red          # second stroke ring
    assert out.pixel(7, 7) == red          # bottom-right inside the rect
    assert out.pixel(4, 4) == grey         # interior untouched
    assert out.pixel(1, 1) == grey         # outside untouched
    assert out.pixel(8, 8) == grey         # right/bottom edges are exclusive
    assert img.pixel(2, 2) == grey         # input not mutated


def test_highlight_zero_stroke_noop():
    img = _solid(5, 5, (1, 2, 3, 255))
    out = highlight_widget(img, Bounds(1, 1, 4, 4), stroke_px=0)
    assert out.data == img.data


def test_png_roundtrip(tmp_path):
    img = _solid(8, 3, (9, 120, 200, 255))
    p = tmp_path / "shot.png"
    save_png(img, p)
    back = load_png(p)
    assert back == img
    assert encode_png(img)[:8] == b"\x89PNG\r\n\x1a\n"
