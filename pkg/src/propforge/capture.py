"""Parsing of captured GUI data: view-hierarchy dumps, screenshots, app metadata.

A capture is one observed app page: the uiautomator XML dump supplies widget
attributes, an optional PNG screenshot supplies pixels, and ``app.json``
supplies the app and activity names.
"""

from __future__ import annotations

import hashlib
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

BOUNDS_RE = re.compile(r"^\[(\d+),(\d+)\]\[(\d+),(\d+)\]$")


class CaptureError(Exception):
    """Base class for capture-parsing failures."""


class MalformedDocument(CaptureError):
    """The view-hierarchy markup could not be parsed."""


class MalformedBounds(CaptureError):
    """A bounds attribute does not match "[l,t][r,b]" or violates ordering."""


class EmptyIdentity(CaptureError):
    """App or activity name is blank."""


class OutOfRange(CaptureError):
    """Bounds exceed the image dimensions."""


@dataclass(frozen=True)
class Bounds:
    """Pixel rectangle in screen coordinates, half-open on right/bottom."""

    left: int
    top: int
    right: int
    bottom: int

    def __post_init__(self):
        if self.left < 0 or self.top < 0:
            raise MalformedBounds(f"negative coordinates: {self}")
        if self.left > self.right or self.top > self.bottom:
            raise MalformedBounds(f"inverted rectangle: {self}")

    @property
    def width(self) -> int:
        return self.right - self.left

    @property
    def height(self) -> int:
        return self.bottom - self.top


def parse_bounds(value: str) -> Bounds:
    """Parse a uiautomator bounds string like "[0,48][1080,1920]"."""
    m = BOUNDS_RE.match(value)
    if not m:
        raise MalformedBounds(f"bounds string {value!r} does not match [l,t][r,b]")
    left, top, right, bottom = (int(g) for g in m.groups())
    return Bounds(left, top, right, bottom)


@dataclass(frozen=True)
class WidgetAttributes:
    """Raw attributes of one widget as exported by the dump."""

    class_name: str
    bounds: Bounds
    node_index: int
    text: Optional[str] = None
    resource_id: Optional[str] = None
    content_description: Optional[str] = None
    clickable: bool = False


@dataclass(frozen=True)
class PageCapture:
    """One captured app page: identity, optional screenshot, ordered widgets."""

    app_name: str
    activity_name: str
    widgets: tuple[WidgetAttributes, ...]
    screenshot_path: Optional[str] = None
    capture_id: str = ""


def _norm(value: Optional[str]) -> Optional[str]:
    """Empty-string attribute values become absent."""
    if value is None or value == "":
        return None
    return value


def _keep(text, resource_id, content_description, clickable) -> bool:
    # Pure layout containers carry none of the identifying fields and are
    # not clickable; everything else is a widget worth retaining.
    return clickable or any(v is not None for v in (text, resource_id, content_description))


def parse_view_hierarchy(xml_text: str) -> list[WidgetAttributes]:
    """Extract widget attributes from a uiautomator-dump XML document.

    Nodes are visited in document order; layout-only containers (no text,
    resource-id, or content-desc, and not clickable) are dropped.  Retained
    widgets are indexed 0..n-1 in document order.
    """
    try:
        root = ET.fromstring(xml_text)
    except ET.ParseError as exc:
        raise MalformedDocument(f"unparseable view hierarchy: {exc}") from exc

    widgets: list[WidgetAttributes] = []
    for node in root.iter("node"):
        attrib = node.attrib
        text = _norm(attrib.get("text"))
        resource_id = _norm(attrib.get("resource-id"))
        content_desc = _norm(attrib.get("content-desc"))
        clickable = attrib.get("clickable", "false") == "true"
        if not _keep(text, resource_id, content_desc, clickable):
            continue
        bounds = parse_bounds(attrib["bounds"]) if "bounds" in attrib else Bounds(0, 0, 0, 0)
        widgets.append(
            WidgetAttributes(
                class_name=_norm(attrib.get("class")) or "android.view.View",
                bounds=bounds,
                node_index=len(widgets),
                text=text,
                resource_id=resource_id,
                content_description=content_desc,
                clickable=clickable,
            )
        )
    return widgets


def build_page_capture(
    app_name: str,
    activity_name: str,
    screenshot_path: Optional[str],
    widgets: list[WidgetAttributes],
) -> PageCapture:
    """Assemble a PageCapture; the capture id is a content hash of the inputs."""
    if not app_name.strip() or not activity_name.strip():
        raise EmptyIdentity("app_name and activity_name must be non-empty")
    h = hashlib.sha256()
    h.update(app_name.encode())
    h.update(b"\x00")
    h.update(activity_name.encode())
    for w in widgets:
        h.update(
            json.dumps(
                [w.text, w.resource_id, w.content_description, w.class_name, w.clickable,
                 [w.bounds.left, w.bounds.top, w.bounds.right, w.bounds.bottom]],
                ensure_ascii=False,
            ).encode()
        )
    return PageCapture(
        app_name=app_name,
        activity_name=activity_name,
        widgets=tuple(widgets),
        screenshot_path=screenshot_path,
        capture_id=h.hexdigest()[:16],
    )


@dataclass(frozen=True)
class RasterImage:
    """Decoded RGBA raster; the unit the pixel operations work on."""

    width: int
    height: int
    data: bytes = field(repr=False)

    def __post_init__(self):
        if len(self.data) != self.width * self.height * 4:
            raise ValueError(
                f"buffer length {len(self.data)} != {self.width}x{self.height}x4"
            )

    def pixel(self, x: int, y: int) -> tuple[int, int, int, int]:
        off = (y * self.width + x) * 4
        return tuple(self.data[off:off + 4])  # type: ignore[return-value]


RED = (255, 0, 0, 255)


def _check_in_image(image: RasterImage, bounds: Bounds) -> None:
    if bounds.right > image.width or bounds.bottom > image.height:
        raise OutOfRange(f"bounds {bounds} exceed image {image.width}x{image.height}")


def crop_widget_image(screenshot: RasterImage, bounds: Bounds) -> RasterImage:
    """Copy the rectangle under ``bounds`` into a new image."""
    _check_in_image(screenshot, bounds)
    w, h = bounds.width, bounds.height
    out = bytearray(w * h * 4)
    for y in range(h):
        src = ((bounds.top + y) * screenshot.width + bounds.left) * 4
        dst = y * w * 4
        out[dst:dst + w * 4] = screenshot.data[src:src + w * 4]
    return RasterImage(w, h, bytes(out))


def highlight_widget(screenshot: RasterImage, bounds: Bounds, stroke_px: int = 3) -> RasterImage:
    """Draw a pure-red rectangle stroke along ``bounds``, growing inward.

    Interior pixels beyond the stroke are untouched; stroke_px=0 is a no-op.
    """
    _check_in_image(screenshot, bounds)
    if stroke_px <= 0:
        return screenshot
    buf = bytearray(screenshot.data)

    def put(x: int, y: int) -> None:
        off = (y * screenshot.width + x) * 4
        buf[off:off + 4] = bytes(RED)

    for s in range(stroke_px):
        ytop, ybot = bounds.top + s, bounds.bottom - 1 - s
        xleft, xright = bounds.left + s, bounds.right - 1 - s
        if ytop > ybot or xleft > xright:
            break
        for x in range(bounds.left, bounds.right):
            put(x, ytop)
            put(x, ybot)
        for y in range(bounds.top, bounds.bottom):
            put(xleft, y)
            put(xright, y)
    return RasterImage(screenshot.width, screenshot.height, bytes(buf))


def load_png(path: str | Path) -> RasterImage:
    """Decode a PNG file to an RGBA raster (codec boundary; needs Pillow)."""
    from PIL import Image

    with Image.open(path) as im:
        rgba = im.convert("RGBA")
        return RasterImage(rgba.width, rgba.height, rgba.tobytes())


def save_png(image: RasterImage, path: str | Path) -> None:
    from PIL import Image

    im = Image.frombytes("RGBA", (image.width, image.height), image.data)
    im.save(path, format="PNG")


def encode_png(image: RasterImage) -> bytes:
    """PNG-encode a raster in memory (for prompt attachments)."""
    import io

    from PIL import Image

    im = Image.frombytes("RGBA", (image.width, image.height), image.data)
    buf = io.BytesIO()
    im.save(buf, format="PNG")
    return buf.getvalue()


def load_capture_dir(path: str | Path) -> PageCapture:
    """Read one capture directory: app.json + a single XML dump + optional PNG."""
    path = Path(path)
    meta_file = path / "app.json"
    if not meta_file.exists():
        raise CaptureError(f"missing app.json in {path}")
    meta = json.loads(meta_file.read_text(encoding="utf-8"))
    xml_files = sorted(path.glob("*.xml"))
    if not xml_files:
        raise CaptureError(f"no view-hierarchy XML in {path}")
    widgets = parse_view_hierarchy(xml_files[0].read_text(encoding="utf-8"))
    pngs = sorted(path.glob("*.png"))
    screenshot = str(pngs[0]) if pngs else None
    return build_page_capture(
        app_name=meta.get("app_name", ""),
        activity_name=meta.get("activity_name", ""),
        screenshot_path=screenshot,
        widgets=widgets,
    )


def widget_with_index(widget: WidgetAttributes, node_index: int) -> WidgetAttributes:
    return replace(widget, node_index=node_index)
