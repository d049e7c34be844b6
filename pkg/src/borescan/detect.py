"""Defect extraction and measurement on corrected tiles.

Binarization (fixed or Otsu threshold), 8-connected blob labeling, and
physical-unit metrics via the pixel equivalents. All sizes come out in mm
so downstream code never touches pixel units again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import ndimage

from .errors import DomainError, FrameMismatchError, LineNotFoundError, ThresholdError
from .unwrap import TileImage

__all__ = [
    "BlobRecord",
    "LineMeasurement",
    "binarize",
    "otsu_threshold",
    "label_mask",
    "connected_components",
    "blob_metrics",
    "centroid_distance",
    "line_width",
    "DEFAULT_MIN_AREA",
    "DEFAULT_SEGMENT_LEN",
]

DEFAULT_MIN_AREA = 9  # px; ~13 um equivalent diameter at 2.16 um/pixel
DEFAULT_SEGMENT_LEN = 64  # px per line-width segment

_EIGHT = np.ones((3, 3), dtype=int)
_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=int)


@dataclass(frozen=True)
class BlobRecord:
    """One connected foreground region.

    ``centroid`` is (column m, row n) in fractional pixels; ``bbox`` is
    (col_min, row_min, col_max, row_max), inclusive. The physical fields
    stay None until :func:`blob_metrics` fills them in. ``frame`` tags the
    coordinate frame (e.g. the tile index) so centroids from different
    tiles cannot be subtracted by accident.
    """

    label: int
    pixel_area: int
    centroid: tuple[float, float]
    bbox: tuple[int, int, int, int]
    physical_area_mm2: float | None = None
    equivalent_diameter_mm: float | None = None
    frame: object = None


@dataclass(frozen=True)
class LineMeasurement:
    """Per-segment widths of a line-like feature."""

    segment_widths_mm: tuple[float, ...]
    mean_width_mm: float
    segment_count: int


def otsu_threshold(img: TileImage) -> float:
    """Threshold maximizing between-class variance of the histogram.

    Ties (the variance is flat over empty histogram spans) resolve to the
    middle of the plateau, so a two-level image is cut midway between its
    levels. A single-valued histogram has no two classes to separate.
    """
    counts = np.bincount(img.pixels.ravel(), minlength=img.max_value + 1).astype(
        np.float64
    )
    total = counts.sum()
    levels = np.arange(counts.size, dtype=np.float64)
    w0 = np.cumsum(counts)
    moment0 = np.cumsum(counts * levels)
    w1 = total - w0
    # candidate cut c puts [0..c] in the dark class, (c..max] in the bright
    with np.errstate(invalid="ignore", divide="ignore"):
        mu0 = moment0 / w0
        mu1 = (moment0[-1] - moment0) / w1
        var_between = w0 * w1 * (mu0 - mu1) ** 2
    valid = (w0 > 0) & (w1 > 0)
    if not np.any(valid):
        raise ThresholdError("histogram has a single level; no threshold exists")
    var_between[~valid] = -np.inf
    best = var_between.max()
    plateau = np.nonzero(var_between == best)[0]
    return float(plateau.mean())


def binarize(
    img: TileImage,
    method: str = "fixed",
    threshold: float = 0.5,
    polarity: str = "dark",
) -> np.ndarray:
    """Boolean foreground mask of defect-polarity pixels.

    ``fixed`` cuts at ``threshold`` as a fraction of full scale (bit-depth
    agnostic); ``otsu`` picks the cut from the histogram and raises
    :class:`ThresholdError` on degenerate input so the caller can fall
    back to a fixed cut. Dark polarity (the default) selects pixels at or
    below the cut.
    """
    if polarity not in ("dark", "bright"):
        raise DomainError(f"unknown polarity {polarity!r}")
    if method == "fixed":
        if not 0.0 <= threshold <= 1.0:
            raise DomainError("fixed threshold is a fraction of full scale")
        cut = threshold * img.max_value
    elif method == "otsu":
        cut = otsu_threshold(img)
    else:
        raise DomainError(f"unknown threshold method {method!r}")
    if polarity == "dark":
        return img.pixels <= cut
    return img.pixels >= cut


def label_mask(mask: np.ndarray, connectivity: int = 8) -> np.ndarray:
    """Integer label image of connected foreground regions (0 = background)."""
    if connectivity not in (4, 8):
        raise DomainError("connectivity must be 4 or 8")
    structure = _EIGHT if connectivity == 8 else _FOUR
    labels, _ = ndimage.label(np.asarray(mask, dtype=bool), structure=structure)
    return labels


def connected_components(
    mask: np.ndarray,
    connectivity: int = 8,
    min_area: int = DEFAULT_MIN_AREA,
) -> list[BlobRecord]:
    """Blob records for each connected region of at least ``min_area`` px.

    8-connectivity by default so thin diagonal cracks stay in one piece.
    Records come out in label (scan) order.
    """
    labels = label_mask(mask, connectivity)
    count = labels.max()
    if count == 0:
        return []
    rows, cols = np.nonzero(labels)
    ids = labels[rows, cols]
    areas = np.bincount(ids, minlength=count + 1)
    sum_c = np.bincount(ids, weights=cols, minlength=count + 1)
    sum_r = np.bincount(ids, weights=rows, minlength=count + 1)
    boxes = ndimage.find_objects(labels)
    records = []
    for label in range(1, count + 1):
        area = int(areas[label])
        if area < min_area:
            continue
        row_slice, col_slice = boxes[label - 1]
        records.append(
            BlobRecord(
                label=label,
                pixel_area=area,
                centroid=(sum_c[label] / area, sum_r[label] / area),
                bbox=(
                    col_slice.start,
                    row_slice.start,
                    col_slice.stop - 1,
                    row_slice.stop - 1,
                ),
            )
        )
    return records


def blob_metrics(blob: BlobRecord, pitch_x_um: float, pitch_y_um: float) -> BlobRecord:
    """Fill in physical area (mm^2) and equivalent-circle diameter (mm)."""
    if pitch_x_um <= 0 or pitch_y_um <= 0:
        raise DomainError("pixel pitches must be positive")
    area_mm2 = blob.pixel_area * pitch_x_um * pitch_y_um * 1e-6
    return replace(
        blob,
        physical_area_mm2=area_mm2,
        equivalent_diameter_mm=2.0 * math.sqrt(area_mm2 / math.pi),
    )


def centroid_distance(
    a: BlobRecord, b: BlobRecord, pitch_x_um: float, pitch_y_um: float
) -> float:
    """Euclidean distance between blob centroids, mm.

    Both blobs must live in the same coordinate frame; an unset frame is
    treated as "caller knows what they are doing".
    """
    if a.frame is not None and b.frame is not None and a.frame != b.frame:
        raise FrameMismatchError(
            f"blobs come from different frames {a.frame!r} and {b.frame!r}"
        )
    dx_um = (a.centroid[0] - b.centroid[0]) * pitch_x_um
    dy_um = (a.centroid[1] - b.centroid[1]) * pitch_y_um
    return math.hypot(dx_um, dy_um) * 1e-3


def line_width(
    mask: np.ndarray,
    axis: str = "vertical",
    segment_len: int = DEFAULT_SEGMENT_LEN,
    pitch_x_um: float = 2.16,
    pitch_y_um: float = 2.16,
) -> LineMeasurement:
    """Width of the dominant line-like blob, measured segment by segment.

    The largest component is cut along ``axis`` into ``segment_len``-pixel
    segments; each segment's width is the mean foreground extent
    perpendicular to the axis, and the headline number is the mean over
    segments. Raises :class:`LineNotFoundError` when the largest component
    is not elongated at least 3:1 along the requested axis.
    """
    if axis not in ("vertical", "horizontal"):
        raise DomainError(f"unknown axis {axis!r}")
    if segment_len < 1:
        raise DomainError("segment length must be >= 1 px")
    mask = np.asarray(mask, dtype=bool)
    labels = label_mask(mask, 8)
    if labels.max() == 0:
        raise LineNotFoundError("mask has no foreground")
    areas = np.bincount(labels.ravel())
    areas[0] = 0
    dominant = labels == int(areas.argmax())
    if axis == "horizontal":
        dominant = dominant.T
        along_pitch, perp_pitch = pitch_x_um, pitch_y_um
    else:
        along_pitch, perp_pitch = pitch_y_um, pitch_x_um
    rows = np.nonzero(dominant.any(axis=1))[0]
    cols = np.nonzero(dominant.any(axis=0))[0]
    along_extent = rows[-1] - rows[0] + 1
    perp_extent = cols[-1] - cols[0] + 1
    if along_extent < 3 * perp_extent:
        raise LineNotFoundError(
            f"largest component is {along_extent}x{perp_extent} px, "
            f"not line-like along the {axis} axis"
        )
    per_row = dominant[rows[0] : rows[-1] + 1].sum(axis=1)
    widths = []
    for start in range(0, along_extent, segment_len):
        chunk = per_row[start : start + segment_len]
        filled = chunk[chunk > 0]
        if filled.size == 0:
            continue
        widths.append(float(filled.mean()) * perp_pitch * 1e-3)
    if not widths:
        raise LineNotFoundError("no foreground rows in any segment")
    return LineMeasurement(
        segment_widths_mm=tuple(widths),
        mean_width_mm=float(np.mean(widths)),
        segment_count=len(widths),
    )
