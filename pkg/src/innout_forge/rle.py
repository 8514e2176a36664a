"""Column-major run-length codec for binary masks (COCO uncompressed layout)."""

import numpy as np

from .errors import CodecError
from .types import CanvasBox, MaskRLE


def rle_encode(bitmap, width=None, height=None) -> MaskRLE:
    """Encode a row-major boolean grid.

    ``bitmap`` is either an (H, W) array, or a flat sequence together with
    ``width`` and ``height``.
    """
    m = np.asarray(bitmap, dtype=bool)
    if m.ndim == 1:
        if width is None or height is None:
            raise CodecError("flat bitmap requires width and height")
        if m.size != width * height:
            raise CodecError(f"bitmap has {m.size} pixels, expected {width}x{height}")
        m = m.reshape(height, width)
    elif m.ndim != 2:
        raise CodecError("bitmap must be 1-D or 2-D")
    elif (width is not None and m.shape[1] != width) or (height is not None and m.shape[0] != height):
        raise CodecError(f"bitmap shape {m.shape} does not match {width}x{height}")
    h, w = m.shape
    if h == 0 or w == 0:
        raise CodecError("empty bitmap")
    flat = m.ravel(order="F")
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], change, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat[0]:
        runs.insert(0, 0)
    return MaskRLE(w, h, tuple(runs))


def rle_decode(m: MaskRLE) -> np.ndarray:
    """Decode to a row-major (H, W) boolean array."""
    values = np.arange(len(m.counts)) % 2 == 1
    flat = np.repeat(values, m.counts)
    return flat.reshape(m.width, m.height).T


def mask_area(m: MaskRLE) -> int:
    return int(sum(m.counts[1::2]))


def mask_box_overlap(m: MaskRLE, box: CanvasBox) -> int:
    if not (0 <= box.x0 <= box.x1 <= m.width and 0 <= box.y0 <= box.y1 <= m.height):
        raise CodecError(f"box {box.to_list()} outside mask {m.width}x{m.height}")
    return int(rle_decode(m)[box.y0:box.y1, box.x0:box.x1].sum())


def mask_bbox(m: MaskRLE):
    """Tight half-open bounding rectangle of the true pixels, or None if empty."""
    grid = rle_decode(m)
    ys = np.flatnonzero(grid.any(axis=1))
    if ys.size == 0:
        return None
    xs = np.flatnonzero(grid.any(axis=0))
    return CanvasBox(int(xs[0]), int(ys[0]), int(xs[-1]) + 1, int(ys[-1]) + 1)


def crop_mask(m: MaskRLE, rect: CanvasBox) -> MaskRLE:
    rect.validate(m.width, m.height)
    return rle_encode(rle_decode(m)[rect.y0:rect.y1, rect.x0:rect.x1])


def integral_image(grid: np.ndarray) -> np.ndarray:
    """Summed-area table with a zero top row and left column, shape (H+1, W+1)."""
    sat = np.zeros((grid.shape[0] + 1, grid.shape[1] + 1), dtype=np.int64)
    np.cumsum(np.cumsum(grid, axis=0, dtype=np.int64), axis=1, out=sat[1:, 1:])
    return sat


def box_sums(sat: np.ndarray, x0, y0, x1, y1) -> np.ndarray:
    """Vectorised pixel sums over half-open boxes from a summed-area table."""
    return sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0]
