"""Independent scalar reference implementations used as test oracles.

These walk pixels and points one at a time with plain Python loops and share
no code with the package.
"""

import math


def rle_encode_ref(grid):
    """Column-major run lengths of a list-of-rows boolean grid, zero run first."""
    h = len(grid)
    w = len(grid[0]) if h else 0
    counts = []
    cur = False
    run = 0
    for x in range(w):
        for y in range(h):
            v = bool(grid[y][x])
            if v != cur:
                counts.append(run)
                run = 0
                cur = v
            run += 1
    counts.append(run)
    return counts


def overlap_ref(grid, x0, y0, x1, y1):
    n = 0
    for y in range(y0, y1):
        for x in range(x0, x1):
            if grid[y][x]:
                n += 1
    return n


def inside_ref(x, y, box):
    x0, y0, x1, y1 = box
    return x0 <= x < x1 and y0 <= y < y1


def frame_out_ref(points, box):
    """``points[p][f] = (x, y, visible)``."""
    n_frames = len(points[0])
    start = any(vis and inside_ref(x, y, box) for x, y, vis in (p[0] for p in points))
    if not start:
        return False
    for f in range(n_frames):
        visible = [(p[f][0], p[f][1]) for p in points if p[f][2]]
        if visible and all(not inside_ref(x, y, box) for x, y in visible):
            return True
    return False


def frame_in_ref(points, box, mask_grid, enter_fraction):
    x0, y0, x1, y1 = box
    if overlap_ref(mask_grid, x0, y0, x1, y1) > 0:
        return False
    for f in range(len(points[0])):
        visible = [(p[f][0], p[f][1]) for p in points if p[f][2]]
        if not visible:
            continue
        n_in = sum(1 for x, y in visible if inside_ref(x, y, box))
        if n_in >= enter_fraction * len(visible):
            return True
    return False


def chebyshev_to_mask_ref(grid, px, py):
    """Chebyshev distance from a rounded point to the nearest true pixel."""
    best = math.inf
    for y, row in enumerate(grid):
        for x, v in enumerate(row):
            if v:
                best = min(best, max(abs(x - px), abs(y - py)))
    return best


def dilate_ref(grid, radius=1):
    h, w = len(grid), len(grid[0])
    out = [[False] * w for _ in range(h)]
    for y in range(h):
        for x in range(w):
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    yy, xx = y + dy, x + dx
                    if 0 <= yy < h and 0 <= xx < w and grid[yy][xx]:
                        out[y][x] = True
    return out


def square_ref(w, h, cx, cy, side):
    """Filled square of ``side`` px centred on (cx, cy); ties toward top-left."""
    x_start = math.ceil(cx - side / 2.0 - 0.5)
    y_start = math.ceil(cy - side / 2.0 - 0.5)
    grid = [[False] * w for _ in range(h)]
    for y in range(y_start, y_start + side):
        for x in range(x_start, x_start + side):
            if 0 <= x < w and 0 <= y < h:
                grid[y][x] = True
    return grid


def lerp_ref(values, n_new):
    """Align-corners 1-D linear resize."""
    n = len(values)
    if n_new == 1 or n == 1:
        return [values[0]] * n_new if n == 1 else [values[0]]
    out = []
    for i in range(n_new):
        pos = i * (n - 1) / (n_new - 1)
        lo = min(int(math.floor(pos)), n - 2)
        t = pos - lo
        out.append(values[lo] * (1 - t) + values[lo + 1] * t)
    return out
