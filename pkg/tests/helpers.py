from pathlib import Path

import numpy as np

from innout_forge.types import ObjectTrack

DATA = Path(__file__).parent / "data"


def track_from_xy(xy, visible=None, object_id=0, label="person", backtracked=None, mask=None, point_ids=None):
    xy = np.asarray(xy, dtype=np.float64)
    if visible is None:
        visible = np.ones(xy.shape[:2], dtype=bool)
    if point_ids is None:
        point_ids = np.arange(xy.shape[0])
    return ObjectTrack(object_id, label, point_ids, xy, visible, backtracked, mask)


def points_of(track):
    """``[p][f] = (x, y, visible)`` plain-Python view for the oracles."""
    return [[(float(track.xy[p, f, 0]), float(track.xy[p, f, 1]), bool(track.visible[p, f]))
             for f in range(track.num_frames)] for p in range(track.num_points)]
