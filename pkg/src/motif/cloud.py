from dataclasses import dataclass

import numpy as np


@dataclass
class PointCloud:
    """Colored point cloud, stored column-wise.

    ``thermal`` holds painted temperatures in degrees C with NaN for points no
    camera has seen. ``score`` is the signed color-derived heat score; it is
    ``None`` until computed.
    """

    positions: np.ndarray
    rgb: np.ndarray
    thermal: np.ndarray = None
    score: np.ndarray = None

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 3)
        rgb = np.asarray(self.rgb).reshape(-1, 3)
        if rgb.size and (rgb.min() < 0 or rgb.max() > 255):
            raise ValueError("rgb components must be in [0, 255]")
        self.rgb = rgb.astype(np.uint8)
        n = len(self.positions)
        if len(self.rgb) != n:
            raise ValueError("positions and rgb differ in length")
        if self.thermal is None:
            self.thermal = np.full(n, np.nan)
        else:
            self.thermal = np.asarray(self.thermal, dtype=float).reshape(n)
        if self.score is not None:
            self.score = np.asarray(self.score, dtype=float).reshape(n)

    def __len__(self):
        return len(self.positions)

    @property
    def painted(self):
        return ~np.isnan(self.thermal)

    def copy(self):
        return PointCloud(
            self.positions.copy(),
            self.rgb.copy(),
            self.thermal.copy(),
            None if self.score is None else self.score.copy(),
        )

    def transformed(self, R, t):
        out = self.copy()
        out.positions = self.positions @ np.asarray(R, dtype=float).T + np.asarray(t, dtype=float)
        return out
