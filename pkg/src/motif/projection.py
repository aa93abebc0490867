"""Pinhole camera model, pixel back-projection and thermal painting."""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BehindCamera,
    DimensionMismatch,
    InvalidCamera,
    NonPositiveDepth,
    PixelOutOfBounds,
)

CAM_TO_WORLD = "cam_to_world"
WORLD_TO_CAM = "world_to_cam"
POSE_CONVENTIONS = (CAM_TO_WORLD, WORLD_TO_CAM)

THERMAL_WIDTH, THERMAL_HEIGHT = 160, 120
DEFAULT_DEPTH_TOLERANCE = 0.005


def intrinsics(fx, fy, cx, cy):
    return np.array([[fx, 0.0, cx], [0.0, fy, cy], [0.0, 0.0, 1.0]])


@dataclass
class CameraModel:
    """Pinhole camera with zero skew and a rigid pose.

    ``R`` and ``t`` describe the camera pose in the world (camera to world)
    under the default convention. With ``pose_convention="world_to_cam"``
    the same numbers are read as the inverse transform, which reproduces the
    literal form of the reprojection equation for users whose poses are
    stored that way.
    """

    K: np.ndarray
    R: np.ndarray = field(default_factory=lambda: np.eye(3))
    t: np.ndarray = field(default_factory=lambda: np.zeros(3))
    width: int = THERMAL_WIDTH
    height: int = THERMAL_HEIGHT
    pose_convention: str = CAM_TO_WORLD

    def __post_init__(self):
        self.K = np.asarray(self.K, dtype=float).reshape(3, 3)
        self.R = np.asarray(self.R, dtype=float).reshape(3, 3)
        self.t = np.asarray(self.t, dtype=float).reshape(3)
        if self.pose_convention not in POSE_CONVENTIONS:
            raise InvalidCamera(f"unknown pose_convention {self.pose_convention!r}")
        if np.abs(self.R.T @ self.R - np.eye(3)).max() >= 1e-9 or np.linalg.det(self.R) <= 0:
            raise InvalidCamera("R is not a proper rotation")
        fx, fy, cx, cy = self.fx, self.fy, self.cx, self.cy
        if not (fx > 0 and fy > 0):
            raise InvalidCamera("focal lengths must be positive")
        if self.K[0, 1] != 0 or np.any(self.K[2] != (0.0, 0.0, 1.0)) or self.K[1, 0] != 0:
            raise InvalidCamera("K must be a zero-skew pinhole matrix")
        if not (0 <= cx < self.width and 0 <= cy < self.height):
            raise InvalidCamera("principal point outside the image")

    fx = property(lambda self: self.K[0, 0])
    fy = property(lambda self: self.K[1, 1])
    cx = property(lambda self: self.K[0, 2])
    cy = property(lambda self: self.K[1, 2])

    def cam_to_world(self):
        """Rotation and translation mapping camera-frame points to world."""
        if self.pose_convention == CAM_TO_WORLD:
            return self.R, self.t
        return self.R.T, -self.R.T @ self.t

    def transformed(self, R, t):
        """Camera after applying the world-frame rigid motion ``x -> R x + t``."""
        R = np.asarray(R, dtype=float)
        t = np.asarray(t, dtype=float)
        Rc, tc = self.cam_to_world()
        Rn, tn = R @ Rc, R @ tc + t
        if self.pose_convention == WORLD_TO_CAM:
            Rn, tn = Rn.T, -Rn.T @ tn
        return CameraModel(self.K, Rn, tn, self.width, self.height, self.pose_convention)

    def to_dict(self):
        return {
            "K": self.K.ravel().tolist(),
            "R": self.R.ravel().tolist(),
            "t": self.t.tolist(),
            "width": int(self.width),
            "height": int(self.height),
            "pose_convention": self.pose_convention,
        }

    @classmethod
    def from_dict(cls, d):
        try:
            return cls(
                K=d["K"],
                R=d.get("R", np.eye(3)),
                t=d.get("t", np.zeros(3)),
                width=int(d["width"]),
                height=int(d["height"]),
                pose_convention=d.get("pose_convention", CAM_TO_WORLD),
            )
        except KeyError as exc:
            raise InvalidCamera(f"camera document missing {exc}") from None


@dataclass
class ThermalImage:
    values: np.ndarray  # (height, width), degrees C

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 2:
            raise DimensionMismatch("thermal image must be 2-D")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("thermal image contains non-finite values")

    @property
    def shape(self):
        return self.values.shape


@dataclass
class DepthImage:
    depths: np.ndarray  # (height, width), meters, 0 = invalid

    def __post_init__(self):
        self.depths = np.asarray(self.depths, dtype=float)
        if self.depths.ndim != 2:
            raise DimensionMismatch("depth image must be 2-D")
        if not np.all(np.isfinite(self.depths)) or np.any(self.depths < 0):
            raise ValueError("depths must be finite and non-negative")

    @property
    def shape(self):
        return self.depths.shape


def nearest_pixel(pixels):
    # round half up, so the result does not depend on numpy's banker's rounding
    return np.floor(np.asarray(pixels) + 0.5).astype(np.int64)


def in_bounds(cam, pixels):
    """True where a continuous pixel coordinate falls on an image pixel."""
    pixels = np.asarray(pixels, dtype=float)
    x, y = pixels[..., 0], pixels[..., 1]
    return (x >= -0.5) & (x < cam.width - 0.5) & (y >= -0.5) & (y < cam.height - 0.5)


def backproject(cam, pixel, depth):
    """World point at camera-frame depth ``depth`` along the ray through ``pixel``.

    Accepts one pixel ``(2,)`` with a scalar depth, or ``(N, 2)`` pixels with
    ``(N,)`` depths.
    """
    pixel = np.asarray(pixel, dtype=float)
    single = pixel.ndim == 1
    pixels = np.atleast_2d(pixel)
    depth = np.broadcast_to(np.asarray(depth, dtype=float), pixels.shape[:1])
    if np.any(~(depth > 0)):
        raise NonPositiveDepth("depth must be positive")
    if not np.all(in_bounds(cam, pixels)):
        raise PixelOutOfBounds("pixel outside the image")

    rays = np.column_stack([(pixels[:, 0] - cam.cx) / cam.fx, (pixels[:, 1] - cam.cy) / cam.fy])
    cam_pts = np.column_stack([rays * depth[:, None], depth])
    R, t = cam.cam_to_world()
    world = cam_pts @ R.T + t
    return world[0] if single else world


def to_camera(cam, points):
    R, t = cam.cam_to_world()
    return (np.asarray(points, dtype=float) - t) @ R


def project(cam, point):
    """Continuous pixel coordinates and camera-frame depth of world point(s).

    Raises BehindCamera if any point has non-positive depth.
    """
    point = np.asarray(point, dtype=float)
    single = point.ndim == 1
    pixels, depth = _project_many(cam, np.atleast_2d(point))
    if np.any(~(depth > 0)):
        raise BehindCamera("point has non-positive camera depth")
    if single:
        return pixels[0], float(depth[0])
    return pixels, depth


def _project_many(cam, points):
    pc = to_camera(cam, points)
    z = pc[:, 2]
    with np.errstate(divide="ignore", invalid="ignore"):
        u = cam.fx * pc[:, 0] / z + cam.cx
        v = cam.fy * pc[:, 1] / z + cam.cy
    return np.column_stack([u, v]), z


def paint_thermal(cloud, cam, thermal, depth, depth_tolerance=DEFAULT_DEPTH_TOLERANCE):
    """Assign thermal values to the visible points of ``cloud``.

    A point is painted when it lies in front of the camera, projects inside
    the image, and its camera depth agrees with the depth image at the nearest
    pixel to within ``depth_tolerance``. Other points keep their prior value.
    Returns a new cloud.
    """
    if thermal.shape != depth.shape:
        raise DimensionMismatch(f"thermal {thermal.shape} vs depth {depth.shape}")
    if thermal.shape != (cam.height, cam.width):
        raise DimensionMismatch(
            f"image {thermal.shape} vs camera {(cam.height, cam.width)}"
        )
    pixels, z = _project_many(cam, cloud.positions)
    visible = (z > 0) & in_bounds(cam, np.nan_to_num(pixels, nan=-1.0))
    idx = np.flatnonzero(visible)
    px = nearest_pixel(pixels[idx])
    observed = depth.depths[px[:, 1], px[:, 0]]
    ok = (observed > 0) & (np.abs(z[idx] - observed) <= depth_tolerance)
    idx, px = idx[ok], px[ok]

    out = cloud.copy()
    out.thermal[idx] = thermal.values[px[:, 1], px[:, 0]]
    return out
