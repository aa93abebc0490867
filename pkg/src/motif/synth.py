"""Deterministic stand-ins for the hand's sensors.

All randomness flows from numpy's PCG64 bit generator keyed by a
``SeedSequence`` built from the caller's seed and the item index, so outputs
depend only on the arguments.
"""

import math
from dataclasses import dataclass, field, fields

import numpy as np

from .affordance import GraspCandidate
from .cloud import PointCloud
from .errors import ConfigError, InvalidGeometry
from .features import FlickTrace, window_ticks
from .projection import DepthImage, ThermalImage

OBJECT_MASSES_G = (82, 125, 219)
TRIALS_PER_CLASS = 50
GRAVITY = 9.81


def rng_for(*key):
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(k) for k in key])))


def mass_label(mass_grams):
    return f"{int(mass_grams)}g"


# -- thermal cylinder scenes -------------------------------------------------


@dataclass(frozen=True)
class CylinderScene:
    """Lateral surface of an upright cylinder with a warm band.

    Rings are cell-centred: ring ``k`` sits at ``(k + 0.5) * height / rings``.
    """

    radius: float = 0.033
    height: float = 0.12
    points_per_ring: int = 64
    rings: int = 24
    hot_band: tuple = (0.0, 0.07)
    hot_rgb: tuple = (230, 60, 30)
    cool_rgb: tuple = (40, 120, 210)
    anomaly_count: int = 0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "hot_band", tuple(float(v) for v in self.hot_band))
        object.__setattr__(self, "hot_rgb", tuple(int(v) for v in self.hot_rgb))
        object.__setattr__(self, "cool_rgb", tuple(int(v) for v in self.cool_rgb))
        if not (self.radius > 0 and self.height > 0):
            raise InvalidGeometry("radius and height must be positive")
        if self.points_per_ring < 1 or self.rings < 1:
            raise InvalidGeometry("need at least one ring and one point per ring")
        z_low, z_high = self.hot_band
        if not 0 <= z_low < z_high <= self.height:
            raise InvalidGeometry(f"hot band {self.hot_band} not within [0, {self.height}]")
        if not 0 <= self.anomaly_count <= self.total_points:
            raise InvalidGeometry("anomaly_count exceeds point count")
        for rgb in (self.hot_rgb, self.cool_rgb):
            if len(rgb) != 3 or min(rgb) < 0 or max(rgb) > 255:
                raise InvalidGeometry(f"bad color {rgb}")

    @property
    def total_points(self):
        return self.points_per_ring * self.rings

    @property
    def ring_spacing(self):
        return self.height / self.rings

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown scene keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        for key in ("hot_band", "hot_rgb", "cool_rgb"):
            d[key] = list(d[key])
        return d


@dataclass
class CylinderTruth:
    anomaly_indices: np.ndarray
    boundary_z: float
    hot_mask: np.ndarray = field(repr=False)

    def to_dict(self):
        return {
            "anomaly_indices": self.anomaly_indices.tolist(),
            "boundary_z": self.boundary_z,
            "hot_indices": np.flatnonzero(self.hot_mask).tolist(),
        }


def gen_cylinder(scene):
    """Point cloud of ``scene`` plus its ground truth.

    ``hot_mask`` marks points that are warm by construction (before anomaly
    injection); ``boundary_z`` is the top of the warm band.
    """
    k = np.arange(scene.rings)
    z = (k + 0.5) * scene.ring_spacing
    theta = 2 * np.pi * np.arange(scene.points_per_ring) / scene.points_per_ring
    zz, tt = np.meshgrid(z, theta, indexing="ij")
    zz, tt = zz.ravel(), tt.ravel()
    positions = np.column_stack([scene.radius * np.cos(tt), scene.radius * np.sin(tt), zz])

    z_low, z_high = scene.hot_band
    hot = (zz >= z_low) & (zz < z_high)
    rgb = np.where(hot[:, None], scene.hot_rgb, scene.cool_rgb)

    rng = rng_for(scene.seed)
    anomalies = np.sort(rng.choice(len(zz), size=scene.anomaly_count, replace=False))
    rgb[anomalies] = np.where(hot[anomalies, None], scene.cool_rgb, scene.hot_rgb)

    cloud = PointCloud(positions, rgb)
    return cloud, CylinderTruth(anomalies, z_high, hot)


def render_cylinder(scene, cam, hot_temp=70.0, cool_temp=22.0, ambient=20.0):
    """Thermal and depth images of the cylinder's lateral surface seen by ``cam``.

    Ray-cast per pixel centre; pixels that miss the surface get depth 0 and
    the ambient temperature. End caps are not modelled.
    """
    u, v = np.meshgrid(np.arange(cam.width, dtype=float), np.arange(cam.height, dtype=float))
    d_cam = np.stack([(u - cam.cx) / cam.fx, (v - cam.cy) / cam.fy, np.ones_like(u)], axis=-1)
    R, c = cam.cam_to_world()
    d = d_cam @ R.T

    a = d[..., 0] ** 2 + d[..., 1] ** 2
    b = 2 * (c[0] * d[..., 0] + c[1] * d[..., 1])
    cc = c[0] ** 2 + c[1] ** 2 - scene.radius**2
    disc = b * b - 4 * a * cc
    depth = np.zeros(u.shape)
    temp = np.full(u.shape, float(ambient))
    with np.errstate(invalid="ignore", divide="ignore"):
        sq = np.sqrt(np.where(disc >= 0, disc, np.nan))
        for s in ((-b - sq) / (2 * a), (-b + sq) / (2 * a)):
            z = c[2] + s * d[..., 2]
            hit = (depth == 0) & (s > 0) & (z >= 0) & (z <= scene.height)
            hit &= np.isfinite(s)
            depth[hit] = s[hit]
            z_low, z_high = scene.hot_band
            warm = (z >= z_low) & (z < z_high)
            temp[hit] = np.where(warm[hit], hot_temp, cool_temp)
    return ThermalImage(temp), DepthImage(depth)


def gen_grasps(scene, count, contacts=3, seed=0, standoff=0.0):
    """Random grasps whose contacts lie on the cylinder's lateral surface."""
    rng = rng_for(seed, count)
    out = []
    for _ in range(count):
        theta = rng.uniform(0, 2 * np.pi, size=contacts)
        z = rng.uniform(0, scene.height, size=contacts)
        r = scene.radius + standoff
        pts = np.column_stack([r * np.cos(theta), r * np.sin(theta), z])
        centre = pts.mean(axis=0)
        yaw = float(np.mean(theta))
        R = np.array(
            [[math.cos(yaw), -math.sin(yaw), 0.0], [math.sin(yaw), math.cos(yaw), 0.0], [0.0, 0.0, 1.0]]
        )
        out.append(GraspCandidate(R, centre, pts))
    return out


# -- flick traces ------------------------------------------------------------


@dataclass(frozen=True)
class FlickModel:
    """Phenomenological fingertip response to a flick of fixed torque.

    ``impact_acc_peak`` is the peak rebound acceleration along Y after
    contact (lighter objects let the finger retract faster).
    ``spike_depth`` is the Z deceleration at impact, proportional to mass.
    ``noise_std`` is per-sample Gaussian noise for (acc, gyro, mag);
    ``jitter`` is the relative trial-to-trial spread of every amplitude and
    time constant.
    """

    mass_grams: float
    impact_acc_peak: float
    contact_duration_ms: float
    spike_depth: float
    rebound_tau_ms: float
    mag_drift_ut: float
    noise_std: tuple = (0.35, 0.05, 0.5)
    jitter: float = 0.12
    seed: int = 42

    def __post_init__(self):
        if self.mass_grams <= 0:
            raise ConfigError("mass must be positive")
        if min(self.noise_std) < 0 or self.jitter < 0:
            raise ConfigError("noise levels must be non-negative")

    @classmethod
    def for_mass(cls, mass_grams, seed=42, noise_scale=1.0, **overrides):
        m = float(mass_grams)
        if not m > 0:
            raise ConfigError("mass must be positive")
        params = dict(
            mass_grams=m,
            impact_acc_peak=12.0 * (82.0 / m) ** 0.7,
            contact_duration_ms=8.0 + 0.05 * m,
            spike_depth=0.11 * m,
            rebound_tau_ms=20.0 + 0.15 * m,
            mag_drift_ut=2.0 + 0.02 * m,
            noise_std=tuple(noise_scale * s for s in cls.noise_std),
            jitter=noise_scale * cls.jitter,
            seed=seed,
        )
        params.update(overrides)
        return cls(**params)


# fixed for every trial: the hand applies the same torque
_APPROACH_S = 0.040
_APPROACH_ACC = 6.0
_APPROACH_OMEGA = 5.0
_MAG_BASE = np.array([22.0, -6.0, 41.0])


def _half_sine(t, start, duration):
    s = (t - start) / duration
    return np.where((s >= 0) & (s <= 1), np.sin(np.pi * np.clip(s, 0, 1)), 0.0)


def flick_signals(model, t, rng=None):
    """Noise-free (when ``rng`` is None) 9-axis template at times ``t`` (s)."""
    if rng is None:
        jit = lambda: 1.0
        t_contact = _APPROACH_S
        tilt = np.zeros(2)
        mag_base = _MAG_BASE
    else:
        jit = lambda: max(1.0 + model.jitter * rng.standard_normal(), 0.1)
        t_contact = _APPROACH_S * jit()
        tilt = 0.05 * model.jitter * rng.standard_normal(2)
        mag_base = _MAG_BASE + 10.0 * model.jitter * rng.standard_normal(3)

    depth = model.spike_depth * jit()
    duration = model.contact_duration_ms * 1e-3 * jit()
    tau = model.rebound_tau_ms * 1e-3 * jit()
    rebound = model.impact_acc_peak * jit()
    drift = model.mag_drift_ut * jit()

    t_release = t_contact + duration
    s = np.clip(t - t_release, 0.0, None)
    after = t >= t_release
    rebound_shape = np.where(after, (s / tau) * np.exp(1.0 - s / tau), 0.0)
    ringing = np.where(after, np.exp(-s / tau) * np.sin(2 * np.pi * 15.0 * s), 0.0)

    acc = np.zeros((len(t), 3))
    acc[:, 0] = GRAVITY * tilt[0] + 0.15 * rebound * ringing
    acc[:, 1] = GRAVITY * tilt[1] + rebound * rebound_shape
    acc[:, 2] = (
        GRAVITY
        - _APPROACH_ACC * _half_sine(t, 0.0, t_contact)
        - depth * _half_sine(t, t_contact, duration)
        + 0.3 * depth * ringing
    )

    gyro = np.zeros((len(t), 3))
    gyro[:, 0] = _APPROACH_OMEGA * _half_sine(t, 0.0, t_contact) - 0.25 * rebound * rebound_shape
    gyro[:, 1] = 0.02 * depth * ringing
    gyro[:, 2] = 0.1 * rebound * ringing

    mag = np.tile(mag_base, (len(t), 1))
    settle = np.where(after, 1.0 - np.exp(-s / 0.15), 0.0)
    mag[:, 1] += drift * settle
    mag[:, 0] += 0.3 * drift * settle
    return np.hstack([acc, gyro, mag])


def gen_flick(model, trials, tick_interval_us=2000, label=None):
    """``trials`` flick traces over the standard window, trigger at index 125."""
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    pre, n = window_ticks(tick_interval_us)
    t = (np.arange(n) - pre) * tick_interval_us * 1e-6
    label = label or mass_label(model.mass_grams)
    noisy = model.jitter > 0 or max(model.noise_std) > 0
    out = []
    for trial in range(trials):
        rng = rng_for(model.seed, round(model.mass_grams), trial) if noisy else None
        x = flick_signals(model, t, rng)
        if rng is not None:
            sigma = np.repeat(np.asarray(model.noise_std, dtype=float), 3)
            x = x + rng.standard_normal(x.shape) * sigma
        out.append(FlickTrace(x, tick_interval_us, pre, label, 0, 0))
    return out


def gen_dataset_paper_mirror(seed=42, trials=TRIALS_PER_CLASS, noise_scale=1.0):
    """50 traces for each of the three object masses, grouped by class."""
    traces = []
    for mass in OBJECT_MASSES_G:
        traces += gen_flick(FlickModel.for_mass(mass, seed=seed, noise_scale=noise_scale), trials)
    return traces
