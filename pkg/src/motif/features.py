"""Trigger-aligned windowing of fingertip IMU streams and the 42 per-trace
summary statistics used for mass classification."""

from dataclasses import dataclass

import numpy as np

from .errors import EmptyTrace, InsufficientCoverage, UnlabeledTrace
from .wire import FrameStreamConfig

SENSORS = ("ACC", "GYRO", "MAG")
AXES = ("X", "Y", "Z")
AXIS_STATS = ("Min", "Max", "Mean", "Std")

PRE_TRIGGER_S = 0.25
POST_TRIGGER_S = 1.0
FINGERTIP_UNIT = 1

FEATURE_NAMES = tuple(
    [f"{s}_{a}_{stat}" for s in SENSORS for a in AXES for stat in AXIS_STATS]
    + [f"{s}_{kind}" for s in SENSORS for kind in ("Range", "MagMean")]
)
N_FEATURES = len(FEATURE_NAMES)

CHANNELS = tuple(f"{s.lower()}_{a.lower()}" for s in SENSORS for a in AXES)


def window_ticks(tick_interval_us=2000):
    """(pre-trigger tick count, total sample count) for the standard window."""
    pre = round(PRE_TRIGGER_S * 1e6 / tick_interval_us)
    post = round(POST_TRIGGER_S * 1e6 / tick_interval_us)
    return pre, pre + post + 1


@dataclass
class FlickTrace:
    """A fixed-cadence window of 9-axis readings around a flick onset.

    ``samples`` is ``(n, 9)``: acc xyz, gyro xyz, mag xyz. ``t0_us`` is the
    timestamp of the first sample; ``fills`` counts ticks that were missing in
    the source stream and held from the previous sample.
    """

    samples: np.ndarray
    tick_interval_us: int = 2000
    trigger_index: int = 125
    label: str = None
    t0_us: int = 0
    fills: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float).reshape(-1, 9)

    def __len__(self):
        return len(self.samples)

    @property
    def acc(self):
        return self.samples[:, 0:3]

    @property
    def gyro(self):
        return self.samples[:, 3:6]

    @property
    def mag(self):
        return self.samples[:, 6:9]

    @property
    def timestamps(self):
        return self.t0_us + self.tick_interval_us * np.arange(len(self), dtype=np.int64)

    @property
    def trigger_us(self):
        return int(self.t0_us + self.tick_interval_us * self.trigger_index)


def window_trace(frames, trigger_us, cfg=None, unit_id=None, label=None):
    """Resample ``frames`` onto the tick grid spanning -0.25 s to +1.0 s.

    Each grid tick takes the frame within half a tick of it; a tick with no
    such frame repeats the previous sample and is counted in ``fills``.
    Frames from other units are ignored when ``unit_id`` is given.
    """
    if unit_id is not None:
        frames = [f for f in frames if f.unit_id == unit_id]
    ts = np.array([f.timestamp_us for f in frames], dtype=np.int64)
    data = np.array([f.imu for f in frames], dtype=float).reshape(-1, 9)
    return window_samples(ts, data, trigger_us, cfg, label)


def window_samples(timestamps, data, trigger_us, cfg=None, label=None):
    """Array form of :func:`window_trace`: ``(n,)`` timestamps, ``(n, 9)`` data."""
    cfg = cfg or FrameStreamConfig()
    tick = cfg.tick_interval_us
    pre, n = window_ticks(tick)
    grid = int(trigger_us) + (np.arange(n, dtype=np.int64) - pre) * tick
    half = tick / 2

    ts = np.asarray(timestamps, dtype=np.int64)
    if len(ts) > 1 and np.any(np.diff(ts) <= 0):
        raise ValueError("timestamps must be strictly increasing")
    if len(ts) == 0 or ts[0] >= grid[0] + half or ts[-1] <= grid[-1] - half:
        raise InsufficientCoverage(f"samples do not cover [{grid[0]}, {grid[-1]}] us")

    right = np.clip(np.searchsorted(ts, grid), 1, max(len(ts) - 1, 1))
    left = right - 1
    if len(ts) == 1:
        left = right = np.zeros_like(grid)
    nearest = np.where(np.abs(ts[left] - grid) <= np.abs(ts[right] - grid), left, right)
    hit = np.abs(ts[nearest] - grid) < half

    # hold index: last hit so far, seeded with the last sample at or before
    # the window start
    seed = max(int(np.searchsorted(ts, grid[0], side="right")) - 1, 0)
    source = np.where(hit, nearest, -1)
    source = np.maximum.accumulate(np.concatenate([[seed], source]))[1:]
    out = np.asarray(data, dtype=float)[source]
    fills = int(np.count_nonzero(~hit))
    return FlickTrace(out, tick, pre, label, int(grid[0]), fills)


@dataclass
class FeatureVector:
    values: np.ndarray
    names: tuple = FEATURE_NAMES

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def __len__(self):
        return len(self.values)

    def as_dict(self):
        return dict(zip(self.names, self.values.tolist()))


def sensor_range(block):
    """Range of one sensor: the largest per-axis (max - min) excursion."""
    return float(np.max(block.max(axis=0) - block.min(axis=0)))


def extract_features(trace, ddof=0):
    """The 42 canonical statistics of one trace.

    Per axis: min, max, mean and standard deviation (divisor ``n - ddof``).
    Per sensor: range and the mean Euclidean magnitude.
    """
    if len(trace) == 0:
        raise EmptyTrace("trace has no samples")
    if ddof and len(trace) <= ddof:
        raise EmptyTrace(f"need more than {ddof} samples for ddof={ddof}")
    blocks = (trace.acc, trace.gyro, trace.mag)
    axis_stats = []
    for block in blocks:
        stats = np.stack(
            [block.min(axis=0), block.max(axis=0), block.mean(axis=0), block.std(axis=0, ddof=ddof)],
            axis=1,
        )
        axis_stats.append(stats.ravel())
    sensor_stats = []
    for block in blocks:
        sensor_stats += [sensor_range(block), float(np.linalg.norm(block, axis=1).mean())]
    return FeatureVector(np.concatenate(axis_stats + [np.array(sensor_stats)]))


def batch_extract(traces, ddof=0):
    """Feature matrix ``(N, 42)`` and label list for labeled traces."""
    labels = []
    rows = []
    for i, trace in enumerate(traces):
        if trace.label is None:
            raise UnlabeledTrace(f"trace {i} has no label")
        labels.append(trace.label)
        rows.append(extract_features(trace, ddof).values)
    X = np.vstack(rows) if rows else np.empty((0, N_FEATURES))
    return X, labels
