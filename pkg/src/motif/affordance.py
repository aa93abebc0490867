"""Color-derived heat scores, slice-based boundary search, denoising, and
hot-zone grasp filtering.

Scores are signed: positive reads as warm, negative as cool. Objects are
sliced along a gravity-aligned axis and the liquid/air boundary is located as
the sharpest warm-to-cool drop between neighbouring occupied slices.
"""

from dataclasses import dataclass, field, fields

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .errors import ConfigError, EmptyCloud, MissingScores, TooFewSlices

PHYSICAL = "physical"
LITERAL = "literal"

HOT_RGB = (255, 0, 0)
COOL_RGB = (0, 255, 255)


@dataclass(frozen=True)
class DenoiseConfig:
    red_weight: float = 1.0
    green_weight: float = -0.5
    blue_weight: float = -0.5
    upper_hot_threshold: float = 40.0
    lower_cool_threshold: float = -40.0
    jump_threshold: float = 30.0
    slice_height: float = 0.005
    axis: tuple = (0.0, 0.0, 1.0)
    # "physical": warm slice below, cool slice above (liquid under air).
    # "literal": the mirrored condition, warm slice on top.
    threshold_reading: str = PHYSICAL

    def __post_init__(self):
        if not self.jump_threshold > 0:
            raise ConfigError("jump_threshold must be positive")
        if not self.slice_height > 0:
            raise ConfigError("slice_height must be positive")
        if self.threshold_reading not in (PHYSICAL, LITERAL):
            raise ConfigError(f"unknown threshold_reading {self.threshold_reading!r}")
        axis = np.asarray(self.axis, dtype=float)
        norm = np.linalg.norm(axis)
        if axis.shape != (3,) or not norm > 0:
            raise ConfigError("axis must be a non-zero 3-vector")
        object.__setattr__(self, "axis", tuple((axis / norm).tolist()))

    @property
    def weights(self):
        return np.array([self.red_weight, self.green_weight, self.blue_weight])

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown denoise keys: {sorted(unknown)}")
        d = dict(d)
        if "axis" in d:
            d["axis"] = tuple(d["axis"])
        return cls(**d)

    def to_dict(self):
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["axis"] = list(d["axis"])
        return d


def score_thermal(rgb, cfg=None):
    """Weighted RGB sum; accepts one color ``(3,)`` or an ``(N, 3)`` array."""
    cfg = cfg or DenoiseConfig()
    return np.asarray(rgb, dtype=float) @ cfg.weights


def with_scores(cloud, cfg=None):
    out = cloud.copy()
    out.score = score_thermal(cloud.rgb, cfg)
    return out


def thermal_colors(temps, low, high, hot_rgb=HOT_RGB, cool_rgb=COOL_RGB):
    """Map temperatures onto a linear cool-to-hot color ramp."""
    u = np.clip((np.asarray(temps, dtype=float) - low) / max(high - low, 1e-12), 0.0, 1.0)
    ramp = np.outer(1.0 - u, cool_rgb) + np.outer(u, hot_rgb)
    return np.floor(ramp + 0.5).astype(np.uint8)


def colorize_painted(cloud, low, high):
    """Recolor painted points from their temperature; others are untouched."""
    out = cloud.copy()
    mask = cloud.painted
    out.rgb[mask] = thermal_colors(cloud.thermal[mask], low, high)
    out.score = None
    return out


@dataclass
class Slice:
    mean_score: float
    indices: np.ndarray

    @property
    def empty(self):
        return len(self.indices) == 0


@dataclass
class SliceProfile:
    axis: np.ndarray
    slice_height: float
    origin: float
    slices: list
    membership: np.ndarray = field(repr=False, default=None)

    def __len__(self):
        return len(self.slices)

    @property
    def means(self):
        return np.array([s.mean_score for s in self.slices])

    def slice_at(self, coordinate):
        """Index of the slice containing ``coordinate`` along the axis."""
        return int(np.floor((coordinate - self.origin) / self.slice_height + _BIN_EPS))


# absorbs round-off when points sit exactly on a slice edge
_BIN_EPS = 1e-9


def slice_cloud(cloud, axis=(0.0, 0.0, 1.0), slice_height=0.005, cfg=None):
    """Partition ``cloud`` into contiguous slabs along ``axis``.

    Scores come from ``cloud.score`` when present, otherwise from the colors.
    Empty slabs between occupied ones are kept with mean 0 and no members.
    """
    if len(cloud) == 0:
        raise EmptyCloud("cannot slice an empty cloud")
    if not slice_height > 0:
        raise ConfigError("slice_height must be positive")
    axis = np.asarray(axis, dtype=float)
    axis = axis / np.linalg.norm(axis)
    scores = cloud.score if cloud.score is not None else score_thermal(cloud.rgb, cfg)

    s = cloud.positions @ axis
    origin = float(s.min())
    member = np.floor((s - origin) / slice_height + _BIN_EPS).astype(np.int64)
    count = int(member.max()) + 1
    order = np.argsort(member, kind="stable")
    bounds = np.searchsorted(member[order], np.arange(count + 1))
    slices = []
    for k in range(count):
        idx = order[bounds[k] : bounds[k + 1]]
        mean = float(scores[idx].mean()) if len(idx) else 0.0
        slices.append(Slice(mean, idx))
    return SliceProfile(axis, float(slice_height), origin, slices, member)


@dataclass(frozen=True)
class Boundary:
    """Chosen transition. ``index`` is the upper slice of the pair.

    ``qualified`` is False when no pair met the thresholds and the plain
    largest drop was taken instead.
    """

    index: int
    lower_index: int
    drop: float
    qualified: bool


def find_boundary(profile, cfg=None):
    cfg = cfg or DenoiseConfig()
    occupied = [i for i, s in enumerate(profile.slices) if not s.empty]
    if len(occupied) < 2:
        raise TooFewSlices("need at least two occupied slices")
    means = profile.means

    best_qualified = None
    best_any = None
    for lo, hi in zip(occupied, occupied[1:]):
        below, above = means[lo], means[hi]
        drop = below - above
        if cfg.threshold_reading == PHYSICAL:
            ok = below > cfg.upper_hot_threshold and above < cfg.lower_cool_threshold
            jump = drop
        else:
            ok = above > cfg.upper_hot_threshold and below < cfg.lower_cool_threshold
            jump = -drop
        # strict comparisons keep the lowest pair on ties
        if ok and jump > cfg.jump_threshold and (best_qualified is None or jump > best_qualified[0]):
            best_qualified = (jump, lo, hi)
        if best_any is None or drop > best_any[0]:
            best_any = (drop, lo, hi)

    if best_qualified is not None:
        _, lo, hi = best_qualified
        return Boundary(hi, lo, float(means[lo] - means[hi]), True)
    drop, lo, hi = best_any
    return Boundary(hi, lo, float(drop), False)


@dataclass
class DenoiseResult:
    cloud: PointCloud
    anomalies: np.ndarray
    dominant_below: tuple = None
    dominant_above: tuple = None

    @property
    def count(self):
        return len(self.anomalies)


def dominant_color(rgb):
    """Component-wise median color, rounded half up."""
    return tuple(int(v) for v in np.floor(np.median(rgb, axis=0) + 0.5))


def denoise(cloud, profile, boundary, cfg=None):
    """Replace points whose heat sign contradicts their side of the boundary.

    Below the boundary a negative score is an anomaly, above it a positive
    one. Anomalies take their side's dominant color; everything else is left
    as is.
    """
    cfg = cfg or DenoiseConfig()
    index = boundary.index if isinstance(boundary, Boundary) else int(boundary)
    if not 0 < index < len(profile):
        raise ValueError(f"boundary {index} invalid for {len(profile)} slices")

    out = cloud.copy()
    scores = score_thermal(out.rgb, cfg)
    below = profile.membership < index
    dominants = []
    flagged = []
    for side, sign in ((below, -1.0), (~below, 1.0)):
        if not side.any():
            dominants.append(None)
            continue
        dom = dominant_color(out.rgb[side])
        dominants.append(dom)
        bad = side & (np.sign(scores) == sign)
        out.rgb[bad] = dom
        flagged.append(np.flatnonzero(bad))
    out.score = score_thermal(out.rgb, cfg)
    anomalies = np.sort(np.concatenate(flagged)) if flagged else np.array([], dtype=np.int64)
    return DenoiseResult(out, anomalies, dominants[0], dominants[1])


@dataclass
class AffordanceMap:
    cloud: PointCloud
    hot_threshold: float
    hot_indices: np.ndarray

    @property
    def hot_points(self):
        return self.cloud.positions[self.hot_indices]


def build_affordance(cloud, hot_threshold):
    if cloud.score is None:
        raise MissingScores("cloud has no thermal scores")
    hot = np.flatnonzero(cloud.score >= hot_threshold)
    return AffordanceMap(cloud, float(hot_threshold), hot)


@dataclass
class GraspCandidate:
    R: np.ndarray
    t: np.ndarray
    contacts: np.ndarray

    def __post_init__(self):
        self.R = np.asarray(self.R, dtype=float).reshape(3, 3)
        self.t = np.asarray(self.t, dtype=float).reshape(3)
        self.contacts = np.asarray(self.contacts, dtype=float).reshape(-1, 3)
        if len(self.contacts) == 0:
            raise ValueError("a grasp needs at least one contact point")

    @classmethod
    def from_dict(cls, d):
        pose = d.get("pose", {})
        return cls(pose.get("R", np.eye(3)), pose.get("t", np.zeros(3)), d["contacts"])

    def to_dict(self):
        return {
            "pose": {"R": self.R.ravel().tolist(), "t": self.t.tolist()},
            "contacts": self.contacts.tolist(),
        }


@dataclass
class Rejection:
    candidate: int
    contact: np.ndarray
    hot_point: np.ndarray
    distance: float


@dataclass
class GraspFilterResult:
    kept: list
    kept_indices: list
    rejected: list


def filter_grasps(candidates, amap, safety_radius):
    """Keep candidates whose every contact is farther than ``safety_radius``
    from every hot point. Input order is preserved."""
    if safety_radius < 0:
        raise ValueError("safety_radius must be non-negative")
    hot = amap.hot_points
    if len(hot) == 0:
        return GraspFilterResult(list(candidates), list(range(len(candidates))), [])

    tree = cKDTree(hot)
    kept, kept_idx, rejected = [], [], []
    for i, cand in enumerate(candidates):
        dist, nearest = tree.query(cand.contacts, k=1)
        j = int(np.argmin(dist))
        if dist[j] > safety_radius:
            kept.append(cand)
            kept_idx.append(i)
        else:
            rejected.append(Rejection(i, cand.contacts[j], hot[nearest[j]], float(dist[j])))
    return GraspFilterResult(kept, kept_idx, rejected)
