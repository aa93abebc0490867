"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line that is printed in the terminal summary.
"""

import contextlib
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from motif.affordance import GraspCandidate, build_affordance, denoise, filter_grasps, find_boundary, slice_cloud
from motif.cloud import PointCloud
from motif.features import FEATURE_NAMES, FlickTrace, batch_extract, extract_features, window_trace
from motif.lda import fit, leave_one_out
from motif.projection import CameraModel, backproject, intrinsics, project
from motif.synth import CylinderScene, gen_cylinder, gen_dataset_paper_mirror
from motif.wire import SensorFrame, decode_frame, decode_stream, encode_frame, frames_equal

# explained-variance split of the seed-42 synthetic dataset, frozen after the
# first computation
GOLDEN_SPLIT = [0.9269785745023601, 0.07302142549763992]


@contextlib.contextmanager
def criterion(number, title):
    detail = {}
    try:
        yield detail
    except BaseException:
        ACCEPTANCE_LINES[number] = f"[FAIL] {number}. {title} {detail.get('msg', '')}".rstrip()
        raise
    ACCEPTANCE_LINES[number] = f"[PASS] {number}. {title} {detail.get('msg', '')}".rstrip()
    print(ACCEPTANCE_LINES[number])


@pytest.fixture(scope="module")
def mirror_dataset():
    traces = gen_dataset_paper_mirror(seed=42)
    X, labels = batch_extract(traces)
    return traces, X, labels


def test_1_lda_structure_and_golden_split(mirror_dataset):
    with criterion(1, "LDA keeps 2 directions, variance sums to 1, golden split stable") as d:
        _, X, labels = mirror_dataset
        rng = np.random.default_rng(1)
        for _ in range(20):
            centres = rng.normal(0, 2, (3, 6))
            Xr = np.vstack([c + rng.normal(size=(15, 6)) for c in centres])
            m = fit(Xr, ["a"] * 15 + ["b"] * 15 + ["c"] * 15)
            assert m.n_directions == 2
            assert abs(m.explained_variance.sum() - 1) <= 1e-9
        model = fit(X, labels)
        assert model.n_directions == 2
        assert abs(model.explained_variance.sum() - 1) <= 1e-9
        d["msg"] = f"(split {model.explained_variance[0]:.4f}/{model.explained_variance[1]:.4f})"
        np.testing.assert_allclose(model.explained_variance, GOLDEN_SPLIT, rtol=1e-9, atol=1e-12)


def test_2_leave_one_out_accuracy(mirror_dataset):
    with criterion(2, "leave-one-out accuracy >= 95% in < 10 s") as d:
        _, X, labels = mirror_dataset
        start = time.perf_counter()
        res = leave_one_out(X, labels)
        elapsed = time.perf_counter() - start
        d["msg"] = f"(accuracy {res.accuracy:.3f}, {elapsed:.2f} s)"
        assert res.accuracy >= 0.95
        assert elapsed < 10


def brute_stats(samples):
    out = []
    cols = samples.T.tolist()
    for s in range(3):
        for a in range(3):
            col = cols[3 * s + a]
            n = len(col)
            mean = sum(col) / n
            out += [min(col), max(col), mean, (sum((x - mean) ** 2 for x in col) / n) ** 0.5]
    for s in range(3):
        ranges = [max(cols[3 * s + a]) - min(cols[3 * s + a]) for a in range(3)]
        mags = [(x * x + y * y + z * z) ** 0.5 for x, y, z in zip(*cols[3 * s : 3 * s + 3])]
        out += [max(ranges), sum(mags) / len(mags)]
    return np.array(out)


def test_3_feature_census():
    with criterion(3, "42 canonical features match a brute-force oracle to 1e-9"):
        canonical = [f"{s}_{a}_{k}" for s in ("ACC", "GYRO", "MAG") for a in "XYZ"
                     for k in ("Min", "Max", "Mean", "Std")]
        canonical += [f"{s}_{k}" for s in ("ACC", "GYRO", "MAG") for k in ("Range", "MagMean")]
        assert list(FEATURE_NAMES) == canonical
        rng = np.random.default_rng(3)
        for _ in range(100):
            samples = rng.normal(rng.uniform(-50, 50, 9), rng.uniform(0.01, 20, 9), (626, 9))
            f = extract_features(FlickTrace(samples))
            assert len(f) == 42
            want = brute_stats(samples)
            assert np.all(np.abs(f.values - want) <= 1e-9 * np.maximum(np.abs(want), 1e-300))


def random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] *= -1
    return q


def test_4_reprojection():
    with criterion(4, "project(backproject) round trip < 1e-9 on 1e5 triples, rigid invariance") as d:
        rng = np.random.default_rng(4)
        worst = 0.0
        for _ in range(1000):
            K = intrinsics(*rng.uniform(50, 400, 2), *rng.uniform([60, 40], [100, 80]))
            conv = "cam_to_world" if rng.random() < 0.5 else "world_to_cam"
            cam = CameraModel(K, random_rotation(rng), rng.uniform(-5, 5, 3), pose_convention=conv)
            pix = rng.uniform([-0.5, -0.5], [159.49, 119.49], (100, 2))
            depth = rng.uniform(0.01, 50, 100)
            px, dz = project(cam, backproject(cam, pix, depth))
            worst = max(worst, np.abs(px - pix).max(), np.abs(dz - depth).max())
        d["msg"] = f"(max error {worst:.1e})"
        assert worst < 1e-9

        for _ in range(100):
            cam = CameraModel(intrinsics(150, 150, 80, 60), random_rotation(rng), rng.uniform(-1, 1, 3))
            R, t = random_rotation(rng), rng.uniform(-3, 3, 3)
            moved = cam.transformed(R, t)
            pix = rng.uniform(0, 119, (50, 2))
            depth = rng.uniform(0.1, 10, 50)
            assert np.abs(backproject(moved, pix, depth) - (backproject(cam, pix, depth) @ R.T + t)).max() < 1e-9
            X = backproject(cam, pix, depth)
            p0, d0 = project(cam, X)
            p1, d1 = project(moved, X @ R.T + t)
            assert np.abs(p1 - p0).max() < 1e-9 and np.abs(d1 - d0).max() < 1e-9


def test_5_denoising():
    with criterion(5, "boundary within 1 slice in >= 95/100 scenes, >= 99% anomalies fixed") as d:
        rng = np.random.default_rng(5)
        hits = fixed = injected = 0
        for seed in range(100):
            fill = int(rng.integers(6, 19))
            base = CylinderScene(seed=seed)
            scene = CylinderScene(
                hot_band=(0.0, fill * base.ring_spacing),
                anomaly_count=int(round(rng.uniform(0.01, 0.05) * base.total_points)),
                seed=seed,
            )
            clean, _ = gen_cylinder(CylinderScene(hot_band=scene.hot_band))
            cloud, truth = gen_cylinder(scene)
            prof = slice_cloud(cloud, slice_height=0.005)
            b = find_boundary(prof)
            first_cool = cloud.positions[~truth.hot_mask, 2].min()
            hits += abs(b.index - prof.slice_at(first_cool)) <= 1

            res = denoise(cloud, prof, b)
            anomalous = np.zeros(len(cloud), bool)
            anomalous[truth.anomaly_indices] = True
            restored = np.all(res.cloud.rgb == clean.rgb, axis=1)
            fixed += int(restored[anomalous].sum())
            injected += int(anomalous.sum())
            assert np.all(res.cloud.rgb[~anomalous] == cloud.rgb[~anomalous])

            again = denoise(res.cloud, prof, b)
            assert np.array_equal(again.cloud.rgb, res.cloud.rgb)
        d["msg"] = f"(boundary {hits}/100, corrected {fixed}/{injected})"
        assert hits >= 95
        assert fixed >= 0.99 * injected


def brute_force_filter(contact_sets, hot, radius):
    keep = []
    for i, contacts in enumerate(contact_sets):
        if len(hot) == 0:
            keep.append(i)
            continue
        diff = contacts[:, None, :] - hot[None, :, :]
        if np.sqrt((diff**2).sum(axis=2)).min() > radius:
            keep.append(i)
    return keep


def test_6_grasp_filtering():
    with criterion(6, "grasp filter equals brute force on 1000 sets, monotone in radius"):
        rng = np.random.default_rng(6)
        for _ in range(1000):
            n = int(rng.integers(1, 120))
            cloud = PointCloud(rng.uniform(-0.1, 0.1, (n, 3)), np.zeros((n, 3)), score=rng.uniform(-255, 255, n))
            threshold = float(rng.uniform(-100, 200))
            amap = build_affordance(cloud, threshold)
            hot = cloud.positions[cloud.score >= threshold]
            sets = [rng.uniform(-0.12, 0.12, (int(rng.integers(1, 5)), 3)) for _ in range(int(rng.integers(1, 15)))]
            grasps = [GraspCandidate(np.eye(3), c.mean(axis=0), c) for c in sets]
            radius = float(rng.uniform(0, 0.05))
            assert filter_grasps(grasps, amap, radius).kept_indices == brute_force_filter(sets, hot, radius)

        amap = build_affordance(PointCloud(rng.uniform(-0.1, 0.1, (200, 3)), np.zeros((200, 3)), score=np.ones(200)), 0.0)
        grasps = [GraspCandidate(np.eye(3), np.zeros(3), rng.uniform(-0.12, 0.12, (3, 3))) for _ in range(300)]
        previous = None
        for radius in np.linspace(0, 0.1, 51):
            kept = set(filter_grasps(grasps, amap, radius).kept_indices)
            assert previous is None or kept <= previous
            previous = kept


def random_frames(rng, n):
    # arbitrary bit patterns, NaNs and infinities included
    with np.errstate(invalid="ignore"):
        vals = rng.integers(0, 2**32, (n, 9), dtype=np.uint32).view(np.float32).astype(float).tolist()
    ids = rng.integers(0, 12, n).tolist()
    ts = rng.integers(0, 2**32, n).tolist()
    tactile = (rng.random(n) < 0.2).tolist()
    grids = rng.integers(0, 65536, (n, 36)).tolist()
    return [
        SensorFrame(ids[i], ts[i], v[0:3], v[3:6], v[6:9], tuple(grids[i]) if tactile[i] else None)
        for i, v in enumerate(vals)
    ]


@pytest.mark.slow
def test_7_wire_codec():
    with criterion(7, "1e6-frame round trip exact, resync >= 99.9% under 1% corruption") as d:
        rng = np.random.default_rng(7)
        mismatches = 0
        for _ in range(20):
            for f in random_frames(rng, 50_000):
                g, _ = decode_frame(encode_frame(f))
                mismatches += not frames_equal(f, g)
        assert mismatches == 0

        frames = random_frames(rng, 20_000)
        msgs = [encode_frame(f) for f in frames]
        total = sum(map(len, msgs))
        budget = int(0.01 * total)
        # spread the corrupt bytes over randomly chosen gaps between messages
        gaps = np.bincount(rng.integers(0, len(msgs), budget), minlength=len(msgs))
        parts = []
        for m, g in zip(msgs, gaps):
            parts.append(rng.integers(0, 256, g, dtype=np.uint8).tobytes())
            parts.append(m)
        got = decode_stream(b"".join(parts)).frames
        keys = {encode_frame(f) for f in got}
        recovered = sum(m in keys for m in msgs)
        d["msg"] = f"(0 mismatches, recovered {recovered}/{len(frames)})"
        assert recovered >= 0.999 * len(frames)


def test_8_window_arithmetic():
    with criterion(8, "clean 2 ms stream windows to 626 samples, trigger index 125") as d:
        trigger = 5_000_000
        frames = [
            SensorFrame(1, ts, (0, 0, 9.81), (0, 0, 0), (1, 2, 3))
            for ts in range(trigger - 400_000, trigger + 1_200_000, 2000)
        ]
        trace = window_trace(frames, trigger)
        d["msg"] = f"({len(trace)} samples, trigger {trace.trigger_index}, {trace.fills} fills)"
        assert len(trace) == 626
        assert trace.trigger_index == 125
        assert trace.fills == 0
