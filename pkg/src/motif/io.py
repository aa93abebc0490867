"""Readers and writers for the on-disk formats: ASCII PLY clouds, 16-bit PGM
images with JSON sidecars, trace and feature CSVs, and JSON documents.

Writers are deterministic so that identical inputs give byte-identical files.
"""

import csv
import json
from pathlib import Path

import numpy as np

from .cloud import PointCloud
from .errors import FormatError
from .features import CHANNELS, FEATURE_NAMES, window_samples
from .wire import TACTILE_CELLS


def fmt(x):
    """Shortest round-tripping text for a float."""
    return repr(float(x))


def dump_json(obj, path=None):
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def load_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


# -- PLY -----------------------------------------------------------------------

_PLY_TYPES = {
    "char": int, "uchar": int, "short": int, "ushort": int, "int": int, "uint": int,
    "int8": int, "uint8": int, "int16": int, "uint16": int, "int32": int, "uint32": int,
    "float": float, "double": float, "float32": float, "float64": float,
}


def write_ply(path, cloud):
    has_thermal = bool(cloud.painted.any())
    has_score = cloud.score is not None
    header = [
        "ply",
        "format ascii 1.0",
        f"element vertex {len(cloud)}",
        "property double x",
        "property double y",
        "property double z",
        "property uchar red",
        "property uchar green",
        "property uchar blue",
    ]
    if has_thermal:
        header.append("property double thermal")
    if has_score:
        header.append("property double score")
    header.append("end_header")

    lines = header
    pos = cloud.positions.tolist()
    rgb = cloud.rgb.tolist()
    thermal = cloud.thermal.tolist()
    score = cloud.score.tolist() if has_score else None
    for i in range(len(cloud)):
        row = [fmt(v) for v in pos[i]] + [str(v) for v in rgb[i]]
        if has_thermal:
            row.append(fmt(thermal[i]))
        if has_score:
            row.append(fmt(score[i]))
        lines.append(" ".join(row))
    text = "\n".join(lines) + "\n"
    if hasattr(path, "write"):
        path.write(text)
    else:
        Path(path).write_text(text)


def read_ply(path):
    text = Path(path).read_text()
    head, sep, body = text.partition("end_header\n")
    if not sep or not head.startswith("ply"):
        raise FormatError(f"{path}: not an ASCII PLY file")
    props = []
    count = None
    in_vertex = False
    for line in head.splitlines()[1:]:
        parts = line.split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            if parts[1] != "ascii":
                raise FormatError(f"{path}: only ascii PLY is supported")
        elif parts[0] == "element":
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                count = int(parts[2])
        elif parts[0] == "property" and in_vertex:
            if parts[1] == "list":
                raise FormatError(f"{path}: list properties on vertices are not supported")
            if parts[1] not in _PLY_TYPES:
                raise FormatError(f"{path}: unknown property type {parts[1]}")
            props.append(parts[2])
    if count is None:
        raise FormatError(f"{path}: no vertex element")
    for name in ("x", "y", "z", "red", "green", "blue"):
        if name not in props:
            raise FormatError(f"{path}: missing vertex property {name}")

    rows = body.splitlines()[:count]
    if len(rows) < count:
        raise FormatError(f"{path}: expected {count} vertices, found {len(rows)}")
    data = np.array([[float(v) for v in r.split()[: len(props)]] for r in rows]).reshape(count, len(props))
    col = {name: data[:, i] for i, name in enumerate(props)}
    return PointCloud(
        np.column_stack([col["x"], col["y"], col["z"]]),
        np.column_stack([col["red"], col["green"], col["blue"]]),
        col.get("thermal"),
        col.get("score"),
    )


# -- PGM -----------------------------------------------------------------------


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_pgm(path, values, scale, offset=0.0):
    """16-bit binary PGM; stored counts map back as ``count * scale + offset``."""
    values = np.asarray(values, dtype=float)
    counts = np.floor((values - offset) / scale + 0.5)
    if counts.min() < 0 or counts.max() > 0xFFFF:
        raise FormatError("values do not fit in 16 bits at this scale/offset")
    h, w = values.shape
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode())
        f.write(counts.astype(">u2").tobytes())
    dump_json({"scale": scale, "offset": offset}, sidecar_path(path))


def read_pgm(path):
    raw = Path(path).read_bytes()
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        end = pos
        while end < len(raw) and not raw[end : end + 1].isspace():
            end += 1
        tokens.append(raw[pos:end])
        pos = end
    pos += 1
    if tokens[0] != b"P5":
        raise FormatError(f"{path}: not a binary PGM")
    w, h, maxval = (int(t) for t in tokens[1:])
    dtype = ">u2" if maxval > 255 else "u1"
    counts = np.frombuffer(raw, dtype=dtype, count=w * h, offset=pos).reshape(h, w)
    side = sidecar_path(path)
    meta = load_json(side) if side.exists() else {"scale": 1.0, "offset": 0.0}
    return counts.astype(float) * float(meta.get("scale", 1.0)) + float(meta.get("offset", 0.0))


# -- frames --------------------------------------------------------------------

FRAME_COLUMNS = (
    ["unit_id", "timestamp_us"]
    + list(CHANNELS)
    + [f"tactile_{i}" for i in range(TACTILE_CELLS)]
)


def write_frames_csv(path_or_file, frames):
    def emit(f):
        w = csv.writer(f, lineterminator="\n")
        w.writerow(FRAME_COLUMNS)
        for fr in frames:
            tactile = list(fr.tactile) if fr.tactile is not None else [""] * TACTILE_CELLS
            w.writerow([fr.unit_id, fr.timestamp_us] + [fmt(v) for v in fr.imu] + tactile)

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as f:
            emit(f)


# -- traces --------------------------------------------------------------------

TRACE_COLUMNS = ["t_us"] + list(CHANNELS)


def write_trace(directory, name, trace):
    directory = Path(directory)
    with open(directory / f"{name}.csv", "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for t, row in zip(trace.timestamps.tolist(), trace.samples.tolist()):
            w.writerow([t] + [fmt(v) for v in row])
    meta = {"trigger_us": trace.trigger_us, "label": trace.label}
    dump_json(meta, directory / f"{name}.json")


def read_trace(csv_path, cfg=None):
    """Load one trace CSV and window it around the sidecar's trigger time."""
    csv_path = Path(csv_path)
    meta = load_json(csv_path.with_suffix(".json"))
    if "trigger_us" not in meta:
        raise FormatError(f"{csv_path}: sidecar lacks trigger_us")
    with open(csv_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header != TRACE_COLUMNS:
            raise FormatError(f"{csv_path}: expected columns {TRACE_COLUMNS}")
        rows = [r for r in reader if r]
    ts = np.array([int(r[0]) for r in rows], dtype=np.int64)
    data = np.array([[float(v) for v in r[1:]] for r in rows]).reshape(-1, 9)
    return window_samples(ts, data, meta["trigger_us"], cfg, meta.get("label"))


def read_trace_dir(directory, cfg=None):
    """Traces in filename order; returns ``(names, traces)``."""
    paths = sorted(Path(directory).glob("*.csv"))
    return [p.stem for p in paths], [read_trace(p, cfg) for p in paths]


# -- features ------------------------------------------------------------------


def write_features_csv(path_or_file, X, labels=None, names=None):
    def emit(f):
        w = csv.writer(f, lineterminator="\n")
        head = (["trace"] if names is not None else []) + ["label"] + list(FEATURE_NAMES)
        w.writerow(head)
        for i, row in enumerate(np.asarray(X).tolist()):
            lead = [names[i]] if names is not None else []
            lab = "" if labels is None or labels[i] is None else labels[i]
            w.writerow(lead + [lab] + [fmt(v) for v in row])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as f:
            emit(f)


def read_features_csv(path):
    """Returns ``(X, labels)``; labels are None where blank or absent."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        missing = [n for n in FEATURE_NAMES if n not in (reader.fieldnames or [])]
        if missing:
            raise FormatError(f"{path}: missing feature columns {missing[:3]}...")
        X, labels = [], []
        for row in reader:
            X.append([float(row[n]) for n in FEATURE_NAMES])
            labels.append(row.get("label") or None)
    return np.array(X).reshape(-1, len(FEATURE_NAMES)), labels
