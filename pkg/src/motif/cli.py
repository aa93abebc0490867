"""``motif`` command-line entry point.

Exit codes: 0 success, 1 domain or input error, 2 usage error. Data goes to
files or stdout; diagnostics go to stderr. With ``--json`` every run prints a
single JSON envelope on stdout (see ``schemas/cli_output.schema.json``).
"""

import argparse
import csv
import io as _io
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import affordance, features, lda, projection, synth, wire
from . import io as mio
from .config import load_config
from .errors import FormatError, MotifError, UnlabeledTrace

log = logging.getLogger("motif")


class CliError(Exception):
    def __init__(self, code, message):
        super().__init__(message)
        self.code = code


# -- subcommand handlers -------------------------------------------------------
# Each returns a JSON-serializable result dict (or None) and may write files.


def cmd_decode(args, cfg, out):
    data = Path(args.raw).read_bytes()
    frames, dropped = wire.decode_stream(data)
    log.info("decoded %d frames, dropped %d", len(frames), dropped)
    if args.output:
        mio.write_frames_csv(args.output, frames)
    else:
        mio.write_frames_csv(out, frames)
    return {"frames": len(frames), "dropped": dropped, "bytes": len(data)}


def _load_images(args):
    thermal = projection.ThermalImage(mio.read_pgm(args.thermal))
    depth = projection.DepthImage(mio.read_pgm(args.depth))
    cam = projection.CameraModel.from_dict(mio.load_json(args.camera))
    return cam, thermal, depth


def _paint(cloud, cam, thermal, depth, tolerance, colorize, t_range):
    painted = projection.paint_thermal(cloud, cam, thermal, depth, tolerance)
    if colorize:
        low, high = t_range or (float(thermal.values.min()), float(thermal.values.max()))
        painted = affordance.colorize_painted(painted, low, high)
    return painted


def cmd_paint(args, cfg, out):
    cloud = mio.read_ply(args.cloud)
    cam, thermal, depth = _load_images(args)
    tol = args.tolerance if args.tolerance is not None else cfg.thermal.depth_tolerance
    painted = _paint(cloud, cam, thermal, depth, tol, not args.no_colorize, args.t_range)
    mio.write_ply(args.output, painted)
    n = int(painted.painted.sum())
    log.info("painted %d of %d points", n, len(painted))
    return {"points": len(painted), "painted": n}


def _denoise_cfg(args, cfg):
    if getattr(args, "denoise_config", None):
        return affordance.DenoiseConfig.from_dict(mio.load_json(args.denoise_config))
    return cfg.denoise


def run_denoise(cloud, dcfg):
    profile = affordance.slice_cloud(cloud, dcfg.axis, dcfg.slice_height, dcfg)
    boundary = affordance.find_boundary(profile, dcfg)
    result = affordance.denoise(cloud, profile, boundary, dcfg)
    report = {
        "boundary_slice": boundary.index,
        "lower_slice": boundary.lower_index,
        "drop": boundary.drop,
        "qualified": boundary.qualified,
        "anomaly_count": result.count,
        "anomaly_indices": result.anomalies.tolist(),
        "dominant_below": list(result.dominant_below) if result.dominant_below else None,
        "dominant_above": list(result.dominant_above) if result.dominant_above else None,
        "slice_height": profile.slice_height,
        "slice_origin": profile.origin,
        "slice_means": profile.means.tolist(),
        "boundary_coordinate": profile.origin + boundary.index * profile.slice_height,
    }
    return result.cloud, report


def cmd_denoise(args, cfg, out):
    cloud = mio.read_ply(args.cloud)
    clean, report = run_denoise(cloud, _denoise_cfg(args, cfg))
    mio.write_ply(args.output or out, clean)
    if args.report:
        mio.dump_json(report, args.report)
    log.info("boundary at slice %d, %d anomalies replaced", report["boundary_slice"], report["anomaly_count"])
    return report


def _read_grasps(path):
    doc = mio.load_json(path)
    if not isinstance(doc, list):
        raise FormatError(f"{path}: expected a list of grasps")
    try:
        return [affordance.GraspCandidate.from_dict(g) for g in doc]
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: bad grasp entry ({exc})") from None


def run_filter(cloud, grasps, dcfg, hot_threshold, radius):
    scored = affordance.with_scores(cloud, dcfg)
    amap = affordance.build_affordance(scored, hot_threshold)
    res = affordance.filter_grasps(grasps, amap, radius)
    summary = {
        "candidates": len(grasps),
        "kept": len(res.kept),
        "kept_indices": res.kept_indices,
        "hot_points": int(len(amap.hot_indices)),
        "rejected": [
            {
                "candidate": r.candidate,
                "contact": r.contact.tolist(),
                "hot_point": r.hot_point.tolist(),
                "distance": r.distance,
            }
            for r in res.rejected
        ],
    }
    return res, summary


def cmd_filter_grasps(args, cfg, out):
    cloud = mio.read_ply(args.cloud)
    grasps = _read_grasps(args.grasps)
    thr = args.hot_threshold if args.hot_threshold is not None else cfg.thermal.hot_threshold
    radius = args.radius if args.radius is not None else cfg.thermal.safety_radius
    res, summary = run_filter(cloud, grasps, _denoise_cfg(args, cfg), thr, radius)
    mio.dump_json([g.to_dict() for g in res.kept], args.output)
    log.info("kept %d of %d grasps", summary["kept"], summary["candidates"])
    return summary


def cmd_features(args, cfg, out):
    names, traces = mio.read_trace_dir(args.traces_dir, cfg.stream)
    if not traces:
        raise FormatError(f"{args.traces_dir}: no trace CSV files")
    X = np.vstack([features.extract_features(t, cfg.lda.ddof).values for t in traces])
    labels = [t.label for t in traces]
    mio.write_features_csv(args.output or out, X, labels, names)
    fills = sum(t.fills for t in traces)
    log.info("extracted %d feature rows (%d filled ticks)", len(traces), fills)
    return {"traces": len(traces), "features": features.N_FEATURES, "filled_ticks": fills}


def cmd_lda_fit(args, cfg, out):
    X, labels = mio.read_features_csv(args.features)
    if any(l is None for l in labels):
        raise UnlabeledTrace("every feature row needs a label to fit")
    model = lda.fit(X, labels, cfg.lda.ridge_scale, features.FEATURE_NAMES)
    mio.dump_json(model.to_dict(), args.output)
    return {
        "classes": model.class_labels,
        "explained_variance": model.explained_variance.tolist(),
        "samples": len(X),
    }


def cmd_lda_classify(args, cfg, out):
    model = lda.LdaModel.from_dict(mio.load_json(args.model))
    X, labels = mio.read_features_csv(args.sample)
    rows = []
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["row", "predicted"] + [f"dist_{c}" for c in model.class_labels])
    for i, x in enumerate(X):
        pred, dist = lda.classify(model, x)
        rows.append({"row": i, "predicted": pred, "label": labels[i]})
        w.writerow([i, pred] + [mio.fmt(d) for d in dist])
    return {"predictions": rows}


def cmd_lda_report(args, cfg, out):
    model = lda.LdaModel.from_dict(mio.load_json(args.model))
    contrib = lda.feature_contributions(model)
    target = open(args.output, "w", newline="") if args.output else out
    try:
        w = csv.writer(target, lineterminator="\n")
        w.writerow(["direction", "rank", "feature", "weight", "explained_variance"])
        for k, items in enumerate(contrib):
            ev = mio.fmt(model.explained_variance[k])
            for rank, (name, weight) in enumerate(items, 1):
                w.writerow([f"LD{k + 1}", rank, name, mio.fmt(weight), ev])
    finally:
        if args.output:
            target.close()
    return {
        "explained_variance": model.explained_variance.tolist(),
        "top": [items[:3] for items in contrib],
    }


def cmd_synth_cylinder(args, cfg, out):
    doc = mio.load_json(args.scene_config) if args.scene_config else {}
    scene = synth.CylinderScene.from_dict(doc)
    cloud, truth = synth.gen_cylinder(scene)
    mio.write_ply(args.output, cloud)
    if args.truth:
        mio.dump_json(truth.to_dict(), args.truth)
    return {"points": len(cloud), "anomalies": int(len(truth.anomaly_indices)), "boundary_z": truth.boundary_z}


def cmd_synth_view(args, cfg, out):
    doc = mio.load_json(args.scene_config) if args.scene_config else {}
    scene = synth.CylinderScene.from_dict(doc)
    cam = projection.CameraModel.from_dict(mio.load_json(args.camera))
    thermal, depth = synth.render_cylinder(scene, cam, args.hot_temp, args.cool_temp)
    prefix = Path(args.output)
    mio.write_pgm(prefix.with_name(prefix.name + "_thermal.pgm"), thermal.values, 0.01, -40.0)
    mio.write_pgm(prefix.with_name(prefix.name + "_depth.pgm"), depth.depths, 1e-4, 0.0)
    return {"hit_pixels": int((depth.depths > 0).sum())}


def cmd_synth_grasps(args, cfg, out):
    doc = mio.load_json(args.scene_config) if args.scene_config else {}
    scene = synth.CylinderScene.from_dict(doc)
    grasps = synth.gen_grasps(scene, args.count, args.contacts, args.seed)
    mio.dump_json([g.to_dict() for g in grasps], args.output)
    return {"grasps": len(grasps)}


def _synth_traces(args, cfg):
    seed = args.seed if args.seed is not None else cfg.synth.seed
    trials = args.trials if args.trials is not None else cfg.synth.trials
    return seed, synth.gen_dataset_paper_mirror(seed, trials, cfg.synth.noise_scale)


def cmd_synth_flicks(args, cfg, out):
    seed, traces = _synth_traces(args, cfg)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    counters = {}
    for trace in traces:
        k = counters.get(trace.label, 0)
        counters[trace.label] = k + 1
        mio.write_trace(outdir, f"{trace.label}_{k:03d}", trace)
    return {"traces": len(traces), "seed": seed, "per_class": counters}


def cmd_pipeline_thermal(args, cfg, out):
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    dcfg = _denoise_cfg(args, cfg)
    cloud = mio.read_ply(args.cloud)
    cam, thermal, depth = _load_images(args)
    tol = args.tolerance if args.tolerance is not None else cfg.thermal.depth_tolerance
    painted = _paint(cloud, cam, thermal, depth, tol, True, None)
    mio.write_ply(outdir / "painted.ply", painted)
    clean, report = run_denoise(painted, dcfg)
    mio.write_ply(outdir / "clean.ply", clean)
    mio.dump_json(report, outdir / "denoise_report.json")
    thr = args.hot_threshold if args.hot_threshold is not None else cfg.thermal.hot_threshold
    radius = args.radius if args.radius is not None else cfg.thermal.safety_radius
    res, summary = run_filter(clean, _read_grasps(args.grasps), dcfg, thr, radius)
    mio.dump_json([g.to_dict() for g in res.kept], outdir / "kept.json")
    result = {
        "painted": int(painted.painted.sum()),
        "points": len(cloud),
        "boundary_slice": report["boundary_slice"],
        "qualified": report["qualified"],
        "anomaly_count": report["anomaly_count"],
        "grasps": {k: summary[k] for k in ("candidates", "kept", "kept_indices", "hot_points")},
    }
    mio.dump_json(result, outdir / "summary.json")
    return result


def cmd_pipeline_flick(args, cfg, out):
    if args.synth:
        seed, traces = _synth_traces(args, cfg)
        source = {"synthetic": True, "seed": seed}
    elif args.traces_dir:
        _, traces = mio.read_trace_dir(args.traces_dir, cfg.stream)
        source = {"synthetic": False, "traces_dir": str(args.traces_dir)}
    else:
        raise CliError("UsageError", "pipeline flick needs a traces directory or --synth")
    X, labels = features.batch_extract(traces, cfg.lda.ddof)
    model = lda.fit(X, labels, cfg.lda.ridge_scale, features.FEATURE_NAMES)
    loo = lda.leave_one_out(X, labels, cfg.lda.ridge_scale)
    report = {
        "source": source,
        "traces": len(traces),
        "classes": model.class_labels,
        "explained_variance": model.explained_variance.tolist(),
        "accuracy": loo.accuracy,
        "confusion": {
            t: {p: int(loo.confusion[i, j]) for j, p in enumerate(loo.labels)}
            for i, t in enumerate(loo.labels)
        },
        "top_contributions": {
            f"LD{k + 1}": [[n, w] for n, w in items[:5]]
            for k, items in enumerate(lda.feature_contributions(model))
        },
    }
    if args.output:
        outdir = Path(args.output)
        outdir.mkdir(parents=True, exist_ok=True)
        mio.write_features_csv(outdir / "features.csv", X, labels)
        mio.dump_json(model.to_dict(), outdir / "model.json")
        mio.dump_json(report, outdir / "report.json")
    if not args.json:
        out.write(mio.dump_json(report))
    return report


# -- parser --------------------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="motif", description="Thermal affordance and flick classification pipelines.")
    p.add_argument("--config", dest="pipeline_config", help="pipeline config JSON (default: $MOTIF_CONFIG)")
    p.add_argument("--json", action="store_true", help="print a JSON result envelope on stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", metavar="COMMAND")

    s = sub.add_parser("decode", help="decode a raw serial capture to CSV")
    s.add_argument("raw")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_decode)

    def image_args(s):
        s.add_argument("--camera", required=True, help="camera JSON")
        s.add_argument("--thermal", required=True, help="thermal PGM (sidecar JSON holds the scale)")
        s.add_argument("--depth", required=True, help="depth PGM (sidecar JSON holds the scale)")
        s.add_argument("--tolerance", type=float, help="depth tolerance in meters")

    s = sub.add_parser("paint", help="paint thermal values onto a point cloud")
    s.add_argument("cloud")
    image_args(s)
    s.add_argument("--no-colorize", action="store_true", help="keep original colors")
    s.add_argument("--t-range", type=float, nargs=2, metavar=("LOW", "HIGH"))
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_paint)

    s = sub.add_parser("denoise", help="find the liquid boundary and replace anomalies")
    s.add_argument("cloud")
    s.add_argument("--config", dest="denoise_config", help="denoise config JSON")
    s.add_argument("-o", "--output", help="output PLY (default: stdout)")
    s.add_argument("--report")
    s.set_defaults(func=cmd_denoise)

    s = sub.add_parser("filter-grasps", help="drop grasps that touch hot regions")
    s.add_argument("cloud")
    s.add_argument("grasps")
    s.add_argument("--hot-threshold", type=float)
    s.add_argument("--radius", type=float)
    s.add_argument("--config", dest="denoise_config", help="denoise config JSON (score weights)")
    s.add_argument("-o", "--output", required=True)
    s.set_defaults(func=cmd_filter_grasps)

    s = sub.add_parser("features", help="extract the 42 flick features from a trace directory")
    s.add_argument("traces_dir")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("lda", help="fit, apply or report a discriminant model")
    lsub = s.add_subparsers(dest="lda_command", metavar="ACTION")
    t = lsub.add_parser("fit")
    t.add_argument("features")
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_lda_fit)
    t = lsub.add_parser("classify")
    t.add_argument("model")
    t.add_argument("sample")
    t.set_defaults(func=cmd_lda_classify)
    t = lsub.add_parser("report")
    t.add_argument("model")
    t.add_argument("-o", "--output")
    t.set_defaults(func=cmd_lda_report)

    s = sub.add_parser("synth", help="generate synthetic inputs")
    ssub = s.add_subparsers(dest="synth_command", metavar="KIND")
    t = ssub.add_parser("cylinder")
    t.add_argument("--config", dest="scene_config", help="scene JSON")
    t.add_argument("-o", "--output", required=True)
    t.add_argument("--truth")
    t.set_defaults(func=cmd_synth_cylinder)
    t = ssub.add_parser("view", help="render thermal and depth PGMs of a cylinder scene")
    t.add_argument("--config", dest="scene_config", help="scene JSON")
    t.add_argument("--camera", required=True)
    t.add_argument("--hot-temp", type=float, default=70.0)
    t.add_argument("--cool-temp", type=float, default=22.0)
    t.add_argument("-o", "--output", required=True, help="output path prefix")
    t.set_defaults(func=cmd_synth_view)
    t = ssub.add_parser("grasps", help="random grasps on a cylinder scene")
    t.add_argument("--config", dest="scene_config", help="scene JSON")
    t.add_argument("--count", type=int, default=10)
    t.add_argument("--contacts", type=int, default=3)
    t.add_argument("--seed", type=int, default=0)
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_synth_grasps)
    t = ssub.add_parser("flicks")
    t.add_argument("--seed", type=int)
    t.add_argument("--trials", type=int, help="trials per mass class")
    t.add_argument("-o", "--output", required=True)
    t.set_defaults(func=cmd_synth_flicks)

    s = sub.add_parser("pipeline", help="run a whole pipeline")
    psub = s.add_subparsers(dest="pipeline_command", metavar="NAME")
    t = psub.add_parser("thermal", help="paint -> denoise -> filter-grasps")
    t.add_argument("cloud")
    image_args(t)
    t.add_argument("--grasps", required=True)
    t.add_argument("--hot-threshold", type=float)
    t.add_argument("--radius", type=float)
    t.add_argument("--config", dest="denoise_config", help="denoise config JSON")
    t.add_argument("-o", "--output", required=True, help="output directory")
    t.set_defaults(func=cmd_pipeline_thermal)
    t = psub.add_parser("flick", help="features -> lda fit -> leave-one-out report")
    t.add_argument("traces_dir", nargs="?")
    t.add_argument("--synth", action="store_true", help="use the seeded synthetic dataset")
    t.add_argument("--seed", type=int)
    t.add_argument("--trials", type=int, help="synthetic trials per mass class")
    t.add_argument("-o", "--output", help="directory for features, model and report")
    t.set_defaults(func=cmd_pipeline_flick)

    return p


def _envelope_error(code, message):
    return {"ok": False, "error": {"code": code, "message": message}}


def run(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if getattr(args, "func", None) is None:
        parser.print_usage(stderr)
        print("motif: error: missing command", file=stderr)
        return 2

    handler = logging.StreamHandler(stderr)
    handler.setFormatter(logging.Formatter("motif: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(logging.INFO if args.verbose else logging.WARNING)

    command = " ".join(
        c for c in (args.command, getattr(args, "lda_command", None),
                    getattr(args, "synth_command", None), getattr(args, "pipeline_command", None)) if c
    )
    try:
        cfg = load_config(args.pipeline_config)
        result = args.func(args, cfg, _io.StringIO() if args.json else stdout)
    except FileNotFoundError as exc:
        return _fail(args, stdout, stderr, "FileNotFound", f"{exc.filename}: no such file")
    except CliError as exc:
        return _fail(args, stdout, stderr, exc.code, str(exc), status=2)
    except MotifError as exc:
        return _fail(args, stdout, stderr, exc.code, str(exc))
    except (ValueError, OSError) as exc:
        return _fail(args, stdout, stderr, "InvalidInput", str(exc))

    if args.json:
        stdout.write(json.dumps({"ok": True, "command": command, "result": result}, sort_keys=True, indent=2) + "\n")
    return 0


def _fail(args, stdout, stderr, code, message, status=1):
    print(f"motif: error [{code}]: {message}", file=stderr)
    if args.json:
        stdout.write(json.dumps(_envelope_error(code, message), sort_keys=True, indent=2) + "\n")
    return status


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
