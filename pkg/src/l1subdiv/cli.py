"""Command-line front end.

Subcommands
-----------
``fit-curve``
    Refine sampled or file-loaded 2-D data, writing one CSV per level plus a
    JSON run summary.
``fit-surface``
    Refine a torus grid (optionally noisy), writing a polygon-mesh file per
    level plus the summary.
``basic-limit``
    Refine a unit impulse and report the measured support width.
``experiment``
    Run one of the named benchmark experiments (fig3 .. fig9, torus) and
    write all artifacts plus a metrics JSON.

Every run is deterministic given its manifest and seed; outputs carry full
17-significant-digit decimals so a reloaded file reproduces the original
floats exactly.  Exit codes: 0 success, 1 numerical failure, 2 usage or
input error.  The ``SUBDIV_L1_THREADS`` environment variable caps refinement
parallelism (0 = one thread per CPU).
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .analysis import basic_limit, support_width
from .datagen import NoiseSpec, add_noise
from .experiments import (
    EXPERIMENTS,
    ExperimentManifest,
    build_scheme,
    run_curve_manifest,
    run_experiment,
    run_surface_manifest,
)
from .refine1d import ControlPolygon, scheme_from_width, subdivide
from .refine2d import GridMesh, subdivide_2d

__all__ = [
    "main",
    "parse_scheme",
    "parse_outliers",
    "write_curve_csv",
    "read_curve_csv",
    "write_mesh",
    "read_mesh",
]


def _fmt(x):
    return format(float(x), ".17g")


def write_curve_csv(path, polygon):
    """Write ``param,value`` (or ``param,x,y,...``) rows at full precision."""
    points = polygon.points
    if points.ndim == 1:
        header = "param,value"
        rows = ((p, (v,)) for p, v in zip(polygon.params, points))
    else:
        names = ["x", "y", "z"] + [f"c{k}" for k in range(3, points.shape[1])]
        header = "param," + ",".join(names[: points.shape[1]])
        rows = zip(polygon.params, points)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for p, values in rows:
            fh.write(_fmt(p) + "," + ",".join(_fmt(v) for v in values) + "\n")


def read_curve_csv(path):
    """Load a curve CSV written by :func:`write_curve_csv`.

    The parameters must be uniformly spaced (they are for every file this
    package writes); start and spacing are recovered from them.
    """
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("param"):
            raise ValueError(f"{path}: not a curve CSV (missing 'param' header)")
        data = [line.strip().split(",") for line in fh if line.strip()]
    if len(data) < 2:
        raise ValueError(f"{path}: need at least two data rows")
    arr = np.array(data, dtype=float)
    params, values = arr[:, 0], arr[:, 1:]
    steps = np.diff(params)
    spacing = steps[0]
    if not np.allclose(steps, spacing, rtol=1e-9, atol=1e-12 * abs(spacing)):
        raise ValueError(f"{path}: parameters are not uniformly spaced")
    points = values[:, 0] if values.shape[1] == 1 else values
    return ControlPolygon(
        points=points,
        start=float(params[0]),
        spacing=float(spacing),
        explicit_params=params,
    )


def write_mesh(path, mesh):
    """Write a grid mesh as a plain-text polygon file.

    ``v x y z`` vertex lines in row-major grid order followed by 1-based
    quad ``f`` records; closed axes wrap around.  A leading comment records
    the grid geometry so :func:`read_mesh` can rebuild the mesh exactly.
    """
    values = mesh.values
    if values.ndim != 3 or values.shape[2] != 3:
        raise ValueError("mesh output needs (R, C, 3) vertex data")
    rows, cols = values.shape[:2]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(
            "# grid {} {} {} {} {} {} {} {} {}\n".format(
                rows,
                cols,
                mesh.topology[0],
                mesh.topology[1],
                _fmt(mesh.start[0]),
                _fmt(mesh.start[1]),
                _fmt(mesh.spacing[0]),
                _fmt(mesh.spacing[1]),
                mesh.level,
            )
        )
        for i in range(rows):
            for j in range(cols):
                fh.write("v " + " ".join(_fmt(v) for v in values[i, j]) + "\n")
        last_r = rows if mesh.topology[0] == "closed" else rows - 1
        last_c = cols if mesh.topology[1] == "closed" else cols - 1
        for i in range(last_r):
            for j in range(last_c):
                i2, j2 = (i + 1) % rows, (j + 1) % cols
                a = i * cols + j + 1
                b = i2 * cols + j + 1
                c = i2 * cols + j2 + 1
                d = i * cols + j2 + 1
                fh.write(f"f {a} {b} {c} {d}\n")


def read_mesh(path):
    """Load a mesh file written by :func:`write_mesh`."""
    with open(path, "r", encoding="utf-8") as fh:
        head = fh.readline().split()
        if len(head) != 11 or head[0] != "#" or head[1] != "grid":
            raise ValueError(f"{path}: not a mesh file written by this package")
        rows, cols = int(head[2]), int(head[3])
        topology = (head[4], head[5])
        start = (float(head[6]), float(head[7]))
        spacing = (float(head[8]), float(head[9]))
        level = int(head[10])
        verts = []
        for line in fh:
            if line.startswith("v "):
                verts.append([float(t) for t in line.split()[1:4]])
    if len(verts) != rows * cols:
        raise ValueError(f"{path}: expected {rows * cols} vertices, found {len(verts)}")
    values = np.array(verts).reshape(rows, cols, 3)
    return GridMesh(values=values, level=level, topology=topology, start=start, spacing=spacing)


def write_json(path, payload):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def parse_scheme(text):
    """Parse ``--scheme`` strings like ``2n=10,d=3`` or ``2n+1=11,d=2``."""
    width = degree = None
    for token in text.split(","):
        token = token.strip()
        if not token:
            continue
        key, _, value = token.partition("=")
        key = key.strip()
        if key == "2n":
            width = int(value)
            if width % 2 != 0:
                raise ValueError(f"2n={width} must be even (use 2n+1= for odd widths)")
        elif key == "2n+1":
            width = int(value)
            if width % 2 != 1:
                raise ValueError(f"2n+1={width} must be odd")
        elif key == "d":
            degree = int(value)
        else:
            raise ValueError(f"unknown scheme field {key!r} (expected 2n, 2n+1 or d)")
    if width is None or degree is None:
        raise ValueError(f"scheme {text!r} must give a width (2n= or 2n+1=) and d=")
    return width, degree


def parse_outliers(text):
    """Parse ``--outliers`` strings like ``5:2.0,12:-1.5`` into pairs."""
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        idx, _, offset = item.partition(":")
        out.append((int(idx), float(offset)))
    return tuple(out)


def _parse_domain(text):
    a, _, b = text.partition(":")
    return float(a), float(b)


def _scheme_args(parser):
    parser.add_argument("--scheme", required=True, help="e.g. 2n=10,d=3 or 2n+1=11,d=2")
    parser.add_argument("--arity", type=int, default=2)
    parser.add_argument("--levels", type=int, default=4)
    parser.add_argument("--delta", type=float, default=1e-4)
    parser.add_argument("--epsilon", type=float, default=1e-6)
    parser.add_argument("--max-iters", type=int, default=6)
    parser.add_argument("--boundary", choices=("shrink", "periodic", "mirror"), default="shrink")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="l1subdiv",
        description="Robust (smoothed-l1) subdivision of noisy data with outliers.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit-curve", help="refine 2-D data")
    p.add_argument("--input", help="curve CSV to refine")
    p.add_argument("--function", choices=("g1", "g2", "g3", "g4", "g5", "g6"))
    p.add_argument("--domain", default="0:10", help="sampling interval a:b")
    p.add_argument("--samples", type=int, default=30)
    _scheme_args(p)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--outliers", default="", help="index:offset,... applied after noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True, help="output directory")

    p = sub.add_parser("fit-surface", help="refine a torus grid")
    p.add_argument("--input", help="mesh file to refine")
    p.add_argument("--domain", default="2:5", help="torus radii c1:c2")
    p.add_argument("--samples", type=int, default=12, help="grid cells per axis")
    _scheme_args(p)
    p.add_argument("--noise-sigma", type=float, default=0.0)
    p.add_argument("--outliers", default="", help="i:j:offset,... applied after noise")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)

    p = sub.add_parser("basic-limit", help="refine a unit impulse")
    _scheme_args(p)
    p.add_argument("--padding", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--output", required=True)

    p = sub.add_parser("experiment", help="run a named benchmark experiment")
    p.add_argument("name", nargs="?", default="")
    p.add_argument("--output", required=True)
    p.add_argument("--manifest", help="run a saved manifest file instead of a named experiment")
    return parser


def _make_scheme(args):
    width, degree = parse_scheme(args.scheme)
    return scheme_from_width(
        width,
        degree,
        arity=args.arity,
        boundary=args.boundary,
        delta=args.delta,
        epsilon=args.epsilon,
        max_iters=args.max_iters,
    )


def _manifest_from_args(args, kind):
    width, degree = parse_scheme(args.scheme)
    scheme = {
        "width": width,
        "d": degree,
        "arity": args.arity,
        "delta": args.delta,
        "epsilon": args.epsilon,
        "max_iters": args.max_iters,
        "boundary": args.boundary,
    }
    if kind == "curve":
        if args.input:
            source = {"kind": "file", "path": os.path.basename(args.input)}
        else:
            a, b = _parse_domain(args.domain)
            source = {
                "kind": "function",
                "name": args.function,
                "domain": [a, b],
                "count": args.samples,
            }
        outliers = [[i, off] for i, off in parse_outliers(args.outliers)]
    else:
        c1, c2 = _parse_domain(args.domain)
        source = {"kind": "torus", "c1": c1, "c2": c2, "res": [args.samples, args.samples]}
        outliers = []
        for item in args.outliers.split(","):
            item = item.strip()
            if item:
                i, j, off = item.split(":")
                outliers.append([int(i), int(j), float(off)])
    noise = None
    if args.noise_sigma > 0 or outliers:
        noise = {
            "sigma": args.noise_sigma,
            "seed": args.seed,
            "outliers": outliers,
            "rng": "numpy-pcg64-standard_normal",
        }
    return ExperimentManifest(
        name=f"cli-{kind}", scheme=scheme, source=source, levels=args.levels, noise=noise
    )


def _cmd_fit_curve(args):
    outdir = args.output
    os.makedirs(outdir, exist_ok=True)
    manifest = _manifest_from_args(args, "curve")
    if args.input:
        if not os.path.exists(args.input):
            raise FileNotFoundError(f"input file not found: {args.input}")
        data = read_curve_csv(args.input)
        if manifest.noise is not None:
            spec = NoiseSpec(
                sigma=manifest.noise["sigma"],
                seed=manifest.noise["seed"],
                outliers=tuple(tuple(o) for o in manifest.noise["outliers"]),
            )
            data = add_noise(data, spec)
        scheme = build_scheme(manifest)
        levels = [data]
        stats = []
        for _ in range(manifest.levels):
            levels.append(subdivide(levels[-1], scheme, 1, stats=stats))
        summary = {
            "manifest": manifest.to_dict(),
            "per_level_stats": stats,
            "points_per_level": [len(p) for p in levels],
        }
        result = {"levels": levels, "summary": summary}
    else:
        if not args.function:
            raise ValueError("fit-curve needs --input or --function")
        result = run_curve_manifest(manifest)
    for k, polygon in enumerate(result["levels"]):
        write_curve_csv(os.path.join(outdir, f"curve_level{k}.csv"), polygon)
    write_json(os.path.join(outdir, "summary.json"), result["summary"])
    return 0


def _cmd_fit_surface(args):
    outdir = args.output
    os.makedirs(outdir, exist_ok=True)
    manifest = _manifest_from_args(args, "surface")
    if args.input:
        if not os.path.exists(args.input):
            raise FileNotFoundError(f"input file not found: {args.input}")
        data = read_mesh(args.input)
        scheme = build_scheme(manifest)
        levels = [data]
        stats = []
        for _ in range(manifest.levels):
            levels.append(subdivide_2d(levels[-1], scheme, 1, stats=stats))
        summary = {
            "manifest": manifest.to_dict(),
            "per_level_stats": stats,
            "grid_per_level": [list(m.shape) for m in levels],
        }
        result = {"levels": levels, "summary": summary}
    else:
        result = run_surface_manifest(manifest)
    for k, mesh in enumerate(result["levels"]):
        write_mesh(os.path.join(outdir, f"surface_level{k}.obj"), mesh)
    write_json(os.path.join(outdir, "summary.json"), result["summary"])
    return 0


def _cmd_basic_limit(args):
    outdir = args.output
    os.makedirs(outdir, exist_ok=True)
    spec = _make_scheme(args)
    samples = basic_limit(spec, args.levels, padding=args.padding)
    polygon = ControlPolygon(
        points=samples.values,
        level=samples.level,
        start=float(samples.params[0]),
        spacing=float(samples.params[1] - samples.params[0]) if samples.params.size > 1 else 1.0,
    )
    write_curve_csv(os.path.join(outdir, "basic_limit.csv"), polygon)
    width, degree = parse_scheme(args.scheme)
    write_json(
        os.path.join(outdir, "summary.json"),
        {
            "scheme": {"width": width, "d": degree},
            "levels": args.levels,
            "tol": args.tol,
            "support_width": support_width(samples, args.tol),
        },
    )
    return 0


def _cmd_experiment(args):
    if args.manifest:
        with open(args.manifest, "r", encoding="utf-8") as fh:
            manifest = ExperimentManifest.from_json(fh.read())
        os.makedirs(args.output, exist_ok=True)
        if manifest.source.get("kind") == "torus":
            result = run_surface_manifest(manifest)
            for k, mesh in enumerate(result["levels"]):
                write_mesh(os.path.join(args.output, f"{manifest.name}_level{k}.obj"), mesh)
        else:
            result = run_curve_manifest(manifest)
            for k, polygon in enumerate(result["levels"]):
                write_curve_csv(
                    os.path.join(args.output, f"{manifest.name}_level{k}.csv"), polygon
                )
        write_json(os.path.join(args.output, f"{manifest.name}_summary.json"), result["summary"])
        return 0
    if args.name not in EXPERIMENTS:
        available = ", ".join(sorted(EXPERIMENTS))
        raise ValueError(f"unknown experiment {args.name!r}; available: {available}")
    outdir = args.output
    os.makedirs(outdir, exist_ok=True)
    outcome = run_experiment(args.name)
    for manifest in outcome["manifests"]:
        result = outcome["runs"][manifest.name]
        with open(
            os.path.join(outdir, f"{manifest.name}.manifest.json"), "w", encoding="utf-8", newline="\n"
        ) as fh:
            fh.write(manifest.to_json())
        final = result["levels"][-1]
        if manifest.source.get("kind") == "torus":
            write_mesh(os.path.join(outdir, f"{manifest.name}_final.obj"), final)
        else:
            write_curve_csv(os.path.join(outdir, f"{manifest.name}_final.csv"), final)
        write_json(os.path.join(outdir, f"{manifest.name}_summary.json"), result["summary"])
    write_json(os.path.join(outdir, "metrics.json"), outcome["metrics"])
    return 0


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "fit-curve": _cmd_fit_curve,
        "fit-surface": _cmd_fit_surface,
        "basic-limit": _cmd_basic_limit,
        "experiment": _cmd_experiment,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
