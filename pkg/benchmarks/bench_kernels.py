"""Time the numba and numpy kernel backends on a bundled scene.

    python3 benchmarks/bench_kernels.py --scene bar --size 128 --repeat 3

Both backends are called in the same process through their ``backend=``
argument; the first numba call (JIT compile) is excluded.  Outputs are
checked for bitwise agreement before timing.
"""
import argparse
import time

import numpy as np

from prast import _backend, kernels
from prast.pipeline import RenderConfig, bound_primitives, pixel_samples, rasterize
from prast.scene import load_scene
from prast.warp import warp_rolling


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scene", default="bar")
    ap.add_argument("--mode", default="rolling", choices=["common", "foveated", "rolling", "joint"])
    ap.add_argument("--size", type=int, default=128)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if not _backend.HAVE_NUMBA:
        raise SystemExit("numba is not available; nothing to compare")

    scene = load_scene(args.scene)
    cfg = RenderConfig.for_scene(scene, args.mode, width=args.size, height=args.size)
    cam = scene.camera
    prims = scene.primitives()
    samp = pixel_samples(cfg, cam)
    cam0 = np.ascontiguousarray(prims.cam[:, 0])
    cam1 = np.ascontiguousarray(prims.cam[:, 1])
    planes, nplanes, rows = kernels.pack_bounds(bound_primitives(prims, cam, cfg), cfg.height)
    raster = (samp.dirs, samp.times, cfg.width, cfg.height, cam0, cam1, planes, nplanes, rows, cam.near)
    depth = None
    if args.mode == "rolling":
        gb, _ = rasterize(scene, RenderConfig("common", width=args.size, height=args.size))
        depth = gb.depth
        # any colour will do for timing; use the normals
        colour = np.ascontiguousarray(gb.normal)

    jobs = {
        "rasterize_bounded": lambda be: kernels.rasterize_bounded(*raster, backend=be),
        "trace_all": lambda be: kernels.trace_all(samp.dirs, samp.times, cam0, cam1, cam.near, backend=be),
    }
    if len(prims) <= 1000:
        jobs["coverage_masks"] = lambda be: kernels.coverage_masks(samp.dirs, samp.times, cam0, cam1,
                                                                    cam.near, backend=be)
    if depth is not None:
        jobs["warp_rolling"] = lambda be: warp_rolling(depth, colour, cam, scene.view, cfg.scan, backend=be)

    print(f"{args.scene} {args.mode} {args.size}x{args.size}, {len(prims)} triangles,"
          f" best of {args.repeat}")
    print(f"{'kernel':<20}{'numba s':>10}{'numpy s':>10}{'speedup':>10}")
    for name, job in jobs.items():
        a = job("numba")  # compile
        b = job("numpy")
        a, b = (a if isinstance(a, tuple) else (a,)), (b if isinstance(b, tuple) else (b,))
        if not all(np.array_equal(x, y, equal_nan=x.dtype.kind == "f") for x, y in zip(a, b)):
            raise SystemExit(f"{name}: backends disagree")
        tn = best_of(lambda: job("numba"), args.repeat)
        tp = best_of(lambda: job("numpy"), args.repeat)
        print(f"{name:<20}{tn:>10.4f}{tp:>10.4f}{tp / tn:>9.1f}x")


if __name__ == "__main__":
    main()
