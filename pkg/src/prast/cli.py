"""``prast`` command line.

Exit codes: 0 ok, 2 configuration error, 3 I/O error, 4 verification failure.
"""
import argparse
import sys

import numpy as np

from . import _backend
from .errors import ConfigError, DimensionMismatch, EmptyMask, MissingFile, PrastError

EXIT_OK, EXIT_CONFIG, EXIT_IO, EXIT_VERIFY = 0, 2, 3, 4


def _pair(text):
    try:
        x, y = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected X,Y, got {text!r}") from None
    return x, y


def _render_args(p):
    p.add_argument("--scene", required=True)
    p.add_argument("--mode", default="common", choices=["common", "foveated", "rolling", "joint"])
    p.add_argument("--bound", default=None,
                   choices=["trivial", "quad", "hull", "adaptive", "zenon", "fov-simple",
                            "fov-recursive", "joint"])
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--unfoveate", choices=["mip", "gather"], default=None)
    p.add_argument("--ste", default=None, help="per-primitive STE CSV")
    p.add_argument("--depth", default=None, help="PFM depth dump")
    p.add_argument("--gbuffer", default=None, help="NPZ dump of the G-buffer channels")
    p.add_argument("--guard-px", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=None, help="override foveation strength")
    p.add_argument("--fovea", type=_pair, default=None, help="override fovea X,Y in NDC")
    p.add_argument("--scan", type=_pair, default=None, help="override scan direction DX,DY")
    p.add_argument("--no-rolling-shading", action="store_true")


def build_parser():
    ap = argparse.ArgumentParser(prog="prast", description="Perceptual rasterizer")
    ap.add_argument("--threads", type=int, default=None, help="cap kernel threads")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("render", help="rasterize a scene")
    _render_args(p)
    p.add_argument("--verify", action="store_true", help="also trace and require equality")

    p = sub.add_parser("oracle", help="brute-force ray trace a scene")
    _render_args(p)

    p = sub.add_parser("warp", help="warp a t=0 frame to the rolling display")
    p.add_argument("--scene", required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--mask", default=None)
    p.add_argument("--threshold", type=float, default=3.0)
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--scan", type=_pair, default=None)

    p = sub.add_parser("compare", help="image similarity")
    p.add_argument("--ssim", nargs=2, metavar=("A", "B"), required=True)
    p.add_argument("--mask", default=None)
    p.add_argument("--fovea", type=_pair, default=None, help="pixel X,Y of a 64x64 window")
    p.add_argument("--size", type=int, default=64)

    p = sub.add_parser("reference", help="supersampled reference image")
    p.add_argument("--scene", required=True)
    p.add_argument("--factor", type=int, default=4)
    p.add_argument("--mode", default="common", choices=["common", "rolling"])
    p.add_argument("--width", type=int, default=256)
    p.add_argument("--height", type=int, default=256)
    p.add_argument("--scan", type=_pair, default=None)
    p.add_argument("-o", "--output", required=True)

    p = sub.add_parser("sweep", help="run a parameter sweep manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("-o", "--output", required=True)
    return ap


def _config(args, scene):
    from .foveation import FoveationMap
    from .pipeline import RenderConfig

    fmap = None
    if args.mode in ("foveated", "joint"):
        block = dict(scene.foveation or {"alpha": 2.0})
        if args.alpha is not None:
            block["alpha"] = args.alpha
            block.pop("p_table", None)
        if args.fovea is not None:
            block["fovea"] = list(args.fovea)
        fmap = FoveationMap.from_config(block)
    scan = None
    if args.mode in ("rolling", "joint"):
        scan = args.scan or scene.scan or (1.0, 0.0)
    return RenderConfig(args.mode, args.bound, args.width, args.height, args.guard_px, fmap,
                        scan, args.unfoveate, not args.no_rolling_shading)


def _write_outputs(args, res):
    from .imageio import write_image, write_pfm
    from .metrics import ste_report

    write_image(res.image, args.output)
    if args.depth:
        write_pfm(np.where(np.isfinite(res.gbuffer.depth), res.gbuffer.depth, 0.0), args.depth)
    if args.gbuffer:
        with open(args.gbuffer, "wb") as f:
            np.savez(f, **res.gbuffer.channels())
    if getattr(args, "ste", None):
        ste_report(res.stats, args.ste)


def cmd_render(args):
    from . import oracle
    from .pipeline import render
    from .scene import load_scene

    scene = load_scene(args.scene)
    cfg = _config(args, scene)
    res = render(scene, cfg)
    _write_outputs(args, res)
    print(f"STE {res.stats.aggregate:.4f} ({res.stats.fragments_passed}/{res.stats.fragments_tested})")
    if args.verify:
        ref = oracle.render(scene, cfg)
        same = res.gbuffer.identical(ref.gbuffer) and np.array_equal(res.image, ref.image)
        print("verify: identical to oracle" if same else "verify: MISMATCH against oracle")
        if not same:
            return EXIT_VERIFY
    return EXIT_OK


def cmd_oracle(args):
    from . import oracle
    from .scene import load_scene

    scene = load_scene(args.scene)
    res = oracle.render(scene, _config(args, scene))
    _write_outputs(args, res)
    return EXIT_OK


def cmd_warp(args):
    from .bounds import ScanAxis
    from .imageio import write_image, write_pgm
    from .pipeline import RenderConfig, render
    from .scene import load_scene
    from .warp import warp_rolling

    scene = load_scene(args.scene)
    src = render(scene, RenderConfig("common", None, args.width, args.height))
    scan = ScanAxis(args.scan or scene.scan or (1.0, 0.0))
    img, mask = warp_rolling(src.gbuffer.depth, src.image, scene.camera, scene.view, scan, args.threshold)
    write_image(img, args.output)
    if args.mask:
        write_pgm(mask, args.mask)
    print(f"disoccluded {int(mask.sum())} px")
    return EXIT_OK


def cmd_compare(args):
    from .imageio import read_image, read_mask
    from .metrics import foveal_ssim, masked_ssim

    a, b = (read_image(p) for p in args.ssim)
    mask = read_mask(args.mask) if args.mask else None
    if args.fovea is not None:
        v = foveal_ssim(a, b, args.fovea, args.size, mask)
    else:
        v = masked_ssim(a, b, mask)
    print(f"{v:.6f}")
    return EXIT_OK


def cmd_reference(args):
    from .imageio import write_image
    from .metrics import supersample_reference
    from .pipeline import RenderConfig
    from .scene import load_scene

    scene = load_scene(args.scene)
    scan = (args.scan or scene.scan or (1.0, 0.0)) if args.mode == "rolling" else None
    cfg = RenderConfig(args.mode, None, args.width, args.height, scan=scan)
    if args.factor < 1:
        raise ConfigError("factor must be >= 1")
    write_image(supersample_reference(scene, cfg, args.factor), args.output)
    return EXIT_OK


def cmd_sweep(args):
    from .sweep import run_sweep

    rows = run_sweep(args.manifest, args.output)
    failed = sum(1 for r in rows if r["error"])
    print(f"{len(rows)} runs, {failed} failed")
    return EXIT_OK


COMMANDS = {"render": cmd_render, "oracle": cmd_oracle, "warp": cmd_warp, "compare": cmd_compare,
            "reference": cmd_reference, "sweep": cmd_sweep}


def main(argv=None):
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_CONFIG if e.code else EXIT_OK
    if args.threads:
        _backend.set_threads(args.threads)
    try:
        return COMMANDS[args.cmd](args)
    except (MissingFile, OSError) as e:
        print(f"prast: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ConfigError, DimensionMismatch, EmptyMask) as e:
        print(f"prast: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (PrastError, ValueError) as e:
        print(f"prast: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
