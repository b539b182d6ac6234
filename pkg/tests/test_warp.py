import numpy as np

from prast.bounds import ScanAxis
from prast.geometry import Camera, TimeVaryingTransform, axis_angle_quat, trs_matrix
from prast.metrics import masked_ssim
from prast.pipeline import RenderConfig, render
from prast.warp import grid_targets, warp_rolling

CAM = Camera(60.0, 1.0, 0.05)


def test_identity_motion_is_exact(scenes):
    sc = scenes("houses")
    src = render(sc, RenderConfig("common", width=64, height=64))
    still = TimeVaryingTransform.static(sc.view.start)
    img, mask = warp_rolling(src.gbuffer.depth, src.image, CAM, still, ScanAxis((1.0, 0.0)))
    assert not mask.any()
    assert np.array_equal(img, src.image)


def test_rotating_camera_disoccludes(scenes):
    sc = scenes("houses")
    src = render(sc, RenderConfig("common", width=96, height=96))
    img, mask = warp_rolling(src.gbuffer.depth, src.image, sc.camera, sc.view, ScanAxis((1.0, 0.0)))
    assert mask.any()
    assert not mask.all()


def test_warp_beats_no_rolling(scenes):
    from prast import oracle

    sc = scenes("houses")
    cfg = RenderConfig.for_scene(sc, "rolling", width=96, height=96)
    ref = oracle.render(sc, cfg).image
    src = render(sc, RenderConfig("common", width=96, height=96))
    img, mask = warp_rolling(src.gbuffer.depth, src.image, sc.camera, sc.view, cfg.scan)
    assert masked_ssim(img, ref, mask) >= masked_ssim(src.image, ref, mask)


def test_mask_only_where_unreached(scenes):
    """No pixel is marked when a kept grid triangle covers it."""
    sc = scenes("houses")
    src = render(sc, RenderConfig("common", width=64, height=64))
    scan = ScanAxis((1.0, 0.0))
    img, mask = warp_rolling(src.gbuffer.depth, src.image, sc.camera, sc.view, scan)
    px, py, _, valid = grid_targets(src.gbuffer.depth, sc.camera, sc.view, scan)
    # a source pixel that lands exactly on a destination centre, with all of
    # its neighbours moving the same way, always fills that centre
    w = 64
    disp = np.stack([px - (np.arange(w * w) % w + 0.5), py - (np.arange(w * w) // w + 0.5)], 1)
    d = disp.reshape(w, w, 2)
    same = np.all(np.abs(d[1:-1, 1:-1] - d[:-2, 1:-1]) < 1e-9, axis=-1) & \
        np.all(np.abs(d[1:-1, 1:-1] - d[1:-1, :-2]) < 1e-9, axis=-1) & \
        np.all(np.abs(d[1:-1, 1:-1]) < 1e-9, axis=-1)
    assert not mask[1:-1, 1:-1][same].any()


def test_backends_agree(scenes):
    sc = scenes("bar")
    src = render(sc, RenderConfig("common", width=64, height=64))
    args = (src.gbuffer.depth, src.image, sc.camera, sc.view, ScanAxis((1.0, 0.0)))
    a, ma = warp_rolling(*args, backend="numba")
    b, mb = warp_rolling(*args, backend="numpy")
    assert np.array_equal(ma, mb)
    assert np.allclose(a, b, atol=1e-12)


def test_threshold_controls_culling(scenes):
    sc = scenes("houses")
    src = render(sc, RenderConfig("common", width=64, height=64))
    scan = ScanAxis((1.0, 0.0))
    _, loose = warp_rolling(src.gbuffer.depth, src.image, sc.camera, sc.view, scan, threshold=50.0)
    _, tight = warp_rolling(src.gbuffer.depth, src.image, sc.camera, sc.view, scan, threshold=1.5)
    assert loose.sum() <= tight.sum()


def test_translation_shifts_pixels():
    """Pure sideways camera motion against a far plane moves pixels uniformly."""
    depth = np.full((32, 32), 1e6)
    img = np.random.default_rng(0).uniform(0, 1, (32, 32, 3))
    view = TimeVaryingTransform(np.eye(4), trs_matrix((0, 0, 0), axis_angle_quat((0, 1, 0), 0.0)))
    out, mask = warp_rolling(depth, img, CAM, view, ScanAxis((1.0, 0.0)))
    assert not mask.any()
    assert masked_ssim(out, img) == 1.0
