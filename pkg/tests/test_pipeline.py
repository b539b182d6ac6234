import numpy as np
import pytest

from conftest import random_space_time_triangles
from prast import oracle
from prast.bounds import ScanAxis
from prast.errors import ConfigError, ConfigMismatch
from prast.foveation import FoveationMap
from prast.geometry import Camera
from prast.pipeline import RenderConfig, pixel_time, rasterize, render, shade
from prast.scene import Light, Material, scene_from_triangles

CAM = Camera(60.0, 1.0, 0.05)
ROLL = ScanAxis((1.0, 0.0))
FOV = FoveationMap.power(2.0, (0.1, -0.1))


def test_pixel_time_examples():
    cfg = RenderConfig("rolling", width=8, height=8, scan=(1.0, 0.0))
    assert pixel_time([0.0, 0.3], cfg) == pytest.approx(0.5)
    cfg = RenderConfig("rolling", width=8, height=8, scan=(0.0, 0.9))
    assert pixel_time([0.7, 0.0], cfg) == pytest.approx(0.45)
    cfg = RenderConfig("common", width=8, height=8)
    assert pixel_time([0.7, 0.2], cfg) == 0.0


def test_pixel_time_clamped_and_joint():
    cfg = RenderConfig("rolling", width=8, height=8, scan=(2.0, 0.0))
    assert pixel_time([0.9, 0.0], cfg) == 1.0
    cfg = RenderConfig("joint", width=8, height=8, scan=(1.0, 0.0), fmap=FoveationMap.power(2.0))
    # joint time uses the display position: buffer x = 0.5 shows display x = 0.25 / sqrt 2
    assert pixel_time([0.5, 0.0], cfg) == pytest.approx(0.5 + 0.125 / np.sqrt(2))


def test_config_validation():
    with pytest.raises(ConfigMismatch):
        RenderConfig("rolling")
    with pytest.raises(ConfigMismatch):
        RenderConfig("foveated")
    with pytest.raises(ConfigError):
        RenderConfig("common", bound="nope")
    with pytest.raises(ConfigError):
        RenderConfig("common", width=0)


def test_empty_scene():
    sc = scene_from_triangles(np.zeros((0, 3, 3)))
    g, stats = rasterize(sc, RenderConfig("rolling", width=16, height=16, scan=(1.0, 0.0)))
    assert np.all(g.prim_id == -1)
    assert not np.any(np.isfinite(g.depth))
    assert stats.fragments_tested == 0


# --- independent static rasterizer ------------------------------------------

def scanline_reference(tris, width, height, camera):
    """Z-buffer raster of camera-space triangles by 2D edge functions.

    Projects vertices, tests pixel centres against inclusive edge functions
    and takes perspective-correct depth.  Also returns a mask of pixels whose
    centre lies within rounding of some edge, where the float test can go
    either way.
    """
    tx, ty = camera.tan_half
    xs = (np.arange(width) + 0.5) / width * 2 - 1
    ys = 1 - (np.arange(height) + 0.5) / height * 2
    X, Y = np.meshgrid(xs, ys)
    depth = np.full((height, width), np.inf)
    prim = np.full((height, width), -1)
    fuzzy = np.zeros((height, width), dtype=bool)
    for k, v in enumerate(tris):
        z = -v[:, 2]
        px = v[:, 0] / (z * tx)
        py = v[:, 1] / (z * ty)
        area = (px[1] - px[0]) * (py[2] - py[0]) - (py[1] - py[0]) * (px[2] - px[0])
        if abs(area) < 1e-12:
            continue
        e = []
        for i in range(3):
            a, b = (i + 1) % 3, (i + 2) % 3
            e.append(((px[b] - px[a]) * (Y - py[a]) - (py[b] - py[a]) * (X - px[a])) / area)
        e = np.array(e)
        inside = np.all(e >= 0, axis=0)
        fuzzy |= np.any(np.abs(e) < 1e-9, axis=0) & np.all(e >= -1e-9, axis=0)
        # perspective-correct depth: 1/z is affine in screen space
        zi = 1.0 / (e[0] / z[0] + e[1] / z[1] + e[2] / z[2])
        closer = inside & ((zi < depth) | ((zi == depth) & (prim > k)))
        depth = np.where(closer, zi, depth)
        prim = np.where(closer, k, prim)
    return depth, prim, fuzzy


def desk_scene(rng, n):
    c = rng.uniform(-1.2, 1.2, (n, 3, 3))
    c[..., 2] = -rng.uniform(1.0, 4.0, (n, 1)) + rng.uniform(-0.3, 0.3, (n, 3))
    centre = c[:, :1]
    return centre + (c - centre) * rng.uniform(0.1, 0.8, (n, 1, 1))


def test_static_matches_scanline_reference(rng):
    for _ in range(10):
        tris = desk_scene(rng, 40)
        sc = scene_from_triangles(tris, camera=CAM)
        g, _ = rasterize(sc, RenderConfig("common", width=64, height=64))
        depth, prim, fuzzy = scanline_reference(tris, 64, 64, CAM)
        ok = ~fuzzy
        assert fuzzy.mean() < 0.01
        assert np.array_equal(g.prim_id[ok], prim[ok])
        hit = ok & (prim >= 0)
        assert np.allclose(g.depth[hit], depth[hit], rtol=1e-9)


# --- oracle equality on random moving scenes ----------------------------------

def configs(size=48):
    return [
        RenderConfig("common", width=size, height=size),
        RenderConfig("rolling", width=size, height=size, scan=ROLL),
        RenderConfig("rolling", width=size, height=size, scan=(0.3, 0.8)),
        RenderConfig("foveated", width=size, height=size, fmap=FOV),
        RenderConfig("joint", width=size, height=size, fmap=FOV, scan=ROLL),
    ]


@pytest.fixture(scope="module")
def moving_scene():
    rng = np.random.default_rng(99)
    s, e = random_space_time_triangles(rng, 120)
    return scene_from_triangles(s, e, camera=CAM)


def test_rasterize_equals_oracle(moving_scene):
    for cfg in configs():
        g, _ = rasterize(moving_scene, cfg)
        ref = oracle.trace(moving_scene, cfg)
        assert g.identical(ref), cfg.mode


def test_bound_independence(moving_scene):
    methods = {"rolling": ["trivial", "quad", "hull", "adaptive", "zenon"],
               "joint": ["trivial", "fov-simple", "fov-recursive", "joint"]}
    for cfg in configs(40)[1:]:
        if cfg.mode not in methods:
            continue
        images = []
        for m in methods[cfg.mode]:
            c = RenderConfig(cfg.mode, m, cfg.width, cfg.height, fmap=cfg.fmap, scan=cfg.scan)
            images.append(render(moving_scene, c).image)
        assert all(np.array_equal(images[0], im) for im in images[1:])


def test_ste_accounting(moving_scene):
    cfg = RenderConfig("rolling", "hull", 48, 48, scan=ROLL)
    _, s = rasterize(moving_scene, cfg)
    assert np.all(s.passed <= s.tested)
    assert 0 < s.aggregate <= 1
    assert s.fragments_passed == int(s.passed.sum())


def test_ste_full_and_half():
    big = np.array([[[-50, -50, -1], [50, -50, -1], [0, 50, -1]]], dtype=float)
    _, s = rasterize(scene_from_triangles(big, camera=CAM), RenderConfig("common", "trivial", 32, 32))
    assert s.aggregate == 1.0
    tx, ty = CAM.tan_half
    right = np.array([[[-0.8 * tx, -0.8 * ty, -1], [0.8 * tx, -0.8 * ty, -1], [-0.8 * tx, 0.8 * ty, -1]]])
    cfg = RenderConfig("common", "quad", 200, 200, guard_px=0.0)
    _, s = rasterize(scene_from_triangles(right, camera=CAM), cfg)
    assert s.aggregate == pytest.approx(0.5, abs=0.01)


def test_tie_break_lower_id_wins():
    t = np.array([[-1, -1, -2], [1, -1, -2], [0, 1, -2]], dtype=float)
    sc = scene_from_triangles(np.stack([t, t]), camera=CAM)
    g, _ = rasterize(sc, RenderConfig("common", width=16, height=16))
    assert set(np.unique(g.prim_id)) <= {-1, 0}


def test_deterministic(moving_scene):
    cfg = RenderConfig("joint", width=40, height=40, fmap=FOV, scan=ROLL)
    a = render(moving_scene, cfg)
    b = render(moving_scene, cfg)
    assert np.array_equal(a.image, b.image) and a.gbuffer.identical(b.gbuffer)


# --- shading ------------------------------------------------------------------

def lit_scene(**kw):
    t = np.array([[-2, -2, -3], [2, -2, -3], [0, 2, -3]], dtype=float)
    mats = [Material(), Material("shiny", (0.5, 0.4, 0.3), 0.8, 40)]
    return scene_from_triangles(t, camera=CAM, material_ids=[1], materials=mats, **kw)


def test_static_scene_rolling_shading_is_noop():
    sc = lit_scene(lights=[Light(np.array([1.0, 1.0, 0.0]), np.array([1.0, 1.0, 0.0]))])
    on = render(sc, RenderConfig("rolling", width=32, height=32, scan=ROLL)).image
    off = render(sc, RenderConfig("rolling", width=32, height=32, scan=ROLL, rolling_shading=False)).image
    assert np.array_equal(on, off)


def test_no_lights_is_ambient():
    sc = lit_scene(ambient=0.25, lights=[])
    img = render(sc, RenderConfig("common", width=16, height=16)).image
    hit = img[8, 8]
    assert np.allclose(hit, 0.25 * np.array([0.5, 0.4, 0.3]))


def test_clear_colour_on_empty_pixels():
    sc = lit_scene(clear_color=(0.1, 0.2, 0.3))
    g, _ = rasterize(sc, RenderConfig("common", width=16, height=16))
    img = shade(g, sc)
    assert np.allclose(img[0, 0], [0.1, 0.2, 0.3])


def test_moving_light_changes_rolling_shading():
    sc = lit_scene(lights=[Light(np.array([-3.0, 0.0, -1.0]), np.array([3.0, 0.0, -1.0]))])
    on = render(sc, RenderConfig("rolling", width=32, height=32, scan=ROLL)).image
    off = render(sc, RenderConfig("rolling", width=32, height=32, scan=ROLL, rolling_shading=False)).image
    assert not np.array_equal(on, off)


# --- joint mode bends straight edges --------------------------------------------

def _edge_track(mask, rows, lo, hi):
    xs = []
    for r in rows:
        row = mask[r]
        e = np.nonzero(row[1:] & ~row[:-1])[0] + 1
        e = e[(e >= lo) & (e < hi)]
        if len(e):
            xs.append(int(e[0]))
    return np.array(xs)


def test_joint_fence_edges_curve(scenes):
    sc = scenes("fence")
    picket = [m.name for m in sc.materials].index("picket")
    joint = render(sc, RenderConfig.for_scene(sc, "joint", width=128, height=128)).gbuffer
    common = render(sc, RenderConfig.for_scene(sc, "common", width=128, height=128)).gbuffer
    dj = np.diff(_edge_track(joint.material == picket, range(30, 100), 78, 100))
    dc = np.diff(_edge_track(common.material == picket, range(30, 100), 60, 75))
    assert (dj > 0).any() and (dj < 0).any()
    assert not ((dc > 0).any() and (dc < 0).any())
