"""Generate the bundled desk scenes under src/prast/data/scenes.

    python3 scripts/make_scenes.py

Scenes:
  bar      translating bar over houses and ground, camera turning (STE ordering)
  houses   static houses, camera turning and sliding (warping baseline)
  fence    thin pickets and rails, camera sliding (curved edges in joint mode)
  checker  48 x 48 checkerboard plane, static (foveal quality)
  glossy   shiny wall, three lights, eye rising (rolling specular)
"""
import json
import math
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parent.parent / "src" / "prast" / "data" / "scenes"


class MeshBuilder:
    def __init__(self):
        self.v = []
        self.f = []

    def quad(self, a, b, c, d, material, n=1):
        """Planar quad a-b-c-d (CCW seen from the front), split n x n."""
        a, b, c, d = (np.asarray(p, dtype=float) for p in (a, b, c, d))
        for i in range(n):
            for j in range(n):
                def at(u, v):
                    return (1 - u) * (1 - v) * a + u * (1 - v) * b + u * v * c + (1 - u) * v * d
                u0, u1, v0, v1 = i / n, (i + 1) / n, j / n, (j + 1) / n
                k = len(self.v)
                self.v += [at(u0, v0), at(u1, v0), at(u1, v1), at(u0, v1)]
                m = material(i, j) if callable(material) else material
                self.f += [(k, k + 1, k + 2, m), (k, k + 2, k + 3, m)]

    def box(self, center, size, material, n=1):
        cx, cy, cz = center
        hx, hy, hz = (s / 2 for s in size)
        p = lambda sx, sy, sz: (cx + sx * hx, cy + sy * hy, cz + sz * hz)
        self.quad(p(-1, -1, 1), p(1, -1, 1), p(1, 1, 1), p(-1, 1, 1), material, n)
        self.quad(p(1, -1, -1), p(-1, -1, -1), p(-1, 1, -1), p(1, 1, -1), material, n)
        self.quad(p(-1, -1, -1), p(-1, -1, 1), p(-1, 1, 1), p(-1, 1, -1), material, n)
        self.quad(p(1, -1, 1), p(1, -1, -1), p(1, 1, -1), p(1, 1, 1), material, n)
        self.quad(p(-1, 1, 1), p(1, 1, 1), p(1, 1, -1), p(-1, 1, -1), material, n)
        self.quad(p(-1, -1, -1), p(1, -1, -1), p(1, -1, 1), p(-1, -1, 1), material, n)

    def write(self, path):
        lines = [f"# {len(self.f)} triangles"]
        lines += ["v %.6f %.6f %.6f" % tuple(v) for v in self.v]
        cur = None
        for a, b, c, m in self.f:
            if m != cur:
                lines.append(f"usemtl {m}")
                cur = m
            lines.append(f"f {a + 1} {b + 1} {c + 1}")
        path.write_text("\n".join(lines) + "\n")
        return len(self.f)


def quat_y(deg):
    h = math.radians(deg) / 2
    return [math.cos(h), 0.0, math.sin(h), 0.0]


def quat_x(deg):
    h = math.radians(deg) / 2
    return [math.cos(h), math.sin(h), 0.0, 0.0]


def houses(mb, rng):
    for k in range(7):
        x = -3.0 + k * 1.0 + rng.uniform(-0.2, 0.2)
        z = -4.0 - rng.uniform(0.0, 3.0)
        h = rng.uniform(0.6, 1.6)
        mb.box((x, -1.0 + h / 2, z), (0.6, h, 0.6), f"house{k % 3}", n=2)


def ground(mb, size=10.0, n=16, y=-1.0):
    s = size / 2
    mb.quad((-s, y, s - 6), (s, y, s - 6), (s, y, -s - 6), (-s, y, -s - 6),
            lambda i, j: "groundA" if (i + j) % 2 else "groundB", n)


COMMON_MATERIALS = {
    "groundA": {"albedo": [0.55, 0.5, 0.4]},
    "groundB": {"albedo": [0.35, 0.32, 0.25]},
    "house0": {"albedo": [0.8, 0.3, 0.25], "specular": 0.2, "shininess": 16},
    "house1": {"albedo": [0.3, 0.5, 0.8], "specular": 0.2, "shininess": 16},
    "house2": {"albedo": [0.85, 0.8, 0.5], "specular": 0.2, "shininess": 16},
    "bar": {"albedo": [0.9, 0.9, 0.95], "specular": 0.6, "shininess": 64},
}


def write_scene(name, data, meshes, shared=0):
    counts = {}
    for fname, mb in meshes.items():
        counts[fname] = mb.write(OUT / fname)
    data["triangles"] = sum(counts.values()) + shared
    (OUT / f"{name}.json").write_text(json.dumps(data, indent=2) + "\n")
    return data["triangles"]


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(7)
    light = [{"start": [2.0, 4.0, 3.0], "intensity": 0.9}]

    world = MeshBuilder()
    ground(world)
    houses(world, rng)
    bar = MeshBuilder()
    bar.box((0.0, 0.0, 0.0), (1.6, 0.12, 0.12), "bar", n=2)
    cam = {"fov_y": 60.0, "aspect": 1.0, "near": 0.05,
           "start": {"position": [0.0, 0.2, 0.0], "rotation": [1, 0, 0, 0]},
           "end": {"position": [0.05, 0.2, 0.0], "rotation": quat_y(-14.0)}}
    n = write_scene("bar", {
        "camera": cam,
        "objects": [
            {"mesh": "bar_world.obj"},
            {"mesh": "bar_bar.obj",
             "start": {"translation": [-0.9, 0.1, -2.2], "rotation": quat_y(10.0)},
             "end": {"translation": [0.9, 0.1, -2.2], "rotation": quat_y(-10.0)}},
        ],
        "materials": COMMON_MATERIALS, "lights": light, "ambient": 0.15,
        "clear_color": [0.55, 0.7, 0.9], "scan": [1.0, 0.0],
        "foveation": {"fovea": [0.0, 0.0], "alpha": 2.0},
    }, {"bar_world.obj": world, "bar_bar.obj": bar})
    print("bar", n)

    n = write_scene("houses", {
        "camera": {"fov_y": 60.0, "aspect": 1.0, "near": 0.05,
                   "start": {"position": [0.0, 0.2, 0.0], "rotation": [1, 0, 0, 0]},
                   "end": {"position": [0.35, 0.2, 0.0], "rotation": quat_y(-8.0)}},
        "objects": [{"mesh": "bar_world.obj"},
                    {"mesh": "bar_bar.obj", "start": {"translation": [0.0, 0.1, -2.2]}}],
        "materials": COMMON_MATERIALS, "lights": light, "ambient": 0.15,
        "clear_color": [0.55, 0.7, 0.9], "scan": [1.0, 0.0],
    }, {}, shared=len(world.f) + len(bar.f))
    print("houses", n)

    fence = MeshBuilder()
    for k in range(13):
        fence.box((-1.8 + 0.3 * k, -0.1, -2.5), (0.08, 1.8, 0.05), "picket", n=1)
    for y in (-0.6, 0.4):
        fence.box((0.0, y, -2.45), (3.9, 0.07, 0.04), "rail", n=1)
    fence_ground = MeshBuilder()
    ground(fence_ground, n=12)
    n = write_scene("fence", {
        "camera": {"fov_y": 60.0, "aspect": 1.0, "near": 0.05,
                   "start": {"position": [-0.3, 0.0, 0.0], "rotation": [1, 0, 0, 0]},
                   "end": {"position": [0.3, 0.0, 0.0], "rotation": quat_y(4.0)}},
        "objects": [{"mesh": "fence.obj",
                     "start": {"translation": [-0.2, 0.0, 0.0]},
                     "end": {"translation": [0.2, 0.0, 0.0]}},
                    {"mesh": "fence_ground.obj"}],
        "materials": {"picket": {"albedo": [0.9, 0.88, 0.8]}, "rail": {"albedo": [0.5, 0.35, 0.2]},
                      **COMMON_MATERIALS},
        "lights": light, "ambient": 0.2, "clear_color": [0.55, 0.7, 0.9], "scan": [1.0, 0.0],
        "foveation": {"fovea": [0.2, 0.1], "alpha": 2.0},
    }, {"fence.obj": fence, "fence_ground.obj": fence_ground})
    print("fence", n)

    checker = MeshBuilder()
    s = 2.0
    checker.quad((-s, -s, 0), (s, -s, 0), (s, s, 0), (-s, s, 0),
                 lambda i, j: "white" if (i + j) % 2 else "black", 48)
    n = write_scene("checker", {
        "camera": {"fov_y": 60.0, "aspect": 1.0, "near": 0.05,
                   "start": {"position": [0.0, 0.0, 0.0], "rotation": [1, 0, 0, 0]}},
        "objects": [{"mesh": "checker.obj",
                     "start": {"translation": [0.0, -0.2, -2.6], "rotation": quat_x(-55.0)}}],
        "materials": {"white": {"albedo": [0.95, 0.95, 0.95]}, "black": {"albedo": [0.05, 0.05, 0.05]}},
        "lights": [], "ambient": 1.0, "clear_color": [0.5, 0.5, 0.5], "scan": [1.0, 0.0],
        "foveation": {"fovea": [0.0, 0.0], "alpha": 2.0},
    }, {"checker.obj": checker})
    print("checker", n)

    wall = MeshBuilder()
    wall.quad((-3, -3, 0), (3, -3, 0), (3, 3, 0), (-3, 3, 0), "gloss", 4)
    n = write_scene("glossy", {
        "camera": {"fov_y": 60.0, "aspect": 1.0, "near": 0.05,
                   "start": {"position": [0.0, -0.6, 2.0], "rotation": [1, 0, 0, 0]},
                   "end": {"position": [0.0, 0.6, 2.0], "rotation": [1, 0, 0, 0]}},
        "objects": [{"mesh": "glossy.obj"}],
        "materials": {"gloss": {"albedo": [0.15, 0.15, 0.2], "specular": 1.0, "shininess": 300}},
        "lights": [{"start": [x, 0.0, 1.0], "intensity": 0.8} for x in (-0.8, 0.0, 0.8)],
        "ambient": 0.1, "clear_color": [0.0, 0.0, 0.0], "scan": [1.0, 0.0],
    }, {"glossy.obj": wall})
    print("glossy", n)


if __name__ == "__main__":
    main()
