"""Scene loading: a JSON manifest referencing Wavefront OBJ meshes.

Schema (all transforms are translation + (w, x, y, z) quaternion + scale)::

    {
      "camera": {"fov_y": 60, "aspect": 1, "near": 0.05,
                 "start": {"position": [0, 0, 3], "rotation": [1, 0, 0, 0]},
                 "end":   {...}},
      "objects": [{"mesh": "bar.obj",
                   "start": {"translation": [..], "rotation": [..], "scale": [..]},
                   "end": {...}}],
      "materials": {"name": {"albedo": [r, g, b], "specular": 0.5, "shininess": 64}},
      "lights": [{"start": [x, y, z], "end": [x, y, z], "intensity": 1.0}],
      "ambient": 0.1,
      "clear_color": [r, g, b],
      "foveation": {"fovea": [x, y], "alpha": 2},
      "scan": [1, 0]
    }

A missing ``end`` repeats ``start``.  Camera poses are camera-to-world; the
view matrix is their inverse.
"""
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import MissingFile, NonFiniteVertex, ParseError, SceneError
from .geometry import (Camera, SpaceTimeTriangle, TimeVaryingTransform, normal_matrix,
                       trs_matrix)


@dataclass
class Material:
    name: str = "default"
    albedo: tuple = (0.8, 0.8, 0.8)
    specular: float = 0.0
    shininess: float = 32.0


@dataclass
class Mesh:
    positions: np.ndarray
    faces: np.ndarray  # (F, 3) position indices
    normals: np.ndarray = None  # (N, 3)
    face_normals: np.ndarray = None  # (F, 3) normal indices, -1 for flat
    face_materials: list = field(default_factory=list)  # material name per face

    @property
    def n_triangles(self):
        return len(self.faces)


@dataclass
class SceneObject:
    mesh: Mesh
    transform: TimeVaryingTransform
    name: str = ""


@dataclass
class Light:
    start: np.ndarray
    end: np.ndarray
    intensity: float = 1.0


@dataclass
class Primitives:
    """Flat per-triangle arrays in stream order."""

    cam: np.ndarray  # (N, 2, 3, 3) camera-space vertices at start/end
    world: np.ndarray  # (N, 2, 3, 3)
    normals: np.ndarray  # (N, 2, 3, 3) world-space
    material: np.ndarray  # (N,)

    def __len__(self):
        return len(self.material)

    def triangle(self, i):
        return SpaceTimeTriangle(self.cam[i], self.world[i], self.normals[i],
                                 int(self.material[i]), i)


@dataclass
class Scene:
    objects: list = field(default_factory=list)
    camera: Camera = field(default_factory=Camera)
    view: TimeVaryingTransform = field(default_factory=lambda: TimeVaryingTransform.static(np.eye(4)))
    materials: list = field(default_factory=lambda: [Material()])
    lights: list = field(default_factory=list)
    ambient: float = 0.1
    clear_color: tuple = (0.0, 0.0, 0.0)
    foveation: dict = None
    scan: tuple = None
    path: Path = None

    @property
    def n_triangles(self):
        return sum(o.mesh.n_triangles for o in self.objects)

    def eye(self, t):
        """World-space camera centre at time t (endpoint centres blended)."""
        e0 = np.linalg.inv(self.view.start)[:3, 3]
        e1 = np.linalg.inv(self.view.end)[:3, 3]
        return (1.0 - t) * e0 + t * e1

    def primitives(self):
        cams, worlds, norms, mats = [], [], [], []
        mat_ids = {m.name: i for i, m in enumerate(self.materials)}
        for obj in self.objects:
            m = obj.mesh
            if len(m.faces) == 0:
                continue
            tri = m.positions[m.faces]  # (F, 3, 3)
            h = np.concatenate([tri, np.ones(tri.shape[:2] + (1,))], axis=-1)
            w_pair, c_pair, n_pair = [], [], []
            flat = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
            for M, V in ((obj.transform.start, self.view.start), (obj.transform.end, self.view.end)):
                w = h @ M.T
                c = w @ V.T
                w_pair.append(w[..., :3])
                c_pair.append(c[..., :3])
                N = normal_matrix(M)
                if m.normals is not None and m.face_normals is not None:
                    idx = m.face_normals
                    vn = m.normals[np.maximum(idx, 0)]
                    vn = np.where((idx >= 0)[..., None], vn, flat[:, None, :])
                else:
                    vn = np.repeat(flat[:, None, :], 3, axis=1)
                n = vn @ N.T
                ln = np.linalg.norm(n, axis=-1, keepdims=True)
                n_pair.append(np.where(ln > 0, n / np.where(ln > 0, ln, 1.0), 0.0))
            cams.append(np.stack(c_pair, axis=1))
            worlds.append(np.stack(w_pair, axis=1))
            norms.append(np.stack(n_pair, axis=1))
            names = m.face_materials or ["default"] * len(m.faces)
            mats.append(np.array([mat_ids.get(nm, 0) for nm in names], dtype=np.int64))
        if not cams:
            z = np.zeros((0, 2, 3, 3))
            return Primitives(z, z.copy(), z.copy(), np.zeros(0, dtype=np.int64))
        cam = np.concatenate(cams)
        if not np.all(np.isfinite(cam)):
            raise NonFiniteVertex("scene produces non-finite camera-space vertices")
        return Primitives(cam, np.concatenate(worlds), np.concatenate(norms), np.concatenate(mats))


# --- OBJ --------------------------------------------------------------------

def _obj_index(tok, n, path, lineno):
    try:
        i = int(tok)
    except ValueError:
        raise ParseError(f"bad index {tok!r}", path, lineno) from None
    if i == 0:
        raise ParseError("OBJ indices are 1-based", path, lineno)
    j = i - 1 if i > 0 else n + i
    if not 0 <= j < n:
        raise ParseError(f"index {i} out of range (have {n})", path, lineno)
    return j


def parse_obj(text, path=None):
    """Triangulated mesh from OBJ text (v, vn, f, usemtl; others ignored)."""
    pos, nrm, faces, fnorm, fmat = [], [], [], [], []
    material = "default"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        tag = parts[0]
        if tag in ("v", "vn"):
            if len(parts) < 4:
                raise ParseError(f"'{tag}' needs 3 coordinates", path, lineno)
            try:
                xyz = [float(x) for x in parts[1:4]]
            except ValueError:
                raise ParseError(f"bad number in {line!r}", path, lineno) from None
            if not all(math.isfinite(x) for x in xyz):
                raise NonFiniteVertex(f"{path}: line {lineno}: non-finite coordinate")
            (pos if tag == "v" else nrm).append(xyz)
        elif tag == "f":
            if len(parts) < 4:
                raise ParseError("face needs at least 3 vertices", path, lineno)
            vi, ni = [], []
            for tok in parts[1:]:
                fields = tok.split("/")
                vi.append(_obj_index(fields[0], len(pos), path, lineno))
                if len(fields) >= 3 and fields[2]:
                    ni.append(_obj_index(fields[2], len(nrm), path, lineno))
                else:
                    ni.append(-1)
            for k in range(1, len(vi) - 1):
                faces.append([vi[0], vi[k], vi[k + 1]])
                fnorm.append([ni[0], ni[k], ni[k + 1]])
                fmat.append(material)
        elif tag == "usemtl":
            material = parts[1] if len(parts) > 1 else "default"
    return Mesh(
        np.array(pos, dtype=np.float64).reshape(-1, 3),
        np.array(faces, dtype=np.int64).reshape(-1, 3),
        np.array(nrm, dtype=np.float64).reshape(-1, 3) if nrm else None,
        np.array(fnorm, dtype=np.int64).reshape(-1, 3) if nrm else None,
        fmat,
    )


def load_obj(path):
    path = Path(path)
    if not path.is_file():
        raise MissingFile(path)
    return parse_obj(path.read_text(), path)


def write_obj(mesh, path):
    lines = []
    for v in mesh.positions:
        lines.append("v %.9g %.9g %.9g" % tuple(v))
    current = None
    for f, m in zip(mesh.faces, mesh.face_materials or ["default"] * len(mesh.faces)):
        if m != current:
            lines.append(f"usemtl {m}")
            current = m
        lines.append("f %d %d %d" % tuple(f + 1))
    Path(path).write_text("\n".join(lines) + "\n")


# --- JSON manifest -----------------------------------------------------------

def _vec(block, key, n, default, path, ctx):
    v = block.get(key, default)
    try:
        arr = np.asarray(v, dtype=np.float64).reshape(-1)
    except (TypeError, ValueError):
        raise ParseError(f"expected {n} numbers", path, field=f"{ctx}.{key}") from None
    if arr.shape != (n,):
        raise ParseError(f"expected {n} numbers, got {len(arr)}", path, field=f"{ctx}.{key}")
    if not np.all(np.isfinite(arr)):
        raise ParseError("non-finite value", path, field=f"{ctx}.{key}")
    return arr


def _pose(block, path, ctx, position_key="translation"):
    if not isinstance(block, dict):
        raise ParseError("expected an object", path, field=ctx)
    t = _vec(block, position_key, 3, (0, 0, 0), path, ctx)
    q = _vec(block, "rotation", 4, (1, 0, 0, 0), path, ctx)
    if np.linalg.norm(q) == 0:
        raise ParseError("zero quaternion", path, field=f"{ctx}.rotation")
    s = block.get("scale", 1.0)
    s = _vec({"scale": [s] * 3 if np.isscalar(s) else s}, "scale", 3, None, path, ctx)
    if np.any(s == 0):
        raise ParseError("zero scale", path, field=f"{ctx}.scale")
    return trs_matrix(t, q, s)


def _endpoints(block, path, ctx, position_key="translation"):
    start = _pose(block.get("start", {}), path, f"{ctx}.start", position_key)
    end = _pose(block["end"], path, f"{ctx}.end", position_key) if "end" in block else start.copy()
    return TimeVaryingTransform(start, end)


def scene_from_dict(data, base=None, path=None):
    """Build a :class:`Scene` from a parsed manifest; OBJ paths resolve against ``base``."""
    if not isinstance(data, dict):
        raise ParseError("top level must be an object", path)
    base = Path(base) if base is not None else Path(".")
    cam_block = data.get("camera", {})
    if not isinstance(cam_block, dict):
        raise ParseError("expected an object", path, field="camera")
    try:
        camera = Camera(float(cam_block.get("fov_y", 60.0)), float(cam_block.get("aspect", 1.0)),
                        float(cam_block.get("near", 0.05)))
    except (TypeError, ValueError):
        raise ParseError("bad camera intrinsics", path, field="camera") from None
    if not (0.0 < camera.fov_y < 180.0 and camera.aspect > 0 and camera.near > 0):
        raise ParseError("camera intrinsics out of range", path, field="camera")
    poses = _endpoints(cam_block, path, "camera", "position")
    view = TimeVaryingTransform(np.linalg.inv(poses.start), np.linalg.inv(poses.end))

    materials = [Material()]
    mblock = data.get("materials", {})
    if not isinstance(mblock, dict):
        raise ParseError("expected an object", path, field="materials")
    for name, mb in mblock.items():
        if not isinstance(mb, dict):
            raise ParseError("expected an object", path, field=f"materials.{name}")
        try:
            mat = Material(name, tuple(_vec(mb, "albedo", 3, (0.8, 0.8, 0.8), path, f"materials.{name}")),
                           float(mb.get("specular", 0.0)), float(mb.get("shininess", 32.0)))
        except (TypeError, ValueError):
            raise ParseError("bad material", path, field=f"materials.{name}") from None
        if name == "default":
            materials[0] = mat
        else:
            materials.append(mat)

    objects = []
    oblock = data.get("objects", [])
    if not isinstance(oblock, list):
        raise ParseError("expected a list", path, field="objects")
    for i, ob in enumerate(oblock):
        if not isinstance(ob, dict) or "mesh" not in ob:
            raise ParseError("object needs a 'mesh'", path, field=f"objects[{i}]")
        mesh = load_obj(base / ob["mesh"])
        objects.append(SceneObject(mesh, _endpoints(ob, path, f"objects[{i}]"), ob.get("name", "")))

    lights = []
    for i, lb in enumerate(data.get("lights", [])):
        if not isinstance(lb, dict):
            raise ParseError("expected an object", path, field=f"lights[{i}]")
        s = _vec(lb, "start", 3, (0, 0, 0), path, f"lights[{i}]")
        e = _vec(lb, "end", 3, s, path, f"lights[{i}]")
        lights.append(Light(s, e, float(lb.get("intensity", 1.0))))

    scan = data.get("scan")
    if scan is not None:
        scan = tuple(_vec(data, "scan", 2, None, path, "scene"))
    fov = data.get("foveation")
    if fov is not None and not isinstance(fov, dict):
        raise ParseError("expected an object", path, field="foveation")
    try:
        ambient = float(data.get("ambient", 0.1))
    except (TypeError, ValueError):
        raise ParseError("expected a number", path, field="ambient") from None
    return Scene(objects, camera, view, materials, lights, ambient,
                 tuple(_vec(data, "clear_color", 3, (0, 0, 0), path, "scene")), fov, scan, path)


SCENE_DIR = Path(__file__).resolve().parent / "data" / "scenes"
BUNDLED = ("bar", "houses", "fence", "checker", "glossy")


def bundled_scene(name):
    """Path of a bundled scene manifest by short name."""
    if name not in BUNDLED:
        raise SceneError(f"unknown bundled scene {name!r}; choose from {BUNDLED}")
    return SCENE_DIR / f"{name}.json"


def load_scene(path):
    path = Path(path)
    if not path.is_file() and str(path) in BUNDLED:
        path = bundled_scene(str(path))
    if not path.is_file():
        raise MissingFile(path)
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ParseError(e.msg, path, e.lineno) from None
    return scene_from_dict(data, path.parent, path)


def single_triangle_scene(verts, verts_end=None, **kw):
    """Scene holding one camera-space triangle (identity view)."""
    v0 = np.asarray(verts, dtype=np.float64).reshape(1, 3, 3)
    v1 = None if verts_end is None else np.asarray(verts_end, dtype=np.float64).reshape(1, 3, 3)
    return scene_from_triangles(v0, v1, **kw)


def scene_from_triangles(start, end=None, material_ids=None, **kw):
    """Scene from raw camera-space triangle arrays (N, 3, 3) at start/end.

    The view is the identity, so world and camera space coincide.  Used by
    tests and synthetic benchmarks.
    """
    start = np.asarray(start, dtype=np.float64).reshape(-1, 3, 3)
    end = start if end is None else np.asarray(end, dtype=np.float64).reshape(-1, 3, 3)
    return RawScene(start, end, material_ids, **kw)


class RawScene(Scene):
    """A scene given directly as camera-space space-time triangles."""

    def __init__(self, start, end, material_ids=None, **kw):
        super().__init__(**kw)
        self._start = start
        self._end = end
        self._mat = (np.zeros(len(start), dtype=np.int64) if material_ids is None
                     else np.asarray(material_ids, dtype=np.int64).reshape(-1))

    @property
    def n_triangles(self):
        return len(self._start)

    def primitives(self):
        cam = np.stack([self._start, self._end], axis=1)
        flat = np.cross(cam[:, :, 1] - cam[:, :, 0], cam[:, :, 2] - cam[:, :, 0])
        ln = np.linalg.norm(flat, axis=-1, keepdims=True)
        n = np.where(ln > 0, flat / np.where(ln > 0, ln, 1.0), 0.0)
        return Primitives(cam, cam.copy(), np.repeat(n[:, :, None, :], 3, axis=2), self._mat)
