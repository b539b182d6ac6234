"""Parameter sweeps: the cross product of bound methods, foveation strengths
and camera rotation angles, one CSV row per run."""
import csv
import io
import itertools
import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import oracle
from .errors import MissingFile, ParseError, PrastError
from .foveation import FoveationMap
from .geometry import axis_angle_quat, quat_to_matrix
from .imageio import atomic_write
from .metrics import fovea_pixel, foveal_ssim, masked_ssim, supersample_reference
from .pipeline import RenderConfig, render
from .scene import load_scene

COLUMNS = ["mode", "bound", "alpha", "angle", "ste", "tested", "passed",
           "ssim", "foveal_ssim", "seconds", "error"]


@dataclass
class RunManifest:
    scene: str
    mode: str = "rolling"
    bound: str = None
    width: int = 128
    height: int = 128
    guard_px: float = 1.0
    unfoveate: str = "mip"
    fovea: tuple = (0.0, 0.0)
    scan: tuple = None
    compare: str = "oracle"  # or "reference"
    factor: int = 4
    bounds: list = field(default_factory=list)
    alphas: list = field(default_factory=list)
    angles: list = field(default_factory=list)
    output: str = None

    @classmethod
    def load(cls, path):
        path = Path(path)
        if not path.is_file():
            raise MissingFile(path)
        try:
            data = json.loads(path.read_text())
        except json.JSONDecodeError as e:
            raise ParseError(e.msg, path, e.lineno) from None
        if not isinstance(data, dict) or "scene" not in data:
            raise ParseError("manifest needs a 'scene'", path, field="scene")
        sweep = data.pop("sweep", {})
        known = set(cls.__dataclass_fields__)
        extra = set(data) - known
        if extra:
            raise ParseError(f"unknown keys {sorted(extra)}", path)
        m = cls(**data)
        m.bounds = list(sweep.get("bound", m.bounds))
        m.alphas = list(sweep.get("alpha", m.alphas))
        m.angles = list(sweep.get("angle", m.angles))
        scene = Path(m.scene)
        if not scene.is_absolute():
            scene = path.parent / scene
        if not scene.is_file():
            raise MissingFile(scene)
        m.scene = str(scene)
        return m

    def axes(self):
        return (self.bounds or [self.bound], self.alphas or [None], self.angles or [None])


def rotate_camera_end(scene, degrees):
    """Copy of ``scene`` whose end view is the start view turned about the
    camera's vertical axis by ``degrees``."""
    pose = np.linalg.inv(scene.view.start)
    R = np.eye(4)
    R[:3, :3] = quat_to_matrix(axis_angle_quat((0.0, 1.0, 0.0), degrees))
    view = replace(scene.view, end=np.linalg.inv(pose @ R))
    return replace(scene, view=view)


def run_one(scene, m, bound, alpha, angle):
    if angle is not None:
        scene = rotate_camera_end(scene, float(angle))
    fov = dict(scene.foveation or {})
    fov.setdefault("fovea", list(m.fovea))
    if alpha is not None:
        fov["alpha"] = float(alpha)
        fov.pop("p_table", None)
    fmap = FoveationMap.from_config(fov) if m.mode in ("foveated", "joint") else None
    scan = m.scan or scene.scan or (1.0, 0.0)
    cfg = RenderConfig(m.mode, bound, m.width, m.height, m.guard_px, fmap,
                       scan if m.mode in ("rolling", "joint") else None,
                       m.unfoveate if fmap is not None else None)
    t0 = time.perf_counter()
    res = render(scene, cfg)
    seconds = time.perf_counter() - t0
    row = {"ste": res.stats.aggregate, "tested": res.stats.fragments_tested,
           "passed": res.stats.fragments_passed, "seconds": round(seconds, 4)}
    if m.compare == "oracle":
        ref = oracle.render(scene, cfg)
        row["ssim"] = masked_ssim(res.image, ref.image)
    else:
        ref = supersample_reference(scene, cfg, m.factor)
        row["ssim"] = masked_ssim(res.image, ref)
        fx = fovea_pixel(fmap.fovea if fmap is not None else m.fovea, m.width, m.height)
        row["foveal_ssim"] = foveal_ssim(res.image, ref, fx)
    return row


def run_sweep(manifest, out=None):
    """Run every combination of the manifest's axes; failures become rows.

    Returns the list of row dicts and writes CSV to ``out`` (or the
    manifest's output path) when given.
    """
    m = manifest if isinstance(manifest, RunManifest) else RunManifest.load(manifest)
    scene = load_scene(m.scene)
    rows = []
    for bound, alpha, angle in itertools.product(*m.axes()):
        row = dict.fromkeys(COLUMNS, "")
        row.update(mode=m.mode, bound=bound or "", alpha="" if alpha is None else alpha,
                   angle="" if angle is None else angle)
        try:
            row.update(run_one(scene, m, bound, alpha, angle))
        except (PrastError, ValueError, FloatingPointError) as e:
            row["error"] = f"{type(e).__name__}: {e}"
        rows.append(row)
    out = out or m.output
    if out is not None:
        buf = io.StringIO()
        wr = csv.DictWriter(buf, COLUMNS, lineterminator="\n")
        wr.writeheader()
        wr.writerows(rows)
        atomic_write(out, buf.getvalue().encode())
    return rows
