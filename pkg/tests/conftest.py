import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from seadronesim.geometry import make_uv_sphere
from seadronesim.render import RenderSettings
from seadronesim.scene import (MeshInstance, SceneSpec, assemble_scene,
                               place_camera, water_preset)

REPO_ROOT = Path(__file__).resolve().parent.parent


@pytest.fixture(scope="session")
def repo_root() -> Path:
    return REPO_ROOT


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL"),
                          ("error", "FAIL"), ("skipped", "SKIP")):
        for rep in terminalreporter.stats.get(status, []):
            nodeid = getattr(rep, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(rep, "when", "call") not in ("call", "setup"):
                continue
            if status == "passed" and rep.when != "call":
                continue
            lines.append((nodeid.split("::")[-1], label))
    if lines:
        terminalreporter.write_line("")
        terminalreporter.write_line("acceptance criteria:")
        for name, label in sorted(lines):
            terminalreporter.write_line(f"  ACCEPTANCE {name}: {label}")


@pytest.fixture(scope="session")
def sphere_scene():
    """Unit sphere floating at the origin in low-turbidity blue water, 64x64."""
    medium, tint = water_preset("blue", "low")
    cam = place_camera(10.0, 0.0, (0.0, 0.0, 0.0), math.radians(60), 64, 64)
    spec = SceneSpec(object_instance=MeshInstance(make_uv_sphere(radius=1.0)),
                     camera=cam, water=medium, water_tint=np.asarray(tint), seed=11)
    return assemble_scene(spec)


@pytest.fixture()
def fast_settings():
    return RenderSettings(samples_per_pixel=8, max_bounces=4, seed=3)


def write_obj(path: Path, text: str) -> Path:
    path.write_text(text, encoding="utf-8")
    return path


UNIT_CUBE_OBJ = """\
# unit cube, corners at 0 and 1
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 4 3 2
f 5 6 7 8
f 1 2 6 5
f 2 3 7 6
f 3 4 8 7
f 4 1 5 8
"""
