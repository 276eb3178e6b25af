import json
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from slekit.masks import write_pgm
from slekit.synth import growing_disk_sequence


@pytest.fixture(scope="session")
def disk_sequence():
    return growing_disk_sequence()


@pytest.fixture(scope="session")
def disk_manifest(tmp_path_factory, disk_sequence):
    """On-disk copy of the deterministic disk dataset (PGM + manifest)."""
    root = tmp_path_factory.mktemp("diskdata")
    entries = []
    for i, fr in enumerate(disk_sequence.frames):
        name = f"frame_{i:03d}.pgm"
        write_pgm(root / name, fr.bits)
        entries.append({"path": name, "t_seconds": fr.timestamp})
    path = root / "manifest.json"
    path.write_text(json.dumps(
        {"channel": "brightening", "pixel_scale_mm": None, "frames": entries}))
    return path
