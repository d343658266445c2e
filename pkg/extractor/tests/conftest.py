import numpy as np
import pytest
from PIL import Image


def make_png(path, seed, size=(24, 18)):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(pixels, "RGB").save(path)
    return path


@pytest.fixture
def image_dir(tmp_path):
    d = tmp_path / "images"
    d.mkdir()
    for i in range(3):
        make_png(d / f"img{i}.png", seed=i)
    return d


def write_manifest(tmp_path, paths, name="manifest.txt"):
    manifest = tmp_path / name
    manifest.write_text("\n".join(str(p) for p in paths) + "\n")
    return manifest
