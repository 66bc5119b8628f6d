import numpy as np
import pytest
from PIL import Image

from urqa.synth import SynthSpec, make_field
from urqa.raster_io import save_deformation_field
from urqa.types import RasterImage


def make_tissue_image(height=256, width=256, seed=0, rgb=True,
                      background=245) -> RasterImage:
    """Synthetic slide-like raster: bright background, textured dark blob."""
    rng = np.random.default_rng(seed)
    channels = 3 if rgb else 1
    shape = (height, width, 3) if rgb else (height, width)
    img = np.full(shape, background, dtype=np.uint8)
    yy, xx = np.mgrid[0:height, 0:width]
    cy = height * 0.5 + rng.uniform(-height * 0.1, height * 0.1)
    cx = width * 0.5 + rng.uniform(-width * 0.1, width * 0.1)
    ry = height * rng.uniform(0.2, 0.3)
    rx = width * rng.uniform(0.2, 0.3)
    blob = ((yy - cy) ** 2 / ry ** 2 + (xx - cx) ** 2 / rx ** 2) < 1.0
    texture = rng.integers(50, 170, size=shape).astype(np.uint8)
    img[blob] = texture[blob]
    return RasterImage(pixels=img)


@pytest.fixture
def tissue_image():
    return make_tissue_image()


@pytest.fixture
def gray_tissue_image():
    return make_tissue_image(rgb=False)


def write_pair(directory, name="p0", seed=0, image_size=128, field_size=48,
               field_kind="identity", registered_seed=None):
    """Write a (fixed.png, registered.png, field.npy) triple; returns paths.

    With registered_seed None the registered image equals the fixed one.
    """
    fixed = make_tissue_image(image_size, image_size, seed=seed)
    fixed_path = directory / f"{name}_fixed.png"
    Image.fromarray(fixed.pixels).save(fixed_path)
    if registered_seed is None:
        registered_path = directory / f"{name}_registered.png"
        Image.fromarray(fixed.pixels).save(registered_path)
    else:
        registered = make_tissue_image(image_size, image_size, seed=registered_seed)
        registered_path = directory / f"{name}_registered.png"
        Image.fromarray(registered.pixels).save(registered_path)
    field = make_field(SynthSpec(kind=field_kind, size=field_size, seed=seed))
    field_path = directory / f"{name}_field.npy"
    save_deformation_field(field, field_path)
    return fixed_path, registered_path, field_path
