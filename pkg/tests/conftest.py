import numpy as np
import pytest

from survaug.sequence_io import Frame, Scene, SceneManifest


def make_scene(
    length: int = 12,
    h: int = 6,
    w: int = 8,
    scene_id: str = "scene",
    labeled_from: int = 0,
    labeled_to: int | None = None,
    fill=None,
    **manifest_kwargs,
) -> Scene:
    """In-memory scene whose frame i is filled with a value identifying i,
    so splice tests can tell frames apart by content."""
    labeled_to = length - 1 if labeled_to is None else labeled_to
    frames = []
    masks = {}
    for i in range(length):
        value = fill(i) if fill else (i * 7 + 3) % 256
        frames.append(Frame(index=i, pixels=np.full((h, w), value, dtype=np.uint8)))
        if labeled_from <= i <= labeled_to:
            mask = np.zeros((h, w), dtype=np.uint8)
            mask[h // 2, : w // 2] = 255
            masks[i] = mask
    manifest = SceneManifest(
        scene_id=scene_id,
        labeled_range=(labeled_from, labeled_to),
        **manifest_kwargs,
    )
    return Scene(manifest=manifest, frames=frames, masks=masks)


@pytest.fixture
def small_scene():
    return make_scene()
