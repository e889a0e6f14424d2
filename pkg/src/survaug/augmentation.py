"""The two spatio-temporal augmentation procedures and sample-count planning.

``splice_corrupt`` fakes a bootstrap: the frame where the foreground object
first appears is copied over the preceding span, so a background subtractor
initializes with the object baked in and renders a wrong background image.
``splice_correct`` is the inverse repair: a hand-picked clean frame is copied
over the leading span so the subtractor starts from an object-free view.
Both leave every ground-truth mask untouched; they only steer the background
image series that gets paired with the original samples.

``interval_zero`` sets the past-image frame interval to 0 by replacing all
four past channels with the current channel, which keeps a stationary person
learnable as foreground.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .dataset_builder import Sample
from .errors import MissingAnnotationError, SpliceBoundsError
from .sequence_io import Frame, Scene, SceneManifest

BG_AUG_NONE = "none"
BG_AUG_CORRUPT = "corrupt"
BG_AUG_CORRECT = "correct"

DEFAULT_SPAN = 100


@dataclass(frozen=True)
class ScenePlan:
    scene_id: str
    bg_aug: str = BG_AUG_NONE
    interval_aug: bool = False


@dataclass(frozen=True)
class AugPlan:
    scenes: tuple[ScenePlan, ...]
    samples_per_scene: int
    base: int
    after_interval: int
    after_bg: int


def splice_corrupt(scene: Scene, span: int = DEFAULT_SPAN) -> Scene:
    """Overwrite the ``span`` frames before the foreground-appearance index
    with copies of that frame. Masks, length and manifest stay unchanged."""
    a = scene.manifest.foreground_appear_index
    if a is None:
        raise MissingAnnotationError(
            f"scene {scene.scene_id}: foreground_appear_index required for corrupt splice"
        )
    if a < span:
        raise SpliceBoundsError(
            f"scene {scene.scene_id}: appearance index {a} < span {span}"
        )
    source = scene.frames[a].pixels
    frames = [
        Frame(index=f.index, pixels=source.copy(), timestamp=f.timestamp)
        if a - span <= f.index < a
        else f
        for f in scene.frames
    ]
    return scene.with_frames(frames, f"splice_corrupt(span={span}, appear={a})")


def splice_correct(scene: Scene, span: int = DEFAULT_SPAN) -> Scene:
    """Overwrite the leading ``span`` frames with copies of the clean frame."""
    c = scene.manifest.clean_frame_index
    if c is None:
        raise MissingAnnotationError(
            f"scene {scene.scene_id}: clean_frame_index required for correct splice"
        )
    if span > len(scene):
        raise SpliceBoundsError(
            f"scene {scene.scene_id}: span {span} exceeds length {len(scene)}"
        )
    source = scene.frames[c].pixels
    frames = [
        Frame(index=f.index, pixels=source.copy(), timestamp=f.timestamp)
        if f.index < span
        else f
        for f in scene.frames
    ]
    return scene.with_frames(frames, f"splice_correct(span={span}, clean={c})")


def splice_for(scene: Scene, direction: str, span: int = DEFAULT_SPAN) -> Scene:
    if direction == BG_AUG_CORRUPT:
        return splice_corrupt(scene, span)
    if direction == BG_AUG_CORRECT:
        return splice_correct(scene, span)
    raise MissingAnnotationError(f"no splice direction {direction!r}")


def interval_zero(sample: Sample) -> Sample:
    """Copy of the sample with all past channels replaced by the current one.

    Channel 0 is the current image and channel 1 the background image; the
    remaining channels are the pasts. Idempotent; target mask unchanged.
    """
    channels = sample.channels.copy()
    channels[2:] = channels[0]
    return Sample(
        channels=channels,
        target=sample.target,
        weight=sample.weight,
        meta=replace(sample.meta, interval_aug=True),
    )


def bg_aug_direction(manifest: SceneManifest, span: int = DEFAULT_SPAN) -> str:
    """Manifest-driven choice: corrupt a good background run when the object
    appears late enough to leave room for the splice, repair a bad one when a
    clean frame is marked (the bootstrap case, where the object is there from
    the start)."""
    a = manifest.foreground_appear_index
    if a is not None and a >= span:
        return BG_AUG_CORRUPT
    if manifest.clean_frame_index is not None:
        return BG_AUG_CORRECT
    return BG_AUG_NONE


def plan_augmentation(
    manifests: list[SceneManifest],
    samples_per_scene: int,
    use_bg: bool,
    use_interval: bool,
    span: int = DEFAULT_SPAN,
) -> AugPlan:
    """Predict sample counts for a build over the given scenes.

    base counts one sample per selected index per scene; interval augmentation
    adds one more per index for scenes with human foreground; background
    augmentation doubles everything by pairing each sample with a second,
    deliberately altered background series.
    """
    if samples_per_scene < 0:
        raise ValueError("samples_per_scene must be >= 0")
    scenes = []
    for m in manifests:
        direction = bg_aug_direction(m, span) if use_bg else BG_AUG_NONE
        if use_bg and direction == BG_AUG_NONE:
            raise MissingAnnotationError(
                f"scene {m.scene_id}: background augmentation requested but neither "
                "foreground_appear_index nor clean_frame_index is annotated"
            )
        scenes.append(ScenePlan(
            scene_id=m.scene_id,
            bg_aug=direction,
            interval_aug=use_interval and m.human_foreground,
        ))
    base = samples_per_scene * len(manifests)
    human = sum(1 for m in manifests if m.human_foreground)
    after_interval = base + samples_per_scene * human if use_interval else base
    after_bg = 2 * after_interval if use_bg else after_interval
    return AugPlan(
        scenes=tuple(scenes),
        samples_per_scene=samples_per_scene,
        base=base,
        after_interval=after_interval,
        after_bg=after_bg,
    )
