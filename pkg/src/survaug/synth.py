"""Deterministic synthetic surveillance scenes with exact ground truth.

Covers the hard cases at desk scale: an object present from frame 0
(bootstrap), a person standing still for a long stretch, an object that
leaves behind a ghost, and a flickering background. Pixel noise is generated
with a counter-based RNG keyed by (seed, frame), so frames can be produced in
any order, or in parallel, without changing the output.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import SceneSpecError
from .sequence_io import (
    FOREGROUND,
    LAYOUT_FULL_LABEL,
    Frame,
    Scene,
    SceneManifest,
)


@dataclass(frozen=True)
class BackgroundSpec:
    kind: str = "flat"  # flat | two_tone | flicker
    level: int = 120
    level2: int = 60      # right half, two_tone only
    amplitude: float = 0.0  # sinusoidal offset, flicker only
    period: float = 50.0


@dataclass(frozen=True)
class ActorSpec:
    shape: str = "rectangle"  # rectangle | ellipse
    size: tuple[int, int] = (12, 16)  # (w, h)
    gray: int = 230
    enter_at: int = 0
    exit_at: int = 1  # exclusive: present for enter_at <= t < exit_at
    start: tuple[float, float] = (32.0, 32.0)  # center (x, y) at entry
    end: tuple[float, float] = (32.0, 32.0)    # center (x, y) at exit
    stop_interval: tuple[int, int] | None = None  # inclusive [t0, t1]
    labeled_foreground_while_static: bool = True

    def present(self, t: int) -> bool:
        return self.enter_at <= t < self.exit_at

    def stopped(self, t: int) -> bool:
        return self.stop_interval is not None and self.stop_interval[0] <= t <= self.stop_interval[1]


@dataclass(frozen=True)
class SynthSpec:
    width: int = 64
    height: int = 64
    length: int = 300
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    actors: tuple[ActorSpec, ...] = ()
    noise_sigma: float = 0.0
    seed: int = 0
    scene_id: str = "synth"
    category: str = "synthetic"


def _noise_rng(seed: int, frame: int) -> np.random.Generator:
    key = np.array([seed & 0xFFFFFFFFFFFFFFFF, frame], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _actor_positions(actor: ActorSpec, length: int) -> dict[int, tuple[int, int]]:
    """Integer center per present frame. Movement is linear between start and
    end, frozen during the stop interval."""
    if actor.exit_at <= actor.enter_at:
        raise SceneSpecError(f"actor exit_at {actor.exit_at} <= enter_at {actor.enter_at}")
    if actor.stop_interval is not None:
        t0, t1 = actor.stop_interval
        if not (actor.enter_at <= t0 <= t1 < actor.exit_at):
            raise SceneSpecError(
                f"stop_interval {actor.stop_interval} not inside "
                f"[{actor.enter_at}, {actor.exit_at})"
            )
    span = range(actor.enter_at, min(actor.exit_at, length))
    moving = [t for t in span if not actor.stopped(t)]
    steps = max(len(moving) - 1, 1)
    dx = (actor.end[0] - actor.start[0]) / steps
    dy = (actor.end[1] - actor.start[1]) / steps

    positions: dict[int, tuple[int, int]] = {}
    x, y = actor.start
    first = True
    for t in span:
        if not first and not actor.stopped(t):
            x += dx
            y += dy
        positions[t] = (int(round(x)), int(round(y)))
        first = False
    return positions


def _support(shape: str, center: tuple[int, int], size: tuple[int, int],
             width: int, height: int) -> np.ndarray:
    """Boolean (H, W) raster of the actor footprint."""
    cx, cy = center
    w, h = size
    if shape == "rectangle":
        x0, y0 = cx - w // 2, cy - h // 2
        out = np.zeros((height, width), dtype=bool)
        out[max(y0, 0):y0 + h, max(x0, 0):x0 + w] = True
        return out
    if shape == "ellipse":
        ys, xs = np.mgrid[0:height, 0:width]
        return ((xs - cx) / (w / 2.0)) ** 2 + ((ys - cy) / (h / 2.0)) ** 2 <= 1.0
    raise SceneSpecError(f"unknown actor shape {shape!r}")


def _check_bounds(actor: ActorSpec, positions: dict[int, tuple[int, int]],
                  width: int, height: int) -> None:
    w, h = actor.size
    for t, (cx, cy) in positions.items():
        x0, y0 = cx - w // 2, cy - h // 2
        if x0 < 0 or y0 < 0 or x0 + w > width or y0 + h > height:
            raise SceneSpecError(
                f"actor trajectory out of bounds at frame {t}: "
                f"bbox ({x0},{y0})+({w},{h}) exceeds {width}x{height}"
            )


def _background_frame(bg: BackgroundSpec, t: int, width: int, height: int) -> np.ndarray:
    if bg.kind == "flat":
        return np.full((height, width), bg.level, dtype=np.uint8)
    if bg.kind == "two_tone":
        out = np.full((height, width), bg.level, dtype=np.uint8)
        out[:, width // 2:] = bg.level2
        return out
    if bg.kind == "flicker":
        level = bg.level + bg.amplitude * np.sin(2.0 * np.pi * t / bg.period)
        return np.full((height, width), int(round(np.clip(level, 0, 255))), dtype=np.uint8)
    raise SceneSpecError(f"unknown background kind {bg.kind!r}")


def generate_scene(spec: SynthSpec) -> Scene:
    """Render a full-label Scene from the spec. Deterministic for a fixed seed;
    noise is applied to frames only, never to masks."""
    if spec.length < 1:
        raise SceneSpecError("length must be >= 1")
    positions = {a: _actor_positions(a, spec.length) for a in spec.actors}
    for actor, pos in positions.items():
        _check_bounds(actor, pos, spec.width, spec.height)

    frames: list[Frame] = []
    masks: dict[int, np.ndarray] = {}
    appear: int | None = None
    clean: int | None = None
    for t in range(spec.length):
        frame = _background_frame(spec.background, t, spec.width, spec.height)
        mask = np.zeros((spec.height, spec.width), dtype=np.uint8)
        any_present = False
        for actor in spec.actors:
            if not actor.present(t):
                continue
            any_present = True
            sup = _support(actor.shape, positions[actor][t], actor.size,
                           spec.width, spec.height)
            frame[sup] = actor.gray
            if not actor.stopped(t) or actor.labeled_foreground_while_static:
                mask[sup] = FOREGROUND
        if any_present and appear is None:
            appear = t
        if not any_present and clean is None:
            clean = t
        if spec.noise_sigma > 0:
            noise = _noise_rng(spec.seed, t).normal(0.0, spec.noise_sigma, frame.shape)
            frame = np.clip(np.rint(frame.astype(np.float64) + noise), 0, 255).astype(np.uint8)
        frames.append(Frame(index=t, pixels=frame))
        masks[t] = mask

    manifest = SceneManifest(
        scene_id=spec.scene_id,
        layout=LAYOUT_FULL_LABEL,
        labeled_range=(0, spec.length - 1),
        human_foreground=any(a.labeled_foreground_while_static for a in spec.actors),
        clean_frame_index=clean,
        foreground_appear_index=appear,
        category=spec.category,
    )
    return Scene(manifest=manifest, frames=frames, masks=masks)


def background_truth(spec: SynthSpec, t: int) -> np.ndarray:
    """The actor-free, noise-free background at frame t (test oracle)."""
    return _background_frame(spec.background, t, spec.width, spec.height)


def scenario_presets() -> dict[str, SynthSpec]:
    """Named desk-scale scenarios for the classic failure modes."""
    presets: dict[str, SynthSpec] = {}

    # Object enters mid-sequence and crosses the view. The entry index equals
    # the default splice span, so a corrupt splice reaches the first frame and
    # the background model initializes on top of the object.
    presets["moving"] = SynthSpec(
        length=300,
        actors=(ActorSpec(
            size=(12, 16), gray=230, enter_at=100, exit_at=280,
            start=(10.0, 40.0), end=(54.0, 40.0),
            labeled_foreground_while_static=False,
        ),),
        noise_sigma=2.0,
        seed=11,
        scene_id="moving",
    )

    # Person present and still from frame 0, walks away later: the background
    # model initializes on top of them.
    presets["bootstrap"] = SynthSpec(
        length=300,
        actors=(ActorSpec(
            size=(12, 16), gray=230, enter_at=0, exit_at=200,
            start=(32.0, 32.0), end=(56.0, 32.0), stop_interval=(0, 100),
            labeled_foreground_while_static=True,
        ),),
        noise_sigma=2.0,
        seed=12,
        scene_id="bootstrap",
    )

    # Person walks in, stands still for >= 100 frames, walks out.
    presets["static_person"] = SynthSpec(
        length=300,
        actors=(ActorSpec(
            size=(10, 18), gray=210, enter_at=20, exit_at=260,
            start=(10.0, 34.0), end=(54.0, 34.0), stop_interval=(60, 170),
            labeled_foreground_while_static=True,
        ),),
        noise_sigma=2.0,
        seed=13,
        scene_id="static_person",
    )

    # Object occupies one spot from frame 0, then leaves entirely; the
    # background model keeps showing it for a while (ghost).
    presets["ghost"] = SynthSpec(
        length=420,
        actors=(ActorSpec(
            size=(12, 16), gray=230, enter_at=0, exit_at=130,
            start=(20.0, 24.0), end=(52.0, 24.0), stop_interval=(0, 110),
            labeled_foreground_while_static=True,
        ),),
        noise_sigma=2.0,
        seed=14,
        scene_id="ghost",
    )

    # Dynamic background: global sinusoidal flicker under a moving object.
    presets["flicker"] = SynthSpec(
        length=300,
        background=BackgroundSpec(kind="flicker", level=120, amplitude=12.0, period=40.0),
        actors=(ActorSpec(
            size=(12, 16), gray=230, enter_at=110, exit_at=280,
            start=(10.0, 40.0), end=(54.0, 40.0),
            labeled_foreground_while_static=False,
        ),),
        noise_sigma=2.0,
        seed=15,
        scene_id="flicker",
    )
    return presets
