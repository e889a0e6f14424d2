"""Per-pixel sample-consensus background subtraction.

Each pixel keeps a bank of gray samples. A pixel is background when enough
bank samples sit within a gray-level radius of its current value; background
pixels refresh their own bank, and optionally a random neighbor's bank, at a
random subsampled rate. Initializing on a frame that already contains an
object puts the object into the banks, so the rendered background image keeps
showing it long after the object leaves. That slow recovery is deliberate:
it is the failure mode the augmentation pipeline exploits.

All randomness comes from a counter-based RNG keyed by (seed, step), so runs
are bit-reproducible regardless of scheduling.

Implementation note: banks are stored sorted per pixel. Replacing a uniform
random order slot removes a uniform random sample, exactly like an unsorted
bank, but the median becomes a two-element gather instead of a per-pixel
sort, which is what keeps `step` comfortably above the 1000 fps budget.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - numba is optional
    njit = None

from .errors import DataError
from .sequence_io import FOREGROUND, Frame, Scene, to_gray

INIT_JITTER = 10  # +/- gray levels added to the first frame when filling banks

# dy, dx of the 8-connected neighborhood
_NEIGHBORS = np.array(
    [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
    dtype=np.int64,
)


@dataclass(frozen=True)
class BgParams:
    n_samples: int = 20
    min_matches: int = 2
    match_radius: int = 20
    subsample_factor: int = 16  # expected frames between bank updates
    neighbor_diffusion: bool = True
    seed: int = 0

    def validate(self) -> None:
        if not self.n_samples >= self.min_matches >= 1:
            raise DataError(
                f"need n_samples >= min_matches >= 1, got {self.n_samples}/{self.min_matches}"
            )
        if self.match_radius < 0:
            raise DataError(f"match_radius must be >= 0, got {self.match_radius}")
        if self.subsample_factor < 1:
            raise DataError(f"subsample_factor must be >= 1, got {self.subsample_factor}")


@dataclass
class BackgroundModel:
    bank: np.ndarray  # (H*W, n_samples) uint8, each row sorted ascending
    shape: tuple[int, int]
    params: BgParams
    frame_count: int = 0


def _rng(params: BgParams, step_index: int) -> np.random.Generator:
    key = np.array([params.seed & 0xFFFFFFFFFFFFFFFF, step_index], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _apply_events_py(bank: np.ndarray, pixels: np.ndarray, slots: np.ndarray,
                     values: np.ndarray) -> None:
    for p, k, v in zip(pixels, slots, values):
        row = bank[p]
        # drop the sample at order slot k, insert v at its sorted position
        pos = int(np.searchsorted(row, v))
        if pos > k:
            row[k:pos - 1] = row[k + 1:pos].copy()
            row[pos - 1] = v
        else:
            row[pos + 1:k + 1] = row[pos:k].copy()
            row[pos] = v


if njit is not None:
    @njit(cache=True)
    def _apply_events_nb(bank, pixels, slots, values):  # pragma: no cover - jit
        n = bank.shape[1]
        for e in range(pixels.shape[0]):
            p = pixels[e]
            k = slots[e]
            v = values[e]
            pos = 0
            while pos < n and bank[p, pos] < v:
                pos += 1
            if pos > k:
                for j in range(k, pos - 1):
                    bank[p, j] = bank[p, j + 1]
                bank[p, pos - 1] = v
            else:
                for j in range(k, pos, -1):
                    bank[p, j] = bank[p, j - 1]
                bank[p, pos] = v
else:  # pragma: no cover
    _apply_events_nb = None


def _apply_events(bank, pixels, slots, values) -> None:
    if _apply_events_nb is not None:
        _apply_events_nb(bank, pixels.astype(np.int64), slots.astype(np.int64),
                         values.astype(np.uint8))
    else:  # pragma: no cover - exercised only without numba
        _apply_events_py(bank, pixels, slots, values)


def init(frame: Frame | np.ndarray, params: BgParams = BgParams()) -> BackgroundModel:
    """Fill every pixel's bank with the first frame plus per-sample jitter."""
    params.validate()
    gray = to_gray(frame.pixels if isinstance(frame, Frame) else frame)
    if gray.size == 0:
        raise DataError("cannot initialize on an empty frame")
    rng = _rng(params, 0)
    jitter = rng.integers(-INIT_JITTER, INIT_JITTER + 1,
                          size=gray.shape + (params.n_samples,), dtype=np.int16)
    bank = np.clip(gray.astype(np.int16)[..., None] + jitter, 0, 255).astype(np.uint8)
    bank = np.sort(bank.reshape(-1, params.n_samples), axis=1)
    return BackgroundModel(bank=bank, shape=gray.shape, params=params)


def background_image(model: BackgroundModel) -> np.ndarray:
    """Per-pixel median of the bank (mean of the two middle samples, floored)."""
    n = model.params.n_samples
    if n % 2:
        med = model.bank[:, n // 2]
    else:
        lo = model.bank[:, n // 2 - 1].astype(np.uint16)
        med = ((lo + model.bank[:, n // 2]) // 2).astype(np.uint8)
    return med.reshape(model.shape)


def step(model: BackgroundModel, frame: Frame | np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Classify one frame and update the model in place.

    Returns ``(mask, background)`` where the mask is 0/255 foreground and the
    background image reflects the bank after the update. A pixel is background
    iff at least ``min_matches`` bank samples lie within ``match_radius`` of
    its gray value; background pixels are absorbed at rate ``1/T`` into their
    own bank and, with diffusion on, into a random 8-neighbor's bank.
    """
    p = model.params
    gray = to_gray(frame.pixels if isinstance(frame, Frame) else frame)
    if gray.shape != model.shape:
        raise DataError(f"frame shape {gray.shape} does not match model {model.shape}")
    h, w = gray.shape
    flat = gray.reshape(-1)

    dist = np.abs(model.bank.astype(np.int16) - flat.astype(np.int16)[:, None])
    matches = (dist <= p.match_radius).sum(axis=1)
    is_bg = matches >= p.min_matches

    rng = _rng(p, model.frame_count + 1)
    update_self = rng.random(h * w) < 1.0 / p.subsample_factor
    slot_self = rng.integers(0, p.n_samples, size=h * w)
    update_nb = rng.random(h * w) < 1.0 / p.subsample_factor
    which_nb = rng.integers(0, 8, size=h * w)
    slot_nb = rng.integers(0, p.n_samples, size=h * w)

    chosen = np.nonzero(is_bg & update_self)[0]
    _apply_events(model.bank, chosen, slot_self[chosen], flat[chosen])

    if p.neighbor_diffusion:
        src = np.nonzero(is_bg & update_nb)[0]
        offs = _NEIGHBORS[which_nb[src]]
        ny = src // w + offs[:, 0]
        nx = src % w + offs[:, 1]
        ok = (ny >= 0) & (ny < h) & (nx >= 0) & (nx < w)
        targets = (ny[ok] * w + nx[ok]).astype(np.int64)
        _apply_events(model.bank, targets, slot_nb[src][ok], flat[src][ok])

    model.frame_count += 1
    mask = np.where(is_bg, 0, FOREGROUND).astype(np.uint8).reshape(h, w)
    return mask, background_image(model)


def run_sequence(
    scene: Scene, params: BgParams = BgParams()
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Init on the first frame, then fold :func:`step` over every frame.

    Returns ``(backgrounds, masks)``, one entry per scene frame.
    """
    if len(scene) == 0:
        raise DataError(f"scene {scene.scene_id} has no frames")
    model = init(scene.frames[0], params)
    backgrounds: list[np.ndarray] = []
    masks: list[np.ndarray] = []
    for frame in scene.frames:
        mask, bg = step(model, frame)
        masks.append(mask)
        backgrounds.append(bg)
    return backgrounds, masks
