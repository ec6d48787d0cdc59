"""Deterministic differentiable toy backend with planted channel semantics.

The toy image is a stack of horizontal bands, each tied to a known set of
style channels, so every verification question ("which channels drive this
region?", "did the edit move anything it should not have?") has an exact
answer:

* ``sky``      - hue blend between a cool and a warm color, driven by the
                 ``sky`` planted channels (plus a small leak contribution).
* ``band``     - uniform brightness, driven by the ``band`` planted set.
* ``stripes``  - cosine stripes whose amplitude is driven by the
                 ``stripes`` planted set.
* ``panel``    - three full-width sub-bands driven by the per-attribute
                 leak pairs, plus a thin strip of column blocks driven by
                 the remaining editable channels.

Leak channels couple weakly into an attribute's property while strongly
driving their own panel sub-band; they are what the background loss is for.
Each property is a smooth monotone function of the mean of its channel
set, so the analytic scorer can recover it in closed form from pixels.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import torch

from ..errors import InvalidInputError, ScorerUnavailableError
from ..qmm import AttributeCatalog
from ..stylespace import StyleCode
from .base import BackendManifest

REGIONS = ("sky", "band", "stripes", "panel")
PROPERTY_REGIONS = ("sky", "band", "stripes")

C_COOL = (0.08, 0.35, 0.85)
C_WARM = (0.95, 0.55, 0.12)
BAND_TINT = (1.0, 0.92, 0.78)
GLOW_LO, GLOW_SPAN = 0.12, 0.76
STRIPE_LEVEL, STRIPE_AMP, STRIPE_PERIODS = 0.85, 0.45, 8
LEAK_LO, LEAK_SPAN = 0.10, 0.80
PURE_BASE, PURE_AMP = 0.5, 0.35


@dataclass(frozen=True)
class ToyWorld:
    """Geometry and channel layout of the toy domain.

    ``planted`` maps each property region to the channels that drive it;
    ``leaks`` maps the same regions to channel pairs that couple weakly
    into the property and strongly into their own panel sub-band.  All
    remaining editable channels only perturb the panel strip.
    """

    n_channels: int = 32
    image_size: int = 64
    latent_dim: int = 32
    style_scale: float = 1.5
    planted: dict = field(
        default_factory=lambda: {
            "sky": (0, 1, 2, 3),
            "band": (8, 9, 10, 11),
            "stripes": (16, 17, 18, 19),
        }
    )
    leaks: dict = field(
        default_factory=lambda: {
            "sky": (4, 5),
            "band": (12, 13),
            "stripes": (20, 21),
        }
    )
    non_editable: tuple = (28, 29, 30, 31)
    pose_channel: int = 31
    planted_gain: float = 2.0
    leak_gain: float = 0.025
    leak_band_gain: float = 2.2
    mix_seed: int = 7

    def __post_init__(self):
        if self.image_size % 16 != 0:
            raise InvalidInputError("toy image size must be a multiple of 16")
        taken: set[int] = set()
        for region in PROPERTY_REGIONS:
            for ch in tuple(self.planted[region]) + tuple(self.leaks[region]):
                if ch in taken:
                    raise InvalidInputError(f"channel {ch} assigned twice")
                if ch in self.non_editable:
                    raise InvalidInputError(f"channel {ch} is non-editable")
                taken.add(ch)
        if self.pose_channel not in self.non_editable:
            raise InvalidInputError("pose channel must be non-editable")

    @property
    def editable(self) -> np.ndarray:
        flags = np.ones(self.n_channels, dtype=bool)
        flags[list(self.non_editable)] = False
        return flags

    @property
    def planted_channels(self) -> tuple[int, ...]:
        return tuple(ch for r in PROPERTY_REGIONS for ch in self.planted[r])

    @property
    def leak_channels(self) -> tuple[int, ...]:
        return tuple(ch for r in PROPERTY_REGIONS for ch in self.leaks[r])

    @property
    def pure_channels(self) -> tuple[int, ...]:
        used = set(self.planted_channels) | set(self.leak_channels) | set(self.non_editable)
        return tuple(i for i in range(self.n_channels) if i not in used)

    @property
    def others_channels(self) -> tuple[int, ...]:
        """Editable channels planted for no property (leaks included)."""
        planted = set(self.planted_channels)
        return tuple(
            i for i in range(self.n_channels) if self.editable[i] and i not in planted
        )

    # Row layout: 1/8 each for the three property bands, then three leak
    # sub-bands of 3/16 and a 1/16 strip for the remaining channels.
    def region_rows(self, region: str) -> tuple[int, int]:
        s = self.image_size
        bounds = {
            "sky": (0, s // 8),
            "band": (s // 8, s // 4),
            "stripes": (s // 4, 3 * s // 8),
            "panel": (3 * s // 8, s),
        }
        try:
            return bounds[region]
        except KeyError:
            raise InvalidInputError(f"unknown toy region {region!r}") from None

    def leak_band_rows(self, region: str) -> tuple[int, int]:
        start = 3 * self.image_size // 8
        height = 3 * self.image_size // 16
        order = PROPERTY_REGIONS.index(region)
        return start + order * height, start + (order + 1) * height

    @property
    def pure_strip_rows(self) -> tuple[int, int]:
        return 15 * self.image_size // 16, self.image_size

    @property
    def max_pose_shift(self) -> int:
        return self.image_size // 8

    def to_manifest(self) -> BackendManifest:
        return BackendManifest(
            backend="toy",
            model_id=f"toy-{self.n_channels}ch",
            n_channels=self.n_channels,
            image_size=self.image_size,
            non_editable=self.non_editable,
            params={
                "latent_dim": self.latent_dim,
                "style_scale": self.style_scale,
                "planted": {k: list(v) for k, v in self.planted.items()},
                "leaks": {k: list(v) for k, v in self.leaks.items()},
                "pose_channel": self.pose_channel,
                "planted_gain": self.planted_gain,
                "leak_gain": self.leak_gain,
                "leak_band_gain": self.leak_band_gain,
                "mix_seed": self.mix_seed,
            },
        )

    @classmethod
    def from_manifest(cls, manifest: BackendManifest) -> "ToyWorld":
        p = manifest.params
        return cls(
            n_channels=manifest.n_channels,
            image_size=manifest.image_size,
            latent_dim=int(p.get("latent_dim", 32)),
            style_scale=float(p.get("style_scale", 1.5)),
            planted={k: tuple(v) for k, v in p["planted"].items()} if "planted" in p else cls().planted,
            leaks={k: tuple(v) for k, v in p["leaks"].items()} if "leaks" in p else cls().leaks,
            non_editable=tuple(manifest.non_editable),
            pose_channel=int(p.get("pose_channel", 31)),
            planted_gain=float(p.get("planted_gain", 2.0)),
            leak_gain=float(p.get("leak_gain", 0.025)),
            leak_band_gain=float(p.get("leak_band_gain", 2.2)),
            mix_seed=int(p.get("mix_seed", 7)),
        )


def property_value_t(values: torch.Tensor, world: ToyWorld, region: str) -> torch.Tensor:
    """Ground-truth property in (0, 1) for one region, straight from the
    style code (the scorer independently recovers the same value from
    pixels)."""
    planted = torch.as_tensor(world.planted[region], dtype=torch.long)
    leak = torch.as_tensor(world.leaks[region], dtype=torch.long)
    drive = world.planted_gain * values.index_select(0, planted).mean()
    drive = drive + world.leak_gain * values.index_select(0, leak).mean()
    return torch.sigmoid(drive)


class ToyGenerator:
    """Analytic generator: fixed rotation mapping, band renderer, integer
    viewpoint shift encoded in the pose channel."""

    differentiable = True

    def __init__(self, world: ToyWorld | None = None):
        self.world = world or ToyWorld()
        rng = np.random.default_rng(self.world.mix_seed)
        square = rng.standard_normal((self.world.n_channels, self.world.latent_dim))
        q, _ = np.linalg.qr(square)
        self._mix = q * self.world.style_scale

    @property
    def n_channels(self) -> int:
        return self.world.n_channels

    @property
    def editable(self) -> np.ndarray:
        return self.world.editable

    @property
    def manifest(self) -> BackendManifest:
        return self.world.to_manifest()

    def sample_latent(self, seed) -> tuple[np.ndarray, np.ndarray]:
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(self.world.latent_dim)
        pose = np.array([rng.uniform(-1.0, 1.0)])
        return z, pose

    def to_style(self, z: np.ndarray, pose: np.ndarray) -> StyleCode:
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.world.latent_dim,):
            raise InvalidInputError(f"latent must have shape ({self.world.latent_dim},)")
        values = self._mix @ z
        values[self.world.pose_channel] = float(np.asarray(pose).reshape(-1)[0])
        return StyleCode(values, self.world.editable)

    def synthesize(self, code: StyleCode) -> np.ndarray:
        if len(code) != self.world.n_channels:
            raise InvalidInputError(
                f"style code has {len(code)} channels, expected {self.world.n_channels}"
            )
        with torch.no_grad():
            image = self.synthesize_t(torch.from_numpy(np.array(code.values)))
        return image.numpy()

    def synthesize_t(self, values: torch.Tensor) -> torch.Tensor:
        """Render a (H, W, 3) float64 image in [0, 1], differentiable w.r.t.
        every content channel."""
        w = self.world
        if values.shape != (w.n_channels,):
            raise InvalidInputError(f"style tensor must have shape ({w.n_channels},)")
        size = w.image_size
        rows = []

        # Sky: uniform blend between the cool and warm anchor colors.
        u_sky = property_value_t(values, w, "sky")
        cool = torch.tensor(C_COOL, dtype=torch.float64)
        warm = torch.tensor(C_WARM, dtype=torch.float64)
        sky = (1 - u_sky) * cool + u_sky * warm
        rows.append(sky.expand(size // 8, size, 3))

        # Band: uniform tinted brightness.
        u_band = property_value_t(values, w, "band")
        tint = torch.tensor(BAND_TINT, dtype=torch.float64)
        band = (GLOW_LO + GLOW_SPAN * u_band) * tint
        rows.append(band.expand(size // 8, size, 3))

        # Stripes: cosine pattern with amplitude set by the property.
        u_stripe = property_value_t(values, w, "stripes")
        x = torch.arange(size, dtype=torch.float64)
        pattern = torch.cos(2 * math.pi * STRIPE_PERIODS * x / size)
        stripe_row = STRIPE_LEVEL * (0.5 + STRIPE_AMP * u_stripe * pattern)
        rows.append(stripe_row.reshape(1, size, 1).expand(size // 8, size, 3))

        # Leak sub-bands: each leak pair drives one full-width gray band.
        for region in PROPERTY_REGIONS:
            leak = torch.as_tensor(w.leaks[region], dtype=torch.long)
            level = LEAK_LO + LEAK_SPAN * torch.sigmoid(
                w.leak_band_gain * values.index_select(0, leak).mean()
            )
            rows.append(level.expand(3 * size // 16, size, 3))

        # Pure strip: one column block per remaining editable channel.
        pure = w.pure_channels
        block_w = size // max(len(pure), 1)
        cols = []
        for j, ch in enumerate(pure):
            level = PURE_BASE + PURE_AMP * torch.tanh(values[ch])
            cols.append(level.expand(size // 16, block_w, 3))
        leftover = size - block_w * len(pure)
        if leftover:
            cols.append(torch.full((size // 16, leftover, 3), PURE_BASE, dtype=torch.float64))
        rows.append(torch.cat(cols, dim=1))

        image = torch.cat(rows, dim=0)

        # Viewpoint: integer column shift read from the (non-editable) pose
        # channel; piecewise constant, so it carries no gradient.
        shift = int(round(w.max_pose_shift * float(values[w.pose_channel].detach())))
        return torch.roll(image, shifts=shift, dims=1)


class ToySegmenter:
    """Exact region masks for toy images: fixed horizontal bands that tile
    the image (viewpoint shifts are horizontal, so bands never move)."""

    def __init__(self, world: ToyWorld | None = None):
        self.world = world or ToyWorld()

    def regions(self) -> tuple[str, ...]:
        return REGIONS

    def segment(self, image: np.ndarray) -> dict[str, np.ndarray]:
        arr = np.asarray(image)
        size = self.world.image_size
        if arr.shape[:2] != (size, size):
            raise InvalidInputError(f"expected a {size}x{size} image, got {arr.shape}")
        out = {}
        for region in REGIONS:
            lo, hi = self.world.region_rows(region)
            mask = np.zeros((size, size), dtype=np.int8)
            mask[lo:hi, :] = 1
            out[region] = mask
        return out


class ToyScorer:
    """Analytic stand-in for an image-text scorer.

    Each phrase is tied (via catalog hints) to a target value of one
    region's property; the score is the negative squared gap between the
    property recovered from pixels and that target.  An image rendered at
    a phrase's target therefore maximizes that phrase's score.
    """

    differentiable = True

    def __init__(self, world: ToyWorld, catalog: AttributeCatalog):
        self.world = world
        self._phrase_map: dict[str, tuple[str, float, float]] = {}
        for spec in catalog:
            if spec.region not in PROPERTY_REGIONS:
                raise InvalidInputError(
                    f"attribute {spec.name!r} targets unknown toy region {spec.region!r}"
                )
            for group in spec.groups:
                targets = group.extra.get("targets")
                if targets is None or len(targets) != len(group.phrases):
                    raise InvalidInputError(
                        f"toy scorer needs one 'targets' hint per phrase for {spec.name!r}"
                    )
                sharpness = float(group.extra.get("sharpness", 8.0))
                for phrase, target in zip(group.templated(), targets):
                    if phrase in self._phrase_map:
                        raise InvalidInputError(f"ambiguous phrase {phrase!r} in catalog")
                    self._phrase_map[phrase] = (spec.region, float(target), sharpness)

    def measure_t(self, image: torch.Tensor, region: str) -> torch.Tensor:
        """Recover a region's property value from pixels alone."""
        w = self.world
        if image.shape != (w.image_size, w.image_size, 3):
            raise InvalidInputError(
                f"expected a {w.image_size}x{w.image_size}x3 image, got {tuple(image.shape)}"
            )
        lo, hi = w.region_rows(region)
        block = image[lo:hi]
        if region == "sky":
            cool = torch.tensor(C_COOL, dtype=torch.float64)
            warm = torch.tensor(C_WARM, dtype=torch.float64)
            axis = (warm - cool) / torch.sum((warm - cool) ** 2)
            return ((block.reshape(-1, 3).mean(dim=0) - cool) * axis).sum()
        if region == "band":
            tint_mean = sum(BAND_TINT) / 3.0
            return (block.mean() / tint_mean - GLOW_LO) / GLOW_SPAN
        if region == "stripes":
            variance = ((block - block.mean()) ** 2).mean()
            return torch.sqrt(2.0 * variance) / (STRIPE_LEVEL * STRIPE_AMP)
        raise InvalidInputError(f"region {region!r} has no measurable property")

    def score_t(self, image: torch.Tensor, phrases: Sequence[str]) -> torch.Tensor:
        measured: dict[str, torch.Tensor] = {}
        scores = []
        for phrase in phrases:
            entry = self._phrase_map.get(phrase)
            if entry is None:
                raise ScorerUnavailableError(f"phrase not in toy vocabulary: {phrase!r}")
            region, target, sharpness = entry
            if region not in measured:
                measured[region] = self.measure_t(image, region)
            scores.append(-sharpness * (measured[region] - target) ** 2)
        return torch.stack(scores)

    def score(self, image: np.ndarray, phrases: Sequence[str]) -> np.ndarray:
        with torch.no_grad():
            values = self.score_t(
                torch.as_tensor(np.asarray(image, dtype=np.float64)), phrases
            )
        return values.numpy()

    def score_batch(
        self, images: Sequence[np.ndarray], phrases: Sequence[str]
    ) -> np.ndarray:
        return np.stack([self.score(image, phrases) for image in images])
