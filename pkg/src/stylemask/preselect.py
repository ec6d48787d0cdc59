"""Gradient-attribution ranking of style channels per semantic region, and
mask-matrix initialization from the picked channels.

For complex attributes it is wasteful to discover relevant channels from
scratch, so we sample latents, synthesize, feed each region's binary mask
in as the image gradient, and record per-channel absolute gradients
normalized by region size.  Averaged over iterations and L1-normalized
along the region dimension, the table says *where* each channel acts;
the top-k channels of an attribute's region seed its matrix row.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
import torch

from .errors import InvalidInputError
from .qmm import AttributeSpec
from .stylespace import MaskMatrix
from .backends.base import GeneratorBackend, RegionSegmenter


@dataclass(frozen=True)
class AttributionTable:
    """Per (channel, region) attribution scores.

    Rows are L1-normalized over regions, so each row reads as "what share
    of this channel's influence lands in each region"; channels with no
    influence anywhere keep an all-zero row.
    """

    scores: np.ndarray
    regions: tuple[str, ...]
    editable: np.ndarray
    iterations: int

    def __post_init__(self):
        scores = np.array(self.scores, dtype=np.float64)
        scores.flags.writeable = False
        editable = np.array(self.editable, dtype=bool)
        editable.flags.writeable = False
        if scores.ndim != 2 or scores.shape[1] != len(self.regions):
            raise InvalidInputError("scores must be (channels x regions)")
        if scores.shape[0] != editable.size:
            raise InvalidInputError("editable flags must cover every channel")
        if not np.isfinite(scores).all() or (scores < 0).any():
            raise InvalidInputError("attribution scores must be finite and >= 0")
        if self.iterations < 1:
            raise InvalidInputError("attribution needs at least one iteration")
        object.__setattr__(self, "scores", scores)
        object.__setattr__(self, "editable", editable)
        object.__setattr__(self, "regions", tuple(self.regions))

    def region_index(self, region: str) -> int:
        try:
            return self.regions.index(region)
        except ValueError:
            raise InvalidInputError(f"unknown region {region!r}") from None


def accumulate_attribution(
    gen: GeneratorBackend,
    seg: RegionSegmenter,
    iters: int,
    seed: int,
) -> AttributionTable:
    """Accumulate region-driven gradients over ``iters`` sampled latents.

    Per iteration and region, the binary region mask (broadcast over color
    channels) is set as the image gradient and back-propagated to the
    style tensor; absolute gradients are divided by the region's pixel
    count.  Regions empty in an iteration contribute nothing for it.
    """
    if iters < 1:
        raise InvalidInputError("iters must be >= 1")
    if not gen.differentiable:
        raise InvalidInputError("attribution needs a differentiable generator")
    regions = seg.regions()
    acc = np.zeros((gen.n_channels, len(regions)), dtype=np.float64)
    for it in range(iters):
        z, pose = gen.sample_latent((seed, it))
        code = gen.to_style(z, pose)
        values = torch.from_numpy(np.array(code.values)).requires_grad_(True)
        image = gen.synthesize_t(values)
        masks = seg.segment(image.detach().numpy())
        for r, region in enumerate(regions):
            mask = np.asarray(masks[region], dtype=np.float64)
            count = mask.sum()
            if count == 0:
                continue
            seed_grad = torch.from_numpy(mask)
            if image.ndim == 3:
                seed_grad = seed_grad.unsqueeze(-1).expand_as(image)
            (grad,) = torch.autograd.grad(
                image, values, grad_outputs=seed_grad, retain_graph=(r < len(regions) - 1)
            )
            acc[:, r] += np.abs(grad.numpy()) / count
    acc /= iters
    row_mass = acc.sum(axis=1, keepdims=True)
    normalized = np.divide(acc, row_mass, out=np.zeros_like(acc), where=row_mass > 0)
    return AttributionTable(
        scores=normalized, regions=regions, editable=gen.editable, iterations=iters
    )


def topk_channels(table: AttributionTable, region: str, k: int) -> list[int]:
    """Editable channels with the largest score in ``region``.

    Sorted by score descending, ties broken by ascending channel index,
    truncated to ``k``.
    """
    if k < 0:
        raise InvalidInputError("k must be >= 0")
    col = table.region_index(region)
    candidates = [i for i in range(table.scores.shape[0]) if table.editable[i]]
    ranked = sorted(candidates, key=lambda i: (-table.scores[i, col], i))
    return ranked[:k]


def init_mask_matrix(
    n_channels: int,
    specs: Sequence[AttributeSpec],
    preselected: Mapping[str, Sequence[int]],
    editable: np.ndarray,
) -> MaskMatrix:
    """Build the starting affinity matrix.

    Everything starts at zero; a channel pre-selected by attribute ``t``
    gets that attribute's ``init_weight`` in row ``t``, and every other
    channel (non-editable ones included) gets 1 in the catch-all row.
    A channel claimed by two attributes is a configuration error.
    """
    editable = np.asarray(editable, dtype=bool)
    if editable.shape != (n_channels,):
        raise InvalidInputError("editable flags must have one entry per channel")
    names = [s.name for s in specs]
    for name in preselected:
        if name not in names:
            raise InvalidInputError(f"pre-selection references unknown attribute {name!r}")
    entries = np.zeros((len(specs) + 1, n_channels), dtype=np.float64)
    owner: dict[int, str] = {}
    for t, spec in enumerate(specs):
        for ch in preselected.get(spec.name, ()):
            ch = int(ch)
            if ch < 0 or ch >= n_channels:
                raise InvalidInputError(f"pre-selected channel {ch} out of range")
            if not editable[ch]:
                raise InvalidInputError(f"channel {ch} is non-editable and cannot be pre-selected")
            if ch in owner:
                raise InvalidInputError(
                    f"channel {ch} pre-selected by both {owner[ch]!r} and {spec.name!r}"
                )
            owner[ch] = spec.name
            entries[t, ch] = spec.init_weight
    for ch in range(n_channels):
        if ch not in owner:
            entries[len(specs), ch] = 1.0
    return MaskMatrix(entries, tuple(names))


@dataclass(frozen=True)
class PreselectResult:
    """CLI artifact: the attribution table plus per-attribute channel picks."""

    table: AttributionTable
    channels: dict[str, tuple[int, ...]]
    seed: int

    def to_dict(self) -> dict:
        return {
            "format_version": 1,
            "seed": self.seed,
            "iterations": self.table.iterations,
            "regions": list(self.table.regions),
            "editable": [bool(b) for b in self.table.editable],
            "scores": self.table.scores.tolist(),
            "channels": {k: list(v) for k, v in self.channels.items()},
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def from_dict(cls, raw: dict) -> "PreselectResult":
        table = AttributionTable(
            scores=np.array(raw["scores"], dtype=np.float64),
            regions=tuple(raw["regions"]),
            editable=np.array(raw["editable"], dtype=bool),
            iterations=int(raw["iterations"]),
        )
        channels = {k: tuple(int(c) for c in v) for k, v in raw["channels"].items()}
        return cls(table=table, channels=channels, seed=int(raw["seed"]))

    @classmethod
    def load(cls, path: str | Path) -> "PreselectResult":
        return cls.from_dict(json.loads(Path(path).read_text()))


def preselect_channels(
    gen: GeneratorBackend,
    seg: RegionSegmenter,
    specs: Sequence[AttributeSpec],
    iters: int,
    seed: int,
) -> PreselectResult:
    """Run attribution and pick each attribute's budgeted channels."""
    table = accumulate_attribution(gen, seg, iters, seed)
    channels: dict[str, tuple[int, ...]] = {}
    for spec in specs:
        if spec.preselect_k > 0:
            channels[spec.name] = tuple(topk_channels(table, spec.region, spec.preselect_k))
    return PreselectResult(table=table, channels=channels, seed=seed)
