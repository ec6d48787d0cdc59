"""Backend interfaces and the manifest that describes a generator setup.

A generator backend exposes latent sampling, the latent-to-style mapping,
and deterministic synthesis; a segmenter exposes named binary region
masks.  Real pre-trained models plug in behind these protocols via
adapters; the toy backend implements them analytically for verification.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, runtime_checkable

import numpy as np
import torch
import yaml

from ..errors import InvalidInputError
from ..qmm import AttributeCatalog, ImageTextScorer
from ..stylespace import StyleCode


@runtime_checkable
class GeneratorBackend(Protocol):
    """Style-based generator boundary.

    ``synthesize`` must be deterministic given the style code, and the
    editability layout constant for a backend instance.  Backends that
    support gradient-based training set ``differentiable`` and implement
    ``synthesize_t`` over a raw style tensor.
    """

    differentiable: bool

    @property
    def n_channels(self) -> int: ...

    @property
    def editable(self) -> np.ndarray: ...

    @property
    def manifest(self) -> "BackendManifest": ...

    def sample_latent(self, seed) -> tuple[np.ndarray, np.ndarray]: ...

    def to_style(self, z: np.ndarray, pose: np.ndarray) -> StyleCode: ...

    def synthesize(self, code: StyleCode) -> np.ndarray: ...

    def synthesize_t(self, values: torch.Tensor) -> torch.Tensor: ...


@runtime_checkable
class RegionSegmenter(Protocol):
    """Named binary region masks over generated images."""

    def regions(self) -> tuple[str, ...]: ...

    def segment(self, image: np.ndarray) -> dict[str, np.ndarray]: ...


@dataclass(frozen=True)
class BackendManifest:
    """Serializable description of a generator setup.

    ``params`` carries backend-specific configuration (toy world geometry,
    or weight paths for real adapters).  The manifest travels inside
    checkpoints so any artifact can rebuild the backend it was trained
    against.
    """

    backend: str
    model_id: str
    n_channels: int
    image_size: int
    non_editable: tuple[int, ...] = ()
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.n_channels < 1:
            raise InvalidInputError("manifest needs at least one channel")
        bad = [i for i in self.non_editable if i < 0 or i >= self.n_channels]
        if bad:
            raise InvalidInputError(f"non-editable indices out of range: {bad}")
        object.__setattr__(self, "non_editable", tuple(int(i) for i in self.non_editable))

    @property
    def editable(self) -> np.ndarray:
        flags = np.ones(self.n_channels, dtype=bool)
        flags[list(self.non_editable)] = False
        return flags

    def to_dict(self) -> dict[str, Any]:
        return {
            "backend": self.backend,
            "model_id": self.model_id,
            "n_channels": self.n_channels,
            "image_size": self.image_size,
            "non_editable": list(self.non_editable),
            "params": self.params,
        }

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "BackendManifest":
        return cls(
            backend=str(raw["backend"]),
            model_id=str(raw["model_id"]),
            n_channels=int(raw["n_channels"]),
            image_size=int(raw["image_size"]),
            non_editable=tuple(raw.get("non_editable", ())),
            params=dict(raw.get("params", {})),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))

    @classmethod
    def load(cls, path: str | Path) -> "BackendManifest":
        return cls.from_dict(yaml.safe_load(Path(path).read_text()))

    @property
    def manifest_id(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class Backends:
    """Everything the trainer/editor needs: generator, segmenter, scorer,
    and the attribute catalog they were configured with."""

    generator: GeneratorBackend
    segmenter: RegionSegmenter
    scorer: ImageTextScorer
    catalog: AttributeCatalog


def build_backends(manifest: BackendManifest, catalog: AttributeCatalog) -> Backends:
    """Instantiate the backend family named by a manifest."""
    if manifest.backend == "toy":
        from .toy import ToyGenerator, ToyScorer, ToySegmenter, ToyWorld

        world = ToyWorld.from_manifest(manifest)
        return Backends(
            generator=ToyGenerator(world),
            segmenter=ToySegmenter(world),
            scorer=ToyScorer(world, catalog),
            catalog=catalog,
        )
    if manifest.backend == "eg3d":
        from .adapters import PretrainedGeneratorAdapter, PretrainedScorerAdapter, PretrainedSegmenterAdapter

        return Backends(
            generator=PretrainedGeneratorAdapter(manifest),
            segmenter=PretrainedSegmenterAdapter(manifest),
            scorer=PretrainedScorerAdapter(manifest),
            catalog=catalog,
        )
    raise InvalidInputError(f"unknown backend {manifest.backend!r}")


def image_to_unit(image: np.ndarray) -> np.ndarray:
    """Coerce an image to float64 in [0, 1] (backends' documented range)."""
    arr = np.asarray(image, dtype=np.float64)
    if arr.min() < 0 or arr.max() > 1:
        raise InvalidInputError("image values must lie in [0, 1]")
    return arr
