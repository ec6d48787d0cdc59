"""Adapters for real pre-trained models behind the backend interfaces.

These are excluded from the verification gate: they need external weight
files that do not ship with the repository.  Each adapter documents the
artifacts it expects and fails with :class:`BackendUnavailableError` when
they are absent, so callers can fall back or report cleanly.

Expected manifest ``params``:

* generator: ``weights`` - a TorchScript archive exposing ``mapping(z, pose)
  -> style`` and ``synthesis(style) -> image`` (image float, [0, 1], HWC).
* segmenter: ``segmenter_weights`` - a TorchScript face-parsing model
  returning per-pixel region logits; ``regions`` - ordered label list.
* scorer: ``scorer_dir`` - a local directory with a contrastive image-text
  model in huggingface layout (config + weights + processor).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
import torch

from ..errors import BackendUnavailableError
from ..stylespace import StyleCode
from .base import BackendManifest


def _require_file(path_value, what: str, hint: str) -> Path:
    if not path_value:
        raise BackendUnavailableError(f"{what} not configured; {hint}")
    path = Path(path_value)
    if not path.exists():
        raise BackendUnavailableError(f"{what} missing at {path}; {hint}")
    return path


class PretrainedGeneratorAdapter:
    """3D-aware style-based generator loaded from a TorchScript archive."""

    differentiable = True

    def __init__(self, manifest: BackendManifest):
        self._manifest = manifest
        weights = _require_file(
            manifest.params.get("weights"),
            "generator weights",
            "export the pre-trained generator to TorchScript with "
            "`mapping` and `synthesis` methods and set params.weights",
        )
        try:
            self._module = torch.jit.load(str(weights), map_location="cpu")
        except Exception as exc:
            raise BackendUnavailableError(f"cannot load generator weights: {exc}") from exc
        self._latent_dim = int(manifest.params.get("latent_dim", 512))

    @property
    def n_channels(self) -> int:
        return self._manifest.n_channels

    @property
    def editable(self) -> np.ndarray:
        return self._manifest.editable

    @property
    def manifest(self) -> BackendManifest:
        return self._manifest

    def sample_latent(self, seed):
        rng = np.random.default_rng(seed)
        z = rng.standard_normal(self._latent_dim)
        # Yaw/pitch perturbation around the frontal camera.
        pose = rng.uniform(-0.35, 0.35, size=2)
        return z, pose

    def to_style(self, z: np.ndarray, pose: np.ndarray) -> StyleCode:
        with torch.no_grad():
            style = self._module.mapping(
                torch.as_tensor(z, dtype=torch.float32).unsqueeze(0),
                torch.as_tensor(pose, dtype=torch.float32).unsqueeze(0),
            )
        return StyleCode(style.squeeze(0).double().numpy(), self._manifest.editable)

    def synthesize(self, code: StyleCode) -> np.ndarray:
        with torch.no_grad():
            image = self.synthesize_t(torch.as_tensor(code.values))
        return image.numpy()

    def synthesize_t(self, values: torch.Tensor) -> torch.Tensor:
        image = self._module.synthesis(values.to(torch.float32).unsqueeze(0)).squeeze(0)
        return image.to(torch.float64).clamp(0.0, 1.0)


class PretrainedSegmenterAdapter:
    """Face-parsing segmenter wrapping a TorchScript region model."""

    def __init__(self, manifest: BackendManifest):
        self._manifest = manifest
        self._labels = tuple(manifest.params.get("regions", ()))
        if not self._labels:
            raise BackendUnavailableError(
                "segmenter regions not configured; set params.regions to the label order"
            )
        weights = _require_file(
            manifest.params.get("segmenter_weights"),
            "segmenter weights",
            "export the parsing network to TorchScript and set params.segmenter_weights",
        )
        try:
            self._module = torch.jit.load(str(weights), map_location="cpu")
        except Exception as exc:
            raise BackendUnavailableError(f"cannot load segmenter weights: {exc}") from exc

    def regions(self) -> tuple[str, ...]:
        return self._labels

    def segment(self, image: np.ndarray) -> dict[str, np.ndarray]:
        with torch.no_grad():
            logits = self._module(
                torch.as_tensor(image, dtype=torch.float32).permute(2, 0, 1).unsqueeze(0)
            ).squeeze(0)
        labels = logits.argmax(dim=0).numpy()
        return {name: (labels == i).astype(np.int8) for i, name in enumerate(self._labels)}


class PretrainedScorerAdapter:
    """Contrastive image-text scorer loaded from a local model directory."""

    differentiable = False

    def __init__(self, manifest: BackendManifest):
        model_dir = _require_file(
            manifest.params.get("scorer_dir"),
            "scorer model directory",
            "download the contrastive image-text model locally and set params.scorer_dir",
        )
        try:
            from transformers import CLIPModel, CLIPProcessor  # deferred heavy import

            self._model = CLIPModel.from_pretrained(str(model_dir))
            self._processor = CLIPProcessor.from_pretrained(str(model_dir))
            self._model.eval()
        except Exception as exc:
            raise BackendUnavailableError(f"cannot load scorer from {model_dir}: {exc}") from exc

    def score(self, image: np.ndarray, phrases: Sequence[str]) -> np.ndarray:
        return self.score_batch([image], phrases)[0]

    def score_batch(self, images, phrases: Sequence[str]) -> np.ndarray:
        arrays = [np.clip(np.asarray(im) * 255.0, 0, 255).astype(np.uint8) for im in images]
        inputs = self._processor(
            text=list(phrases), images=arrays, return_tensors="pt", padding=True
        )
        with torch.no_grad():
            out = self._model(**inputs)
        return out.logits_per_image.double().numpy()

    def score_t(self, image: torch.Tensor, phrases: Sequence[str]) -> torch.Tensor:
        raise BackendUnavailableError(
            "the pre-trained scorer adapter does not expose gradients; "
            "train against the analytic toy scorer or a differentiable adapter"
        )
