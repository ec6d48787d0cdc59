"""Descriptor-group scoring of images.

Attributes are described by groups of short phrases acting as soft class
labels.  A pluggable image-text scorer turns an image plus a phrase list
into correlation scores; softmax over a group's scores yields a probability
vector that quantifies where the image sits along that characteristic.
The L1 gap between two images' vectors, summed over an attribute's groups,
is the attribute distance used throughout training and reporting.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Protocol, Sequence, runtime_checkable

import numpy as np
import torch
import yaml

from .errors import InvalidInputError, ScorerUnavailableError


@dataclass(frozen=True)
class DescriptorGroup:
    """An ordered set of phrases jointly describing one characteristic.

    ``template`` carries exactly one ``{}`` placeholder and is applied to
    every phrase before scoring, so configs store bare phrases.  ``extra``
    holds scorer-specific hints (e.g. target property values for the
    analytic toy scorer) and is ignored by real scorers.
    """

    phrases: tuple[str, ...]
    template: str = "{}"
    extra: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        phrases = tuple(str(p) for p in self.phrases)
        if len(phrases) < 2:
            raise InvalidInputError("a descriptor group needs at least two phrases")
        if any(not p.strip() for p in phrases):
            raise InvalidInputError("descriptor phrases must be non-empty")
        if len(set(phrases)) != len(phrases):
            raise InvalidInputError("descriptor phrases must be pairwise distinct")
        if self.template.count("{}") != 1:
            raise InvalidInputError("template must contain exactly one {} placeholder")
        object.__setattr__(self, "phrases", phrases)

    def templated(self) -> tuple[str, ...]:
        return tuple(self.template.format(p) for p in self.phrases)


@dataclass(frozen=True)
class AttributeSpec:
    """A named attribute: its descriptor groups, alterable region, and the
    channel pre-selection budget / initialization weight."""

    name: str
    groups: tuple[DescriptorGroup, ...]
    region: str
    preselect_k: int = 0
    init_weight: float = 1.0

    def __post_init__(self):
        groups = tuple(self.groups)
        if not self.name:
            raise InvalidInputError("attribute name must be non-empty")
        if len(groups) < 1:
            raise InvalidInputError(f"attribute {self.name!r} needs a descriptor group")
        if self.preselect_k < 0:
            raise InvalidInputError("pre-selection budget must be non-negative")
        object.__setattr__(self, "groups", groups)


@dataclass(frozen=True)
class AttributeProbability:
    """Softmax-normalized correlation scores for one descriptor group."""

    probs: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probs, dtype=np.float64)
        probs.flags.writeable = False
        if probs.ndim != 1:
            raise InvalidInputError("attribute probability must be a vector")
        if ((probs < 0) | (probs > 1)).any() or abs(probs.sum() - 1.0) > 1e-9:
            raise InvalidInputError("attribute probability must be a distribution")
        object.__setattr__(self, "probs", probs)


@runtime_checkable
class ImageTextScorer(Protocol):
    """Image-text relevance scorer.

    Implementations must be deterministic for identical inputs and return
    one score per phrase.  ``score_batch`` returns row-aligned results, one
    row per image.  ``differentiable`` advertises whether ``score_t`` is
    available for gradient-based training.
    """

    differentiable: bool

    def score(self, image: np.ndarray, phrases: Sequence[str]) -> np.ndarray:
        ...

    def score_batch(
        self, images: Sequence[np.ndarray], phrases: Sequence[str]
    ) -> np.ndarray:
        ...

    def score_t(self, image: torch.Tensor, phrases: Sequence[str]) -> torch.Tensor:
        ...


# ---------------------------------------------------------------------------
# Scoring operations
# ---------------------------------------------------------------------------

def classify_t(
    image: torch.Tensor, group: DescriptorGroup, scorer: ImageTextScorer
) -> torch.Tensor:
    """Differentiable classification: softmax over templated-phrase scores."""
    try:
        scores = scorer.score_t(image, group.templated())
    except ScorerUnavailableError:
        raise
    except Exception as exc:
        raise ScorerUnavailableError(f"scorer failed: {exc}") from exc
    return torch.softmax(scores, dim=0)


def classify(
    image: np.ndarray, group: DescriptorGroup, scorer: ImageTextScorer
) -> AttributeProbability:
    """Classify an image against one descriptor group.

    The group's template is applied to every phrase before scoring; the
    scorer's correlation vector is softmax-normalized.  Scorer failures
    surface as :class:`ScorerUnavailableError`.
    """
    try:
        scores = np.asarray(scorer.score(image, group.templated()), dtype=np.float64)
    except ScorerUnavailableError:
        raise
    except Exception as exc:
        raise ScorerUnavailableError(f"scorer failed: {exc}") from exc
    if scores.shape != (len(group.phrases),):
        raise ScorerUnavailableError(
            f"scorer returned {scores.shape}, expected one score per phrase"
        )
    probs = torch.softmax(torch.from_numpy(scores), dim=0).numpy()
    return AttributeProbability(probs)


def attribute_distance_t(
    image_a: torch.Tensor,
    image_b: torch.Tensor,
    spec: AttributeSpec,
    scorer: ImageTextScorer,
) -> torch.Tensor:
    """Differentiable attribute distance (L1 over groups' distributions)."""
    total = torch.zeros((), dtype=torch.float64)
    for group in spec.groups:
        pa = classify_t(image_a, group, scorer)
        pb = classify_t(image_b, group, scorer)
        total = total + torch.abs(pa - pb).sum()
    return total


def attribute_distance(
    image_a: np.ndarray,
    image_b: np.ndarray,
    spec: AttributeSpec,
    scorer: ImageTextScorer,
) -> float:
    """How differently two images express one attribute.

    Sums, over the attribute's descriptor groups, the L1 gap between the
    two images' classification vectors.  Symmetric, non-negative, zero for
    identical images, and bounded by two per group.
    """
    total = 0.0
    for group in spec.groups:
        pa = classify(image_a, group, scorer).probs
        pb = classify(image_b, group, scorer).probs
        total += float(np.abs(pa - pb).sum())
    return total


# ---------------------------------------------------------------------------
# Attribute catalog configuration
# ---------------------------------------------------------------------------

_GROUP_HINT_KEYS = ("targets", "sharpness")


@dataclass(frozen=True)
class AttributeCatalog:
    """Ordered collection of attribute specs loaded from config."""

    attributes: tuple[AttributeSpec, ...]

    def __post_init__(self):
        attributes = tuple(self.attributes)
        names = [a.name for a in attributes]
        if len(attributes) < 1:
            raise InvalidInputError("catalog must define at least one attribute")
        if len(set(names)) != len(names):
            raise InvalidInputError("attribute names must be unique")
        object.__setattr__(self, "attributes", attributes)

    def __iter__(self):
        return iter(self.attributes)

    def __len__(self) -> int:
        return len(self.attributes)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(a.name for a in self.attributes)

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise InvalidInputError(f"unknown attribute {name!r}") from None

    def by_name(self, name: str) -> AttributeSpec:
        return self.attributes[self.index(name)]


def _parse_group(raw: dict, template: str) -> DescriptorGroup:
    extra = {k: raw[k] for k in _GROUP_HINT_KEYS if k in raw}
    return DescriptorGroup(
        phrases=tuple(raw["phrases"]),
        template=raw.get("template", template),
        extra=extra,
    )


def load_attribute_catalog(path: str | Path) -> AttributeCatalog:
    """Load an attribute catalog from a YAML file.

    Schema::

        template: "a scene with {}"        # optional default
        attributes:
          - name: warmth                   # stable key, referenced by checkpoints
            region: sky                    # alterable-region label
            preselect_k: 4                 # channel pre-selection budget
            init_weight: 1.0               # initial affinity of pre-selected channels
            template: "..."                # optional, overrides the default
            groups:
              - phrases: [one, two, three]
                targets: [0.1, 0.5, 0.9]   # optional scorer hints
                sharpness: 8.0
    """
    raw = yaml.safe_load(Path(path).read_text())
    if not isinstance(raw, dict) or "attributes" not in raw:
        raise InvalidInputError(f"{path}: expected a mapping with an 'attributes' list")
    default_template = raw.get("template", "{}")
    specs = []
    for entry in raw["attributes"]:
        template = entry.get("template", default_template)
        groups = tuple(_parse_group(g, template) for g in entry.get("groups", ()))
        specs.append(
            AttributeSpec(
                name=str(entry["name"]),
                groups=groups,
                region=str(entry.get("region", "")),
                preselect_k=int(entry.get("preselect_k", 0)),
                init_weight=float(entry.get("init_weight", 1.0)),
            )
        )
    return AttributeCatalog(tuple(specs))


def resolve_omega(catalog: AttributeCatalog, names: Iterable[str]) -> tuple[int, ...]:
    """Map attribute names to row indices, rejecting unknown names."""
    return tuple(catalog.index(n) for n in names)
