"""Inference-time editing: single edits, intensity sweeps, and sequential
multi-attribute transfer, each returning a per-attribute distance report.

Editing is a pure function of (checkpoint, source, reference, targets,
intensity): the trained matrix gives per-channel control probabilities,
targeted rows are summed into a mask, and the source code moves toward
the reference along the masked direction.  The report measures, via the
descriptor-group scorer, how close the edit landed to the reference on
targeted attributes and how far it strayed from the source on the rest.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .backends.base import Backends
from .errors import InvalidInputError
from .qmm import attribute_distance, resolve_omega
from .stylespace import AttributeMask, StyleCode, attribute_mask, control_probabilities, edit_style_code
from .trainer import Checkpoint

# The useful intensity band observed at inference time; training uses 1.
DELTA_DEFAULT = 1.0
DELTA_SWEEP_GRID = (1.0, 1.25, 1.5, 1.75, 2.0, 2.25)
DELTA_BOUNDS = (0.0, 3.0)


@dataclass(frozen=True)
class EditRequest:
    """A single edit: where to start, what to copy, how strongly."""

    s_src: StyleCode
    s_ref: StyleCode
    omega: tuple[str, ...]
    delta: float = DELTA_DEFAULT

    def __post_init__(self):
        omega = tuple(self.omega)
        if not omega:
            raise InvalidInputError("target attribute set must be non-empty")
        if len(set(omega)) != len(omega):
            raise InvalidInputError("duplicate attribute names in target set")
        if not np.isfinite(self.delta):
            raise InvalidInputError("editing intensity must be finite")
        object.__setattr__(self, "omega", omega)


@dataclass(frozen=True)
class AttributeReading:
    """One report row: targeted attributes are measured against the
    reference, untargeted ones against the source."""

    name: str
    targeted: bool
    distance: float

    def __post_init__(self):
        if self.distance < 0:
            raise InvalidInputError("distances are non-negative")


@dataclass(frozen=True)
class EditResult:
    s_edit: StyleCode
    image: np.ndarray
    mask: AttributeMask
    delta: float
    omega: tuple[str, ...]
    report: tuple[AttributeReading, ...] = field(default=())

    def reading(self, name: str) -> AttributeReading:
        for row in self.report:
            if row.name == name:
                return row
        raise InvalidInputError(f"no reading for attribute {name!r}")


def _measure(
    backends: Backends,
    image_edit: np.ndarray,
    image_src: np.ndarray,
    image_ref: np.ndarray,
    omega: tuple[str, ...],
) -> tuple[AttributeReading, ...]:
    rows = []
    for spec in backends.catalog:
        targeted = spec.name in omega
        against = image_ref if targeted else image_src
        rows.append(
            AttributeReading(
                name=spec.name,
                targeted=targeted,
                distance=attribute_distance(image_edit, against, spec, backends.scorer),
            )
        )
    return tuple(rows)


def measure_pair(
    backends: Backends, image_a: np.ndarray, image_b: np.ndarray
) -> dict[str, float]:
    """Distance between two images on every cataloged attribute."""
    return {
        spec.name: attribute_distance(image_a, image_b, spec, backends.scorer)
        for spec in backends.catalog
    }


def edit(request: EditRequest, checkpoint: Checkpoint, backends: Backends) -> EditResult:
    """Apply one masked edit and report per-attribute distances.

    The checkpoint's attribute names must cover the requested targets.
    Inputs are never mutated; identical requests give identical results.
    """
    catalog = backends.catalog
    if tuple(checkpoint.attribute_names) != catalog.names:
        raise InvalidInputError("checkpoint attributes do not match the catalog")
    indices = resolve_omega(catalog, request.omega)
    probs = control_probabilities(checkpoint.mask_matrix())
    mask = attribute_mask(probs, indices, backends.generator.editable)
    s_edit = edit_style_code(request.s_src, request.s_ref, mask, request.delta)
    image_edit = backends.generator.synthesize(s_edit)
    image_src = backends.generator.synthesize(request.s_src)
    image_ref = backends.generator.synthesize(request.s_ref)
    report = _measure(backends, image_edit, image_src, image_ref, request.omega)
    return EditResult(
        s_edit=s_edit,
        image=image_edit,
        mask=mask,
        delta=request.delta,
        omega=request.omega,
        report=report,
    )


def sweep(
    s_src: StyleCode,
    s_ref: StyleCode,
    omega: Sequence[str],
    deltas: Sequence[float],
    checkpoint: Checkpoint,
    backends: Backends,
) -> list[EditResult]:
    """One edit per intensity, in the given order.

    The default grid spans the band that tends to look right at inference
    time; pass ``deltas`` explicitly for anything else.
    """
    if len(deltas) == 0:
        raise InvalidInputError("sweep needs at least one intensity")
    return [
        edit(EditRequest(s_src=s_src, s_ref=s_ref, omega=tuple(omega), delta=float(d)), checkpoint, backends)
        for d in deltas
    ]


def sequential_edit(
    s_src: StyleCode,
    s_ref: StyleCode,
    omega_list: Sequence[Sequence[str]],
    delta_list: Sequence[float],
    checkpoint: Checkpoint,
    backends: Backends,
) -> list[EditResult]:
    """Apply edits one target set at a time, rebasing the source on each
    result while the reference stays fixed.

    This is the progressive multi-attribute construction; a combined
    single-call edit with the union target set is the parallel variant.
    """
    if len(omega_list) != len(delta_list):
        raise InvalidInputError("need one intensity per edit step")
    results: list[EditResult] = []
    current = s_src
    for omega, delta in zip(omega_list, delta_list):
        step = edit(
            EditRequest(s_src=current, s_ref=s_ref, omega=tuple(omega), delta=float(delta)),
            checkpoint,
            backends,
        )
        results.append(step)
        current = step.s_edit
    return results
