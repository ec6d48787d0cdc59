"""Style-code containers and the pure algebra of masked channel edits.

A style code is one scalar per generator channel.  A learnable matrix of
attribute/channel affinities is normalized per channel into control
probabilities; summing the rows of the requested attributes gives a
per-channel mask that gates interpolation between a source and a reference
style code.

Every operation exists in two forms: a tensor form (``*_t``, torch-based,
differentiable, used by the trainer and gradient checks) and a public form
over the immutable dataclasses below.  The public form delegates to the
tensor form so there is a single arithmetic path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import torch

from .errors import InvalidInputError

OTHERS_ROW = "others"


def _frozen_f64(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.flags.writeable = False
    return arr


def _frozen_bool(values) -> np.ndarray:
    arr = np.array(values, dtype=bool)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class StyleCode:
    """Per-channel style parameters plus editability flags.

    Channels feeding color-conversion or upsampling layers of a backend do
    not control image content; they are kept in place (so indices line up
    with generator metadata) but flagged non-editable.
    """

    values: np.ndarray
    editable: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        values = _frozen_f64(self.values)
        if values.ndim != 1 or values.size < 1:
            raise InvalidInputError("style code must be a non-empty 1-D vector")
        if not np.isfinite(values).all():
            raise InvalidInputError("style code values must be finite")
        if self.editable is None:
            editable = _frozen_bool(np.ones(values.size, dtype=bool))
        else:
            editable = _frozen_bool(self.editable)
        if editable.shape != values.shape:
            raise InvalidInputError(
                f"editable flags have length {editable.size}, expected {values.size}"
            )
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "editable", editable)

    def __len__(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class MaskMatrix:
    """Unnormalized attribute/channel affinities, shape (m+1, n).

    Row ``m`` is the implicit catch-all row absorbing channels that no
    attribute should touch.  Columns of non-editable channels are frozen by
    the trainer; the container itself only checks shape and finiteness.
    """

    entries: np.ndarray
    attribute_names: tuple[str, ...]

    def __post_init__(self):
        entries = _frozen_f64(self.entries)
        names = tuple(self.attribute_names)
        if entries.ndim != 2:
            raise InvalidInputError("mask matrix must be 2-D")
        if len(names) < 1:
            raise InvalidInputError("at least one attribute is required")
        if len(set(names)) != len(names) or OTHERS_ROW in names:
            raise InvalidInputError("attribute names must be unique and not 'others'")
        if entries.shape[0] != len(names) + 1:
            raise InvalidInputError(
                f"matrix has {entries.shape[0]} rows, expected {len(names) + 1} "
                "(attributes plus the others row)"
            )
        if not np.isfinite(entries).all():
            raise InvalidInputError("mask matrix entries must be finite")
        object.__setattr__(self, "entries", entries)
        object.__setattr__(self, "attribute_names", names)

    @property
    def n_attributes(self) -> int:
        return len(self.attribute_names)

    @property
    def n_channels(self) -> int:
        return self.entries.shape[1]

    @property
    def others_row(self) -> int:
        return self.n_attributes

    def attribute_index(self, name: str) -> int:
        try:
            return self.attribute_names.index(name)
        except ValueError:
            raise InvalidInputError(f"unknown attribute {name!r}") from None


@dataclass(frozen=True)
class ControlProbabilities:
    """Column-stochastic control distribution over attributes per channel."""

    probs: np.ndarray

    def __post_init__(self):
        probs = _frozen_f64(self.probs)
        if probs.ndim != 2:
            raise InvalidInputError("control probabilities must be 2-D")
        if ((probs < 0) | (probs > 1)).any():
            raise InvalidInputError("control probabilities must lie in [0, 1]")
        col_sums = probs.sum(axis=0)
        if not np.allclose(col_sums, 1.0, rtol=0.0, atol=1e-9):
            raise InvalidInputError("control probability columns must sum to 1")
        object.__setattr__(self, "probs", probs)


@dataclass(frozen=True)
class AttributeMask:
    """Per-channel gate in [0, 1]; zero at non-editable channels."""

    mask: np.ndarray

    def __post_init__(self):
        mask = _frozen_f64(self.mask)
        if mask.ndim != 1:
            raise InvalidInputError("attribute mask must be 1-D")
        if ((mask < 0) | (mask > 1)).any():
            raise InvalidInputError("attribute mask entries must lie in [0, 1]")
        object.__setattr__(self, "mask", mask)


# ---------------------------------------------------------------------------
# Tensor forms (differentiable path)
# ---------------------------------------------------------------------------

def control_probabilities_t(entries: torch.Tensor) -> torch.Tensor:
    """Column-wise softmax over the attribute dimension, max-subtracted."""
    shifted = entries - entries.max(dim=0, keepdim=True).values
    weights = torch.exp(shifted)
    return weights / weights.sum(dim=0, keepdim=True)


def attribute_mask_t(
    probs: torch.Tensor, omega: Sequence[int], editable: torch.Tensor
) -> torch.Tensor:
    """Sum the selected attribute rows and zero non-editable channels."""
    n = probs.shape[1]
    if len(omega) == 0:
        return torch.zeros(n, dtype=probs.dtype)
    rows = torch.as_tensor(list(omega), dtype=torch.long)
    mask = probs.index_select(0, rows).sum(dim=0)
    return mask * editable.to(probs.dtype)


def edit_style_code_t(
    src: torch.Tensor, ref: torch.Tensor, mask: torch.Tensor, delta: float
) -> torch.Tensor:
    """Move the source along the masked source-to-reference direction."""
    return src + (ref - src) * mask * delta


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def control_probabilities(matrix: MaskMatrix) -> ControlProbabilities:
    """Normalize each channel's affinity column into a distribution.

    Equal affinities map to equal probabilities, and adding a constant to a
    column leaves its output column bitwise unchanged.
    """
    entries = torch.from_numpy(np.array(matrix.entries))
    return ControlProbabilities(control_probabilities_t(entries).numpy())


def _check_omega(omega: Iterable[int], n_attributes: int) -> tuple[int, ...]:
    indices = tuple(int(i) for i in omega)
    for i in indices:
        if i < 0 or i >= n_attributes:
            raise InvalidInputError(
                f"attribute index {i} outside [0, {n_attributes}); "
                "the others row cannot be targeted"
            )
    if len(set(indices)) != len(indices):
        raise InvalidInputError("duplicate attribute indices in target set")
    return indices


def attribute_mask(
    probs: ControlProbabilities, omega: Iterable[int], editable: np.ndarray
) -> AttributeMask:
    """Build the per-channel edit gate for a target attribute set.

    ``omega`` holds attribute row indices; the catch-all row is not a valid
    target.  Non-editable channels are forced to zero.
    """
    n_attributes = probs.probs.shape[0] - 1
    indices = _check_omega(omega, n_attributes)
    editable = np.asarray(editable, dtype=bool)
    if editable.shape != (probs.probs.shape[1],):
        raise InvalidInputError("editable flags must have one entry per channel")
    mask = attribute_mask_t(
        torch.from_numpy(np.array(probs.probs)),
        indices,
        torch.from_numpy(editable.copy()),
    )
    return AttributeMask(mask.numpy())


def edit_style_code(
    s_src: StyleCode, s_ref: StyleCode, mask: AttributeMask, delta: float
) -> StyleCode:
    """Interpolate source toward reference on masked channels, scaled by
    the editing intensity.

    At ``delta == 1`` and an all-ones mask this reproduces plain
    interpolation endpoints; intensity beyond 1 extrapolates along the same
    direction.  Editability flags are copied from the source.
    """
    if len(s_src) != len(s_ref) or len(s_src) != mask.mask.size:
        raise InvalidInputError(
            f"length mismatch: source {len(s_src)}, reference {len(s_ref)}, "
            f"mask {mask.mask.size}"
        )
    if not np.isfinite(delta):
        raise InvalidInputError("editing intensity must be finite")
    edited = edit_style_code_t(
        torch.from_numpy(np.array(s_src.values)),
        torch.from_numpy(np.array(s_ref.values)),
        torch.from_numpy(np.array(mask.mask)),
        float(delta),
    )
    return StyleCode(edited.numpy(), s_src.editable)
