"""Editing behavior on trained and synthetic checkpoints."""

import numpy as np
import pytest

from stylemask import InvalidInputError, attribute_distance
from stylemask.editor import (
    DELTA_SWEEP_GRID,
    EditRequest,
    edit,
    measure_pair,
    sequential_edit,
    sweep,
)
from stylemask.losses import LossWeights
from stylemask.stylespace import attribute_mask, control_probabilities
from stylemask.trainer import Checkpoint

from conftest import sample_pair


@pytest.fixture(scope="module")
def hard_checkpoint(backends, world):
    """Synthetic checkpoint with exactly one-hot columns: each attribute
    owns its planted channels outright, so masks have disjoint support."""
    n = backends.generator.n_channels
    entries = np.zeros((4, n))
    entries[3, :] = 700.0
    region_of = {"warmth": "sky", "glow": "band", "ripple": "stripes"}
    for t, name in enumerate(backends.catalog.names):
        for ch in world.planted[region_of[name]]:
            entries[3, ch] = 0.0
            entries[t, ch] = 700.0
    return Checkpoint(
        matrix=entries,
        attribute_names=backends.catalog.names,
        manifest=backends.generator.manifest,
        weights=LossWeights(),
        step=0,
        seed=0,
    )


class TestEdit:
    def test_zero_intensity_reproduces_source_pixels(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 0)
        result = edit(
            EditRequest(s_src=s_src, s_ref=s_ref, omega=("warmth",), delta=0.0),
            trained_checkpoint,
            backends,
        )
        assert np.array_equal(result.image, backends.generator.synthesize(s_src))

    def test_non_editable_channels_keep_source_values(self, backends, trained_checkpoint, world):
        s_src, s_ref = sample_pair(backends, 1)
        result = edit(
            EditRequest(s_src=s_src, s_ref=s_ref, omega=("glow",), delta=1.5),
            trained_checkpoint,
            backends,
        )
        idx = list(world.non_editable)
        assert np.array_equal(result.s_edit.values[idx], s_src.values[idx])

    def test_trained_edit_moves_toward_reference(self, backends, trained_checkpoint):
        gen, scorer = backends.generator, backends.scorer
        for tag, name in enumerate(backends.catalog.names):
            s_src, s_ref = sample_pair(backends, 20 + tag)
            spec = backends.catalog.by_name(name)
            image_src = gen.synthesize(s_src)
            image_ref = gen.synthesize(s_ref)
            before = attribute_distance(image_src, image_ref, spec, scorer)
            result = edit(
                EditRequest(s_src=s_src, s_ref=s_ref, omega=(name,), delta=1.0),
                trained_checkpoint,
                backends,
            )
            assert result.reading(name).distance < before

    def test_report_roles(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 2)
        result = edit(
            EditRequest(s_src=s_src, s_ref=s_ref, omega=("ripple",)),
            trained_checkpoint,
            backends,
        )
        for row in result.report:
            assert row.targeted == (row.name == "ripple")
            assert row.distance >= 0.0

    def test_inputs_not_mutated_and_idempotent(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 3)
        src_copy = np.array(s_src.values)
        request = EditRequest(s_src=s_src, s_ref=s_ref, omega=("warmth",), delta=1.0)
        a = edit(request, trained_checkpoint, backends)
        b = edit(request, trained_checkpoint, backends)
        assert np.array_equal(s_src.values, src_copy)
        assert np.array_equal(a.image, b.image)
        assert np.array_equal(a.s_edit.values, b.s_edit.values)

    def test_low_mask_channels_barely_move(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 4)
        probs = control_probabilities(trained_checkpoint.mask_matrix())
        for name in backends.catalog.names:
            t = backends.catalog.index(name)
            mask = attribute_mask(probs, (t,), backends.generator.editable).mask
            result = edit(
                EditRequest(s_src=s_src, s_ref=s_ref, omega=(name,), delta=1.0),
                trained_checkpoint,
                backends,
            )
            move = np.abs(result.s_edit.values - s_src.values)
            budget = np.abs(s_ref.values - s_src.values)
            quiet = mask < 1e-3
            assert np.all(move[quiet] <= 1e-3 * budget[quiet] + 1e-15)

    def test_unknown_attribute_rejected(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 5)
        with pytest.raises(InvalidInputError):
            edit(
                EditRequest(s_src=s_src, s_ref=s_ref, omega=("beard",)),
                trained_checkpoint,
                backends,
            )

    def test_empty_omega_rejected(self, backends):
        s_src, s_ref = sample_pair(backends, 6)
        with pytest.raises(InvalidInputError):
            EditRequest(s_src=s_src, s_ref=s_ref, omega=())


class TestSweep:
    def test_zero_grid_gives_source_identical(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 7)
        results = sweep(s_src, s_ref, ("warmth",), [0.0], trained_checkpoint, backends)
        assert len(results) == 1
        assert np.array_equal(results[0].image, backends.generator.synthesize(s_src))

    def test_default_grid_and_affinity(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 8)
        results = sweep(
            s_src, s_ref, ("glow",), DELTA_SWEEP_GRID, trained_checkpoint, backends
        )
        assert len(results) == 6
        codes = np.stack([r.s_edit.values for r in results])
        deltas = np.array(DELTA_SWEEP_GRID)
        # coordinatewise affine in delta: second differences vanish
        slopes = (codes[1:] - codes[:-1]) / (deltas[1:] - deltas[:-1])[:, None]
        dev = np.abs(slopes - slopes[0]).max()
        assert dev < 1e-9, f"max slope deviation {dev}"

    def test_monotone_distance_on_unit_interval(self, backends, trained_checkpoint):
        hits = 0
        for tag in range(10):
            s_src, s_ref = sample_pair(backends, 30 + tag)
            name = backends.catalog.names[tag % 3]
            results = sweep(
                s_src, s_ref, (name,), [0.0, 0.25, 0.5, 0.75, 1.0],
                trained_checkpoint, backends,
            )
            values = [r.reading(name).distance for r in results]
            if all(b <= a + 1e-9 for a, b in zip(values, values[1:])):
                hits += 1
        assert hits >= 9

    def test_empty_grid_rejected(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 9)
        with pytest.raises(InvalidInputError):
            sweep(s_src, s_ref, ("warmth",), [], trained_checkpoint, backends)


class TestSequential:
    def test_single_step_equals_edit(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 10)
        seq = sequential_edit(
            s_src, s_ref, [("warmth",)], [1.0], trained_checkpoint, backends
        )
        single = edit(
            EditRequest(s_src=s_src, s_ref=s_ref, omega=("warmth",), delta=1.0),
            trained_checkpoint,
            backends,
        )
        assert np.array_equal(seq[0].s_edit.values, single.s_edit.values)

    def test_disjoint_masks_sequential_equals_combined(self, backends, hard_checkpoint):
        s_src, s_ref = sample_pair(backends, 11)
        names = backends.catalog.names
        seq = sequential_edit(
            s_src,
            s_ref,
            [(names[0],), (names[1],), (names[2],)],
            [1.0, 1.0, 1.0],
            hard_checkpoint,
            backends,
        )
        combined = edit(
            EditRequest(s_src=s_src, s_ref=s_ref, omega=names, delta=1.0),
            hard_checkpoint,
            backends,
        )
        np.testing.assert_allclose(
            seq[-1].s_edit.values, combined.s_edit.values, rtol=0, atol=1e-9
        )

    def test_rebasing_progresses_towards_reference(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 12)
        names = backends.catalog.names
        image_src = backends.generator.synthesize(s_src)
        image_ref = backends.generator.synthesize(s_ref)
        before = sum(measure_pair(backends, image_src, image_ref).values())
        seq = sequential_edit(
            s_src, s_ref, [(n,) for n in names], [1.0] * len(names),
            trained_checkpoint, backends,
        )
        after = sum(
            measure_pair(backends, seq[-1].image, image_ref).values()
        )
        assert after < 0.1 * before

    def test_length_mismatch_rejected(self, backends, trained_checkpoint):
        s_src, s_ref = sample_pair(backends, 13)
        with pytest.raises(InvalidInputError):
            sequential_edit(s_src, s_ref, [("warmth",)], [1.0, 2.0], trained_checkpoint, backends)
