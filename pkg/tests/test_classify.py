import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dfdl.classify import (
    ClassifierModel,
    ImageDecisionRule,
    PatchGridLabels,
    class_residuals,
    classify_image_by_vote,
    classify_patch,
    classify_patches,
    detect_regions,
    label_components,
)
from dfdl.data import SyntheticSpec, draw_planted, planted_bases
from dfdl.errors import InvalidInputError
from oracles import flood_fill_sizes

VOTE = ImageDecisionRule("proportion_vote", threshold=0.5)


def _two_axis_model(lam=0.1):
    e = np.eye(4)
    return ClassifierModel((e[:, :2], e[:, 2:]), lam)


def test_in_span_sample_goes_to_its_class():
    dec = classify_patch(np.array([0.0, 0.0, 0.6, 0.8]), _two_axis_model())
    assert dec.predicted_class == 1
    assert dec.residuals[1] < dec.residuals[0]


def test_zero_sample_ties_to_class_zero():
    dec = classify_patch(np.zeros(4), _two_axis_model())
    assert dec.residuals[0] == dec.residuals[1] == 0.0
    assert dec.predicted_class == 0


def test_planted_classes_reach_95_percent():
    spec = SyntheticSpec(d=50, atoms_per_class=10, sparsity=3, noise_sd=0.05, seed=4)
    rng = np.random.default_rng(spec.seed)
    bases = planted_bases(spec, rng)
    model = ClassifierModel(tuple(bases), 0.05)
    X = np.hstack([draw_planted(B, 200, spec.sparsity, spec.noise_sd, rng) for B in bases])
    truth = np.repeat([0, 1], 200)
    pred, _, _ = classify_patches(X, model)
    assert np.mean(pred == truth) >= 0.95


def test_stored_residuals_match_codes(rng):
    A, B = rng.standard_normal((12, 5)), rng.standard_normal((12, 7))
    model = ClassifierModel((A / np.linalg.norm(A, axis=0), B / np.linalg.norm(B, axis=0)), 0.05)
    Y = rng.standard_normal((12, 20))
    pred, res, codes = classify_patches(Y, model)
    for j in range(20):
        r0 = np.linalg.norm(Y[:, j] - model.dictionaries[0].atoms @ codes[:5, j])
        r1 = np.linalg.norm(Y[:, j] - model.dictionaries[1].atoms @ codes[5:, j])
        np.testing.assert_allclose(res[:, j], [r0, r1], atol=1e-10)
        assert pred[j] == (0 if r0 <= r1 else 1)


def test_argmin_follows_class_permutation(rng):
    A = rng.standard_normal((8, 4))
    B = rng.standard_normal((8, 4))
    A /= np.linalg.norm(A, axis=0)
    B /= np.linalg.norm(B, axis=0)
    Y = rng.standard_normal((8, 30))
    p_ab, r_ab, _ = classify_patches(Y, ClassifierModel((A, B), 0.1))
    p_ba, r_ba, _ = classify_patches(Y, ClassifierModel((B, A), 0.1))
    np.testing.assert_allclose(r_ab, r_ba[::-1], atol=1e-8)
    assert np.array_equal(p_ab, 1 - p_ba)


def test_class_residuals_shapes(rng):
    model = _two_axis_model()
    assert class_residuals(np.zeros((4, 3)), model, np.zeros((4, 3))).shape == (2, 3)


def test_model_validation():
    e = np.eye(4)
    with pytest.raises(InvalidInputError):
        ClassifierModel((e,), 0.1)
    with pytest.raises(InvalidInputError):
        ClassifierModel((e, np.eye(3)), 0.1)
    with pytest.raises(InvalidInputError):
        ClassifierModel((e, e), 0.0)
    with pytest.raises(InvalidInputError):
        ClassifierModel((e, e), 0.1, ("a", "a"))
    with pytest.raises(InvalidInputError):
        classify_patches(np.zeros((3, 1)), ClassifierModel((e, e), 0.1))


def test_vote_examples():
    six = PatchGridLabels(np.array([[1, 1, 1, 1, 1, 1, 0, 0, 0, 0]]))
    five = PatchGridLabels(np.array([[1, 1, 1, 1, 1, 0, 0, 0, 0, 0]]))
    assert classify_image_by_vote(six, VOTE, positive_class=1) == 1
    # exactly at the threshold is not enough
    assert classify_image_by_vote(five, VOTE, positive_class=1) == 0


@pytest.mark.parametrize("tau", [0.3, 0.5, 0.7])
def test_vote_matches_counting(tau, rng):
    rule = ImageDecisionRule(threshold=tau)
    for _ in range(50):
        cells = rng.integers(0, 2, size=(4, 5))
        count = sum(int(v == 1) for v in cells.ravel())
        expected = 1 if count / 20 > tau else 0
        assert classify_image_by_vote(PatchGridLabels(cells), rule, 1) == expected


def test_vote_threshold_one_never_positive():
    grid = PatchGridLabels(np.ones((3, 3), dtype=int))
    assert classify_image_by_vote(grid, ImageDecisionRule(threshold=1.0), 1) == 0


@settings(max_examples=60, deadline=None)
@given(arrays(np.int64, (4, 4), elements=st.integers(0, 1)), st.integers(0, 15), st.floats(0, 1))
def test_vote_monotone_in_positive_cells(cells, flip, tau):
    rule = ImageDecisionRule(threshold=tau)
    before = classify_image_by_vote(PatchGridLabels(cells), rule, 1)
    more = cells.copy()
    more.flat[flip] = 1
    after = classify_image_by_vote(PatchGridLabels(more), rule, 1)
    assert after >= before


def test_region_examples():
    rule4 = ImageDecisionRule("region_detect", min_region_patches=9, connectivity=4)
    g = np.zeros((6, 6), dtype=int)
    g[1:4, 2:5] = 1
    det = detect_regions(PatchGridLabels(g), rule4, 1)
    assert det.label == 1 and det.mask.sum() == 9

    iso = np.zeros((5, 5), dtype=int)
    iso[::2, ::2] = 1  # nine isolated cells
    rule = ImageDecisionRule("region_detect", min_region_patches=2, connectivity=4)
    det = detect_regions(PatchGridLabels(iso), rule, 1)
    assert det.label == 0 and not det.mask.any()
    # diagonal neighbours join under 8-connectivity
    rule8 = ImageDecisionRule("region_detect", min_region_patches=2, connectivity=8)
    assert detect_regions(PatchGridLabels(iso), rule8, 1).label == 0
    diag = np.eye(3, dtype=int)
    assert detect_regions(PatchGridLabels(diag), rule, 1).label == 0
    assert detect_regions(PatchGridLabels(diag), rule8, 1).label == 1


@pytest.mark.parametrize("connectivity", [4, 8])
def test_components_match_flood_fill(connectivity, rng):
    for _ in range(30):
        mask = rng.uniform(size=(9, 11)) < 0.45
        _, sizes = label_components(mask, connectivity)
        assert sorted(sizes.tolist()) == flood_fill_sizes(mask, connectivity)


@settings(max_examples=60, deadline=None)
@given(arrays(np.int64, (5, 5), elements=st.integers(0, 1)), st.integers(0, 24), st.integers(1, 8), st.sampled_from([4, 8]))
def test_region_monotone_in_target_cells(cells, flip, m, conn):
    rule = ImageDecisionRule("region_detect", min_region_patches=m, connectivity=conn)
    before = detect_regions(PatchGridLabels(cells), rule, 1)
    more = cells.copy()
    more.flat[flip] = 1
    after = detect_regions(PatchGridLabels(more), rule, 1)
    assert after.label >= before.label
    assert np.all(after.mask >= before.mask)


def test_grid_and_rule_errors():
    with pytest.raises(InvalidInputError):
        classify_image_by_vote(PatchGridLabels(np.zeros((0, 3), dtype=int)), VOTE, 1)
    with pytest.raises(InvalidInputError):
        detect_regions(PatchGridLabels(np.zeros((0, 0), dtype=int)), ImageDecisionRule("region_detect"), 1)
    with pytest.raises(InvalidInputError):
        classify_image_by_vote(PatchGridLabels(np.ones((2, 2), dtype=int)), VOTE, 1, n_classes=3)
    with pytest.raises(InvalidInputError):
        detect_regions(PatchGridLabels(np.ones((2, 2), dtype=int)), VOTE, 1)
    with pytest.raises(InvalidInputError):
        ImageDecisionRule(threshold=1.5)
    with pytest.raises(InvalidInputError):
        ImageDecisionRule(connectivity=6)
    with pytest.raises(InvalidInputError):
        PatchGridLabels.from_predictions(np.zeros(5, dtype=int), 2, 3)
