import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diar_pipeline.cluster import NEW, Assignment, AssignmentProbs
from diar_pipeline.errors import ContractViolation
from diar_pipeline.losses import (
    EPS,
    ChunkTarget,
    bce,
    cluster_diar_loss,
    clustering_ce,
    eend_eda_loss,
    existence_loss,
    one_hot_targets,
    pit_diarization_loss,
    pit_diarization_loss_exhaustive,
    total_loss,
)

LN2 = math.log(2.0)


def _random_case(rng, n_speakers, n_frames):
    y_hat = rng.uniform(0.01, 0.99, size=(n_speakers, n_frames))
    y = (rng.random((n_speakers, n_frames)) < 0.4).astype(float)
    return y_hat, y


def test_bce_values():
    assert bce(1 - EPS, 1) == pytest.approx(0.0, abs=1e-6)
    assert bce(0.5, 1) == pytest.approx(LN2)
    assert bce(0.5, 0) == pytest.approx(LN2)
    assert bce(0.0, 1) == pytest.approx(-math.log(EPS))
    assert np.all(np.isfinite(bce([0.0, 1.0], [1, 0])))


def test_existence_loss_values():
    assert existence_loss([1 - EPS, EPS], 1) == pytest.approx(0.0, abs=1e-6)
    assert existence_loss([0.5, 0.5], 1) == pytest.approx(LN2)
    with pytest.raises(ContractViolation):
        existence_loss([0.5, 0.5, 0.5], 1)


@given(st.lists(st.floats(0.0, 1.0), min_size=1, max_size=6))
def test_existence_loss_is_non_negative(z):
    assert existence_loss(z, len(z) - 1) >= 0


def test_single_speaker_pit_is_mean_bce():
    y_hat = np.array([[0.9, 0.2, 0.6]])
    y = np.array([[1, 0, 1]])
    loss, perm = pit_diarization_loss(y_hat, y)
    assert perm == (0,)
    assert loss == pytest.approx(bce(y_hat, y).mean())


def test_pit_finds_the_swap():
    y = np.array([[1, 1, 0, 0], [0, 0, 1, 1]], dtype=float)
    y_hat = np.clip(y[[1, 0]], 0.05, 0.95)
    loss, perm = pit_diarization_loss(y_hat, y)
    assert perm == (1, 0)
    assert loss == pytest.approx(-math.log(0.95))


def test_pit_two_speaker_oracle(rng):
    y_hat, y = _random_case(rng, 2, 10)
    explicit = min(bce(y_hat, y).mean(), bce(y_hat, y[[1, 0]]).mean())
    assert pit_diarization_loss(y_hat, y)[0] == pytest.approx(explicit, abs=1e-12)


def test_pit_matches_exhaustive_and_is_permutation_invariant():
    rng = np.random.default_rng(0)
    for _ in range(200):
        n, t = int(rng.integers(1, 5)), int(rng.integers(5, 51))
        y_hat, y = _random_case(rng, n, t)
        loss, _ = pit_diarization_loss(y_hat, y)
        assert loss == pytest.approx(pit_diarization_loss_exhaustive(y_hat, y)[0], abs=1e-12)
        perm = rng.permutation(n)
        assert abs(pit_diarization_loss(y_hat, y[perm])[0] - loss) < 1e-9


def test_pit_matches_exhaustive_for_five_speakers(rng):
    for _ in range(10):
        y_hat, y = _random_case(rng, 5, 20)
        exhaustive = pit_diarization_loss_exhaustive(y_hat, y)[0]
        assert pit_diarization_loss(y_hat, y)[0] == pytest.approx(exhaustive, abs=1e-12)


def test_pit_shape_mismatch():
    with pytest.raises(ContractViolation):
        pit_diarization_loss(np.full((2, 3), 0.5), np.zeros((2, 4)))
    with pytest.raises(ContractViolation):
        pit_diarization_loss(np.full((1, 2), 0.5), np.array([[0, 2]]))


def test_eend_eda_loss_forms(rng):
    y_hat, y = _random_case(rng, 2, 12)
    chunk = ChunkTarget(posteriors=y_hat, existence=np.array([0.8, 0.7, 0.1]), reference=y)
    global_value = pit_diarization_loss(y_hat, y)[0] + existence_loss(chunk.existence, 2)
    assert abs(eend_eda_loss([chunk]) - global_value) < 1e-9
    assert abs(eend_eda_loss(chunk) - global_value) < 1e-9
    assert abs(eend_eda_loss([chunk, chunk]) - global_value) < 1e-9


def test_eend_eda_loss_is_zero_for_perfect_outputs():
    y = np.array([[1, 0, 1], [0, 1, 1]], dtype=float)
    chunk = ChunkTarget(
        posteriors=np.where(y == 1, 1 - EPS, EPS),
        existence=np.array([1 - EPS, 1 - EPS, EPS]),
        reference=y,
    )
    assert eend_eda_loss(chunk) == pytest.approx(0.0, abs=1e-5)


def test_clustering_ce_values():
    onehot = np.array([[1, 0, 0], [0, 0, 1]], dtype=float)
    assert clustering_ce(AssignmentProbs(onehot.copy()), onehot) == pytest.approx(0.0, abs=1e-12)
    uniform = AssignmentProbs(np.full((2, 3), 1.0 / 3.0))
    assert clustering_ce(uniform, onehot) == pytest.approx(math.log(3.0))
    assert clustering_ce([uniform, AssignmentProbs(onehot.copy())], [onehot, onehot]) == pytest.approx(math.log(3.0) / 2)


def test_clustering_ce_rejects_non_one_hot():
    with pytest.raises(ContractViolation):
        clustering_ce(AssignmentProbs(np.full((1, 2), 0.5)), np.array([[1.0, 1.0]]))


def test_one_hot_targets_put_new_last():
    targets = one_hot_targets(Assignment((1, NEW), 2))
    np.testing.assert_array_equal(targets, [[0, 1, 0], [0, 0, 1]])


def test_cluster_diar_loss_padding_and_permutation():
    y = np.array([[1, 1, 0, 0], [0, 0, 1, 1], [0, 1, 1, 0]], dtype=float)
    perfect = np.where(y == 1, 1 - EPS, EPS)
    assert cluster_diar_loss(perfect, y) == pytest.approx(0.0, abs=1e-5)
    assert cluster_diar_loss(perfect[[2, 0, 1]], y) == pytest.approx(0.0, abs=1e-5)

    two = perfect[:2]
    padded = np.vstack([two, np.full((1, 4), EPS)])
    assert cluster_diar_loss(two, y) == pytest.approx(pit_diarization_loss(padded, y)[0])

    extra = np.vstack([perfect, np.full((1, 4), EPS)])
    assert cluster_diar_loss(extra, y) == pytest.approx(0.0, abs=1e-5)

    with pytest.raises(ContractViolation):
        cluster_diar_loss(perfect[:, :3], y)


@pytest.mark.parametrize("parts, expected", [
    ((0, 0, 0, 0), 0.0),
    ((1, 1, 1, 1), 13.0),
    ((0.2, 0.1, 0.3, 0.4), 1.9),
])
def test_total_loss(parts, expected):
    assert total_loss(*parts) == pytest.approx(expected)


def test_total_loss_rejects_non_finite():
    with pytest.raises(ContractViolation):
        total_loss(1.0, float("nan"), 0.0, 0.0)


@given(st.integers(1, 3), st.integers(1, 8), st.integers(0, 2**32 - 1))
@settings(max_examples=40, deadline=None)
def test_losses_are_finite_and_non_negative(n, t, seed):
    rng = np.random.default_rng(seed)
    y_hat = rng.choice([0.0, 1.0, 0.5], size=(n, t))
    y = rng.integers(0, 2, size=(n, t))
    loss, perm = pit_diarization_loss(y_hat, y)
    assert math.isfinite(loss) and loss >= 0
    assert sorted(perm) == list(range(n))
