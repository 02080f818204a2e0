import numpy as np
import pytest
import torch

from diar_pipeline.errors import ConfigurationError
from diar_pipeline.features import FeatureSequence
from diar_pipeline.model import (
    AttractorSet,
    FrameEmbeddings,
    GhostSpeaker,
    apply_stop_rule,
    augment_with_ghost,
    build_latency_mask,
    eda_attractors,
    encode,
    refine_attractors,
    refine_centroids,
    speaker_posteriors,
    tensor_shapes,
)


def _features(rng, dim, n_frames):
    return FeatureSequence(rng.standard_normal((dim, n_frames)).astype(np.float32), 0.1)


def test_required_tensor_names(small_model):
    names = tensor_shapes(small_model)
    for name in ("gru.update.W", "gru.reset.U", "gru.candidate.b", "h0", "ghost_speaker",
                 "eda.counter.weight", "encoder.layers.1.attn.q.weight",
                 "attractor_decoder.cross_attn.k.weight", "centroid_decoder.ff.w2.bias"):
        assert name in names
    assert names["gru.update.W"] == (16, 16)
    assert names["encoder.input.weight"] == (16, small_model.input_dim)


def test_latency_mask_band():
    mask = build_latency_mask(5, 1)
    expected = np.array([
        [1, 1, 0, 0, 0],
        [1, 1, 1, 0, 0],
        [1, 1, 1, 1, 0],
        [1, 1, 1, 1, 1],
        [1, 1, 1, 1, 1],
    ], dtype=bool)
    np.testing.assert_array_equal(mask.allowed.numpy(), expected)
    assert not mask.is_full
    assert build_latency_mask(5, 4).is_full
    assert build_latency_mask(1, 0).is_full


@pytest.mark.parametrize("latency", [0, 5, 10])
def test_encoder_never_looks_further_than_latency(small_net, rng, latency):
    n_frames = 50
    x = _features(rng, small_net.config.input_dim, n_frames)
    mask = build_latency_mask(n_frames, latency)
    base = encode(x, mask, small_net).data.numpy()
    violations = 0
    for k in range(n_frames):
        data = x.data.copy()
        data[:, k] += 5.0
        out = encode(FeatureSequence(data, 0.1), mask, small_net).data.numpy()
        safe = max(0, k - latency)
        violations += int(not np.array_equal(out[:, :safe], base[:, :safe]))
        # the perturbed frame itself must change the output somewhere
        assert not np.array_equal(out, base)
    assert violations == 0


def test_full_mask_is_offline(small_net, rng):
    x = _features(rng, small_net.config.input_dim, 6)
    a = encode(x, build_latency_mask(6, 5), small_net).data
    b = encode(x, build_latency_mask(6, 50), small_net).data
    assert torch.equal(a, b)


def test_encode_rejects_mismatched_inputs(small_net, rng):
    x = _features(rng, small_net.config.input_dim + 1, 4)
    with pytest.raises(ConfigurationError):
        encode(x, build_latency_mask(4, 1), small_net)
    y = _features(rng, small_net.config.input_dim, 4)
    with pytest.raises(ConfigurationError):
        encode(y, build_latency_mask(5, 1), small_net)


@pytest.mark.parametrize("existence, expected", [
    ([0.9, 0.8, 0.3, 0.9, 0.9], 2),
    ([0.9, 0.9, 0.9, 0.9, 0.9], 4),
    ([0.2, 0.9, 0.9, 0.9, 0.9], 0),
    ([0.5, 0.5, 0.49, 0.9, 0.9], 2),
])
def test_stop_rule(existence, expected):
    assert apply_stop_rule(existence, 0.5, 4) == expected


def test_attractors_and_posteriors_shapes(small_net, rng):
    x = _features(rng, small_net.config.input_dim, 20)
    emb = encode(x, build_latency_mask(20, 20), small_net)
    attractors = eda_attractors(emb, small_net)
    s = attractors.n_speakers
    assert 0 <= s <= small_net.config.max_speakers
    assert attractors.vectors.shape == (16, s)
    assert attractors.existence.shape == (s + 1,)
    assert torch.all(attractors.existence[:s] >= small_net.config.existence_threshold)

    post = speaker_posteriors(attractors, emb)
    assert post.data.shape == (s, 20)
    assert torch.all(post.data > 0) and torch.all(post.data < 1)


def test_posteriors_stay_open_interval_when_saturated():
    vectors = torch.tensor([[100.0], [0.0]])
    emb = FrameEmbeddings(torch.tensor([[100.0, -100.0], [0.0, 0.0]]))
    post = speaker_posteriors(AttractorSet(vectors, torch.tensor([0.9, 0.1])), emb).data
    assert 0 < post.min() and post.max() < 1


def test_no_attractors_gives_empty_posteriors():
    emb = FrameEmbeddings(torch.randn(16, 7))
    post = speaker_posteriors(AttractorSet(torch.zeros(16, 0), torch.tensor([0.1])), emb)
    assert post.data.shape == (0, 7)


def test_attractor_decoder_is_permutation_equivariant(small_net):
    torch.manual_seed(0)
    a = torch.randn(16, 3)
    emb = FrameEmbeddings(torch.randn(16, 9))
    refined = refine_attractors(AttractorSet(a, torch.ones(4)), emb, small_net)
    assert refined.shape == (16, 3)
    perm = [2, 0, 1]
    permuted = refine_attractors(AttractorSet(a[:, perm], torch.ones(4)), emb, small_net)
    torch.testing.assert_close(permuted, refined[:, perm], atol=1e-5, rtol=1e-5)


def test_empty_inputs_skip_refinement(small_net):
    emb = FrameEmbeddings(torch.randn(16, 4))
    empty = AttractorSet(torch.zeros(16, 0), torch.tensor([0.2]))
    assert refine_attractors(empty, emb, small_net).shape == (16, 0)
    a_plus = augment_with_ghost(torch.randn(16, 2), GhostSpeaker.from_network(small_net))
    assert refine_centroids(torch.zeros(16, 0), a_plus, small_net).shape == (16, 0)


def test_ghost_speaker_is_first_column(small_net):
    ghost = GhostSpeaker.from_network(small_net)
    refined = torch.randn(16, 2)
    a_plus = augment_with_ghost(refined, ghost)
    assert a_plus.shape == (16, 3)
    assert torch.equal(a_plus[:, 0], small_net.ghost_speaker)
    assert torch.equal(a_plus[:, 1:], refined)


def test_centroid_decoder_output_per_centroid_and_memory_order_free(small_net):
    torch.manual_seed(1)
    centroids = torch.randn(16, 4)
    a_plus = torch.randn(16, 3)
    out = refine_centroids(centroids, a_plus, small_net)
    assert out.shape == (16, 4)
    shuffled = refine_centroids(centroids, a_plus[:, [0, 2, 1]], small_net)
    torch.testing.assert_close(shuffled, out, atol=1e-5, rtol=1e-5)


def test_disabled_decoders_pass_inputs_through(small_bundle, small_model):
    net = small_bundle.to_network(small_model.model_copy(update={
        "use_attractor_decoder": False,
        "use_centroid_decoder": False,
    }))
    a = torch.randn(16, 2)
    emb = FrameEmbeddings(torch.randn(16, 5))
    assert torch.equal(refine_attractors(AttractorSet(a, torch.ones(3)), emb, net), a)
    centroids = torch.randn(16, 3)
    assert torch.equal(refine_centroids(centroids, torch.randn(16, 3), net), centroids)
