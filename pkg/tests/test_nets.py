import numpy as np
import pytest
import torch

from inmsrl import dsp, nets
from inmsrl.corpus.manifest import INSTRUMENTS

torch.manual_seed(0)


def _mag(bins=64, frames=40, batch=2, seed=0):
    g = torch.Generator().manual_seed(seed)
    return torch.rand(batch, 1, bins, frames, generator=g)


# -----------------------------
# conditioning operators
# -----------------------------

def test_conditioning_1d_drums_keeps_first_block():
    v = torch.arange(640.0)
    out = nets.conditioning_1d(v, "drums")
    assert torch.equal(out[:128], v[:128])
    assert torch.all(out[128:] == 0)


def test_conditioning_1d_idempotent_and_partitions():
    g = torch.Generator().manual_seed(1)
    v = torch.randn(4, 640, generator=g)
    total = torch.zeros_like(v)
    for inst in INSTRUMENTS:
        c = nets.conditioning_1d(v, inst)
        assert torch.equal(nets.conditioning_1d(c, inst), c)
        total += c
    assert torch.equal(total, v)


def test_conditioning_1d_rejects_unknown_instrument():
    with pytest.raises(ValueError):
        nets.conditioning_1d(torch.zeros(640), "vocals")
    with pytest.raises(ValueError):
        nets.conditioning_1d(torch.zeros(641), "drums")


def test_conditioning_3d_partition_rules():
    g = torch.Generator().manual_seed(2)
    seq = torch.randn(2, 40, 8, 6, generator=g)
    total = torch.zeros_like(seq)
    for inst in INSTRUMENTS:
        c = nets.conditioning_3d(seq, inst)
        nonzero_channels = (c.abs().sum(dim=(0, 2, 3)) > 0).sum()
        assert nonzero_channels == 8  # 40 / 5
        assert torch.equal(nets.conditioning_3d(c, inst), c)
        total += c
    assert torch.equal(total, seq)
    with pytest.raises(ValueError):
        nets.conditioning_3d(torch.zeros(2, 41, 8, 6), "bass")


# -----------------------------
# separation model
# -----------------------------

def test_mss_zero_input_separates_to_zero():
    model = nets.MSSModel(depth=3, base_channels=8, kernel=3)
    mask, separated = model(torch.zeros(1, 1, 129, 20))
    assert separated.abs().max() == 0
    assert mask.shape == (1, 1, 129, 20)


def test_mss_mask_bounded_and_never_amplifies():
    model = nets.MSSModel(depth=3, base_channels=8, kernel=3)
    mix = _mag(129, 33)
    mask, separated = model(mix)
    assert torch.all(mask > 0) and torch.all(mask < 1)
    assert torch.all(separated <= mix)


def test_mss_deterministic_in_eval_mode():
    model = nets.MSSModel(depth=2, base_channels=8, kernel=3).eval()
    mix = _mag(65, 17, seed=3)
    with torch.no_grad():
        a = model(mix)[1]
        b = model(mix)[1]
    assert torch.equal(a, b)


def test_mss_rejects_too_few_frames():
    model = nets.MSSModel(depth=4, base_channels=8, kernel=3)
    with pytest.raises(ValueError):
        model(torch.zeros(1, 1, 64, 15))  # < 2**4 frames


def test_mss_forward_numpy_wrapper_matches_hadamard():
    model = nets.MSSModel(depth=2, base_channels=8, kernel=3)
    rng = np.random.default_rng(0)
    mag = rng.uniform(0, 1, (24, 33))
    mask, separated = nets.mss_forward(model, mag)
    np.testing.assert_allclose(separated, dsp.hadamard_separate(mag, mask), atol=1e-7)


# -----------------------------
# feature extractors
# -----------------------------

def test_extractor_output_dim_is_constant_across_lengths():
    model = nets.FeatureExtractor(input_bins=32, depth=3, base_channels=8, kernel=3)
    for frames in (24, 64, 100):
        out = model(_mag(32, frames))
        assert out.shape == (2, 128)
        assert torch.all(torch.isfinite(out))


def test_extractor_distinguishes_inputs():
    torch.manual_seed(4)
    model = nets.FeatureExtractor(input_bins=32, depth=2, base_channels=8, kernel=3)
    a = model(_mag(32, 30, batch=1, seed=5))
    b = model(_mag(32, 30, batch=1, seed=6))
    assert torch.norm(a - b) > 1e-6


def test_extractor_shape_validation():
    model = nets.FeatureExtractor(input_bins=32, depth=3, base_channels=8, kernel=3)
    with pytest.raises(ValueError):
        model(_mag(31, 30))
    with pytest.raises(ValueError):
        model(_mag(32, 4))


def test_disentangled_extractor_outputs():
    model = nets.DisentangledExtractor(input_bins=65, depth=3, base_channels=10, kernel=3)
    x = _mag(65, 24)
    bottleneck, skips, v = model(x)
    assert v.shape == (2, 640)
    assert bottleneck.shape[1] == 40
    assert len(skips) == 2
    # skip shapes must match what the decoder expects: halved per level
    assert skips[0].shape[-2:] == (36, 12)
    assert skips[1].shape[-2:] == (18, 6)


def test_disentangled_extractor_rejects_bad_channel_plan():
    with pytest.raises(ValueError):
        nets.DisentangledExtractor(input_bins=65, depth=3, base_channels=8, kernel=3)


def test_reconstruction_decoder_bounded_and_zero_on_zero_mix():
    torch.manual_seed(7)
    extractor = nets.DisentangledExtractor(input_bins=65, depth=2, base_channels=10, kernel=3)
    decoder = nets.ReconstructionDecoder(extractor, kernel=3)
    mix = _mag(65, 20)
    bottleneck, skips, _ = extractor(mix)
    mask, recon = decoder(nets.conditioning_3d(bottleneck, "bass"), skips, mix)
    assert torch.all(recon <= mix)
    assert mask.shape == mix.shape

    zero = torch.zeros_like(mix)
    b0, s0, _ = extractor(zero)
    _, recon0 = decoder(nets.conditioning_3d(b0, "bass"), s0, zero)
    assert recon0.abs().max() == 0


def test_reconstruction_gradients_reach_encoder():
    torch.manual_seed(8)
    extractor = nets.DisentangledExtractor(input_bins=33, depth=2, base_channels=10, kernel=3)
    decoder = nets.ReconstructionDecoder(extractor, kernel=3)
    mix = _mag(33, 16, batch=1)
    target = _mag(33, 16, batch=1, seed=9)
    bottleneck, skips, _ = extractor(mix)
    _, recon = decoder(nets.conditioning_3d(bottleneck, "drums"), skips, mix)
    loss = torch.mean(torch.abs(recon - target))
    loss.backward()
    grads = [p.grad for p in extractor.encoder.parameters() if p.grad is not None]
    assert grads and any(g.abs().max() > 0 for g in grads)


def test_mel_projection_matches_dsp_log_mel():
    rng = np.random.default_rng(10)
    mag = rng.uniform(0, 1, (30, 513))
    mel = nets.MelProjection(n_mels=40, n_bins=513)
    out = mel(nets.magnitude_to_tensor(mag, dtype=torch.float64))
    expected = dsp.log_mel(mag, n_mels=40)
    np.testing.assert_allclose(out[0, 0].numpy().T, expected, atol=1e-9)


def test_cascade_system_embedding_path():
    torch.manual_seed(11)
    mss = {"drums": nets.MSSModel(depth=2, base_channels=8, kernel=3)}
    mel = nets.MelProjection(n_mels=16, n_bins=65)
    ext = {"drums": nets.FeatureExtractor(input_bins=16, depth=2, base_channels=8, kernel=3)}
    system = nets.CascadeSystem(mss, ext, mel)
    v = system.embed("drums", _mag(65, 20, batch=1))
    assert v.shape == (1, 128)


def test_direct_system_reconstruct_path():
    torch.manual_seed(12)
    extractor = nets.DisentangledExtractor(input_bins=33, depth=2, base_channels=10, kernel=3)
    decoders = {i: nets.ReconstructionDecoder(extractor, kernel=3) for i in INSTRUMENTS}
    system = nets.DirectSystem(extractor, decoders)
    mix = _mag(33, 16, batch=1)
    mask, recon, v = system.reconstruct("piano", mix)
    assert recon.shape == mix.shape and v.shape == (1, 640)
