"""Trainable architectures: masking U-Nets, feature extractors, and the
instrument-conditioned embedding operators.

Tensor layout is (batch, channel, freq, time). Inputs whose freq/time sizes
are not multiples of 2**depth are zero-padded on the high side and cropped
back after decoding, so skip shapes always line up.
"""
from __future__ import annotations

import numpy as np
import torch
import torch.nn.functional as F
from torch import nn

from inmsrl import dsp
from inmsrl.corpus.manifest import INSTRUMENTS

EMBED_DIM_PER_INSTRUMENT = 128


def instrument_subspace(instrument: str, total_dim: int):
    """(lo, hi) dims of `instrument` inside a 5-way partitioned vector."""
    if total_dim % len(INSTRUMENTS) != 0:
        raise ValueError(f"dimension {total_dim} not divisible by {len(INSTRUMENTS)}")
    width = total_dim // len(INSTRUMENTS)
    idx = _instrument_index(instrument)
    return idx * width, (idx + 1) * width


def _instrument_index(instrument: str) -> int:
    try:
        return INSTRUMENTS.index(instrument)
    except ValueError:
        raise ValueError(f"unknown instrument {instrument!r}") from None


def conditioning_1d(v: torch.Tensor, instrument: str) -> torch.Tensor:
    """Zero every subspace of a partitioned embedding except the instrument's."""
    lo, hi = instrument_subspace(instrument, v.shape[-1])
    out = torch.zeros_like(v)
    out[..., lo:hi] = v[..., lo:hi]
    return out


def conditioning_3d(seq: torch.Tensor, instrument: str) -> torch.Tensor:
    """Zero the non-target channel groups of a (.., C, F, T) feature sequence."""
    channels = seq.shape[-3]
    if channels % len(INSTRUMENTS) != 0:
        raise ValueError(f"channels ({channels}) not divisible by {len(INSTRUMENTS)}")
    width = channels // len(INSTRUMENTS)
    idx = _instrument_index(instrument)
    out = torch.zeros_like(seq)
    sl = slice(idx * width, (idx + 1) * width)
    out[..., sl, :, :] = seq[..., sl, :, :]
    return out


def _norm(channels: int) -> nn.Module:
    for groups in (5, 4, 2):
        if channels % groups == 0:
            return nn.GroupNorm(groups, channels)
    return nn.GroupNorm(1, channels)


class _EncBlock(nn.Module):
    def __init__(self, c_in, c_out, kernel):
        super().__init__()
        self.conv = nn.Conv2d(c_in, c_out, kernel, stride=2, padding=kernel // 2)
        self.norm = _norm(c_out)
        self.act = nn.LeakyReLU(0.2)

    def forward(self, x):
        return self.act(self.norm(self.conv(x)))


class _DecBlock(nn.Module):
    def __init__(self, c_in, c_out, kernel):
        super().__init__()
        self.conv = nn.ConvTranspose2d(
            c_in, c_out, kernel, stride=2, padding=kernel // 2, output_padding=1
        )
        self.norm = _norm(c_out)
        self.act = nn.ReLU()

    def forward(self, x):
        return self.act(self.norm(self.conv(x)))


class ConvEncoder(nn.Module):
    """Stack of stride-2 conv blocks; returns the bottleneck and the skips."""

    def __init__(self, depth: int, base_channels: int, kernel: int = 5):
        super().__init__()
        if depth < 1:
            raise ValueError("depth must be >= 1")
        channels = [base_channels * 2**i for i in range(depth)]
        ins = [1] + channels[:-1]
        self.blocks = nn.ModuleList(
            _EncBlock(i, o, kernel) for i, o in zip(ins, channels)
        )
        self.depth = depth
        self.channels = channels

    def forward(self, x):
        skips = []
        for block in self.blocks:
            x = block(x)
            skips.append(x)
        return x, skips[:-1]


class MaskHead(nn.Module):
    """Mirrored decoder ending in a sigmoid mask of the input's shape."""

    def __init__(self, encoder: ConvEncoder, kernel: int = 5, skip_connections=True):
        super().__init__()
        chans = encoder.channels
        self.skip_connections = skip_connections
        blocks = []
        for level in reversed(range(1, encoder.depth)):
            c_in = chans[level] if level == encoder.depth - 1 else chans[level] * 2
            blocks.append(_DecBlock(c_in, chans[level - 1], kernel))
        self.blocks = nn.ModuleList(blocks)
        c_last = chans[0] if encoder.depth == 1 else chans[0] * 2
        self.up = nn.ConvTranspose2d(
            c_last, chans[0], kernel, stride=2, padding=kernel // 2, output_padding=1
        )
        self.out = nn.Conv2d(chans[0], 1, 1)

    def forward(self, bottleneck, skips):
        x = bottleneck
        for block, skip in zip(self.blocks, reversed(skips)):
            x = block(x)
            if self.skip_connections:
                x = torch.cat([x, skip], dim=1)
            else:
                x = torch.cat([x, torch.zeros_like(skip)], dim=1)
        x = self.up(x)
        return torch.sigmoid(self.out(x))


def _pad_to_multiple(x, multiple):
    f, t = x.shape[-2], x.shape[-1]
    pad_f = (-f) % multiple
    pad_t = (-t) % multiple
    if pad_f or pad_t:
        x = F.pad(x, (0, pad_t, 0, pad_f))
    return x


class MSSModel(nn.Module):
    """Per-instrument separation U-Net: magnitude mix -> (mask, separated)."""

    def __init__(self, depth: int = 6, base_channels: int = 16, kernel: int = 5):
        super().__init__()
        self.encoder = ConvEncoder(depth, base_channels, kernel)
        self.decoder = MaskHead(self.encoder, kernel)
        self.min_frames = 2**depth

    def forward(self, mix: torch.Tensor):
        if mix.shape[-1] < self.min_frames:
            raise ValueError(
                f"need at least {self.min_frames} frames, got {mix.shape[-1]}"
            )
        f, t = mix.shape[-2], mix.shape[-1]
        x = _pad_to_multiple(mix, self.min_frames)
        bottleneck, skips = self.encoder(x)
        mask = self.decoder(bottleneck, skips)[..., :f, :t]
        return mask, mask * mix


class MelProjection(nn.Module):
    """Fixed (non-trainable) log-mel layer; keeps the chain differentiable."""

    def __init__(self, n_mels: int, n_bins: int, sample_rate: int = dsp.DEFAULT_SAMPLE_RATE):
        super().__init__()
        fb = dsp.mel_filterbank(n_mels, n_bins, sample_rate)
        self.register_buffer("filterbank", torch.tensor(fb, dtype=torch.float64))
        self.n_mels = n_mels

    def forward(self, mag: torch.Tensor) -> torch.Tensor:
        fb = self.filterbank.to(mag.dtype)
        return torch.log(torch.einsum("mf,bcft->bcmt", fb, mag) + dsp.LOG_FLOOR)


class FeatureExtractor(nn.Module):
    """Encoder + time averaging + flatten + linear head -> fixed-size vector."""

    def __init__(
        self,
        input_bins: int,
        depth: int = 6,
        base_channels: int = 16,
        kernel: int = 5,
        embedding_dim: int = EMBED_DIM_PER_INSTRUMENT,
    ):
        super().__init__()
        self.encoder = ConvEncoder(depth, base_channels, kernel)
        self.min_frames = 2**depth
        self.input_bins = input_bins
        padded = input_bins + (-input_bins) % self.min_frames
        feat = self.encoder.channels[-1] * (padded // self.min_frames)
        self.head = nn.Linear(feat, embedding_dim)
        self.embedding_dim = embedding_dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        if x.shape[-2] != self.input_bins:
            raise ValueError(f"expected {self.input_bins} bins, got {x.shape[-2]}")
        if x.shape[-1] < self.min_frames:
            raise ValueError(f"need at least {self.min_frames} frames, got {x.shape[-1]}")
        x = _pad_to_multiple(x, self.min_frames)
        bottleneck, _ = self.encoder(x)
        pooled = bottleneck.mean(dim=-1)  # time average
        return self.head(pooled.flatten(1))


class DisentangledExtractor(nn.Module):
    """Single encoder producing skip features plus a 5-way partitioned vector.

    The bottleneck channel count must divide evenly among the instruments so
    the sequence can be conditioned per instrument.
    """

    def __init__(
        self,
        input_bins: int,
        depth: int = 6,
        base_channels: int = 20,
        kernel: int = 5,
        embedding_dim: int = EMBED_DIM_PER_INSTRUMENT * len(INSTRUMENTS),
    ):
        super().__init__()
        if (base_channels * 2 ** (depth - 1)) % len(INSTRUMENTS) != 0:
            raise ValueError(
                "bottleneck channels must be divisible by the instrument count; "
                f"got base={base_channels}, depth={depth}"
            )
        if embedding_dim % len(INSTRUMENTS) != 0:
            raise ValueError(f"embedding_dim {embedding_dim} not divisible by 5")
        self.encoder = ConvEncoder(depth, base_channels, kernel)
        self.min_frames = 2**depth
        self.input_bins = input_bins
        padded = input_bins + (-input_bins) % self.min_frames
        feat = self.encoder.channels[-1] * (padded // self.min_frames)
        self.head = nn.Linear(feat, embedding_dim)
        self.embedding_dim = embedding_dim

    def forward(self, x: torch.Tensor):
        if x.shape[-2] != self.input_bins:
            raise ValueError(f"expected {self.input_bins} bins, got {x.shape[-2]}")
        if x.shape[-1] < self.min_frames:
            raise ValueError(f"need at least {self.min_frames} frames, got {x.shape[-1]}")
        padded = _pad_to_multiple(x, self.min_frames)
        bottleneck, skips = self.encoder(padded)
        pooled = bottleneck.mean(dim=-1)
        v = self.head(pooled.flatten(1))
        return bottleneck, skips, v


class ReconstructionDecoder(nn.Module):
    """Per-instrument decoder over (conditioned) extractor features."""

    def __init__(self, extractor: DisentangledExtractor, kernel: int = 5):
        super().__init__()
        self.decoder = MaskHead(extractor.encoder, kernel)
        self.min_frames = extractor.min_frames

    def forward(self, bottleneck, skips, mix: torch.Tensor):
        f, t = mix.shape[-2], mix.shape[-1]
        mask = self.decoder(bottleneck, skips)[..., :f, :t]
        return mask, mask * mix


class CascadeSystem(nn.Module):
    """Frozen-or-joint stack: per-instrument MSS -> log-mel -> extractor."""

    def __init__(self, mss: dict, extractors: dict, mel: MelProjection):
        super().__init__()
        self.mss = nn.ModuleDict(mss)
        self.extractors = nn.ModuleDict(extractors)
        self.mel = mel

    @property
    def instruments(self):
        return tuple(self.extractors.keys())

    def separate(self, instrument: str, mix_mag: torch.Tensor):
        return self.mss[instrument](mix_mag)

    def embed_from_separated(self, instrument: str, separated: torch.Tensor):
        return self.extractors[instrument](self.mel(separated))

    def embed(self, instrument: str, mix_mag: torch.Tensor) -> torch.Tensor:
        _, separated = self.separate(instrument, mix_mag)
        return self.embed_from_separated(instrument, separated)


class DirectSystem(nn.Module):
    """Disentangled extractor plus per-instrument reconstruction decoders."""

    def __init__(self, extractor: DisentangledExtractor, decoders: dict = None):
        super().__init__()
        self.extractor = extractor
        self.decoders = nn.ModuleDict(decoders or {})

    def embed(self, mix_mag: torch.Tensor) -> torch.Tensor:
        _, _, v = self.extractor(mix_mag)
        return v

    def reconstruct(self, instrument: str, mix_mag: torch.Tensor):
        bottleneck, skips, v = self.extractor(mix_mag)
        conditioned = conditioning_3d(bottleneck, instrument)
        mask, recon = self.decoders[instrument](conditioned, skips, mix_mag)
        return mask, recon, v


def magnitude_to_tensor(mag, dtype=torch.float32) -> torch.Tensor:
    """(frames, bins) numpy magnitude -> (1, 1, bins, frames) torch tensor."""
    arr = np.ascontiguousarray(np.asarray(mag, dtype=np.float64).T)[None, None]
    return torch.as_tensor(arr, dtype=dtype)


def mss_forward(model: MSSModel, mix_mag):
    """Numpy-facing single-segment separation: returns (mask, separated)."""
    was_training = model.training
    model.eval()
    with torch.no_grad():
        x = magnitude_to_tensor(mix_mag)
        mask, separated = model(x)
    if was_training:
        model.train()
    to_np = lambda t: t[0, 0].T.numpy().astype(float)
    return to_np(mask), to_np(separated)


def extract_feature(model: FeatureExtractor, mel):
    """Numpy-facing embedding of one (frames, n_mels) log-mel matrix."""
    was_training = model.training
    model.eval()
    with torch.no_grad():
        v = model(magnitude_to_tensor(mel))
    if was_training:
        model.train()
    return v[0].numpy().astype(float)


def extract_disentangled(model: DisentangledExtractor, mag):
    """Numpy-facing embedding of one (frames, bins) magnitude matrix."""
    was_training = model.training
    model.eval()
    with torch.no_grad():
        _, _, v = model(magnitude_to_tensor(mag))
    if was_training:
        model.train()
    return v[0].numpy().astype(float)
