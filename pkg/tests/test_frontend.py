import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from asrlab.frontend import (
    ENERGY_FLOOR,
    FeatureFrames,
    SpecAugmentPolicy,
    compute_logmel,
    mel_filterbank,
    read_feat,
    read_wav,
    spec_augment,
    stack_and_subsample,
    write_feat,
    write_wav,
)


class TestLogMel:
    def test_one_second_at_16k(self):
        pcm = np.random.default_rng(0).uniform(-0.5, 0.5, 16000)
        feats = compute_logmel(pcm, 16000)
        # 512-sample window, 160-sample hop: 1 + (16000-512)//160
        assert feats.num_frames == 97
        assert feats.dim == 80
        assert feats.frame_rate_ms == 10

    def test_silence_hits_energy_floor(self):
        feats = compute_logmel(np.zeros(1600), 16000)
        assert np.allclose(feats.frames, np.log(ENERGY_FLOOR))

    def test_pure_tone_lands_in_one_bin(self):
        sr = 16000
        t = np.arange(sr) / sr
        feats = compute_logmel(0.5 * np.sin(2 * np.pi * 1000.0 * t), sr)
        argmax = feats.frames.argmax(axis=1)
        assert len(set(argmax.tolist())) == 1
        # the winning bin's filter must actually cover 1 kHz
        fb = mel_filterbank(80, 512, sr)
        k = int(round(1000.0 / (sr / 2) * 256))
        assert fb[argmax[0], k] > 0

    def test_too_short_audio_rejected(self):
        with pytest.raises(ValueError, match="too short"):
            compute_logmel(np.zeros(100), 16000)
        with pytest.raises(ValueError, match="too short"):
            compute_logmel(np.zeros(0), 16000)

    def test_low_sample_rate_rejected(self):
        with pytest.raises(ValueError, match="sample rate"):
            compute_logmel(np.zeros(16000), 4000)

    def test_output_finite_for_finite_input(self):
        rng = np.random.default_rng(1)
        pcm = rng.uniform(-1, 1, 5000) * np.linspace(0, 1e-8, 5000)
        feats = compute_logmel(pcm, 16000)
        assert np.all(np.isfinite(feats.frames))

    def test_works_at_8k(self):
        feats = compute_logmel(np.random.default_rng(2).uniform(-1, 1, 8000), 8000)
        assert feats.dim == 80
        assert feats.num_frames == 1 + (8000 - 256) // 80


class TestStacking:
    def make(self, t):
        data = np.arange(t * 80, dtype=np.float32).reshape(t, 80)
        return FeatureFrames(data, frame_rate_ms=10)

    def test_exact_multiple(self):
        out = stack_and_subsample(self.make(9))
        assert out.num_frames == 3
        assert out.dim == 240
        assert out.frame_rate_ms == 30

    def test_remainder_repeats_last_frame(self):
        feats = self.make(10)
        out = stack_and_subsample(feats)
        assert out.num_frames == 4
        last = out.frames[3].reshape(3, 80)
        assert np.array_equal(last[0], feats.frames[9])
        assert np.array_equal(last[1], feats.frames[9])
        assert np.array_equal(last[2], feats.frames[9])

    def test_single_frame_tripled(self):
        feats = self.make(1)
        out = stack_and_subsample(feats)
        assert out.num_frames == 1
        assert np.array_equal(out.frames[0].reshape(3, 80), np.repeat(feats.frames, 3, axis=0))

    def test_wrong_dim_rejected(self):
        with pytest.raises(ValueError, match="80"):
            stack_and_subsample(FeatureFrames(np.zeros((5, 40), np.float32), frame_rate_ms=10))

    def test_wrong_rate_rejected(self):
        stacked = stack_and_subsample(self.make(6))
        with pytest.raises(ValueError):
            stack_and_subsample(stacked)

    @given(st.integers(min_value=1, max_value=50))
    @settings(max_examples=25, deadline=None)
    def test_roundtrip_on_multiples_of_three(self, k):
        t = 3 * k
        feats = FeatureFrames(
            np.random.default_rng(t).standard_normal((t, 80)).astype(np.float32), 10
        )
        out = stack_and_subsample(feats)
        assert out.num_frames == k
        assert np.array_equal(out.frames.reshape(t, 80), feats.frames)


class TestSpecAugment:
    def test_identity_policy(self):
        feats = FeatureFrames(np.random.default_rng(0).standard_normal((40, 80)), 10)
        policy = SpecAugmentPolicy(0, 27, 0, 50)
        out = spec_augment(feats, policy, np.random.default_rng(1))
        assert np.array_equal(out.frames, feats.frames)

    def test_deterministic_under_seed(self):
        feats = FeatureFrames(np.random.default_rng(0).standard_normal((60, 80)), 10)
        policy = SpecAugmentPolicy()
        a = spec_augment(feats, policy, np.random.default_rng(7))
        b = spec_augment(feats, policy, np.random.default_rng(7))
        assert np.array_equal(a.frames, b.frames)

    def test_freq_mask_budget(self):
        # two masks of max length 27 can blank at most 54 of 80 bins
        feats = FeatureFrames(np.ones((30, 80), np.float32), 10)
        policy = SpecAugmentPolicy(2, 27, 0, 50, mask_value=np.nan)
        for seed in range(50):
            out = spec_augment(feats, policy, np.random.default_rng(seed))
            masked_bins = np.isnan(out.frames).any(axis=0).sum()
            assert masked_bins <= 54

    def test_shape_preserved_and_structure(self):
        rng = np.random.default_rng(3)
        feats = FeatureFrames(rng.standard_normal((70, 80)).astype(np.float32) + 10, 10)
        policy = SpecAugmentPolicy(mask_value=0.0)
        out = spec_augment(feats, policy, np.random.default_rng(11))
        assert out.frames.shape == feats.frames.shape
        changed = out.frames != feats.frames
        # altered cells form full-time bands (freq masks) or full-freq bands
        cols = changed.all(axis=0)
        rows = changed.all(axis=1)
        residual = changed & ~cols[None, :] & ~rows[:, None]
        assert not residual.any()
        assert np.array_equal(out.frames[~changed], feats.frames[~changed])

    def test_mask_longer_than_axis_clipped(self):
        feats = FeatureFrames(np.ones((4, 80), np.float32), 10)
        policy = SpecAugmentPolicy(0, 0, 2, 50)
        out = spec_augment(feats, policy, np.random.default_rng(0))
        assert out.frames.shape == (4, 80)

    def test_negative_policy_rejected(self):
        with pytest.raises(ValueError):
            SpecAugmentPolicy(num_freq_masks=-1)


class TestFileFormats:
    def test_wav_roundtrip(self, tmp_path):
        rng = np.random.default_rng(5)
        samples = rng.uniform(-0.9, 0.9, 3200)
        path = tmp_path / "a.wav"
        write_wav(path, samples, 16000)
        back, rate = read_wav(path)
        assert rate == 16000
        assert back.shape == (3200,)
        assert np.max(np.abs(back - samples)) < 1.0 / 32768

    def test_feat_roundtrip(self, tmp_path):
        frames = np.random.default_rng(6).standard_normal((17, 240)).astype(np.float32)
        path = tmp_path / "a.feat"
        write_feat(path, frames)
        assert path.stat().st_size == 16 + 17 * 240 * 4
        back = read_feat(path)
        assert np.array_equal(back, frames)

    def test_feat_bad_magic(self, tmp_path):
        path = tmp_path / "bad.feat"
        path.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(ValueError, match="magic"):
            read_feat(path)

    def test_feat_truncated(self, tmp_path):
        frames = np.ones((4, 8), np.float32)
        path = tmp_path / "t.feat"
        write_feat(path, frames)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ValueError, match="truncated"):
            read_feat(path)
