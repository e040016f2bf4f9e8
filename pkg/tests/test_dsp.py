"""
Tests for the block DFT and overlap-save primitives
"""
import numpy as np
import pytest
from numpy.testing import assert_allclose

from airsubspace.dsp import (
    LoudspeakerBuffer,
    block_count,
    constrain_gradient,
    dft,
    embed_filter,
    embed_filters,
    extract_filter,
    extract_filters,
    idft,
    os_convolve,
    zero_pad_block,
)
from airsubspace.models import FrameConfig


@pytest.fixture
def frame():
    return FrameConfig(filter_length=16, frame_shift=8, num_channels=2, fs=8000)


class TestTransforms:
    """Test DFT convention and embedding"""

    def test_round_trip(self, frame, rng):
        """Test idft inverts dft"""
        x = rng.standard_normal(frame.dft_length)
        assert_allclose(idft(dft(x, frame), frame).real, x, atol=1e-12)

    def test_parseval(self, frame, rng):
        """Test the unnormalized forward transform scales energy by M"""
        x = rng.standard_normal(frame.dft_length)
        assert np.sum(np.abs(dft(x)) ** 2) == pytest.approx(frame.dft_length * np.sum(x**2))

    def test_length_check(self, frame):
        """Test wrong block lengths are rejected"""
        with pytest.raises(ValueError, match="length"):
            dft(np.zeros(5), frame)

    def test_embed_extract(self, frame, rng):
        """Test extract_filter is a left inverse of embed_filter"""
        a = rng.standard_normal(frame.filter_length)
        atf = embed_filter(a, frame)
        assert atf.shape == (frame.dft_length,)
        assert_allclose(extract_filter(atf, frame), a, atol=1e-12)

    def test_embed_stacked(self, frame, rng):
        """Test stacked vectors map to per-channel transfer functions"""
        w = rng.standard_normal((3, frame.vector_length))
        atfs = embed_filters(w, frame)
        assert atfs.shape == (3, frame.num_channels, frame.dft_length)
        assert_allclose(atfs[1, 1], embed_filter(w[1, frame.filter_length:], frame))
        assert_allclose(extract_filters(atfs, frame), w, atol=1e-12)


class TestConstrainGradient:
    """Test the gradient constraint G"""

    def test_idempotent(self, frame, rng):
        """Test G is a projector"""
        v = rng.standard_normal(frame.dft_length) + 1j * rng.standard_normal(frame.dft_length)
        once = constrain_gradient(v, frame)
        assert_allclose(constrain_gradient(once, frame), once, atol=1e-12)

    def test_hermitian(self, frame, rng):
        """Test <Gu, v> = <u, Gv>"""
        M = frame.dft_length
        u = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        v = rng.standard_normal(M) + 1j * rng.standard_normal(M)
        lhs = np.vdot(constrain_gradient(u, frame), v)
        rhs = np.vdot(u, constrain_gradient(v, frame))
        assert lhs == pytest.approx(rhs)

    def test_fixes_embedded_filters(self, frame, rng):
        """Test transfer functions of L-tap filters are left unchanged"""
        atf = embed_filter(rng.standard_normal(frame.filter_length), frame)
        assert_allclose(constrain_gradient(atf, frame), atf, atol=1e-12)

    def test_complex_linear(self, frame, rng):
        """Test G(i v) = i G(v)"""
        v = rng.standard_normal(frame.dft_length) + 1j * rng.standard_normal(frame.dft_length)
        assert_allclose(constrain_gradient(1j * v, frame), 1j * constrain_gradient(v, frame), atol=1e-12)


class TestOverlapSave:
    """Test overlap-save convolution"""

    @pytest.mark.parametrize("seed", range(50))
    def test_matches_direct_convolution(self, frame, seed):
        """Test streamed overlap-save equals one direct linear convolution"""
        rng = np.random.default_rng(seed)
        L, R, M = frame.filter_length, frame.frame_shift, frame.dft_length
        blocks = 5
        h = rng.standard_normal(L)
        x = rng.standard_normal(blocks * R)
        expected = np.convolve(x, h)[: blocks * R]
        padded = np.concatenate([np.zeros(L), x])
        atf = embed_filter(h, frame)
        out = np.concatenate([os_convolve(padded[t * R: t * R + M], atf, frame) for t in range(blocks)])
        assert_allclose(out, expected, atol=1e-10)

    def test_stacked_channels(self, frame, rng):
        """Test per-channel outputs for stacked inputs"""
        history = rng.standard_normal((frame.num_channels, frame.dft_length))
        atfs = embed_filters(rng.standard_normal(frame.vector_length), frame)
        out = os_convolve(history, atfs, frame)
        assert out.shape == (frame.num_channels, frame.frame_shift)
        assert_allclose(out[0], os_convolve(history[0], atfs[0], frame))


class TestLoudspeakerBuffer:
    """Test the sliding loudspeaker window"""

    def test_push_shifts_history(self, frame):
        """Test the window keeps the most recent M samples"""
        buf = LoudspeakerBuffer(frame)
        R = frame.frame_shift
        first = np.ones((frame.num_channels, R))
        second = 2 * np.ones((frame.num_channels, R))
        buf.push(first)
        spectra = buf.push(second)
        history = buf.history
        assert_allclose(history[:, -R:], second)
        assert_allclose(history[:, -2 * R: -R], first)
        assert_allclose(history[:, : -2 * R], 0.0)
        assert_allclose(spectra, np.fft.fft(history, axis=-1))

    def test_rejects_wrong_shape(self, frame):
        """Test block shape validation"""
        buf = LoudspeakerBuffer(frame)
        with pytest.raises(ValueError, match="shape"):
            buf.push(np.zeros((1, frame.frame_shift)))

    def test_reset(self, frame, rng):
        """Test reset clears the history"""
        buf = LoudspeakerBuffer(frame)
        buf.push(rng.standard_normal((frame.num_channels, frame.frame_shift)))
        buf.reset()
        assert not np.any(buf.history)


class TestHelpers:
    """Test padding and block counting"""

    def test_zero_pad_block(self, frame):
        """Test Q1 prepends L zeros"""
        padded = zero_pad_block(np.arange(1.0, frame.frame_shift + 1), frame)
        assert padded.shape == (frame.dft_length,)
        assert not np.any(padded[: frame.filter_length])
        assert padded[-1] == frame.frame_shift

    def test_block_count(self, frame):
        """Test only complete blocks count"""
        assert block_count(3 * frame.frame_shift + 1, frame) == 3
