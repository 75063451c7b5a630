import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from patchsep.audio_io import Waveform, read_wav, write_wav
from patchsep.errors import EmptyAudio, IoFailure, MalformedContainer, UnsupportedEncoding


def riff(fmt_code, channels, rate, bits, payload, extra_chunks=b""):
    block = channels * bits // 8
    fmt = struct.pack("<HHIIHH", fmt_code, channels, rate, rate * block, block, bits)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt + extra_chunks
    body += b"data" + struct.pack("<I", len(payload)) + payload
    return b"RIFF" + struct.pack("<I", len(body)) + body


def write_bytes(tmp_path, data, name="x.wav"):
    path = tmp_path / name
    path.write_bytes(data)
    return path


def test_16bit_mono_scaling(tmp_path):
    path = write_bytes(tmp_path, riff(1, 1, 8000, 16, struct.pack("<h", 16384)))
    w = read_wav(path)
    assert w.sample_rate_hz == 8000
    np.testing.assert_array_equal(w.samples, [0.5])


def test_stereo_downmix_is_channel_mean(tmp_path):
    left, right = round(0.2 * 32768), round(0.6 * 32768)
    path = write_bytes(tmp_path, riff(1, 2, 8000, 16, struct.pack("<hh", left, right)))
    assert read_wav(path).samples[0] == pytest.approx(0.4, abs=1 / 32768)


def test_downmix_order_independent(tmp_path, rng):
    frames = rng.integers(-32768, 32767, size=(50, 2)).astype("<i2")
    a = read_wav(write_bytes(tmp_path, riff(1, 2, 8000, 16, frames.tobytes()), "a.wav"))
    b = read_wav(write_bytes(tmp_path, riff(1, 2, 8000, 16, frames[:, ::-1].copy().tobytes()), "b.wav"))
    np.testing.assert_array_equal(a.samples, b.samples)


def test_eight_seconds_at_8khz(tmp_path):
    write_wav(tmp_path / "long.wav", Waveform(np.zeros(64000), 8000))
    w = read_wav(tmp_path / "long.wav")
    assert len(w) == 64000 and w.duration_s == 8.0


@pytest.mark.parametrize("bits,payload,expected", [
    (8, bytes([0, 128, 192]), [-1.0, 0.0, 0.5]),
    (24, b"\x00\x00\x40" + b"\x00\x00\xc0", [0.5, -0.5]),
    (32, struct.pack("<ii", 1 << 30, -(1 << 31)), [0.5, -1.0]),
])
def test_integer_widths(tmp_path, bits, payload, expected):
    w = read_wav(write_bytes(tmp_path, riff(1, 1, 16000, bits, payload)))
    np.testing.assert_allclose(w.samples, expected)


def test_float32_and_extensible(tmp_path):
    payload = struct.pack("<ff", 0.25, -0.75)
    assert list(read_wav(write_bytes(tmp_path, riff(3, 1, 8000, 32, payload))).samples) == [0.25, -0.75]

    # WAVE_FORMAT_EXTENSIBLE with a PCM sub-format GUID.
    fmt = struct.pack("<HHIIHHHHI", 0xFFFE, 1, 8000, 16000, 2, 16, 22, 16, 0)
    fmt += struct.pack("<H", 1) + bytes(14)
    body = b"WAVE" + b"fmt " + struct.pack("<I", len(fmt)) + fmt
    body += b"data" + struct.pack("<I", 2) + struct.pack("<h", -16384)
    path = write_bytes(tmp_path, b"RIFF" + struct.pack("<I", len(body)) + body, "ext.wav")
    assert read_wav(path).samples[0] == -0.5


def test_skips_unknown_chunks(tmp_path):
    extra = b"LIST" + struct.pack("<I", 3) + b"abc" + b"\x00"
    w = read_wav(write_bytes(tmp_path, riff(1, 1, 8000, 16, struct.pack("<h", 8192), extra)))
    assert w.samples[0] == 0.25


def test_errors(tmp_path):
    with pytest.raises(MalformedContainer):
        read_wav(write_bytes(tmp_path, b"RIFX" + bytes(40), "bad.wav"))
    with pytest.raises(MalformedContainer):
        read_wav(write_bytes(tmp_path, riff(1, 1, 8000, 16, b"")[:20], "cut.wav"))
    with pytest.raises(UnsupportedEncoding):
        read_wav(write_bytes(tmp_path, riff(2, 1, 8000, 4, b"\x00\x00"), "adpcm.wav"))
    with pytest.raises(EmptyAudio):
        read_wav(write_bytes(tmp_path, riff(1, 1, 8000, 16, b""), "empty.wav"))
    with pytest.raises(IoFailure):
        read_wav(tmp_path / "missing.wav")
    with pytest.raises(IoFailure):
        write_wav(tmp_path / "no" / "such" / "dir.wav", Waveform([0.0], 8000))
    with pytest.raises(EmptyAudio):
        write_wav(tmp_path / "e.wav", Waveform([], 8000))


def test_write_examples(tmp_path):
    for value, expected in [(0.0, 0.0), (2.0, 32767 / 32768)]:
        write_wav(tmp_path / "v.wav", Waveform([value], 8000))
        assert read_wav(tmp_path / "v.wav").samples[0] == expected
    write_wav(tmp_path / "h.wav", Waveform([-0.5], 8000))
    # Independent quantize/dequantize oracle.
    oracle = max(-32768, min(32767, round(-0.5 * 32768))) / 32768
    assert abs(read_wav(tmp_path / "h.wav").samples[0] - oracle) <= 1 / 32768


def test_written_header_is_pcm16_mono(tmp_path):
    write_wav(tmp_path / "h.wav", Waveform([0.1, -0.1], 22050))
    data = (tmp_path / "h.wav").read_bytes()
    assert data[:4] == b"RIFF" and data[8:16] == b"WAVEfmt "
    code, channels, rate, _, _, bits = struct.unpack_from("<HHIIHH", data, 20)
    assert (code, channels, rate, bits) == (1, 1, 22050, 16)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1.0, 1.0, exclude_max=True), min_size=1, max_size=200))
def test_roundtrip_within_one_step(tmp_path_factory, samples):
    path = tmp_path_factory.mktemp("rt") / "rt.wav"
    write_wav(path, Waveform(samples, 8000))
    back = read_wav(path).samples
    assert np.max(np.abs(back - np.asarray(samples))) <= 1 / 32768


def test_waveform_rejects_bad_rate():
    with pytest.raises(ValueError):
        Waveform([0.0], 0)
