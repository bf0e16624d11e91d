import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from ser.audio_io import AudioSignal
from ser.dsp_core import MagnitudeSpectrum, autocorrelation, frame_signal, hamming_window
from ser.errors import (
    BadBand,
    BadPitchBand,
    DegenerateFrame,
    DimensionMismatch,
    EmptyFrame,
    EmptyTrack,
    NoAnalyzableFrames,
)
from ser.features import (
    FeatureConfig,
    FeatureMode,
    PitchTrack,
    extract_features,
    feature_layout,
    frame_energy,
    hz_to_mel,
    lpc_levinson,
    levinson_durbin,
    lpcc_from_lpc,
    mel_filterbank,
    mel_to_hz,
    mfcc_frame,
    mfcc_track,
    pitch_stats,
    pitch_track,
    speech_rate,
    track_stats,
)

from conftest import tone
from oracles import lpc_dense, two_pass_stats

CFG = FeatureConfig()
RATE = 16000


def frames_of(x, cfg=CFG):
    return frame_signal(AudioSignal(x, RATE), cfg.frame_ms, cfg.hop_ms)


# energy and statistics

@pytest.mark.parametrize("frame,expected", [
    ([0.5, 0.5, 0.5, 0.5], 1.0),
    ([0.0, 0.0, 0.0], 0.0),
    ([1.0, -1.0], 2.0),
])
def test_frame_energy(frame, expected):
    assert frame_energy(frame) == expected


def test_frame_energy_empty():
    with pytest.raises(EmptyFrame):
        frame_energy([])


def test_track_stats_two_points():
    s = track_stats([1.0, 3.0])
    assert s.as_tuple() == (2.0, 3.0, 1.0, 2.0, 1.0)


def test_track_stats_constant():
    s = track_stats([0.7, 0.7, 0.7])
    assert s.std == 0.0 and s.range == 0.0


def test_track_stats_empty():
    with pytest.raises(EmptyTrack):
        track_stats([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_track_stats_against_two_pass(values):
    got = track_stats(values).as_tuple()
    want = two_pass_stats(values)
    assert got == pytest.approx(want, rel=1e-12, abs=1e-12 * (1 + max(abs(v) for v in values)))
    s = track_stats(values)
    assert s.min <= s.mean <= s.max and s.range >= 0 and s.std >= 0


# pitch

def test_pitch_200hz_sine():
    track = pitch_track(frames_of(tone(200.0)), CFG)
    assert track.voiced_fraction == 1.0
    # integer peak at lag 80; sub-sample refinement stays within a few mHz
    assert np.allclose(track.pitch_hz, 200.0, atol=0.01)


def test_pitch_silence_unvoiced():
    track = pitch_track(frames_of(np.zeros(RATE)), CFG)
    assert track.voiced_fraction == 0.0
    assert not np.any(track.pitch_hz)


def test_pitch_white_noise_mostly_unvoiced():
    x = 0.1 * np.random.default_rng(1234).standard_normal(RATE)
    track = pitch_track(frames_of(np.clip(x, -1, 1)), CFG)
    # regression value for this seed
    assert track.voiced_fraction == 0.0
    assert track.voiced_fraction < 0.5


def test_pitch_band_empty_for_rate():
    cfg = FeatureConfig(f_min=50.0, f_max=400.0)
    frames = frame_signal(AudioSignal(np.zeros(4000), 8000), 60, 30)
    # lag band is fine at 8 kHz
    pitch_track(frames, cfg)
    with pytest.raises(BadPitchBand):
        pitch_track(frames, FeatureConfig(f_min=3000.0, f_max=3999.0))


@given(st.floats(60.0, 380.0), st.floats(0.0, 2 * math.pi), st.floats(0.05, 1.0))
def test_pitch_values_in_band(freq, phase, amp):
    track = pitch_track(frames_of(tone(freq, 0.3, amplitude=amp, phase=phase)), CFG)
    voiced = track.pitch_hz[track.pitch_hz > 0]
    assert np.all((voiced >= CFG.f_min) & (voiced <= CFG.f_max))
    assert track.voiced_fraction == np.count_nonzero(track.pitch_hz) / track.pitch_hz.size


def test_pitch_stats_voiced_only():
    assert pitch_stats(PitchTrack(np.array([100.0, 200.0]), 1.0)).mean == 150.0
    assert pitch_stats(PitchTrack(np.array([100.0, 200.0]), 1.0)).range == 100.0
    s = pitch_stats(PitchTrack(np.array([0.0, 200.0, 0.0, 100.0]), 0.5))
    assert s == track_stats([200.0, 100.0])


def test_pitch_stats_all_unvoiced():
    assert pitch_stats(PitchTrack(np.zeros(5), 0.0)).as_tuple() == (0.0,) * 5


# speech rate

def test_speech_rate_silence():
    assert speech_rate(frames_of(np.zeros(2 * RATE)), CFG) == 0.0


def test_speech_rate_four_bursts():
    x = np.zeros(2 * RATE)
    burst = tone(200.0, 0.2)
    for start_s in (0.0, 0.5, 1.0, 1.5):
        i = int(start_s * RATE)
        x[i:i + burst.size] = burst
    assert speech_rate(frames_of(x), CFG) == 2.0


def test_speech_rate_continuous_tone():
    assert speech_rate(frames_of(tone(200.0, 1.0)), CFG) == 1.0


# mel filterbank and MFCC

def test_mel_of_1000hz():
    assert float(hz_to_mel(1000.0)) == pytest.approx(2595 * math.log10(1 + 1000 / 700), abs=1e-12)
    assert float(hz_to_mel(1000.0)) == pytest.approx(999.99, abs=0.01)
    assert float(mel_to_hz(hz_to_mel(1234.5))) == pytest.approx(1234.5, abs=1e-9)


def test_filterbank_shape_and_peaks():
    bank = mel_filterbank(1024, RATE, 26)
    assert bank.shape == (26, 513)
    assert np.all(bank >= 0) and np.all(bank.max(axis=1) <= 1.0)
    edges = mel_to_hz(np.linspace(0, hz_to_mel(RATE / 2), 28))
    spacing = RATE / 1024
    for i, row in enumerate(bank):
        half = min(edges[i + 1] - edges[i], edges[i + 2] - edges[i + 1])
        assert row.max() >= 1.0 - spacing / half


def test_filterbank_center_on_bin_is_one():
    # one filter whose mel midpoint is exactly 1000 Hz; bins are 1000 Hz apart
    f_high = float(mel_to_hz(2 * hz_to_mel(1000.0)))
    bank = mel_filterbank(16, RATE, 1, 0.0, f_high)
    assert bank[0, 1] == pytest.approx(1.0, abs=1e-9)


def test_filterbank_interior_partition_of_unity():
    bank = mel_filterbank(1024, RATE, 26)
    edges = mel_to_hz(np.linspace(0, hz_to_mel(RATE / 2), 28))
    freqs = np.arange(513) * RATE / 1024
    interior = (freqs >= edges[1]) & (freqs <= edges[-2])
    sums = bank[:, interior].sum(axis=0)
    assert np.all(np.abs(sums - 1.0) <= 0.02)


@pytest.mark.parametrize("lo,hi", [(0.0, 9000.0), (500.0, 500.0), (600.0, 100.0)])
def test_filterbank_bad_band(lo, hi):
    with pytest.raises(BadBand):
        mel_filterbank(512, RATE, 10, lo, hi)


def test_mfcc_constant_energies():
    # spectrum equal to one filter's response per filter is awkward; instead use
    # a bank whose rows all carry the same mass so a flat spectrum gives equal energies
    bank = np.zeros((26, 52))
    for i in range(26):
        bank[i, 2 * i:2 * i + 2] = 0.5
    spec = MagnitudeSpectrum(np.full(52, 3.0), 102, RATE)
    c = mfcc_frame(spec, bank, 13)
    assert np.all(np.abs(c[1:]) < 1e-9)
    assert c[0] == pytest.approx(math.sqrt(26) * math.log(9.0), abs=1e-9)


def test_mfcc_zero_spectrum_hits_floor():
    bank = mel_filterbank(1024, RATE, 26)
    c = mfcc_frame(MagnitudeSpectrum(np.zeros(513), 1024, RATE), bank, 13, 1e-10)
    assert c.shape == (13,)
    assert c[0] == pytest.approx(math.sqrt(26) * math.log(1e-10), abs=1e-9)
    assert np.all(np.abs(c[1:]) < 1e-9)


def test_mfcc_dimension_mismatch():
    bank = mel_filterbank(512, RATE, 26)
    with pytest.raises(DimensionMismatch):
        mfcc_frame(MagnitudeSpectrum(np.zeros(513), 1024, RATE), bank, 13)


@given(arrays(np.float64, 513, elements=st.floats(0, 1e6), fill=st.just(0.0)))
def test_mfcc_always_finite(bins):
    bank = mel_filterbank(1024, RATE, 26)
    c = mfcc_frame(MagnitudeSpectrum(bins, 1024, RATE), bank, 13)
    assert np.all(np.isfinite(c))


# LPC / LPCC

def test_levinson_order_one():
    a, e = levinson_durbin([1.0, 0.5], 1)
    assert a.tolist() == [0.5] and e == 0.75


def test_levinson_order_two():
    a, e = levinson_durbin([1.0, 0.5, 0.25], 2)
    assert np.allclose(a, [0.5, 0.0], atol=1e-12, rtol=0)
    assert e == pytest.approx(0.75, abs=1e-12)


def test_levinson_degenerate():
    with pytest.raises(DegenerateFrame):
        lpc_levinson(np.zeros(100), 4)


def test_lpc_matches_dense_solve(rng):
    x = hamming_window(rng.standard_normal(400))
    a, e = lpc_levinson(x, 8)
    r = autocorrelation(x, 8)
    a_ref, e_ref = lpc_dense(r, 8)
    assert np.allclose(a, a_ref, atol=1e-8, rtol=0)
    assert e == pytest.approx(e_ref, rel=1e-8)


def test_lpc_residual_non_increasing(rng):
    x = hamming_window(np.cumsum(rng.standard_normal(600)) * 0.01)
    errs = [lpc_levinson(x, p)[1] for p in range(1, 13)]
    assert all(b <= a * (1 + 1e-12) for a, b in zip(errs, errs[1:]))


def test_lpcc_hand():
    c = lpcc_from_lpc([0.5, 0.0], 2)
    # c2 = a2 + (1/2) c1 a1
    assert c.tolist() == [0.5, 0.125]


def test_lpcc_zero_and_shape():
    assert not np.any(lpcc_from_lpc(np.zeros(12), 12))
    assert lpcc_from_lpc(np.ones(12) * 0.1, 12).shape == (12,)


def test_lpcc_extends_past_order():
    c = lpcc_from_lpc([0.5], 3)
    assert c.tolist() == pytest.approx([0.5, 0.125, 0.5 ** 3 / 3], abs=1e-15)


# whole-utterance features

def test_layout_lengths():
    assert len(feature_layout(FeatureConfig(mode=FeatureMode.MFCC))) == 37
    assert len(feature_layout(FeatureConfig(mode=FeatureMode.LPCC))) == 35


def test_extract_lengths(sine_200):
    noisy = AudioSignal(np.clip(sine_200.samples * 0.5
                                + 0.01 * np.random.default_rng(0).standard_normal(RATE), -1, 1),
                        RATE)
    mf = extract_features(noisy, FeatureConfig(mode="MFCC"))
    lp = extract_features(noisy, FeatureConfig(mode="LPCC"))
    assert len(mf) == 37 and len(lp) == 35
    assert mf.layout[:11] == lp.layout[:11]
    assert np.all(np.isfinite(mf.values)) and np.all(np.isfinite(lp.values))


def test_extract_sine_prosody(sine_200):
    v = extract_features(sine_200, CFG)
    named = dict(zip(v.layout, v.values))
    assert named["pitch_mean"] == pytest.approx(200.0, abs=0.01)
    assert named["pitch_std"] == pytest.approx(0.0, abs=0.01)
    assert named["speech_rate"] == 1.0


def test_extract_deterministic(sine_200):
    a = extract_features(sine_200, CFG).values
    b = extract_features(AudioSignal(sine_200.samples.copy(), RATE), CFG).values
    assert a.tobytes() == b.tobytes()


def test_extract_lpcc_silence_fails():
    with pytest.raises(NoAnalyzableFrames):
        extract_features(AudioSignal(np.zeros(RATE), RATE), FeatureConfig(mode="LPCC"))


def test_amplitude_scaling(rng):
    x = 0.08 * tone(150.0) + 0.005 * rng.standard_normal(RATE)
    base = AudioSignal(x, RATE)
    loud = AudioSignal(10 * x, RATE)
    f_base, f_loud = frames_of(base.samples), frames_of(loud.samples)

    assert np.allclose(pitch_track(f_base, CFG).pitch_hz, pitch_track(f_loud, CFG).pitch_hz,
                       rtol=1e-9, atol=0)
    assert speech_rate(f_base, CFG) == speech_rate(f_loud, CFG)
    e_base = np.einsum("ij,ij->i", f_base.frames, f_base.frames)
    e_loud = np.einsum("ij,ij->i", f_loud.frames, f_loud.frames)
    assert np.allclose(e_loud, 100 * e_base, rtol=1e-12)

    m_base = mfcc_track(hamming_window(f_base.frames), RATE, CFG)
    m_loud = mfcc_track(hamming_window(f_loud.frames), RATE, CFG)
    assert np.all(np.abs(m_loud[:, 1:] - m_base[:, 1:]) < 1e-6)
    shift = math.sqrt(CFG.n_mel_filters) * math.log(100.0)
    assert np.allclose(m_loud[:, 0] - m_base[:, 0], shift, atol=1e-6)


def test_config_validation():
    with pytest.raises(ValueError):
        FeatureConfig(n_mfcc=30)
    with pytest.raises(ValueError):
        FeatureConfig(f_min=400.0, f_max=50.0)
    with pytest.raises(BadPitchBand):
        extract_features(AudioSignal(np.zeros(8000), 8000), FeatureConfig(f_max=4500.0))
