#!/usr/bin/env python3
"""Pitch tracker error across the search band, for pure and harmonic tones.

Prints, per test frequency, the worst per-frame error and the voiced
fraction, so the effect of the lag band edges is easy to see.
"""

import argparse

import numpy as np

from ser.audio_io import AudioSignal, pre_emphasize
from ser.dsp_core import frame_signal
from ser.features import FeatureConfig, pitch_track


def harmonic_tone(f0, seconds, rate, n_harmonics, rng):
    t = np.arange(int(seconds * rate)) / rate
    x = sum(0.6 ** (h - 1) * np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi))
            for h in range(1, n_harmonics + 1) if h * f0 < rate / 2)
    return 0.9 * x / np.max(np.abs(x))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rate", type=int, default=16000)
    ap.add_argument("--lo", type=float, default=55.0)
    ap.add_argument("--hi", type=float, default=395.0)
    ap.add_argument("--steps", type=int, default=35)
    ap.add_argument("--harmonics", type=int, default=1)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = FeatureConfig()
    rng = np.random.default_rng(args.seed)
    print(f"{'f0 Hz':>8s} {'worst err':>10s} {'mean est':>10s} {'voiced':>7s}")
    worst_all = 0.0
    for f0 in np.linspace(args.lo, args.hi, args.steps):
        x = harmonic_tone(f0, 1.0, args.rate, args.harmonics, rng)
        sig = pre_emphasize(AudioSignal(x, args.rate))
        track = pitch_track(frame_signal(sig, cfg.frame_ms, cfg.hop_ms), cfg)
        voiced = track.pitch_hz[track.pitch_hz > 0]
        err = float(np.max(np.abs(voiced - f0))) if voiced.size else float("nan")
        worst_all = max(worst_all, err) if voiced.size else worst_all
        mean = float(voiced.mean()) if voiced.size else 0.0
        print(f"{f0:8.2f} {err:10.3f} {mean:10.3f} {track.voiced_fraction:7.2f}")
    print(f"worst voiced-frame error: {worst_all:.3f} Hz")


if __name__ == "__main__":
    main()
