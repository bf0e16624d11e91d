import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from ser.audio_io import AudioSignal

settings.register_profile(
    "default", max_examples=60, deadline=None,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


def tone(freq, seconds=1.0, rate=16000, amplitude=1.0, phase=0.0):
    t = np.arange(int(round(seconds * rate))) / rate
    return amplitude * np.sin(2 * np.pi * freq * t + phase)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def sine_200():
    return AudioSignal(tone(200.0), 16000)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """Default synthetic corpus, 10 files per (emotion, gender), with MFCC features."""
    from ser.dataset import SynthSpec, synth_corpus
    from ser.features import FeatureConfig
    from ser.pipeline import extract_dataset

    ds = synth_corpus(SynthSpec(per_class=10, seed=11), tmp_path_factory.mktemp("small"))
    feats = dict(zip((s.path for s in ds.samples), extract_dataset(ds, FeatureConfig())))
    return ds, feats


@pytest.fixture(scope="session")
def confounded_corpus(tmp_path_factory):
    from ser.dataset import confounded_spec, synth_corpus
    from ser.features import FeatureConfig
    from ser.pipeline import extract_dataset

    ds = synth_corpus(confounded_spec(per_class=10, seed=5), tmp_path_factory.mktemp("conf"))
    feats = dict(zip((s.path for s in ds.samples), extract_dataset(ds, FeatureConfig())))
    return ds, feats
