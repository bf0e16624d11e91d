import os

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ser.audio_io import read_wav
from ser.dataset import (
    MANIFEST_HEADER,
    Dataset,
    SampleMeta,
    SynthSpec,
    load_manifest,
    parse_sample_name,
    sample_filename,
    split_train_test,
    synth_corpus,
    write_manifest,
)
from ser.errors import (
    BadHeader,
    DuplicatePath,
    EmptyStratum,
    RowError,
    UnknownEmotionToken,
    UnparseableName,
)
from ser.features import FeatureConfig, extract_features, feature_layout
from ser.labels import EMOTIONS, GENDERS, Emotion, Gender


@pytest.mark.parametrize("name, speaker, gender, emotion", [
    ("cc_001(m)_hotAnger_4.wav", "cc_001", Gender.M, Emotion.ANGRY),
    ("gg_001(f)_sadness_passive_negative_13a.wav", "gg_001", Gender.F, Emotion.SAD),
    ("cl_001(m)_happy_active_positive_4.wav", "cl_001", Gender.M, Emotion.HAPPY),
])
def test_corpus_names(name, speaker, gender, emotion):
    meta = parse_sample_name(name)
    assert (meta.speaker_id, meta.gender, meta.emotion) == (speaker, gender, emotion)


def test_name_tokens_case_insensitive_and_first_wins():
    assert parse_sample_name("x(F)_PANIC_angry_1.wav").emotion is Emotion.FEAR
    assert parse_sample_name("dir/sub/x(m)_foo_Sad.wav").emotion is Emotion.SAD


def test_name_errors():
    with pytest.raises(UnparseableName):
        parse_sample_name("no_gender_happy.wav")
    with pytest.raises(UnknownEmotionToken) as exc:
        parse_sample_name("cc_001(m)_joy_4.wav")
    assert "joy" in str(exc.value)


def test_custom_token_table():
    meta = parse_sample_name("a(m)_elation_1.wav", {"elation": Emotion.HAPPY})
    assert meta.emotion is Emotion.HAPPY


def _write_csv(path, rows, header=",".join(MANIFEST_HEADER)):
    path.write_text("\n".join([header] + rows) + "\n", encoding="utf-8")
    return path


def test_manifest_hundred_rows(tmp_path):
    rows = [f"{sample_filename(EMOTIONS[i % 4], Gender.M, i)},,,," for i in range(100)]
    ds = load_manifest(_write_csv(tmp_path / "m.csv", rows))
    assert len(ds) == 100
    assert sum(ds.counts.values()) == 100
    assert ds.counts[(Emotion.HAPPY, Gender.M)] == 25
    assert ds.root == str(tmp_path)


def test_manifest_fallback_and_explicit_columns(tmp_path):
    ds = load_manifest(_write_csv(tmp_path / "m.csv", [
        "cc_001(m)_hotAnger_4.wav,,,,LDC",
        "other.wav,Sad,f,spk9,",
        "gg_001(f)_fear_2.wav,happy,,,",
    ]))
    a, b, c = ds.samples
    assert (a.speaker_id, a.gender, a.emotion, a.dataset_tag) == ("cc_001", Gender.M, Emotion.ANGRY, "LDC")
    assert (b.speaker_id, b.gender, b.emotion, b.dataset_tag) == ("spk9", Gender.F, Emotion.SAD, None)
    # an explicit column wins over the filename
    assert (c.gender, c.emotion) == (Gender.F, Emotion.HAPPY)


def test_manifest_row_errors_aggregated(tmp_path):
    with pytest.raises(RowError) as exc:
        load_manifest(_write_csv(tmp_path / "m.csv", [
            "cc_001(m)_happy_1.wav,,,,",
            "weird.wav,joy,,,",
            "cc_001(m)_sad_1.wav,,x,,",
            "only,three,cols",
        ]))
    lines = [line for line, _ in exc.value.problems]
    assert lines == [3, 4, 5]
    assert "UnknownEmotionToken" in exc.value.problems[0][1]


def test_manifest_bad_header(tmp_path):
    with pytest.raises(BadHeader):
        load_manifest(_write_csv(tmp_path / "m.csv", ["a,b"], header="file,label"))


def test_manifest_duplicate(tmp_path):
    with pytest.raises(DuplicatePath):
        load_manifest(_write_csv(tmp_path / "m.csv", ["a(m)_sad_1.wav,,,,", "a(m)_sad_1.wav,,,,"]))


def test_manifest_missing_file(tmp_path):
    with pytest.raises(OSError):
        load_manifest(tmp_path / "absent.csv")


def test_manifest_roundtrip_idempotent(tmp_path):
    ds = load_manifest(_write_csv(tmp_path / "m.csv", [
        f"{sample_filename(e, g, 1)},,,," for e in EMOTIONS for g in GENDERS]))
    write_manifest(ds, tmp_path / "again.csv")
    again = load_manifest(tmp_path / "again.csv")
    assert again.samples == ds.samples


def _fake(n_per=(10, 10), genders=GENDERS):
    samples = []
    for e in EMOTIONS:
        for g, n in zip(genders, n_per):
            samples += [SampleMeta(f"{e.value}_{g.value}_{k}.wav", "s", g, e) for k in range(n)]
    return Dataset(samples)


def test_split_seventy_thirty():
    ds = _fake((25,), genders=(Gender.M,))
    assert len(ds) == 100
    train, test = split_train_test(ds, 0.7, seed=0)
    assert (len(train), len(test)) == (70, 30)


def test_split_deterministic_and_seed_sensitive():
    ds = _fake()
    a = split_train_test(ds, 0.7, seed=3)
    b = split_train_test(ds, 0.7, seed=3)
    c = split_train_test(ds, 0.7, seed=4)
    assert a[0].samples == b[0].samples and a[1].samples == b[1].samples
    assert set(a[0].samples) != set(c[0].samples)


@pytest.mark.parametrize("fraction", [0.0, 1.0, -0.2, 1.5])
def test_split_rejects_closed_ends(fraction):
    with pytest.raises(ValueError):
        split_train_test(_fake(), fraction, seed=0)


def test_split_empty():
    with pytest.raises(EmptyStratum):
        split_train_test(Dataset([]), 0.7)


@given(st.lists(st.integers(1, 12), min_size=8, max_size=8),
       st.floats(0.05, 0.95), st.integers(0, 2**31))
def test_split_is_stratified_partition(sizes, fraction, seed):
    samples = []
    for idx, (e, g) in enumerate((e, g) for e in EMOTIONS for g in GENDERS):
        samples += [SampleMeta(f"{idx}_{k}", "s", g, e) for k in range(sizes[idx])]
    ds = Dataset(samples)
    train, test = split_train_test(ds, fraction, seed)
    tr, te = set(train.samples), set(test.samples)
    assert tr | te == set(samples) and not tr & te
    for key, n in ds.counts.items():
        assert abs(train.counts.get(key, 0) - fraction * n) < 1.0 + 1e-9


def test_synth_single_gender_hundred_files(tmp_path):
    spec = SynthSpec(gender_offsets_hz={Gender.M: -60.0}, duration_s=0.3)
    ds = synth_corpus(spec, tmp_path)
    assert len(ds) == 100
    assert len(list(tmp_path.glob("*.wav"))) == 100
    assert load_manifest(tmp_path / "manifest.csv").samples == ds.samples


def test_synth_default_is_two_genders():
    assert SynthSpec().genders == (Gender.M, Gender.F)


def test_synth_byte_identical(tmp_path):
    spec = SynthSpec(per_class=2, duration_s=0.5, seed=42)
    synth_corpus(spec, tmp_path / "a")
    synth_corpus(spec, tmp_path / "b")
    names = sorted(os.listdir(tmp_path / "a"))
    assert names == sorted(os.listdir(tmp_path / "b"))
    for n in names:
        assert (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes()
    synth_corpus(SynthSpec(per_class=2, duration_s=0.5, seed=43), tmp_path / "c")
    assert (tmp_path / "a" / names[0]).read_bytes() != (tmp_path / "c" / names[0]).read_bytes()


def test_synth_happy_male_pitch(tmp_path):
    ds = synth_corpus(SynthSpec(per_class=3, seed=9), tmp_path)
    cfg = FeatureConfig()
    idx = feature_layout(cfg).index("pitch_mean")
    for s in ds.samples:
        if (s.emotion, s.gender) == (Emotion.HAPPY, Gender.M):
            v = extract_features(read_wav(ds.resolve(s)), cfg)
            assert v.values[idx] == pytest.approx(160.0, abs=2.0)


def test_synth_pitch_must_stay_in_band():
    with pytest.raises(ValueError):
        SynthSpec(gender_offsets_hz={Gender.M: -200.0})


@given(st.sampled_from(EMOTIONS), st.sampled_from(GENDERS), st.integers(1, 999))
def test_filename_writer_parses_back(emotion, gender, index):
    meta = parse_sample_name(sample_filename(emotion, gender, index))
    assert (meta.emotion, meta.gender) == (emotion, gender)
