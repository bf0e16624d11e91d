"""Glue used by the CLI and the experiment scripts: extract, train, evaluate."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

from .audio_io import read_wav
from .classifier import EmotionModel, Strategy, train_gender_dependent, train_oaa
from .dataset import Dataset, SampleMeta, split_train_test
from .features import FeatureConfig, FeatureMode, FeatureVector, extract_features
from .report import EvaluationReport, evaluate_model
from .svm_core import SvmParams


def _extract_one(args):
    path, cfg = args
    return extract_features(read_wav(path), cfg)


def extract_dataset(ds: Dataset, cfg: FeatureConfig, workers: int = 1) -> List[FeatureVector]:
    """Features for every sample, in dataset order regardless of worker count."""
    jobs = [(ds.resolve(s), cfg) for s in ds.samples]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_extract_one, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_extract_one(j) for j in jobs]


def train_model(strategy: Strategy, samples: Sequence[SampleMeta], vectors: Sequence[FeatureVector],
                params: SvmParams, cfg: FeatureConfig) -> EmotionModel:
    if strategy is Strategy.OAA:
        return train_oaa(zip(vectors, (s.emotion for s in samples)), params, cfg)
    return train_gender_dependent(
        zip(vectors, (s.emotion for s in samples), (s.gender for s in samples)), params, cfg)


def evaluate(model: EmotionModel, samples: Sequence[SampleMeta], vectors: Sequence[FeatureVector],
             dataset_tag: Optional[str] = None) -> EvaluationReport:
    test = [(v, s.emotion, s.gender) for v, s in zip(vectors, samples)]
    return evaluate_model(model, test, dataset_tag)


@dataclass
class ExperimentResult:
    model: EmotionModel
    report: EvaluationReport


def run_experiment(ds: Dataset, strategy: Strategy, cfg: FeatureConfig, params: SvmParams,
                   train_fraction: float = 0.7, seed: int = 0, workers: int = 1,
                   features: Optional[Dict[str, FeatureVector]] = None,
                   dataset_tag: Optional[str] = None) -> ExperimentResult:
    """Split, train and evaluate once. ``features`` (path -> vector) skips re-extraction."""
    train, test = split_train_test(ds, train_fraction, seed)
    if features is None:
        features = dict(zip((s.path for s in ds.samples), extract_dataset(ds, cfg, workers)))
    model = train_model(strategy, train.samples, [features[s.path] for s in train.samples],
                        params, cfg)
    report = evaluate(model, test.samples, [features[s.path] for s in test.samples], dataset_tag)
    return ExperimentResult(model, report)


def default_workers() -> int:
    return os.cpu_count() or 1
