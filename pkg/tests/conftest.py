"""Shared fixtures: one synthetic dataset and the trained models under test.

Training is the expensive part, so every model is session-scoped and trained
with the shipped default GanConfig (the acceptance criteria are stated
against default training). Wall-clock training times are recorded so the
acceptance suite can bound them.
"""

import time

import numpy as np
import pytest

from profilegan import gan, synthetic
from profilegan.data import (
    build_training_set,
    build_type_registry,
    registry_for_labels,
)

SYNTH_SEED = 11
SYNTH_YEARS = (2017, 2018, 2019)


@pytest.fixture(scope="session")
def synth_dataset():
    spec = synthetic.default_spec(years=SYNTH_YEARS, seed=SYNTH_SEED)
    profiles, metas = synthetic.make_profiles(spec)
    return spec, profiles, metas


@pytest.fixture(scope="session")
def registry(synth_dataset):
    _, _, metas = synth_dataset
    return build_type_registry(
        (m.generation_type.label, m.generation_type.intermittent_dispatch)
        for m in metas.values()
    )


@pytest.fixture(scope="session")
def train_seconds():
    return {}


def _train_single(profiles, metas, registry, label, train_seconds):
    types = registry_for_labels(registry, [label])
    subset = [p for p in profiles if p.generation_type.label == label]
    samples = build_training_set(subset, metas, types)
    started = time.perf_counter()
    model = gan.train(samples, gan.GanConfig(), gan.MODE_SINGLE, types)
    train_seconds[label] = time.perf_counter() - started
    return model, subset


@pytest.fixture(scope="session")
def solar_model(synth_dataset, registry, train_seconds):
    _, profiles, metas = synth_dataset
    return _train_single(profiles, metas, registry, "solar", train_seconds)


@pytest.fixture(scope="session")
def wind_model(synth_dataset, registry, train_seconds):
    _, profiles, metas = synth_dataset
    return _train_single(profiles, metas, registry, "wind", train_seconds)


@pytest.fixture(scope="session")
def cogen_model(synth_dataset, registry, train_seconds):
    _, profiles, metas = synth_dataset
    return _train_single(profiles, metas, registry, "cogen", train_seconds)


@pytest.fixture(scope="session")
def multi_model(synth_dataset, registry, train_seconds):
    _, profiles, metas = synth_dataset
    samples = build_training_set(profiles, metas, registry)
    started = time.perf_counter()
    model = gan.train(samples, gan.GanConfig(), gan.MODE_MULTI, registry)
    train_seconds["multi"] = time.perf_counter() - started
    return model


@pytest.fixture(scope="session")
def multi_samples(synth_dataset, registry):
    _, profiles, metas = synth_dataset
    return build_training_set(profiles, metas, registry)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)
